//! On-disk problem documents.
//!
//! A document is a single JSON object naming the space ("lp" or
//! "sobolev-star"), the interval, the expressions F, h_re, h_im, rho and the
//! exponent p, plus optional numeric overrides for tolerances and grids.
//! Unknown keys are rejected so typos surface as load errors instead of
//! silently falling back to defaults.

use std::fmt;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Interval, Problem};
use crate::sobolev::SobolevProblem;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    #[serde(rename = "lp")]
    Lp,
    #[serde(rename = "sobolev-star")]
    SobolevStar,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Lp => write!(f, "lp"),
            Space::SobolevStar => write!(f, "sobolev-star"),
        }
    }
}

/// Interval endpoint: a finite number, or the strings "inf" / "-inf"
/// (JSON has no literal for infinities).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint(pub f64);

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            ser.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            ser.serialize_str("-inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Endpoint {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        let v = match Raw::deserialize(de)? {
            Raw::Num(v) if v.is_finite() => v,
            Raw::Num(v) => {
                return Err(D::Error::custom(format!(
                    "endpoint {v} is not finite; use \"inf\" or \"-inf\""
                )))
            }
            Raw::Word(w) => match w.as_str() {
                "inf" | "+inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                other => {
                    return Err(D::Error::custom(format!(
                        "endpoint must be a number, \"inf\" or \"-inf\", got \"{other}\""
                    )))
                }
            },
        };
        Ok(Endpoint(v))
    }
}

/// Optional numeric knobs; absent fields keep the library defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    /// Relative tolerance for classification integrals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Cap on the number of classified components.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_components: Option<usize>,
    /// Audit grid resolution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    /// Zero-enumeration cap per endpoint direction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_cap: Option<usize>,
    /// Relative tolerance of the flow solver used by verification and
    /// simulation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow_tol: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }
}

fn default_h_im() -> String {
    "0".to_string()
}

fn default_rho() -> String {
    "1".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub schema_version: u32,
    pub name: String,
    pub space: Space,
    /// The interval as [lo, hi].
    pub omega: [Endpoint; 2],
    #[serde(rename = "F")]
    pub drift: String,
    pub h_re: String,
    #[serde(default = "default_h_im")]
    pub h_im: String,
    #[serde(default = "default_rho")]
    pub rho: String,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
}

/// A loaded problem, dispatched on the document's space.
#[derive(Debug, Clone)]
pub enum ProblemKind {
    Lp(Problem),
    SobolevStar(SobolevProblem),
}

impl ProblemDocument {
    /// Parses the expression fields and builds the typed problem.
    pub fn instantiate(&self) -> Result<ProblemKind> {
        let interval = Interval::new(self.omega[0].0, self.omega[1].0)?;
        match self.space {
            Space::Lp => Ok(ProblemKind::Lp(Problem::new(
                interval, &self.drift, &self.h_re, &self.h_im, &self.rho, self.p,
            )?)),
            Space::SobolevStar => {
                if self.rho.trim() != "1" {
                    return Err(Error::invalid(
                        "sobolev-star problems use the Lebesgue density; omit rho or set it to \"1\"",
                    ));
                }
                Ok(ProblemKind::SobolevStar(SobolevProblem::new(
                    interval, &self.drift, &self.h_re, &self.h_im, self.p,
                )?))
            }
        }
    }
}

/// Parses a document from JSON text and validates the schema version.
pub fn parse_document(text: &str) -> Result<ProblemDocument> {
    let doc: ProblemDocument =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("document: {e}")))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    Ok(doc)
}

pub fn load_document(path: &Path) -> Result<ProblemDocument> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_document(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(space: &str, omega: &str) -> String {
        format!(
            r#"{{
                "schema_version": 1,
                "name": "t",
                "space": "{space}",
                "omega": {omega},
                "F": "1",
                "h_re": "0",
                "p": 1
            }}"#
        )
    }

    #[test]
    fn endpoints_accept_numbers_and_infinity_words() {
        let doc = parse_document(&minimal("lp", r#"[0, "inf"]"#)).unwrap();
        assert_eq!(doc.omega[0], Endpoint(0.0));
        assert_eq!(doc.omega[1], Endpoint(f64::INFINITY));
        let doc = parse_document(&minimal("lp", r#"["-inf", "inf"]"#)).unwrap();
        assert_eq!(doc.omega[0].0, f64::NEG_INFINITY);
        assert!(parse_document(&minimal("lp", r#"[0, "wide"]"#)).is_err());
        // defaults fill the omitted fields
        assert_eq!(doc.h_im, "0");
        assert_eq!(doc.rho, "1");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = minimal("lp", "[0, 1]").replace("\"F\"", "\"F_typo\"");
        assert!(parse_document(&text).is_err());
        let text = minimal("lp", "[0, 1]").replace(
            "\"h_re\": \"0\",",
            "\"h_re\": \"0\", \"extra\": 3,",
        );
        assert!(parse_document(&text).is_err());
    }

    #[test]
    fn schema_version_is_enforced() {
        let text = minimal("lp", "[0, 1]").replace("\"schema_version\": 1", "\"schema_version\": 2");
        let err = parse_document(&text).unwrap_err();
        assert!(err.to_string().contains("schema_version"), "{err}");
    }

    #[test]
    fn documents_round_trip_through_json() {
        let doc = parse_document(&minimal("lp", r#"["-inf", "inf"]"#)).unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        let back = parse_document(&text).unwrap();
        assert_eq!(back.omega, doc.omega);
        assert_eq!(back.drift, doc.drift);
        assert!(text.contains("\"-inf\""), "{text}");
    }

    #[test]
    fn sobolev_documents_refuse_a_nontrivial_density() {
        let text = minimal("sobolev-star", "[0, 1]").replace(
            "\"h_re\": \"0\",",
            "\"h_re\": \"0\", \"rho\": \"exp(x)\",",
        );
        let doc = parse_document(&text).unwrap();
        let err = doc.instantiate().unwrap_err();
        assert!(err.to_string().contains("Lebesgue"), "{err}");
    }

    #[test]
    fn instantiation_dispatches_on_the_space() {
        let doc = parse_document(&minimal("lp", "[0, 1]")).unwrap();
        assert!(matches!(doc.instantiate().unwrap(), ProblemKind::Lp(_)));
        let text = minimal("sobolev-star", "[0, 1]").replace("\"F\": \"1\"", "\"F\": \"-x\"");
        let doc = parse_document(&text).unwrap();
        assert!(matches!(
            doc.instantiate().unwrap(),
            ProblemKind::SobolevStar(_)
        ));
        // sobolev-star needs a bounded interval
        let text = minimal("sobolev-star", r#"[0, "inf"]"#).replace("\"F\": \"1\"", "\"F\": \"-x\"");
        assert!(parse_document(&text).unwrap().instantiate().is_err());
    }
}
