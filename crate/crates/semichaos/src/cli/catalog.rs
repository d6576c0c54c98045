//! Built-in problem catalog.
//!
//! Each entry stores a parametrized document builder together with the
//! closed-form verdict law, so `examples` can print what the classifier is
//! expected to reproduce and sweeps can cross-check verdicts against the
//! analytic thresholds.

use std::collections::BTreeMap;

use crate::criterion::Verdict;
use crate::error::{Error, Result};

use super::document::{Endpoint, Overrides, ProblemDocument, Space, SCHEMA_VERSION};

/// Parameter values keyed by name; defaults filled from the entry.
pub type ParamMap = BTreeMap<&'static str, f64>;

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub name: &'static str,
    pub default: f64,
}

pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    /// Closed-form verdict law in terms of the parameters.
    pub law: &'static str,
    pub params: &'static [Param],
    build: fn(&ParamMap) -> ProblemDocument,
    expected: fn(&ParamMap) -> Option<Verdict>,
}

impl CatalogEntry {
    /// Defaults overridden by `key=value` pairs; unknown keys are errors.
    pub fn params_with(&self, overrides: &[(String, f64)]) -> Result<ParamMap> {
        let mut map: ParamMap = self.params.iter().map(|p| (p.name, p.default)).collect();
        for (key, value) in overrides {
            let known = self.params.iter().find(|p| p.name == key.as_str());
            match known {
                Some(p) => {
                    map.insert(p.name, *value);
                }
                None => {
                    let names: Vec<_> = self.params.iter().map(|p| p.name).collect();
                    return Err(Error::invalid(format!(
                        "problem `{}` has no parameter `{key}` (available: {})",
                        self.name,
                        names.join(", ")
                    )));
                }
            }
        }
        Ok(map)
    }

    pub fn document(&self, params: &ParamMap) -> ProblemDocument {
        (self.build)(params)
    }

    /// The analytic verdict; `None` marks a borderline parameter choice
    /// where only "not the wrong definite verdict" is promised.
    pub fn expected_verdict(&self, params: &ParamMap) -> Option<Verdict> {
        (self.expected)(params)
    }
}

fn doc(
    name: &str,
    space: Space,
    omega: [f64; 2],
    drift: &str,
    h_re: &str,
    rho: &str,
    p: f64,
) -> ProblemDocument {
    ProblemDocument {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        space,
        omega: [Endpoint(omega[0]), Endpoint(omega[1])],
        drift: drift.to_string(),
        h_re: h_re.to_string(),
        h_im: "0".to_string(),
        rho: rho.to_string(),
        p,
        overrides: Overrides::default(),
    }
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() < 1e-6
}

static ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "perturbed-translation-halfline",
        summary: "uniform drift with a constant weight c on (0, inf), Lebesgue density",
        law: "chaotic iff c > 0: the criterion integral is the exponential integral of -p*c*w",
        params: &[Param { name: "c", default: 1.0 }, Param { name: "p", default: 1.0 }],
        build: |m| {
            doc(
                "perturbed-translation-halfline",
                Space::Lp,
                [0.0, f64::INFINITY],
                "1",
                &format!("{:?}", m["c"]),
                "1",
                m["p"],
            )
        },
        expected: |m| {
            if near(m["c"], 0.0) {
                None
            } else if m["c"] > 0.0 {
                Some(Verdict::Chaotic)
            } else {
                Some(Verdict::NotChaotic)
            }
        },
    },
    CatalogEntry {
        name: "translation-line",
        summary: "plain translation on the whole line, Lebesgue density",
        law: "never chaotic: the density carries infinite mass",
        params: &[Param { name: "p", default: 1.0 }],
        build: |m| {
            doc(
                "translation-line",
                Space::Lp,
                [f64::NEG_INFINITY, f64::INFINITY],
                "1",
                "0",
                "1",
                m["p"],
            )
        },
        expected: |_| Some(Verdict::NotChaotic),
    },
    CatalogEntry {
        name: "translation-halfline",
        summary: "plain translation on (0, inf), Lebesgue density",
        law: "never chaotic: the density carries infinite mass",
        params: &[Param { name: "p", default: 1.0 }],
        build: |m| {
            doc(
                "translation-halfline",
                Space::Lp,
                [0.0, f64::INFINITY],
                "1",
                "0",
                "1",
                m["p"],
            )
        },
        expected: |_| Some(Verdict::NotChaotic),
    },
    CatalogEntry {
        name: "translation-line-gaussian",
        summary: "plain translation on the whole line, Gaussian density",
        law: "always chaotic: the density is integrable",
        params: &[Param { name: "p", default: 1.0 }],
        build: |m| {
            doc(
                "translation-line-gaussian",
                Space::Lp,
                [f64::NEG_INFINITY, f64::INFINITY],
                "1",
                "0",
                "exp(-x^2)",
                m["p"],
            )
        },
        expected: |_| Some(Verdict::Chaotic),
    },
    CatalogEntry {
        name: "decay-threshold",
        summary: "linear decay toward 0 on (0, 1) with a constant weight c",
        law: "chaotic iff c > -1/p: the integrand is (w/x)^(-p*c) near the equilibrium",
        params: &[Param { name: "c", default: 0.5 }, Param { name: "p", default: 1.0 }],
        build: |m| {
            doc(
                "decay-threshold",
                Space::Lp,
                [0.0, 1.0],
                "-x",
                &format!("{:?}", m["c"]),
                "1",
                m["p"],
            )
        },
        expected: |m| {
            let threshold = -1.0 / m["p"];
            if near(m["c"], threshold) {
                None
            } else if m["c"] > threshold {
                Some(Verdict::Chaotic)
            } else {
                Some(Verdict::NotChaotic)
            }
        },
    },
    CatalogEntry {
        name: "oscillating-accumulation",
        summary: "drift -x^3 sin(1/x) on (0, 1): zeros accumulate at the left endpoint",
        law: "chaotic for every p: zero weight, and the component masses summed toward 0 stay finite",
        params: &[Param { name: "p", default: 1.0 }],
        build: |m| {
            doc(
                "oscillating-accumulation",
                Space::Lp,
                [0.0, 1.0],
                "-x^3*sin(1/x)",
                "0",
                "1",
                m["p"],
            )
        },
        expected: |_| Some(Verdict::Chaotic),
    },
    CatalogEntry {
        name: "sobolev-decay",
        summary: "linear decay on [0, 1] with constant weight h0, Sobolev space vanishing at 0",
        law: "chaotic iff h0 > 1 - 1/p: the reduced weight is h0 - 1",
        params: &[Param { name: "h0", default: 0.7 }, Param { name: "p", default: 2.0 }],
        build: |m| {
            doc(
                "sobolev-decay",
                Space::SobolevStar,
                [0.0, 1.0],
                "-x",
                &format!("{:?}", m["h0"]),
                "1",
                m["p"],
            )
        },
        expected: |m| {
            let threshold = 1.0 - 1.0 / m["p"];
            if near(m["h0"], threshold) {
                None
            } else if m["h0"] > threshold {
                Some(Verdict::Chaotic)
            } else {
                Some(Verdict::NotChaotic)
            }
        },
    },
    CatalogEntry {
        name: "sobolev-logistic",
        summary: "logistic decay -x(1-x) on [0, 1] with constant weight h0, Sobolev space vanishing at 0",
        law: "never chaotic: the reduced integrand has a non-integrable power at an endpoint for every h0 and p",
        params: &[Param { name: "h0", default: 0.0 }, Param { name: "p", default: 2.0 }],
        build: |m| {
            doc(
                "sobolev-logistic",
                Space::SobolevStar,
                [0.0, 1.0],
                "-x*(1-x)",
                &format!("{:?}", m["h0"]),
                "1",
                m["p"],
            )
        },
        expected: |_| Some(Verdict::NotChaotic),
    },
];

pub fn entries() -> &'static [CatalogEntry] {
    ENTRIES
}

pub fn find(name: &str) -> Result<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<_> = ENTRIES.iter().map(|e| e.name).collect();
        Error::invalid(format!(
            "no built-in problem named `{name}` (available: {})",
            names.join(", ")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::document::ProblemKind;
    use crate::criterion::{classify_chaos, CriterionConfig};
    use crate::sobolev::{classify_sobolev_chaos, SobolevConfig};

    #[test]
    fn catalog_has_at_least_six_uniquely_named_entries() {
        assert!(entries().len() >= 6);
        let mut names: Vec<_> = entries().iter().map(|e| e.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), entries().len());
        assert!(find("decay-threshold").is_ok());
        assert!(find("no-such-problem").is_err());
    }

    #[test]
    fn every_builtin_document_instantiates() {
        for entry in entries() {
            let params = entry.params_with(&[]).unwrap();
            let doc = entry.document(&params);
            doc.instantiate()
                .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            // and survives a JSON round trip
            let text = serde_json::to_string(&doc).unwrap();
            super::super::document::parse_document(&text).unwrap();
        }
    }

    #[test]
    fn parameter_overrides_are_validated() {
        let entry = find("decay-threshold").unwrap();
        let params = entry
            .params_with(&[("c".to_string(), -1.5), ("p".to_string(), 1.0)])
            .unwrap();
        assert_eq!(params["c"], -1.5);
        assert_eq!(entry.expected_verdict(&params), Some(Verdict::NotChaotic));
        assert!(entry.params_with(&[("q".to_string(), 1.0)]).is_err());
        // borderline choices advertise no definite verdict
        let borderline = entry
            .params_with(&[("c".to_string(), -1.0), ("p".to_string(), 1.0)])
            .unwrap();
        assert_eq!(entry.expected_verdict(&borderline), None);
    }

    #[test]
    fn classifier_reproduces_every_default_verdict() {
        for entry in entries() {
            let params = entry.params_with(&[]).unwrap();
            let expected = entry
                .expected_verdict(&params)
                .expect("defaults are never borderline");
            let verdict = match entry.document(&params).instantiate().unwrap() {
                ProblemKind::Lp(prob) => classify_chaos(&prob, &CriterionConfig::default()).verdict,
                ProblemKind::SobolevStar(sp) => {
                    classify_sobolev_chaos(
                        &sp,
                        &SobolevConfig::default(),
                        &CriterionConfig::default(),
                    )
                    .unwrap()
                    .chaos
                    .verdict
                }
            };
            assert_eq!(verdict, expected, "{}", entry.name);
        }
    }
}
