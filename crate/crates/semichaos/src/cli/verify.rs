//! Flow-route consistency suite.
//!
//! Cross-validates the two independent routes to the chaos integral on
//! sampled seeds: trajectory-based time integrals against component
//! quadratures (tag agreement and value residuals), the time-series against
//! the time-integral classification, the two transport composition
//! identities, and the bounded-ratio property of the transported density on
//! compact subintervals. A problem passes when no check reports an
//! inconsistency.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::criterion::ser_extended;
use crate::error::Result;
use crate::flowcheck::{
    comparability_check, flow_integral, series_sum, verify_cocycle, verify_integral_identity,
    FlowCheckConfig, DEFAULT_SERIES_SPACINGS, DEFAULT_SERIES_TERMS,
};
use crate::model::Problem;
use crate::quadrature::IntegralClass;
use crate::zeroset::{components, find_zeros, Component, ZeroSetConfig};

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seeds_per_component: usize,
    /// Lattice spacings t0 for the series check.
    pub spacings: Vec<f64>,
    pub series_terms: usize,
    /// Gate on the integral-identity relative residual.
    pub identity_tol: f64,
    /// Gate on the composition-identity relative residuals.
    pub cocycle_tol: f64,
    pub max_components: usize,
    pub seed: u64,
    pub flow: FlowCheckConfig,
    pub zeroset: ZeroSetConfig,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seeds_per_component: 8,
            spacings: DEFAULT_SERIES_SPACINGS.to_vec(),
            series_terms: DEFAULT_SERIES_TERMS,
            identity_tol: 1e-5,
            cocycle_tol: 1e-6,
            max_components: 8,
            seed: 42,
            flow: FlowCheckConfig::default(),
            zeroset: ZeroSetConfig::default(),
        }
    }
}

/// Tag plus value of one integral classification, JSON-friendly.
#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    pub evidence: String,
}

impl From<&IntegralClass> for ClassSummary {
    fn from(c: &IntegralClass) -> Self {
        let (value, error) = match c.value() {
            Some((v, e)) => (Some(v), Some(e)),
            None => (None, None),
        };
        ClassSummary {
            tag: c.tag().to_string(),
            value,
            error,
            evidence: c.evidence().to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesLine {
    pub t0: f64,
    pub tag: String,
    pub sum: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CocycleLine {
    pub s: f64,
    pub t: f64,
    pub negative_family: f64,
    pub positive_family: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub x: f64,
    pub integral: ClassSummary,
    pub series: Vec<SeriesLine>,
    pub identity_agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<CocycleLine>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentCheck {
    #[serde(serialize_with = "ser_extended")]
    pub lo: f64,
    #[serde(serialize_with = "ser_extended")]
    pub hi: f64,
    /// Worst endpoint ratios of the transported density on the sampled
    /// compact window, when the check ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparability_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparability_lower: Option<f64>,
    pub seeds: Vec<SeedReport>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub problem: String,
    pub components_checked: usize,
    pub components_total: usize,
    pub checks_run: usize,
    pub components: Vec<ComponentCheck>,
    pub notes: Vec<String>,
    /// Every inconsistency found, flattened; empty means all-pass.
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A compact sampling window strictly inside the component.
fn sample_window(comp: &Component) -> (f64, f64) {
    match (comp.lo.is_finite(), comp.hi.is_finite()) {
        (true, true) => {
            let w = comp.hi - comp.lo;
            (comp.lo + 0.25 * w, comp.hi - 0.25 * w)
        }
        _ => {
            let r = comp.representative();
            let s = 0.75 * (1.0 + 0.25 * r.abs());
            let lo = if comp.lo.is_finite() {
                (r - s).max(comp.lo + 0.1 * (r - comp.lo))
            } else {
                r - s
            };
            let hi = if comp.hi.is_finite() {
                (r + s).min(comp.hi - 0.1 * (comp.hi - r))
            } else {
                r + s
            };
            (lo, hi)
        }
    }
}

fn decided(tag: &str) -> bool {
    tag != "Inconclusive"
}

/// Runs the full consistency suite on one L^p problem.
pub fn run(prob: &Problem, name: &str, opts: &VerifyOptions) -> Result<VerifyReport> {
    let zs = find_zeros(&prob.drift, &prob.drift_deriv, prob.omega, &opts.zeroset);
    let comps = components(&prob.drift, &zs, prob.omega);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut notes = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut checks_run = 0usize;

    let total = comps.len();
    // Widest components first: where zeros accumulate, the slivers next to
    // the accumulation point are numerically all-equilibrium and the flow
    // route cannot move a seed there.
    let mut selected: Vec<&Component> = comps.iter().collect();
    selected.sort_by(|a, b| {
        let width = |c: &Component| c.hi - c.lo; // infinite for unbounded
        width(b).partial_cmp(&width(a)).expect("component widths compare")
    });
    selected.truncate(opts.max_components);
    selected.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("component bounds compare"));
    if total > opts.max_components {
        notes.push(format!(
            "{total} components; checking the {} widest",
            opts.max_components
        ));
    }

    let mut component_checks = Vec::new();
    for comp in selected {
        let (wlo, whi) = sample_window(comp);
        let mut comp_failures = Vec::new();

        // bounded-ratio property of the transported density on the window
        let mut times = Vec::new();
        for &t0 in &opts.spacings {
            if t0 <= 1.0 {
                times.push(t0);
                times.push(-t0);
            }
        }
        checks_run += 1;
        let (upper, lower) = match comparability_check(prob, wlo, whi, &times, &opts.flow) {
            Ok(rep) => {
                if !rep.bounded {
                    comp_failures.push(format!(
                        "transported-density ratios unbounded on [{wlo:.6}, {whi:.6}]"
                    ));
                }
                (Some(rep.upper), Some(rep.lower))
            }
            Err(e) => {
                comp_failures.push(format!("comparability check could not run: {e}"));
                (None, None)
            }
        };

        let mut seed_reports = Vec::new();
        for _ in 0..opts.seeds_per_component {
            let x = rng.random_range(wlo..=whi);
            let mut fail: Vec<String> = Vec::new();

            checks_run += 1;
            let integral = match flow_integral(prob, x, &opts.flow) {
                Ok(c) => c,
                Err(e) => {
                    fail.push(format!("time integral could not run at x = {x:.6}: {e}"));
                    seed_reports.push(SeedReport {
                        x,
                        integral: ClassSummary {
                            tag: "Error".into(),
                            value: None,
                            error: None,
                            evidence: e.to_string(),
                        },
                        series: Vec::new(),
                        identity_agree: false,
                        identity_residual: None,
                        cocycle: None,
                        failures: fail.clone(),
                    });
                    failures.extend(fail);
                    continue;
                }
            };

            // the series over every spacing must agree with the integral
            // whenever both sides reach a definite tag
            let mut series = Vec::new();
            for &t0 in &opts.spacings {
                checks_run += 1;
                match series_sum(prob, x, t0, opts.series_terms, &opts.flow) {
                    Ok(rep) => {
                        let tag = rep.class.tag();
                        if decided(tag) && decided(integral.tag()) && tag != integral.tag() {
                            fail.push(format!(
                                "series (t0 = {t0}) says {tag} but the time integral says {} at x = {x:.6}",
                                integral.tag()
                            ));
                        }
                        series.push(SeriesLine {
                            t0,
                            tag: tag.to_string(),
                            sum: rep.sum,
                        });
                    }
                    Err(e) => fail.push(format!("series (t0 = {t0}) could not run: {e}")),
                }
            }

            checks_run += 1;
            let (identity_agree, identity_residual) =
                match verify_integral_identity(prob, x, &opts.flow) {
                    Ok(rep) => {
                        if !rep.agree {
                            fail.push(format!(
                                "integral identity tags disagree at x = {x:.6}: flow {} vs component {}",
                                rep.flow_side.tag(),
                                rep.component_side.tag()
                            ));
                        }
                        if let Some(r) = rep.residual {
                            if r > opts.identity_tol {
                                fail.push(format!(
                                    "integral identity residual {r:.3e} exceeds {:.1e} at x = {x:.6}",
                                    opts.identity_tol
                                ));
                            }
                        }
                        (rep.agree, rep.residual)
                    }
                    Err(e) => {
                        fail.push(format!("integral identity could not run: {e}"));
                        (false, None)
                    }
                };

            checks_run += 1;
            let s = rng.random_range(0.1..1.2);
            let t = rng.random_range(0.1..1.2);
            let cocycle = match verify_cocycle(prob, x, s, t, &opts.flow) {
                Ok(res) => {
                    let worst = res.negative_family.max(res.positive_family);
                    if worst > opts.cocycle_tol {
                        fail.push(format!(
                            "composition residual {worst:.3e} exceeds {:.1e} at x = {x:.6}, s = {s:.3}, t = {t:.3}",
                            opts.cocycle_tol
                        ));
                    }
                    Some(CocycleLine {
                        s,
                        t,
                        negative_family: res.negative_family,
                        positive_family: res.positive_family,
                    })
                }
                Err(e) => {
                    fail.push(format!("composition identity could not run: {e}"));
                    None
                }
            };

            failures.extend(fail.iter().cloned());
            seed_reports.push(SeedReport {
                x,
                integral: ClassSummary::from(&integral),
                series,
                identity_agree,
                identity_residual,
                cocycle,
                failures: fail,
            });
        }

        failures.extend(comp_failures.iter().cloned());
        component_checks.push(ComponentCheck {
            lo: comp.lo,
            hi: comp.hi,
            comparability_upper: upper,
            comparability_lower: lower,
            seeds: seed_reports,
            failures: comp_failures,
        });
    }

    Ok(VerifyReport {
        problem: name.to_string(),
        components_checked: component_checks.len(),
        components_total: total,
        checks_run,
        components: component_checks,
        notes,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interval;

    fn quick_opts() -> VerifyOptions {
        VerifyOptions {
            seeds_per_component: 3,
            spacings: vec![0.5, 1.0],
            series_terms: 80,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn closed_form_decay_passes_every_check() {
        let prob = Problem::new(Interval::new(0.0, 1.0).unwrap(), "-x", "0.5", "0", "1", 1.0)
            .unwrap();
        let report = run(&prob, "decay", &quick_opts()).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
        assert_eq!(report.components_checked, 1);
        assert!(report.checks_run > 10);
        let comp = &report.components[0];
        assert!(comp.comparability_upper.unwrap().is_finite());
        for seed in &comp.seeds {
            assert_eq!(seed.integral.tag, "Convergent");
            assert!(seed.identity_agree);
        }
    }

    #[test]
    fn divergent_translation_agrees_on_tags() {
        let prob = Problem::new(Interval::line(), "1", "0", "0", "1", 1.0).unwrap();
        let report = run(&prob, "translation", &quick_opts()).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
        for seed in &report.components[0].seeds {
            assert_eq!(seed.integral.tag, "Divergent");
        }
    }

    #[test]
    fn reports_serialize_to_json() {
        let prob = Problem::new(Interval::new(0.0, 1.0).unwrap(), "-x", "0.5", "0", "1", 1.0)
            .unwrap();
        let report = run(&prob, "decay", &quick_opts()).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("\"problem\":\"decay\""));
    }
}
