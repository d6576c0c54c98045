//! The flow-free chaos test: a weighted composition semigroup on L^p_ρ is
//! Devaney chaotic exactly when the drift's zero set has measure zero and,
//! on every connected component C of {F ≠ 0},
//!
//! ```text
//! ∫_C exp(-p ∫_base^w Re h(y)/F(y) dy) ρ(w) dw  <  ∞,
//! ```
//!
//! for an arbitrary base point in C (changing it rescales the integrand by
//! a positive constant). `classify_chaos` audits the standing hypotheses,
//! enumerates the zero set, classifies every component integral and folds
//! the answers into a verdict: any divergent component refutes chaos, any
//! positive-measure piece of {F = 0} refutes it outright, and anything the
//! numerics cannot resolve (truncated zero families, inconclusive tails)
//! degrades the verdict to Inconclusive rather than guessing.
//!
//! When Re h vanishes identically the inner antiderivative drops out and
//! the test reduces to ρ-integrability of each component — independently of
//! p — which also lets a truncated zero family be handled soundly: every
//! unenumerated component's integral is dominated by the ρ-mass of the
//! region it lives in.

use crate::error::{Error, Result};
use crate::model::{
    check_admissibility, check_hypotheses_with, AdmissibilityFit, AuditStatus, HypothesisConfig,
    HypothesisReport, Interval, Problem,
};
use crate::quadrature::{
    classify_improper, default_split, integrate, BoundaryKind, ImproperConfig, IntegralClass,
};
use crate::zeroset::{self, Component, EndpointKind, ZeroSetConfig};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::cell::RefCell;

/// Serializes possibly-infinite endpoints as "inf"/"-inf" strings instead of
/// JSON null.
pub(crate) fn ser_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else if *v == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

#[derive(Debug, Clone)]
pub struct CriterionConfig {
    /// Relative tolerance for component integrals and tail classification.
    pub tol: f64,
    /// Cap on the number of components classified by improper quadrature
    /// (the Re h ≡ 0 reduction is exempt: ρ-integrals are cheap).
    pub max_components: usize,
    pub hypotheses: HypothesisConfig,
    pub zeroset: ZeroSetConfig,
    /// Also fit the exponential-envelope admissibility audit (caveat only,
    /// never gates the verdict).
    pub audit_admissibility: bool,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig {
            tol: 1e-8,
            max_components: 64,
            hypotheses: HypothesisConfig::default(),
            zeroset: ZeroSetConfig::default(),
            audit_admissibility: true,
        }
    }
}

impl CriterionConfig {
    fn improper(&self) -> ImproperConfig {
        ImproperConfig {
            tol: self.tol,
            ..ImproperConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Chaotic,
    NotChaotic,
    Inconclusive,
    HypothesisViolated,
}

/// The decisive piece of evidence behind a non-chaotic or undecided verdict.
#[derive(Debug, Clone, Serialize)]
pub enum Witness {
    /// A sampled interval on which the drift stays below the flat tolerance.
    PositiveMeasureZeroSet {
        #[serde(serialize_with = "ser_extended")]
        lo: f64,
        #[serde(serialize_with = "ser_extended")]
        hi: f64,
    },
    DivergentComponent {
        #[serde(serialize_with = "ser_extended")]
        lo: f64,
        #[serde(serialize_with = "ser_extended")]
        hi: f64,
        evidence: String,
    },
    UnresolvedComponent {
        #[serde(serialize_with = "ser_extended")]
        lo: f64,
        #[serde(serialize_with = "ser_extended")]
        hi: f64,
        evidence: String,
    },
    /// Zeros toward an endpoint were not enumerated and the weights do not
    /// allow domination, or the dominating mass itself diverges.
    UnenumeratedZeros {
        #[serde(serialize_with = "ser_extended")]
        lo: f64,
        #[serde(serialize_with = "ser_extended")]
        hi: f64,
        detail: String,
    },
    FailedHypotheses { failures: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentReport {
    #[serde(serialize_with = "ser_extended")]
    pub lo: f64,
    #[serde(serialize_with = "ser_extended")]
    pub hi: f64,
    /// Sign of F on the component.
    pub sign: i8,
    pub base_x: f64,
    /// Convergent / Divergent / Inconclusive.
    pub class: String,
    pub value: Option<f64>,
    pub error: Option<f64>,
    pub evidence: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChaosReport {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub hypotheses: HypothesisReport,
    /// One entry per analyzed component of {F ≠ 0}, ascending.
    pub components: Vec<ComponentReport>,
    pub zero_count: usize,
    pub flat_intervals: Vec<(f64, f64)>,
    /// Zero enumeration hit a cap/floor/horizon toward some endpoint.
    pub truncated: bool,
    /// Re h vanished on the audit grid, enabling the ρ-integral reduction.
    pub weight_free: bool,
    pub admissibility: Option<AdmissibilityFit>,
    pub caveats: Vec<String>,
}

/// Antiderivative U(w) = ∫_base^w Re h / F along a zero-free component,
/// evaluated by chaining cached anchor-to-anchor quadratures. Each new
/// evaluation integrates only the stretch from the nearest anchor; anchors
/// are retained when they extend the reach by a scale step or when the
/// stretch was expensive (near a pole of the ratio the walk toward the
/// endpoint then advances anchor to anchor instead of re-resolving the
/// singular approach from scratch).
struct Antiderivative<'a> {
    prob: &'a Problem,
    base: f64,
    tol: f64,
    cache: RefCell<Vec<(f64, f64)>>,
}

impl<'a> Antiderivative<'a> {
    fn new(prob: &'a Problem, base: f64, tol: f64) -> Self {
        Antiderivative {
            prob,
            base,
            tol,
            cache: RefCell::new(Vec::new()),
        }
    }

    fn ratio(&self, y: f64) -> Result<f64> {
        let num = self.prob.weight_re.eval(y)?;
        let den = self.prob.drift.eval(y)?;
        let v = num / den;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain {
                subexpr: "Re h / F".into(),
                x: y,
                reason: if den == 0.0 {
                    "the drift vanishes inside a component".into()
                } else {
                    format!("ratio evaluates to {v}")
                },
            })
        }
    }

    fn eval(&self, w: f64) -> Result<f64> {
        let mut best = (self.base, 0.0);
        let mut best_d = (w - self.base).abs();
        if best_d == 0.0 {
            return Ok(0.0);
        }
        {
            // any anchor works: the segment between two points of the
            // component stays inside it, so U chains from the nearest one
            let cache = self.cache.borrow();
            for &(x, u) in cache.iter() {
                let d = (w - x).abs();
                if d < best_d {
                    best = (x, u);
                    best_d = d;
                }
            }
        }
        let (xa, ua) = best;
        if best_d == 0.0 {
            return Ok(ua);
        }
        let (a, b, sgn) = if w > xa { (xa, w, 1.0) } else { (w, xa, -1.0) };
        let cost = std::cell::Cell::new(0usize);
        let q = integrate(
            |y| {
                cost.set(cost.get() + 1);
                self.ratio(y)
            },
            a,
            b,
            self.tol,
        )?;
        let u = ua + sgn * q.value;
        let extends = best_d > 0.25 * (w - self.base).abs();
        let costly = cost.get() > 60;
        if extends || costly {
            self.cache.borrow_mut().push((w, u));
        }
        Ok(u)
    }
}

fn boundary_kind(x: f64) -> BoundaryKind {
    if x.is_finite() {
        // finite component ends are drift zeros or domain boundary; either
        // way the integrand may blow up there
        BoundaryKind::Singular
    } else {
        BoundaryKind::Infinite
    }
}

/// True when the expression evaluates to exactly zero across the clipped
/// domain (uniform grid plus golden-ratio offsets against aliasing).
fn vanishes_on_grid(e: &crate::expr::Expr, omega: Interval) -> bool {
    if e.is_literal_zero() {
        return true;
    }
    let (lo, hi) = omega.clipped(1e-6, 1e6);
    let all_zero = |x: f64| matches!(e.eval(x), Ok(v) if v == 0.0);
    (0..=256).all(|i| all_zero(lo + (hi - lo) * i as f64 / 256.0))
        && (1..=32).all(|i| {
            let frac = (i as f64 * 0.618_033_988_749_895).fract();
            all_zero(lo + (hi - lo) * frac)
        })
}

/// Classifies ∫_C exp(-p ∫_base^w Re h/F) ρ(w) dw over one component.
///
/// `base_x` must lie strictly inside the component. With `weight_free`
/// (Re h ≡ 0) the integrand is just ρ.
pub fn component_integral(
    prob: &Problem,
    comp: &Component,
    base_x: f64,
    tol: f64,
) -> IntegralClass {
    let weight_free = vanishes_on_grid(&prob.weight_re, prob.omega);
    component_integral_inner(prob, comp, base_x, tol, weight_free)
}

fn component_integral_inner(
    prob: &Problem,
    comp: &Component,
    base_x: f64,
    tol: f64,
    weight_free: bool,
) -> IntegralClass {
    assert!(
        comp.lo < base_x && base_x < comp.hi,
        "base point must be interior to the component"
    );
    let icfg = ImproperConfig {
        tol,
        ..ImproperConfig::default()
    };
    if weight_free {
        // interior components have continuous ρ up to both (zero) endpoints
        if comp.lo_kind == EndpointKind::DriftZero
            && comp.hi_kind == EndpointKind::DriftZero
        {
            return match integrate(|w| prob.density.eval(w), comp.lo, comp.hi, tol) {
                Ok(q) => IntegralClass::Convergent {
                    value: q.value,
                    error: q.error,
                    evidence: "ρ-integral over an interior component".into(),
                },
                Err(e) => IntegralClass::Inconclusive {
                    evidence: format!("ρ-integral failed: {e}"),
                },
            };
        }
        return classify_improper(
            |w| prob.density.eval(w),
            comp.lo,
            comp.hi,
            boundary_kind(comp.lo),
            boundary_kind(comp.hi),
            Some(base_x),
            &icfg,
        );
    }

    let u = Antiderivative::new(prob, base_x, tol * 0.01);
    let p = prob.p;
    let g = |w: f64| -> Result<f64> {
        let uw = u.eval(w)?;
        let rho = prob.density.eval(w)?;
        // overflow surfaces as an infinite sample, which the tail classifier
        // treats as divergence evidence
        Ok((-p * uw).exp() * rho)
    };
    classify_improper(
        g,
        comp.lo,
        comp.hi,
        boundary_kind(comp.lo),
        boundary_kind(comp.hi),
        Some(base_x),
        &icfg,
    )
}

/// ∫_a^b Re h / F, for base-change identities and the flow-route
/// cross-check. Both points must lie in the same zero-free component.
pub fn weight_action(prob: &Problem, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let u = Antiderivative::new(prob, a, tol);
    u.eval(b)
}

fn mk_report(comp: &Component, base_x: f64, class: &IntegralClass) -> ComponentReport {
    let (value, error) = match class.value() {
        Some((v, e)) => (Some(v), Some(e)),
        None => (None, None),
    };
    ComponentReport {
        lo: comp.lo,
        hi: comp.hi,
        sign: comp.sign,
        base_x,
        class: class.tag().into(),
        value,
        error,
        evidence: class.evidence().into(),
    }
}

/// Decides Devaney chaos for the semigroup described by `prob`.
pub fn classify_chaos(prob: &Problem, cfg: &CriterionConfig) -> ChaosReport {
    let zcfg = ZeroSetConfig {
        clip_delta: cfg.hypotheses.clip_delta,
        clip_cap: cfg.hypotheses.clip_cap,
        ..cfg.zeroset.clone()
    };
    let zs = zeroset::find_zeros(&prob.drift, &prob.drift_deriv, prob.omega, &zcfg);
    let hypotheses = check_hypotheses_with(prob, &cfg.hypotheses, &zs);
    let weight_free = vanishes_on_grid(&prob.weight_re, prob.omega);

    let mut caveats: Vec<String> = Vec::new();
    for (name, item) in hypotheses.items() {
        if item.status == AuditStatus::Warn {
            caveats.push(format!("{name}: {}", item.detail));
        }
    }
    caveats.extend(zs.notes.iter().cloned());

    let mut report = ChaosReport {
        verdict: Verdict::Inconclusive,
        witness: None,
        hypotheses,
        components: Vec::new(),
        zero_count: zs.zeros.len(),
        flat_intervals: zs.flat_intervals.clone(),
        truncated: zs.truncated(),
        weight_free,
        admissibility: None,
        caveats,
    };

    if !report.hypotheses.passed() {
        report.verdict = Verdict::HypothesisViolated;
        report.witness = Some(Witness::FailedHypotheses {
            failures: report
                .hypotheses
                .failures()
                .iter()
                .map(|s| s.to_string())
                .collect(),
        });
        return report;
    }

    // a positive-measure zero set refutes chaos regardless of the weights
    if let Some(&(lo, hi)) = zs.flat_intervals.first() {
        report.verdict = Verdict::NotChaotic;
        report.witness = Some(Witness::PositiveMeasureZeroSet { lo, hi });
        report
            .caveats
            .push("flat intervals are sampled evidence: the drift stays below the flat \
                   tolerance there, which sampling cannot distinguish from a genuine \
                   positive-measure zero set".into());
        return report;
    }

    let comps = zeroset::components(&prob.drift, &zs, prob.omega);
    if !weight_free && comps.len() > cfg.max_components {
        report.verdict = Verdict::Inconclusive;
        report.witness = Some(Witness::UnresolvedComponent {
            lo: prob.omega.lo,
            hi: prob.omega.hi,
            evidence: format!(
                "{} components exceed the analysis cap of {} and the weight does not \
                 vanish, so their integrals cannot be dominated collectively",
                comps.len(),
                cfg.max_components
            ),
        });
        return report;
    }

    let tol = cfg.tol;
    let analyzed: Vec<(Component, f64, IntegralClass)> = comps
        .par_iter()
        .map(|c| {
            let base_x = default_split(c.lo, c.hi);
            let class = component_integral_inner(prob, c, base_x, tol, weight_free);
            (*c, base_x, class)
        })
        .collect();
    report.components = analyzed
        .iter()
        .map(|(c, b, class)| mk_report(c, *b, class))
        .collect();

    for (c, _, class) in &analyzed {
        if let IntegralClass::Divergent { evidence } = class {
            report.verdict = Verdict::NotChaotic;
            report.witness = Some(Witness::DivergentComponent {
                lo: c.lo,
                hi: c.hi,
                evidence: evidence.clone(),
            });
            return report;
        }
    }
    for (c, _, class) in &analyzed {
        if let IntegralClass::Inconclusive { evidence } = class {
            report.verdict = Verdict::Inconclusive;
            report.witness = Some(Witness::UnresolvedComponent {
                lo: c.lo,
                hi: c.hi,
                evidence: evidence.clone(),
            });
            return report;
        }
    }

    // regions whose zeros were not enumerated: with Re h ≡ 0 every component
    // inside is dominated by the region's ρ-mass; otherwise stay undecided
    for (lo, hi) in zs.unenumerated(prob.omega) {
        if !weight_free {
            report.verdict = Verdict::Inconclusive;
            report.witness = Some(Witness::UnenumeratedZeros {
                lo,
                hi,
                detail: "zeros toward this endpoint were not fully enumerated and the \
                         weight does not vanish; component integrals there are unknown"
                    .into(),
            });
            return report;
        }
        let class = classify_improper(
            |w| prob.density.eval(w),
            lo,
            hi,
            boundary_kind(lo),
            boundary_kind(hi),
            None,
            &cfg.improper(),
        );
        match class {
            IntegralClass::Convergent { value, .. } => {
                report.caveats.push(format!(
                    "zeros in ({lo:.6e}, {hi:.6e}) were not fully enumerated; every \
                     component there has ρ-integral at most {value:.6e} < ∞, which the \
                     criterion only needs finite"
                ));
            }
            other => {
                report.verdict = Verdict::Inconclusive;
                report.witness = Some(Witness::UnenumeratedZeros {
                    lo,
                    hi,
                    detail: format!(
                        "the dominating ρ-mass over the unenumerated region is {}: {}",
                        other.tag(),
                        other.evidence()
                    ),
                });
                return report;
            }
        }
    }

    report.verdict = Verdict::Chaotic;
    if weight_free {
        report
            .caveats
            .push("Re h vanishes on the audit grid: the criterion reduces to \
                   ρ-integrability of each component and is independent of p"
                .into());
    }
    report.caveats.push(
        "the verdict assumes the density is p-admissible (the semigroup is well defined); \
         admissibility is audited separately and never inferred"
            .into(),
    );
    if cfg.audit_admissibility {
        let fit = check_admissibility(prob);
        if !fit.admissible {
            report.caveats.push(format!(
                "the admissibility fit did not stabilize under region widening: {}",
                fit.detail
            ));
        }
        report.admissibility = Some(fit);
    }
    report
}

/// Zero set + components + verdict in one call with default knobs.
pub fn classify(prob: &Problem) -> ChaosReport {
    classify_chaos(prob, &CriterionConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interval, Problem};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn problem(omega: Interval, f: &str, h_re: &str, h_im: &str, rho: &str, p: f64) -> Problem {
        Problem::new(omega, f, h_re, h_im, rho, p).unwrap()
    }

    fn quiet_cfg() -> CriterionConfig {
        CriterionConfig {
            audit_admissibility: false,
            ..CriterionConfig::default()
        }
    }

    #[test]
    fn translation_halfline_with_integrable_density_is_chaotic() {
        let p = problem(
            Interval::new(0.0, f64::INFINITY).unwrap(),
            "1",
            "0",
            "0",
            "exp(-x)",
            1.0,
        );
        let rep = classify_chaos(&p, &quiet_cfg());
        assert_eq!(rep.verdict, Verdict::Chaotic, "witness {:?}", rep.witness);
        assert_eq!(rep.components.len(), 1);
        let c = &rep.components[0];
        assert_relative_eq!(c.value.unwrap(), 1.0, max_relative = 1e-7);
        assert!(rep.weight_free);
    }

    #[test]
    fn translation_on_the_line_needs_integrable_density() {
        let flat = problem(Interval::line(), "1", "0", "0", "1", 2.0);
        let rep = classify_chaos(&flat, &quiet_cfg());
        assert_eq!(rep.verdict, Verdict::NotChaotic);
        match rep.witness {
            Some(Witness::DivergentComponent { lo, hi, .. }) => {
                assert_eq!(lo, f64::NEG_INFINITY);
                assert_eq!(hi, f64::INFINITY);
            }
            other => panic!("expected a divergent component, got {other:?}"),
        }

        let gauss = problem(
            Interval::line(),
            "1",
            "0",
            "0",
            "exp(-x^2/2)/sqrt(2*pi)",
            2.0,
        );
        let rep = classify_chaos(&gauss, &quiet_cfg());
        assert_eq!(rep.verdict, Verdict::Chaotic, "witness {:?}", rep.witness);
        assert_relative_eq!(rep.components[0].value.unwrap(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn decay_threshold_tracks_the_closed_form() {
        // F = -x on (0, 1), h ≡ c, ρ = 1: the component integrand from
        // base 1/2 is (2w)^{pc}, integrable iff pc > -1
        let omega = Interval::new(0.0, 1.0).unwrap();
        let cases = [
            (-0.5, 1.0, true, Some(std::f64::consts::SQRT_2)),
            (0.3, 2.0, true, Some(0.9473228540689987)),
            (-1.5, 1.0, false, None),
            (-0.6, 2.0, false, None),
        ];
        for (c, pexp, chaotic, oracle) in cases {
            let p = problem(omega, "-x", &format!("{c}"), "0", "1", pexp);
            let rep = classify_chaos(&p, &quiet_cfg());
            let want = if chaotic {
                Verdict::Chaotic
            } else {
                Verdict::NotChaotic
            };
            assert_eq!(rep.verdict, want, "c = {c}, p = {pexp}: {:?}", rep.witness);
            if let Some(v) = oracle {
                assert_relative_eq!(
                    rep.components[0].value.unwrap(),
                    v,
                    max_relative = 1e-6
                );
            }
        }
    }

    #[test]
    fn borderline_exponent_is_never_reported_chaotic() {
        // pc = -1 makes the integrand exactly 1/(2w): divergent, and the
        // classifier must not extrapolate it into convergence
        let p = problem(
            Interval::new(0.0, 1.0).unwrap(),
            "-x",
            "-1",
            "0",
            "1",
            1.0,
        );
        let rep = classify_chaos(&p, &quiet_cfg());
        assert_eq!(rep.verdict, Verdict::NotChaotic, "{:?}", rep.witness);
    }

    #[test]
    fn gamma_integral_oracle_for_nonzero_weight() {
        // F = -x on (0, ∞), h ≡ 0.7, ρ = e^{-x}, p = 1, base 1:
        // integrand w^{0.7} e^{-w}, so the value is Γ(1.7)
        let p = problem(
            Interval::new(0.0, f64::INFINITY).unwrap(),
            "-x",
            "0.7",
            "0",
            "exp(-x)",
            1.0,
        );
        let rep = classify_chaos(&p, &quiet_cfg());
        assert_eq!(rep.verdict, Verdict::Chaotic, "witness {:?}", rep.witness);
        assert!(!rep.weight_free);
        assert_relative_eq!(
            rep.components[0].value.unwrap(),
            0.9086387328532907,
            max_relative = 1e-6
        );
    }

    #[test]
    fn interior_zero_splits_the_analysis() {
        // F = -x on (-1, 1): components (-1, 0) and (0, 1); ρ = 1 keeps
        // both integrals finite with h ≡ 0
        let p = problem(Interval::new(-1.0, 1.0).unwrap(), "-x", "0", "0", "1", 1.0);
        let rep = classify_chaos(&p, &quiet_cfg());
        assert_eq!(rep.verdict, Verdict::Chaotic, "witness {:?}", rep.witness);
        assert_eq!(rep.components.len(), 2);
        assert_eq!(rep.zero_count, 1);
        let total: f64 = rep.components.iter().map(|c| c.value.unwrap()).sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn flat_drift_interval_refutes_chaos() {
        // vanishes identically on (-1, 0], decays toward 0 on (0, 1)
        let p = problem(
            Interval::new(-1.0, 1.0).unwrap(),
            "-abs(x)-x",
            "0",
            "0",
            "1",
            1.0,
        );
        let rep = classify_chaos(&p, &quiet_cfg());
        assert_eq!(rep.verdict, Verdict::NotChaotic);
        assert!(matches!(
            rep.witness,
            Some(Witness::PositiveMeasureZeroSet { .. })
        ));
    }

    #[test]
    fn imaginary_weight_on_a_zero_violates_the_hypotheses() {
        let p = problem(
            Interval::new(-1.0, 1.0).unwrap(),
            "-x",
            "0",
            "1",
            "1",
            1.0,
        );
        let rep = classify_chaos(&p, &quiet_cfg());
        assert_eq!(rep.verdict, Verdict::HypothesisViolated);
        match rep.witness {
            Some(Witness::FailedHypotheses { ref failures }) => {
                assert!(failures.iter().any(|f| f == "weight_const_on_zero_set"));
            }
            ref other => panic!("expected failed hypotheses, got {other:?}"),
        }
    }

    #[test]
    fn accumulating_zero_family_is_dominated_when_weight_free() {
        let p = problem(
            Interval::new(0.0, 1.0).unwrap(),
            "-x^3*sin(1/x)",
            "0",
            "0",
            "1",
            1.0,
        );
        let rep = classify_chaos(&p, &quiet_cfg());
        assert!(rep.truncated);
        assert_eq!(rep.verdict, Verdict::Chaotic, "witness {:?}", rep.witness);
        assert!(rep
            .caveats
            .iter()
            .any(|c| c.contains("not fully enumerated")));
    }

    #[test]
    fn accumulating_zero_family_with_weight_stays_inconclusive() {
        let p = problem(
            Interval::new(0.0, 1.0).unwrap(),
            "-x^3*sin(1/x)",
            "0.1",
            "0",
            "1",
            1.0,
        );
        let rep = classify_chaos(&p, &quiet_cfg());
        assert_ne!(rep.verdict, Verdict::Chaotic);
        assert_ne!(rep.verdict, Verdict::NotChaotic);
    }

    #[test]
    fn weight_free_verdict_and_values_are_p_independent() {
        let omega = Interval::new(0.0, 1.0).unwrap();
        let a = classify_chaos(&problem(omega, "-x*(1-x)", "0", "0", "1", 1.0), &quiet_cfg());
        let b = classify_chaos(&problem(omega, "-x*(1-x)", "0", "0", "1", 7.0), &quiet_cfg());
        assert_eq!(a.verdict, Verdict::Chaotic);
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(
            a.components[0].value.unwrap(),
            b.components[0].value.unwrap()
        );
    }

    #[test]
    fn admissibility_audit_is_attached_but_not_gating() {
        // translated Gaussian density: chaotic by the integral test even
        // though the envelope fit refuses to stabilize
        let p = problem(
            Interval::line(),
            "1",
            "0",
            "0",
            "exp(-x^2/2)/sqrt(2*pi)",
            2.0,
        );
        let rep = classify_chaos(&p, &CriterionConfig::default());
        assert_eq!(rep.verdict, Verdict::Chaotic);
        let fit = rep.admissibility.expect("fit requested");
        assert!(!fit.admissible);
        assert!(rep.caveats.iter().any(|c| c.contains("admissib")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn base_point_change_rescales_by_the_weight_action(b2 in 0.3f64..3.0) {
            // I(base2) = exp(p · U_base1(base2)) · I(base1)
            let p = problem(
                Interval::new(0.0, f64::INFINITY).unwrap(),
                "-x", "0.7", "0", "exp(-x)", 1.0,
            );
            let comp = Component {
                lo: 0.0,
                hi: f64::INFINITY,
                lo_kind: EndpointKind::DomainBoundary,
                hi_kind: EndpointKind::Infinite,
                sign: -1,
            };
            let i1 = component_integral(&p, &comp, 1.0, 1e-9).value().unwrap().0;
            let i2 = component_integral(&p, &comp, b2, 1e-9).value().unwrap().0;
            let action = weight_action(&p, 1.0, b2, 1e-11).unwrap();
            let predicted = (p.p * action).exp() * i1;
            prop_assert!(
                (i2 - predicted).abs() <= 1e-6 * predicted.abs(),
                "i1 = {i1}, i2 = {i2}, predicted = {predicted}"
            );
        }
    }
}
