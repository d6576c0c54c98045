//! Chaos on the Sobolev space W^{1,p}_*[a, b] via reduction to L^p.
//!
//! On a bounded interval [a, b] whose left endpoint is an equilibrium of the
//! drift (F(a) = 0), the solution semigroup of u_t = F u_x + h u acting on
//! W^{1,p}_*[a, b] = { f ∈ W^{1,p}[a, b] : f(a) = 0 } is conjugate to the
//! weighted composition semigroup with weight F' + h(a) on plain L^p(a, b);
//! the conjugacy integrates profiles from the left endpoint. Chaos transfers
//! verbatim, so the Sobolev question is decided by running the integral
//! criterion on the reduced problem.
//!
//! The conjugacy is only valid when the weight is pinned to the real
//! constant h(a) on the zero set of F, the difference quotient
//! (h − h(a)) / F stays essentially bounded on [a, b], and h itself is
//! Lipschitz. [`audit`] checks all of this numerically, [`reduce`] refuses
//! to build the L^p problem unless every check passes, and
//! [`classify_sobolev_chaos`] runs the full criterion on the reduction.

use serde::Serialize;

use crate::criterion::{classify_chaos, ChaosReport, CriterionConfig};
use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr};
use crate::model::{parse_field, AuditItem, AuditStatus, Interval, Problem};
use crate::zeroset::{find_zeros, ZeroSetConfig};

/// Tolerances and grid sizes for the reduction audit.
#[derive(Debug, Clone)]
pub struct SobolevConfig {
    /// |F| below this counts as a zero of the drift at an endpoint.
    pub tol_zero: f64,
    /// Tolerance for "h(a) is real" and for "h = h(a)" on the zero set.
    pub tol_pin: f64,
    /// Uniform audit grid resolution on [a, b].
    pub grid_n: usize,
    /// The Lipschitz audit fails when sup |h'| exceeds this.
    pub derivative_cap: f64,
    /// The boundedness audit fails when sup |(h − h(a)) / F| exceeds this.
    pub quotient_cap: f64,
    pub zeroset: ZeroSetConfig,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        SobolevConfig {
            tol_zero: 1e-8,
            tol_pin: 1e-8,
            grid_n: 1025,
            derivative_cap: 1e8,
            quotient_cap: 1e5,
            zeroset: ZeroSetConfig::default(),
        }
    }
}

/// The data ([a, b], F, h, p) of a Sobolev-space problem.
#[derive(Debug, Clone)]
pub struct SobolevProblem {
    pub interval: Interval,
    pub drift: Expr,
    /// Symbolic derivative of the drift; becomes part of the reduced weight.
    pub drift_deriv: Expr,
    pub weight_re: Expr,
    pub weight_im: Expr,
    pub p: f64,
}

impl SobolevProblem {
    /// Parses the expression fields and validates the structural shape
    /// (bounded interval, p ≥ 1). The analytic hypotheses are audited
    /// separately by [`audit`].
    pub fn new(
        interval: Interval,
        drift: &str,
        weight_re: &str,
        weight_im: &str,
        p: f64,
    ) -> Result<SobolevProblem> {
        let drift = parse_field("drift F", drift)?;
        let weight_re = parse_field("weight Re h", weight_re)?;
        let weight_im = parse_field("weight Im h", weight_im)?;
        SobolevProblem::from_parts(interval, drift, weight_re, weight_im, p)
    }

    pub fn from_parts(
        interval: Interval,
        drift: Expr,
        weight_re: Expr,
        weight_im: Expr,
        p: f64,
    ) -> Result<SobolevProblem> {
        if !interval.is_bounded() {
            return Err(Error::invalid(format!(
                "the Sobolev reduction needs a bounded interval, got {interval}"
            )));
        }
        if !p.is_finite() || p < 1.0 {
            return Err(Error::invalid(format!(
                "p must be a finite number >= 1, got {p}"
            )));
        }
        let drift_deriv = drift.differentiate();
        Ok(SobolevProblem {
            interval,
            drift,
            drift_deriv,
            weight_re,
            weight_im,
            p,
        })
    }
}

/// Numerical audit of the hypotheses behind the reduction.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevAudit {
    /// F(a) = 0: the left endpoint is an equilibrium of the drift.
    pub left_end_equilibrium: AuditItem,
    /// h(a) is real within tolerance.
    pub weight_real_at_left_end: AuditItem,
    /// h equals h(a) at every detected zero of F in [a, b].
    pub weight_pinned_on_zero_set: AuditItem,
    /// h ∈ W^{1,∞}: sup |h'| stays under the cap.
    pub weight_lipschitz: AuditItem,
    /// (h − h(a)) / F essentially bounded on [a, b].
    pub quotient_bounded: AuditItem,
    /// h(a) when it evaluated; the constant added to F' by the reduction.
    pub gamma: Option<f64>,
    pub notes: Vec<String>,
}

impl SobolevAudit {
    fn items(&self) -> [(&'static str, &AuditItem); 5] {
        [
            ("left-end equilibrium", &self.left_end_equilibrium),
            ("weight real at the left end", &self.weight_real_at_left_end),
            (
                "weight pinned on the zero set",
                &self.weight_pinned_on_zero_set,
            ),
            ("weight Lipschitz", &self.weight_lipschitz),
            ("difference quotient bounded", &self.quotient_bounded),
        ]
    }

    /// Details of every failed check, prefixed with its name.
    pub fn failures(&self) -> Vec<String> {
        self.items()
            .iter()
            .filter(|(_, item)| item.status == AuditStatus::Fail)
            .map(|(name, item)| format!("{name}: {}", item.detail))
            .collect()
    }

    pub fn ok(&self) -> bool {
        self.items()
            .iter()
            .all(|(_, item)| item.status != AuditStatus::Fail)
    }
}

fn uniform_grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(9);
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

/// Checks the reduction hypotheses on a grid: equilibrium at a, h(a) real,
/// h pinned to h(a) on the zero set, h Lipschitz, (h − h(a))/F bounded.
pub fn audit(sp: &SobolevProblem, cfg: &SobolevConfig) -> SobolevAudit {
    let (a, b) = (sp.interval.lo, sp.interval.hi);
    let mut notes = Vec::new();

    let left_end_equilibrium = match sp.drift.eval(a) {
        Ok(v) if v.abs() <= cfg.tol_zero => {
            AuditItem::pass(format!("|F({a})| = {:.3e}", v.abs()))
        }
        Ok(v) => AuditItem::fail(format!("F({a}) = {v:.6e}, not an equilibrium")),
        Err(e) => AuditItem::fail(format!("F failed to evaluate at the left endpoint: {e}")),
    };

    let (gamma, weight_real_at_left_end) =
        match (sp.weight_re.eval(a), sp.weight_im.eval(a)) {
            (Ok(re), Ok(im)) if im.abs() <= cfg.tol_pin * (1.0 + re.abs()) => (
                Some(re),
                AuditItem::pass(format!("h({a}) = {re} with |Im| = {:.3e}", im.abs())),
            ),
            (Ok(re), Ok(im)) => (
                Some(re),
                AuditItem::fail(format!("h({a}) = {re} + {im}i is not real")),
            ),
            (Err(e), _) | (_, Err(e)) => (
                None,
                AuditItem::fail(format!("h failed to evaluate at the left endpoint: {e}")),
            ),
        };

    // Points where the weight must coincide with h(a): the left endpoint,
    // every detected zero, the right endpoint when F vanishes there, and
    // samples inside flat stretches of the drift.
    let zs = find_zeros(&sp.drift, &sp.drift_deriv, sp.interval, &cfg.zeroset);
    let mut pins = vec![a];
    pins.extend(zs.zeros.iter().copied());
    if matches!(sp.drift.eval(b), Ok(v) if v.abs() <= cfg.tol_zero) {
        pins.push(b);
    }
    if zs.truncated() {
        notes.push(
            "zero enumeration hit a cap; pinning was audited on the enumerated zeros only"
                .to_string(),
        );
    }
    for &(lo, hi) in &zs.flat_intervals {
        for k in 1..=5 {
            pins.push(lo + (hi - lo) * k as f64 / 6.0);
        }
        notes.push(format!(
            "drift stays flat on ({lo:.6}, {hi:.6}); the zero set has positive measure there"
        ));
    }

    let weight_pinned_on_zero_set = match gamma {
        None => AuditItem::fail("h(a) is unavailable, nothing to pin against"),
        Some(g) => {
            let tol = cfg.tol_pin * (1.0 + g.abs());
            let mut worst: Option<(f64, f64)> = None;
            let mut broken = None;
            for &z in &pins {
                match (sp.weight_re.eval(z), sp.weight_im.eval(z)) {
                    (Ok(re), Ok(im)) => {
                        let dev = (re - g).hypot(im);
                        if worst.map_or(true, |(d, _)| dev > d) {
                            worst = Some((dev, z));
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        broken = Some((z, e));
                        break;
                    }
                }
            }
            match (broken, worst) {
                (Some((z, e)), _) => {
                    AuditItem::fail(format!("h failed to evaluate at the zero {z:.6}: {e}"))
                }
                (None, Some((dev, z))) if dev > tol => AuditItem::fail(format!(
                    "|h({z:.6}) - h(a)| = {dev:.3e} on the zero set (tolerance {tol:.1e})"
                )),
                (None, Some((dev, _))) => AuditItem::pass(format!(
                    "{} zero-set points, worst deviation {dev:.3e}",
                    pins.len()
                )),
                (None, None) => AuditItem::pass("no zero-set points to check"),
            }
        }
    };

    let weight_lipschitz = {
        let dre = sp.weight_re.differentiate();
        let dim = sp.weight_im.differentiate();
        let mut sup: f64 = 0.0;
        let mut failures = 0usize;
        let n = cfg.grid_n.max(9);
        for x in uniform_grid(a, b, n) {
            match (dre.eval(x), dim.eval(x)) {
                (Ok(r), Ok(m)) => sup = sup.max(r.hypot(m)),
                _ => failures += 1,
            }
        }
        // isolated kinks (|x - c| and friends) are Lipschitz-harmless even
        // though the symbolic derivative fails exactly at the corner
        let allowed = 2 + n / 50;
        if failures > allowed {
            AuditItem::fail(format!(
                "h' failed to evaluate at {failures} of {n} grid points"
            ))
        } else if sup > cfg.derivative_cap {
            AuditItem::fail(format!(
                "sup |h'| >= {sup:.3e} exceeds the cap {:.1e}",
                cfg.derivative_cap
            ))
        } else if failures > 0 {
            AuditItem::warn(format!(
                "sup |h'| = {sup:.3e}; h' undefined at {failures} isolated points"
            ))
        } else {
            AuditItem::pass(format!("sup |h'| = {sup:.3e} on {n} points"))
        }
    };

    let quotient_bounded = match gamma {
        None => AuditItem::fail("h(a) is unavailable, the quotient needs it"),
        Some(g) => {
            let tol = cfg.tol_pin * (1.0 + g.abs());
            let mut samples: Vec<f64> = uniform_grid(a, b, cfg.grid_n).collect();
            // geometric refinement toward the zero set: an unbounded
            // quotient reveals itself on the way into a zero of F
            for &z in &pins {
                let mut d = 0.25 * (b - a);
                let floor = 1e-12 * (1.0 + z.abs());
                while d > floor {
                    for y in [z - d, z + d] {
                        if y > a && y < b {
                            samples.push(y);
                        }
                    }
                    d *= 0.5;
                }
            }
            let mut sup: f64 = 0.0;
            let mut arg = a;
            let mut failures = 0usize;
            let mut used = 0usize;
            for &y in &samples {
                let fv = match sp.drift.eval(y) {
                    Ok(v) => v,
                    Err(_) => {
                        failures += 1;
                        continue;
                    }
                };
                if fv == 0.0 {
                    continue;
                }
                let (re, im) = match (sp.weight_re.eval(y), sp.weight_im.eval(y)) {
                    (Ok(r), Ok(m)) => (r, m),
                    _ => {
                        failures += 1;
                        continue;
                    }
                };
                // deviations inside the pinning tolerance are numerical
                // residue, not genuine mass in the numerator
                let mut num = (re - g).hypot(im);
                if num <= tol {
                    num = 0.0;
                }
                let q = num / fv.abs();
                used += 1;
                if q > sup {
                    sup = q;
                    arg = y;
                }
            }
            let allowed = 2 + samples.len() / 50;
            if failures > allowed {
                AuditItem::fail(format!(
                    "the quotient failed to evaluate at {failures} of {} samples",
                    samples.len()
                ))
            } else if sup > cfg.quotient_cap {
                AuditItem::fail(format!(
                    "sup |(h - h(a))/F| >= {sup:.3e} near x = {arg:.6} (cap {:.1e})",
                    cfg.quotient_cap
                ))
            } else {
                AuditItem::pass(format!("sup |(h - h(a))/F| = {sup:.3e} over {used} samples"))
            }
        }
    };

    SobolevAudit {
        left_end_equilibrium,
        weight_real_at_left_end,
        weight_pinned_on_zero_set,
        weight_lipschitz,
        quotient_bounded,
        gamma,
        notes,
    }
}

/// Builds the conjugate L^p problem: same interval and drift, weight
/// F' + h(a), Lebesgue density, same p. Refuses when any audit check fails.
pub fn reduce(sp: &SobolevProblem, cfg: &SobolevConfig) -> Result<Problem> {
    let aud = audit(sp, cfg);
    reduce_audited(sp, &aud)
}

fn reduce_audited(sp: &SobolevProblem, aud: &SobolevAudit) -> Result<Problem> {
    let failures = aud.failures();
    if !failures.is_empty() {
        return Err(Error::invalid(format!(
            "the Sobolev reduction hypotheses fail — {}",
            failures.join("; ")
        )));
    }
    let gamma = aud.gamma.expect("audit passed, so h(a) evaluated");
    let weight = if gamma == 0.0 {
        sp.drift_deriv.clone()
    } else {
        Expr::Bin(
            BinOp::Add,
            Box::new(sp.drift_deriv.clone()),
            Box::new(Expr::Num(gamma)),
        )
    };
    let mut prob = Problem::from_parts(
        sp.interval,
        sp.drift.clone(),
        weight,
        Expr::Num(0.0),
        Expr::Num(1.0),
        sp.p,
    )?;
    prob.notes.push(format!(
        "reduced from the Sobolev space W^{{1,{}}}_* on [{}, {}]: weight F' + h(a), h(a) = {gamma}",
        sp.p, sp.interval.lo, sp.interval.hi
    ));
    Ok(prob)
}

/// Verdict for the Sobolev-space semigroup, with the audit and the reduced
/// problem's full report attached.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevReport {
    pub audit: SobolevAudit,
    /// The space the verdict speaks about.
    pub space: String,
    /// The reduced weight F' + h(a), rendered.
    pub reduced_weight: String,
    pub chaos: ChaosReport,
}

/// Audits, reduces and classifies. The verdict of the reduced L^p problem
/// is the verdict for the Sobolev-space semigroup.
pub fn classify_sobolev_chaos(
    sp: &SobolevProblem,
    cfg: &SobolevConfig,
    criterion: &CriterionConfig,
) -> Result<SobolevReport> {
    let aud = audit(sp, cfg);
    let prob = reduce_audited(sp, &aud)?;
    let chaos = classify_chaos(&prob, criterion);
    Ok(SobolevReport {
        audit: aud,
        space: format!("W^{{1,{}}}_*[{}, {}]", sp.p, sp.interval.lo, sp.interval.hi),
        reduced_weight: prob.weight_re.to_string(),
        chaos,
    })
}
