//! Problem definition, validity checks, and hypothesis audits.
//!
//! A problem is the data (Ω, F, h, ρ, p): an open interval, a C¹ drift F,
//! a complex weight h = Re h + i·Im h applied multiplicatively along
//! trajectories, a density ρ that is positive almost everywhere, and the
//! exponent p ≥ 1 of the underlying weighted L^p space. The chaos
//! classification is conditional on hypotheses that are audited numerically
//! here rather than assumed:
//!
//! * Ω is forward invariant under the drift flow,
//! * F′ and Re h are bounded on Ω,
//! * h takes a single real constant value γ on the zero set of F,
//! * Im h / F is integrable near at least one endpoint of Ω.
//!
//! Audits sample a clipped grid (finite endpoints approached to 1e-6, then
//! refined by three factor-1000 shrinks; infinite directions capped at 1e6,
//! then extended by factor-100 pushes) and fail on growth past a factor of
//! ten between refinement levels, so polynomial blow-up at an endpoint is
//! caught while logarithmic growth may pass — audits certify what sampling
//! can see. Forward invariance combines an outward-flux ladder at finite
//! endpoints with trajectory escape tests from random seeds.
//!
//! Admissibility — an exponential envelope ‖T_t‖ ≤ M e^{ωt} fitted from
//! transported-density ratios — is audited separately and does **not** gate
//! classification: the decision criterion applies to admissible pairs, and
//! a failed envelope fit is reported as a caveat.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature::{classify_improper, BoundaryKind, ImproperConfig, IntegralClass};
use crate::semiflow::{self, Direction, FlowConfig, FlowStatus};
use crate::zeroset::{self, ZeroSet, ZeroSetConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;

/// Open interval with optionally infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::invalid("interval endpoints must not be NaN"));
        }
        if !(lo < hi) {
            return Err(Error::invalid(format!(
                "interval ({lo}, {hi}) is empty"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub const fn line() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && self.lo < x && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Closed working range for sampling: finite endpoints are approached to
    /// `delta` (shrunk further for narrow intervals), infinite directions are
    /// capped at `cap`.
    pub fn clipped(&self, delta: f64, cap: f64) -> (f64, f64) {
        let lo0 = if self.lo.is_finite() { self.lo } else { -cap };
        let hi0 = if self.hi.is_finite() { self.hi } else { cap };
        let width = (hi0 - lo0).max(f64::MIN_POSITIVE);
        let d = delta.min(1e-3 * width);
        let lo = if self.lo.is_finite() { self.lo + d } else { lo0 };
        let hi = if self.hi.is_finite() { self.hi - d } else { hi0 };
        (lo, hi)
    }

    /// Midpoint for bounded intervals, unit offset from the finite end for
    /// half-lines, origin for the full line.
    pub fn default_split(&self) -> f64 {
        crate::quadrature::default_split(self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// The data (Ω, F, h, ρ, p) after parsing and load-time validation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub omega: Interval,
    pub drift: Expr,
    /// Symbolic derivative of the drift.
    pub drift_deriv: Expr,
    pub weight_re: Expr,
    pub weight_im: Expr,
    pub density: Expr,
    pub p: f64,
    /// Load-time observations that are not errors (underflow regions, a.e.
    /// positivity zeros, …).
    pub notes: Vec<String>,
}

pub(crate) fn parse_field(name: &str, src: &str) -> Result<Expr> {
    src.parse::<Expr>()
        .map_err(|e| Error::invalid(format!("{name}: {e}")))
}

impl Problem {
    /// Parses and validates the five expression fields.
    pub fn new(
        omega: Interval,
        drift: &str,
        weight_re: &str,
        weight_im: &str,
        density: &str,
        p: f64,
    ) -> Result<Problem> {
        let drift = parse_field("drift F", drift)?;
        let weight_re = parse_field("weight Re h", weight_re)?;
        let weight_im = parse_field("weight Im h", weight_im)?;
        let density = parse_field("density rho", density)?;
        Problem::from_parts(omega, drift, weight_re, weight_im, density, p)
    }

    /// Validates already-built expressions (used by the Sobolev reduction,
    /// which assembles the reduced weight symbolically).
    pub fn from_parts(
        omega: Interval,
        drift: Expr,
        weight_re: Expr,
        weight_im: Expr,
        density: Expr,
        p: f64,
    ) -> Result<Problem> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::invalid(format!(
                "p must be a finite number >= 1, got {p}"
            )));
        }
        let drift_deriv = drift.differentiate();
        let mut prob = Problem {
            omega,
            drift,
            drift_deriv,
            weight_re,
            weight_im,
            density,
            p,
            notes: Vec::new(),
        };
        prob.validate_on_grid()?;
        Ok(prob)
    }

    /// Load-time audit: every field must evaluate finitely on a coarse
    /// clipped grid, and the density must be nonnegative (zeros are allowed
    /// on null sets; sign flips are not).
    fn validate_on_grid(&mut self) -> Result<()> {
        let (lo, hi) = self.omega.clipped(1e-6, 1e6);
        let n = 1024;
        let h = (hi - lo) / (n - 1) as f64;
        let mut density_zero_at: Option<f64> = None;
        for i in 0..n {
            let x = lo + h * i as f64;
            for (name, e) in [
                ("drift F", &self.drift),
                ("weight Re h", &self.weight_re),
                ("weight Im h", &self.weight_im),
            ] {
                let v = e
                    .eval(x)
                    .map_err(|e| Error::invalid(format!("{name} is not evaluable on the domain: {e}")))?;
                if !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "{name} takes the non-finite value {v} at x = {x:.6e}"
                    )));
                }
            }
            let rho = self.density.eval(x).map_err(|e| {
                Error::invalid(format!("density rho is not evaluable on the domain: {e}"))
            })?;
            if !rho.is_finite() || rho < 0.0 {
                return Err(Error::invalid(format!(
                    "density rho must be nonnegative and finite, got {rho} at x = {x:.6e}"
                )));
            }
            if rho == 0.0 && density_zero_at.is_none() {
                density_zero_at = Some(x);
            }
        }
        if let Some(x) = density_zero_at {
            self.notes.push(format!(
                "density evaluates to zero at some audited points (first at x = {x:.6e}); \
                 it is treated as positive almost everywhere, with underflow at working precision"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditItem {
    pub status: AuditStatus,
    pub detail: String,
}

impl AuditItem {
    pub(crate) fn pass(detail: impl Into<String>) -> Self {
        AuditItem {
            status: AuditStatus::Pass,
            detail: detail.into(),
        }
    }
    pub(crate) fn warn(detail: impl Into<String>) -> Self {
        AuditItem {
            status: AuditStatus::Warn,
            detail: detail.into(),
        }
    }
    pub(crate) fn fail(detail: impl Into<String>) -> Self {
        AuditItem {
            status: AuditStatus::Fail,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub forward_invariant: AuditItem,
    pub drift_deriv_bounded: AuditItem,
    pub weight_re_bounded: AuditItem,
    /// Condition (a): h equals a single real constant on the zero set of F.
    pub weight_const_on_zero_set: AuditItem,
    /// Condition (b): Im h / F is integrable near at least one endpoint.
    pub imag_weight_integrable: AuditItem,
    /// The constant real weight value on the zero set, when one exists.
    pub gamma: Option<f64>,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn items(&self) -> [(&'static str, &AuditItem); 5] {
        [
            ("forward_invariant", &self.forward_invariant),
            ("drift_deriv_bounded", &self.drift_deriv_bounded),
            ("weight_re_bounded", &self.weight_re_bounded),
            ("weight_const_on_zero_set", &self.weight_const_on_zero_set),
            ("imag_weight_integrable", &self.imag_weight_integrable),
        ]
    }

    /// No hard failures (warnings pass the gate, with caveats).
    pub fn passed(&self) -> bool {
        self.items()
            .iter()
            .all(|(_, item)| item.status != AuditStatus::Fail)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.items()
            .iter()
            .filter(|(_, item)| item.status == AuditStatus::Fail)
            .map(|(name, _)| *name)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisConfig {
    /// Tolerance for "h is the real constant γ" on the zero set.
    pub tol_a: f64,
    /// Interior grid resolution for boundedness audits.
    pub grid_n: usize,
    /// Endpoint refinement levels beyond the base clip.
    pub refine_levels: u32,
    /// Level-to-level sup growth that counts as unbounded.
    pub growth_limit: f64,
    pub escape_seeds: usize,
    pub escape_horizon: f64,
    pub clip_delta: f64,
    pub clip_cap: f64,
    pub seed: u64,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        HypothesisConfig {
            tol_a: 1e-8,
            grid_n: 1024,
            refine_levels: 3,
            growth_limit: 10.0,
            escape_seeds: 32,
            escape_horizon: 50.0,
            clip_delta: 1e-6,
            clip_cap: 1e6,
            seed: 0x5eed,
        }
    }
}

/// Sup of |e| over the clipped interior grid plus endpoint refinement
/// ladders; fails on non-finite values or growth past the limit.
fn audit_sup(
    label: &str,
    e: &Expr,
    omega: Interval,
    cfg: &HypothesisConfig,
) -> (AuditStatus, f64, String) {
    let (lo, hi) = omega.clipped(cfg.clip_delta, cfg.clip_cap);
    let mut sup = 0.0f64;
    let probe = |x: f64, sup: &mut f64| -> Option<String> {
        match e.eval(x) {
            Ok(v) if v.is_finite() => {
                *sup = sup.max(v.abs());
                None
            }
            Ok(v) => Some(format!(
                "{label} takes the non-finite value {v} at x = {x:.6e}"
            )),
            Err(err) => Some(format!("{label} is undefined at x = {x:.6e}: {err}")),
        }
    };

    let n = cfg.grid_n.max(64);
    let h = (hi - lo) / (n - 1) as f64;
    for i in 0..n {
        if let Some(msg) = probe(lo + h * i as f64, &mut sup) {
            return (AuditStatus::Fail, sup, msg);
        }
    }

    let band = |d0: f64, d1: f64, to_x: &dyn Fn(f64) -> f64, sup: &mut f64| -> std::result::Result<f64, String> {
        let m = 64;
        let mut band_sup = 0.0f64;
        for j in 0..m {
            let frac = j as f64 / (m - 1) as f64;
            let d = (d0.ln() + (d1.ln() - d0.ln()) * frac).exp();
            let x = to_x(d);
            if !omega.contains(x) {
                continue;
            }
            match e.eval(x) {
                Ok(v) if v.is_finite() => band_sup = band_sup.max(v.abs()),
                Ok(v) => {
                    return Err(format!(
                        "{label} takes the non-finite value {v} at x = {x:.6e}"
                    ))
                }
                Err(err) => return Err(format!("{label} is undefined at x = {x:.6e}: {err}")),
            }
        }
        *sup = sup.max(band_sup);
        Ok(band_sup)
    };

    let mut worst_final_ratio = 0.0f64;
    for side_hi in [false, true] {
        let endpoint = if side_hi { omega.hi } else { omega.lo };
        let mut prev: Option<f64> = None;
        for level in 0..=cfg.refine_levels {
            let res = if endpoint.is_finite() {
                let width = hi - lo;
                let (d1, d0) = if level == 0 {
                    (0.25 * width, cfg.clip_delta.min(0.25 * width * 0.5))
                } else {
                    (
                        cfg.clip_delta * 1000f64.powi(-(level as i32 - 1)),
                        cfg.clip_delta * 1000f64.powi(-(level as i32)),
                    )
                };
                let sgn = if side_hi { -1.0 } else { 1.0 };
                band(d0, d1, &|d| endpoint + sgn * d, &mut sup)
            } else {
                let other = if side_hi { omega.lo } else { omega.hi };
                let base = if other.is_finite() {
                    other.abs().max(1.0)
                } else {
                    1.0
                };
                let (r0, r1) = if level == 0 {
                    (base, cfg.clip_cap)
                } else {
                    (
                        cfg.clip_cap * 100f64.powi(level as i32 - 1),
                        cfg.clip_cap * 100f64.powi(level as i32),
                    )
                };
                let sgn = if side_hi { 1.0 } else { -1.0 };
                band(r0, r1, &|r| sgn * r, &mut sup)
            };
            let band_sup = match res {
                Ok(s) => s,
                Err(msg) => return (AuditStatus::Fail, sup, msg),
            };
            if let Some(prev_sup) = prev {
                let floor = 1e-12 * (1.0 + sup);
                let ratio = band_sup / prev_sup.max(floor);
                if ratio > cfg.growth_limit {
                    return (
                        AuditStatus::Fail,
                        sup,
                        format!(
                            "{label} grows by a factor of {ratio:.1} between refinement \
                             levels approaching {endpoint} (sup {prev_sup:.4e} -> {band_sup:.4e})"
                        ),
                    );
                }
                if level == cfg.refine_levels {
                    worst_final_ratio = worst_final_ratio.max(ratio);
                }
            }
            prev = Some(band_sup);
        }
    }

    if worst_final_ratio > 2.0 {
        (
            AuditStatus::Warn,
            sup,
            format!(
                "{label} is still growing (factor {worst_final_ratio:.2} at the last \
                 refinement level); sup over the audited region is {sup:.4e}"
            ),
        )
    } else {
        (
            AuditStatus::Pass,
            sup,
            format!(
                "sup of {label} over the audited region is {sup:.4e}, stable under \
                 endpoint refinement"
            ),
        )
    }
}

fn sample_seed(rng: &mut ChaCha8Rng, omega: Interval, cfg: &HypothesisConfig) -> f64 {
    let (lo, hi) = omega.clipped(cfg.clip_delta, cfg.clip_cap);
    let u: f64 = rng.random();
    if omega.is_bounded() {
        return lo + u * (hi - lo);
    }
    // log-uniform distance from the finite anchor (or the origin on the line)
    let span = (cfg.clip_cap.ln() - (1e-6f64).ln()) * u + (1e-6f64).ln();
    let d = span.exp();
    match (omega.lo.is_finite(), omega.hi.is_finite()) {
        (true, false) => (omega.lo + d).min(hi),
        (false, true) => (omega.hi - d).max(lo),
        _ => {
            if rng.random::<bool>() {
                d.min(hi)
            } else {
                (-d).max(lo)
            }
        }
    }
}

fn audit_invariance(prob: &Problem, cfg: &HypothesisConfig) -> AuditItem {
    let (clo, chi) = prob.omega.clipped(cfg.clip_delta, cfg.clip_cap);
    let width = chi - clo;
    let mut warns: Vec<String> = Vec::new();

    // outward-flux ladder: outward-pointing drift at a finite endpoint is
    // compatible with invariance only if |F| vanishes at least linearly there
    for side_hi in [false, true] {
        let e = if side_hi { prob.omega.hi } else { prob.omega.lo };
        if !e.is_finite() {
            continue;
        }
        let side = if side_hi { "upper" } else { "lower" };
        let inward = if side_hi { -1.0 } else { 1.0 };
        let d0 = 1e-12 * (1.0 + e.abs());
        let d1 = (1e-3 * width).max(d0 * 10.0);
        let m = 24;
        let mut outward: Vec<(f64, f64)> = Vec::new();
        for j in 0..m {
            let frac = j as f64 / (m - 1) as f64;
            let d = (d0.ln() + (d1.ln() - d0.ln()) * frac).exp();
            let x = e + inward * d;
            if !prob.omega.contains(x) {
                continue;
            }
            match prob.drift.eval(x) {
                Ok(v) if v.is_finite() => {
                    if v * inward < 0.0 {
                        outward.push((d, v.abs() / d));
                    }
                }
                _ => warns.push(format!(
                    "the drift could not be audited near the {side} endpoint (x = {x:.6e})"
                )),
            }
        }
        if outward.len() >= 8 {
            let q_near = outward.iter().take(8).fold(0.0f64, |s, &(_, q)| s.max(q));
            let q_far = outward
                .iter()
                .rev()
                .take(8)
                .fold(0.0f64, |s, &(_, q)| s.max(q));
            if q_near > 100.0 * q_far.max(1e-300) {
                return AuditItem::fail(format!(
                    "the drift points out of the domain at the {side} endpoint and \
                     |F|/distance grows from {q_far:.3e} to {q_near:.3e} approaching it; \
                     trajectories reach the boundary in finite time"
                ));
            }
        }
    }

    // trajectory escape test
    let fcfg = FlowConfig {
        rtol: 1e-8,
        atol: 1e-11,
        ..FlowConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.escape_seeds {
        let x0 = sample_seed(&mut rng, prob.omega, cfg);
        if !prob.omega.contains(x0) {
            continue;
        }
        match semiflow::flow(prob, x0, cfg.escape_horizon, &fcfg) {
            Ok(s) => {
                if let FlowStatus::ExitedAt { t } = s.status {
                    return AuditItem::fail(format!(
                        "the trajectory from x0 = {x0:.6e} leaves the domain at \
                         t = {t:.4} (reaching x = {:.4e})",
                        s.value
                    ));
                }
            }
            Err(Error::Stiffness { t, x }) => warns.push(format!(
                "integration from x0 = {x0:.6e} stalled at t = {t:.3} (x = {x:.3e}); \
                 invariance not certified along that trajectory"
            )),
            Err(err) => warns.push(format!(
                "the trajectory from x0 = {x0:.6e} could not be integrated: {err}"
            )),
        }
    }

    if warns.is_empty() {
        AuditItem::pass(format!(
            "no escaping trajectory among {} seeds over horizon t = {}, and boundary \
             flux is consistent with invariance",
            cfg.escape_seeds, cfg.escape_horizon
        ))
    } else {
        AuditItem::warn(warns.join("; "))
    }
}

fn audit_condition_a(
    prob: &Problem,
    cfg: &HypothesisConfig,
    zs: &ZeroSet,
) -> (AuditItem, Option<f64>) {
    let mut pts: Vec<f64> = zs.zeros.clone();
    for &(l, r) in &zs.flat_intervals {
        let (l, r) = (l.max(prob.omega.lo), r.min(prob.omega.hi));
        for k in 0..16 {
            let x = l + (r - l) * (k as f64 + 0.5) / 16.0;
            if prob.omega.contains(x) {
                pts.push(x);
            }
        }
    }
    if pts.is_empty() {
        return (
            AuditItem::pass("the drift has no zeros in the domain; the condition is vacuous"),
            None,
        );
    }

    let mut res: Vec<f64> = Vec::with_capacity(pts.len());
    let mut im_worst = (0.0f64, 0.0f64); // (|Im h|, location)
    for &z in &pts {
        let (re, im) = match (prob.weight_re.eval(z), prob.weight_im.eval(z)) {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => (a, b),
            _ => {
                return (
                    AuditItem::fail(format!(
                        "the weight is undefined or non-finite at the drift zero x = {z:.6e}"
                    )),
                    None,
                )
            }
        };
        if im.abs() > im_worst.0 {
            im_worst = (im.abs(), z);
        }
        res.push(re);
    }
    let mut sorted = res.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let gamma = sorted[sorted.len() / 2];
    let tol = cfg.tol_a * (1.0 + gamma.abs());
    if im_worst.0 > tol {
        return (
            AuditItem::fail(format!(
                "the weight is not real on the zero set: |Im h| = {:.3e} at the drift \
                 zero x = {:.6e}",
                im_worst.0, im_worst.1
            )),
            None,
        );
    }
    let (lo_v, hi_v) = (sorted[0], sorted[sorted.len() - 1]);
    if hi_v - lo_v > 2.0 * tol {
        return (
            AuditItem::fail(format!(
                "the weight is not constant on the zero set: Re h ranges over \
                 [{lo_v:.6e}, {hi_v:.6e}] across {} audited points",
                pts.len()
            )),
            None,
        );
    }
    let mut msg = format!(
        "h = {gamma:.6} (real, within {tol:.1e}) on {} audited zero-set points",
        pts.len()
    );
    if zs.truncated() {
        msg.push_str("; zeros beyond the enumeration cap were not audited");
    }
    (AuditItem::pass(msg), Some(gamma))
}

fn audit_condition_b(prob: &Problem, zs: &ZeroSet) -> AuditItem {
    if prob.weight_im.is_literal_zero() {
        return AuditItem::pass("the imaginary weight part is identically zero");
    }
    // cheap sup probe: a numerically zero Im h is also vacuous
    let (lo, hi) = prob.omega.clipped(1e-6, 1e6);
    let mut sup = 0.0f64;
    for i in 0..256 {
        let x = lo + (hi - lo) * i as f64 / 255.0;
        if let Ok(v) = prob.weight_im.eval(x) {
            sup = sup.max(v.abs());
        }
    }
    if sup == 0.0 {
        return AuditItem::pass("the imaginary weight part vanishes on the audited grid");
    }

    let integrand = |x: f64| -> Result<f64> {
        let num = prob.weight_im.eval(x)?;
        let den = prob.drift.eval(x)?;
        Ok((num / den).abs())
    };
    let icfg = ImproperConfig::default();
    let first_block = zs
        .zeros
        .first()
        .copied()
        .into_iter()
        .chain(zs.flat_intervals.first().map(|&(l, _)| l))
        .fold(f64::INFINITY, f64::min);
    let last_block = zs
        .zeros
        .last()
        .copied()
        .into_iter()
        .chain(zs.flat_intervals.last().map(|&(_, r)| r))
        .fold(f64::NEG_INFINITY, f64::max);

    let split = prob.omega.default_split();
    let mut cut_lo = if prob.omega.lo.is_finite() {
        prob.omega.lo + (1.0f64).min(0.25 * (hi - lo))
    } else {
        split
    };
    if first_block.is_finite() {
        cut_lo = cut_lo.min(if prob.omega.lo.is_finite() {
            prob.omega.lo + 0.9 * (first_block - prob.omega.lo)
        } else {
            first_block - 1.0
        });
    }
    let mut cut_hi = if prob.omega.hi.is_finite() {
        prob.omega.hi - (1.0f64).min(0.25 * (hi - lo))
    } else {
        split
    };
    if last_block.is_finite() {
        cut_hi = cut_hi.max(if prob.omega.hi.is_finite() {
            prob.omega.hi - 0.9 * (prob.omega.hi - last_block)
        } else {
            last_block + 1.0
        });
    }

    let kind = |x: f64| {
        if x.is_finite() {
            BoundaryKind::Singular
        } else {
            BoundaryKind::Infinite
        }
    };
    let side_lo = if cut_lo > prob.omega.lo {
        classify_improper(
            integrand,
            prob.omega.lo,
            cut_lo,
            kind(prob.omega.lo),
            BoundaryKind::Regular,
            None,
            &icfg,
        )
    } else {
        IntegralClass::Inconclusive {
            evidence: "no window clear of drift zeros near the lower endpoint".into(),
        }
    };
    if let IntegralClass::Convergent { value, .. } = &side_lo {
        return AuditItem::pass(format!(
            "Im h / F is integrable near the lower endpoint (integral of its modulus \
             over a boundary window is {value:.4e})"
        ));
    }
    let side_hi = if cut_hi < prob.omega.hi {
        classify_improper(
            integrand,
            cut_hi,
            prob.omega.hi,
            BoundaryKind::Regular,
            kind(prob.omega.hi),
            None,
            &icfg,
        )
    } else {
        IntegralClass::Inconclusive {
            evidence: "no window clear of drift zeros near the upper endpoint".into(),
        }
    };
    match (&side_lo, &side_hi) {
        (_, IntegralClass::Convergent { value, .. }) => AuditItem::pass(format!(
            "Im h / F is integrable near the upper endpoint (integral of its modulus \
             over a boundary window is {value:.4e})"
        )),
        (IntegralClass::Divergent { .. }, IntegralClass::Divergent { .. }) => {
            AuditItem::fail(format!(
                "Im h / F is not integrable near either endpoint (lower: {}; upper: {})",
                side_lo.evidence(),
                side_hi.evidence()
            ))
        }
        _ => AuditItem::warn(format!(
            "integrability of Im h / F could not be certified near either endpoint \
             (lower: {}; upper: {})",
            side_lo.evidence(),
            side_hi.evidence()
        )),
    }
}

pub fn check_hypotheses(prob: &Problem, cfg: &HypothesisConfig) -> HypothesisReport {
    let zcfg = ZeroSetConfig {
        clip_delta: cfg.clip_delta,
        clip_cap: cfg.clip_cap,
        ..ZeroSetConfig::default()
    };
    let zs = zeroset::find_zeros(&prob.drift, &prob.drift_deriv, prob.omega, &zcfg);
    check_hypotheses_with(prob, cfg, &zs)
}

/// Audits the hypotheses against a zero set the caller already enumerated
/// (saving a second scan when classification follows).
pub fn check_hypotheses_with(
    prob: &Problem,
    cfg: &HypothesisConfig,
    zs: &ZeroSet,
) -> HypothesisReport {
    let mut notes = prob.notes.clone();
    notes.extend(zs.notes.iter().cloned());

    let forward_invariant = audit_invariance(prob, cfg);
    let (s, _, d) = audit_sup("the drift derivative F'", &prob.drift_deriv, prob.omega, cfg);
    let drift_deriv_bounded = AuditItem { status: s, detail: d };
    let (s, _, d) = audit_sup("the real weight part Re h", &prob.weight_re, prob.omega, cfg);
    let weight_re_bounded = AuditItem { status: s, detail: d };
    let (weight_const_on_zero_set, gamma) = audit_condition_a(prob, cfg, zs);
    let imag_weight_integrable = audit_condition_b(prob, zs);

    HypothesisReport {
        forward_invariant,
        drift_deriv_bounded,
        weight_re_bounded,
        weight_const_on_zero_set,
        imag_weight_integrable,
        gamma,
        notes,
    }
}

/// Exponential-envelope fit ‖T_t‖ ≤ M e^{ωt} from transported-density
/// ratios along sampled trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityFit {
    /// The fit is stable under widening the sampled region.
    pub admissible: bool,
    /// M of the envelope (from the widest stable level).
    pub bound: f64,
    /// ω of the envelope.
    pub rate: f64,
    pub samples: usize,
    pub skipped: usize,
    pub detail: String,
}

pub fn check_admissibility(prob: &Problem) -> AdmissibilityFit {
    const T_GRID: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
    let fcfg = FlowConfig {
        rtol: 1e-8,
        atol: 1e-11,
        ..FlowConfig::default()
    };
    // successively wider sampling regions: the envelope must not depend on
    // how far out we look
    let levels: [(f64, f64); 4] = [(1e-6, 8.0), (1e-8, 32.0), (1e-10, 128.0), (1e-12, 512.0)];
    let p = prob.p;
    let nx = 9;
    let mut fits: Vec<(f64, f64)> = Vec::new();
    let mut used_last = 0usize;
    let mut skipped_last = 0usize;
    let mut total = 0usize;

    for &(delta, cap) in &levels {
        let (lo, hi) = prob.omega.clipped(delta, cap);
        if !(lo < hi) {
            continue;
        }
        let mut g = [f64::NEG_INFINITY; T_GRID.len()];
        let mut used = 0usize;
        let mut skipped = 0usize;
        for i in 0..nx {
            let x = lo + (hi - lo) * i as f64 / (nx - 1) as f64;
            let ln_rho_x = match prob.density.eval(x) {
                Ok(v) if v > 0.0 && v.is_finite() => v.ln(),
                _ => {
                    skipped += T_GRID.len();
                    continue;
                }
            };
            let curve = match semiflow::flow_curve(prob, x, &T_GRID, Direction::Forward, &fcfg) {
                Ok(c) => c,
                Err(_) => {
                    skipped += T_GRID.len();
                    continue;
                }
            };
            for (j, s) in curve.iter().enumerate() {
                if s.status != FlowStatus::InDomain {
                    skipped += 1;
                    continue;
                }
                let ln_rho_y = match prob.density.eval(s.value) {
                    Ok(v) if v > 0.0 && v.is_finite() => v.ln(),
                    _ => {
                        skipped += 1;
                        continue;
                    }
                };
                let val = (p * s.log_weight_re - s.drift_deriv_integral + ln_rho_x - ln_rho_y) / p;
                if val.is_finite() {
                    g[j] = g[j].max(val);
                    used += 1;
                } else {
                    skipped += 1;
                }
            }
        }
        total += used + skipped;
        if used * 2 < nx * T_GRID.len() {
            continue;
        }
        // steepest chord of the sampled upper hull from (0, 0), then the
        // smallest offset that still dominates every sample
        let mut rate = 0.0f64;
        let mut prev = (0.0f64, 0.0f64);
        for (j, &t) in T_GRID.iter().enumerate() {
            if g[j] > f64::NEG_INFINITY {
                rate = rate.max((g[j] - prev.1) / (t - prev.0));
                prev = (t, g[j]);
            }
        }
        let mut bound = 1.0f64;
        for (j, &t) in T_GRID.iter().enumerate() {
            if g[j] > f64::NEG_INFINITY {
                bound = bound.max((g[j] - rate * t).exp());
            }
        }
        fits.push((bound, rate));
        used_last = used;
        skipped_last = skipped;
    }

    if fits.is_empty() {
        return AdmissibilityFit {
            admissible: false,
            bound: f64::NAN,
            rate: f64::NAN,
            samples: 0,
            skipped: total,
            detail: "no usable trajectory samples; the envelope could not be fitted".into(),
        };
    }
    let (bound, rate) = fits[fits.len() - 1];
    let stable = fits.len() >= 2 && {
        let (_, w_prev) = fits[fits.len() - 2];
        rate <= 2.0 * w_prev.max(0.05) + 0.1
    };
    let few_skipped = skipped_last * 4 <= used_last + skipped_last;
    let admissible = stable && few_skipped && bound.is_finite() && rate.is_finite();
    let detail = if admissible {
        format!(
            "envelope (M, omega) = ({bound:.6}, {rate:.6}) fitted over horizons up to \
             t = 4, stable under widening the sampled region"
        )
    } else if !stable && fits.len() >= 2 {
        format!(
            "the growth-rate estimate does not stabilize as the sampled region widens \
             (omega = {:.4} -> {:.4}); no exponential envelope found",
            fits[fits.len() - 2].1,
            rate
        )
    } else {
        format!(
            "the envelope fit is unreliable ({} of {} samples unusable at the widest level)",
            skipped_last,
            used_last + skipped_last
        )
    };
    AdmissibilityFit {
        admissible,
        bound,
        rate,
        samples: used_last,
        skipped: skipped_last,
        detail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_validation_and_clipping() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(iv.contains(0.5) && !iv.contains(0.0) && !iv.contains(1.0));
        let (lo, hi) = iv.clipped(1e-6, 1e6);
        assert!(lo > 0.0 && hi < 1.0);
        let (lo, hi) = Interval::line().clipped(1e-6, 1e6);
        assert_eq!((lo, hi), (-1e6, 1e6));
        assert_eq!(Interval::new(0.0, f64::INFINITY).unwrap().default_split(), 1.0);
        assert_eq!(format!("{}", Interval::line()), "(-inf, inf)");
    }

    #[test]
    fn load_rejects_bad_problems() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        // p below 1
        assert!(Problem::new(iv, "-x", "0", "0", "1", 0.5).is_err());
        // unparsable drift names the field
        let err = Problem::new(iv, "exp(2*", "0", "0", "1", 1.0).unwrap_err();
        assert!(err.to_string().contains("drift F"), "{err}");
        // negative density
        assert!(Problem::new(iv, "-x", "0", "0", "x-2", 1.0).is_err());
        // density undefined inside the domain
        assert!(Problem::new(iv, "-x", "0", "0", "1/(x-1/2)", 1.0).is_err());
    }

    #[test]
    fn density_zeros_are_tolerated_with_a_note() {
        let prob = Problem::new(Interval::new(-1.0, 1.0).unwrap(), "-x", "0", "0", "x^2", 1.0);
        // x^2 vanishes only on a null set; the grid may or may not hit it
        let prob = prob.unwrap();
        assert!(prob.p == 1.0);
        let _ = prob.notes; // may be empty if the grid missed 0
    }

    #[test]
    fn logistic_hypotheses_all_pass() {
        let prob = Problem::new(Interval::new(0.0, 1.0).unwrap(), "-x*(1-x)", "0", "0", "1", 1.0)
            .unwrap();
        let rep = check_hypotheses(&prob, &HypothesisConfig::default());
        assert!(rep.passed(), "failures: {:?}", rep.failures());
        assert_eq!(rep.forward_invariant.status, AuditStatus::Pass);
        assert_eq!(rep.weight_const_on_zero_set.status, AuditStatus::Pass);
        assert!(rep.gamma.is_none(), "no zeros, gamma should be vacuous");
    }

    #[test]
    fn linear_decay_gamma_is_the_weight_value_at_zero() {
        let prob = Problem::new(Interval::line(), "-x", "0.25", "0", "exp(-abs(x))", 2.0).unwrap();
        let rep = check_hypotheses(&prob, &HypothesisConfig::default());
        assert!(rep.passed(), "failures: {:?}", rep.failures());
        assert_relative_eq!(rep.gamma.unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn complex_weight_on_zero_set_fails_condition_a() {
        let prob = Problem::new(Interval::line(), "-x", "0", "1", "exp(-abs(x))", 1.0).unwrap();
        let rep = check_hypotheses(&prob, &HypothesisConfig::default());
        assert_eq!(rep.weight_const_on_zero_set.status, AuditStatus::Fail);
        assert!(!rep.passed());
    }

    #[test]
    fn nonconstant_weight_on_zero_set_fails_condition_a() {
        let prob = Problem::new(
            Interval::new(-2.0, 2.0).unwrap(),
            "-x*(1-x)",
            "x",
            "0",
            "1",
            1.0,
        )
        .unwrap();
        let rep = check_hypotheses(&prob, &HypothesisConfig::default());
        assert_eq!(rep.weight_const_on_zero_set.status, AuditStatus::Fail);
        assert!(rep
            .weight_const_on_zero_set
            .detail
            .contains("not constant"));
    }

    #[test]
    fn condition_b_certifies_one_integrable_side() {
        let prob = Problem::new(
            Interval::new(0.0, f64::INFINITY).unwrap(),
            "-x",
            "0",
            "1/(1+x^2)",
            "exp(-x)",
            1.0,
        )
        .unwrap();
        let rep = check_hypotheses(&prob, &HypothesisConfig::default());
        assert_eq!(rep.imag_weight_integrable.status, AuditStatus::Pass);
        assert!(rep.imag_weight_integrable.detail.contains("upper endpoint"));
    }

    #[test]
    fn condition_b_fails_when_neither_side_integrates() {
        let prob = Problem::new(Interval::line(), "-x", "0", "1", "exp(-abs(x))", 1.0).unwrap();
        let rep = check_hypotheses(&prob, &HypothesisConfig::default());
        assert_eq!(rep.imag_weight_integrable.status, AuditStatus::Fail);
    }

    #[test]
    fn outward_drift_fails_invariance() {
        let prob = Problem::new(Interval::new(0.0, 1.0).unwrap(), "-1", "0", "0", "1", 1.0).unwrap();
        let rep = check_hypotheses(&prob, &HypothesisConfig::default());
        assert_eq!(rep.forward_invariant.status, AuditStatus::Fail);
        assert!(rep
            .forward_invariant
            .detail
            .contains("finite time"), "{}", rep.forward_invariant.detail);
    }

    #[test]
    fn unbounded_drift_derivative_fails() {
        let prob = Problem::new(Interval::line(), "x^2", "0", "0", "exp(-abs(x))", 1.0).unwrap();
        let rep = check_hypotheses(&prob, &HypothesisConfig::default());
        assert_eq!(rep.drift_deriv_bounded.status, AuditStatus::Fail);
    }

    #[test]
    fn decay_envelope_is_exponential_with_unit_constants() {
        let prob = Problem::new(Interval::line(), "-x", "0", "0", "1", 1.0).unwrap();
        let fit = check_admissibility(&prob);
        assert!(fit.admissible, "{}", fit.detail);
        assert_relative_eq!(fit.bound, 1.0, epsilon = 1e-6);
        assert_relative_eq!(fit.rate, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn translation_envelope_is_the_identity() {
        let prob = Problem::new(Interval::line(), "1", "0", "0", "1", 2.0).unwrap();
        let fit = check_admissibility(&prob);
        assert!(fit.admissible, "{}", fit.detail);
        assert_eq!(fit.bound, 1.0);
        assert_eq!(fit.rate, 0.0);
    }

    #[test]
    fn gaussian_density_translation_is_not_admissible() {
        let prob = Problem::new(
            Interval::line(),
            "1",
            "0",
            "0",
            "exp(-(x^2)/2)/sqrt(2*pi)",
            1.0,
        )
        .unwrap();
        let fit = check_admissibility(&prob);
        assert!(!fit.admissible, "{}", fit.detail);
        assert!(fit.detail.contains("does not stabilize"), "{}", fit.detail);
    }
}
