//! Flow-route oracle for the transported densities ρ_{t,p}.
//!
//! The chaos criterion decides everything from one weighted integral per
//! component, never integrating the flow. This module answers the same
//! convergence question the slow way — directly from trajectories — so the
//! two routes can be played against each other: the transported density at
//! a single signed time, the two-sided series over a time lattice, the time
//! integral over the whole line, the change-of-variables identity tying
//! that integral to the weighted component integral, the two composition
//! identities, and the comparability bounds on compact subintervals.
//!
//! All flow-side quantities come from trajectory accumulators or from a
//! dedicated solve that carries the time integral as one extra state
//! component; the component-integral route enters exactly once, as the
//! right-hand side being verified. Positive times transport along the
//! backward orbit whatever the drift's sign — no code path branches on
//! sign(F); the trajectory carries the direction itself.

use crate::criterion;
use crate::error::{Error, Result};
use crate::model::Problem;
use crate::ode::Dopri5;
use crate::quadrature::{self, ImproperConfig, IntegralClass, TailDirection, TailSequence};
use crate::semiflow::{self, backward_flow, flow, flow_curve, Direction, FlowConfig, FlowStatus};
use crate::zeroset::{self, Component, ZeroSetConfig};

/// Truncation order for the two-sided series when the caller has no opinion.
pub const DEFAULT_SERIES_TERMS: usize = 200;

/// Lattice spacings exercising the "some t₀ ⇔ all t₀" equivalence.
pub const DEFAULT_SERIES_SPACINGS: [f64; 3] = [0.25, 1.0, 3.0];

#[derive(Debug, Clone)]
pub struct FlowCheckConfig {
    pub flow: FlowConfig,
    /// Shell-walk geometry and decision thresholds for time integrals and
    /// series tails.
    pub improper: ImproperConfig,
    /// Horizon of the initial backward probe that locates the exit time.
    pub probe_horizon: f64,
    /// Solver-step budget per time direction.
    pub max_steps: usize,
}

impl Default for FlowCheckConfig {
    fn default() -> Self {
        FlowCheckConfig {
            flow: FlowConfig::default(),
            improper: ImproperConfig::default(),
            probe_horizon: 1e4,
            max_steps: 400_000,
        }
    }
}

/// The transported density at one point and one signed time.
#[derive(Debug, Clone, Copy)]
pub struct RhoEvaluation {
    pub x: f64,
    /// Signed time: t > 0 asks for ρ_{t,p} (backward transport guarded by
    /// the range indicator), t < 0 for ρ_{−|t|,p} (forward transport).
    pub t: f64,
    pub value: f64,
    /// Whether x lies in φ(t, Ω); always true for t ≤ 0.
    pub in_range: bool,
}

/// Evaluates ρ_{t,p}(x) from one trajectory of the drift.
///
/// For t > 0 the backward orbit decides the indicator: leaving Ω before
/// time t makes the value zero. For t < 0 the forward orbit is used;
/// forward invariance guarantees it exists, so a numerically detected
/// forward exit is reported as an error rather than smoothed over.
pub fn rho_t_p(prob: &Problem, x: f64, t: f64, cfg: &FlowCheckConfig) -> Result<RhoEvaluation> {
    if !t.is_finite() {
        return Err(Error::invalid("the transport time must be finite"));
    }
    if t == 0.0 {
        // ρ_{0,p} = ρ
        let value = prob.density.eval(x)?;
        return Ok(RhoEvaluation { x, t, value, in_range: true });
    }
    let p = prob.p;
    if t > 0.0 {
        let bs = backward_flow(prob, x, t, &cfg.flow)?;
        if let FlowStatus::ExitedAt { .. } = bs.status {
            return Ok(RhoEvaluation { x, t, value: 0.0, in_range: false });
        }
        let rho = semiflow::eval_inside(&prob.density, bs.value, &prob.omega)?;
        let value = (p * bs.log_weight_re - bs.drift_deriv_integral).exp() * rho;
        Ok(RhoEvaluation { x, t, value, in_range: true })
    } else {
        let fs = flow(prob, x, -t, &cfg.flow)?;
        if let FlowStatus::ExitedAt { t: te } = fs.status {
            return Err(Error::invalid(format!(
                "the forward trajectory from x = {x} left the domain at t = {te:.6}; \
                 the drift is not forward-invariant there"
            )));
        }
        let rho = semiflow::eval_inside(&prob.density, fs.value, &prob.omega)?;
        let value = (fs.drift_deriv_integral - p * fs.log_weight_re).exp() * rho;
        Ok(RhoEvaluation { x, t, value, in_range: true })
    }
}

/// Two-sided series Σ_k ρ_{k·t₀,p}(x), truncated, with a growth verdict.
#[derive(Debug, Clone)]
pub struct SeriesReport {
    pub t0: f64,
    /// Terms evaluated per side.
    pub k_max: usize,
    /// Truncated two-sided partial sum.
    pub sum: f64,
    pub class: IntegralClass,
}

/// Evaluates the two-sided series over the lattice {k·t₀ : |k| ≤ k_max} in
/// one trajectory pass per direction and classifies its growth with the
/// shared increment-sequence test. Positive-k terms vanish once the
/// backward orbit leaves Ω; a forward exit leaves the negative-k side
/// undefined and the verdict indecisive.
pub fn series_sum(
    prob: &Problem,
    x: f64,
    t0: f64,
    k_max: usize,
    cfg: &FlowCheckConfig,
) -> Result<SeriesReport> {
    ensure_moving_seed(prob, x)?;
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::invalid("the series spacing t0 must be positive and finite"));
    }
    if k_max == 0 {
        return Err(Error::invalid("the series needs at least one term per side"));
    }
    let times: Vec<f64> = (1..=k_max).map(|k| k as f64 * t0).collect();
    let p = prob.p;
    let rho0 = prob.density.eval(x)?;

    let side = |dir: Direction| -> IntegralClass {
        // the k = 0 term is carried by the backward side only
        let base = if dir == Direction::Backward { rho0 } else { 0.0 };
        let mut seq = TailSequence::new(TailDirection::TowardInfinite, base, 0.0);
        let samples = match flow_curve(prob, x, &times, dir, &cfg.flow) {
            Ok(s) => s,
            Err(e) => {
                return IntegralClass::Inconclusive {
                    evidence: format!("trajectory pass failed: {e}"),
                }
            }
        };
        for s in &samples {
            let term = match (dir, s.status) {
                (Direction::Backward, FlowStatus::ExitedAt { .. }) => 0.0,
                (Direction::Forward, FlowStatus::ExitedAt { t: te }) => {
                    return IntegralClass::Inconclusive {
                        evidence: format!(
                            "the forward orbit left the domain at t = {te:.6}; the drift \
                             is not forward-invariant, so the negative-k terms are undefined"
                        ),
                    }
                }
                (Direction::Backward, FlowStatus::InDomain) => {
                    match semiflow::eval_inside(&prob.density, s.value, &prob.omega) {
                        Ok(rho) => (p * s.log_weight_re - s.drift_deriv_integral).exp() * rho,
                        Err(e) => {
                            return IntegralClass::Inconclusive {
                                evidence: format!("density evaluation failed: {e}"),
                            }
                        }
                    }
                }
                (Direction::Forward, FlowStatus::InDomain) => {
                    match semiflow::eval_inside(&prob.density, s.value, &prob.omega) {
                        Ok(rho) => (s.drift_deriv_integral - p * s.log_weight_re).exp() * rho,
                        Err(e) => {
                            return IntegralClass::Inconclusive {
                                evidence: format!("density evaluation failed: {e}"),
                            }
                        }
                    }
                }
            };
            seq.push(term, cfg.flow.rtol * term.abs(), Some((s.t, term)));
        }
        seq.decide_final(&cfg.improper)
    };

    let backward = side(Direction::Backward);
    let forward = side(Direction::Forward);
    let sum = match (backward.value(), forward.value()) {
        // the extrapolated tails are already inside the classified values
        (Some((vb, _)), Some((vf, _))) => vb + vf,
        _ => f64::NAN,
    };
    Ok(SeriesReport {
        t0,
        k_max,
        sum,
        class: quadrature::combine(backward, forward),
    })
}

/// Classifies ∫_ℝ ρ_{t,p}(x) dλ(t) from two augmented trajectory solves.
///
/// The time integral rides along the trajectory as one extra solver state,
/// so no flow is recomputed per quadrature sample. The positive-time part
/// runs up to the backward exit time — located first by a bounded probe,
/// then approached through halving shells in case the integrand is singular
/// there — or over [0, ∞) in halving-free dyadic shells when the backward
/// orbit never leaves. The negative-time part always walks [0, ∞).
pub fn flow_integral(prob: &Problem, x: f64, cfg: &FlowCheckConfig) -> Result<IntegralClass> {
    ensure_moving_seed(prob, x)?;
    let exit = match backward_flow(prob, x, cfg.probe_horizon, &cfg.flow) {
        Ok(s) => match s.status {
            FlowStatus::ExitedAt { t } => Some(t),
            FlowStatus::InDomain => None,
        },
        Err(e) => {
            return Ok(IntegralClass::Inconclusive {
                evidence: format!("backward exit-time probe failed: {e}"),
            })
        }
    };
    let negative = time_side(prob, x, TimeSide::Negative, None, cfg);
    let positive = time_side(prob, x, TimeSide::Positive, exit, cfg);
    Ok(quadrature::combine(negative, positive))
}

/// Two-route comparison of the time integral against the weighted component
/// integral divided by |F(x)| (the change of variables behind the chaos
/// criterion).
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub x: f64,
    /// ∫_ℝ ρ_{t,p}(x) dt from trajectories alone.
    pub flow_side: IntegralClass,
    /// (1/|F(x)|) ∫_{C(x)} exp(p ∫_w^x Re h/F) ρ(w) dw via the w-quadrature
    /// route.
    pub component_side: IntegralClass,
    /// The Convergent/Divergent/Inconclusive tags agree.
    pub agree: bool,
    /// Relative residual when both sides carry values.
    pub residual: Option<f64>,
}

/// Computes both sides of the time-integral identity independently and
/// reports tag agreement plus the relative residual of the values.
pub fn verify_integral_identity(
    prob: &Problem,
    x: f64,
    cfg: &FlowCheckConfig,
) -> Result<IdentityReport> {
    ensure_moving_seed(prob, x)?;
    let flow_side = flow_integral(prob, x, cfg)?;
    let comp = component_containing(prob, x)?;
    let fx = prob.drift.eval(x)?.abs();
    let component_side = match criterion::component_integral(prob, &comp, x, cfg.improper.tol) {
        IntegralClass::Convergent { value, error, evidence } => IntegralClass::Convergent {
            value: value / fx,
            error: error / fx,
            evidence,
        },
        other => other,
    };
    let agree = flow_side.tag() == component_side.tag();
    let residual = match (flow_side.value(), component_side.value()) {
        (Some((a, _)), Some((b, _))) => {
            Some((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        }
        _ => None,
    };
    Ok(IdentityReport { x, flow_side, component_side, agree, residual })
}

/// Relative residuals of the two composition identities.
#[derive(Debug, Clone, Copy)]
pub struct CocycleResiduals {
    /// ρ_{−(t+s),p}(x) against the forward-orbit factor times
    /// ρ_{−t,p}(φ(s,x)).
    pub negative_family: f64,
    /// ρ_{t+s,p}(x) against the backward-orbit factor times
    /// ρ_{t,p}(φ(−s,x)); both sides vanish together when the backward orbit
    /// leaves Ω before time s.
    pub positive_family: f64,
}

/// Evaluates both sides of each composition identity numerically.
/// Both shifts must be nonnegative.
pub fn verify_cocycle(
    prob: &Problem,
    x: f64,
    s: f64,
    t: f64,
    cfg: &FlowCheckConfig,
) -> Result<CocycleResiduals> {
    if !(s >= 0.0) || !(t >= 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(Error::invalid("cocycle shifts must be finite and nonnegative"));
    }
    let p = prob.p;

    // ρ_{−(t+s),p}(x) = exp(∫₀ˢ F' − p·Re h along the forward orbit) · ρ_{−t,p}(φ(s,x))
    let lhs_n = rho_t_p(prob, x, -(s + t), cfg)?.value;
    let fs = flow(prob, x, s, &cfg.flow)?;
    if let FlowStatus::ExitedAt { t: te } = fs.status {
        return Err(Error::invalid(format!(
            "the forward trajectory from x = {x} left the domain at t = {te:.6}; \
             the drift is not forward-invariant there"
        )));
    }
    let rhs_n = (fs.drift_deriv_integral - p * fs.log_weight_re).exp()
        * rho_t_p(prob, fs.value, -t, cfg)?.value;

    // ρ_{(t+s),p}(x) = χ_{φ(s,Ω)}(x) · exp(p·∫ backward accumulators over s) · ρ_{t,p}(φ(−s,x))
    let lhs_p = rho_t_p(prob, x, s + t, cfg)?.value;
    let bs = backward_flow(prob, x, s, &cfg.flow)?;
    let rhs_p = match bs.status {
        FlowStatus::ExitedAt { .. } => 0.0,
        FlowStatus::InDomain => {
            (p * bs.log_weight_re - bs.drift_deriv_integral).exp()
                * rho_t_p(prob, bs.value, t, cfg)?.value
        }
    };

    Ok(CocycleResiduals {
        negative_family: relative_residual(lhs_n, rhs_n),
        positive_family: relative_residual(lhs_p, rhs_p),
    })
}

/// Worst constants observed for the comparability bounds on [a, b]: with α
/// the entry endpoint and β the exit endpoint relative to the drift
/// direction, ρ_{t,p}(α)/C ≤ ρ_{t,p}(x) ≤ C·ρ_{t,p}(β) must hold with one C
/// across all times.
#[derive(Debug, Clone)]
pub struct ComparabilityReport {
    pub a: f64,
    pub b: f64,
    /// sup over sampled (t, x) of ρ_{t,p}(x) / ρ_{t,p}(β).
    pub upper: f64,
    /// sup over sampled (t, x) of ρ_{t,p}(α) / ρ_{t,p}(x).
    pub lower: f64,
    /// Both suprema stayed finite.
    pub bounded: bool,
    pub samples: usize,
}

/// Samples the transported density over a grid on [a, b] and the given
/// signed times and reports the worst endpoint ratios. The drift must keep
/// one strict sign on [a, b] (the bounds are stated for real weights and
/// zero-free subintervals; the real part of the weight is what the
/// transported density sees).
pub fn comparability_check(
    prob: &Problem,
    a: f64,
    b: f64,
    times: &[f64],
    cfg: &FlowCheckConfig,
) -> Result<ComparabilityReport> {
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("the subinterval must satisfy a <= b with finite endpoints"));
    }
    if !prob.omega.contains(a) || !prob.omega.contains(b) {
        return Err(Error::invalid(format!(
            "[{a}, {b}] must lie inside the domain {}",
            prob.omega
        )));
    }
    const GRID: usize = 17;
    let xs: Vec<f64> = if a == b {
        vec![a]
    } else {
        (0..GRID)
            .map(|i| a + (b - a) * i as f64 / (GRID - 1) as f64)
            .collect()
    };
    let mut sign = 0.0f64;
    for &x in &xs {
        let f = prob.drift.eval(x)?;
        if f == 0.0 || (sign != 0.0 && f.signum() != sign) {
            return Err(Error::invalid(
                "the drift must keep one strict sign on [a, b]",
            ));
        }
        sign = f.signum();
    }
    let (alpha, beta) = if sign > 0.0 { (a, b) } else { (b, a) };

    let mut upper: f64 = 0.0;
    let mut lower: f64 = 0.0;
    let mut samples = 0usize;
    for &t in times {
        let v_alpha = rho_t_p(prob, alpha, t, cfg)?.value;
        let v_beta = rho_t_p(prob, beta, t, cfg)?.value;
        for &x in &xs {
            let v = rho_t_p(prob, x, t, cfg)?.value;
            upper = upper.max(ratio_or_unit(v, v_beta));
            lower = lower.max(ratio_or_unit(v_alpha, v));
            samples += 1;
        }
    }
    Ok(ComparabilityReport {
        a,
        b,
        upper,
        lower,
        bounded: upper.is_finite() && lower.is_finite(),
        samples,
    })
}

fn relative_residual(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// A vanished numerator over a vanished denominator satisfies any bound.
fn ratio_or_unit(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// The series, integral and identity are only defined off the zero set.
fn ensure_moving_seed(prob: &Problem, x: f64) -> Result<()> {
    if !prob.omega.contains(x) {
        return Err(Error::Domain {
            subexpr: "flow-check seed".into(),
            x,
            reason: format!("outside the domain {}", prob.omega),
        });
    }
    let f = prob.drift.eval(x)?;
    if f.abs() < 1e-12 * x.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "x = {x} is an equilibrium of the drift; the transported-density \
             quantities are only defined off the zero set"
        )));
    }
    Ok(())
}

fn component_containing(prob: &Problem, x: f64) -> Result<Component> {
    let zs = zeroset::find_zeros(
        &prob.drift,
        &prob.drift_deriv,
        prob.omega,
        &ZeroSetConfig::default(),
    );
    zeroset::components(&prob.drift, &zs, prob.omega)
        .into_iter()
        .find(|c| c.lo < x && x < c.hi)
        .ok_or_else(|| {
            Error::invalid(format!(
                "x = {x} does not lie inside a zero-free component of the drift"
            ))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimeSide {
    /// ∫₀^∞ ρ_{−t,p}(x) dt along the forward orbit.
    Negative,
    /// ∫₀^? ρ_{t,p}(x) dt along the backward orbit.
    Positive,
}

/// Outcome of driving the augmented solve to a target time.
enum Reach {
    At([f64; 4]),
    Exited { t: f64, y: [f64; 4] },
    Overflow { t: f64 },
    Failed(Error),
    Budget,
}

fn advance_to<F>(
    stepper: &mut Dopri5<4, F>,
    target: f64,
    prob: &Problem,
    cfg: &FlowCheckConfig,
) -> Reach
where
    F: FnMut(f64, &[f64; 4]) -> Result<[f64; 4]>,
{
    while stepper.t < target {
        if stepper.steps > cfg.max_steps {
            return Reach::Budget;
        }
        // same stability cap as the plain flow: once the integrand decays
        // below the absolute tolerance, error control alone no longer keeps
        // the step inside the stability region of the position equation
        if let Ok(fp) = semiflow::eval_inside(&prob.drift_deriv, stepper.y[0], &prob.omega) {
            stepper.limit_h(2.5 / fp.abs().max(1e-300));
        }
        match stepper.step_toward(target) {
            Ok(step) => {
                if let Some((t, y)) =
                    semiflow::detect_exit(&step, prob.omega.lo, prob.omega.hi, cfg.flow.blowup)
                {
                    return Reach::Exited { t, y };
                }
            }
            Err(Error::Domain { reason, .. })
                if reason.contains("not finite") || reason.contains("non-finite") =>
            {
                return Reach::Overflow { t: stepper.t };
            }
            Err(e) => return Reach::Failed(e),
        }
    }
    Reach::At(stepper.y)
}

/// Classifies one time direction of ∫ ρ_{t,p}(x) dt.
///
/// State layout: [position, ∫Re h, ∫F', accumulated time integral]. With a
/// known backward exit time the shells halve toward it (the integrand may
/// be singular there); otherwise they double toward infinity.
fn time_side(
    prob: &Problem,
    x: f64,
    side: TimeSide,
    exit: Option<f64>,
    cfg: &FlowCheckConfig,
) -> IntegralClass {
    let p = prob.p;
    let growth_sign = match side {
        TimeSide::Negative => -1.0,
        TimeSide::Positive => 1.0,
    };
    let drift_sign = match side {
        TimeSide::Negative => 1.0,
        TimeSide::Positive => -1.0,
    };
    let integrand = |y: &[f64; 4]| -> Result<f64> {
        let rho = semiflow::eval_inside(&prob.density, y[0], &prob.omega)?;
        let v = (growth_sign * (p * y[1] - y[2])).exp() * rho;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain {
                subexpr: "transported density".into(),
                x: y[0],
                reason: "integrand sample is not finite".into(),
            })
        }
    };
    let rhs = |_t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        Ok([
            drift_sign * semiflow::eval_inside(&prob.drift, y[0], &prob.omega)?,
            semiflow::eval_inside(&prob.weight_re, y[0], &prob.omega)?,
            semiflow::eval_inside(&prob.drift_deriv, y[0], &prob.omega)?,
            integrand(y)?,
        ])
    };

    let icfg = &cfg.improper;
    let (toward, edge): (TailDirection, Box<dyn Fn(usize) -> f64>) = match exit {
        Some(ts) => {
            let d0 = ts * icfg.eps0_frac;
            (
                TailDirection::TowardFinite,
                Box::new(move |k: usize| ts - d0 * 0.5f64.powi(k as i32)),
            )
        }
        None => {
            let r0 = icfg.r0.max(1e-12);
            (
                TailDirection::TowardInfinite,
                Box::new(move |k: usize| r0 * 2.0f64.powi(k as i32)),
            )
        }
    };
    let dist = |t: f64| match exit {
        Some(ts) => ts - t,
        None => t,
    };

    let mut stepper = match Dopri5::new(
        rhs,
        0.0,
        [x, 0.0, 0.0, 0.0],
        cfg.flow.rtol,
        cfg.flow.atol,
        cfg.flow.h_max,
    ) {
        Ok(s) => s,
        Err(e) => {
            return IntegralClass::Inconclusive {
                evidence: format!("time integration failed at the seed: {e}"),
            }
        }
    };

    let e0 = edge(0);
    let y_base = match advance_to(&mut stepper, e0, prob, cfg) {
        Reach::At(y) => y,
        Reach::Exited { t, y } => {
            return match side {
                // nothing remains beyond the exit and the adaptive solve
                // already resolved [0, t]
                TimeSide::Positive => IntegralClass::Convergent {
                    value: y[3],
                    error: cfg.flow.rtol * y[3].abs() + cfg.flow.atol,
                    evidence: format!(
                        "the backward orbit leaves the domain at t = {t:.6e}; the \
                         transported density vanishes beyond"
                    ),
                },
                TimeSide::Negative => IntegralClass::Inconclusive {
                    evidence: format!(
                        "the forward orbit left the domain at t = {t:.6e}; the drift is \
                         not forward-invariant, so the negative-time transported density \
                         is undefined beyond"
                    ),
                },
            };
        }
        Reach::Overflow { t } => {
            return IntegralClass::Inconclusive {
                evidence: format!("base segment failed: integrand overflow at t = {t:.6e}"),
            }
        }
        Reach::Failed(e) => {
            return IntegralClass::Inconclusive {
                evidence: format!("base segment failed: {e}"),
            }
        }
        Reach::Budget => {
            return IntegralClass::Inconclusive {
                evidence: "step budget exhausted on the base segment".into(),
            }
        }
    };

    let mut seq = TailSequence::new(toward, y_base[3], cfg.flow.rtol * y_base[3].abs());
    let mut j_prev = y_base[3];
    for k in 1..=icfg.shells {
        let (lo_e, hi_e) = (edge(k - 1), edge(k));
        if !(hi_e > lo_e) || !hi_e.is_finite() {
            seq.note("shell collapsed to zero width in f64");
            break;
        }
        let reach = advance_to(&mut stepper, hi_e, prob, cfg);
        let walkable = matches!(reach, Reach::At(_));
        match reach {
            Reach::At(y) => {
                let inc = y[3] - j_prev;
                j_prev = y[3];
                let sample = integrand(&y).ok().map(|v| (dist(hi_e), v.abs()));
                seq.push(inc, cfg.flow.rtol * inc.abs(), sample);
            }
            Reach::Exited { t, y } => {
                let inc = y[3] - j_prev;
                j_prev = y[3];
                seq.push(inc, cfg.flow.rtol * inc.abs(), None);
                match (side, exit) {
                    // past the probe horizon the orbit does leave after all:
                    // the indicator kills everything beyond, so the partial
                    // sum is the whole integral
                    (TimeSide::Positive, None) => {
                        return IntegralClass::Convergent {
                            value: seq.partial(),
                            error: cfg.flow.rtol * seq.partial().abs() + cfg.flow.atol,
                            evidence: format!(
                                "the backward orbit leaves the domain at t = {t:.6e}; the \
                                 transported density vanishes beyond ({k} shells walked)"
                            ),
                        };
                    }
                    // the walk was aiming at this very exit; the remaining
                    // shells are unreachable, so decide on what was seen
                    (TimeSide::Positive, Some(_)) => {
                        seq.note(format!("orbit reached the boundary at t = {t:.6e} mid-walk"));
                    }
                    (TimeSide::Negative, _) => {
                        return IntegralClass::Inconclusive {
                            evidence: format!(
                                "the forward orbit left the domain at t = {t:.6e}; the drift \
                                 is not forward-invariant there"
                            ),
                        };
                    }
                }
            }
            Reach::Overflow { t } => {
                seq.push(f64::INFINITY, 0.0, None);
                seq.note(format!("integrand overflow at t = {t:.6e}"));
            }
            Reach::Failed(e) => {
                seq.note(format!("shell {k} failed: {e}"));
            }
            Reach::Budget => {
                seq.note(format!("step budget ({}) exhausted at shell {k}", cfg.max_steps));
            }
        }
        if !walkable {
            break;
        }
        if let Some(c) = seq.decide_early(icfg) {
            return c;
        }
    }
    seq.decide_final(icfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interval, Problem};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg() -> FlowCheckConfig {
        FlowCheckConfig::default()
    }

    /// x' = -x with constant real weight on (0, 1): every quantity here has
    /// a closed form through φ(t,x) = x e^{-t}.
    fn decay(c: f64, p: f64) -> Problem {
        Problem::new(
            Interval::new(0.0, 1.0).unwrap(),
            "-x",
            &format!("{c}"),
            "0",
            "1",
            p,
        )
        .unwrap()
    }

    #[test]
    fn rho_at_time_zero_is_the_density() {
        let prob = Problem::new(
            Interval::new(0.0, 1.0).unwrap(),
            "-x*(1-x)",
            "0.3",
            "0",
            "exp(-x)+0.5",
            2.0,
        )
        .unwrap();
        for &x in &[0.2, 0.5, 0.9] {
            let r = rho_t_p(&prob, x, 0.0, &cfg()).unwrap();
            assert_eq!(r.value, prob.density.eval(x).unwrap());
            assert!(r.in_range);
        }
    }

    #[test]
    fn transported_density_closed_forms_for_linear_decay() {
        // rate p·c + 1 with p = 2, c = 0.7
        let prob = decay(0.7, 2.0);
        let rate = 2.0 * 0.7 + 1.0;
        for &t in &[0.3, 1.0] {
            let r = rho_t_p(&prob, 0.5, -t, &cfg()).unwrap();
            assert!(r.in_range);
            assert_relative_eq!(r.value, (-rate * t).exp(), max_relative = 1e-8);
        }
        // backward transport lives until t* = ln(1/x)
        let r = rho_t_p(&prob, 0.5, 0.5, &cfg()).unwrap();
        assert!(r.in_range);
        assert_relative_eq!(r.value, (rate * 0.5).exp(), max_relative = 1e-8);
        let r = rho_t_p(&prob, 0.5, 0.8, &cfg()).unwrap();
        assert!(!r.in_range);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn forward_exit_is_reported_not_guessed() {
        // x' = 1 escapes (0, 1) in finite time: ρ_{-t,p} is undefined past it
        let prob =
            Problem::new(Interval::new(0.0, 1.0).unwrap(), "1", "0", "0", "1", 1.0).unwrap();
        let err = rho_t_p(&prob, 0.5, -2.0, &cfg()).unwrap_err();
        assert!(err.to_string().contains("forward-invariant"), "{err}");
    }

    #[test]
    fn series_matches_the_geometric_closed_form() {
        // c = 0: positive-k terms die at k·t0 ≥ ln 2, negative-k terms are e^{-k}
        let prob = decay(0.0, 1.0);
        let rep = series_sum(&prob, 0.5, 1.0, DEFAULT_SERIES_TERMS, &cfg()).unwrap();
        let oracle = 1.0 + 1.0 / (std::f64::consts::E - 1.0);
        assert_eq!(rep.class.tag(), "Convergent");
        assert_relative_eq!(rep.sum, oracle, max_relative = 1e-9);
        let (v, _) = rep.class.value().unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-9);
    }

    #[test]
    fn series_diverges_when_the_transport_grows() {
        // p·c + 1 = -0.5 < 0: the negative-k side grows like e^{0.5 k t0}
        let prob = decay(-1.5, 1.0);
        let rep = series_sum(&prob, 0.5, 1.0, DEFAULT_SERIES_TERMS, &cfg()).unwrap();
        assert_eq!(rep.class.tag(), "Divergent", "{}", rep.class.evidence());
    }

    #[test]
    fn series_and_integral_reject_equilibrium_seeds() {
        let prob =
            Problem::new(Interval::new(-1.0, 1.0).unwrap(), "-x", "0", "0", "1", 1.0).unwrap();
        assert!(series_sum(&prob, 0.0, 1.0, 50, &cfg()).is_err());
        assert!(flow_integral(&prob, 0.0, &cfg()).is_err());
        assert!(flow_integral(&prob, 2.0, &cfg()).is_err());
    }

    #[test]
    fn flow_integral_matches_the_closed_form() {
        // ∫_ℝ ρ_{t,p}(x) dt = x^{-(pc+1)}/(pc+1) when pc + 1 > 0
        for &c in &[0.0, 0.5] {
            let prob = decay(c, 1.0);
            let rate = c + 1.0;
            for &x in &[0.25, 0.5, 0.75] {
                let class = flow_integral(&prob, x, &cfg()).unwrap();
                let (v, _) = class
                    .value()
                    .unwrap_or_else(|| panic!("c={c} x={x}: {}", class.evidence()));
                assert_relative_eq!(v, x.powf(-rate) / rate, max_relative = 1e-5);
            }
        }
        // at and below the borderline pc + 1 = 0 the negative-time part
        // no longer decays
        for &c in &[-1.0, -1.2] {
            let prob = decay(c, 1.0);
            let class = flow_integral(&prob, 0.5, &cfg()).unwrap();
            assert_eq!(class.tag(), "Divergent", "c={c}: {}", class.evidence());
        }
    }

    #[test]
    fn flow_integral_on_uniform_translation_diverges() {
        // x' = 1, h ≡ 1 on ℝ: ρ_{t,p}(x) = e^{pt} overflows along the
        // positive-time walk, which is divergence evidence
        let prob = Problem::new(Interval::line(), "1", "1", "0", "1", 1.0).unwrap();
        let class = flow_integral(&prob, 0.0, &cfg()).unwrap();
        assert_eq!(class.tag(), "Divergent", "{}", class.evidence());
    }

    #[test]
    fn series_and_integral_tags_agree_across_spacings() {
        for &c in &[0.5, -1.5] {
            let prob = decay(c, 1.0);
            let integral_tag = flow_integral(&prob, 0.5, &cfg()).unwrap().tag();
            for &t0 in &DEFAULT_SERIES_SPACINGS {
                let rep = series_sum(&prob, 0.5, t0, DEFAULT_SERIES_TERMS, &cfg()).unwrap();
                assert_eq!(
                    rep.class.tag(),
                    integral_tag,
                    "c={c} t0={t0}: {}",
                    rep.class.evidence()
                );
            }
        }
    }

    #[test]
    fn integral_identity_on_linear_decay() {
        let prob = decay(0.4, 1.0);
        let rate = 1.4;
        for &x in &[0.25, 0.5, 0.75] {
            let rep = verify_integral_identity(&prob, x, &cfg()).unwrap();
            assert!(rep.agree, "tags {} vs {}", rep.flow_side.tag(), rep.component_side.tag());
            assert!(rep.residual.unwrap() <= 1e-5, "residual {:?}", rep.residual);
            let (v, _) = rep.flow_side.value().unwrap();
            assert_relative_eq!(v, x.powf(-rate) / rate, max_relative = 1e-5);
        }
        // mirrored component: same magnitudes on (-1, 0) by symmetry
        let mirrored =
            Problem::new(Interval::new(-1.0, 1.0).unwrap(), "-x", "0.4", "0", "1", 1.0).unwrap();
        let rep = verify_integral_identity(&mirrored, -0.5, &cfg()).unwrap();
        assert!(rep.agree);
        assert!(rep.residual.unwrap() <= 1e-5);
        let (v, _) = rep.flow_side.value().unwrap();
        assert_relative_eq!(v, 0.5f64.powf(-rate) / rate, max_relative = 1e-5);
    }

    #[test]
    fn integral_identity_with_constant_drift() {
        // x' = 1, h ≡ 1 on (0, ∞) at x = 1: both sides equal e
        let prob = Problem::new(
            Interval::new(0.0, f64::INFINITY).unwrap(),
            "1",
            "1",
            "0",
            "1",
            1.0,
        )
        .unwrap();
        let rep = verify_integral_identity(&prob, 1.0, &cfg()).unwrap();
        assert!(rep.agree);
        assert!(rep.residual.unwrap() <= 1e-5, "residual {:?}", rep.residual);
        let (v, _) = rep.flow_side.value().unwrap();
        assert_relative_eq!(v, std::f64::consts::E, max_relative = 1e-5);
    }

    #[test]
    fn identity_tags_agree_on_a_cubic_family() {
        // x' = -x(a + b x²) on (0, 1): convergent exactly when c > -a (p = 1)
        for &a in &[0.5, 1.5] {
            for &b in &[0.0, 1.0] {
                for &c in &[-1.0, 0.6] {
                    let prob = Problem::new(
                        Interval::new(0.0, 1.0).unwrap(),
                        &format!("-x*({a} + {b}*x^2)"),
                        &format!("{c}"),
                        "0",
                        "1",
                        1.0,
                    )
                    .unwrap();
                    let rep = verify_integral_identity(&prob, 0.5, &cfg()).unwrap();
                    let expected = if c > -a { "Convergent" } else { "Divergent" };
                    assert!(
                        rep.agree,
                        "a={a} b={b} c={c}: {} vs {}",
                        rep.flow_side.evidence(),
                        rep.component_side.evidence()
                    );
                    assert_eq!(
                        rep.flow_side.tag(),
                        expected,
                        "a={a} b={b} c={c}: {}",
                        rep.flow_side.evidence()
                    );
                    if let Some(r) = rep.residual {
                        assert!(r <= 1e-4, "a={a} b={b} c={c}: residual {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn cocycle_residuals_vanish_on_closed_forms() {
        let prob = decay(0.8, 2.0);
        // strictly positive case on both families
        let r = verify_cocycle(&prob, 0.5, 0.2, 0.3, &cfg()).unwrap();
        assert!(r.negative_family <= 1e-8, "{}", r.negative_family);
        assert!(r.positive_family <= 1e-8, "{}", r.positive_family);
        // here t + s passes the exit time: both sides of the positive
        // family vanish together
        let r = verify_cocycle(&prob, 0.5, 0.3, 0.7, &cfg()).unwrap();
        assert!(r.negative_family <= 1e-8);
        assert_eq!(r.positive_family, 0.0);
        // degenerate shift
        let r = verify_cocycle(&prob, 0.5, 0.0, 0.4, &cfg()).unwrap();
        assert!(r.negative_family <= 1e-10);
        assert!(r.positive_family <= 1e-10);
    }

    #[test]
    fn cocycle_residual_scales_with_flow_tolerance() {
        // nonlinear drift and varying weight so the solver tolerance is
        // actually what limits the residual
        let prob = Problem::new(
            Interval::new(0.0, 1.0).unwrap(),
            "x*(1-x)",
            "0.3*cos(x)",
            "0",
            "1",
            1.0,
        )
        .unwrap();
        let res = |rtol: f64| {
            let mut c = cfg();
            c.flow.rtol = rtol;
            c.flow.atol = rtol * 1e-3;
            let r = verify_cocycle(&prob, 0.3, 0.4, 0.8, &c).unwrap();
            r.negative_family.max(r.positive_family)
        };
        let loose = res(1e-5);
        let tight = res(1e-10);
        assert!(
            tight <= loose / 4.0 || loose < 1e-13,
            "loose {loose} tight {tight}"
        );
    }

    #[test]
    fn comparability_bounds_hold_on_compact_subintervals() {
        // growing density: the ratios are driven by ρ(φ(∓t, ·)), whose
        // in-range supremum for this family is exp(1 - a/b) — backward
        // transport amplifies the density spread until the exit cuts in
        let prob = Problem::new(
            Interval::new(0.0, 1.0).unwrap(),
            "-x",
            "0",
            "0",
            "exp(x)",
            1.0,
        )
        .unwrap();
        let times = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        let rep = comparability_check(&prob, 0.3, 0.6, &times, &cfg()).unwrap();
        assert!(rep.bounded);
        let cap = (1.0 - 0.3f64 / 0.6).exp() + 1e-9;
        assert!(rep.upper <= cap && rep.lower <= cap, "{rep:?}");
        assert!(rep.upper >= 1.0 - 1e-12 && rep.lower >= 1.0 - 1e-12);

        // pure translation: everything cancels exactly
        let flat = Problem::new(Interval::line(), "1", "0", "0", "1", 1.0).unwrap();
        let rep = comparability_check(&flat, -1.0, 1.0, &times, &cfg()).unwrap();
        assert!((rep.upper - 1.0).abs() < 1e-12 && (rep.lower - 1.0).abs() < 1e-12);

        // degenerate subinterval
        let rep = comparability_check(&prob, 0.4, 0.4, &[0.5, -0.5], &cfg()).unwrap();
        assert!(rep.bounded && (rep.upper - 1.0).abs() < 1e-12);
        assert_eq!(rep.samples, 2);

        // a zero of the drift inside [a, b] is a precondition violation
        let wide = Problem::new(Interval::new(-1.0, 1.0).unwrap(), "-x", "0", "0", "1", 1.0)
            .unwrap();
        assert!(comparability_check(&wide, -0.5, 0.5, &times, &cfg()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // the transported density is nonnegative at every signed time,
        // and negative times are never range-restricted
        #[test]
        fn transported_density_is_nonnegative(
            x in 0.05f64..0.95,
            t in -3.0f64..3.0,
        ) {
            let prob = Problem::new(
                Interval::new(0.0, 1.0).unwrap(),
                "x*(1-x)",
                "0.3*cos(x)",
                "0",
                "exp(-x)+0.5",
                2.0,
            )
            .unwrap();
            let r = rho_t_p(&prob, x, t, &cfg()).unwrap();
            prop_assert!(r.value >= 0.0);
            if t <= 0.0 {
                prop_assert!(r.in_range);
            }
        }
    }
}
