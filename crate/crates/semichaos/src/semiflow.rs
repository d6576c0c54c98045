//! Trajectories of the drift field together with the weight and divergence
//! integrals accumulated along them.
//!
//! The state is the solution of x' = F(x) (or x' = -F(x) for the reversed
//! field) augmented with the running integrals of Re h, Im h and F' along
//! the trajectory; everything is integrated in one pass with the embedded
//! Dormand–Prince pair. Leaving the open domain through a finite endpoint is
//! an event: a step whose endpoint lands outside is bisected on its dense
//! interpolant to localize the crossing time. Only the endpoint decides —
//! a one-dimensional autonomous trajectory cannot cross the boundary and
//! return within a step, so a trajectory that merely approaches an
//! equilibrium endpoint asymptotically is never mistaken for an exiting
//! one. Crossing the blow-up threshold counts as an exit to infinity.
//!
//! Stage evaluations may overshoot the boundary by a fraction of a step;
//! when the field is undefined there, the evaluation is retried just inside
//! the boundary. Exit times are then still localized by bisection, so this
//! clamping only affects rejected trial stages.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::{Interval, Problem};
use crate::ode::{DenseStep, Dopri5};
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on the internal step size (rarely needed; the controller adapts).
    pub h_max: f64,
    /// |x| beyond which the trajectory counts as escaped to infinity.
    pub blowup: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            rtol: 1e-10,
            atol: 1e-13,
            h_max: f64::INFINITY,
            blowup: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FlowStatus {
    InDomain,
    /// The trajectory reached the boundary (or escaped past the blow-up
    /// threshold) at this time; the sample is frozen at the exit state.
    ExitedAt { t: f64 },
}

/// Trajectory state at one requested duration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowSample {
    /// Requested (nonnegative) duration.
    pub t: f64,
    /// Position: the forward or backward trajectory of the seed at time t.
    pub value: f64,
    /// Integral of Re h along the trajectory up to t.
    pub log_weight_re: f64,
    /// Integral of Im h along the trajectory up to t.
    pub log_weight_im: f64,
    /// Integral of F' (the flow divergence) along the trajectory up to t.
    pub drift_deriv_integral: f64,
    pub status: FlowStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Seeds with |F| below this (relative to the seed scale) are equilibria:
/// the trajectory is constant and the accumulators are linear in t.
const EQUILIBRIUM_TOL: f64 = 1e-14;

/// Forward trajectory sample of `x0` after duration `t >= 0`.
pub fn flow(prob: &Problem, x0: f64, t: f64, cfg: &FlowConfig) -> Result<FlowSample> {
    Ok(flow_curve(prob, x0, &[t], Direction::Forward, cfg)?[0])
}

/// Backward trajectory sample: the point that flows to `x0` in time `t`,
/// with the integrals accumulated along the reversed path.
pub fn backward_flow(prob: &Problem, x0: f64, t: f64, cfg: &FlowConfig) -> Result<FlowSample> {
    Ok(flow_curve(prob, x0, &[t], Direction::Backward, cfg)?[0])
}

/// Samples one trajectory at several durations in a single integration pass.
/// `times` must be finite, nonnegative and ascending.
pub fn flow_curve(
    prob: &Problem,
    x0: f64,
    times: &[f64],
    dir: Direction,
    cfg: &FlowConfig,
) -> Result<Vec<FlowSample>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times
        .windows(2)
        .any(|w| w[0] > w[1])
        || times.iter().any(|t| !t.is_finite() || *t < 0.0)
    {
        return Err(Error::invalid(
            "sample times must be finite, nonnegative and ascending",
        ));
    }
    if !prob.omega.contains(x0) {
        return Err(Error::Domain {
            subexpr: "flow seed".into(),
            x: x0,
            reason: format!("outside the domain {}", prob.omega),
        });
    }

    let f0 = prob.drift.eval(x0)?;
    if f0.abs() < EQUILIBRIUM_TOL * x0.abs().max(1.0) {
        let hre = prob.weight_re.eval(x0)?;
        let him = prob.weight_im.eval(x0)?;
        let fp = prob.drift_deriv.eval(x0)?;
        return Ok(times
            .iter()
            .map(|&t| FlowSample {
                t,
                value: x0,
                log_weight_re: hre * t,
                log_weight_im: him * t,
                drift_deriv_integral: fp * t,
                status: FlowStatus::InDomain,
            })
            .collect());
    }

    let (lo, hi) = (prob.omega.lo, prob.omega.hi);
    let eval_field = |e: &Expr, x: f64| eval_inside(e, x, &prob.omega);
    let sgn = if dir == Direction::Forward { 1.0 } else { -1.0 };
    let rhs = |_t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let x = y[0];
        Ok([
            sgn * eval_field(&prob.drift, x)?,
            eval_field(&prob.weight_re, x)?,
            eval_field(&prob.weight_im, x)?,
            eval_field(&prob.drift_deriv, x)?,
        ])
    };

    let mut out = Vec::with_capacity(times.len());
    let mut idx = 0;
    let mk = |t: f64, y: &[f64; 4], status: FlowStatus| FlowSample {
        t,
        value: y[0],
        log_weight_re: y[1],
        log_weight_im: y[2],
        drift_deriv_integral: y[3],
        status,
    };
    let y0 = [x0, 0.0, 0.0, 0.0];
    while idx < times.len() && times[idx] == 0.0 {
        out.push(mk(0.0, &y0, FlowStatus::InDomain));
        idx += 1;
    }
    if idx == times.len() {
        return Ok(out);
    }

    let horizon = times[times.len() - 1];
    let mut stepper = Dopri5::new(rhs, 0.0, y0, cfg.rtol, cfg.atol, cfg.h_max)?;
    while idx < times.len() {
        // Keep the step inside the explicit stability region. Once |x|
        // decays below the absolute tolerance the error estimate no longer
        // restrains h, and an unstable step can flip the sign of x.
        if let Ok(fp) = eval_field(&prob.drift_deriv, stepper.y[0]) {
            stepper.limit_h(2.5 / fp.abs().max(1e-300));
        }
        let step = stepper.step_toward(horizon)?;
        if let Some((t_star, y_star)) = detect_exit(&step, lo, hi, cfg.blowup) {
            while idx < times.len() && times[idx] < t_star {
                out.push(mk(times[idx], &step.eval(times[idx]), FlowStatus::InDomain));
                idx += 1;
            }
            while idx < times.len() {
                out.push(mk(times[idx], &y_star, FlowStatus::ExitedAt { t: t_star }));
                idx += 1;
            }
            break;
        }
        while idx < times.len() && times[idx] <= stepper.t {
            out.push(mk(times[idx], &step.eval(times[idx]), FlowStatus::InDomain));
            idx += 1;
        }
    }
    Ok(out)
}

/// Evaluates a field expression at `x`, retrying just inside the interval
/// when `x` overshoots an endpoint and the expression fails there. Solver
/// stages may leave the open domain by a fraction of a step; genuine exits
/// are still localized by bisection afterwards, so the clamp only affects
/// trial evaluations.
pub(crate) fn eval_inside(e: &Expr, x: f64, omega: &Interval) -> Result<f64> {
    match e.eval(x) {
        Ok(v) if v.is_finite() => Ok(v),
        first => {
            let (lo, hi) = (omega.lo, omega.hi);
            let clamp_lo = if lo.is_finite() { lo + 1e-13 * (1.0 + lo.abs()) } else { lo };
            let clamp_hi = if hi.is_finite() { hi - 1e-13 * (1.0 + hi.abs()) } else { hi };
            let xc = x.clamp(clamp_lo, clamp_hi);
            if xc != x {
                if let Ok(v) = e.eval(xc) {
                    if v.is_finite() {
                        return Ok(v);
                    }
                }
            }
            match first {
                Ok(v) => Err(Error::Domain {
                    subexpr: format!("{e}"),
                    x,
                    reason: format!("evaluates to the non-finite value {v}"),
                }),
                Err(e) => Err(e),
            }
        }
    }
}

/// Decides whether an accepted step left the domain and localizes the
/// crossing time by bisecting the dense interpolant. Only the step endpoint
/// decides: interior interpolant values carry an absolute error on the scale
/// of the step's start state and can dip past an equilibrium endpoint
/// spuriously when the trajectory has decayed far below it. The first state
/// component must be the position.
pub(crate) fn detect_exit<const N: usize>(
    step: &DenseStep<N>,
    lo: f64,
    hi: f64,
    blowup: f64,
) -> Option<(f64, [f64; N])> {
    let inside = |x: f64| x > lo && x < hi && x.abs() < blowup;
    if inside(step.eval(step.t1())[0]) {
        return None;
    }
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if inside(step.eval(step.t0 + m * step.h)[0]) {
            a = m;
        } else {
            b = m;
        }
    }
    let t_star = step.t0 + b * step.h;
    Some((t_star, step.eval(t_star)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interval, Problem};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn linear_decay() -> Problem {
        Problem::new(Interval::line(), "-x", "0.7", "0", "1", 2.0).unwrap()
    }

    fn logistic() -> Problem {
        Problem::new(Interval::new(0.0, 1.0).unwrap(), "-x*(1-x)", "0", "0", "1", 1.0).unwrap()
    }

    #[test]
    fn linear_decay_matches_closed_form() {
        let p = linear_decay();
        let s = flow(&p, 1.0, 2.5, &FlowConfig::default()).unwrap();
        assert_eq!(s.status, FlowStatus::InDomain);
        assert_relative_eq!(s.value, (-2.5f64).exp(), max_relative = 1e-9);
        // h ≡ 0.7 integrates to 0.7 t; F' ≡ -1 integrates to -t
        assert_relative_eq!(s.log_weight_re, 0.7 * 2.5, max_relative = 1e-9);
        assert_eq!(s.log_weight_im, 0.0);
        assert_relative_eq!(s.drift_deriv_integral, -2.5, max_relative = 1e-9);
    }

    #[test]
    fn logistic_trajectory_and_divergence_integral() {
        // from the midpoint the trajectory is 1/(1+e^t)
        let p = logistic();
        let t = 1.0;
        let s = flow(&p, 0.5, t, &FlowConfig::default()).unwrap();
        assert_relative_eq!(s.value, 1.0 / (1.0 + t.exp()), max_relative = 1e-9);
        // ∫ F'(traj) = t - 2 ln((1+e^t)/2)
        let expect = t - 2.0 * ((1.0 + t.exp()) / 2.0).ln();
        assert_relative_eq!(s.drift_deriv_integral, expect, epsilon = 1e-8);
        assert_eq!(s.status, FlowStatus::InDomain);
    }

    #[test]
    fn asymptotic_approach_is_not_an_exit() {
        // the logistic trajectory tends to 0 but never leaves (0, 1)
        let p = logistic();
        let s = flow(&p, 0.25, 60.0, &FlowConfig::default()).unwrap();
        assert_eq!(s.status, FlowStatus::InDomain);
        assert!(s.value > 0.0 && s.value < 1e-20);
    }

    #[test]
    fn translation_backward_exit_is_localized() {
        let p = Problem::new(Interval::new(0.0, f64::INFINITY).unwrap(), "1", "0", "0", "exp(-x)", 1.0)
            .unwrap();
        let s = backward_flow(&p, 1.0, 2.0, &FlowConfig::default()).unwrap();
        match s.status {
            FlowStatus::ExitedAt { t } => assert_relative_eq!(t, 1.0, epsilon = 1e-9),
            other => panic!("expected an exit, got {other:?}"),
        }
        assert!(s.value.abs() < 1e-9);
    }

    #[test]
    fn linear_backward_exit_time_is_log() {
        // backward orbit of x0 = 1/2 under F = -x on (0,1) is x0 e^u,
        // reaching 1 at u = ln 2
        let p = Problem::new(Interval::new(0.0, 1.0).unwrap(), "-x", "0", "0", "1", 1.0).unwrap();
        let s = backward_flow(&p, 0.5, 1.0, &FlowConfig::default()).unwrap();
        match s.status {
            FlowStatus::ExitedAt { t } => assert_relative_eq!(t, 2.0f64.ln(), epsilon = 1e-9),
            other => panic!("expected an exit, got {other:?}"),
        }
        let s = backward_flow(&p, 0.5, 0.5, &FlowConfig::default()).unwrap();
        assert_eq!(s.status, FlowStatus::InDomain);
        assert_relative_eq!(s.value, 0.5 * 0.5f64.exp(), max_relative = 1e-9);
    }

    #[test]
    fn equilibrium_seed_short_circuits() {
        let p = logistic();
        let s = flow(&p, 1e-20, 100.0, &FlowConfig::default()).unwrap();
        assert_eq!(s.value, 1e-20);
        assert_eq!(s.status, FlowStatus::InDomain);
        // h ≡ 0 here; the divergence accumulates F'(x0) ≈ -1 per unit time
        assert_relative_eq!(s.drift_deriv_integral, -100.0, max_relative = 1e-10);
    }

    #[test]
    fn curve_matches_individual_flows() {
        let p = logistic();
        let times = [0.3, 0.7, 1.1];
        let curve = flow_curve(&p, 0.37, &times, Direction::Forward, &FlowConfig::default()).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let single = flow(&p, 0.37, t, &FlowConfig::default()).unwrap();
            assert_relative_eq!(curve[i].value, single.value, max_relative = 1e-8);
            assert_relative_eq!(
                curve[i].drift_deriv_integral,
                single.drift_deriv_integral,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn quadratic_blowup_reports_exit() {
        let p = Problem::new(Interval::line(), "x^2", "0", "0", "exp(-abs(x))", 1.0).unwrap();
        let s = flow(&p, 1.0, 2.0, &FlowConfig::default()).unwrap();
        match s.status {
            // 1/(1-t) crosses the 1e12 threshold at t = 1 - 1e-12
            FlowStatus::ExitedAt { t } => assert_relative_eq!(t, 1.0, epsilon = 1e-6),
            other => panic!("expected blow-up exit, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_time_grids_and_outside_seeds() {
        let p = logistic();
        assert!(flow_curve(&p, 0.5, &[1.0, 0.5], Direction::Forward, &FlowConfig::default()).is_err());
        assert!(flow_curve(&p, 0.5, &[-1.0], Direction::Forward, &FlowConfig::default()).is_err());
        assert!(flow(&p, 1.5, 1.0, &FlowConfig::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn semigroup_law(x0 in 0.05f64..0.95, s in 0.01f64..2.0, t in 0.01f64..2.0) {
            let p = logistic();
            let cfg = FlowConfig::default();
            let whole = flow(&p, x0, s + t, &cfg).unwrap();
            let first = flow(&p, x0, s, &cfg).unwrap();
            let second = flow(&p, first.value, t, &cfg).unwrap();
            prop_assert!((whole.value - second.value).abs() < 1e-7 * (1.0 + whole.value.abs()));
        }

        #[test]
        fn weight_integral_is_additive_along_the_orbit(
            x0 in 0.1f64..0.9, s in 0.01f64..1.5, t in 0.01f64..1.5,
        ) {
            let p = Problem::new(
                Interval::new(0.0, 1.0).unwrap(), "-x*(1-x)", "sin(3*x)", "cos(x)", "1", 1.0,
            ).unwrap();
            let cfg = FlowConfig::default();
            let whole = flow(&p, x0, s + t, &cfg).unwrap();
            let a = flow(&p, x0, s, &cfg).unwrap();
            let b = flow(&p, a.value, t, &cfg).unwrap();
            prop_assert!((whole.log_weight_re - (a.log_weight_re + b.log_weight_re)).abs() < 1e-7);
            prop_assert!((whole.log_weight_im - (a.log_weight_im + b.log_weight_im)).abs() < 1e-7);
        }

        #[test]
        fn trajectories_preserve_the_sign_of_the_seed(x0 in 0.1f64..10.0, t in 0.0f64..5.0) {
            // 0 is an equilibrium of F = -x, so positive seeds stay positive
            let p = linear_decay();
            let s = flow(&p, x0, t, &FlowConfig::default()).unwrap();
            prop_assert!(s.value > 0.0);
        }
    }
}
