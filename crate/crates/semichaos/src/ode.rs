//! Embedded Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! Small fixed-dimension systems only: the flow of the scalar field plus its
//! accumulated weight/divergence integrals. The dense interpolant is the
//! classical 4th-order one built from the seven stages; it is what event
//! localization bisects on.

use crate::error::{Error, Result};

// Butcher tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// 5th-order minus embedded 4th-order weights (error coefficients)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output coefficients
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const MAX_STEPS: usize = 5_000_000;

/// One accepted step with its dense interpolant.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Evaluates the interpolant at `t` in [t0, t1].
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rcont[0][i]
                + s * (self.rcont[1][i]
                    + s1 * (self.rcont[2][i]
                        + s * (self.rcont[3][i] + s1 * self.rcont[4][i])));
        }
        out
    }
}

pub(crate) struct Dopri5<const N: usize, F>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    rhs: F,
    pub t: f64,
    pub y: [f64; N],
    k1: [f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
    h_max: f64,
    pub steps: usize,
}

fn rms<const N: usize>(v: &[f64; N], sc: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        s += (v[i] / sc[i]).powi(2);
    }
    (s / N as f64).sqrt()
}

impl<const N: usize, F> Dopri5<N, F>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    pub fn new(mut rhs: F, t0: f64, y0: [f64; N], rtol: f64, atol: f64, h_max: f64) -> Result<Self> {
        let k1 = rhs(t0, &y0)?;
        // standard starting-step heuristic: match the scale of y against the
        // scale of y', then probe one Euler step
        let mut sc = [0.0; N];
        for i in 0..N {
            sc[i] = atol + rtol * y0[i].abs();
        }
        let d0 = rms(&y0, &sc);
        let d1 = rms(&k1, &sc);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(h_max);
        let mut y1 = y0;
        for i in 0..N {
            y1[i] += h0 * k1[i];
        }
        let k2 = rhs(t0 + h0, &y1)?;
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = k2[i] - k1[i];
        }
        let d2 = rms(&diff, &sc) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        let h = (100.0 * h0).min(h1).min(h_max);
        Ok(Dopri5 {
            rhs,
            t: t0,
            y: y0,
            k1,
            h,
            rtol,
            atol,
            h_max,
            steps: 0,
        })
    }

    /// Clamps the next proposed step size (stability cap from the caller;
    /// the error controller alone can push h outside the stability region
    /// once the solution decays below the absolute tolerance).
    pub fn limit_h(&mut self, cap: f64) {
        if cap.is_finite() && cap > 0.0 {
            self.h = self.h.min(cap);
        }
    }

    /// Advances one accepted step, without stepping past `t_limit`.
    pub fn step_toward(&mut self, t_limit: f64) -> Result<DenseStep<N>> {
        debug_assert!(t_limit > self.t);
        let mut h = self.h.min(self.h_max);
        let mut rejected = false;
        loop {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::Stiffness {
                    t: self.t,
                    x: self.y[0],
                });
            }
            let floor = 1e-14 * self.t.abs().max(1.0);
            if h < floor {
                return Err(Error::Stiffness {
                    t: self.t,
                    x: self.y[0],
                });
            }
            let clamped = h >= t_limit - self.t;
            let hs = if clamped { t_limit - self.t } else { h };

            let mut k = [[0.0; N]; 7];
            k[0] = self.k1;
            let stage = |a: &[f64], k: &[[f64; N]; 7], y: &[f64; N], hs: f64| {
                let mut ys = *y;
                for (j, &aj) in a.iter().enumerate() {
                    if aj != 0.0 {
                        for i in 0..N {
                            ys[i] += hs * aj * k[j][i];
                        }
                    }
                }
                ys
            };
            k[1] = (self.rhs)(self.t + C[1] * hs, &stage(&A2, &k, &self.y, hs))?;
            k[2] = (self.rhs)(self.t + C[2] * hs, &stage(&A3, &k, &self.y, hs))?;
            k[3] = (self.rhs)(self.t + C[3] * hs, &stage(&A4, &k, &self.y, hs))?;
            k[4] = (self.rhs)(self.t + C[4] * hs, &stage(&A5, &k, &self.y, hs))?;
            k[5] = (self.rhs)(self.t + C[5] * hs, &stage(&A6, &k, &self.y, hs))?;
            let y1 = stage(&A7, &k, &self.y, hs);
            k[6] = (self.rhs)(self.t + hs, &y1)?;

            let mut sc = [0.0; N];
            for i in 0..N {
                sc[i] = self.atol + self.rtol * self.y[i].abs().max(y1[i].abs());
            }
            let mut errv = [0.0; N];
            for i in 0..N {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * k[j][i];
                }
                errv[i] = hs * e;
            }
            let err = rms(&errv, &sc);

            if !err.is_finite() {
                h *= 0.25;
                rejected = true;
                continue;
            }
            if err > 1.0 {
                let fac = (0.9 * err.powf(-0.2)).max(0.2);
                h = hs * fac;
                rejected = true;
                continue;
            }

            // accept
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - self.y[i];
                let bspl = hs * k[0][i] - ydiff;
                rcont[0][i] = self.y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - hs * k[6][i] - bspl;
                let mut d = 0.0;
                for j in 0..7 {
                    d += D[j] * k[j][i];
                }
                rcont[4][i] = hs * d;
            }
            let out = DenseStep {
                t0: self.t,
                h: hs,
                rcont,
            };

            self.t += hs;
            self.y = y1;
            self.k1 = k[6]; // FSAL
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            if rejected {
                fac = fac.min(1.0);
            }
            self.h = (hs * fac.clamp(0.2, 5.0)).min(self.h_max);
            return Ok(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_tight_tolerance() {
        let mut s = Dopri5::new(
            |_t, y: &[f64; 1]| Ok([-y[0]]),
            0.0,
            [1.0],
            1e-12,
            1e-14,
            f64::INFINITY,
        )
        .unwrap();
        while s.t < 5.0 {
            s.step_toward(5.0).unwrap();
        }
        assert!((s.y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn dense_output_matches_direct_integration() {
        // integrate y' = cos(t) and compare the interpolant against sin(t)
        // inside each accepted step
        let mut s = Dopri5::new(
            |t: f64, _y: &[f64; 1]| Ok([t.cos()]),
            0.0,
            [0.0],
            1e-10,
            1e-12,
            0.5,
        )
        .unwrap();
        let mut worst: f64 = 0.0;
        while s.t < 10.0 {
            let step = s.step_toward(10.0).unwrap();
            for m in 1..8 {
                let t = step.t0 + step.h * (m as f64) / 8.0;
                let v = step.eval(t)[0];
                worst = worst.max((v - t.sin()).abs());
            }
        }
        assert!(worst < 1e-9, "dense output error {worst}");
    }

    #[test]
    fn observed_order_is_five() {
        // global error on y' = y over [0,1] should scale ~ tol
        let run = |rtol: f64| -> f64 {
            let mut s = Dopri5::new(
                |_t, y: &[f64; 1]| Ok([y[0]]),
                0.0,
                [1.0],
                rtol,
                rtol * 1e-2,
                f64::INFINITY,
            )
            .unwrap();
            while s.t < 1.0 {
                s.step_toward(1.0).unwrap();
            }
            (s.y[0] - 1.0f64.exp()).abs()
        };
        let e1 = run(1e-6);
        let e2 = run(1e-10);
        assert!(e2 < e1, "tightening tolerance must reduce error");
        assert!(e2 < 1e-9, "e2 = {e2}");
    }

    #[test]
    fn stiffness_error_instead_of_hang() {
        // finite-time blow-up: y' = y^2, y(0)=1 blows up at t=1
        let mut s = Dopri5::new(
            |_t, y: &[f64; 1]| Ok([y[0] * y[0]]),
            0.0,
            [1.0],
            1e-10,
            1e-12,
            f64::INFINITY,
        )
        .unwrap();
        let r = loop {
            match s.step_toward(2.0) {
                Ok(_) => {
                    if s.t >= 2.0 || !s.y[0].is_finite() || s.y[0] > 1e15 {
                        break Ok(());
                    }
                }
                Err(e) => break Err(e),
            }
        };
        // either the state explodes past our check or the stepper reports
        // stiffness; it must not integrate through the singularity
        match r {
            Ok(()) => assert!(s.t <= 1.01, "integrated past the blow-up: t = {}", s.t),
            Err(Error::Stiffness { t, .. }) => assert!(t <= 1.01),
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }
}
