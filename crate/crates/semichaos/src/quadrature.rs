//! Adaptive Gauss–Kronrod quadrature and a three-way classifier
//! (convergent / divergent / inconclusive) for improper integrals.
//!
//! The classifier drives the chaos criterion: it walks dyadic shells toward a
//! singular or infinite endpoint, watches the shell increments, and decides
//! from their geometric behaviour plus a fitted local power-law exponent.
//! Borderline exponents (within `margin` of the critical -1) stay
//! inconclusive unless the increments themselves are non-decaying, which is
//! direct evidence of divergence.

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae (non-negative half), embedding 7-point Gauss.
#[allow(clippy::excessive_precision)] // published table values
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)] // published table values
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)] // published table values
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

pub const MAX_SUBDIVISIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
}

/// One Gauss–Kronrod 15 application on [a, b].
/// Returns (kronrod, error_estimate, integral of |f|).
fn gk15<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut samples = [0.0f64; 15];
    for (i, &xi) in XGK.iter().enumerate() {
        let off = half * xi;
        let (lo, hi) = (mid - off, mid + off);
        let v_lo = f(lo)?;
        if !v_lo.is_finite() {
            return Err(Error::Domain {
                subexpr: String::new(),
                x: lo,
                reason: "integrand sample is not finite".into(),
            });
        }
        samples[i] = v_lo;
        if i < 7 {
            let v_hi = f(hi)?;
            if !v_hi.is_finite() {
                return Err(Error::Domain {
                    subexpr: String::new(),
                    x: hi,
                    reason: "integrand sample is not finite".into(),
                });
            }
            samples[14 - i] = v_hi;
        }
    }
    let mut kron = 0.0;
    let mut resabs = 0.0;
    for i in 0..8 {
        let pair = if i < 7 {
            samples[i] + samples[14 - i]
        } else {
            samples[7]
        };
        kron += WGK[i] * pair;
        resabs += WGK[i]
            * if i < 7 {
                samples[i].abs() + samples[14 - i].abs()
            } else {
                samples[7].abs()
            };
    }
    let mut gauss = 0.0;
    for (j, &w) in WG.iter().enumerate() {
        let i = 2 * j + 1;
        let pair = if i < 7 {
            samples[i] + samples[14 - i]
        } else {
            samples[7]
        };
        gauss += w * pair;
    }
    let reskh = kron * 0.5;
    let mut resasc = 0.0;
    for i in 0..8 {
        let dev = if i < 7 {
            (samples[i] - reskh).abs() + (samples[14 - i] - reskh).abs()
        } else {
            (samples[7] - reskh).abs()
        };
        resasc += WGK[i] * dev;
    }
    let raw = ((kron - gauss) * half).abs();
    let resasc = resasc * half.abs();
    let resabs = resabs * half.abs();
    let mut err = raw;
    if resasc != 0.0 && raw != 0.0 {
        err = resasc * (200.0 * raw / resasc).powf(1.5).min(1.0);
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > tiny {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((kron * half, err, resabs))
}

/// Adaptive quadrature on a finite interval: splits the segment with the
/// largest error estimate until the summed estimate is below
/// `tol * (1 + |value|)`, or the subdivision budget runs out.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    assert!(
        a.is_finite() && b.is_finite(),
        "integrate expects a finite interval"
    );
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
        });
    }
    struct Seg {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    }
    let (v0, e0, _) = gk15(&f, a, b)?;
    let mut segs = vec![Seg {
        a,
        b,
        value: v0,
        error: e0,
    }];
    loop {
        let mut total_v = 0.0;
        let mut total_e = 0.0;
        let mut worst = 0usize;
        for (i, s) in segs.iter().enumerate() {
            total_v += s.value;
            total_e += s.error;
            if s.error > segs[worst].error {
                worst = i;
            }
        }
        if !total_v.is_finite() {
            return Err(Error::Domain {
                subexpr: String::new(),
                x: segs[worst].a,
                reason: "integral accumulated a non-finite value".into(),
            });
        }
        if total_e <= tol * (1.0 + total_v.abs()) {
            return Ok(QuadResult {
                value: total_v,
                error: total_e,
            });
        }
        if segs.len() >= MAX_SUBDIVISIONS {
            return Err(Error::MaxSubdivisions {
                a,
                b,
                max_subdivisions: MAX_SUBDIVISIONS,
            });
        }
        let Seg { a: sa, b: sb, .. } = segs[worst];
        let m = 0.5 * (sa + sb);
        if m <= sa || m >= sb {
            // segment no longer splittable in f64; accept what we have
            let mid_err = segs[worst].error;
            if mid_err > tol.max(1e-300) * (1.0 + total_v.abs()) {
                return Err(Error::MaxSubdivisions {
                    a,
                    b,
                    max_subdivisions: MAX_SUBDIVISIONS,
                });
            }
            return Ok(QuadResult {
                value: total_v,
                error: total_e,
            });
        }
        let (vl, el, _) = gk15(&f, sa, m)?;
        let (vr, er, _) = gk15(&f, m, sb)?;
        segs[worst] = Seg {
            a: sa,
            b: m,
            value: vl,
            error: el,
        };
        segs.push(Seg {
            a: m,
            b: sb,
            value: vr,
            error: er,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// The integrand extends continuously; no tail analysis needed.
    Regular,
    /// Finite endpoint where the integrand may blow up.
    Singular,
    /// The endpoint is at +/- infinity.
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegralClass {
    Convergent {
        value: f64,
        error: f64,
        evidence: String,
    },
    Divergent {
        evidence: String,
    },
    Inconclusive {
        evidence: String,
    },
}

impl IntegralClass {
    pub fn tag(&self) -> &'static str {
        match self {
            IntegralClass::Convergent { .. } => "Convergent",
            IntegralClass::Divergent { .. } => "Divergent",
            IntegralClass::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn evidence(&self) -> &str {
        match self {
            IntegralClass::Convergent { evidence, .. }
            | IntegralClass::Divergent { evidence }
            | IntegralClass::Inconclusive { evidence } => evidence,
        }
    }

    pub fn value(&self) -> Option<(f64, f64)> {
        match self {
            IntegralClass::Convergent { value, error, .. } => Some((*value, *error)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImproperConfig {
    /// Relative tolerance target for a Convergent value.
    pub tol: f64,
    /// Number of dyadic shells walked toward each endpoint.
    pub shells: usize,
    /// Geometric-decay acceptance ratio for the Cauchy tail bound.
    pub ratio_max: f64,
    /// Half-width of the indecision band around tail exponent -1.
    pub margin: f64,
    /// First shell distance as a fraction of the anchor gap (finite endpoints).
    pub eps0_frac: f64,
    /// First shell width for infinite endpoints.
    pub r0: f64,
}

impl Default for ImproperConfig {
    fn default() -> Self {
        ImproperConfig {
            tol: 1e-8,
            shells: 40,
            ratio_max: 0.9,
            margin: 0.05,
            eps0_frac: 0.125,
            r0: 1.0,
        }
    }
}

/// Whether the dyadic walk approaches a finite point or runs to infinity.
/// Determines on which side of -1 a fitted exponent indicates divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TailDirection {
    TowardFinite,
    TowardInfinite,
}

/// Shared increment-sequence classifier. `flowcheck` reuses it for time
/// integrals computed along trajectories, so it is independent of how the
/// shell increments were produced.
#[derive(Debug, Clone)]
pub(crate) struct TailSequence {
    pub direction: TailDirection,
    /// Signed shell increments, outermost first.
    increments: Vec<f64>,
    /// (log distance, log |f|) samples for the exponent fit.
    samples: Vec<(f64, f64)>,
    quad_error: f64,
    pub base_value: f64,
    saw_nonfinite: bool,
    saw_sign_change: bool,
    notes: Vec<String>,
}

const DECISION_WINDOW: usize = 8;
/// Increment ratios above this count as "not decaying".
const NO_DECAY: f64 = 0.999;

impl TailSequence {
    pub fn new(direction: TailDirection, base_value: f64, base_error: f64) -> Self {
        TailSequence {
            direction,
            increments: Vec::new(),
            samples: Vec::new(),
            quad_error: base_error,
            base_value,
            saw_nonfinite: false,
            saw_sign_change: false,
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn push(&mut self, increment: f64, error: f64, sample: Option<(f64, f64)>) {
        if !increment.is_finite() {
            self.saw_nonfinite = true;
        } else {
            if let Some(prev) = self.increments.last() {
                if prev * increment < 0.0
                    && increment.abs() > 1e-14 * (1.0 + self.partial().abs())
                {
                    self.saw_sign_change = true;
                }
            }
            self.increments.push(increment);
            self.quad_error += error;
        }
        if let Some((dist, magnitude)) = sample {
            if dist > 0.0 && magnitude.is_finite() && magnitude > 0.0 {
                self.samples.push((dist.ln(), magnitude.ln()));
            } else if magnitude.is_infinite() {
                self.saw_nonfinite = true;
            }
        }
    }

    pub fn partial(&self) -> f64 {
        self.base_value + self.increments.iter().sum::<f64>()
    }

    /// Geometric mean ratio of |increments| over the decision window.
    fn ratio(&self) -> Option<f64> {
        let n = self.increments.len();
        if n < 2 {
            return None;
        }
        let w = DECISION_WINDOW.min(n - 1);
        let first = self.increments[n - 1 - w].abs();
        let last = self.increments[n - 1].abs();
        if last == 0.0 {
            return Some(0.0);
        }
        if first == 0.0 {
            return None;
        }
        Some((last / first).powf(1.0 / w as f64))
    }

    /// Least-squares slope of log|f| against log distance over the window.
    fn exponent(&self) -> Option<f64> {
        let n = self.samples.len();
        if n < 4 {
            return None;
        }
        let w = DECISION_WINDOW.min(n);
        let pts = &self.samples[n - w..];
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / w as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / w as f64;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            None
        } else {
            Some(sxy / sxx)
        }
    }

    /// Is a fitted exponent on the divergent side of the critical -1?
    fn exponent_divergent(&self, s: f64, margin: f64) -> bool {
        match self.direction {
            TailDirection::TowardFinite => s <= -1.0 + margin,
            TailDirection::TowardInfinite => s >= -1.0 - margin,
        }
    }

    /// Clearly on the integrable side of -1?
    fn exponent_convergent(&self, s: f64, margin: f64) -> bool {
        match self.direction {
            TailDirection::TowardFinite => s > -1.0 + margin,
            TailDirection::TowardInfinite => s < -1.0 - margin,
        }
    }

    fn describe(&self, cfg: &ImproperConfig) -> String {
        let mut s = format!(
            "shells={} partial={:.6e}",
            self.increments.len(),
            self.partial()
        );
        if let Some(r) = self.ratio() {
            s.push_str(&format!(" ratio={r:.4}"));
        }
        if let Some(e) = self.exponent() {
            s.push_str(&format!(" exponent={e:.3} (margin {})", cfg.margin));
        }
        if self.saw_sign_change {
            s.push_str("; sign-changing increments, classified absolutely");
        }
        for n in &self.notes {
            s.push_str("; ");
            s.push_str(n);
        }
        s
    }

    /// Mid-walk decision. Returns `Some` once the evidence is conclusive.
    pub fn decide_early(&self, cfg: &ImproperConfig) -> Option<IntegralClass> {
        if self.saw_nonfinite {
            return Some(self.decide_nonfinite(cfg));
        }
        if self.increments.len() < DECISION_WINDOW + 1 {
            return None;
        }
        let r = self.ratio()?;
        if r < 1.0 {
            let last = self.increments.last().copied().unwrap_or(0.0);
            let tail = last.abs() * r / (1.0 - r);
            if r <= cfg.ratio_max && tail <= 0.5 * cfg.tol * (1.0 + self.partial().abs()) {
                return Some(self.convergent(tail, last.signum(), r, cfg));
            }
            return None;
        }
        // increments not decaying over a full window: divergence if the
        // sampled exponent agrees
        let window_monotone = {
            let n = self.increments.len();
            let w = &self.increments[n - DECISION_WINDOW..];
            w.windows(2).all(|p| p[1].abs() >= p[0].abs() * NO_DECAY)
        };
        if window_monotone {
            if let Some(s) = self.exponent() {
                if self.exponent_divergent(s, cfg.margin) {
                    return Some(IntegralClass::Divergent {
                        evidence: format!(
                            "non-decaying increments over {DECISION_WINDOW} shells; {}",
                            self.describe(cfg)
                        ),
                    });
                }
            }
        }
        None
    }

    fn decide_nonfinite(&self, cfg: &ImproperConfig) -> IntegralClass {
        // overflow while walking outward: divergence when the finite prefix
        // was already growing, otherwise refuse to guess
        let growing = self
            .increments
            .len()
            .checked_sub(3)
            .map(|i| {
                self.increments[i..]
                    .windows(2)
                    .all(|p| p[1].abs() >= p[0].abs())
            })
            .unwrap_or(true);
        if growing {
            IntegralClass::Divergent {
                evidence: format!(
                    "integrand overflowed while approaching the endpoint; {}",
                    self.describe(cfg)
                ),
            }
        } else {
            IntegralClass::Inconclusive {
                evidence: format!(
                    "non-finite integrand sample without growth evidence; {}",
                    self.describe(cfg)
                ),
            }
        }
    }

    fn convergent(&self, tail: f64, sign: f64, r: f64, cfg: &ImproperConfig) -> IntegralClass {
        let value = self.partial() + sign * tail;
        // the geometric extrapolation is exact for exactly-geometric
        // increments; its uncertainty scales with the observed ratio spread
        let spread = {
            let n = self.increments.len();
            let w = DECISION_WINDOW.min(n.saturating_sub(1));
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for p in self.increments[n - 1 - w..].windows(2) {
                if p[0] != 0.0 {
                    let q = (p[1] / p[0]).abs();
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
            if hi > 0.0 && lo.is_finite() && r > 0.0 {
                (hi - lo) / r
            } else {
                1.0
            }
        };
        IntegralClass::Convergent {
            value,
            error: self.quad_error / (1.0 - r).max(0.05) + tail * (2.0 * spread + 1e-9),
            evidence: format!(
                "geometric tail bound {tail:.3e} at ratio {r:.4}; {}",
                self.describe(cfg)
            ),
        }
    }

    /// Final decision after the shell budget is exhausted.
    pub fn decide_final(&self, cfg: &ImproperConfig) -> IntegralClass {
        if self.saw_nonfinite {
            return self.decide_nonfinite(cfg);
        }
        if let Some(c) = self.decide_early(cfg) {
            return c;
        }
        let Some(r) = self.ratio() else {
            // increments vanished identically
            return IntegralClass::Convergent {
                value: self.partial(),
                error: self.quad_error,
                evidence: format!("increments vanished; {}", self.describe(cfg)),
            };
        };
        let exp = self.exponent();
        if r < NO_DECAY {
            let last = self.increments.last().copied().unwrap_or(0.0);
            let tail = last.abs() * r / (1.0 - r);
            // decaying but not fast enough for the Cauchy criterion within
            // budget; accept when the sampled exponent is clearly integrable
            if let Some(s) = exp {
                if self.exponent_convergent(s, cfg.margin) {
                    return self.convergent(tail, last.signum(), r, cfg);
                }
            }
            return IntegralClass::Inconclusive {
                evidence: format!(
                    "increments decay too slowly and exponent is borderline; {}",
                    self.describe(cfg)
                ),
            };
        }
        if let Some(s) = exp {
            if self.exponent_divergent(s, cfg.margin) {
                return IntegralClass::Divergent {
                    evidence: format!("non-decaying increments; {}", self.describe(cfg)),
                };
            }
        }
        IntegralClass::Inconclusive {
            evidence: format!(
                "increments not decaying but exponent fit is not divergent; {}",
                self.describe(cfg)
            ),
        }
    }
}

fn shell_integral<F>(f: &F, lo: f64, hi: f64, cfg: &ImproperConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate(f, lo, hi, cfg.tol * 0.01)
}

/// Walks dyadic shells from `anchor` toward `endpoint` (finite) or outward
/// (infinite) and classifies the tail.
fn classify_tail<F>(f: &F, endpoint: f64, anchor: f64, kind: BoundaryKind, cfg: &ImproperConfig) -> IntegralClass
where
    F: Fn(f64) -> Result<f64>,
{
    debug_assert!(kind != BoundaryKind::Regular);
    let infinite = kind == BoundaryKind::Infinite;
    let toward = if infinite {
        TailDirection::TowardInfinite
    } else {
        TailDirection::TowardFinite
    };
    // signed direction from anchor toward the endpoint
    let dir = if infinite {
        if endpoint > 0.0 {
            1.0
        } else {
            -1.0
        }
    } else if endpoint > anchor {
        1.0
    } else {
        -1.0
    };
    // distance of the first shell edge from the endpoint (finite case) or
    // from the anchor (infinite case)
    let d0 = if infinite {
        cfg.r0.max(1e-12)
    } else {
        (endpoint - anchor).abs() * cfg.eps0_frac
    };
    // position of the k-th shell edge
    let edge = |k: usize| -> f64 {
        if infinite {
            anchor + dir * d0 * (2.0f64).powi(k as i32)
        } else {
            endpoint - dir * d0 * (2.0f64).powi(-(k as i32))
        }
    };
    // distance-to-endpoint used in the exponent fit
    let dist = |x: f64| -> f64 {
        if infinite {
            x.abs().max(f64::MIN_POSITIVE)
        } else {
            (x - endpoint).abs()
        }
    };

    let base = match shell_integral(f, anchor.min(edge(0)), anchor.max(edge(0)), cfg) {
        Ok(q) => q,
        Err(e) => {
            return IntegralClass::Inconclusive {
                evidence: format!("base segment failed: {e}"),
            }
        }
    };
    let mut seq = TailSequence::new(toward, base.value, base.error);
    for k in 1..=cfg.shells {
        let (lo, hi) = {
            let e0 = edge(k - 1);
            let e1 = edge(k);
            (e0.min(e1), e0.max(e1))
        };
        if lo == hi || !lo.is_finite() || !hi.is_finite() {
            seq.note("shell collapsed to zero width in f64");
            break;
        }
        let inc = shell_integral(f, lo, hi, cfg);
        // geometric midpoint of the shell (in distance-to-endpoint terms for
        // finite endpoints, in absolute coordinate for infinite ones)
        let gm = if infinite {
            if lo > 0.0 {
                (lo * hi).sqrt()
            } else if hi < 0.0 {
                -((lo * hi).sqrt())
            } else {
                0.5 * (lo + hi)
            }
        } else {
            let d = (dist(lo) * dist(hi)).sqrt();
            if lo >= endpoint {
                endpoint + d
            } else {
                endpoint - d
            }
        };
        let sample = f(gm).ok().map(|v| (dist(gm), v.abs()));
        match inc {
            Ok(q) => seq.push(q.value, q.error, sample),
            Err(Error::Domain { x, reason, .. }) if reason.contains("not finite") => {
                seq.push(f64::INFINITY, 0.0, sample);
                seq.note(format!("overflow at x = {x:.6e}"));
            }
            Err(e) => {
                seq.note(format!("shell {k} failed: {e}"));
                break;
            }
        }
        if let Some(c) = seq.decide_early(cfg) {
            return c;
        }
    }
    seq.decide_final(cfg)
}

/// Classifies the improper integral of `f` over the open interval (a, b).
///
/// Endpoint kinds must be consistent with the coordinates (an infinite
/// coordinate requires `Infinite`). When both endpoints need tail analysis
/// the interval is cut at `split` (or a scale-aware default) and the halves
/// are combined: any divergence dominates, otherwise any indecision.
pub fn classify_improper<F>(
    f: F,
    a: f64,
    b: f64,
    left: BoundaryKind,
    right: BoundaryKind,
    split: Option<f64>,
    cfg: &ImproperConfig,
) -> IntegralClass
where
    F: Fn(f64) -> Result<f64>,
{
    assert!(a < b, "empty or inverted interval");
    assert_eq!(a.is_infinite(), left == BoundaryKind::Infinite);
    assert_eq!(b.is_infinite(), right == BoundaryKind::Infinite);

    match (left == BoundaryKind::Regular, right == BoundaryKind::Regular) {
        (true, true) => match integrate(&f, a, b, cfg.tol) {
            Ok(q) => IntegralClass::Convergent {
                value: q.value,
                error: q.error,
                evidence: "proper integral".into(),
            },
            Err(e) => IntegralClass::Inconclusive {
                evidence: format!("proper integral failed: {e}"),
            },
        },
        (false, true) => classify_tail(&f, a, b, left, cfg),
        (true, false) => classify_tail(&f, b, a, right, cfg),
        (false, false) => {
            let c = split.unwrap_or_else(|| default_split(a, b));
            assert!(a < c && c < b, "split point must be interior");
            let lhs = classify_tail(&f, a, c, left, cfg);
            let rhs = classify_tail(&f, b, c, right, cfg);
            combine(lhs, rhs)
        }
    }
}

/// Midpoint for bounded intervals, unit offset from the finite end for
/// half-lines, origin for the full line.
pub fn default_split(a: f64, b: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a + 1.0,
        (false, true) => b - 1.0,
        (false, false) => 0.0,
    }
}

/// Combines classifications of adjacent pieces: values add, divergence
/// dominates, indecision is contagious short of divergence.
pub fn combine(a: IntegralClass, b: IntegralClass) -> IntegralClass {
    use IntegralClass::*;
    match (a, b) {
        (Divergent { evidence }, _) | (_, Divergent { evidence }) => Divergent { evidence },
        (Inconclusive { evidence }, _) | (_, Inconclusive { evidence }) => {
            Inconclusive { evidence }
        }
        (
            Convergent {
                value: v1,
                error: e1,
                evidence: ev1,
            },
            Convergent {
                value: v2,
                error: e2,
                evidence: ev2,
            },
        ) => Convergent {
            value: v1 + v2,
            error: e1 + e2,
            evidence: format!("[{ev1}] + [{ev2}]"),
        },
    }
}
