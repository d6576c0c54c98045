//! Zero set of the drift and the component intervals of its complement.
//!
//! Zeros are located on a uniform grid over the clipped domain plus dyadic
//! octave shells toward each endpoint, so families that accumulate at an
//! endpoint (frequencies 1/(kπ) of an oscillating drift, say) are walked
//! scale by scale instead of being missed between uniform grid points. Sign
//! changes are refined by bisection; zeros of even multiplicity, which never
//! change sign, are picked up as |F| minima whose derivative changes sign.
//! Runs of consecutive grid points with |F| below the flat tolerance are
//! reported as flat intervals — positive-measure zero-set witnesses — rather
//! than as individual zeros.
//!
//! Only zeros that push past the innermost (or outermost) one already known
//! count toward the per-direction cap, so aliased re-finds in mid-domain
//! shells cannot exhaust it. Enumeration toward an endpoint is truncated —
//! the flag is set and the region between the last enumerated zero and the
//! endpoint is reported as unenumerated — when that cap is hit, when zeros
//! persist down to the resolution floor of a finite endpoint, or when they
//! reach the sampling horizon of an infinite one. Limitations are inherent
//! to sampling: zero sets of positive measure without interior (fat Cantor
//! sets) surface as flat intervals when sampling cannot separate them, a
//! drift that underflows to zero over a region is indistinguishable from a
//! flat piece, and sign changes denser than the sampling resolution are
//! noted rather than enumerated.

use crate::expr::Expr;
use crate::model::Interval;

#[derive(Debug, Clone)]
pub struct ZeroSetConfig {
    /// Uniform grid resolution over the clipped domain.
    pub grid_n: usize,
    /// Sample count per octave shell.
    pub shell_points: usize,
    /// Enumeration cap per endpoint direction.
    pub cap: usize,
    pub clip_delta: f64,
    pub clip_cap: f64,
}

impl Default for ZeroSetConfig {
    fn default() -> Self {
        ZeroSetConfig {
            grid_n: 2048,
            shell_points: 256,
            cap: 512,
            clip_delta: 1e-6,
            clip_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ZeroSet {
    /// Isolated zeros, ascending.
    pub zeros: Vec<f64>,
    /// Maximal sampled intervals on which |F| stays below the flat tolerance.
    pub flat_intervals: Vec<(f64, f64)>,
    /// Enumeration toward that endpoint is incomplete (cap or horizon hit).
    pub truncated_lo: bool,
    pub truncated_hi: bool,
    /// Zeros keep appearing at every resolved scale toward that endpoint.
    pub accumulation_lo: bool,
    pub accumulation_hi: bool,
    /// |F| scale the tolerances were relative to.
    pub scale: f64,
    pub notes: Vec<String>,
}

impl ZeroSet {
    pub fn truncated(&self) -> bool {
        self.truncated_lo || self.truncated_hi
    }

    /// Regions adjacent to an endpoint whose zeros were not enumerated
    /// (between the endpoint and the innermost enumerated zero).
    pub fn unenumerated(&self, omega: Interval) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if self.truncated_lo {
            if let Some(&z) = self.zeros.first() {
                out.push((omega.lo, z));
            }
        }
        if self.truncated_hi {
            if let Some(&z) = self.zeros.last() {
                out.push((z, omega.hi));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointKind {
    DriftZero,
    DomainBoundary,
    Infinite,
}

/// One connected component of {F ≠ 0}, with the provenance of each endpoint
/// and the sign of F on it.
#[derive(Debug, Clone, Copy)]
pub struct Component {
    pub lo: f64,
    pub hi: f64,
    pub lo_kind: EndpointKind,
    pub hi_kind: EndpointKind,
    pub sign: i8,
}

impl Component {
    /// Interior representative: midpoint for bounded components, unit-scale
    /// offset from the finite end otherwise.
    pub fn representative(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + (1.0 + 0.5 * self.lo.abs()),
            (false, true) => self.hi - (1.0 + 0.5 * self.hi.abs()),
            (false, false) => 0.0,
        }
    }
}

fn bisect_root(f: impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64) -> Option<f64> {
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Some(a);
    }
    for _ in 0..120 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || (b - a) < 1e-13 * (1.0 + m.abs()) {
            return Some(m);
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Some(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Scans evaluated ascending samples for sign-change brackets and
/// even-multiplicity |F| minima, pushing refined zeros.
fn harvest(f: &Expr, fp: &Expr, samples: &[(f64, f64)], zeros: &mut Vec<f64>) {
    let ev = |x: f64| f.eval(x).ok().filter(|v| v.is_finite());
    let evp = |x: f64| fp.eval(x).ok().filter(|v| v.is_finite());
    for w in samples.windows(2) {
        let ((a, fa), (b, fb)) = (w[0], w[1]);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            if let Some(z) = bisect_root(ev, a, b) {
                zeros.push(z);
            }
        }
    }
    if let Some(&(x, v)) = samples.last() {
        if v == 0.0 {
            zeros.push(x);
        }
    }
    // even multiplicity: interior |F| minimum, neighbors of equal sign,
    // derivative changing sign across the bracket, and |F| at the critical
    // point negligible against the local scale
    for w in samples.windows(3) {
        let ((a, fa), (_, fm), (b, fb)) = (w[0], w[1], w[2]);
        if fa * fb <= 0.0 || fm.abs() > fa.abs() || fm.abs() > fb.abs() {
            continue;
        }
        let (pa, pb) = match (evp(a), evp(b)) {
            (Some(pa), Some(pb)) => (pa, pb),
            _ => continue,
        };
        if pa * pb >= 0.0 {
            continue;
        }
        if let Some(z) = bisect_root(evp, a, b) {
            let local = fa.abs().max(fb.abs()).max(1e-300);
            if let Some(v) = ev(z) {
                if v.abs() <= 1e-12 * local {
                    zeros.push(z);
                }
            }
        }
    }
}

fn eval_grid(f: &Expr, pts: impl Iterator<Item = f64>) -> Vec<(f64, f64)> {
    pts.filter_map(|x| f.eval(x).ok().filter(|v| v.is_finite()).map(|v| (x, v)))
        .collect()
}

/// Records maximal runs (of at least four samples) with |F| below the flat
/// tolerance.
fn scan_flats(samples: &[(f64, f64)], tol_flat: f64, flats: &mut Vec<(f64, f64)>) {
    let mut run_start: Option<usize> = None;
    for i in 0..=samples.len() {
        let low = i < samples.len() && samples[i].1.abs() <= tol_flat;
        match (low, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                if i - s >= 4 {
                    flats.push((samples[s].0, samples[i - 1].0));
                }
                run_start = None;
            }
            _ => {}
        }
    }
}

/// Fraction of sample windows carrying a sign change; near 1/2 means the
/// zeros are denser than the sampling resolution and only aliases of them
/// are being picked up.
fn dense_fraction(samples: &[(f64, f64)]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let changes = samples
        .windows(2)
        .filter(|w| w[0].1 * w[1].1 < 0.0)
        .count();
    changes as f64 / (samples.len() - 1) as f64
}

fn normalize(zeros: &mut Vec<f64>) {
    zeros.sort_by(|a, b| a.total_cmp(b));
    zeros.dedup_by(|b, a| (*b - *a).abs() <= 1e-11 * (1.0 + a.abs()));
}

pub fn find_zeros(f: &Expr, fprime: &Expr, omega: Interval, cfg: &ZeroSetConfig) -> ZeroSet {
    let mut zs = ZeroSet::default();
    let (lo, hi) = omega.clipped(cfg.clip_delta, cfg.clip_cap);
    let n = cfg.grid_n.max(16);
    let h = (hi - lo) / (n - 1) as f64;
    let main = eval_grid(f, (0..n).map(|i| lo + h * i as f64));
    if main.len() < n / 2 {
        zs.notes.push(format!(
            "drift evaluation failed on {} of {} grid points",
            n - main.len(),
            n
        ));
    }
    zs.scale = main.iter().fold(0.0f64, |s, &(_, v)| s.max(v.abs()));
    // a flat edge within sampling distance of the boundary extends to it
    let snap = |x: f64, boundary: f64| -> f64 {
        if boundary.is_finite() && (x - boundary).abs() <= 2.0 * h.abs() + cfg.clip_delta {
            boundary
        } else {
            x
        }
    };
    if zs.scale == 0.0 {
        if let (Some(first), Some(last)) = (main.first(), main.last()) {
            // identically zero as far as sampling can tell
            zs.flat_intervals
                .push((snap(first.0, omega.lo), snap(last.0, omega.hi)));
        }
        return zs;
    }
    let tol_flat = 1e-10 * zs.scale;
    let in_flats = |z: f64, flats: &[(f64, f64)]| {
        flats
            .iter()
            .any(|&(l, r)| z >= l - 1e-11 * (1.0 + l.abs()) && z <= r + 1e-11 * (1.0 + r.abs()))
    };

    let mut flats: Vec<(f64, f64)> = Vec::new();
    scan_flats(&main, tol_flat, &mut flats);
    let mut dense = dense_fraction(&main) > 0.25;

    let mut zeros: Vec<f64> = Vec::new();
    harvest(f, fprime, &main, &mut zeros);
    normalize(&mut zeros);
    zeros.retain(|&z| !in_flats(z, &flats));

    // octave shells toward each endpoint
    for side_hi in [false, true] {
        let endpoint = if side_hi { omega.hi } else { omega.lo };
        let side_name = if side_hi { "upper" } else { "lower" };
        let mut found = 0usize;
        let mut empty_streak = 0usize;
        let mut truncated = false;
        let mut shell = 0i32;
        loop {
            let band = if endpoint.is_finite() {
                let width = hi - lo;
                let d_far = width * 0.5f64.powi(shell + 1);
                let d_near = width * 0.5f64.powi(shell + 2);
                if d_near < 1e-15 * (1.0 + endpoint.abs()) {
                    if empty_streak == 0 && shell > 0 {
                        truncated = true;
                        zs.notes.push(format!(
                            "zeros persist below the resolvable scale at the {side_name} endpoint"
                        ));
                    }
                    break;
                }
                if side_hi {
                    (endpoint - d_far, endpoint - d_near)
                } else {
                    (endpoint + d_near, endpoint + d_far)
                }
            } else {
                let other = if side_hi { omega.lo } else { omega.hi };
                let base = if other.is_finite() {
                    other.abs().max(1.0)
                } else {
                    1.0
                };
                let r_near = base * 2f64.powi(shell);
                let r_far = (base * 2f64.powi(shell + 1)).min(cfg.clip_cap);
                if r_near >= cfg.clip_cap {
                    break;
                }
                if side_hi {
                    (r_near, r_far)
                } else {
                    (-r_far, -r_near)
                }
            };
            let m = cfg.shell_points.max(8);
            let step = (band.1 - band.0) / (m - 1) as f64;
            if !(step > 0.0) {
                break;
            }
            let samples = eval_grid(f, (0..m).map(|i| band.0 + step * i as f64));
            dense = dense || dense_fraction(&samples) > 0.25;
            // Shell flats only ever extend a flat already seen at grid
            // scale: an isolated sub-grid "flat" hugging an endpoint is
            // usually just the drift tending to zero there.
            let mut band_flats = Vec::new();
            scan_flats(&samples, tol_flat, &mut band_flats);
            band_flats.retain(|&(l, r)| {
                flats
                    .iter()
                    .any(|&(fl, fr)| l <= fr + 2.0 * h && r >= fl - 2.0 * h)
            });
            flats.extend(band_flats);

            // Only zeros past the innermost (outermost) one already known
            // mark progress toward the endpoint; everything else is a
            // mid-domain re-find.
            let frontier = if side_hi {
                zeros.last().copied().unwrap_or(f64::NEG_INFINITY)
            } else {
                zeros.first().copied().unwrap_or(f64::INFINITY)
            };
            harvest(f, fprime, &samples, &mut zeros);
            normalize(&mut zeros);
            zeros.retain(|&z| !in_flats(z, &flats));
            let got = if side_hi {
                zeros.iter().rev().take_while(|&&z| z > frontier).count()
            } else {
                zeros.iter().take_while(|&&z| z < frontier).count()
            };
            found += got;
            if got == 0 {
                empty_streak += 1;
            } else {
                empty_streak = 0;
            }
            if found >= cfg.cap {
                truncated = true;
                zs.notes.push(format!(
                    "zero enumeration toward the {side_name} endpoint stopped at the cap of {}",
                    cfg.cap
                ));
                break;
            }
            if shell >= 12 && empty_streak >= 6 {
                break;
            }
            shell += 1;
        }
        if !endpoint.is_finite() && !truncated {
            let extreme = if side_hi { zeros.last() } else { zeros.first() };
            if let Some(&z) = extreme {
                if z.abs() >= 0.98 * cfg.clip_cap {
                    truncated = true;
                    zs.notes.push(format!(
                        "zeros reach the sampling horizon {:.1e} toward the {side_name} endpoint",
                        cfg.clip_cap
                    ));
                }
            }
        }
        let accumulation = truncated || (found >= 8 && empty_streak == 0);
        if side_hi {
            zs.truncated_hi = truncated;
            zs.accumulation_hi = accumulation;
        } else {
            zs.truncated_lo = truncated;
            zs.accumulation_lo = accumulation;
        }
    }
    if dense {
        zs.notes.push(
            "sign changes denser than the sampling resolution in parts of the domain; \
             zeros there are sampled, not enumerated"
                .into(),
        );
    }

    flats.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for fl in flats {
        match merged.last_mut() {
            Some(last) if fl.0 <= last.1 + 2.0 * h => last.1 = last.1.max(fl.1),
            _ => merged.push(fl),
        }
    }
    zs.flat_intervals = merged
        .into_iter()
        .map(|(l, r)| (snap(l, omega.lo), snap(r, omega.hi)))
        .collect();

    normalize(&mut zeros);
    zeros.retain(|&z| omega.contains(z) && !in_flats(z, &zs.flat_intervals));
    zs.zeros = zeros;
    zs
}

/// Components of {F ≠ 0}: the open gaps between consecutive zeros and flat
/// intervals, intersected with the domain. Regions flagged as unenumerated
/// (beyond a truncation cap) are *not* returned as components.
pub fn components(f: &Expr, zs: &ZeroSet, omega: Interval) -> Vec<Component> {
    let mut blocks: Vec<(f64, f64)> = zs.zeros.iter().map(|&z| (z, z)).collect();
    blocks.extend(zs.flat_intervals.iter().copied());
    blocks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(blocks.len());
    for b in blocks {
        match merged.last_mut() {
            Some(last) if b.0 <= last.1 => last.1 = last.1.max(b.1),
            _ => merged.push(b),
        }
    }

    let kind_of = |x: f64, is_zero: bool| {
        if is_zero {
            EndpointKind::DriftZero
        } else if x.is_finite() {
            EndpointKind::DomainBoundary
        } else {
            EndpointKind::Infinite
        }
    };
    let mut walls: Vec<(f64, bool)> = vec![(omega.lo, false)];
    for &(l, r) in &merged {
        walls.push((l, true));
        walls.push((r, true));
    }
    walls.push((omega.hi, false));

    let mut out = Vec::new();
    for i in (0..walls.len()).step_by(2) {
        let (l, l_zero) = walls[i];
        let (r, r_zero) = walls[i + 1];
        if !(l < r) {
            continue;
        }
        if (i == 0 && zs.truncated_lo) || (i + 2 == walls.len() && zs.truncated_hi) {
            continue;
        }
        let mut c = Component {
            lo: l,
            hi: r,
            lo_kind: kind_of(l, l_zero),
            hi_kind: kind_of(r, r_zero),
            sign: 0,
        };
        let rep = c.representative();
        if let Ok(v) = f.eval(rep) {
            c.sign = if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            };
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use approx::assert_relative_eq;

    fn exprs(f: &str) -> (Expr, Expr) {
        let e: Expr = f.parse().unwrap();
        let d = e.differentiate();
        (e, d)
    }

    #[test]
    fn logistic_drift_has_no_interior_zeros() {
        let (f, fp) = exprs("-x*(1-x)");
        let omega = Interval::new(0.0, 1.0).unwrap();
        let zs = find_zeros(&f, &fp, omega, &ZeroSetConfig::default());
        assert!(zs.zeros.is_empty(), "found {:?}", zs.zeros);
        assert!(zs.flat_intervals.is_empty());
        let comps = components(&f, &zs, omega);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].sign, -1);
        assert_eq!(comps[0].lo_kind, EndpointKind::DomainBoundary);
        assert_eq!(comps[0].hi_kind, EndpointKind::DomainBoundary);
    }

    #[test]
    fn interior_simple_zeros_split_components() {
        let (f, fp) = exprs("-x*(1-x)");
        let omega = Interval::new(-2.0, 2.0).unwrap();
        let zs = find_zeros(&f, &fp, omega, &ZeroSetConfig::default());
        assert_eq!(zs.zeros.len(), 2, "zeros {:?}", zs.zeros);
        assert!(zs.zeros[0].abs() < 1e-11);
        assert_relative_eq!(zs.zeros[1], 1.0, epsilon = 1e-11);
        let comps = components(&f, &zs, omega);
        assert_eq!(comps.len(), 3);
        assert_eq!(
            comps.iter().map(|c| c.sign).collect::<Vec<_>>(),
            vec![1, -1, 1]
        );
        assert_eq!(comps[1].lo_kind, EndpointKind::DriftZero);
    }

    #[test]
    fn even_multiplicity_zero_is_found_without_a_sign_change() {
        let (f, fp) = exprs("x^2");
        let omega = Interval::new(-1.0, 1.0).unwrap();
        let zs = find_zeros(&f, &fp, omega, &ZeroSetConfig::default());
        assert_eq!(zs.zeros.len(), 1, "zeros {:?}", zs.zeros);
        assert!(zs.zeros[0].abs() < 1e-11);
        let comps = components(&f, &zs, omega);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps.iter().map(|c| c.sign).collect::<Vec<_>>(), vec![1, 1]);
    }

    #[test]
    fn identically_zero_drift_is_a_flat_interval() {
        let (f, fp) = exprs("x-x");
        let omega = Interval::new(0.0, 1.0).unwrap();
        let zs = find_zeros(&f, &fp, omega, &ZeroSetConfig::default());
        assert_eq!(zs.flat_intervals, vec![(0.0, 1.0)]);
        assert!(components(&f, &zs, omega).is_empty());
    }

    #[test]
    fn plateau_is_flat_not_dense_zeros() {
        // F = |x| + x vanishes identically on (-1, 0]
        let (f, fp) = exprs("abs(x)+x");
        let omega = Interval::new(-1.0, 1.0).unwrap();
        let zs = find_zeros(&f, &fp, omega, &ZeroSetConfig::default());
        assert_eq!(zs.flat_intervals.len(), 1, "flats {:?}", zs.flat_intervals);
        let (l, r) = zs.flat_intervals[0];
        assert_eq!(l, -1.0);
        assert!(r.abs() < 1e-2, "flat ({l}, {r})");
        assert!(zs.zeros.is_empty(), "zeros {:?}", zs.zeros);
        let comps = components(&f, &zs, omega);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].sign, 1);
        assert_eq!(comps[0].lo_kind, EndpointKind::DriftZero);
    }

    #[test]
    fn oscillating_drift_zeros_match_reciprocal_multiples_of_pi() {
        let (f, fp) = exprs("-x^3*sin(1/x)");
        let omega = Interval::new(0.0, 1.0).unwrap();
        let cfg = ZeroSetConfig::default();
        let zs = find_zeros(&f, &fp, omega, &cfg);
        assert!(zs.truncated_lo, "expected the cap to bite");
        assert!(zs.accumulation_lo);
        assert!(!zs.truncated_hi);
        assert!(zs.zeros.len() >= cfg.cap);
        // outermost zeros are 1/(k pi), k = 1, 2, ...
        let tail: Vec<f64> = zs.zeros.iter().rev().take(10).copied().collect();
        for (i, &z) in tail.iter().enumerate() {
            let expect = 1.0 / ((i + 1) as f64 * std::f64::consts::PI);
            assert_relative_eq!(z, expect, max_relative = 1e-9);
        }
        // the unenumerated region hugs the lower endpoint
        let un = zs.unenumerated(omega);
        assert_eq!(un.len(), 1);
        assert_eq!(un[0].0, 0.0);
        assert!(un[0].1 <= *zs.zeros.first().unwrap());
        // components exclude the unenumerated region
        let comps = components(&f, &zs, omega);
        assert!(comps.iter().all(|c| c.lo >= un[0].1 - 1e-15));
        assert_eq!(comps.last().unwrap().hi, 1.0);
    }

    #[test]
    fn zeros_are_stable_under_grid_refinement() {
        let (f, fp) = exprs("sin(x)");
        let omega = Interval::new(0.5, 20.0).unwrap();
        let coarse = find_zeros(
            &f,
            &fp,
            omega,
            &ZeroSetConfig {
                grid_n: 512,
                ..Default::default()
            },
        );
        let fine = find_zeros(
            &f,
            &fp,
            omega,
            &ZeroSetConfig {
                grid_n: 4096,
                ..Default::default()
            },
        );
        assert_eq!(coarse.zeros.len(), 6); // pi .. 6 pi
        assert_eq!(coarse.zeros.len(), fine.zeros.len());
        for (a, b) in coarse.zeros.iter().zip(&fine.zeros) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn no_spurious_zero_for_a_positive_minimum() {
        let (f, fp) = exprs("x^2+0.001");
        let omega = Interval::new(-1.0, 1.0).unwrap();
        let zs = find_zeros(&f, &fp, omega, &ZeroSetConfig::default());
        assert!(zs.zeros.is_empty(), "zeros {:?}", zs.zeros);
        assert!(zs.flat_intervals.is_empty());
    }

    #[test]
    fn full_line_linear_drift_components() {
        let (f, fp) = exprs("-x");
        let omega = Interval::line();
        let zs = find_zeros(&f, &fp, omega, &ZeroSetConfig::default());
        assert_eq!(zs.zeros.len(), 1);
        assert!(zs.zeros[0].abs() < 1e-10);
        assert!(!zs.truncated_lo && !zs.truncated_hi);
        let comps = components(&f, &zs, omega);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].lo_kind, EndpointKind::Infinite);
        assert_eq!(comps[0].hi_kind, EndpointKind::DriftZero);
        assert_eq!(comps[0].sign, 1);
        assert_eq!(comps[1].sign, -1);
    }

    #[test]
    fn zeros_marching_to_the_horizon_truncate() {
        let (f, fp) = exprs("sin(x)");
        let omega = Interval::new(0.5, f64::INFINITY).unwrap();
        let zs = find_zeros(&f, &fp, omega, &ZeroSetConfig::default());
        assert!(zs.truncated_hi);
        assert!(!zs.truncated_lo);
        assert!(zs.zeros.len() >= 64);
    }
}
