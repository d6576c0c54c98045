//! Grid-sampled functions and the semigroup acting on them.
//!
//! The semigroup is always applied through the flow — (T(t)f)(x) =
//! h_t(x)·f(φ(t,x)) with the multiplier read off the trajectory
//! accumulators — never by discretizing the generator. Grid functions are
//! immutable after construction, interpolate with a monotone-safe cubic
//! (high-order derivative estimates, limited only where they would let the
//! interpolant overshoot locally monotone data), and refuse to extrapolate:
//! a node whose image falls outside the hull becomes a first-class missing
//! value, excluded from norms and reported by count. This keeps norm checks
//! honest when composition drags nodes toward an attracting endpoint.
//!
//! On top of the application sit the three consistency checks: the
//! semigroup law T(t+s) = T(t)T(s), the generator formula Af = F f′ + h f
//! as the dt → 0 limit of difference quotients, and the norm-growth bound
//! from the fitted admissibility envelope.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::{self, Interval, Problem};
use crate::semiflow::{self, FlowConfig, FlowStatus};

/// 5-point Gauss–Legendre rule on [-1, 1], used per grid interval for norm
/// estimates.
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// A complex-valued function sampled on a strictly increasing node set,
/// with per-node missing values and no extrapolation.
#[derive(Debug, Clone)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<Option<Complex64>>,
    /// Limited derivative estimates, present exactly where interpolation is
    /// possible (runs of at least two consecutive values).
    derivs: Vec<Option<Complex64>>,
}

impl GridFunction {
    /// Validates the node/value layout and precomputes the interpolant.
    /// Nodes must be finite and strictly increasing; present values must be
    /// finite.
    pub fn new(nodes: Vec<f64>, values: Vec<Option<Complex64>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("a grid function needs at least one node"));
        }
        if nodes.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        for w in nodes.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::invalid(format!(
                    "nodes must be strictly increasing and finite ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if !nodes[0].is_finite() || !nodes[nodes.len() - 1].is_finite() {
            return Err(Error::invalid("nodes must be finite"));
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = v {
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::invalid(format!(
                        "non-finite value at node x = {}",
                        nodes[i]
                    )));
                }
            }
        }
        let derivs = derivative_estimates(&nodes, &values);
        Ok(GridFunction { nodes, values, derivs })
    }

    /// Samples a real-valued expression on the nodes.
    pub fn from_expr(f: &Expr, nodes: &[f64]) -> Result<Self> {
        let values = nodes
            .iter()
            .map(|&x| f.eval(x).map(|v| Some(Complex64::new(v, 0.0))))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(nodes.to_vec(), values)
    }

    /// Samples a complex-valued expression pair on the nodes.
    pub fn from_exprs(re: &Expr, im: &Expr, nodes: &[f64]) -> Result<Self> {
        let values = nodes
            .iter()
            .map(|&x| Ok(Some(Complex64::new(re.eval(x)?, im.eval(x)?))))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(nodes.to_vec(), values)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, i: usize) -> Option<Complex64> {
        self.values[i]
    }

    /// How many nodes carry no value.
    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Interpolates at `x`; `None` outside the hull, at a missing node, or
    /// on an interval with a missing endpoint. Never extrapolates.
    pub fn evaluate(&self, x: f64) -> Option<Complex64> {
        if !x.is_finite() {
            return None;
        }
        let n = self.nodes.len();
        if x < self.nodes[0] || x > self.nodes[n - 1] {
            return None;
        }
        let k = self.nodes.partition_point(|&v| v < x);
        if k < n && self.nodes[k] == x {
            return self.values[k];
        }
        let (i, j) = (k - 1, k);
        let (y0, y1) = (self.values[i]?, self.values[j]?);
        let (d0, d1) = (self.derivs[i]?, self.derivs[j]?);
        Some(hermite(x, self.nodes[i], self.nodes[j], y0, d0, y1, d1))
    }

    /// Quadrature estimate of ‖f‖_{L^p_ρ} over the intervals where the
    /// interpolant exists; missing regions contribute nothing.
    pub fn lp_norm(&self, prob: &Problem) -> Result<f64> {
        let p = prob.p;
        let mut acc = 0.0;
        for i in 0..self.nodes.len().saturating_sub(1) {
            if self.values[i].is_none()
                || self.values[i + 1].is_none()
                || self.derivs[i].is_none()
                || self.derivs[i + 1].is_none()
            {
                continue;
            }
            let (a, b) = (self.nodes[i], self.nodes[i + 1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for &(u, w) in &GL5 {
                let x = mid + half * u;
                let v = self.evaluate(x).unwrap_or(Complex64::ZERO);
                let rho = prob.density.eval(x)?;
                acc += w * half * v.norm().powf(p) * rho;
            }
        }
        Ok(acc.max(0.0).powf(1.0 / p))
    }

    /// a·self + b·other on a shared node set; a missing value on either
    /// side stays missing.
    pub fn linear_combination(
        &self,
        a: Complex64,
        other: &GridFunction,
        b: Complex64,
    ) -> Result<GridFunction> {
        if self.nodes != other.nodes {
            return Err(Error::invalid(
                "linear combinations need identical node sets",
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| match (u, v) {
                (Some(u), Some(v)) => Some(a * u + b * v),
                _ => None,
            })
            .collect();
        GridFunction::new(self.nodes.clone(), values)
    }

    /// Serializes as a plain text table, one `node re im` row per node
    /// (missing values as `node missing`). Numbers print in shortest
    /// round-trip form, so parsing the output reproduces the grid function
    /// bit for bit.
    pub fn to_table(&self) -> String {
        let mut out = String::from("# node\tre\tim\n");
        for (i, &x) in self.nodes.iter().enumerate() {
            match self.values[i] {
                Some(v) => out.push_str(&format!("{:?}\t{:?}\t{:?}\n", x, v.re, v.im)),
                None => out.push_str(&format!("{:?}\tmissing\n", x)),
            }
        }
        out
    }
}

/// Parses a two-column `node value` or three-column `node re im` text
/// table; `#` starts a comment and `missing` marks an absent value. Errors
/// carry the offending line number.
pub fn parse_grid_table(text: &str) -> Result<GridFunction> {
    let mut nodes: Vec<f64> = Vec::new();
    let mut values: Vec<Option<Complex64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = row.split_whitespace().collect();
        let node = parse_field(cols[0], line)?;
        if !node.is_finite() {
            return Err(Error::GridTable {
                line,
                message: format!("node {node} is not finite"),
            });
        }
        if let Some(&prev) = nodes.last() {
            if node <= prev {
                return Err(Error::GridTable {
                    line,
                    message: format!("nodes must be strictly increasing ({prev} then {node})"),
                });
            }
        }
        let value = match cols.as_slice() {
            [_, m] if *m == "missing" => None,
            [_, re] => Some(Complex64::new(parse_field(re, line)?, 0.0)),
            [_, re, im] => Some(Complex64::new(
                parse_field(re, line)?,
                parse_field(im, line)?,
            )),
            _ => {
                return Err(Error::GridTable {
                    line,
                    message: format!("expected 2 or 3 columns, found {}", cols.len()),
                })
            }
        };
        if let Some(v) = value {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::GridTable {
                    line,
                    message: "values must be finite (use `missing` for absent ones)".into(),
                });
            }
        }
        nodes.push(node);
        values.push(value);
    }
    if nodes.is_empty() {
        return Err(Error::GridTable {
            line: 0,
            message: "the table contains no data rows".into(),
        });
    }
    GridFunction::new(nodes, values)
}

fn parse_field(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::GridTable {
        line,
        message: format!("could not parse '{s}' as a number"),
    })
}

/// Chebyshev–Lobatto nodes on [lo, hi], ascending. The clustering toward
/// the endpoints is deliberate: composition semigroups concentrate mass
/// near attracting endpoints.
pub fn chebyshev_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    (0..n)
        .map(|j| mid - half * (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Default sampling grid for a problem domain: Chebyshev-distributed nodes
/// clipped a relative margin inside finite endpoints; unbounded sides are
/// boxed at ±8.
pub fn default_nodes(omega: &Interval, n: usize) -> Result<Vec<f64>> {
    const BOX: f64 = 8.0;
    if n < 8 {
        return Err(Error::invalid("a sampling grid needs at least 8 nodes"));
    }
    let (mut lo, mut hi) = (
        if omega.lo.is_finite() { omega.lo } else { -BOX },
        if omega.hi.is_finite() { omega.hi } else { BOX },
    );
    if !(lo < hi) {
        // the default box misses the domain; anchor at the finite end
        if omega.lo.is_finite() {
            (lo, hi) = (omega.lo, omega.lo + 2.0 * BOX);
        } else {
            (lo, hi) = (omega.hi - 2.0 * BOX, omega.hi);
        }
    }
    let margin = 1e-3 * (hi - lo);
    if omega.lo.is_finite() {
        lo += margin;
    }
    if omega.hi.is_finite() {
        hi -= margin;
    }
    Ok(chebyshev_nodes(lo, hi, n))
}

/// T(t) applied to a grid function, with the bookkeeping the no-extrapolation
/// policy requires.
#[derive(Debug)]
pub struct SemigroupOutput {
    pub grid: GridFunction,
    /// Nodes whose image φ(t, x) fell outside the input's valid hull.
    pub hull_misses: usize,
    /// Per-node trajectory failures (node, message); not fatal.
    pub flow_errors: Vec<(f64, String)>,
}

/// Per-node outcome: value (if any), flow error (if any), hull miss flag.
type NodeOutcome = (Option<Complex64>, Option<(f64, String)>, bool);

/// Applies (T(t)f)(x) = h_t(x)·f(φ(t,x)) node by node (in parallel). The
/// result lives on the same node set; images outside the hull or failed
/// trajectories become missing values.
pub fn apply_semigroup(
    prob: &Problem,
    f: &GridFunction,
    t: f64,
    cfg: &FlowConfig,
) -> Result<SemigroupOutput> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(
            "the semigroup parameter t must be finite and nonnegative",
        ));
    }
    let per_node: Vec<NodeOutcome> = f
        .nodes()
        .par_iter()
        .map(|&x| match semiflow::flow(prob, x, t, cfg) {
            Err(e) => (None, Some((x, e.to_string())), false),
            Ok(s) => match s.status {
                FlowStatus::ExitedAt { t: te } => (
                    None,
                    Some((x, format!("the forward orbit left the domain at t = {te:.6}"))),
                    false,
                ),
                FlowStatus::InDomain => match f.evaluate(s.value) {
                    None => (None, None, true),
                    Some(v) => {
                        let out =
                            Complex64::from_polar(s.log_weight_re.exp(), s.log_weight_im) * v;
                        if out.re.is_finite() && out.im.is_finite() {
                            (Some(out), None, false)
                        } else {
                            (None, Some((x, "the weight factor overflowed".into())), false)
                        }
                    }
                },
            },
        })
        .collect();

    let mut values = Vec::with_capacity(per_node.len());
    let mut flow_errors = Vec::new();
    let mut hull_misses = 0usize;
    for (v, err, missed) in per_node {
        values.push(v);
        if let Some(e) = err {
            flow_errors.push(e);
        }
        hull_misses += missed as usize;
    }
    Ok(SemigroupOutput {
        grid: GridFunction::new(f.nodes().to_vec(), values)?,
        hull_misses,
        flow_errors,
    })
}

/// Relative defect of the semigroup law: ‖T(t+s)f − T(t)T(s)f‖ / ‖f‖ in
/// the problem's weighted norm, over the nodes valid on both sides.
pub fn semigroup_residual(
    prob: &Problem,
    f: &GridFunction,
    s: f64,
    t: f64,
    cfg: &FlowConfig,
) -> Result<f64> {
    let one_step = apply_semigroup(prob, f, s + t, cfg)?;
    let inner = apply_semigroup(prob, f, s, cfg)?;
    let two_step = apply_semigroup(prob, &inner.grid, t, cfg)?;
    let diff = one_step.grid.linear_combination(
        Complex64::ONE,
        &two_step.grid,
        -Complex64::ONE,
    )?;
    let base = f.lp_norm(prob)?;
    if base == 0.0 {
        return Ok(0.0);
    }
    Ok(diff.lp_norm(prob)? / base)
}

/// Relative defect of the generator formula: ‖(T(dt)f − f)/dt − (F f′ + h f)‖
/// over ‖f‖, with f and its derivative given analytically. Decays like
/// O(dt) for smooth f.
pub fn generator_residual(
    prob: &Problem,
    f: &Expr,
    f_prime: &Expr,
    nodes: &[f64],
    dt: f64,
    cfg: &FlowConfig,
) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt must be positive and finite"));
    }
    let grid = GridFunction::from_expr(f, nodes)?;
    let stepped = apply_semigroup(prob, &grid, dt, cfg)?;
    let mut values = Vec::with_capacity(nodes.len());
    for (i, &x) in nodes.iter().enumerate() {
        let v = match (stepped.grid.value(i), grid.value(i)) {
            (Some(tv), Some(fv)) => {
                let quotient = (tv - fv) / dt;
                let h = Complex64::new(prob.weight_re.eval(x)?, prob.weight_im.eval(x)?);
                let generator = prob.drift.eval(x)? * f_prime.eval(x)? + h * fv;
                Some(quotient - generator)
            }
            _ => None,
        };
        values.push(v);
    }
    let defect = GridFunction::new(nodes.to_vec(), values)?;
    let base = grid.lp_norm(prob)?;
    if base == 0.0 {
        return Ok(0.0);
    }
    Ok(defect.lp_norm(prob)? / base)
}

/// One row of the norm-growth table.
#[derive(Debug, Clone)]
pub struct NormPoint {
    pub t: f64,
    /// ‖T(t)f‖_{L^p_ρ} over the valid intervals.
    pub norm: f64,
    /// Nodes lost to the no-extrapolation policy at this time.
    pub hull_misses: usize,
    /// bound·e^{rate·t}·‖f‖ from the fitted admissibility envelope, when
    /// one was found.
    pub envelope: Option<f64>,
}

/// Tabulates ‖T(t)f‖ at the given times next to the admissibility
/// envelope, so domination is checkable at a glance.
pub fn norm_growth(
    prob: &Problem,
    f: &GridFunction,
    times: &[f64],
    cfg: &FlowConfig,
) -> Result<Vec<NormPoint>> {
    let fit = model::check_admissibility(prob);
    let base = f.lp_norm(prob)?;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let out = apply_semigroup(prob, f, t, cfg)?;
        let norm = out.grid.lp_norm(prob)?;
        let envelope = fit
            .admissible
            .then(|| fit.bound * (fit.rate * t).exp() * base);
        rows.push(NormPoint {
            t,
            norm,
            hull_misses: out.hull_misses,
            envelope,
        });
    }
    Ok(rows)
}

/// Derivative estimates per node: high-order finite differences on each
/// contiguous run of present values, then limited so the cubic cannot
/// overshoot where the data is locally monotone.
fn derivative_estimates(nodes: &[f64], values: &[Option<Complex64>]) -> Vec<Option<Complex64>> {
    let n = nodes.len();
    let mut derivs: Vec<Option<Complex64>> = vec![None; n];
    let mut start = 0usize;
    while start < n {
        if values[start].is_none() {
            start += 1;
            continue;
        }
        let mut end = start;
        while end + 1 < n && values[end + 1].is_some() {
            end += 1;
        }
        if end > start {
            estimate_run(nodes, values, start, end, &mut derivs);
        }
        start = end + 1;
    }
    derivs
}

fn estimate_run(
    nodes: &[f64],
    values: &[Option<Complex64>],
    s: usize,
    e: usize,
    derivs: &mut [Option<Complex64>],
) {
    let len = e - s + 1;
    let width = len.min(5);
    for i in s..=e {
        let lo = i.saturating_sub(2).clamp(s, e + 1 - width);
        let w = fd_weights(nodes[i], &nodes[lo..lo + width]);
        let mut d = Complex64::ZERO;
        for (k, &c) in w.iter().enumerate() {
            d += c * values[lo + k].unwrap();
        }
        let slope_left = (i > s).then(|| {
            (values[i].unwrap() - values[i - 1].unwrap())
                / (nodes[i] - nodes[i - 1])
        });
        let slope_right = (i < e).then(|| {
            (values[i + 1].unwrap() - values[i].unwrap())
                / (nodes[i + 1] - nodes[i])
        });
        derivs[i] = Some(Complex64::new(
            limit_derivative(d.re, slope_left.map(|v| v.re), slope_right.map(|v| v.re)),
            limit_derivative(d.im, slope_left.map(|v| v.im), slope_right.map(|v| v.im)),
        ));
    }
}

/// Keeps a node derivative inside the region where the Hermite cubic stays
/// monotone on locally monotone data (both normalized endpoint slopes in
/// [0, 3] suffice), zeroes it next to flat intervals, and only caps its
/// magnitude across extrema so resolved smooth humps keep their accuracy.
fn limit_derivative(d: f64, left: Option<f64>, right: Option<f64>) -> f64 {
    match (left, right) {
        (Some(sl), Some(sr)) => {
            if sl == 0.0 || sr == 0.0 {
                0.0
            } else if sl.signum() == sr.signum() {
                let sign = sl.signum();
                sign * (d * sign).clamp(0.0, 3.0 * sl.abs().min(sr.abs()))
            } else {
                let cap = 3.0 * sl.abs().max(sr.abs());
                d.clamp(-cap, cap)
            }
        }
        (Some(s), None) | (None, Some(s)) => {
            if s == 0.0 {
                0.0
            } else {
                let sign = s.signum();
                sign * (d * sign).clamp(0.0, 3.0 * s.abs())
            }
        }
        (None, None) => 0.0,
    }
}

/// First-derivative finite-difference weights at `z` on arbitrary nodes
/// (Fornberg's recursion, specialized to order one).
fn fd_weights(z: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c: Vec<[f64; 2]> = vec![[0.0; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[1]).collect()
}

fn hermite(
    x: f64,
    x0: f64,
    x1: f64,
    y0: Complex64,
    d0: Complex64,
    y1: Complex64,
    d1: Complex64,
) -> Complex64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let u = 1.0 - s;
    let h00 = (1.0 + 2.0 * s) * u * u;
    let h10 = s * u * u;
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    y0 * h00 + d0 * (h * h10) + y1 * h01 + d1 * (h * h11)
}
