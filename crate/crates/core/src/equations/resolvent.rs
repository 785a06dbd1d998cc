//! Resolvent kernels of second-kind Volterra and Fredholm equations,
//! `x(t) = f(t) + ∫ k(t, s) x(s) ds`, as Neumann series of iterated kernels.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::domains::{Domain, Point};
use crate::error::{Error, Result};
use crate::operators::{KernelOp, OperatorEntry, OperatorMatrix, OutputSpace, Term};
use crate::quadrature::{composite_gauss, simpson_weights, vertices};

/// Fredholm kernels with `∫∫k² ≥ 1 − SQUARE_MARGIN` are rejected.
pub const SQUARE_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventKind {
    Volterra,
    Fredholm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventOptions {
    /// Number of grid intervals on `[a, b]`.
    pub intervals: usize,
    /// Stop once the sup of the last iterated kernel drops below this.
    pub tol: f64,
    pub max_order: usize,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        ResolventOptions { intervals: 128, tol: 1e-14, max_order: 400 }
    }
}

/// `Γ(t, s)` on a vertex grid of `[a, b]²`, row index `t`, column index `s`.
#[derive(Debug, Clone)]
pub struct ResolventTable {
    kind: ResolventKind,
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    /// For Volterra the values above the diagonal continue the iterated
    /// kernels as signed integrals; they only feed interpolation.
    values: DMatrix<f64>,
    order: usize,
    tail: f64,
}

fn kernel_matrix(k: &dyn Fn(f64, f64) -> f64, nodes: &[f64]) -> Result<DMatrix<f64>> {
    let n = nodes.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = k(nodes[i], nodes[j]);
            if !v.is_finite() {
                return Err(Error::Numerical {
                    what: format!("kernel value {v}"),
                    location: format!("(t, s) = ({}, {})", nodes[i], nodes[j]),
                });
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

fn check_options(a: f64, b: f64, opts: &ResolventOptions) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Config(format!("resolvent interval needs a < b, got [{a}, {b}]")));
    }
    if opts.intervals < 2 {
        return Err(Error::Config("resolvent grid needs at least 2 intervals".into()));
    }
    Ok(())
}

/// Volterra resolvent `Γ = Σ_{n≥1} k_n`, `k_n(t, s) = ∫_s^t k(t, u) k_{n−1}(u, s) du`.
pub fn volterra_resolvent(
    k: &dyn Fn(f64, f64) -> f64,
    a: f64,
    b: f64,
    opts: ResolventOptions,
) -> Result<ResolventTable> {
    check_options(a, b, &opts)?;
    let m = opts.intervals;
    let h = (b - a) / m as f64;
    let nodes = vertices(a, b, m);
    let kmat = kernel_matrix(k, &nodes)?;
    // weights[len] integrates over `len` consecutive intervals
    let weights: Vec<Vec<f64>> = (0..=m).map(|len| simpson_weights(len, h)).collect();

    let mut gamma = kmat.clone();
    let mut prev = kmat.clone();
    let mut order = 1;
    let mut tail = causal_sup(&prev);
    while tail >= opts.tol {
        if order >= opts.max_order {
            return Err(Error::Truncation { order, residual: tail });
        }
        let mut next = DMatrix::zeros(m + 1, m + 1);
        for i in 0..=m {
            for j in 0..=m {
                let (lo, hi, sign) = if j <= i { (j, i, 1.0) } else { (i, j, -1.0) };
                let w = &weights[hi - lo];
                let mut acc = 0.0;
                for (off, wl) in w.iter().enumerate() {
                    let l = lo + off;
                    acc += wl * kmat[(i, l)] * prev[(l, j)];
                }
                next[(i, j)] = sign * acc;
            }
        }
        gamma += &next;
        prev = next;
        order += 1;
        tail = causal_sup(&prev);
    }
    Ok(ResolventTable { kind: ResolventKind::Volterra, a, b, nodes, values: gamma, order, tail })
}

fn causal_sup(m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..=i {
            s = s.max(m[(i, j)].abs());
        }
    }
    s
}

/// Simpson estimate of `∫∫ k² ds dt` over `[a, b]²`.
pub fn square_integral(k: &dyn Fn(f64, f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let nodes = vertices(a, b, intervals);
    let w = simpson_weights(intervals, (b - a) / intervals as f64);
    let mut acc = 0.0;
    for (t, wt) in nodes.iter().zip(&w) {
        for (s, ws) in nodes.iter().zip(&w) {
            let v = k(*t, *s);
            acc += wt * ws * v * v;
        }
    }
    acc
}

/// Fredholm resolvent `Γ = Σ_{n≥1} k_n`, `k_n(t, s) = ∫ k_{n−1}(t, u) k(u, s) du`.
///
/// Requires `∫∫k² < 1` so the Neumann series converges.
pub fn fredholm_resolvent(
    k: &dyn Fn(f64, f64) -> f64,
    a: f64,
    b: f64,
    opts: ResolventOptions,
) -> Result<ResolventTable> {
    check_options(a, b, &opts)?;
    let sq = square_integral(k, a, b, opts.intervals);
    if sq >= 1.0 - SQUARE_MARGIN {
        return Err(Error::Precondition(format!(
            "Fredholm kernel is not small enough: ∫∫k² = {sq} but the Neumann series needs ∫∫k² < 1"
        )));
    }
    let m = opts.intervals;
    let nodes = vertices(a, b, m);
    let kmat = kernel_matrix(k, &nodes)?;
    let w = simpson_weights(m, (b - a) / m as f64);
    // k_n = k_{n−1} · diag(w) · k
    let mut wk = kmat.clone();
    for (l, wl) in w.iter().enumerate() {
        wk.row_mut(l).scale_mut(*wl);
    }
    let mut gamma = kmat.clone();
    let mut prev = kmat;
    let mut order = 1;
    let mut tail = prev.amax();
    while tail >= opts.tol {
        if order >= opts.max_order {
            return Err(Error::Truncation { order, residual: tail });
        }
        prev = &prev * &wk;
        gamma += &prev;
        order += 1;
        tail = prev.amax();
    }
    Ok(ResolventTable { kind: ResolventKind::Fredholm, a, b, nodes, values: gamma, order, tail })
}

impl ResolventTable {
    pub fn kind(&self) -> ResolventKind {
        self.kind
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of iterated kernels summed.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Sup of the last iterated kernel summed.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// `Γ(t_i, s_j)` at grid nodes; zero above the diagonal for Volterra.
    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        if self.kind == ResolventKind::Volterra && j > i {
            0.0
        } else {
            self.values[(i, j)]
        }
    }

    /// Bilinear interpolation of `Γ(t, s)`; zero outside `[a, b]²` and, for
    /// Volterra, for `s > t`.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let span = self.b - self.a;
        let slack = 1e-12 * span;
        if t < self.a - slack || t > self.b + slack || s < self.a - slack || s > self.b + slack {
            return 0.0;
        }
        if self.kind == ResolventKind::Volterra && s > t {
            return 0.0;
        }
        let m = self.nodes.len() - 1;
        let locate = |x: f64| {
            let u = ((x - self.a) / span * m as f64).clamp(0.0, m as f64);
            let i = (u.floor() as usize).min(m - 1);
            (i, u - i as f64)
        };
        let (i, ft) = locate(t);
        let (j, fs) = locate(s);
        let v = &self.values;
        (1.0 - ft) * ((1.0 - fs) * v[(i, j)] + fs * v[(i, j + 1)])
            + ft * ((1.0 - fs) * v[(i + 1, j)] + fs * v[(i + 1, j + 1)])
    }

    /// `∫ Γ(y, s) dy` over `[s, b]` (Volterra) or `[a, b]` (Fredholm).
    pub fn column_integral(&self, s: f64) -> f64 {
        let lo = match self.kind {
            ResolventKind::Volterra => s.max(self.a),
            ResolventKind::Fredholm => self.a,
        };
        if lo >= self.b {
            return 0.0;
        }
        let panels = self.nodes.len() - 1;
        let (ys, ws) = composite_gauss(lo, self.b, panels, 3).expect("degree 3 rule");
        ys.iter().zip(&ws).map(|(y, w)| w * self.eval(*y, s)).sum()
    }

    /// The solution operator `I + Γ` on `[a, b]` as a `1 × 1` operator matrix,
    /// with `L1` or sup output over the same interval.
    pub fn operator(self: &Arc<Self>, resolution: usize) -> Result<OperatorMatrix> {
        let dom = Domain::interval(self.a, self.b)?;
        let kernel_table = Arc::clone(self);
        let column_table = Arc::clone(self);
        let causal = self.kind == ResolventKind::Volterra;
        let op = KernelOp::new(dom.clone(), resolution, move |s: &Point, t: &Point| {
            let v = kernel_table.eval(s.x(), t.x());
            // a node on the diagonal has only half its cell inside [a, s]
            if causal && s.x() == t.x() { 0.5 * v } else { v }
        })?
            .with_column_integral(move |t: &Point| column_table.column_integral(t.x()));
        let entry = OperatorEntry::identity().plus(Term::Integral(op));
        OperatorMatrix::single(OutputSpace::full(dom, resolution)?, entry)
    }
}

/// `x(t) = f(t) + ∫ Γ(t, s) f(s) ds`, the integral over `[a, t]` for Volterra.
///
/// Exact node values use the table directly; between nodes the integral part is
/// interpolated linearly.
pub fn solve_second_kind(table: &ResolventTable, f: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let m = table.nodes.len() - 1;
    let h = (table.b - table.a) / m as f64;
    let fs: Vec<f64> = table.nodes.iter().map(|s| f(*s)).collect();
    let integral_at = |i: usize| -> f64 {
        let (len, wts) = match table.kind {
            ResolventKind::Volterra => (i, simpson_weights(i, h)),
            ResolventKind::Fredholm => (m, simpson_weights(m, h)),
        };
        (0..=len).map(|j| wts[j] * table.node_value(i, j) * fs[j]).sum()
    };
    let u = ((t - table.a) / h).clamp(0.0, m as f64);
    let i = u.floor() as usize;
    let frac = u - i as f64;
    let integral = if i >= m || frac < 1e-12 {
        integral_at(i.min(m))
    } else if frac > 1.0 - 1e-12 {
        integral_at(i + 1)
    } else {
        (1.0 - frac) * integral_at(i) + frac * integral_at(i + 1)
    };
    f(t) + integral
}
