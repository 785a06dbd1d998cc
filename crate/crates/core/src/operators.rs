//! Positive operator matrices `Ā`, sign vectors `σ`, monotone norms `ψ` and the
//! optimal error `‖Āφ̄‖_ψ`.
//!
//! Column `j` of a matrix acts on functions of class `j` (defined on the domain of
//! that class's recovery method). Row `i` produces a function on its own output
//! space `N_i`, measured in `L1(N_i)` or in the sup-norm over the output grid;
//! the row norms are then combined by `ψ`.
//!
//! For `L1` the error is computed in the iterated form
//! `∫ φ(t) C(t) dμ(t)`, `C(t) = ∫_N K(y, t) dν(y)`, which avoids forming `Aφ` and
//! accepts an analytic `C` when one is known. [`OperatorMatrix::direct_norm`]
//! computes `‖Āg‖` the direct way for arbitrary column functions.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{Domain, Point, QuadratureGrid};
use crate::error::{Error, Result};
use crate::recovery::RecoveryMethod;

/// `K(s, t)`: `s` in the output space, `t` in the input domain.
pub type Kernel = Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>;
/// `t ↦ ∫_N K(y, t) dν(y)`.
pub type ColumnIntegral = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
/// Output point to input point.
pub type PointMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
/// A column function `t ↦ x_j(t)`.
pub type ColumnFn<'a> = &'a (dyn Fn(&Point) -> f64 + Sync);

/// How many kernel samples per operator the positivity check looks at.
const POSITIVITY_SAMPLES: usize = 64;
/// Rounding slack below zero tolerated by the positivity check.
const POSITIVITY_TOL: f64 = 1e-12;

/// Monotone norm on `R^l` combining the row norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PsiNorm {
    L1,
    L2,
    Linf,
    WeightedL1 { weights: Vec<f64> },
}

impl PsiNorm {
    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("weighted-l1 needs positive finite weights".into()));
        }
        Ok(PsiNorm::WeightedL1 { weights })
    }

    pub fn eval(&self, v: &[f64]) -> Result<f64> {
        Ok(match self {
            PsiNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            PsiNorm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            PsiNorm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            PsiNorm::WeightedL1 { weights } => {
                if weights.len() != v.len() {
                    return Err(Error::Input(format!(
                        "weighted-l1 has {} weights for a vector of length {}",
                        weights.len(),
                        v.len()
                    )));
                }
                v.iter().zip(weights).map(|(x, w)| w * x.abs()).sum()
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            PsiNorm::L1 => "l1".into(),
            PsiNorm::L2 => "l2".into(),
            PsiNorm::Linf => "linf".into(),
            PsiNorm::WeightedL1 { weights } => {
                let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                format!("weighted-l1[{}]", w.join(";"))
            }
        }
    }
}

pub fn psi_norm(v: &[f64], psi: &PsiNorm) -> Result<f64> {
    psi.eval(v)
}

/// The norm of the output space `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputNorm {
    L1,
    Sup,
}

impl fmt::Display for OutputNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputNorm::L1 => "L1",
            OutputNorm::Sup => "sup",
        })
    }
}

/// Which part of the ambient space an output grid covers.
#[derive(Debug, Clone, PartialEq)]
pub enum Slice {
    /// The whole output domain.
    Full,
    /// `N = space × {t0}`; output points are space points with `t0` appended.
    FixedTime { t0: f64 },
    /// `N = {u0} × times`; output points are `u0` with the time appended.
    FixedPoint { u0: Point },
    /// `N = {point}` with unit mass.
    SinglePoint,
}

/// An output manifold `N` with its measure `ν`, discretized.
#[derive(Debug, Clone)]
pub struct OutputSpace {
    domain: Domain,
    slice: Slice,
    resolution: usize,
    grid: QuadratureGrid,
}

impl OutputSpace {
    pub fn full(domain: Domain, resolution: usize) -> Result<Self> {
        Self::build(domain, Slice::Full, resolution)
    }

    /// `space × {t0}` where `space` is a truncation of `R^d` covering the supports.
    pub fn fixed_time(space: Domain, t0: f64, resolution: usize) -> Result<Self> {
        Self::build(space, Slice::FixedTime { t0 }, resolution)
    }

    /// `{u0} × times`.
    pub fn fixed_point(u0: Point, times: Domain, resolution: usize) -> Result<Self> {
        if times.ambient_dim() != 1 {
            return Err(Error::Config("a fixed-point ray needs a one-dimensional time range".into()));
        }
        Self::build(times, Slice::FixedPoint { u0 }, resolution)
    }

    pub fn single_point(at: Point) -> Self {
        Self::build(Domain::singleton(at), Slice::SinglePoint, 2).expect("singleton grid")
    }

    fn build(domain: Domain, slice: Slice, resolution: usize) -> Result<Self> {
        let base = domain.build_grid(resolution)?;
        let grid = match &slice {
            Slice::Full | Slice::SinglePoint => base,
            Slice::FixedTime { t0 } => base.map_nodes(|p| p.push(*t0)),
            Slice::FixedPoint { u0 } => base.map_nodes(|p| u0.push(p.x())),
        };
        Ok(OutputSpace { domain, slice, resolution, grid })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn slice(&self) -> &Slice {
        &self.slice
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    fn rebuilt(&self, resolution: usize) -> Result<Self> {
        Self::build(self.domain.clone(), self.slice.clone(), resolution)
    }

    /// `‖v‖_Y` for values at the output nodes.
    pub fn norm(&self, values: &[f64], y: OutputNorm) -> f64 {
        match y {
            OutputNorm::L1 => values.iter().zip(&self.grid.weights).map(|(v, w)| w * v.abs()).sum(),
            OutputNorm::Sup => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// An integral operator `(Tx)(s) = ∫_{M′} K(s, t) x(t) dμ(t)` with a non-negative kernel.
#[derive(Clone)]
pub struct KernelOp {
    domain: Domain,
    resolution: usize,
    grid: QuadratureGrid,
    /// `None` for operators given by a measure rather than a density; those are
    /// known only through their column integral.
    kernel: Option<Kernel>,
    column_integral: Option<ColumnIntegral>,
}

impl fmt::Debug for KernelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelOp")
            .field("domain", &self.domain)
            .field("resolution", &self.resolution)
            .field("analytic_column_integral", &self.column_integral.is_some())
            .finish()
    }
}

impl KernelOp {
    pub fn new<K>(domain: Domain, resolution: usize, kernel: K) -> Result<Self>
    where
        K: Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    {
        let grid = domain.build_grid(resolution)?;
        Ok(KernelOp { domain, resolution, grid, kernel: Some(Arc::new(kernel)), column_integral: None })
    }

    /// An operator whose kernel is a non-negative measure, described only by
    /// `C(t)`. It supports `L1` errors but cannot be applied pointwise.
    pub fn measure_valued<C>(domain: Domain, resolution: usize, c: C) -> Result<Self>
    where
        C: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        let grid = domain.build_grid(resolution)?;
        Ok(KernelOp { domain, resolution, grid, kernel: None, column_integral: Some(Arc::new(c)) })
    }

    /// Supplies `C(t) = ∫_N K(y, t) dν(y)` in closed form.
    pub fn with_column_integral<C>(mut self, c: C) -> Self
    where
        C: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        self.column_integral = Some(Arc::new(c));
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn has_column_integral(&self) -> bool {
        self.column_integral.is_some()
    }

    /// `K(s, t)`; NaN for a measure-valued operator.
    #[inline]
    pub fn kernel(&self, s: &Point, t: &Point) -> f64 {
        match &self.kernel {
            Some(k) => k(s, t),
            None => f64::NAN,
        }
    }

    fn require_kernel(&self) -> Result<&Kernel> {
        self.kernel
            .as_ref()
            .ok_or_else(|| Error::Unsupported("operator has no kernel density; only L1 errors are available".into()))
    }

    fn regrid(&self, resolution: usize) -> Result<Self> {
        let mut op = self.clone();
        op.grid = self.domain.build_grid(resolution)?;
        op.resolution = resolution;
        Ok(op)
    }

    /// `Σ_k w_k K(s, t_k) x_k` for `x` sampled on this operator's grid.
    pub fn apply(&self, x: &[f64], s: &Point) -> Result<f64> {
        if x.len() != self.grid.len() {
            return Err(Error::Input(format!(
                "{} samples for an input grid of {} nodes",
                x.len(),
                self.grid.len()
            )));
        }
        let kernel = self.require_kernel()?;
        let mut acc = 0.0;
        for ((t, w), xv) in self.grid.nodes.iter().zip(&self.grid.weights).zip(x) {
            if *xv == 0.0 {
                continue;
            }
            let k = kernel(s, t);
            if !k.is_finite() {
                return Err(Error::Numerical {
                    what: format!("kernel value {k}"),
                    location: format!("s = {s:?}, t = {t:?}"),
                });
            }
            acc += w * k * xv;
        }
        Ok(acc)
    }

    pub fn apply_fn(&self, x: &dyn Fn(&Point) -> f64, s: &Point) -> Result<f64> {
        self.apply(&self.grid.sample(x), s)
    }

    /// `C(t)`: the closed form if supplied, quadrature over `out` otherwise.
    pub fn column_integral(&self, out: &OutputSpace, t: &Point) -> f64 {
        match &self.column_integral {
            Some(c) => c(t),
            None => self.quadrature_column_integral(out, t),
        }
    }

    pub fn quadrature_column_integral(&self, out: &OutputSpace, t: &Point) -> f64 {
        out.grid.integrate(|y| self.kernel(y, t))
    }

    /// Largest relative gap between the closed-form `C` and quadrature at `samples`.
    pub fn column_integral_deviation(&self, out: &OutputSpace, samples: &[Point]) -> Option<f64> {
        let c = self.column_integral.as_ref()?;
        Some(samples.iter().fold(0.0, |m, t| {
            let exact = c(t);
            let quad = self.quadrature_column_integral(out, t);
            m.max((exact - quad).abs() / exact.abs().max(f64::MIN_POSITIVE))
        }))
    }

    fn check_positive(&self, out: &OutputSpace) -> Result<()> {
        if self.kernel.is_none() {
            return Ok(());
        }
        let ys = strided(&out.grid.nodes, POSITIVITY_SAMPLES);
        let ts = strided(&self.grid.nodes, POSITIVITY_SAMPLES);
        for s in &ys {
            for t in &ts {
                let k = self.kernel(s, t);
                if k.is_nan() {
                    return Err(Error::Numerical {
                        what: "kernel value NaN".into(),
                        location: format!("s = {s:?}, t = {t:?}"),
                    });
                }
                if k < -POSITIVITY_TOL {
                    return Err(Error::Precondition(format!(
                        "operator is not positive: K({s:?}, {t:?}) = {k} < 0"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn strided(nodes: &[Point], count: usize) -> Vec<Point> {
    let step = (nodes.len() / count).max(1);
    nodes.iter().step_by(step).copied().collect()
}

/// `(Tx)(s) = Σ_k c_k x(m_k(s))` with `c_k ≥ 0`; e.g. the `g`-term of d'Alembert's formula.
#[derive(Clone)]
pub struct PointEval {
    maps: Vec<(f64, PointMap)>,
    domain: Domain,
    resolution: usize,
    grid: QuadratureGrid,
    l1_mass: Option<f64>,
}

impl fmt::Debug for PointEval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coefs: Vec<f64> = self.maps.iter().map(|(c, _)| *c).collect();
        f.debug_struct("PointEval")
            .field("coefficients", &coefs)
            .field("domain", &self.domain)
            .field("l1_mass", &self.l1_mass)
            .finish()
    }
}

impl PointEval {
    /// `domain` is the input class domain; its grid is used when `l1_mass` is known.
    pub fn new(domain: Domain, resolution: usize) -> Result<Self> {
        let grid = domain.build_grid(resolution)?;
        Ok(PointEval { maps: Vec::new(), domain, resolution, grid, l1_mass: None })
    }

    pub fn term<M>(mut self, coef: f64, map: M) -> Result<Self>
    where
        M: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        if !(coef.is_finite() && coef >= 0.0) {
            return Err(Error::Precondition(format!("point-evaluation coefficient {coef} is negative")));
        }
        self.maps.push((coef, Arc::new(map)));
        Ok(self)
    }

    /// Declares `∫_N (Tx)(y) dν(y) = mass · ∫ x dμ` for non-negative `x`
    /// (translations of a fixed-time line, for instance).
    pub fn with_l1_mass(mut self, mass: f64) -> Self {
        self.l1_mass = Some(mass);
        self
    }

    pub fn eval(&self, x: &dyn Fn(&Point) -> f64, s: &Point) -> f64 {
        self.maps.iter().map(|(c, m)| c * x(&m(s))).sum()
    }

    fn regrid(&self, resolution: usize) -> Result<Self> {
        let mut p = self.clone();
        p.grid = self.domain.build_grid(resolution)?;
        p.resolution = resolution;
        Ok(p)
    }
}

/// One summand of an operator entry.
#[derive(Debug, Clone)]
pub enum Term {
    Identity,
    Integral(KernelOp),
    PointEval(PointEval),
}

/// `A_ij` as a sum of positive terms; the empty sum is the zero operator.
#[derive(Debug, Clone, Default)]
pub struct OperatorEntry {
    terms: Vec<Term>,
}

impl OperatorEntry {
    pub fn zero() -> Self {
        OperatorEntry { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        OperatorEntry { terms: vec![Term::Identity] }
    }

    pub fn integral(op: KernelOp) -> Self {
        OperatorEntry { terms: vec![Term::Integral(op)] }
    }

    pub fn point_eval(p: PointEval) -> Self {
        OperatorEntry { terms: vec![Term::PointEval(p)] }
    }

    pub fn plus(mut self, term: Term) -> Self {
        self.terms.push(term);
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(A_ij x)(s)`.
    pub fn eval(&self, x: &dyn Fn(&Point) -> f64, s: &Point) -> Result<f64> {
        let mut acc = 0.0;
        for term in &self.terms {
            acc += match term {
                Term::Identity => x(s),
                Term::Integral(op) => op.apply_fn(x, s)?,
                Term::PointEval(p) => p.eval(x, s),
            };
        }
        Ok(acc)
    }

    fn regrid(&self, scale: impl Fn(usize) -> usize + Copy) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(match t {
                    Term::Identity => Term::Identity,
                    Term::Integral(op) => Term::Integral(op.regrid(scale(op.resolution))?),
                    Term::PointEval(p) => Term::PointEval(p.regrid(scale(p.resolution))?),
                })
            })
            .collect::<Result<_>>()?;
        Ok(OperatorEntry { terms })
    }

    fn max_resolution(&self) -> usize {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Identity => 0,
                Term::Integral(op) => op.resolution,
                Term::PointEval(p) => p.resolution,
            })
            .max()
            .unwrap_or(0)
    }
}

/// `l × m` operator matrix with one output space per row and signs `σ` per column.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    outputs: Vec<OutputSpace>,
    entries: Vec<Vec<OperatorEntry>>,
    signs: Vec<f64>,
}

impl OperatorMatrix {
    pub fn new(outputs: Vec<OutputSpace>, entries: Vec<Vec<OperatorEntry>>, signs: Vec<f64>) -> Result<Self> {
        let l = outputs.len();
        if l == 0 || entries.len() != l {
            return Err(Error::Input(format!("{} output spaces for {} rows", l, entries.len())));
        }
        let m = entries[0].len();
        if m == 0 || entries.iter().any(|r| r.len() != m) {
            return Err(Error::Input("operator matrix rows must have equal, positive length".into()));
        }
        let mat = OperatorMatrix { outputs, entries, signs: Vec::new() };
        mat.with_signs(signs)
    }

    /// A `1 × 1` matrix with sign `+1`.
    pub fn single(output: OutputSpace, entry: OperatorEntry) -> Result<Self> {
        Self::new(vec![output], vec![vec![entry]], vec![1.0])
    }

    pub fn with_signs(mut self, signs: Vec<f64>) -> Result<Self> {
        if signs.len() != self.cols() {
            return Err(Error::Input(format!("{} signs for {} columns", signs.len(), self.cols())));
        }
        if signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::Config(format!("signs must be +1 or -1, got {signs:?}")));
        }
        self.signs = signs;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.outputs.len()
    }

    pub fn cols(&self) -> usize {
        self.entries[0].len()
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn output(&self, i: usize) -> &OutputSpace {
        &self.outputs[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> &OperatorEntry {
        &self.entries[i][j]
    }

    /// Largest grid resolution in use.
    pub fn resolution(&self) -> usize {
        let out = self.outputs.iter().map(|o| o.resolution).max().unwrap_or(0);
        let ops = self.entries.iter().flatten().map(|e| e.max_resolution()).max().unwrap_or(0);
        out.max(ops)
    }

    /// The same matrix with every grid at half resolution (at least 2).
    pub fn coarsened(&self) -> Result<Self> {
        let half = |r: usize| (r / 2).max(2);
        let outputs = self
            .outputs
            .iter()
            .map(|o| if o.slice == Slice::SinglePoint { Ok(o.clone()) } else { o.rebuilt(half(o.resolution)) })
            .collect::<Result<_>>()?;
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|e| e.regrid(half)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        Ok(OperatorMatrix { outputs, entries, signs: self.signs.clone() })
    }

    fn check_columns(&self, methods: &[RecoveryMethod]) -> Result<()> {
        if methods.len() != self.cols() {
            return Err(Error::Input(format!(
                "{} recovery methods for {} operator columns",
                methods.len(),
                self.cols()
            )));
        }
        Ok(())
    }

    /// Kernel signs on a sample of node pairs; a negative value violates the
    /// positivity premise of the optimality bound.
    pub fn check_positive(&self) -> Result<()> {
        for (row, out) in self.entries.iter().zip(&self.outputs) {
            for e in row {
                for t in &e.terms {
                    if let Term::Integral(op) = t {
                        op.check_positive(out)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Values of `(Āg)_i` at the output nodes of every row.
    pub fn image(&self, funcs: &[ColumnFn]) -> Result<Vec<Vec<f64>>> {
        if funcs.len() != self.cols() {
            return Err(Error::Input(format!("{} functions for {} columns", funcs.len(), self.cols())));
        }
        let mut rows = Vec::with_capacity(self.rows());
        for (row, out) in self.entries.iter().zip(&self.outputs) {
            let nodes = &out.grid.nodes;
            let mut vals = vec![0.0; nodes.len()];
            for (entry, f) in row.iter().zip(funcs) {
                for term in &entry.terms {
                    let part: Vec<f64> = match term {
                        Term::Identity => nodes.par_iter().map(|s| f(s)).collect(),
                        Term::Integral(op) => {
                            let xs = op.grid.sample(f);
                            nodes.par_iter().map(|s| op.apply(&xs, s)).collect::<Result<_>>()?
                        }
                        Term::PointEval(p) => nodes.par_iter().map(|s| p.eval(f, s)).collect(),
                    };
                    for (v, p) in vals.iter_mut().zip(part) {
                        *v += p;
                    }
                }
            }
            rows.push(vals);
        }
        Ok(rows)
    }

    /// `ψ(‖(Āg)_1‖_Y, …, ‖(Āg)_l‖_Y)` computed from the image on the output grids.
    pub fn direct_norm(&self, funcs: &[ColumnFn], y: OutputNorm, psi: &PsiNorm) -> Result<f64> {
        let image = self.image(funcs)?;
        let norms: Vec<f64> = image.iter().zip(&self.outputs).map(|(v, o)| o.norm(v, y)).collect();
        psi.eval(&norms)
    }

    /// `‖Āσ(x̄ − L̄z̄)‖`: the error of the optimal method on the pair `(x̄, z̄)`.
    pub fn method_error(
        &self,
        methods: &[RecoveryMethod],
        x: &[ColumnFn],
        data: &[Vec<f64>],
        y: OutputNorm,
        psi: &PsiNorm,
    ) -> Result<f64> {
        self.check_columns(methods)?;
        self.check_data(methods, data)?;
        if x.len() != self.cols() {
            return Err(Error::Input(format!("{} functions for {} columns", x.len(), self.cols())));
        }
        let diffs: Vec<Box<dyn Fn(&Point) -> f64 + Sync + '_>> = (0..self.cols())
            .map(|j| {
                let (m, xj, z, sign) = (&methods[j], x[j], &data[j], self.signs[j]);
                Box::new(move |t: &Point| {
                    if !m.domain().contains(t) {
                        return 0.0;
                    }
                    sign * (xj(t) - m.recover_unchecked(z, t))
                }) as Box<dyn Fn(&Point) -> f64 + Sync>
            })
            .collect();
        let refs: Vec<ColumnFn> = diffs.iter().map(|b| b.as_ref() as ColumnFn).collect();
        self.direct_norm(&refs, y, psi)
    }

    fn check_data(&self, methods: &[RecoveryMethod], data: &[Vec<f64>]) -> Result<()> {
        if data.len() != methods.len() {
            return Err(Error::Input(format!("{} data vectors for {} columns", data.len(), methods.len())));
        }
        for (m, z) in methods.iter().zip(data) {
            m.check_data(z)?;
        }
        Ok(())
    }

    /// `(Āσ L̄ z̄)(s)`, one value per row.
    pub fn recovered_solution(&self, methods: &[RecoveryMethod], data: &[Vec<f64>], s: &Point) -> Result<Vec<f64>> {
        self.check_columns(methods)?;
        self.check_data(methods, data)?;
        self.entries
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                for ((entry, m), (z, sign)) in row.iter().zip(methods).zip(data.iter().zip(&self.signs)) {
                    if entry.is_zero() {
                        continue;
                    }
                    acc += sign * entry.eval(&|t: &Point| m.recover_unchecked(z, t), s)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// `‖Āφ̄‖_ψ` at the current resolution. Independent of `σ`.
    pub fn optimal_error_value(&self, methods: &[RecoveryMethod], y: OutputNorm, psi: &PsiNorm) -> Result<f64> {
        self.check_columns(methods)?;
        self.check_positive()?;
        let phis: Vec<Box<dyn Fn(&Point) -> f64 + Sync + '_>> = methods
            .iter()
            .map(|m| Box::new(move |t: &Point| m.majorant(t)) as Box<dyn Fn(&Point) -> f64 + Sync>)
            .collect();
        let refs: Vec<ColumnFn> = phis.iter().map(|b| b.as_ref() as ColumnFn).collect();
        let norms = match y {
            OutputNorm::Sup => {
                let image = self.image(&refs)?;
                image.iter().zip(&self.outputs).map(|(v, o)| o.norm(v, y)).collect()
            }
            OutputNorm::L1 => self
                .entries
                .iter()
                .zip(&self.outputs)
                .map(|(row, out)| row.iter().zip(&refs).map(|(e, phi)| fubini(e, out, *phi)).sum())
                .collect::<Vec<f64>>(),
        };
        psi.eval(&norms)
    }

    /// `‖Āφ̄‖_ψ` with a quadrature error estimate from a half-resolution rerun.
    pub fn optimal_error(
        &self,
        problem: &str,
        methods: &[RecoveryMethod],
        y: OutputNorm,
        psi: &PsiNorm,
    ) -> Result<ErrorReport> {
        let value = self.optimal_error_value(methods, y, psi)?;
        let coarse = self.coarsened()?.optimal_error_value(methods, y, psi)?;
        Ok(ErrorReport::new(problem, methods, y, psi, value, (value - coarse).abs(), self.resolution()))
    }
}

/// `∫_N (A φ)(y) dν(y)` for one entry, as `∫ φ(t) C(t) dμ(t)`.
fn fubini(entry: &OperatorEntry, out: &OutputSpace, phi: ColumnFn) -> f64 {
    let mut total = 0.0;
    for term in &entry.terms {
        total += match term {
            Term::Identity => out.grid.integrate(phi),
            Term::Integral(op) => {
                let g = &op.grid;
                let parts: Vec<f64> = g
                    .nodes
                    .par_iter()
                    .zip(&g.weights)
                    .map(|(t, w)| {
                        let v = phi(t);
                        if v == 0.0 {
                            0.0
                        } else {
                            w * v * op.column_integral(out, t)
                        }
                    })
                    .collect();
                parts.iter().sum()
            }
            Term::PointEval(p) => match p.l1_mass {
                Some(mass) => mass * p.grid.integrate(phi),
                None => out.grid.integrate(|s| p.eval(phi, s)),
            },
        };
    }
    total
}

/// The optimal error of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub problem: String,
    /// Total number of samples over all columns.
    pub n: usize,
    /// Largest sample error bound.
    pub e_max: f64,
    pub y_norm: OutputNorm,
    pub psi: PsiNorm,
    pub value: f64,
    pub est_quad_err: f64,
    pub resolution: usize,
}

impl ErrorReport {
    pub fn new(
        problem: &str,
        methods: &[RecoveryMethod],
        y: OutputNorm,
        psi: &PsiNorm,
        value: f64,
        est_quad_err: f64,
        resolution: usize,
    ) -> Self {
        ErrorReport {
            problem: problem.to_string(),
            n: methods.iter().map(|m| m.n()).sum(),
            e_max: methods.iter().flat_map(|m| m.info().errors()).fold(0.0, |a, e| a.max(*e)),
            y_norm: y,
            psi: psi.clone(),
            value,
            est_quad_err,
            resolution,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::ModulusSpec;
    use crate::recovery::InfoSpec;
    use approx::assert_relative_eq;

    fn identity_method(points: &[f64], errors: &[f64]) -> RecoveryMethod {
        let info = InfoSpec::new(points.iter().map(|&q| Point::scalar(q)).collect(), errors.to_vec()).unwrap();
        RecoveryMethod::plain(ModulusSpec::identity(), info, Domain::unit_interval()).unwrap()
    }

    fn identity_matrix(res: usize) -> OperatorMatrix {
        let out = OutputSpace::full(Domain::unit_interval(), res).unwrap();
        OperatorMatrix::single(out, OperatorEntry::identity()).unwrap()
    }

    #[test]
    fn psi_examples() {
        assert_eq!(PsiNorm::L1.eval(&[1.0, -2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(PsiNorm::Linf.eval(&[1.0, -2.0]).unwrap(), 2.0);
        assert_eq!(PsiNorm::weighted_l1(vec![2.0, 1.0]).unwrap().eval(&[1.0, 1.0]).unwrap(), 3.0);
        assert_relative_eq!(PsiNorm::L2.eval(&[3.0, 4.0]).unwrap(), 5.0);
        assert!(PsiNorm::weighted_l1(vec![1.0, 0.0]).is_err());
        assert!(PsiNorm::weighted_l1(vec![1.0]).unwrap().eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn apply_examples() {
        let op = KernelOp::new(Domain::unit_interval(), 200, |_, _| 1.0).unwrap();
        let s = Point::scalar(0.3);
        assert_relative_eq!(op.apply_fn(&|_| 1.0, &s).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(op.apply_fn(&|_| 0.0, &s).unwrap(), 0.0);
        let m = identity_method(&[0.5], &[0.0]);
        assert_relative_eq!(op.apply_fn(&|t| m.tau(t), &s).unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn nonfinite_kernel_is_reported() {
        let op = KernelOp::new(Domain::unit_interval(), 10, |s, t| 1.0 / (s.x() - t.x())).unwrap();
        let err = op.apply_fn(&|_| 1.0, &Point::scalar(0.05)).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }

    #[test]
    fn identity_error_examples() {
        let mat = identity_matrix(1000);
        let v = |pts: &[f64], es: &[f64]| {
            mat.optimal_error_value(&[identity_method(pts, es)], OutputNorm::L1, &PsiNorm::L1).unwrap()
        };
        assert_relative_eq!(v(&[0.5], &[0.0]), 0.25, epsilon = 1e-6);
        assert_relative_eq!(v(&[0.25, 0.75], &[0.0, 0.0]), 0.125, epsilon = 1e-6);
        assert_relative_eq!(v(&[0.25, 0.75], &[0.1, 0.1]), 0.225, epsilon = 1e-6);
    }

    #[test]
    fn constant_kernel_error_is_integral_of_tau() {
        let out = OutputSpace::full(Domain::unit_interval(), 50).unwrap();
        let op = KernelOp::new(Domain::unit_interval(), 400, |_, _| 1.0).unwrap();
        let mat = OperatorMatrix::single(out, OperatorEntry::integral(op)).unwrap();
        let m = identity_method(&[0.3], &[0.0]);
        let v = mat.optimal_error_value(&[m.clone()], OutputNorm::L1, &PsiNorm::L1).unwrap();
        // ∫|t − 0.3| on [0, 1]
        assert_relative_eq!(v, 0.29, epsilon = 1e-5);
    }

    #[test]
    fn block_diagonal_adds_under_l1() {
        let a = identity_method(&[0.5], &[0.0]);
        let b = identity_method(&[0.25, 0.75], &[0.0, 0.0]);
        let outs = vec![
            OutputSpace::full(Domain::unit_interval(), 400).unwrap(),
            OutputSpace::full(Domain::unit_interval(), 400).unwrap(),
        ];
        let entries = vec![
            vec![OperatorEntry::identity(), OperatorEntry::zero()],
            vec![OperatorEntry::zero(), OperatorEntry::identity()],
        ];
        let mat = OperatorMatrix::new(outs, entries, vec![1.0, -1.0]).unwrap();
        let both = mat.optimal_error_value(&[a.clone(), b.clone()], OutputNorm::L1, &PsiNorm::L1).unwrap();
        let one = identity_matrix(400);
        let sa = one.optimal_error_value(&[a], OutputNorm::L1, &PsiNorm::L1).unwrap();
        let sb = one.optimal_error_value(&[b], OutputNorm::L1, &PsiNorm::L1).unwrap();
        assert_relative_eq!(both, sa + sb, epsilon = 1e-14);
    }

    #[test]
    fn recovered_solution_examples() {
        let mat = identity_matrix(10);
        let m = identity_method(&[0.25, 0.75], &[0.0, 0.0]);
        let s = Point::scalar(0.6);
        assert_eq!(mat.recovered_solution(&[m.clone()], &[vec![2.0, 3.0]], &s).unwrap(), vec![3.0]);
        assert_eq!(mat.recovered_solution(&[m.clone()], &[vec![0.0, 0.0]], &s).unwrap(), vec![0.0]);
        assert!(mat.recovered_solution(&[m], &[vec![1.0]], &s).is_err());
    }

    #[test]
    fn negative_kernel_is_rejected() {
        let out = OutputSpace::full(Domain::unit_interval(), 20).unwrap();
        let op = KernelOp::new(Domain::unit_interval(), 20, |s, t| s.x() - t.x()).unwrap();
        let mat = OperatorMatrix::single(out, OperatorEntry::integral(op)).unwrap();
        let m = identity_method(&[0.5], &[0.0]);
        let err = mat.optimal_error_value(&[m], OutputNorm::L1, &PsiNorm::L1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn sup_norm_of_identity_is_max_tau() {
        let mat = identity_matrix(101);
        let m = identity_method(&[0.5], &[0.1]);
        let v = mat.optimal_error_value(&[m], OutputNorm::Sup, &PsiNorm::L1).unwrap();
        assert_relative_eq!(v, 0.6 - 0.5 / 101.0, epsilon = 1e-12);
    }

    #[test]
    fn report_estimates_quadrature_error() {
        let mat = identity_matrix(101);
        let m = identity_method(&[0.3], &[0.0]);
        let r = mat.optimal_error("identity", &[m], OutputNorm::L1, &PsiNorm::L1).unwrap();
        assert_eq!(r.n, 1);
        assert!(r.est_quad_err < 1e-3);
        assert!((r.value - 0.29).abs() <= r.est_quad_err.max(1e-4));
    }
}
