//! Linear systems `x′ = S x + q(t)`, `x(a) = p`, solved through the matrix
//! exponential.
//!
//! The solution `x(t) = e^{S(t−a)} p + ∫_a^t e^{S(t−u)} q(u) du` is a positive
//! operator of `(p, q)` exactly when `S` is essentially non-negative (Metzler).

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::domains::{Domain, Point};
use crate::error::{Error, Result};
use crate::modulus::ModulusSpec;
use crate::operators::{ErrorReport, KernelOp, OperatorEntry, OperatorMatrix, OutputNorm, OutputSpace, PsiNorm};
use crate::quadrature::composite_gauss;
use crate::recovery::{InfoSpec, RecoveryMethod};

const TAYLOR_MAX_TERMS: usize = 40;
/// Lag-table intervals for interpolated kernel evaluation.
pub const LAG_INTERVALS: usize = 2048;

/// `e^{S h}` by scaling and squaring with a Taylor core.
pub fn matrix_exponential(s: &DMatrix<f64>, h: f64) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::Input(format!("matrix exponential needs a square matrix, got {}x{}", s.nrows(), s.ncols())));
    }
    let n = s.nrows();
    let a = s * h;
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    if !norm1.is_finite() {
        return Err(Error::Numerical { what: "non-finite matrix entry".into(), location: format!("S·h with h = {h}") });
    }
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let b = &a / 2f64.powi(squarings);
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=TAYLOR_MAX_TERMS {
        term = &term * &b / k as f64;
        sum += &term;
        if term.amax() <= 1e-18 * sum.amax() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if sum.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            what: "matrix exponential overflowed".into(),
            location: format!("‖S·h‖₁ = {norm1}"),
        });
    }
    Ok(sum)
}

/// Rejects a matrix with a negative off-diagonal entry.
pub fn check_metzler(s: &DMatrix<f64>) -> Result<()> {
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            if i != j && s[(i, j)] < 0.0 {
                return Err(Error::Precondition(format!(
                    "S is not essentially non-negative: S[{i}][{j}] = {} < 0",
                    s[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// `E(τ) = e^{Sτ}` and `J(τ) = ∫_0^τ e^{Sσ} dσ` on `[0, horizon]`, tabulated for
/// cubic Hermite interpolation (the derivatives `S E` and `E` are exact).
#[derive(Debug, Clone)]
pub struct MatrixExp {
    s: DMatrix<f64>,
    horizon: f64,
    dt: f64,
    e: Vec<DMatrix<f64>>,
    se: Vec<DMatrix<f64>>,
    j: Vec<DMatrix<f64>>,
}

impl MatrixExp {
    pub fn new(s: DMatrix<f64>, horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || intervals == 0 {
            return Err(Error::Config(format!("lag table needs a positive horizon, got {horizon}")));
        }
        let n = s.nrows();
        // exp([[S, I], [0, 0]] τ) = [[E(τ), J(τ)], [0, I]]
        let mut aug = DMatrix::zeros(2 * n, 2 * n);
        aug.view_mut((0, 0), (n, n)).copy_from(&s);
        aug.view_mut((0, n), (n, n)).fill_with_identity();
        let dt = horizon / intervals as f64;
        let step = matrix_exponential(&aug, dt)?;
        let mut cur = DMatrix::identity(2 * n, 2 * n);
        let (mut e, mut se, mut j) = (Vec::new(), Vec::new(), Vec::new());
        for k in 0..=intervals {
            if k > 0 {
                // refresh from scratch periodically to stop drift in long products
                cur = if k % 64 == 0 { matrix_exponential(&aug, k as f64 * dt)? } else { &cur * &step };
            }
            let ek = cur.view((0, 0), (n, n)).into_owned();
            se.push(&s * &ek);
            j.push(cur.view((0, n), (n, n)).into_owned());
            e.push(ek);
        }
        Ok(MatrixExp { s, horizon, dt, e, se, j })
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// `e^{Sτ}` computed directly.
    pub fn eval(&self, tau: f64) -> Result<DMatrix<f64>> {
        matrix_exponential(&self.s, tau)
    }

    fn hermite(&self, tau: f64, v: &[DMatrix<f64>], dv: &[DMatrix<f64>], i: usize, k: usize) -> f64 {
        let tau = tau.clamp(0.0, self.horizon);
        let last = self.e.len() - 1;
        let u = tau / self.dt;
        let n = (u.floor() as usize).min(last - 1);
        let x = u - n as f64;
        let (h00, h10) = ((1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x), x * (1.0 - x) * (1.0 - x));
        let (h01, h11) = (x * x * (3.0 - 2.0 * x), x * x * (x - 1.0));
        h00 * v[n][(i, k)] + h10 * self.dt * dv[n][(i, k)] + h01 * v[n + 1][(i, k)] + h11 * self.dt * dv[n + 1][(i, k)]
    }

    /// `[e^{Sτ}]_{ik}`, interpolated; zero for `τ < 0`.
    pub fn entry(&self, i: usize, k: usize, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        self.hermite(tau, &self.e, &self.se, i, k)
    }

    /// `[∫_0^τ e^{Sσ} dσ]_{ik}`, interpolated; zero for `τ ≤ 0`.
    pub fn integral_entry(&self, i: usize, k: usize, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        self.hermite(tau, &self.j, &self.e, i, k)
    }
}

/// `e^{S(t−a)} p + ∫_a^t e^{S(t−u)} q(u) du` by composite Gauss-Legendre.
pub fn variation_of_constants(
    exp: &MatrixExp,
    a: f64,
    p: &[f64],
    q: &dyn Fn(f64) -> Vec<f64>,
    t: f64,
    panels: usize,
) -> Result<Vec<f64>> {
    let d = exp.dim();
    if p.len() != d {
        return Err(Error::Input(format!("initial value has length {}, expected {d}", p.len())));
    }
    let mut x: Vec<f64> = (0..d).map(|i| (0..d).map(|k| exp.entry(i, k, t - a) * p[k]).sum()).collect();
    if t > a {
        let (us, ws) = composite_gauss(a, t, panels, 4)?;
        for (u, w) in us.iter().zip(&ws) {
            let qu = q(*u);
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += w * (0..d).map(|k| exp.entry(i, k, t - u) * qu[k]).sum::<f64>();
            }
        }
    }
    Ok(x)
}

/// A Metzler system on `[a, b]` with an inexactly known initial value `p` and
/// right-hand side components `q_k` recovered from point samples.
#[derive(Debug, Clone)]
pub struct OdeProblem {
    a: f64,
    b: f64,
    exp: Arc<MatrixExp>,
    p_methods: Vec<RecoveryMethod>,
    q_methods: Vec<RecoveryMethod>,
}

impl OdeProblem {
    /// `p_errors[k]` bounds the error of the measured `p_k`.
    pub fn new(s: DMatrix<f64>, a: f64, b: f64, p_errors: Vec<f64>, q_methods: Vec<RecoveryMethod>) -> Result<Self> {
        if !s.is_square() || s.nrows() == 0 {
            return Err(Error::Config("S must be a non-empty square matrix".into()));
        }
        check_metzler(&s)?;
        let d = s.nrows();
        if p_errors.len() != d || q_methods.len() != d {
            return Err(Error::Config(format!(
                "a {d}x{d} system needs {d} initial-value errors and {d} right-hand-side classes"
            )));
        }
        let span = Domain::interval(a, b)?;
        if let Some(m) = q_methods.iter().find(|m| *m.domain() != span) {
            return Err(Error::Config(format!("right-hand-side class lives on {:?}, expected [{a}, {b}]", m.domain())));
        }
        let origin = Point::scalar(0.0);
        let p_methods = p_errors
            .iter()
            .map(|e| {
                let info = InfoSpec::new(vec![origin], vec![*e])?;
                RecoveryMethod::plain(ModulusSpec::identity(), info, Domain::singleton(origin))
            })
            .collect::<Result<_>>()?;
        let exp = Arc::new(MatrixExp::new(s, b - a, LAG_INTERVALS)?);
        Ok(OdeProblem { a, b, exp, p_methods, q_methods })
    }

    pub fn dim(&self) -> usize {
        self.exp.dim()
    }

    pub fn exp(&self) -> &MatrixExp {
        &self.exp
    }

    /// Column methods: the `d` initial-value coordinates, then the `d` components of `q`.
    pub fn methods(&self) -> Vec<RecoveryMethod> {
        self.p_methods.iter().chain(&self.q_methods).cloned().collect()
    }

    /// The `d × 2d` solution operator with rows on `[a, b]`.
    pub fn matrix(&self, resolution: usize) -> Result<OperatorMatrix> {
        let d = self.dim();
        let span = Domain::interval(self.a, self.b)?;
        let (a, b) = (self.a, self.b);
        let mut outputs = Vec::with_capacity(d);
        let mut entries = Vec::with_capacity(d);
        for i in 0..d {
            outputs.push(OutputSpace::full(span.clone(), resolution)?);
            let mut row = Vec::with_capacity(2 * d);
            for k in 0..d {
                let (e1, e2) = (Arc::clone(&self.exp), Arc::clone(&self.exp));
                let op = KernelOp::new(self.p_methods[k].domain().clone(), 2, move |s: &Point, _: &Point| {
                    e1.entry(i, k, s.x() - a)
                })?
                .with_column_integral(move |_: &Point| e2.integral_entry(i, k, b - a));
                row.push(OperatorEntry::integral(op));
            }
            for k in 0..d {
                let (e1, e2) = (Arc::clone(&self.exp), Arc::clone(&self.exp));
                let op = KernelOp::new(span.clone(), resolution, move |s: &Point, u: &Point| {
                    let v = e1.entry(i, k, s.x() - u.x());
                    // half cell on the diagonal, as for the Volterra kernel
                    if s.x() == u.x() { 0.5 * v } else { v }
                })?
                .with_column_integral(move |u: &Point| e2.integral_entry(i, k, b - u.x()));
                row.push(OperatorEntry::integral(op));
            }
            entries.push(row);
        }
        OperatorMatrix::new(outputs, entries, vec![1.0; 2 * d])
    }

    /// Recovered state at time `t` from measured `p` and samples of each `q_k`.
    pub fn recover(&self, p: &[f64], q_data: &[Vec<f64>], t: f64) -> Result<Vec<f64>> {
        if q_data.len() != self.dim() {
            return Err(Error::Input(format!("{} data vectors for {} components of q", q_data.len(), self.dim())));
        }
        for (m, z) in self.q_methods.iter().zip(q_data) {
            m.check_data(z)?;
        }
        let q = |u: f64| -> Vec<f64> {
            let pt = Point::scalar(u);
            self.q_methods.iter().zip(q_data).map(|(m, z)| m.recover_unchecked(z, &pt)).collect()
        };
        variation_of_constants(&self.exp, self.a, p, &q, t, 512)
    }

    pub fn optimal_error(&self, y: OutputNorm, psi: &PsiNorm, resolution: usize) -> Result<ErrorReport> {
        self.matrix(resolution)?.optimal_error("ode", &self.methods(), y, psi)
    }
}
