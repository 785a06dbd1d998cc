//! The wave equation `x_tt = Δx + f` in `R^d × (0, ∞)` with `x(·, 0) = g`,
//! `x_t(·, 0) = h`, solved by d'Alembert's (`d = 1`), Poisson's (`d = 2`) and
//! Kirchhoff's (`d = 3`) formulas. In two and three dimensions `g ≡ 0`.
//!
//! Space-time points carry time as their last coordinate.

use std::f64::consts::PI;

use crate::domains::{Domain, Point};
use crate::error::{Error, Result};
use crate::operators::{
    ErrorReport, KernelOp, OperatorEntry, OperatorMatrix, OutputNorm, OutputSpace, PointEval, PsiNorm,
};
use crate::quadrature::composite_gauss;
use crate::recovery::RecoveryMethod;

type Field<'a> = &'a dyn Fn(&Point) -> f64;

fn gauss(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    composite_gauss(a, b, panels.max(1), 4).expect("degree 4 rule")
}

/// d'Alembert's formula:
/// `(g(u−t) + g(u+t))/2 + (1/2)∫_{u−t}^{u+t} h + (1/2)∫_0^t ∫_{|v−u|<t−s} f(v, s) dv ds`.
pub fn dalembert(f: Field, g: Field, h: Field, u: f64, t: f64, panels: usize) -> f64 {
    let mut x = 0.5 * (g(&Point::scalar(u - t)) + g(&Point::scalar(u + t)));
    if t <= 0.0 {
        return x;
    }
    let (vs, ws) = gauss(u - t, u + t, panels);
    x += 0.5 * vs.iter().zip(&ws).map(|(v, w)| w * h(&Point::scalar(*v))).sum::<f64>();
    let (ss, wss) = gauss(0.0, t, panels);
    for (s, ws_) in ss.iter().zip(&wss) {
        let reach = t - s;
        let (vs, wv) = gauss(u - reach, u + reach, panels);
        let inner: f64 = vs.iter().zip(&wv).map(|(v, w)| w * f(&Point::new(&[*v, *s]))).sum();
        x += 0.5 * ws_ * inner;
    }
    x
}

/// `(1/2π)∫_{|v|<ρ} q(u + v)/√(ρ² − |v|²) dv`, written with `|v| = ρ sin θ` so the
/// integrand is bounded.
fn disk_mean(q: &dyn Fn([f64; 2]) -> f64, u: [f64; 2], rho: f64, panels: usize) -> f64 {
    let (ths, wth) = gauss(0.0, PI / 2.0, panels);
    let nphi = 16 * panels.max(1);
    let dphi = 2.0 * PI / nphi as f64;
    let mut acc = 0.0;
    for (th, wt) in ths.iter().zip(&wth) {
        let r = rho * th.sin();
        let mut ring = 0.0;
        for k in 0..nphi {
            let phi = (k as f64 + 0.5) * dphi;
            ring += q([u[0] + r * phi.cos(), u[1] + r * phi.sin()]);
        }
        acc += wt * rho * th.sin() * ring * dphi;
    }
    acc / (2.0 * PI)
}

/// Poisson's formula for `d = 2`.
pub fn poisson_wave_2d(f: Field, h: Field, u: [f64; 2], t: f64, panels: usize) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let mut x = disk_mean(&|v| h(&Point::new(&v)), u, t, panels);
    let (ss, ws) = gauss(0.0, t, panels);
    for (s, w) in ss.iter().zip(&ws) {
        x += w * disk_mean(&|v| f(&Point::new(&[v[0], v[1], *s])), u, t - s, panels);
    }
    x
}

/// Directions and weights of a product rule on `S²` (Gauss in `cos θ`, uniform
/// in `φ`); the weights sum to `4π`.
fn sphere_rule(panels: usize) -> Vec<([f64; 3], f64)> {
    let (zs, wz) = gauss(-1.0, 1.0, panels);
    let nphi = 2 * zs.len();
    let dphi = 2.0 * PI / nphi as f64;
    let mut out = Vec::with_capacity(zs.len() * nphi);
    for (z, w) in zs.iter().zip(&wz) {
        let s = (1.0 - z * z).max(0.0).sqrt();
        for k in 0..nphi {
            let phi = (k as f64 + 0.5) * dphi;
            out.push(([s * phi.cos(), s * phi.sin(), *z], w * dphi));
        }
    }
    out
}

/// Kirchhoff's formula for `d = 3`:
/// `(t/4π)∫_{S²} h(u + tω) dω + (1/4π)∫_0^t ρ ∫_{S²} f(u + ρω, t − ρ) dω dρ`.
pub fn kirchhoff_3d(f: Field, h: Field, u: [f64; 3], t: f64, panels: usize) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let sphere = sphere_rule(panels);
    let mean = |q: &dyn Fn([f64; 3]) -> f64, rho: f64| -> f64 {
        sphere
            .iter()
            .map(|(w3, w)| w * q([u[0] + rho * w3[0], u[1] + rho * w3[1], u[2] + rho * w3[2]]))
            .sum::<f64>()
            / (4.0 * PI)
    };
    let mut x = t * mean(&|v| h(&Point::new(&v)), t);
    let (rs, wr) = gauss(0.0, t, panels);
    for (rho, w) in rs.iter().zip(&wr) {
        x += w * rho * mean(&|v| f(&Point::new(&[v[0], v[1], v[2], t - rho])), *rho);
    }
    x
}

/// The `L1(R^d × {t0})` optimal error in closed form.
///
/// `taus` lists `(τ_i, M_i)`: `(f, g, h)` for `d = 1`, `(f, h)` for `d = 2, 3`.
/// Returns `∫∫ τ1 (t0 − s)⁺ + ∫τ2 + t0∫τ3` or `∫∫ τ1 (t0 − s)⁺ + t0∫τ2`.
pub fn wave_l1_error(d: usize, t0: f64, taus: &[(Field, &Domain)], resolution: usize) -> Result<f64> {
    check_dim(d)?;
    let expected = if d == 1 { 3 } else { 2 };
    if taus.len() != expected {
        return Err(Error::Input(format!("d = {d} needs {expected} majorants, got {}", taus.len())));
    }
    let weights: Vec<f64> = if d == 1 { vec![1.0, t0] } else { vec![t0] };
    let (tau1, m1) = taus[0];
    let mut value = m1.build_grid(resolution)?.integrate(|p| tau1(p) * (t0 - p.last()).max(0.0));
    for ((tau, m), c) in taus[1..].iter().zip(weights) {
        value += c * m.build_grid(resolution)?.integrate(tau);
    }
    Ok(value)
}

fn check_dim(d: usize) -> Result<()> {
    if !(1..=3).contains(&d) {
        return Err(Error::Unsupported(format!("wave solutions are implemented for d = 1, 2, 3, got {d}")));
    }
    Ok(())
}

/// Classes for the wave data at output time `t0`.
#[derive(Debug, Clone)]
pub struct WaveProblem {
    d: usize,
    t0: f64,
    methods: Vec<RecoveryMethod>,
}

impl WaveProblem {
    /// `methods` are `(f, g, h)` for `d = 1` and `(f, h)` for `d = 2, 3`.
    pub fn new(d: usize, t0: f64, methods: Vec<RecoveryMethod>) -> Result<Self> {
        check_dim(d)?;
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::Config(format!("output time must be positive, got {t0}")));
        }
        let expected = if d == 1 { 3 } else { 2 };
        if methods.len() != expected {
            return Err(Error::Config(format!("the wave problem with d = {d} needs {expected} classes, got {}", methods.len())));
        }
        match methods[0].domain() {
            Domain::SpaceTime { lo, .. } if lo.len() == d => {}
            other => {
                return Err(Error::Config(format!("the source class needs a space-time box with {d} space dimensions, got {other:?}")))
            }
        }
        if let Some(m) = methods[1..].iter().find(|m| m.domain().ambient_dim() != d) {
            return Err(Error::Config(format!("initial-data class {:?} is not {d}-dimensional", m.domain())));
        }
        Ok(WaveProblem { d, t0, methods })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn methods(&self) -> &[RecoveryMethod] {
        &self.methods
    }

    pub fn closed_form_error(&self, resolution: usize) -> Result<f64> {
        let phis: Vec<Box<dyn Fn(&Point) -> f64 + '_>> =
            self.methods.iter().map(|m| Box::new(move |t: &Point| m.majorant(t)) as Box<dyn Fn(&Point) -> f64>).collect();
        let taus: Vec<(Field, &Domain)> = phis.iter().zip(&self.methods).map(|(p, m)| (p.as_ref(), m.domain())).collect();
        wave_l1_error(self.d, self.t0, &taus, resolution)
    }

    /// Output line: a box covering every support, widened by `t0`.
    fn output_box(&self) -> Result<Domain> {
        let d = self.d;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for m in &self.methods {
            let (l, h) = m.domain().bounds();
            for i in 0..d {
                lo[i] = lo[i].min(l[i] - self.t0);
                hi[i] = hi[i].max(h[i] + self.t0);
            }
        }
        Domain::cube(&lo, &hi)
    }

    /// The solution operator into `L1(R^d × {t0})`, one row.
    pub fn matrix(&self, resolution: usize) -> Result<OperatorMatrix> {
        let (d, t0) = (self.d, self.t0);
        let out = OutputSpace::fixed_time(self.output_box()?, t0, resolution)?;
        let reach = move |p: &Point| (t0 - p.last()).max(0.0);
        let dist = move |o: &Point, i: &Point| -> f64 {
            (0..d).map(|k| (o.coords()[k] - i.coords()[k]).powi(2)).sum::<f64>().sqrt()
        };
        let m = &self.methods;
        let row = match d {
            1 => {
                let f = KernelOp::new(m[0].domain().clone(), resolution, move |o: &Point, i: &Point| {
                    if dist(o, i) < t0 - i.last() { 0.5 } else { 0.0 }
                })?
                .with_column_integral(reach);
                let g = PointEval::new(m[1].domain().clone(), resolution)?
                    .term(0.5, move |o: &Point| Point::scalar(o.x() - t0))?
                    .term(0.5, move |o: &Point| Point::scalar(o.x() + t0))?
                    .with_l1_mass(1.0);
                let h = KernelOp::new(m[2].domain().clone(), resolution, move |o: &Point, v: &Point| {
                    if dist(o, v) < t0 { 0.5 } else { 0.0 }
                })?
                .with_column_integral(move |_: &Point| t0);
                vec![OperatorEntry::integral(f), OperatorEntry::point_eval(g), OperatorEntry::integral(h)]
            }
            2 => {
                let cone = move |r2: f64, rho: f64| {
                    let q = rho * rho - r2;
                    if rho > 0.0 && q > 0.0 { 1.0 / (2.0 * PI * q.sqrt()) } else { 0.0 }
                };
                let f = KernelOp::new(m[0].domain().clone(), resolution, move |o: &Point, i: &Point| {
                    cone(dist(o, i).powi(2), t0 - i.last())
                })?
                .with_column_integral(reach);
                let h = KernelOp::new(m[1].domain().clone(), resolution, move |o: &Point, v: &Point| {
                    cone(dist(o, v).powi(2), t0)
                })?
                .with_column_integral(move |_: &Point| t0);
                vec![OperatorEntry::integral(f), OperatorEntry::integral(h)]
            }
            _ => {
                // spherical-mean kernels are surface measures
                let f = KernelOp::measure_valued(m[0].domain().clone(), resolution, reach)?;
                let h = KernelOp::measure_valued(m[1].domain().clone(), resolution, move |_: &Point| t0)?;
                vec![OperatorEntry::integral(f), OperatorEntry::integral(h)]
            }
        };
        let n = row.len();
        OperatorMatrix::new(vec![out], vec![row], vec![1.0; n])
    }

    pub fn optimal_error(&self, y: OutputNorm, psi: &PsiNorm, resolution: usize) -> Result<ErrorReport> {
        let name = format!("wave{}d", self.d);
        self.matrix(resolution)?.optimal_error(&name, &self.methods, y, psi)
    }

    /// Recovered `x(u, t0)` from one data vector per class.
    pub fn recover(&self, data: &[Vec<f64>], u: &[f64], panels: usize) -> Result<f64> {
        if data.len() != self.methods.len() {
            return Err(Error::Input(format!("{} data vectors for {} classes", data.len(), self.methods.len())));
        }
        if u.len() != self.d {
            return Err(Error::Input(format!("output point has {} coordinates, expected {}", u.len(), self.d)));
        }
        for (m, z) in self.methods.iter().zip(data) {
            m.check_data(z)?;
        }
        let l = |j: usize| {
            let (m, z) = (&self.methods[j], &data[j]);
            move |p: &Point| m.recover_unchecked(z, p)
        };
        Ok(match self.d {
            1 => dalembert(&l(0), &l(1), &l(2), u[0], self.t0, panels),
            2 => poisson_wave_2d(&l(0), &l(1), [u[0], u[1]], self.t0, panels),
            _ => kirchhoff_3d(&l(0), &l(1), [u[0], u[1], u[2]], self.t0, panels),
        })
    }
}
