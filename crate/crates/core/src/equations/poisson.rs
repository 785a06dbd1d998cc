//! `−Δx = f` in a disk `Ω = B(a, r)`, `x = g` on `∂Ω`, solved by the Green's
//! function and the Poisson kernel:
//!
//! ```text
//! x(s) = ∫_Ω G(s, t) f(t) dt + ∫_{∂Ω} P(s, ζ) g(ζ) dσ(ζ)
//! ```

use std::f64::consts::PI;

use crate::domains::{Domain, Point};
use crate::error::{Error, Result};
use crate::operators::{ErrorReport, KernelOp, OperatorEntry, OperatorMatrix, OutputNorm, OutputSpace, PsiNorm};
use crate::recovery::RecoveryMethod;

/// Disk geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: [f64; 2],
    pub r: f64,
}

impl Disk {
    pub fn new(center: [f64; 2], r: f64) -> Result<Self> {
        Domain::disk(center, r)?;
        Ok(Disk { center, r })
    }

    fn local(&self, p: &Point) -> [f64; 2] {
        [p.coords()[0] - self.center[0], p.coords()[1] - self.center[1]]
    }

    /// `G(x, y) = −(1/2π)[ln|x − y| − ln(|y||x − y*|/r)]`, `y* = r²y/|y|²`,
    /// in coordinates centred at `a`; `G(x, a) = −(1/2π) ln(|x − a|/r)`.
    pub fn green(&self, x: &Point, y: &Point) -> f64 {
        let x = self.local(x);
        let y = self.local(y);
        let dist = (x[0] - y[0]).hypot(x[1] - y[1]);
        let ny = y[0].hypot(y[1]);
        if ny < 1e-300 {
            return -(x[0].hypot(x[1]) / self.r).ln() / (2.0 * PI);
        }
        let k = self.r * self.r / (ny * ny);
        let image = (x[0] - k * y[0]).hypot(x[1] - k * y[1]);
        -(dist.ln() - (ny * image / self.r).ln()) / (2.0 * PI)
    }

    /// `P(x, ζ) = (r² − |x − a|²) / (2πr |x − ζ|²)` for `ζ ∈ ∂Ω`.
    pub fn poisson_kernel(&self, x: &Point, zeta: &Point) -> f64 {
        let xl = self.local(x);
        let d2 = (x.coords()[0] - zeta.coords()[0]).powi(2) + (x.coords()[1] - zeta.coords()[1]).powi(2);
        (self.r * self.r - xl[0] * xl[0] - xl[1] * xl[1]) / (2.0 * PI * self.r * d2)
    }

    /// Polar midpoint nodes: `(node, weight, ring index)`.
    fn polar(&self, resolution: usize) -> Vec<(Point, f64, usize)> {
        let (nr, nt) = (resolution, 4 * resolution);
        let dr = self.r / nr as f64;
        let dt = 2.0 * PI / nt as f64;
        let mut out = Vec::with_capacity(nr * nt);
        for i in 0..nr {
            let rho = (i as f64 + 0.5) * dr;
            for k in 0..nt {
                let th = (k as f64 + 0.5) * dt;
                let p = Point::new(&[self.center[0] + rho * th.cos(), self.center[1] + rho * th.sin()]);
                out.push((p, rho * dr * dt, i));
            }
        }
        out
    }

    /// `∫_Ω G(t, s) dt` by polar quadrature for `|s − a| = rho`.
    ///
    /// The point is placed at angle 0, which no node shares.
    pub fn green_mass_numeric(&self, rho: f64, resolution: usize) -> f64 {
        let s = Point::new(&[self.center[0] + rho, self.center[1]]);
        self.polar(resolution).iter().map(|(t, w, _)| w * self.green(t, &s)).sum()
    }

    /// `∫_Ω P(t, ζ) dt` by polar quadrature (the same for every `ζ`).
    pub fn poisson_mass_numeric(&self, resolution: usize) -> f64 {
        let zeta = Point::new(&[self.center[0] + self.r, self.center[1]]);
        self.polar(resolution).iter().map(|(t, w, _)| w * self.poisson_kernel(t, &zeta)).sum()
    }
}

/// Both evaluations of the `L1(Ω)` optimal error of the disk problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonDiskError {
    /// `(1/2)∫_Ω (r² − |s − a|²) τ1 + (r/2)∫_{∂Ω} τ2`.
    pub half_factor: f64,
    /// `∫_Ω τ1(s)[∫_Ω G(t, s) dt] ds + ∫_{∂Ω} τ2(ζ)[∫_Ω P(t, ζ) dt] dσ(ζ)`
    /// with the inner integrals done by quadrature.
    pub cross_check: f64,
    /// `cross_check / half_factor`.
    pub ratio: f64,
    pub resolution: usize,
}

/// Evaluates the half-factor closed form and the Green's-function cross-check.
///
/// Inner integrals are computed once per radial ring, by rotational symmetry.
pub fn poisson_disk_error(
    disk: &Disk,
    tau1: &dyn Fn(&Point) -> f64,
    tau2: &dyn Fn(&Point) -> f64,
    resolution: usize,
) -> Result<PoissonDiskError> {
    if resolution < 2 {
        return Err(Error::Config(format!("grid resolution must be >= 2, got {resolution}")));
    }
    let r = disk.r;
    let nodes = disk.polar(resolution);
    let rings: Vec<f64> = (0..resolution)
        .map(|i| disk.green_mass_numeric((i as f64 + 0.5) * r / resolution as f64, resolution))
        .collect();
    let circle = Domain::circle(disk.center, r)?.build_grid(4 * resolution)?;
    let boundary = circle.integrate(tau2);
    let (mut half_in, mut cross_in) = (0.0, 0.0);
    for (t, w, ring) in &nodes {
        let v = tau1(t);
        if v == 0.0 {
            continue;
        }
        let l = disk.local(t);
        half_in += w * (r * r - l[0] * l[0] - l[1] * l[1]) * v;
        cross_in += w * rings[*ring] * v;
    }
    let half_factor = 0.5 * half_in + 0.5 * r * boundary;
    let cross_check = cross_in + disk.poisson_mass_numeric(resolution) * boundary;
    let ratio = if half_factor == 0.0 { f64::NAN } else { cross_check / half_factor };
    Ok(PoissonDiskError { half_factor, cross_check, ratio, resolution })
}

/// The disk problem with classes for `f` (on the disk) and `g` (on the circle).
#[derive(Debug, Clone)]
pub struct PoissonProblem {
    disk: Disk,
    f: RecoveryMethod,
    g: RecoveryMethod,
}

impl PoissonProblem {
    pub fn new(f: RecoveryMethod, g: RecoveryMethod) -> Result<Self> {
        let (Domain::Disk { center, radius }, Domain::Circle { center: c2, radius: r2 }) = (f.domain(), g.domain())
        else {
            return Err(Error::Config("the Poisson problem needs an f-class on a disk and a g-class on a circle".into()));
        };
        if center != c2 || radius != r2 {
            return Err(Error::Config("the g-class circle must bound the f-class disk".into()));
        }
        let disk = Disk::new(*center, *radius)?;
        Ok(PoissonProblem { disk, f, g })
    }

    pub fn disk(&self) -> &Disk {
        &self.disk
    }

    pub fn methods(&self) -> Vec<RecoveryMethod> {
        vec![self.f.clone(), self.g.clone()]
    }

    pub fn error(&self, resolution: usize) -> Result<PoissonDiskError> {
        poisson_disk_error(&self.disk, &|t| self.f.majorant(t), &|t| self.g.majorant(t), resolution)
    }

    /// `1 × 2` solution operator with output on the disk and closed-form
    /// column integrals `(r² − |t − a|²)/4` and `r/2`.
    pub fn matrix(&self, resolution: usize) -> Result<OperatorMatrix> {
        let d = self.disk;
        let fop = KernelOp::new(self.f.domain().clone(), resolution, move |s: &Point, t: &Point| d.green(s, t))?
            .with_column_integral(move |t: &Point| {
                let l = d.local(t);
                (d.r * d.r - l[0] * l[0] - l[1] * l[1]) / 4.0
            });
        let gop = KernelOp::new(self.g.domain().clone(), 4 * resolution, move |s: &Point, z: &Point| {
            d.poisson_kernel(s, z)
        })?
        .with_column_integral(move |_: &Point| d.r / 2.0);
        let out = OutputSpace::full(self.f.domain().clone(), resolution)?;
        OperatorMatrix::new(
            vec![out],
            vec![vec![OperatorEntry::integral(fop), OperatorEntry::integral(gop)]],
            vec![1.0, 1.0],
        )
    }

    pub fn optimal_error(&self, y: OutputNorm, psi: &PsiNorm, resolution: usize) -> Result<ErrorReport> {
        self.matrix(resolution)?.optimal_error("poisson-disk", &self.methods(), y, psi)
    }

    /// Recovered solution at `s` from samples of `f` and `g`.
    pub fn recover(&self, zf: &[f64], zg: &[f64], s: &Point, resolution: usize) -> Result<f64> {
        self.f.check_data(zf)?;
        self.g.check_data(zg)?;
        let d = &self.disk;
        let mut acc = 0.0;
        for (t, w, _) in d.polar(resolution) {
            if t.euclid(s) < 1e-12 {
                continue;
            }
            acc += w * d.green(s, &t) * self.f.recover_unchecked(zf, &t);
        }
        let circle = self.g.domain().build_grid(4 * resolution)?;
        acc += circle.integrate(|z| d.poisson_kernel(s, z) * self.g.recover_unchecked(zg, z));
        Ok(acc)
    }
}
