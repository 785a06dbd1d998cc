//! Cauchy problem `x_t = Δx + f` in `R^d × (0, ∞)`, `x(·, 0) = h`, with the
//! heat kernels
//!
//! ```text
//! K1((u,t),(v,s)) = exp(−|u−v|²/(4(t−s))) / (4π(t−s))^{d/2} · χ(0,t)(s)
//! K2((u,t), v)    = exp(−|u−v|²/(4t)) / (4πt)^{d/2}
//! ```
//!
//! Both classes are of the vanishing-on-the-boundary kind, so `f` and `h` are
//! supported in the compact domains of their recovery methods.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::domains::{Domain, Point};
use crate::error::{Error, Result};
use crate::operators::{ErrorReport, KernelOp, OperatorEntry, OperatorMatrix, OutputNorm, OutputSpace, PsiNorm};
use crate::quadrature::adaptive_simpson;
use crate::recovery::{RecoveryMethod, Variant};

/// Gaussian tails are cut this many standard deviations out.
pub const TAIL_SIGMAS: f64 = 12.0;

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `K2((u, t), v)`; zero for `t ≤ 0`.
pub fn heat_k2(u: &[f64], t: f64, v: &[f64]) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let d = u.len() as f64;
    (-sq_dist(u, v) / (4.0 * t)).exp() / (4.0 * PI * t).powf(d / 2.0)
}

/// `K1((u, t), (v, s))`; zero unless `0 < s < t`.
pub fn heat_k1(u: &[f64], t: f64, v: &[f64], s: f64) -> f64 {
    if s <= 0.0 || s >= t {
        return 0.0;
    }
    heat_k2(u, t - s, v)
}

/// `∫_0^∞ K2 dt` at distance `r` in closed form: `Γ(d/2 − 1) / (4π^{d/2} r^{d−2})`.
pub fn ray_constant(d: usize, r: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::Unsupported(format!(
            "the time integral of the heat kernel diverges for d = {d}; the fixed-point ray needs d >= 3"
        )));
    }
    let h = d as f64 / 2.0;
    Ok(gamma(h - 1.0) / (4.0 * PI.powf(h) * r.powf(d as f64 - 2.0)))
}

/// The prefactor `4^{d−1} Γ(d/2 − 1) / π^{d/2}` of the alternative ray formula.
pub fn alt_ray_prefactor(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    4f64.powi(d as i32 - 1) * gamma(h - 1.0) / PI.powf(h)
}

/// `∫_0^∞ K2 dt` at distance `r` by adaptive quadrature in `log t`.
pub fn ray_time_integral(d: usize, r: f64, tol: f64) -> Result<f64> {
    if d < 3 {
        return ray_constant(d, r);
    }
    let dd = d as f64;
    // t = e^x, dt = e^x dx
    let f = |x: f64| {
        let t = x.exp();
        (x - r * r / (4.0 * t)).exp() / (4.0 * PI * t).powf(dd / 2.0)
    };
    let mid = (r * r / 4.0).ln();
    // unit panels so the adaptive rule cannot step over the peak
    let panels = 97;
    let per = tol / panels as f64;
    Ok((0..panels)
        .map(|k| {
            let a = mid - 7.0 + k as f64;
            adaptive_simpson(&f, a, a + 1.0, per, 40)
        })
        .sum())
}

/// Which output manifold `N` the error is measured on.
#[derive(Debug, Clone, PartialEq)]
pub enum HeatCase {
    /// `N = R^d × {t0}`.
    FixedTime { t0: f64 },
    /// `N = {u0} × (0, ∞)`; needs `d ≥ 3`.
    FixedPointRay { u0: Vec<f64> },
    /// `N = {(u0, t0)}`.
    SinglePoint { u0: Vec<f64>, t0: f64 },
}

/// The `L1` optimal error, with the alternative-prefactor variant for the ray case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatError {
    pub value: f64,
    /// The ray case evaluated with [`alt_ray_prefactor`] in place of the
    /// closed-form time integral; `None` for the other cases.
    pub alt_value: Option<f64>,
}

/// Classes for the source `f` on a space-time box and the initial value `h`.
#[derive(Debug, Clone)]
pub struct HeatProblem {
    d: usize,
    f: RecoveryMethod,
    h: RecoveryMethod,
}

impl HeatProblem {
    pub fn new(f: RecoveryMethod, h: RecoveryMethod) -> Result<Self> {
        let Domain::SpaceTime { lo, t0, .. } = f.domain() else {
            return Err(Error::Config("the heat source class must live on a space-time box".into()));
        };
        let d = lo.len();
        if h.domain().ambient_dim() != d {
            return Err(Error::Config(format!(
                "initial-value class has dimension {}, source class has {d} space dimensions",
                h.domain().ambient_dim()
            )));
        }
        if *t0 < 0.0 {
            return Err(Error::Config("the source support must start at t >= 0".into()));
        }
        if f.variant() != Variant::Tilde || h.variant() != Variant::Tilde {
            return Err(Error::Config("heat classes must vanish on the boundary of their supports (tilde variant)".into()));
        }
        Ok(HeatProblem { d, f, h })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn methods(&self) -> Vec<RecoveryMethod> {
        vec![self.f.clone(), self.h.clone()]
    }

    fn check_case(&self, case: &HeatCase) -> Result<()> {
        match case {
            HeatCase::FixedPointRay { u0 } => {
                ray_constant(self.d, 1.0)?;
                check_len(u0, self.d)
            }
            HeatCase::SinglePoint { u0, t0 } => {
                check_len(u0, self.d)?;
                positive_time(*t0)
            }
            HeatCase::FixedTime { t0 } => positive_time(*t0),
        }
    }

    /// `C1(v, s)` and `C2(v)` of the given case.
    fn column_integrals(&self, case: &HeatCase) -> Result<(Box<dyn Fn(&Point) -> f64 + Send + Sync>, Box<dyn Fn(&Point) -> f64 + Send + Sync>)> {
        self.check_case(case)?;
        let d = self.d;
        Ok(match case.clone() {
            HeatCase::FixedTime { t0 } => (
                Box::new(move |p: &Point| if p.last() < t0 { 1.0 } else { 0.0 }),
                Box::new(|_: &Point| 1.0),
            ),
            HeatCase::FixedPointRay { u0 } => {
                let c = ray_constant(d, 1.0)?;
                let u1 = u0.clone();
                (
                    Box::new(move |p: &Point| c * sq_dist(&u0, &p.coords()[..d]).sqrt().powf(2.0 - d as f64)),
                    Box::new(move |p: &Point| c * sq_dist(&u1, p.coords()).sqrt().powf(2.0 - d as f64)),
                )
            }
            HeatCase::SinglePoint { u0, t0 } => {
                let u1 = u0.clone();
                (
                    Box::new(move |p: &Point| heat_k1(&u0, t0, &p.coords()[..d], p.last())),
                    Box::new(move |p: &Point| heat_k2(&u1, t0, p.coords())),
                )
            }
        })
    }

    /// `∫∫ τ̃1 C1 + ∫ τ̃2 C2` on the class grids.
    pub fn optimal_error(&self, case: &HeatCase, resolution: usize) -> Result<HeatError> {
        let (c1, c2) = self.column_integrals(case)?;
        let g1 = self.f.domain().build_grid(resolution)?;
        let g2 = self.h.domain().build_grid(resolution)?;
        let mut value = 0.0;
        for (grid, method, c) in [(&g1, &self.f, &c1), (&g2, &self.h, &c2)] {
            for (p, w) in grid.nodes.iter().zip(&grid.weights) {
                let phi = method.majorant(p);
                if phi == 0.0 {
                    continue;
                }
                let cv = c(p);
                if !cv.is_finite() {
                    return Err(Error::Numerical {
                        what: "singular column integral".into(),
                        location: format!("grid node {p:?} coincides with the output point"),
                    });
                }
                value += w * phi * cv;
            }
        }
        let alt_value = match case {
            HeatCase::FixedPointRay { .. } => Some(value * alt_ray_prefactor(self.d) / ray_constant(self.d, 1.0)?),
            _ => None,
        };
        Ok(HeatError { value, alt_value })
    }

    /// Space box covering both supports, widened by the kernel's effective reach at `t`.
    fn output_box(&self, t: f64) -> Result<Domain> {
        let (flo, fhi) = self.f.domain().bounds();
        let (hlo, hhi) = self.h.domain().bounds();
        let reach = TAIL_SIGMAS * (2.0 * t).sqrt();
        let lo: Vec<f64> = (0..self.d).map(|i| flo[i].min(hlo[i]) - reach).collect();
        let hi: Vec<f64> = (0..self.d).map(|i| fhi[i].max(hhi[i]) + reach).collect();
        Domain::cube(&lo, &hi)
    }

    /// The `1 × 2` solution operator for the case, with closed-form column integrals.
    pub fn matrix(&self, case: &HeatCase, resolution: usize) -> Result<OperatorMatrix> {
        let (c1, c2) = self.column_integrals(case)?;
        let d = self.d;
        let out = match case {
            HeatCase::FixedTime { t0 } => OutputSpace::fixed_time(self.output_box(*t0)?, *t0, resolution)?,
            HeatCase::FixedPointRay { u0 } => {
                let (lo, hi) = self.f.domain().bounds();
                let span = (0..d).map(|i| hi[i] - lo[i]).fold(1.0, f64::max);
                OutputSpace::fixed_point(Point::new(u0), Domain::interval(0.0, hi[d] + 50.0 * span * span)?, resolution)?
            }
            HeatCase::SinglePoint { u0, t0 } => OutputSpace::single_point(Point::new(u0).push(*t0)),
        };
        let fop = KernelOp::new(self.f.domain().clone(), resolution, move |o: &Point, i: &Point| {
            heat_k1(&o.coords()[..d], o.last(), &i.coords()[..d], i.last())
        })?
        .with_column_integral(c1);
        let hop = KernelOp::new(self.h.domain().clone(), resolution, move |o: &Point, v: &Point| {
            heat_k2(&o.coords()[..d], o.last(), v.coords())
        })?
        .with_column_integral(c2);
        OperatorMatrix::new(
            vec![out],
            vec![vec![OperatorEntry::integral(fop), OperatorEntry::integral(hop)]],
            vec![1.0, 1.0],
        )
    }

    pub fn operator_error(&self, case: &HeatCase, y: OutputNorm, psi: &PsiNorm, resolution: usize) -> Result<ErrorReport> {
        self.matrix(case, resolution)?.optimal_error("heat", &self.methods(), y, psi)
    }

    /// Recovered solution at `(u, t)` from samples of `f` and `h`.
    pub fn recover(&self, zf: &[f64], zh: &[f64], u: &[f64], t: f64, resolution: usize) -> Result<f64> {
        check_len(u, self.d)?;
        self.f.check_data(zf)?;
        self.h.check_data(zh)?;
        let d = self.d;
        let g1 = self.f.domain().build_grid(resolution)?;
        let g2 = self.h.domain().build_grid(resolution)?;
        let a = g1.integrate(|p| heat_k1(u, t, &p.coords()[..d], p.last()) * self.f.recover_unchecked(zf, p));
        let b = g2.integrate(|v| heat_k2(u, t, v.coords()) * self.h.recover_unchecked(zh, v));
        Ok(a + b)
    }
}

fn check_len(u: &[f64], d: usize) -> Result<()> {
    if u.len() != d {
        return Err(Error::Input(format!("point has {} coordinates, expected {d}", u.len())));
    }
    Ok(())
}

fn positive_time(t0: f64) -> Result<()> {
    if !(t0.is_finite() && t0 > 0.0) {
        return Err(Error::Config(format!("output time must be positive, got {t0}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::ModulusSpec;
    use crate::recovery::InfoSpec;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_examples() {
        assert_relative_eq!(heat_k2(&[0.3], 1.0 / (4.0 * PI), &[0.3]), 1.0, epsilon = 1e-14);
        assert_eq!(heat_k1(&[0.0], 1.0, &[0.0], 1.0), 0.0);
        assert_eq!(heat_k1(&[0.0], 1.0, &[0.0], 1.5), 0.0);
        assert_relative_eq!(heat_k1(&[0.0, 1.0], 2.0, &[0.5, 0.0], 1.5), heat_k2(&[0.0, 1.0], 0.5, &[0.5, 0.0]));
    }

    #[test]
    fn ray_integral_matches_closed_form() {
        for d in 3..=5 {
            for r in [0.5, 1.0, 2.0] {
                let exact = ray_constant(d, r).unwrap();
                let num = ray_time_integral(d, r, 1e-13).unwrap();
                assert!(((num - exact) / exact).abs() < 1e-8, "d = {d}, r = {r}: {num} vs {exact}");
            }
        }
        assert!(matches!(ray_constant(2, 1.0), Err(Error::Unsupported(_))));
    }

    fn problem(d: usize) -> HeatProblem {
        let lo = vec![0.0; d];
        let hi = vec![1.0; d];
        let m1 = Domain::spacetime(&lo, &hi, 0.0, 0.5).unwrap();
        let m2 = Domain::cube(&lo, &hi).unwrap();
        let mut c1 = vec![0.5; d];
        c1.push(0.25);
        let f = RecoveryMethod::tilde(ModulusSpec::identity(), InfoSpec::exact(vec![Point::new(&c1)]).unwrap(), m1).unwrap();
        let h = RecoveryMethod::tilde(ModulusSpec::identity(), InfoSpec::exact(vec![Point::new(&vec![0.5; d])]).unwrap(), m2)
            .unwrap();
        HeatProblem::new(f, h).unwrap()
    }

    #[test]
    fn ray_case_needs_three_dimensions() {
        let p = problem(2);
        let err = p.optimal_error(&HeatCase::FixedPointRay { u0: vec![0.0, 0.0] }, 8).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn generic_engine_agrees_with_closed_forms() {
        let p = problem(1);
        for case in [
            HeatCase::FixedTime { t0: 1.0 },
            HeatCase::SinglePoint { u0: vec![0.4], t0: 0.7 },
        ] {
            let closed = p.optimal_error(&case, 64).unwrap().value;
            let generic = p.matrix(&case, 64).unwrap().optimal_error_value(&p.methods(), OutputNorm::L1, &PsiNorm::L1).unwrap();
            assert_relative_eq!(closed, generic, max_relative = 1e-12);
        }
        let p = problem(3);
        let case = HeatCase::FixedPointRay { u0: vec![0.51, 0.52, 0.53] };
        let closed = p.optimal_error(&case, 10).unwrap();
        let generic = p.matrix(&case, 10).unwrap().optimal_error_value(&p.methods(), OutputNorm::L1, &PsiNorm::L1).unwrap();
        assert_relative_eq!(closed.value, generic, max_relative = 1e-12);
        // (16/π) / (1/(4π))
        assert_relative_eq!(closed.alt_value.unwrap() / closed.value, 64.0, max_relative = 1e-12);
    }
}
