//! The majorants `τ`, `τ̃`, generalized Voronoi cells and the piecewise-constant
//! recovery operators `L`, `L̃`.
//!
//! Given samples `z_j ≈ x(q_j)` with `|x(q_j) − z_j| ≤ e_j`, every `x` of the class
//! satisfies `|x(t) − z_j| ≤ e_j + ω(ρ(t, q_j))`. The majorant
//!
//! ```text
//! τ(t) = min_j ( e_j + ω(ρ(t, q_j)) )      for t ∈ M′,   0 otherwise
//! τ̃(t) = min( τ(t), ω(ρ(t, ∂M′)) )
//! ```
//!
//! is the pointwise worst case, and the recovery operator returns the datum `z_j`
//! of the sample that attains the minimum. Cells are not stored as geometric
//! regions: membership is decided pointwise by [`RecoveryMethod::assign_cell`].

use crate::domains::{Domain, Point, QuadratureGrid};
use crate::error::{Error, Result};
use crate::modulus::ModulusSpec;

/// Values closer than this are treated as ties; the smaller index wins.
pub const TIE_TOL: f64 = 1e-12;

/// Index of the zero cell `Π̃_0` (tilde variant only). Sample cells are `1..=n`.
pub const ZERO_CELL: usize = 0;

/// Which function class the data come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `H^ω(M′)`: recovered with `L`, worst case `τ`.
    Plain,
    /// `H̃^ω(M′)`, functions vanishing on `∂M′`: recovered with `L̃`, worst case `τ̃`.
    Tilde,
}

/// Sample points `Q` and per-sample error bounds `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoSpec {
    points: Vec<Point>,
    errors: Vec<f64>,
}

impl InfoSpec {
    pub fn new(points: Vec<Point>, errors: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("information needs at least one sample point".into()));
        }
        if points.len() != errors.len() {
            return Err(Error::Input(format!(
                "{} sample points but {} error bounds",
                points.len(),
                errors.len()
            )));
        }
        if let Some(e) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::Config(format!("error bounds must be finite and >= 0, got {e}")));
        }
        Ok(InfoSpec { points, errors })
    }

    /// Exact samples at the given points.
    pub fn exact(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        InfoSpec::new(points, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }
}

/// An optimal recovery method for one function class: `L_{ω,Q,e}` or `L̃_{ω,Q,e}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryMethod {
    variant: Variant,
    modulus: ModulusSpec,
    info: InfoSpec,
    domain: Domain,
}

impl RecoveryMethod {
    pub fn new(variant: Variant, modulus: ModulusSpec, info: InfoSpec, domain: Domain) -> Result<Self> {
        modulus.check()?;
        for q in info.points() {
            if q.dim() != domain.ambient_dim() {
                return Err(Error::Domain(format!(
                    "sample point {q:?} has dimension {}, domain expects {}",
                    q.dim(),
                    domain.ambient_dim()
                )));
            }
            if !domain.contains(q) {
                return Err(Error::Domain(format!("sample point {q:?} lies outside the domain")));
            }
        }
        Ok(RecoveryMethod { variant, modulus, info, domain })
    }

    pub fn plain(modulus: ModulusSpec, info: InfoSpec, domain: Domain) -> Result<Self> {
        Self::new(Variant::Plain, modulus, info, domain)
    }

    pub fn tilde(modulus: ModulusSpec, info: InfoSpec, domain: Domain) -> Result<Self> {
        Self::new(Variant::Tilde, modulus, info, domain)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn modulus(&self) -> &ModulusSpec {
        &self.modulus
    }

    pub fn info(&self) -> &InfoSpec {
        &self.info
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Number of samples `n`.
    pub fn n(&self) -> usize {
        self.info.len()
    }

    /// The same method with different error bounds.
    pub fn with_errors(&self, errors: Vec<f64>) -> Result<Self> {
        let info = InfoSpec::new(self.info.points.clone(), errors)?;
        Self::new(self.variant, self.modulus.clone(), info, self.domain.clone())
    }

    /// `ω(ρ(t, s))` in this method's metric.
    #[inline]
    pub fn omega_dist(&self, t: &Point, s: &Point) -> f64 {
        self.modulus.eval_unchecked(self.domain.distance_unchecked(t, s))
    }

    /// `ω(ρ(t, ∂M′))` for `t ∈ M′`.
    #[inline]
    pub fn omega_boundary(&self, t: &Point) -> f64 {
        self.modulus.eval_unchecked(self.domain.boundary_distance_unchecked(t))
    }

    /// Minimum of `e_j + ω(ρ(t, q_j))` and the smallest index attaining it
    /// (within [`TIE_TOL`]). Assumes `t` has the ambient dimension.
    fn nearest(&self, t: &Point) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut vals = [0.0f64; 32];
        let small = self.n() <= vals.len();
        for (j, (q, e)) in self.info.points.iter().zip(&self.info.errors).enumerate() {
            let v = e + self.omega_dist(t, q);
            if small {
                vals[j] = v;
            }
            if v < best {
                best = v;
            }
        }
        let idx = if small {
            vals[..self.n()].iter().position(|v| *v <= best + TIE_TOL)
        } else {
            self.info
                .points
                .iter()
                .zip(&self.info.errors)
                .position(|(q, e)| e + self.omega_dist(t, q) <= best + TIE_TOL)
        };
        (best, idx.expect("n >= 1"))
    }

    /// `τ_{ω,Q,e}(t)`; zero outside `M′`.
    pub fn tau(&self, t: &Point) -> f64 {
        if !self.domain.contains(t) {
            return 0.0;
        }
        self.nearest(t).0
    }

    /// `τ̃_{ω,Q,e}(t) = min{τ(t), ω(ρ(t, ∂M′))}`; zero outside `M′`.
    pub fn tau_tilde(&self, t: &Point) -> f64 {
        if !self.domain.contains(t) {
            return 0.0;
        }
        self.nearest(t).0.min(self.omega_boundary(t))
    }

    /// The worst-case function `φ` of the method's class: `τ` or `τ̃`.
    pub fn majorant(&self, t: &Point) -> f64 {
        match self.variant {
            Variant::Plain => self.tau(t),
            Variant::Tilde => self.tau_tilde(t),
        }
    }

    /// Cell index of `t ∈ M′`: `j ∈ 1..=n` for `Π_j` (or `Π̃_j`), [`ZERO_CELL`] for `Π̃_0`.
    pub fn assign_cell(&self, t: &Point) -> Result<usize> {
        if t.dim() != self.domain.ambient_dim() || !self.domain.contains(t) {
            return Err(Error::Domain(format!("point {t:?} lies outside the domain")));
        }
        Ok(self.cell_unchecked(t))
    }

    fn cell_unchecked(&self, t: &Point) -> usize {
        let (tau, j) = self.nearest(t);
        if self.variant == Variant::Tilde && self.omega_boundary(t) <= tau + TIE_TOL {
            return ZERO_CELL;
        }
        j + 1
    }

    /// `(Lz)(t)`: the datum of `t`'s cell, zero on `Π̃_0` and outside `M′`.
    pub fn recover(&self, z: &[f64], t: &Point) -> Result<f64> {
        self.check_data(z)?;
        Ok(self.recover_unchecked(z, t))
    }

    pub(crate) fn recover_unchecked(&self, z: &[f64], t: &Point) -> f64 {
        if !self.domain.contains(t) {
            return 0.0;
        }
        match self.cell_unchecked(t) {
            ZERO_CELL => 0.0,
            j => z[j - 1],
        }
    }

    pub fn check_data(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.n() {
            return Err(Error::Input(format!("data vector has length {}, expected {}", z.len(), self.n())));
        }
        Ok(())
    }

    /// `max_k ( |x(t_k) − (Lz)(t_k)| − φ(t_k) )` over the grid nodes. Feasible
    /// inputs give a value `≤ 0` up to rounding.
    pub fn pointwise_bound_check(&self, grid: &QuadratureGrid, x: &[f64], z: &[f64]) -> Result<f64> {
        self.check_data(z)?;
        if x.len() != grid.len() {
            return Err(Error::Input(format!(
                "{} function values for {} grid nodes",
                x.len(),
                grid.len()
            )));
        }
        Ok(grid
            .nodes
            .iter()
            .zip(x)
            .map(|(t, xv)| (xv - self.recover_unchecked(z, t)).abs() - self.majorant(t))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(points: &[f64], errors: &[f64], variant: Variant) -> RecoveryMethod {
        let info = InfoSpec::new(points.iter().map(|&q| Point::scalar(q)).collect(), errors.to_vec()).unwrap();
        RecoveryMethod::new(variant, ModulusSpec::identity(), info, Domain::unit_interval()).unwrap()
    }

    #[test]
    fn tau_examples() {
        let m = unit(&[0.5], &[0.0], Variant::Plain);
        assert_relative_eq!(m.tau(&0.9.into()), 0.4, epsilon = 1e-15);
        let m = unit(&[0.25, 0.75], &[0.1, 0.0], Variant::Plain);
        assert_relative_eq!(m.tau(&0.5.into()), 0.25);
        assert_relative_eq!(m.tau(&0.25.into()), 0.1);
        assert_eq!(m.tau(&1.5.into()), 0.0);
    }

    #[test]
    fn tau_tilde_examples() {
        let m = unit(&[0.5], &[0.0], Variant::Tilde);
        assert_relative_eq!(m.tau_tilde(&0.1.into()), 0.1);
        assert_relative_eq!(m.tau_tilde(&0.4.into()), 0.1, epsilon = 1e-15);
        assert_eq!(m.tau_tilde(&0.0.into()), 0.0);
    }

    #[test]
    fn cell_examples() {
        let m = unit(&[0.25, 0.75], &[0.0, 0.0], Variant::Plain);
        assert_eq!(m.assign_cell(&0.5.into()).unwrap(), 1);
        assert_eq!(m.assign_cell(&0.6.into()).unwrap(), 2);
        assert!(matches!(m.assign_cell(&1.2.into()), Err(Error::Domain(_))));

        let m = unit(&[0.25, 0.75], &[1.0, 0.0], Variant::Plain);
        for k in 0..=100 {
            assert_eq!(m.assign_cell(&(k as f64 / 100.0).into()).unwrap(), 2);
        }
    }

    #[test]
    fn near_ties_go_to_smaller_index() {
        let m = unit(&[0.25, 0.75], &[0.0, 0.0], Variant::Plain);
        assert_eq!(m.assign_cell(&(0.5 + 1e-13).into()).unwrap(), 1);
        assert_eq!(m.assign_cell(&(0.5 + 1e-9).into()).unwrap(), 2);
    }

    #[test]
    fn recover_examples() {
        let m = unit(&[0.25, 0.75], &[0.0, 0.0], Variant::Plain);
        assert_eq!(m.recover(&[2.0, 3.0], &0.4.into()).unwrap(), 2.0);
        assert_eq!(m.recover(&[2.0, 3.0], &0.6.into()).unwrap(), 3.0);
        assert_eq!(m.recover(&[2.0, 3.0], &(-0.1).into()).unwrap(), 0.0);
        assert!(matches!(m.recover(&[2.0], &0.4.into()), Err(Error::Input(_))));

        let m = unit(&[0.5], &[0.0], Variant::Tilde);
        assert_eq!(m.recover(&[7.0], &0.1.into()).unwrap(), 0.0);
        assert_eq!(m.recover(&[7.0], &0.5.into()).unwrap(), 7.0);
        // Π̃_0 = [0, 0.25] ∪ [0.75, 1] for ω = id
        assert_eq!(m.assign_cell(&0.25.into()).unwrap(), ZERO_CELL);
        assert_eq!(m.assign_cell(&0.26.into()).unwrap(), 1);
        assert_eq!(m.assign_cell(&0.76.into()).unwrap(), ZERO_CELL);
    }

    #[test]
    fn bound_check_examples() {
        let m = unit(&[0.3, 0.8], &[0.05, 0.0], Variant::Plain);
        let g = Domain::unit_interval().build_grid(200).unwrap();
        let tau = g.sample(|t| m.tau(t));
        assert!(m.pointwise_bound_check(&g, &tau, &[0.0, 0.0]).unwrap().abs() <= 1e-15);
        let c = vec![1.7; g.len()];
        assert!(m.pointwise_bound_check(&g, &c, &[1.7, 1.7]).unwrap() <= 0.0);
        assert!(m.pointwise_bound_check(&g, &c[1..], &[1.7, 1.7]).is_err());
    }

    #[test]
    fn rejects_points_outside() {
        let info = InfoSpec::exact(vec![Point::scalar(1.5)]).unwrap();
        assert!(RecoveryMethod::plain(ModulusSpec::identity(), info, Domain::unit_interval()).is_err());
        assert!(InfoSpec::new(vec![Point::scalar(0.5)], vec![-1.0]).is_err());
        assert!(InfoSpec::new(vec![], vec![]).is_err());
    }

    #[test]
    fn disk_tilde_vanishes_on_boundary() {
        let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
        let info = InfoSpec::new(vec![[0.0, 0.0].into(), [0.5, 0.1].into()], vec![0.2, 0.0]).unwrap();
        let m = RecoveryMethod::tilde(ModulusSpec::power(1.0, 0.5).unwrap(), info, d.clone()).unwrap();
        for k in 0..32 {
            let p = d.circle_point(k as f64).unwrap();
            assert!(m.tau_tilde(&p) <= 1e-6);
            assert_eq!(m.assign_cell(&p).unwrap(), ZERO_CELL);
        }
    }

    proptest! {
        #[test]
        fn monotone_in_errors_and_points(
            qs in proptest::collection::vec(0.0f64..1.0, 1..6),
            es in proptest::collection::vec(0.0f64..0.3, 6),
            bump in proptest::collection::vec(0.0f64..0.2, 6),
            extra in 0.0f64..1.0,
            t in 0.0f64..1.0,
        ) {
            let n = qs.len();
            let small = unit(&qs, &es[..n], Variant::Plain);
            let bigger: Vec<f64> = es[..n].iter().zip(&bump).map(|(a, b)| a + b).collect();
            let big = unit(&qs, &bigger, Variant::Plain);
            let t = Point::scalar(t);
            prop_assert!(small.tau(&t) <= big.tau(&t));

            let mut qs2 = qs.clone();
            qs2.push(extra);
            let mut es2 = es[..n].to_vec();
            es2.push(0.0);
            let more = unit(&qs2, &es2, Variant::Plain);
            prop_assert!(more.tau(&t) <= small.tau(&t));
            prop_assert!(small.tau_tilde(&t) <= small.tau(&t));
        }

        #[test]
        fn partition_covers_and_respects_minimizers(
            qs in proptest::collection::vec(0.0f64..1.0, 1..6),
            es in proptest::collection::vec(0.0f64..0.3, 6),
            t in 0.0f64..1.0,
        ) {
            let n = qs.len();
            let m = unit(&qs, &es[..n], Variant::Plain);
            let t = Point::scalar(t);
            let j = m.assign_cell(&t).unwrap();
            prop_assert!((1..=n).contains(&j));
            let attained = es[j - 1] + (t.x() - qs[j - 1]).abs();
            prop_assert!((attained - m.tau(&t)).abs() <= TIE_TOL);
            for i in 0..j - 1 {
                prop_assert!(es[i] + (t.x() - qs[i]).abs() > m.tau(&t) + TIE_TOL);
            }
        }
    }
}
