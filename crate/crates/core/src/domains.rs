//! Compact metric-measure domains and their quadrature grids.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest ambient dimension: a spatial box in `R³` times a time axis.
pub const MAX_DIM: usize = 4;

/// Relative slack for membership tests.
const MEMBERSHIP_TOL: f64 = 1e-12;

/// Default nodes per axis used when a caller does not pick a resolution.
pub const DEFAULT_RESOLUTION: usize = 64;

/// A point of `R^d`, `d ≤ 4`, stored inline.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    /// Panics if `coords.len() > MAX_DIM`.
    pub fn new(coords: &[f64]) -> Self {
        assert!(coords.len() <= MAX_DIM, "points have at most {MAX_DIM} coordinates");
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point { coords: c, dim: coords.len() as u8 }
    }

    pub fn try_new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Input(format!(
                "points need 1..={MAX_DIM} coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Point::new(coords))
    }

    pub fn scalar(x: f64) -> Self {
        Point::new(&[x])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    /// The last coordinate; the time of a space-time point.
    #[inline]
    pub fn last(&self) -> f64 {
        self.coords[self.dim as usize - 1]
    }

    /// Drops the last coordinate (space part of a space-time point).
    pub fn head(&self) -> Point {
        Point::new(&self.coords[..self.dim as usize - 1])
    }

    /// Appends a coordinate.
    pub fn push(&self, v: f64) -> Point {
        let mut p = *self;
        p.coords[p.dim as usize] = v;
        p.dim += 1;
        p
    }

    #[inline]
    pub fn euclid(&self, other: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim as usize {
            let d = self.coords[i] - other.coords[i];
            s += d * d;
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }
}

impl std::fmt::Debug for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(c: [f64; N]) -> Self {
        Point::new(&c)
    }
}

/// A compact subset `M′` of a metric space, with its measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    /// Axis-aligned box in `R^d`, `d ≤ 3`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Disk { center: [f64; 2], radius: f64 },
    /// The circle `|t − center| = radius` with the arc-length metric and measure.
    Circle { center: [f64; 2], radius: f64 },
    /// `Π [lo_i, hi_i] × [t0, t1]`; points carry time as their last coordinate
    /// and the metric is Euclidean in all coordinates.
    SpaceTime { lo: Vec<f64>, hi: Vec<f64>, t0: f64, t1: f64 },
    /// A single point with unit mass. Models a finite-dimensional datum such as an
    /// initial value.
    Singleton { at: Point },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("interval needs finite a < b, got [{a}, {b}]")));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn unit_interval() -> Self {
        Domain::Interval { a: 0.0, b: 1.0 }
    }

    pub fn cube(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_box(lo, hi, 3)?;
        Ok(Domain::Box { lo: lo.to_vec(), hi: hi.to_vec() })
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        check_round(center, radius)?;
        Ok(Domain::Disk { center, radius })
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        check_round(center, radius)?;
        Ok(Domain::Circle { center, radius })
    }

    pub fn spacetime(lo: &[f64], hi: &[f64], t0: f64, t1: f64) -> Result<Self> {
        check_box(lo, hi, 3)?;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::Config(format!("time range needs t0 < t1, got [{t0}, {t1}]")));
        }
        Ok(Domain::SpaceTime { lo: lo.to_vec(), hi: hi.to_vec(), t0, t1 })
    }

    pub fn singleton(at: Point) -> Self {
        Domain::Singleton { at }
    }

    /// Dimension of the ambient space points live in.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Box { lo, .. } => lo.len(),
            Domain::Disk { .. } | Domain::Circle { .. } => 2,
            Domain::SpaceTime { lo, .. } => lo.len() + 1,
            Domain::Singleton { at } => at.dim(),
        }
    }

    /// Lower and upper corners of a box-like domain (space-time includes time).
    fn corners(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Domain::Interval { a, b } => Some((vec![*a], vec![*b])),
            Domain::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Domain::SpaceTime { lo, hi, t0, t1 } => {
                let mut l = lo.clone();
                let mut h = hi.clone();
                l.push(*t0);
                h.push(*t1);
                Some((l, h))
            }
            _ => None,
        }
    }

    fn check_dim(&self, p: &Point) -> Result<()> {
        if p.dim() != self.ambient_dim() {
            return Err(Error::Domain(format!(
                "point {:?} has dimension {}, domain expects {}",
                p,
                p.dim(),
                self.ambient_dim()
            )));
        }
        Ok(())
    }

    /// Metric `ρ(t, s)`: Euclidean, or geodesic arc length on a circle.
    pub fn distance(&self, t: &Point, s: &Point) -> Result<f64> {
        self.check_dim(t)?;
        self.check_dim(s)?;
        Ok(self.distance_unchecked(t, s))
    }

    #[inline]
    pub(crate) fn distance_unchecked(&self, t: &Point, s: &Point) -> f64 {
        match self {
            Domain::Circle { center, radius } => {
                let a = (t.coords[1] - center[1]).atan2(t.coords[0] - center[0]);
                let b = (s.coords[1] - center[1]).atan2(s.coords[0] - center[0]);
                let mut d = (a - b).abs();
                if d > PI {
                    d = 2.0 * PI - d;
                }
                radius * d
            }
            _ => t.euclid(s),
        }
    }

    pub fn contains(&self, t: &Point) -> bool {
        if t.dim() != self.ambient_dim() || !t.is_finite() {
            return false;
        }
        match self {
            Domain::Disk { center, radius } => {
                Point::from(*center).euclid(t) <= radius * (1.0 + MEMBERSHIP_TOL)
            }
            Domain::Circle { center, radius } => {
                (Point::from(*center).euclid(t) - radius).abs() <= radius * MEMBERSHIP_TOL
            }
            Domain::Singleton { at } => {
                let scale = at.coords().iter().fold(1.0f64, |m, c| m.max(c.abs()));
                at.euclid(t) <= MEMBERSHIP_TOL * scale
            }
            _ => {
                let (lo, hi) = self.corners().expect("box-like");
                lo.iter().zip(&hi).zip(t.coords()).all(|((l, h), x)| {
                    let slack = MEMBERSHIP_TOL * (h - l);
                    *x >= l - slack && *x <= h + slack
                })
            }
        }
    }

    /// `ρ(t, ∂M′)`. The circle has empty boundary, so the distance is `+∞`.
    pub fn boundary_distance(&self, t: &Point) -> Result<f64> {
        self.check_dim(t)?;
        if !self.contains(t) {
            return Err(Error::Domain(format!("point {t:?} lies outside the domain")));
        }
        Ok(self.boundary_distance_unchecked(t))
    }

    pub(crate) fn boundary_distance_unchecked(&self, t: &Point) -> f64 {
        match self {
            Domain::Disk { center, radius } => (radius - Point::from(*center).euclid(t)).max(0.0),
            Domain::Circle { .. } => f64::INFINITY,
            Domain::Singleton { .. } => 0.0,
            _ => {
                let (lo, hi) = self.corners().expect("box-like");
                lo.iter()
                    .zip(&hi)
                    .zip(t.coords())
                    .map(|((l, h), x)| (x - l).min(h - x))
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0)
            }
        }
    }

    /// `μ(M′)`: length, volume, area `πr²`, circumference `2πr`, or 1 for a point.
    pub fn measure(&self) -> f64 {
        match self {
            Domain::Disk { radius, .. } => PI * radius * radius,
            Domain::Circle { radius, .. } => 2.0 * PI * radius,
            Domain::Singleton { .. } => 1.0,
            _ => {
                let (lo, hi) = self.corners().expect("box-like");
                lo.iter().zip(&hi).map(|(l, h)| h - l).product()
            }
        }
    }

    /// Axis-aligned bounding box in ambient coordinates.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Disk { center, radius } | Domain::Circle { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
            Domain::Singleton { at } => (at.coords().to_vec(), at.coords().to_vec()),
            _ => self.corners().expect("box-like"),
        }
    }

    /// Largest distance between two points of the domain.
    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Disk { radius, .. } => 2.0 * radius,
            Domain::Circle { radius, .. } => PI * radius,
            Domain::Singleton { .. } => 0.0,
            _ => {
                let (lo, hi) = self.corners().expect("box-like");
                lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt()
            }
        }
    }

    /// Point of a circle domain at angle `theta`.
    pub fn circle_point(&self, theta: f64) -> Result<Point> {
        match self {
            Domain::Circle { center, radius } | Domain::Disk { center, radius } => Ok(Point::new(&[
                center[0] + radius * theta.cos(),
                center[1] + radius * theta.sin(),
            ])),
            _ => Err(Error::Domain("angular positions need a circle or disk".into())),
        }
    }

    /// Composite midpoint rule with `resolution` nodes per axis.
    ///
    /// The disk uses a polar tensor grid (`resolution` radii × `4·resolution`
    /// angles) with Jacobian weights `r·Δr·Δθ`.
    pub fn build_grid(&self, resolution: usize) -> Result<QuadratureGrid> {
        if resolution < 2 {
            return Err(Error::Config(format!("grid resolution must be >= 2, got {resolution}")));
        }
        let grid = match self {
            Domain::Disk { center, radius } => {
                let nr = resolution;
                let nt = 4 * resolution;
                let dr = radius / nr as f64;
                let dt = 2.0 * PI / nt as f64;
                let mut nodes = Vec::with_capacity(nr * nt);
                let mut weights = Vec::with_capacity(nr * nt);
                for i in 0..nr {
                    let r = (i as f64 + 0.5) * dr;
                    for k in 0..nt {
                        let th = (k as f64 + 0.5) * dt;
                        nodes.push(Point::new(&[center[0] + r * th.cos(), center[1] + r * th.sin()]));
                        weights.push(r * dr * dt);
                    }
                }
                QuadratureGrid { nodes, weights }
            }
            Domain::Circle { center, radius } => {
                let dt = 2.0 * PI / resolution as f64;
                let nodes = (0..resolution)
                    .map(|k| {
                        let th = (k as f64 + 0.5) * dt;
                        Point::new(&[center[0] + radius * th.cos(), center[1] + radius * th.sin()])
                    })
                    .collect();
                QuadratureGrid { nodes, weights: vec![radius * dt; resolution] }
            }
            Domain::Singleton { at } => QuadratureGrid { nodes: vec![*at], weights: vec![1.0] },
            _ => {
                let (lo, hi) = self.corners().expect("box-like");
                tensor_midpoint(&lo, &hi, resolution)
            }
        };
        Ok(grid)
    }
}

fn check_box(lo: &[f64], hi: &[f64], max_dim: usize) -> Result<()> {
    if lo.is_empty() || lo.len() != hi.len() || lo.len() > max_dim {
        return Err(Error::Config(format!(
            "box bounds need matching lengths between 1 and {max_dim}"
        )));
    }
    for (l, h) in lo.iter().zip(hi) {
        if !(l.is_finite() && h.is_finite() && l < h) {
            return Err(Error::Config(format!("box side needs finite lo < hi, got [{l}, {h}]")));
        }
    }
    Ok(())
}

fn check_round(center: [f64; 2], radius: f64) -> Result<()> {
    if !(center.iter().all(|c| c.is_finite()) && radius.is_finite() && radius > 0.0) {
        return Err(Error::Config(format!("radius must be finite and > 0, got {radius}")));
    }
    Ok(())
}

/// Tensor-product midpoint rule on `Π [lo_i, hi_i]`.
pub fn tensor_midpoint(lo: &[f64], hi: &[f64], per_axis: usize) -> QuadratureGrid {
    let d = lo.len();
    let steps: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| (h - l) / per_axis as f64).collect();
    let w: f64 = steps.iter().product();
    let total = per_axis.pow(d as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut c = [0.0; MAX_DIM];
    for _ in 0..total {
        for k in 0..d {
            c[k] = lo[k] + (idx[k] as f64 + 0.5) * steps[k];
        }
        nodes.push(Point::new(&c[..d]));
        // last axis varies fastest
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
    QuadratureGrid { nodes, weights: vec![w; total] }
}

/// Nodes of a domain with positive weights summing to its measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    /// A grid whose nodes each carry unit mass (counting measure).
    pub fn counting(nodes: Vec<Point>) -> Self {
        let weights = vec![1.0; nodes.len()];
        QuadratureGrid { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_k f(p_k)`, summed in node order.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    /// `Σ w_k v_k` for values already sampled at the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn sample<F: Fn(&Point) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    /// The grid with every node mapped through `f` (weights unchanged).
    pub fn map_nodes<F: Fn(&Point) -> Point>(&self, f: F) -> QuadratureGrid {
        QuadratureGrid { nodes: self.nodes.iter().map(f).collect(), weights: self.weights.clone() }
    }
}
