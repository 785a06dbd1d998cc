//! Feasible instances and empirical checks of the optimality claims.
//!
//! Every function here is seeded; the rest of the crate is deterministic.
//!
//! A pair `(x, z)` is feasible for a method when `x ∈ H^ω(M′)` (vanishing on
//! `∂M′` for the tilde variant) and `|x(q_j) − z_j| ≤ e_j`. The brute-force
//! envelope of all feasible `x` is
//!
//! ```text
//! upper(t) = min_j ( z_j + e_j + ω(ρ(t, q_j)) ),   lower(t) = max_j ( z_j − e_j − ω(ρ(t, q_j)) )
//! ```
//!
//! with the boundary acting as one more exact sample of value 0 in the tilde case.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domains::{Domain, Point, QuadratureGrid};
use crate::error::{Error, Result};
use crate::operators::{ColumnFn, OperatorMatrix, OutputNorm, PsiNorm};
use crate::recovery::{RecoveryMethod, Variant};

/// Slack allowed when comparing lower and upper envelopes.
const CONSISTENCY_TOL: f64 = 1e-12;

/// Upper and lower feasible envelopes sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub grid: QuadratureGrid,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub data: Vec<f64>,
}

impl Envelope {
    /// `(upper − lower)/2` at the grid nodes.
    pub fn half_width(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| 0.5 * (u - l)).collect()
    }
}

/// Interval constraints `[lo_k, hi_k]` at anchors, plus the metric between anchors.
/// Anchor `n` (tilde only) is the boundary, pinned to 0.
struct Constraints<'a> {
    method: &'a RecoveryMethod,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> Constraints<'a> {
    fn new(method: &'a RecoveryMethod, z: &[f64]) -> Result<Self> {
        method.check_data(z)?;
        let e = method.info().errors();
        let mut lo: Vec<f64> = z.iter().zip(e).map(|(z, e)| z - e).collect();
        let mut hi: Vec<f64> = z.iter().zip(e).map(|(z, e)| z + e).collect();
        if method.variant() == Variant::Tilde {
            lo.push(0.0);
            hi.push(0.0);
        }
        Ok(Constraints { method, lo, hi })
    }

    fn len(&self) -> usize {
        self.lo.len()
    }

    /// `ω(ρ(t, anchor_k))`.
    fn reach(&self, t: &Point, k: usize) -> f64 {
        let n = self.method.n();
        if k < n {
            self.method.omega_dist(t, &self.method.info().points()[k])
        } else {
            self.method.omega_boundary(t)
        }
    }

    /// `ω` of the distance between anchors `i` and `k`.
    fn gap(&self, i: usize, k: usize) -> f64 {
        let n = self.method.n();
        let pts = self.method.info().points();
        match (i < n, k < n) {
            (true, true) => self.method.omega_dist(&pts[i], &pts[k]),
            (true, false) => self.method.omega_boundary(&pts[i]),
            (false, true) => self.method.omega_boundary(&pts[k]),
            (false, false) => 0.0,
        }
    }

    /// Pairwise feasibility, which suffices because `ω∘ρ` is a metric.
    fn check(&self) -> Result<()> {
        for i in 0..self.len() {
            for k in 0..self.len() {
                let excess = self.lo[i] - self.hi[k] - self.gap(i, k);
                if excess > CONSISTENCY_TOL {
                    return Err(Error::InconsistentData(format!(
                        "no feasible function: sample {i} needs a value >= {} but sample {k} allows at most {} + ω(ρ) = {}",
                        self.lo[i],
                        self.hi[k],
                        self.hi[k] + self.gap(i, k)
                    )));
                }
            }
        }
        Ok(())
    }

    fn upper(&self, t: &Point, hi: &[f64]) -> f64 {
        (0..self.len()).map(|k| hi[k] + self.reach(t, k)).fold(f64::INFINITY, f64::min)
    }

    fn lower(&self, t: &Point, lo: &[f64]) -> f64 {
        (0..self.len()).map(|k| lo[k] - self.reach(t, k)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Feasible envelope of `method` for data `z` on the method's grid.
pub fn envelope(method: &RecoveryMethod, z: &[f64], resolution: usize) -> Result<Envelope> {
    let grid = method.domain().build_grid(resolution)?;
    envelope_on(method, z, grid)
}

pub fn envelope_on(method: &RecoveryMethod, z: &[f64], grid: QuadratureGrid) -> Result<Envelope> {
    let c = Constraints::new(method, z)?;
    c.check()?;
    let upper = grid.sample(|t| c.upper(t, &c.hi));
    let lower = grid.sample(|t| c.lower(t, &c.lo));
    if let Some(k) = (0..grid.len()).find(|&k| lower[k] > upper[k] + CONSISTENCY_TOL) {
        return Err(Error::InconsistentData(format!(
            "envelope crosses at {:?}: lower {} > upper {}",
            grid.nodes[k], lower[k], upper[k]
        )));
    }
    Ok(Envelope { grid, upper, lower, data: z.to_vec() })
}

/// A feasible function for a method and data vector, evaluable anywhere on `M′`.
///
/// Built as `x = max(W, min(U, h))` where `U`, `W` are the McShane and Whitney
/// extensions of consistent sample values `y` and `h` is a convex combination
/// of class members. Each piece is in `H^ω`, and so is `x`.
#[derive(Debug, Clone)]
pub struct FeasibleFunction {
    method: RecoveryMethod,
    /// Values at the anchors (samples, then the boundary in the tilde case).
    y: Vec<f64>,
    mu: f64,
    lambda: f64,
    bump_center: Point,
    bump_level: f64,
    bump_sign: f64,
    shift: f64,
}

impl FeasibleFunction {
    pub fn eval(&self, t: &Point) -> f64 {
        if !self.method.domain().contains(t) {
            return 0.0;
        }
        let c = Constraints { method: &self.method, lo: Vec::new(), hi: Vec::new() };
        let k = self.y.len();
        let (mut u, mut w) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..k {
            let r = c.reach(t, i);
            u = u.min(self.y[i] + r);
            w = w.max(self.y[i] - r);
        }
        let bump = self.bump_level + self.bump_sign * self.method.omega_dist(t, &self.bump_center);
        let h = self.lambda * (self.mu * u + (1.0 - self.mu) * w) + (1.0 - self.lambda) * bump;
        w.max(u.min(h)) + self.shift
    }

    /// Values at the sample points.
    pub fn sample_values(&self) -> Vec<f64> {
        self.method.info().points().iter().map(|q| self.eval(q)).collect()
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A random feasible `x` for data `z`, deterministic per `(seed, trial)`.
pub fn sample_feasible(method: &RecoveryMethod, z: &[f64], seed: u64, trial: u64) -> Result<FeasibleFunction> {
    let c = Constraints::new(method, z)?;
    c.check()?;
    let mut rng = trial_rng(seed, trial);
    let k = c.len();
    let mut lo = c.lo.clone();
    let mut hi = c.hi.clone();
    let mut order: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    // fix anchors one at a time inside their shortest-path intervals
    for &i in &order {
        let top = (0..k).map(|j| hi[j] + c.gap(i, j)).fold(hi[i], f64::min);
        let bottom = (0..k).map(|j| lo[j] - c.gap(i, j)).fold(lo[i], f64::max);
        let pick: f64 = match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen(),
        };
        let v = if top <= bottom { 0.5 * (top + bottom) } else { bottom + pick * (top - bottom) };
        lo[i] = v;
        hi[i] = v;
    }
    let dom = method.domain();
    let bump_center = random_point(dom, &mut rng);
    let shift = if method.variant() == Variant::Plain { rng.gen_range(-2.0..2.0) } else { 0.0 };
    let y: Vec<f64> = lo.iter().map(|v| v - shift).collect();
    // for the tilde variant the boundary anchor stays at 0 after the shift
    Ok(FeasibleFunction {
        method: method.clone(),
        y,
        mu: rng.gen(),
        lambda: rng.gen(),
        bump_center,
        bump_level: rng.gen_range(-1.0..1.0),
        bump_sign: if rng.gen::<bool>() { 1.0 } else { -1.0 },
        shift,
    })
}

fn random_point(dom: &Domain, rng: &mut ChaCha8Rng) -> Point {
    let (lo, hi) = dom.bounds();
    for _ in 0..64 {
        let c: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| if h > l { rng.gen_range(*l..*h) } else { *l }).collect();
        let p = Point::new(&c);
        if dom.contains(&p) {
            return p;
        }
    }
    Point::new(&lo)
}

/// Alternative recovery methods used as lower-bound witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rival {
    /// The datum of the nearest sample point, ignoring error bounds.
    NearestSample,
    /// Piecewise-linear interpolation in 1D, inverse-distance weighting otherwise.
    Interpolation,
}

impl Rival {
    pub const ALL: [Rival; 2] = [Rival::NearestSample, Rival::Interpolation];

    pub fn name(&self) -> &'static str {
        match self {
            Rival::NearestSample => "nearest-sample",
            Rival::Interpolation => "interpolation",
        }
    }

    pub fn eval(&self, method: &RecoveryMethod, z: &[f64], t: &Point) -> f64 {
        let dom = method.domain();
        if !dom.contains(t) {
            return 0.0;
        }
        let pts = method.info().points();
        let dists: Vec<f64> = pts.iter().map(|q| dom.distance_unchecked(t, q)).collect();
        match self {
            Rival::NearestSample => {
                let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
                z[dists.iter().position(|d| *d == best).expect("n >= 1")]
            }
            Rival::Interpolation => {
                if let Domain::Interval { .. } = dom {
                    let mut order: Vec<usize> = (0..pts.len()).collect();
                    order.sort_by(|a, b| pts[*a].x().total_cmp(&pts[*b].x()));
                    let x = t.x();
                    let first = order[0];
                    let last = order[order.len() - 1];
                    if x <= pts[first].x() {
                        return z[first];
                    }
                    if x >= pts[last].x() {
                        return z[last];
                    }
                    for w in order.windows(2) {
                        let (a, b) = (pts[w[0]].x(), pts[w[1]].x());
                        if x <= b {
                            let s = if b > a { (x - a) / (b - a) } else { 1.0 };
                            return (1.0 - s) * z[w[0]] + s * z[w[1]];
                        }
                    }
                    z[last]
                } else {
                    if let Some(j) = dists.iter().position(|d| *d == 0.0) {
                        return z[j];
                    }
                    let (num, den) = dists
                        .iter()
                        .zip(z)
                        .fold((0.0, 0.0), |(n, d), (r, zj)| (n + zj / (r * r), d + 1.0 / (r * r)));
                    num / den
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRow {
    pub trial: usize,
    pub clause: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub optimal_error: f64,
    pub est_quad_err: f64,
    pub tol: f64,
    pub rows: Vec<VerificationRow>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerificationRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Base tolerance; the estimated quadrature error is added to it.
    pub tol: f64,
    /// Tolerance of the sharpness clause.
    pub sharp_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { trials: 200, seed: 0, tol: 1e-6, sharp_tol: 1e-9 }
    }
}

/// Data for one trial: a feasible function per column and the matching samples.
fn trial_pair(methods: &[RecoveryMethod], seed: u64, trial: usize) -> Result<(Vec<FeasibleFunction>, Vec<Vec<f64>>)> {
    let mut xs = Vec::with_capacity(methods.len());
    let mut zs = Vec::with_capacity(methods.len());
    for (j, m) in methods.iter().enumerate() {
        let stream = (trial as u64) * (methods.len() as u64) + j as u64;
        let zero = vec![0.0; m.n()];
        let x = sample_feasible(m, &zero, seed, stream)?;
        // perturb the exact samples inside the error bounds
        let mut rng = trial_rng(seed ^ 0x5eed_5eed, stream);
        let z: Vec<f64> = x
            .sample_values()
            .iter()
            .zip(m.info().errors())
            .map(|(v, e)| v + e * rng.gen_range(-1.0..=1.0))
            .collect();
        xs.push(x);
        zs.push(z);
    }
    Ok((xs, zs))
}

/// Checks, for the optimal method of `matrix` on `methods`:
/// (a) every sampled feasible pair has error at most the optimal error,
/// (b) the pair `(σφ̄, 0)` attains it,
/// (c) each rival has a sampled pair with error at least the optimal error.
pub fn verify_optimality(
    matrix: &OperatorMatrix,
    methods: &[RecoveryMethod],
    y: OutputNorm,
    psi: &PsiNorm,
    opts: VerifyOptions,
) -> Result<VerificationReport> {
    let report = matrix.optimal_error("verify", methods, y, psi)?;
    let optimal = report.value;
    let tol = opts.tol + report.est_quad_err;
    let pairs: Vec<(Vec<FeasibleFunction>, Vec<Vec<f64>>)> = (0..opts.trials)
        .into_par_iter()
        .map(|k| trial_pair(methods, opts.seed, k))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (k, (xs, zs)) in pairs.iter().enumerate() {
        let fns: Vec<Box<dyn Fn(&Point) -> f64 + Sync + '_>> =
            xs.iter().map(|x| Box::new(move |t: &Point| x.eval(t)) as Box<dyn Fn(&Point) -> f64 + Sync>).collect();
        let refs: Vec<ColumnFn> = fns.iter().map(|b| b.as_ref() as ColumnFn).collect();
        let value = matrix.method_error(methods, &refs, zs, y, psi)?;
        rows.push(VerificationRow { trial: k, clause: "a".into(), value, bound: optimal, pass: value <= optimal + tol });
    }

    // witness (σφ̄, 0)
    let signs = matrix.signs().to_vec();
    let witness: Vec<Box<dyn Fn(&Point) -> f64 + Sync + '_>> = methods
        .iter()
        .zip(&signs)
        .map(|(m, s)| Box::new(move |t: &Point| s * m.majorant(t)) as Box<dyn Fn(&Point) -> f64 + Sync>)
        .collect();
    let wrefs: Vec<ColumnFn> = witness.iter().map(|b| b.as_ref() as ColumnFn).collect();
    let zeros: Vec<Vec<f64>> = methods.iter().map(|m| vec![0.0; m.n()]).collect();
    let attained = matrix.method_error(methods, &wrefs, &zeros, y, psi)?;
    rows.push(VerificationRow {
        trial: opts.trials,
        clause: "b".into(),
        value: attained,
        bound: optimal,
        pass: (attained - optimal).abs() <= opts.sharp_tol + report.est_quad_err,
    });

    // rivals over the sampled pairs plus the witness
    for rival in Rival::ALL {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_trial = 0;
        let candidates = pairs
            .iter()
            .map(|(xs, zs)| {
                let fns: Vec<Box<dyn Fn(&Point) -> f64 + Sync + '_>> =
                    xs.iter().map(|x| Box::new(move |t: &Point| x.eval(t)) as Box<dyn Fn(&Point) -> f64 + Sync>).collect();
                rival_error(matrix, methods, &fns, zs, rival, y, psi)
            })
            .chain(std::iter::once(rival_error(matrix, methods, &witness, &zeros, rival, y, psi)));
        for (k, v) in candidates.enumerate() {
            let v = v?;
            if v > worst {
                worst = v;
                worst_trial = k;
            }
        }
        rows.push(VerificationRow {
            trial: worst_trial,
            clause: format!("c:{}", rival.name()),
            value: worst,
            bound: optimal,
            pass: worst >= optimal - tol,
        });
    }

    Ok(VerificationReport { optimal_error: optimal, est_quad_err: report.est_quad_err, tol, rows })
}

/// `‖Āσ(x̄ − R̄z̄)‖` for a rival `R`.
fn rival_error(
    matrix: &OperatorMatrix,
    methods: &[RecoveryMethod],
    x: &[Box<dyn Fn(&Point) -> f64 + Sync + '_>],
    z: &[Vec<f64>],
    rival: Rival,
    y: OutputNorm,
    psi: &PsiNorm,
) -> Result<f64> {
    let signs = matrix.signs();
    let diffs: Vec<Box<dyn Fn(&Point) -> f64 + Sync + '_>> = (0..methods.len())
        .map(|j| {
            let (m, xj, zj, s) = (&methods[j], &x[j], &z[j], signs[j]);
            Box::new(move |t: &Point| {
                if !m.domain().contains(t) {
                    return 0.0;
                }
                s * (xj(t) - rival.eval(m, zj, t))
            }) as Box<dyn Fn(&Point) -> f64 + Sync>
        })
        .collect();
    let refs: Vec<ColumnFn> = diffs.iter().map(|b| b.as_ref() as ColumnFn).collect();
    matrix.direct_norm(&refs, y, psi)
}

/// `∫ (upper − lower)/2 dμ` at `z = 0`: the pointwise minimax value of the
/// discretized identity problem. Intervals use the trapezoid rule on
/// `resolution` vertices; other domains their midpoint grid.
pub fn grid_minimax_oracle(method: &RecoveryMethod, resolution: usize) -> Result<f64> {
    let zero = vec![0.0; method.n()];
    let grid = match method.domain() {
        Domain::Interval { a, b } => {
            if resolution < 2 {
                return Err(Error::Config(format!("grid resolution must be >= 2, got {resolution}")));
            }
            let m = resolution - 1;
            let h = (b - a) / m as f64;
            let nodes = crate::quadrature::vertices(*a, *b, m).into_iter().map(Point::scalar).collect();
            let mut weights = vec![h; resolution];
            weights[0] = h / 2.0;
            weights[m] = h / 2.0;
            QuadratureGrid { nodes, weights }
        }
        other => other.build_grid(resolution)?,
    };
    let env = envelope_on(method, &zero, grid)?;
    Ok(env.grid.integrate_values(&env.half_width()))
}
