//! Moduli of continuity.
//!
//! A modulus of continuity is a continuous, nondecreasing, subadditive map
//! `ω: [0, ∞) → [0, ∞)` with `ω(0) = 0`. It defines the class of functions whose
//! increments satisfy `|x(t) − x(s)| ≤ ω(ρ(t, s))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack used by every axiom check.
pub const AXIOM_TOL: f64 = 1e-12;

/// Default number of grid points used by [`ModulusSpec::validate`].
pub const DEFAULT_VALIDATION_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModulusSpec {
    /// `ω(t) = c·t^α`, `c > 0`, `α ∈ (0, 1]`.
    Power { c: f64, alpha: f64 },
    /// `ω(t) = min(c·t, cap)`.
    CappedLinear { c: f64, cap: f64 },
    /// Concave broken line through `(t_i, ω_i)`, starting at `(0, 0)` and continued
    /// past the last knot with the last slope.
    PiecewiseLinearConcave { knots: Vec<(f64, f64)> },
    /// Sampled values, linearly interpolated and held constant past the last sample.
    /// Unlike the other kinds, a table is not checked against the axioms on
    /// construction; use [`ModulusSpec::validate`].
    Table { samples: Vec<(f64, f64)> },
}

impl ModulusSpec {
    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        let m = ModulusSpec::Power { c, alpha };
        m.check()?;
        Ok(m)
    }

    /// The identity modulus `ω(t) = t`.
    pub fn identity() -> Self {
        ModulusSpec::Power { c: 1.0, alpha: 1.0 }
    }

    pub fn capped_linear(c: f64, cap: f64) -> Result<Self> {
        let m = ModulusSpec::CappedLinear { c, cap };
        m.check()?;
        Ok(m)
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let m = ModulusSpec::PiecewiseLinearConcave { knots };
        m.check()?;
        Ok(m)
    }

    pub fn table(samples: Vec<(f64, f64)>) -> Result<Self> {
        let m = ModulusSpec::Table { samples };
        m.check()?;
        Ok(m)
    }

    /// Checks the structural parameters of the kind. Deserialized specs should be
    /// passed through this before use.
    pub fn check(&self) -> Result<()> {
        match self {
            ModulusSpec::Power { c, alpha } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::Config(format!("power modulus needs c > 0, got {c}")));
                }
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return Err(Error::Config(format!(
                        "power modulus needs alpha in (0, 1], got {alpha}"
                    )));
                }
            }
            ModulusSpec::CappedLinear { c, cap } => {
                if !(c.is_finite() && *c > 0.0 && cap.is_finite() && *cap > 0.0) {
                    return Err(Error::Config(format!(
                        "capped-linear modulus needs c > 0 and cap > 0, got c={c}, cap={cap}"
                    )));
                }
            }
            ModulusSpec::PiecewiseLinearConcave { knots } => {
                check_abscissae(knots, "knots")?;
                if knots[0] != (0.0, 0.0) {
                    return Err(Error::Config("first knot must be (0, 0)".into()));
                }
                let mut prev_slope = f64::INFINITY;
                for w in knots.windows(2) {
                    let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                    if slope < -AXIOM_TOL {
                        return Err(Error::Config(format!(
                            "knots decrease between t={} and t={}",
                            w[0].0, w[1].0
                        )));
                    }
                    if slope > prev_slope + AXIOM_TOL {
                        return Err(Error::Config(format!(
                            "knots are not concave at t={}",
                            w[0].0
                        )));
                    }
                    prev_slope = slope;
                }
            }
            ModulusSpec::Table { samples } => {
                check_abscissae(samples, "samples")?;
                if samples[0].0 != 0.0 {
                    return Err(Error::Config("table must start at t = 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Evaluates `ω(t)`; `t` may be `+∞` (distance to an empty boundary).
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("modulus argument must be >= 0, got {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    /// [`eval`](Self::eval) without the argument check; callers pass distances.
    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return match self {
                ModulusSpec::Table { samples } => samples[0].1,
                _ => 0.0,
            };
        }
        match self {
            ModulusSpec::Power { c, alpha } => {
                if *alpha == 1.0 {
                    c * t
                } else {
                    c * t.powf(*alpha)
                }
            }
            ModulusSpec::CappedLinear { c, cap } => (c * t).min(*cap),
            ModulusSpec::PiecewiseLinearConcave { knots } => interpolate(knots, t, true),
            ModulusSpec::Table { samples } => interpolate(samples, t, false),
        }
    }

    /// Samples the axioms on `grid_size` equally spaced points of `[0, span]`.
    ///
    /// Each violated axiom is reported once, with its worst witness.
    pub fn validate(&self, grid_size: usize, span: f64) -> ValidationReport {
        let n = grid_size.max(2);
        let grid: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval_unchecked(t)).collect();
        let mut violations = Vec::new();

        let at_zero = self.eval_unchecked(0.0);
        if at_zero.abs() > AXIOM_TOL {
            violations.push(Violation {
                axiom: Axiom::ZeroAtOrigin,
                witness: (0.0, 0.0),
                lhs: at_zero,
                rhs: 0.0,
            });
        }

        let mut worst: Option<Violation> = None;
        for i in 1..n {
            let excess = vals[i - 1] - vals[i];
            if excess > AXIOM_TOL && worst.as_ref().map_or(true, |w| excess > w.lhs - w.rhs) {
                worst = Some(Violation {
                    axiom: Axiom::Monotone,
                    witness: (grid[i - 1], grid[i]),
                    lhs: vals[i - 1],
                    rhs: vals[i],
                });
            }
        }
        violations.extend(worst);

        let mut worst: Option<Violation> = None;
        for i in 0..n {
            for j in i..n {
                if i + j >= n {
                    break;
                }
                // grid[i] + grid[j] is grid[i + j] up to rounding
                let lhs = self.eval_unchecked(grid[i] + grid[j]);
                let rhs = vals[i] + vals[j];
                let excess = lhs - rhs;
                if excess > AXIOM_TOL && worst.as_ref().map_or(true, |w| excess > w.lhs - w.rhs) {
                    worst = Some(Violation {
                        axiom: Axiom::Subadditive,
                        witness: (grid[i], grid[j]),
                        lhs,
                        rhs,
                    });
                }
            }
        }
        violations.extend(worst);

        ValidationReport { grid_size: n, span, violations }
    }
}

/// Free-function form of [`ModulusSpec::validate`]; callers usually pass
/// [`DEFAULT_VALIDATION_POINTS`] and the domain diameter.
pub fn validate_modulus(m: &ModulusSpec, grid_size: usize, span: f64) -> ValidationReport {
    m.validate(grid_size, span)
}

fn check_abscissae(pts: &[(f64, f64)], what: &str) -> Result<()> {
    if pts.len() < 2 {
        return Err(Error::Config(format!("{what} need at least two entries")));
    }
    if pts.iter().any(|(t, w)| !t.is_finite() || !w.is_finite()) {
        return Err(Error::Config(format!("{what} must be finite")));
    }
    if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Config(format!("{what} must have strictly increasing t")));
    }
    Ok(())
}

fn interpolate(pts: &[(f64, f64)], t: f64, extend_slope: bool) -> f64 {
    let last = pts.len() - 1;
    if t >= pts[last].0 {
        if !extend_slope || t.is_infinite() && pts[last].1 == pts[last - 1].1 {
            return pts[last].1;
        }
        let slope = (pts[last].1 - pts[last - 1].1) / (pts[last].0 - pts[last - 1].0);
        return pts[last].1 + slope * (t - pts[last].0);
    }
    let k = pts.partition_point(|p| p.0 <= t);
    let (t0, w0) = pts[k - 1];
    let (t1, w1) = pts[k];
    w0 + (w1 - w0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    ZeroAtOrigin,
    Monotone,
    Subadditive,
}

impl std::fmt::Display for Axiom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axiom::ZeroAtOrigin => "zero-at-origin",
            Axiom::Monotone => "monotone",
            Axiom::Subadditive => "subadditive",
        })
    }
}

/// A failed axiom together with the arguments that exhibit it.
///
/// For [`Axiom::Subadditive`], `lhs = ω(t′ + t″)` and `rhs = ω(t′) + ω(t″)`; for
/// [`Axiom::Monotone`], `lhs = ω(t′)` and `rhs = ω(t″)` with `t′ < t″`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: (f64, f64),
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub grid_size: usize,
    pub span: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, axiom: Axiom) -> Option<&Violation> {
        self.violations.iter().find(|v| v.axiom == axiom)
    }
}
