//! JSON run configuration.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use optrec_core::equations::{HeatCase, HeatProblem, OdeProblem, PoissonProblem, WaveProblem};
use optrec_core::{Domain, Error, InfoSpec, ModulusSpec, OutputNorm, Point, PsiNorm, RecoveryMethod, Result, Variant};

pub const DEFAULT_RESOLUTION: usize = 200;
pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Identity,
    Volterra,
    Fredholm,
    Ode,
    PoissonDisk,
    Heat,
    Wave,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Identity => "identity",
            ProblemKind::Volterra => "volterra",
            ProblemKind::Fredholm => "fredholm",
            ProblemKind::Ode => "ode",
            ProblemKind::PoissonDisk => "poisson-disk",
            ProblemKind::Heat => "heat",
            ProblemKind::Wave => "wave",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantConfig {
    #[default]
    Plain,
    Tilde,
}

impl From<VariantConfig> for Variant {
    fn from(v: VariantConfig) -> Self {
        match v {
            VariantConfig::Plain => Variant::Plain,
            VariantConfig::Tilde => Variant::Tilde,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    Interval { a: f64, b: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Disk { center: [f64; 2], radius: f64 },
    Circle { center: [f64; 2], radius: f64 },
    SpaceTime { lo: Vec<f64>, hi: Vec<f64>, t0: f64, t1: f64 },
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain> {
        match self {
            DomainConfig::Interval { a, b } => Domain::interval(*a, *b),
            DomainConfig::Box { lo, hi } => Domain::cube(lo, hi),
            DomainConfig::Disk { center, radius } => Domain::disk(*center, *radius),
            DomainConfig::Circle { center, radius } => Domain::circle(*center, *radius),
            DomainConfig::SpaceTime { lo, hi, t0, t1 } => Domain::spacetime(lo, hi, *t0, *t1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PointsConfig {
    Scalars(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ErrorsConfig {
    Uniform(f64),
    List(Vec<f64>),
}

/// One class block: a domain, a modulus, sample points and error bounds.
///
/// For `ode` the first block carries only the `errors` of the initial value.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub modulus: Option<ModulusSpec>,
    #[serde(default)]
    pub points: Option<PointsConfig>,
    /// Points on a circle given by angle instead of coordinates.
    #[serde(default)]
    pub angles: Option<Vec<f64>>,
    #[serde(default)]
    pub errors: Option<ErrorsConfig>,
    #[serde(default)]
    pub variant: Option<VariantConfig>,
    /// Measurement file (`index,z`), relative to the config file.
    #[serde(default)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    /// `k(t, s) = value`.
    Constant { value: f64 },
    /// `k(t, s) = scale · e^{rate (t − s)}`.
    Exponential { scale: f64, rate: f64 },
    /// `k(t, s) = scale · t^p · s^q`.
    SeparablePower { scale: f64, p: f64, q: f64 },
}

impl KernelConfig {
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match *self {
            KernelConfig::Constant { value } => value,
            KernelConfig::Exponential { scale, rate } => scale * (rate * (t - s)).exp(),
            KernelConfig::SeparablePower { scale, p, q } => scale * t.powf(p) * s.powf(q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SliceConfig {
    FixedTime { t0: f64 },
    FixedPointRay { u0: Vec<f64> },
    SinglePoint { u0: Vec<f64>, t0: f64 },
}

impl From<&SliceConfig> for HeatCase {
    fn from(s: &SliceConfig) -> Self {
        match s.clone() {
            SliceConfig::FixedTime { t0 } => HeatCase::FixedTime { t0 },
            SliceConfig::FixedPointRay { u0 } => HeatCase::FixedPointRay { u0 },
            SliceConfig::SinglePoint { u0, t0 } => HeatCase::SinglePoint { u0, t0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    #[serde(default = "default_y")]
    pub y: OutputNorm,
    #[serde(default = "default_psi")]
    pub psi: PsiNorm,
}

fn default_y() -> OutputNorm {
    OutputNorm::L1
}

fn default_psi() -> PsiNorm {
    PsiNorm::L1
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig { y: default_y(), psi: default_psi() }
    }
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub problem: ProblemKind,
    #[serde(default)]
    pub variant: VariantConfig,
    pub classes: Vec<ClassConfig>,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    /// Grid intervals of the resolvent table.
    #[serde(default)]
    pub resolvent_intervals: Option<usize>,
    #[serde(default)]
    pub s_matrix: Option<Vec<Vec<f64>>>,
    /// Space dimension for `wave`.
    #[serde(default)]
    pub d: Option<usize>,
    /// Output time for `wave`.
    #[serde(default)]
    pub t0: Option<f64>,
    /// Output manifold for `heat`.
    #[serde(default)]
    pub slice: Option<SliceConfig>,
    #[serde(default)]
    pub norm: NormConfig,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trials: Option<usize>,
    /// Output points for `solve`; a default grid when absent.
    #[serde(default)]
    pub solve_points: Option<Vec<Vec<f64>>>,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn need<T: Clone>(&self, v: &Option<T>, what: &str) -> Result<T> {
        v.clone().ok_or_else(|| Error::Config(format!("problem `{}` needs `{what}`", self.problem.name())))
    }

    pub fn wave_dim(&self) -> Result<usize> {
        self.need(&self.d, "d")
    }

    /// Number of class blocks the problem kind expects.
    pub fn arity(&self) -> Result<usize> {
        Ok(match self.problem {
            ProblemKind::Identity | ProblemKind::Volterra | ProblemKind::Fredholm => 1,
            ProblemKind::PoissonDisk | ProblemKind::Heat => 2,
            ProblemKind::Wave => {
                if self.wave_dim()? == 1 {
                    3
                } else {
                    2
                }
            }
            ProblemKind::Ode => self.s_matrix()?.nrows() + 1,
        })
    }

    pub fn s_matrix(&self) -> Result<DMatrix<f64>> {
        let rows = self.need(&self.s_matrix, "s_matrix")?;
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Config("s_matrix must be a non-empty square array of rows".into()));
        }
        Ok(DMatrix::from_fn(d, d, |i, k| rows[i][k]))
    }

    pub fn kernel(&self) -> Result<KernelConfig> {
        self.need(&self.kernel, "kernel")
    }

    pub fn heat_case(&self) -> Result<HeatCase> {
        Ok(HeatCase::from(&self.need(&self.slice, "slice")?))
    }

    pub fn wave_t0(&self) -> Result<f64> {
        self.need(&self.t0, "t0")
    }

    pub fn check_arity(&self) -> Result<()> {
        let want = self.arity()?;
        if self.classes.len() != want {
            return Err(Error::Config(format!(
                "problem `{}` needs {want} class blocks, got {}",
                self.problem.name(),
                self.classes.len()
            )));
        }
        Ok(())
    }

    /// Builds the recovery method of class block `j`.
    pub fn method(&self, j: usize) -> Result<RecoveryMethod> {
        let c = &self.classes[j];
        let label = |what: &str| Error::Config(format!("class {j} needs `{what}`"));
        let domain = c.domain.as_ref().ok_or_else(|| label("domain"))?.build()?;
        let modulus = c.modulus.clone().ok_or_else(|| label("modulus"))?;
        modulus.check()?;
        let points: Vec<Point> = match (&c.points, &c.angles) {
            (Some(_), Some(_)) => return Err(Error::Config(format!("class {j}: give `points` or `angles`, not both"))),
            (Some(PointsConfig::Scalars(v)), None) => v.iter().map(|x| Point::scalar(*x)).collect(),
            (Some(PointsConfig::Vectors(v)), None) => v.iter().map(|x| Point::try_new(x)).collect::<Result<_>>()?,
            (None, Some(a)) => a.iter().map(|th| domain.circle_point(*th)).collect::<Result<_>>()?,
            (None, None) => return Err(label("points")),
        };
        let errors = expand_errors(c.errors.as_ref(), points.len(), j)?;
        let variant = c.variant.unwrap_or(self.variant).into();
        RecoveryMethod::new(variant, modulus, InfoSpec::new(points, errors)?, domain)
    }

    /// Error bounds of the `ode` initial-value block.
    pub fn initial_errors(&self) -> Result<Vec<f64>> {
        let d = self.s_matrix()?.nrows();
        let c = &self.classes[0];
        if c.domain.is_some() || c.modulus.is_some() || c.points.is_some() || c.angles.is_some() {
            return Err(Error::Config("the first ode block describes the initial value and takes only `errors`".into()));
        }
        expand_errors(c.errors.as_ref(), d, 0)
    }

    /// Indices of the class blocks that are ordinary function classes.
    pub fn class_indices(&self) -> std::ops::Range<usize> {
        match self.problem {
            ProblemKind::Ode => 1..self.classes.len(),
            _ => 0..self.classes.len(),
        }
    }

    pub fn build(&self) -> Result<Problem> {
        self.check_arity()?;
        Ok(match self.problem {
            ProblemKind::Identity => Problem::Identity(self.method(0)?),
            ProblemKind::Volterra | ProblemKind::Fredholm => {
                let m = self.method(0)?;
                if !matches!(m.domain(), Domain::Interval { .. }) {
                    return Err(Error::Config("integral-equation classes live on an interval".into()));
                }
                Problem::Integral { method: m, kernel: self.kernel()? }
            }
            ProblemKind::Ode => {
                let s = self.s_matrix()?;
                let q: Vec<RecoveryMethod> = self.class_indices().map(|j| self.method(j)).collect::<Result<_>>()?;
                let Domain::Interval { a, b } = *q[0].domain() else {
                    return Err(Error::Config("ode right-hand-side classes live on an interval".into()));
                };
                Problem::Ode(OdeProblem::new(s, a, b, self.initial_errors()?, q)?)
            }
            ProblemKind::PoissonDisk => Problem::Poisson(PoissonProblem::new(self.method(0)?, self.method(1)?)?),
            ProblemKind::Heat => {
                Problem::Heat(HeatProblem::new(self.method(0)?, self.method(1)?)?, self.heat_case()?)
            }
            ProblemKind::Wave => {
                let methods = (0..self.classes.len()).map(|j| self.method(j)).collect::<Result<_>>()?;
                Problem::Wave(WaveProblem::new(self.wave_dim()?, self.wave_t0()?, methods)?)
            }
        })
    }
}

fn expand_errors(e: Option<&ErrorsConfig>, n: usize, j: usize) -> Result<Vec<f64>> {
    match e {
        None => Ok(vec![0.0; n]),
        Some(ErrorsConfig::Uniform(v)) => Ok(vec![*v; n]),
        Some(ErrorsConfig::List(v)) if v.len() == n => Ok(v.clone()),
        Some(ErrorsConfig::List(v)) => {
            Err(Error::Config(format!("class {j}: {} error bounds for {n} points", v.len())))
        }
    }
}

/// A configured problem, ready to evaluate.
#[derive(Debug, Clone)]
pub enum Problem {
    Identity(RecoveryMethod),
    Integral { method: RecoveryMethod, kernel: KernelConfig },
    Ode(OdeProblem),
    Poisson(PoissonProblem),
    Heat(HeatProblem, HeatCase),
    Wave(WaveProblem),
}

impl Problem {
    /// Column methods in operator order.
    pub fn methods(&self) -> Vec<RecoveryMethod> {
        match self {
            Problem::Identity(m) | Problem::Integral { method: m, .. } => vec![m.clone()],
            Problem::Ode(p) => p.methods(),
            Problem::Poisson(p) => p.methods(),
            Problem::Heat(p, _) => p.methods(),
            Problem::Wave(p) => p.methods().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str = r#"{
        "problem": "identity",
        "classes": [{
            "domain": {"kind": "interval", "a": 0, "b": 1},
            "modulus": {"kind": "power", "c": 1, "alpha": 1},
            "points": [0.25, 0.75],
            "errors": 0
        }],
        "norm": {"y": "l1", "psi": {"kind": "l1"}}
    }"#;

    #[test]
    fn parses_identity() {
        let c = ProblemConfig::from_json(IDENTITY).unwrap();
        assert_eq!(c.resolution, DEFAULT_RESOLUTION);
        let Problem::Identity(m) = c.build().unwrap() else { panic!() };
        assert_eq!(m.n(), 2);
        assert_eq!(m.info().errors(), &[0.0, 0.0]);
    }

    #[test]
    fn rejects_wrong_arity_and_unknown_fields() {
        let two = IDENTITY.replace(r#""classes": [{"#, r#""classes": [{"points": [0.5]}, {"#);
        assert!(ProblemConfig::from_json(&two).unwrap().build().is_err());
        let extra = IDENTITY.replace(r#""problem""#, r#""colour": 1, "problem""#);
        assert!(ProblemConfig::from_json(&extra).is_err());
    }

    #[test]
    fn kernels() {
        assert_eq!(KernelConfig::Constant { value: 0.5 }.eval(0.3, 0.1), 0.5);
        let e = KernelConfig::Exponential { scale: 2.0, rate: 1.0 }.eval(1.0, 1.0);
        assert_eq!(e, 2.0);
        assert_eq!(KernelConfig::SeparablePower { scale: 1.0, p: 1.0, q: 2.0 }.eval(2.0, 3.0), 18.0);
    }
}
