use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;

use optrec_core::equations::{
    fredholm_resolvent, solve_second_kind, volterra_resolvent, HeatCase, ResolventOptions, ResolventTable,
};
use optrec_core::modulus::DEFAULT_VALIDATION_POINTS;
use optrec_core::operators::OutputSpace;
use optrec_core::report;
use optrec_core::{
    verify_optimality, Error, ErrorReport, OperatorEntry, OperatorMatrix, OutputNorm, Point, RecoveryMethod, Result,
    VerifyOptions,
};

use crate::config::{KernelConfig, Problem, ProblemConfig, ProblemKind, DEFAULT_TRIALS};

/// Points per axis of the default `solve` output grid.
const SOLVE_GRID: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Check every modulus against the axioms.
    Validate,
    /// Majorant profile of each class.
    Tau,
    /// Cell index of each grid node.
    Partition,
    /// Recovered functions from measurement files.
    Recover,
    /// Optimal error of the configured problem.
    Error,
    /// Seeded adversarial check of the optimality claims.
    Verify,
    /// Recovered solution of the equation plus its error report.
    Solve,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    /// Measurement files, one per class block; overrides the `data` fields.
    pub data: Vec<PathBuf>,
}

/// A failed run: exit code and message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_precondition() { 2 } else { 1 }, message: e.to_string() }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Runs one command; returns the files written.
pub fn run(command: Command, opts: &RunOptions) -> std::result::Result<Vec<PathBuf>, Failure> {
    let mut cfg = ProblemConfig::load(&opts.config)?;
    if let Some(g) = opts.grid {
        cfg.resolution = g;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(t) = opts.trials {
        cfg.trials = Some(t);
    }
    std::fs::create_dir_all(&opts.out)
        .map_err(|e| Error::Input(format!("cannot create output directory {}: {e}", opts.out.display())))?;
    let ctx = Context { cfg, opts, written: Vec::new() };
    Ok(ctx.dispatch(command)?)
}

struct Context<'a> {
    cfg: ProblemConfig,
    opts: &'a RunOptions,
    written: Vec<PathBuf>,
}

impl Context<'_> {
    fn dispatch(mut self, command: Command) -> Result<Vec<PathBuf>> {
        if command == Command::Validate {
            self.validate()?;
            return Ok(self.written);
        }
        self.check_axioms()?;
        let problem = self.cfg.build()?;
        match command {
            Command::Validate => unreachable!(),
            Command::Tau => self.tau(&problem)?,
            Command::Partition => self.partition(&problem)?,
            Command::Recover => self.recover(&problem)?,
            Command::Error => self.error(&problem)?,
            Command::Verify => self.verify(&problem)?,
            Command::Solve => self.solve(&problem)?,
        }
        Ok(self.written)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.opts.out.join(name);
        let f = File::create(&path).map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    fn res(&self) -> usize {
        self.cfg.resolution
    }

    /// Axiom report for each class modulus, then a precondition error if any fails.
    fn validate(&mut self) -> Result<()> {
        let mut rows = Vec::new();
        let mut failed = Vec::new();
        for j in self.cfg.class_indices() {
            let c = &self.cfg.classes[j];
            let (Some(m), Some(d)) = (&c.modulus, &c.domain) else {
                return Err(Error::Config(format!("class {j} needs `domain` and `modulus`")));
            };
            m.check()?;
            let rep = m.validate(DEFAULT_VALIDATION_POINTS, d.build()?.diameter());
            if rep.passed() {
                rows.push(vec![j.to_string(), "true".into(), String::new(), String::new(), String::new(), String::new(), String::new()]);
            }
            for v in &rep.violations {
                failed.push(format!("class {j}: {} fails at ({}, {}): {} vs {}", v.axiom, v.witness.0, v.witness.1, v.lhs, v.rhs));
                rows.push(vec![
                    j.to_string(),
                    "false".into(),
                    v.axiom.to_string(),
                    format!("{}", v.witness.0),
                    format!("{}", v.witness.1),
                    format!("{}", v.lhs),
                    format!("{}", v.rhs),
                ]);
            }
        }
        let out = self.create("validation.csv")?;
        report::write_table(out, &["class", "passed", "axiom", "t1", "t2", "lhs", "rhs"], &rows)?;
        if !failed.is_empty() {
            return Err(Error::Precondition(format!("ω is not a modulus of continuity; {}", failed.join("; "))));
        }
        self.cfg.build().map(|_| ())
    }

    fn check_axioms(&self) -> Result<()> {
        for j in self.cfg.class_indices() {
            let c = &self.cfg.classes[j];
            if let (Some(m), Some(d)) = (&c.modulus, &c.domain) {
                m.check()?;
                if let Some(v) = m.validate(DEFAULT_VALIDATION_POINTS, d.build()?.diameter()).violations.first() {
                    return Err(Error::Precondition(format!(
                        "class {j}: ω is not a modulus of continuity ({} fails at ({}, {}))",
                        v.axiom, v.witness.0, v.witness.1
                    )));
                }
            }
        }
        Ok(())
    }

    fn classes(&self, problem: &Problem) -> Vec<(usize, RecoveryMethod)> {
        let methods = problem.methods();
        let skip = if self.cfg.problem == ProblemKind::Ode { self.cfg.s_matrix().map_or(0, |s| s.nrows()) } else { 0 };
        self.cfg.class_indices().zip(methods.into_iter().skip(skip)).collect()
    }

    fn tau(&mut self, problem: &Problem) -> Result<()> {
        for (j, m) in self.classes(problem) {
            let grid = m.domain().build_grid(self.res())?;
            let vals = grid.sample(|t| m.majorant(t));
            let out = self.create(&format!("tau_{j}.csv"))?;
            report::write_tau_profile(out, &grid.nodes, &vals)?;
        }
        Ok(())
    }

    fn partition(&mut self, problem: &Problem) -> Result<()> {
        for (j, m) in self.classes(problem) {
            let grid = m.domain().build_grid(self.res())?;
            let cells = grid.nodes.iter().map(|t| m.assign_cell(t)).collect::<Result<Vec<_>>>()?;
            let out = self.create(&format!("partition_{j}.csv"))?;
            report::write_partition(out, &grid.nodes, &cells)?;
        }
        Ok(())
    }

    /// Measurement vectors for every class block.
    fn data(&self) -> Result<Vec<Vec<f64>>> {
        let blocks = self.cfg.classes.len();
        let paths: Vec<PathBuf> = if !self.opts.data.is_empty() {
            if self.opts.data.len() != blocks {
                return Err(Error::Input(format!("{} --data files for {blocks} class blocks", self.opts.data.len())));
            }
            self.opts.data.clone()
        } else {
            let base = self.opts.config.parent().unwrap_or(Path::new("."));
            self.cfg
                .classes
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    c.data
                        .as_ref()
                        .map(|p| base.join(p))
                        .ok_or_else(|| Error::Input(format!("class {j} has no measurement file; pass --data")))
                })
                .collect::<Result<_>>()?
        };
        paths
            .iter()
            .map(|p| {
                let f = File::open(p).map_err(|e| Error::Input(format!("cannot read measurements {}: {e}", p.display())))?;
                report::read_measurements(f)
            })
            .collect()
    }

    fn recover(&mut self, problem: &Problem) -> Result<()> {
        let data = self.data()?;
        for (j, m) in self.classes(problem) {
            m.check_data(&data[j])?;
            let grid = m.domain().build_grid(self.res())?;
            let vals = grid.sample(|t| m.recover(&data[j], t).unwrap_or(f64::NAN));
            let out = self.create(&format!("recovered_{j}.csv"))?;
            report::write_profile(out, &grid.nodes, &[("x", &vals)])?;
        }
        Ok(())
    }

    fn resolvent(&self, method: &RecoveryMethod, kernel: KernelConfig) -> Result<Arc<ResolventTable>> {
        let optrec_core::Domain::Interval { a, b } = *method.domain() else {
            return Err(Error::Config("integral-equation classes live on an interval".into()));
        };
        let mut opts = ResolventOptions::default();
        if let Some(n) = self.cfg.resolvent_intervals {
            opts.intervals = n;
        }
        let k = move |t: f64, s: f64| kernel.eval(t, s);
        let table = match self.cfg.problem {
            ProblemKind::Volterra => volterra_resolvent(&k, a, b, opts)?,
            _ => fredholm_resolvent(&k, a, b, opts)?,
        };
        Ok(Arc::new(table))
    }

    fn matrix(&self, problem: &Problem, resolution: usize) -> Result<OperatorMatrix> {
        match problem {
            Problem::Identity(m) => {
                OperatorMatrix::single(OutputSpace::full(m.domain().clone(), resolution)?, OperatorEntry::identity())
            }
            Problem::Integral { method, kernel } => self.resolvent(method, *kernel)?.operator(resolution),
            Problem::Ode(p) => p.matrix(resolution),
            Problem::Poisson(p) => p.matrix(resolution),
            Problem::Heat(p, case) => p.matrix(case, resolution),
            Problem::Wave(p) => p.matrix(resolution),
        }
    }

    fn error_report(&mut self, problem: &Problem) -> Result<ErrorReport> {
        let (y, psi) = (self.cfg.norm.y, self.cfg.norm.psi.clone());
        let res = self.res();
        let name = self.cfg.problem.name();
        match problem {
            Problem::Poisson(p) => {
                let forms = p.error(res)?;
                let out = self.create("disk_forms.csv")?;
                report::write_table(
                    out,
                    &["half_factor_form", "cross_check", "ratio", "resolution"],
                    &[vec![
                        format!("{}", forms.half_factor),
                        format!("{}", forms.cross_check),
                        format!("{}", forms.ratio),
                        forms.resolution.to_string(),
                    ]],
                )?;
                p.optimal_error(y, &psi, res)
            }
            Problem::Heat(p, case) if y == OutputNorm::L1 => {
                let fine = p.optimal_error(case, res)?;
                let coarse = p.optimal_error(case, (res / 2).max(2))?;
                if let (HeatCase::FixedPointRay { .. }, Some(alt)) = (case, fine.alt_value) {
                    let out = self.create("heat_ray.csv")?;
                    report::write_table(
                        out,
                        &["value", "alt_value"],
                        &[vec![format!("{}", fine.value), format!("{alt}")]],
                    )?;
                }
                let value = psi.eval(&[fine.value])?;
                let est = (value - psi.eval(&[coarse.value])?).abs();
                Ok(ErrorReport::new(name, &problem.methods(), y, &psi, value, est, res))
            }
            _ => self.matrix(problem, res)?.optimal_error(name, &problem.methods(), y, &psi),
        }
    }

    fn error(&mut self, problem: &Problem) -> Result<()> {
        let rep = self.error_report(problem)?;
        let out = self.create("error.csv")?;
        report::write_error_reports(out, &[rep])
    }

    fn verify(&mut self, problem: &Problem) -> Result<()> {
        let matrix = self.matrix(problem, self.res())?;
        let opts = VerifyOptions {
            trials: self.cfg.trials.unwrap_or(DEFAULT_TRIALS),
            seed: self.cfg.seed,
            ..Default::default()
        };
        let rep = verify_optimality(&matrix, &problem.methods(), self.cfg.norm.y, &self.cfg.norm.psi, opts)?;
        let out = self.create("verify.csv")?;
        report::write_verification(out, &rep)?;
        if let Some(r) = rep.failures().next() {
            return Err(Error::Numerical {
                what: format!("verification clause {} failed: value {} against bound {}", r.clause, r.value, r.bound),
                location: format!("trial {}", r.trial),
            });
        }
        Ok(())
    }

    /// Output points for `solve`.
    fn solve_points(&self, problem: &Problem) -> Result<Vec<Point>> {
        if let Some(pts) = &self.cfg.solve_points {
            return pts.iter().map(|p| Point::try_new(p)).collect();
        }
        Ok(match problem {
            Problem::Identity(m) | Problem::Integral { method: m, .. } => m.domain().build_grid(self.res())?.nodes,
            Problem::Ode(p) => p.methods()[p.dim()].domain().build_grid(self.res())?.nodes,
            Problem::Poisson(p) => p.methods()[0].domain().build_grid(SOLVE_GRID / 2)?.nodes,
            _ => self.matrix(problem, SOLVE_GRID)?.output(0).grid().nodes.clone(),
        })
    }

    fn solve(&mut self, problem: &Problem) -> Result<()> {
        let data = self.data()?;
        let pts = self.solve_points(problem)?;
        let res = self.res();
        let scalar = |f: &dyn Fn(&Point) -> Result<f64>| pts.iter().map(f).collect::<Result<Vec<f64>>>();
        let columns: Vec<(String, Vec<f64>)> = match problem {
            Problem::Identity(m) => {
                m.check_data(&data[0])?;
                vec![("x".into(), scalar(&|t| m.recover(&data[0], t))?)]
            }
            Problem::Integral { method, kernel } => {
                method.check_data(&data[0])?;
                let table = self.resolvent(method, *kernel)?;
                let f = |s: f64| method.recover(&data[0], &Point::scalar(s)).unwrap_or(0.0);
                vec![("x".into(), scalar(&|t| Ok(solve_second_kind(&table, &f, t.x())))?)]
            }
            Problem::Ode(p) => {
                let d = p.dim();
                if data[0].len() != d {
                    return Err(Error::Input(format!("initial-value file has {} entries, expected {d}", data[0].len())));
                }
                let states = pts.iter().map(|t| p.recover(&data[0], &data[1..], t.x())).collect::<Result<Vec<_>>>()?;
                (0..d).map(|i| (format!("x{}", i + 1), states.iter().map(|s| s[i]).collect())).collect()
            }
            Problem::Poisson(p) => {
                vec![("x".into(), scalar(&|s| p.recover(&data[0], &data[1], s, res))?)]
            }
            Problem::Heat(p, _) => {
                let d = p.dim();
                vec![("x".into(), scalar(&|o| p.recover(&data[0], &data[1], &o.coords()[..d], o.last(), res))?)]
            }
            Problem::Wave(p) => {
                let d = p.dim();
                vec![("x".into(), scalar(&|o| p.recover(&data, &o.coords()[..d], res))?)]
            }
        };
        let named: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
        let out = self.create("solution.csv")?;
        report::write_profile(out, &pts, &named)?;
        self.error(problem)
    }
}
