use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const UNIT: &str = r#"{"kind": "interval", "a": 0, "b": 1}"#;
const LIPSCHITZ: &str = r#"{"kind": "power", "c": 1, "alpha": 1}"#;

struct Case {
    dir: TempDir,
    cfg: PathBuf,
}

impl Case {
    fn new(config: &str, data: &[(&str, &str)]) -> Case {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("problem.json");
        std::fs::write(&cfg, config).unwrap();
        for (name, text) in data {
            std::fs::write(dir.path().join(name), text).unwrap();
        }
        Case { dir, cfg }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn run(&self, command: &str, extra: &[&str]) -> Output {
        let out = self.out();
        let mut args = vec![command, "--config", self.cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_optrec")).args(&args).output().expect("spawn optrec")
    }

    fn ok(&self, command: &str, extra: &[&str]) {
        let o = self.run(command, extra);
        assert!(o.status.success(), "{command}: exit {:?}\n{}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.out().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }
}

fn header(text: &str) -> &str {
    text.lines().next().unwrap_or("")
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn identity(points: &str, errors: &str, extra: &str) -> String {
    format!(
        r#"{{"problem": "identity",
            "classes": [{{"domain": {UNIT}, "modulus": {LIPSCHITZ}, "points": {points}, "errors": {errors}, "data": "z.csv"}}]{extra}}}"#
    )
}

#[test]
fn midpoint_error_on_the_unit_interval() {
    // two midpoints, exact data, ω(t) = t: 2·2·∫_0^{1/4} t dt = 1/8
    let case = Case::new(&identity("[0.25, 0.75]", "0", r#", "resolution": 1000"#), &[]);
    case.ok("error", &[]);
    let text = case.read("error.csv");
    assert_eq!(header(&text), "problem,n,e_max,y_norm,psi,value,est_quad_err");
    let value = column(&text, "value")[0];
    assert!((value - 0.125).abs() <= 1e-6, "value {value}");
}

#[test]
fn profiles_have_the_documented_headers() {
    let case = Case::new(&identity("[0.2, 0.6]", "[0.0, 0.1]", ""), &[("z.csv", "index,z\n0,1\n1,1.2\n")]);
    case.ok("validate", &[]);
    case.ok("tau", &["--grid", "11"]);
    case.ok("partition", &["--grid", "11"]);
    case.ok("recover", &["--grid", "11"]);
    assert_eq!(header(&case.read("validation.csv")), "class,passed,axiom,t1,t2,lhs,rhs");
    let tau = case.read("tau_0.csv");
    assert_eq!(header(&tau), "t,tau");
    assert_eq!(tau.lines().count(), 12);
    // own majorant: min over samples of e_j + |t − q_j|
    for (k, v) in column(&tau, "tau").iter().enumerate() {
        let t = column(&tau, "t")[k];
        let want = (t - 0.2).abs().min(0.1 + (t - 0.6).abs());
        assert!((v - want).abs() <= 1e-12, "τ({t}) = {v}, want {want}");
    }
    assert_eq!(header(&case.read("partition_0.csv")), "t,cell_index");
    let rec = case.read("recovered_0.csv");
    assert_eq!(header(&rec), "t,x");
    assert!(column(&rec, "x").iter().all(|x| *x == 1.0 || *x == 1.2));
}

#[test]
fn verify_passes_with_two_hundred_trials() {
    let case = Case::new(&identity("[0.1, 0.5, 0.9]", "[0.0, 0.02, 0.05]", r#", "resolution": 300"#), &[]);
    case.ok("verify", &["--trials", "200", "--seed", "3"]);
    let text = case.read("verify.csv");
    assert_eq!(header(&text), "trial,clause,value,bound,pass");
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn fredholm_with_unit_kernel_exits_two() {
    let cfg = format!(
        r#"{{"problem": "fredholm", "kernel": {{"kind": "constant", "value": 1}},
            "classes": [{{"domain": {UNIT}, "modulus": {LIPSCHITZ}, "points": [0.5], "data": "z.csv"}}]}}"#
    );
    let case = Case::new(&cfg, &[("z.csv", "index,z\n0,1\n")]);
    let o = case.run("solve", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("∫∫k²"));
}

#[test]
fn volterra_solve_matches_the_exponential() {
    // data ≡ 1 recovers f ≡ 1; x = 1 + ∫_0^t x gives e^t
    let cfg = format!(
        r#"{{"problem": "volterra", "kernel": {{"kind": "constant", "value": 1}},
            "classes": [{{"domain": {UNIT}, "modulus": {LIPSCHITZ}, "points": [0.3, 0.7], "data": "z.csv"}}],
            "solve_points": [[0.0], [0.5], [1.0]]}}"#
    );
    let case = Case::new(&cfg, &[("z.csv", "index,z\n0,1\n1,1\n")]);
    case.ok("solve", &[]);
    let text = case.read("solution.csv");
    for (t, x) in column(&text, "t").iter().zip(column(&text, "x")) {
        assert!((x - t.exp()).abs() <= 1e-5, "x({t}) = {x}");
    }
    assert_eq!(header(&case.read("error.csv")), "problem,n,e_max,y_norm,psi,value,est_quad_err");
}

#[test]
fn ode_solution_has_one_column_per_state() {
    let cfg = format!(
        r#"{{"problem": "ode", "s_matrix": [[-1, 0.5], [0.2, -0.3]],
            "classes": [{{"errors": [0, 0]}},
                        {{"domain": {UNIT}, "modulus": {LIPSCHITZ}, "points": [0.5]}},
                        {{"domain": {UNIT}, "modulus": {LIPSCHITZ}, "points": [0.5]}}],
            "resolution": 20}}"#
    );
    let case = Case::new(&cfg, &[("p.csv", "index,z\n0,1\n1,0\n"), ("q1.csv", "index,z\n0,0\n"), ("q2.csv", "index,z\n0,0\n")]);
    let d = |n: &str| case.dir.path().join(n).to_str().unwrap().to_string();
    let (p, q1, q2) = (d("p.csv"), d("q1.csv"), d("q2.csv"));
    case.ok("solve", &["--data", &p, "--data", &q1, "--data", &q2]);
    let text = case.read("solution.csv");
    assert_eq!(header(&text), "t,x1,x2");
    // q = 0: x(t) = e^{St} p
    let s = nalgebra::DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.2, -0.3]);
    for (k, t) in column(&text, "t").iter().enumerate() {
        let want = (&s * *t).exp() * nalgebra::DVector::from_vec(vec![1.0, 0.0]);
        assert!((column(&text, "x1")[k] - want[0]).abs() <= 1e-8);
        assert!((column(&text, "x2")[k] - want[1]).abs() <= 1e-8);
    }
}

#[test]
fn poisson_heat_and_wave_run_end_to_end() {
    let poisson = r#"{"problem": "poisson-disk",
        "classes": [{"domain": {"kind": "disk", "center": [0, 0], "radius": 1},
                     "modulus": {"kind": "power", "c": 1, "alpha": 1}, "points": [[0, 0]], "data": "f.csv"},
                    {"domain": {"kind": "circle", "center": [0, 0], "radius": 1},
                     "modulus": {"kind": "power", "c": 1, "alpha": 1}, "angles": [0, 2, 4], "data": "g.csv"}],
        "resolution": 16}"#;
    let case = Case::new(poisson, &[("f.csv", "index,z\n0,0\n"), ("g.csv", "index,z\n0,1\n1,1\n2,1\n")]);
    case.ok("solve", &[]);
    assert_eq!(header(&case.read("solution.csv")), "x1,x2,x");
    assert_eq!(header(&case.read("disk_forms.csv")), "half_factor_form,cross_check,ratio,resolution");

    let heat = r#"{"problem": "heat", "variant": "tilde", "slice": {"kind": "fixed-time", "t0": 1},
        "classes": [{"domain": {"kind": "space-time", "lo": [0], "hi": [1], "t0": 0, "t1": 0.5},
                     "modulus": {"kind": "power", "c": 1, "alpha": 1}, "points": [[0.4, 0.2]], "data": "f.csv"},
                    {"domain": {"kind": "interval", "a": 0, "b": 1},
                     "modulus": {"kind": "power", "c": 1, "alpha": 0.5}, "points": [0.3, 0.8], "data": "h.csv"}],
        "resolution": 12}"#;
    let case = Case::new(heat, &[("f.csv", "index,z\n0,0\n"), ("h.csv", "index,z\n0,0.1\n1,0.2\n")]);
    case.ok("error", &[]);
    assert!(column(&case.read("error.csv"), "value")[0] > 0.0);

    let wave = r#"{"problem": "wave", "d": 1, "t0": 0.4,
        "classes": [{"domain": {"kind": "space-time", "lo": [0], "hi": [1], "t0": 0, "t1": 1},
                     "modulus": {"kind": "power", "c": 1, "alpha": 1}, "points": [[0.5, 0.25]], "data": "f.csv"},
                    {"domain": {"kind": "interval", "a": 0, "b": 1},
                     "modulus": {"kind": "power", "c": 1, "alpha": 1}, "points": [0.3], "data": "g.csv"},
                    {"domain": {"kind": "interval", "a": 0, "b": 1},
                     "modulus": {"kind": "power", "c": 1, "alpha": 1}, "points": [0.2, 0.9], "data": "h.csv"}],
        "resolution": 16}"#;
    let case = Case::new(wave, &[("f.csv", "index,z\n0,0\n"), ("g.csv", "index,z\n0,0\n"), ("h.csv", "index,z\n0,0\n1,0\n")]);
    case.ok("solve", &[]);
    assert_eq!(header(&case.read("solution.csv")), "x1,x2,x");
}

#[test]
fn bad_inputs_exit_with_the_right_code() {
    // unknown field: a configuration error, not a precondition
    let case = Case::new(r#"{"problem": "identity", "classes": [], "colour": 1}"#, &[]);
    assert_eq!(case.run("tau", &[]).status.code(), Some(1));

    // a convex table is not subadditive
    let cfg = format!(
        r#"{{"problem": "identity",
            "classes": [{{"domain": {UNIT}, "modulus": {{"kind": "table", "samples": [[0, 0], [0.5, 0.1], [1, 1]]}},
                          "points": [0.5]}}]}}"#
    );
    let case = Case::new(&cfg, &[]);
    assert_eq!(case.run("validate", &[]).status.code(), Some(2));

    // two measurements for one point
    let case = Case::new(&identity("[0.5]", "0", ""), &[("z.csv", "index,z\n0,0\n1,1\n")]);
    assert_eq!(case.run("recover", &[]).status.code(), Some(1));

    // a missing measurement file
    let case = Case::new(&identity("[0.5]", "0", ""), &[]);
    assert_eq!(case.run("recover", &[]).status.code(), Some(1));
}

#[test]
fn verify_output_is_reproducible() {
    let case = Case::new(&identity("[0.2, 0.7]", "[0.01, 0.03]", r#", "resolution": 200"#), &[]);
    let read = |sub: &str| {
        let out = case.out().join(sub);
        let o = Command::new(env!("CARGO_BIN_EXE_optrec"))
            .args(["verify", "--config", case.cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--trials", "50"])
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(Path::new(&out).join("verify.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}
