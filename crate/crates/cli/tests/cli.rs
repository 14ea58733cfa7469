//! End-to-end runs of the `stochstab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

struct Run {
    out: Output,
    dir: PathBuf,
}

impl Run {
    fn code(&self) -> i32 {
        self.out.status.code().expect("exited normally")
    }
    fn stdout(&self) -> String {
        String::from_utf8_lossy(&self.out.stdout).into_owned()
    }
    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.out.stderr).into_owned()
    }
    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }
    fn manifest(&self) -> serde_json::Value {
        serde_json::from_str(&self.read("manifest.json")).unwrap()
    }
}

fn stochstab(tmp: &Path, name: &str, cmd: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = tmp.join(format!("{name}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let dir = tmp.join(name);
    let out = Command::new(env!("CARGO_BIN_EXE_stochstab"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .args(extra)
        .output()
        .unwrap();
    Run { out, dir }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn parse(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn equilibria_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let kt = stochstab(tmp.path(), "kt", "equilibria", "", &[]);
    assert_eq!(kt.code(), 0, "{}", kt.stderr());
    let csv = kt.read("equilibria.csv");
    assert!(csv.starts_with("label,x,y,residual,eig_re1,eig_re2\n"));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "P1");
    assert!((parse(&rows[0][1]) - 0.315185).abs() < 1e-6);
    assert_eq!(parse(&rows[0][2]), 0.0);
    assert!((parse(&rows[1][1]) - 1.5535).abs() < 1e-4);
    assert!((parse(&rows[1][2]) - 25.22).abs() < 1e-2);
    for r in &rows {
        assert!(parse(&r[3]) <= 1e-9);
    }

    let bell = stochstab(tmp.path(), "bell", "equilibria", "model = \"bell\"", &[]);
    let rows = csv_rows(&bell.read("equilibria.csv"));
    assert!((parse(&rows[0][2]) - 2.105263).abs() < 1e-6);
    assert!((parse(&rows[1][1]) - 0.178571).abs() < 1e-6);
    assert!((parse(&rows[1][2]) - 2.5).abs() < 1e-12);
}

#[test]
fn missing_equilibrium_is_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let run = stochstab(tmp.path(), "a3", "equilibria", "[params]\na3 = 0.0\n", &[]);
    assert_eq!(run.code(), 0);
    assert!(run.stderr().contains("P2 absent"), "{}", run.stderr());
    assert_eq!(csv_rows(&run.read("equilibria.csv")).len(), 1);
    assert_eq!(run.manifest()["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn degenerate_bell_parameters_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "model = \"bell\"\n[params]\na1 = 2.5\nb1 = 0.4\na2 = 1.0\nb2 = 1.0\n";
    let run = stochstab(tmp.path(), "deg", "equilibria", cfg, &[]);
    assert_eq!(run.code(), 2, "{}", run.stderr());
}

#[test]
fn simulate_contract_and_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "[noise]\nslopes = [[10.0, -2.0], [2.0, 10.0]]\n[sim]\nsteps = 400\n";
    let a = stochstab(tmp.path(), "a", "simulate", cfg, &["--seed", "42"]);
    assert_eq!(a.code(), 0, "{}", a.stderr());
    for f in [
        "traj.csv",
        "x_vs_n.svg",
        "y_vs_n.svg",
        "phase.svg",
        "manifest.json",
    ] {
        assert!(a.dir.join(f).exists(), "{f}");
    }
    let traj = a.read("traj.csv");
    assert_eq!(csv_rows(&traj).len(), 401);

    let b = stochstab(tmp.path(), "b", "simulate", cfg, &["--seed", "42"]);
    assert_eq!(traj, b.read("traj.csv"));
    let c = stochstab(tmp.path(), "c", "simulate", cfg, &["--seed", "43"]);
    assert_ne!(traj, c.read("traj.csv"));
}

#[test]
fn manifest_digests_and_echo_reproduce_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "model = \"bell\"\nequilibrium = \"P2\"\n[noise]\nalpha = 0.5\n[sim]\nsteps = 300\nscheme = \"euler2-cross\"\n";
    let first = stochstab(tmp.path(), "first", "simulate", cfg, &["--seed", "9"]);
    assert_eq!(first.code(), 0);
    let m = first.manifest();
    assert_eq!(m["seeds"], serde_json::json!([9]));
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 4);
    for f in files {
        let bytes = std::fs::read(first.dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(
            f["sha256"].as_str().unwrap(),
            hex::encode(Sha256::digest(&bytes))
        );
    }
    // the echo alone, into another directory
    let echo = m["config"].as_str().unwrap();
    let second = stochstab(tmp.path(), "second", "simulate", echo, &[]);
    assert_eq!(second.code(), 0, "{}", second.stderr());
    assert_eq!(first.read("traj.csv"), second.read("traj.csv"));
    assert_eq!(
        second.manifest()["config"]
            .as_str()
            .unwrap()
            .replace("second", "first"),
        echo
    );
}

#[test]
fn zero_noise_follows_the_eigenvalues() {
    // P2 of the default model is a stable focus-node: the ODE approaches it
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "equilibrium = \"P2\"\n[noise]\nslopes = [[0.0, 0.0], [0.0, 0.0]]\n[sim]\nsteps = 20000\noffset = [0.05, 0.5]\n";
    let run = stochstab(tmp.path(), "ode", "simulate", cfg, &[]);
    assert_eq!(run.code(), 0);
    let rows = csv_rows(&run.read("traj.csv"));
    let dist = |r: &Vec<String>| {
        ((parse(&r[2]) - 1.5534604346698473).powi(2) + (parse(&r[3]) - 25.226028523885279).powi(2))
            .sqrt()
    };
    assert!(dist(rows.last().unwrap()) < 1e-3 * dist(&rows[0]));
    // P1 is a saddle: the ODE leaves it
    let run = stochstab(
        tmp.path(),
        "ode1",
        "simulate",
        "[sim]\ndeterministic = true\nsteps = 2000\n",
        &[],
    );
    let rows = csv_rows(&run.read("traj.csv"));
    assert!(parse(&rows.last().unwrap()[3]) > 10.0 * parse(&rows[0][3]));
}

#[test]
fn blow_up_truncates_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "[noise]\nslopes = [[300.0, 0.0], [0.0, 300.0]]\n[sim]\nh = 0.1\nsteps = 2000\n";
    let run = stochstab(tmp.path(), "bu", "simulate", cfg, &[]);
    assert_eq!(run.code(), 0);
    assert!(run.stderr().contains("finite range"));
    let m = run.manifest();
    assert_eq!(m["truncated"], true);
    let rows = csv_rows(&run.read("traj.csv"));
    assert!(rows.len() < 2001);
    assert!(rows
        .iter()
        .all(|r| r[2..].iter().all(|v| parse(v).is_finite())));
}

#[test]
fn svg_is_xml_and_plots_only_csv_data() {
    let tmp = tempfile::tempdir().unwrap();
    let run = stochstab(tmp.path(), "svg", "simulate", "[sim]\nsteps = 50\n", &[]);
    let rows = csv_rows(&run.read("traj.csv"));
    for f in ["x_vs_n.svg", "y_vs_n.svg", "phase.svg"] {
        let text = run.read(f);
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{f}: {e}"));
        let lines: Vec<_> = doc
            .descendants()
            .filter(|n| n.has_tag_name("polyline"))
            .collect();
        assert_eq!(lines.len(), 1);
        let points = lines[0].attribute("points").unwrap().split(' ').count();
        assert_eq!(points, rows.len(), "{f}");
    }
    let sweep = stochstab(
        tmp.path(),
        "sw",
        "sweep",
        "model = \"bell\"\n[sweep]\nstep = 0.5\n",
        &[],
    );
    let text = sweep.read("lambda_vs_alpha.svg");
    let doc = roxmltree::Document::parse(&text).unwrap();
    let poly = doc
        .descendants()
        .find(|n| n.has_tag_name("polyline"))
        .unwrap();
    assert_eq!(
        poly.attribute("points").unwrap().split(' ').count(),
        csv_rows(&sweep.read("sweep.csv")).len()
    );
}

#[test]
fn lyapunov_methods_agree_on_bell_p1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "model = \"bell\"\n[noise]\nalpha = 3.0\nbeta = -2.0\n\
               [lyapunov]\nmethods = [\"closed_form\", \"grid\", \"monte_carlo\"]\npaths = 300\nhorizon = 20.0\nh = 0.005\n";
    let run = stochstab(tmp.path(), "ly", "lyapunov", cfg, &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = csv_rows(&run.read("lyapunov.csv"));
    let methods: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods, ["closed_form", "grid", "monte_carlo"]);
    for r in &rows {
        assert!(parse(&r[1]) < 0.0, "{r:?}");
    }
    let density = csv_rows(&run.read("density.csv"));
    // closed periodic grid: both endpoints
    assert_eq!(density.len(), 2001);
    assert!(density.iter().all(|r| parse(&r[1]) >= 0.0));
    assert!(run.stdout().contains("lambda[grid]"));
}

#[test]
fn lyapunov_special_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let zero = stochstab(
        tmp.path(),
        "zero",
        "lyapunov",
        "[noise]\nslopes = [[0.0, 0.0], [0.0, 0.0]]\n",
        &[],
    );
    assert_eq!(zero.code(), 0);
    let rows = csv_rows(&zero.read("lyapunov.csv"));
    assert_eq!(rows[0][0], "deterministic_eig");
    assert!((parse(&rows[0][1]) - 1.3208145182812916).abs() < 1e-12);

    // B = I/2: the angle does not diffuse, so the density path falls back
    let cfg = "[noise]\nslopes = [[0.5, 0.0], [0.0, 0.5]]\n[lyapunov]\nmethods = [\"closed_form\"]\npaths = 100\nhorizon = 10.0\nh = 0.01\n";
    let degen = stochstab(tmp.path(), "degen", "lyapunov", cfg, &[]);
    assert_eq!(degen.code(), 0, "{}", degen.stderr());
    assert!(degen.stdout().contains("lambda[monte_carlo]"));
    assert!(degen.stdout().contains("fallback"));
    assert!(!degen.dir.join("density.csv").exists());

    let two = stochstab(
        tmp.path(),
        "two",
        "lyapunov",
        "[noise]\nsigma = [0.1, 0.1]\n[lyapunov]\nmethods = [\"grid\"]\n",
        &[],
    );
    assert_eq!(two.code(), 2);
}

#[test]
fn sweep_reports_crossings() {
    let tmp = tempfile::tempdir().unwrap();
    let run = stochstab(tmp.path(), "sw", "sweep", "model = \"bell\"\n", &[]);
    assert_eq!(run.code(), 0);
    let rows = csv_rows(&run.read("sweep.csv"));
    assert_eq!(rows.len(), 161);
    assert_eq!(rows[0][0], "-4.000000");
    assert!(
        run.stdout().contains("sign changes at alpha = [-1.9"),
        "{}",
        run.stdout()
    );
}

#[test]
fn stability_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "model = \"bell\"\n[noise]\nsigma = [0.1, 0.1]\n[lyapunov]\npaths = 200\nhorizon = 20.0\nh = 0.01\n";
    let run = stochstab(tmp.path(), "bd", "stability", cfg, &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let text = run.read("stability.txt");
    let p2 = text.split("[P2]").nth(1).unwrap();
    assert!(p2.contains("cannot hold"));
    assert!(p2.contains("bell_q1_closed = -1.176000e-1"));
    assert!(!p2.contains("kind = mean_square_stable"));

    let run = stochstab(
        tmp.path(),
        "a0",
        "stability",
        "model = \"bell\"\n[noise]\nalpha = 0.0\n",
        &[],
    );
    let text = run.read("stability.txt");
    let p1 = text.split("[P2]").next().unwrap();
    assert!(p1.contains("kind = unstable"), "{text}");
}

#[test]
fn input_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, cfg) in [
        "model = \"nope\"",
        "[noise]\nalpha = 1.0\nslopes = [[1.0, 0.0], [0.0, 1.0]]",
        "[sim]\nunknown = 3",
        "[sim]\nh = -1.0",
        "[params]\na2 = -1.0",
        "[params]\nzz = 1.0",
    ]
    .iter()
    .enumerate()
    {
        let run = stochstab(tmp.path(), &format!("bad{i}"), "equilibria", cfg, &[]);
        assert_eq!(run.code(), 2, "{cfg}: {}", run.stderr());
        assert!(run.stderr().starts_with("error: "));
    }
    // output location is a regular file
    std::fs::write(tmp.path().join("blocker"), "").unwrap();
    let run = stochstab(tmp.path(), "blocker", "equilibria", "", &[]);
    assert_eq!(run.code(), 2);
}
