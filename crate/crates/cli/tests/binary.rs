use std::path::Path;
use std::process::Command;

use randla::io::read_vector_file;

fn randla(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_randla")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &std::process::Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_then_solve_least_squares() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&randla(&["gen", "--profile", "gaussian", "--m", "256", "--n", "8", "--seed", "3", "--out", "a.mtx"], d));
    let rhs: String = (0..256).map(|i| format!("{}\n", (i as f64 * 0.37).sin())).collect();
    std::fs::write(d.join("b.txt"), rhs).unwrap();
    ok(&randla(&["solve", "--matrix", "a.mtx", "--rhs", "b.txt", "--method", "exact", "--out", "x_exact.txt"], d));
    for method in ["precond", "lsqr"] {
        let out = randla(&["solve", "--matrix", "a.mtx", "--rhs", "b.txt", "--method", method, "--out", "x.txt"], d);
        ok(&out);
        let x: Vec<f64> = read_vector_file(d.join("x.txt")).unwrap();
        let x0: Vec<f64> = read_vector_file(d.join("x_exact.txt")).unwrap();
        let gap = x.iter().zip(&x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-6, "{method}: {gap}");
    }
    let out = randla(&["solve", "--matrix", "a.mtx", "--rhs", "b.txt", "--method", "srht", "--seed", "1"], d);
    ok(&out);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 8);
    assert!(!randla(&["solve", "--matrix", "a.mtx", "--rhs", "b.txt", "--method", "magic"], d).status.success());
}

#[test]
fn gen_then_solve_laplacian() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&randla(&["gen", "--profile", "graph_random", "--n", "30", "--seed", "2", "--out", "g.txt"], d));
    let rhs: String = (0..30).map(|i| format!("{}\n", if i == 0 { 1.0 } else if i == 29 { -1.0 } else { 0.0 })).collect();
    std::fs::write(d.join("b.txt"), rhs).unwrap();
    for method in ["direct_on_sketch", "preconditioned_cg"] {
        ok(&randla(&["solve", "--matrix", "g.txt", "--rhs", "b.txt", "--method", method, "--out", "x.txt"], d));
        assert_eq!(read_vector_file::<f64>(d.join("x.txt")).unwrap().len(), 30);
    }
}

#[test]
fn experiment_subcommand_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.toml"), "m = 120\nn = 8\nk = 3\n").unwrap();
    let args = ["cx", "--config", "cfg.toml", "--seed", "4", "--trials", "5", "--out", "res"];
    ok(&randla(&args, d));
    let json = std::fs::read_to_string(d.join("res/cx.json")).unwrap();
    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    ok(&randla(&csv_args, d));
    assert_eq!(std::fs::read_to_string(d.join("res/cx.csv")).unwrap().lines().count(), 6);
    ok(&randla(&["verify", "res/cx.json"], d));

    let serial = Command::new(env!("CARGO_BIN_EXE_randla")).args(args).current_dir(d).env("RANDLA_THREADS", "1").output().unwrap();
    ok(&serial);
    let again = std::fs::read_to_string(d.join("res/cx.json")).unwrap();
    let strip = |s: &str| {
        let mut r = randla_cli::ExperimentReport::from_json(s).unwrap().without_timing();
        r.config.output = None;
        r.to_json().unwrap()
    };
    assert_eq!(strip(&json), strip(&again));

    std::fs::write(d.join("wrong.toml"), "experiment = \"jl\"\n").unwrap();
    assert!(!randla(&["cx", "--config", "wrong.toml", "--out", "res"], d).status.success());
    assert!(!randla(&["not_an_experiment"], d).status.success());
}
