use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
sources = 2
aoi_bound = 3
mu = 0.5, 0.6
p1 = 0.7
p2 = 0.8
budget = 1.0
seed = 3
sim.horizon = 2000
sim.replications = 2
";

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_aoi-relay"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn validate_kernel_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), SMALL, &["validate-kernel", "--trials", "400", "--pairs", "20", "--policies", "5", "--export"]);
    assert_ok(&out);
    let report = read(dir.path(), "kernel_validation.csv");
    assert!(report.starts_with("check,value,threshold,status"));
    assert!(!report.contains(",fail"));
    assert!(read(dir.path(), "kernel.csv").lines().count() > 400);
}

#[test]
fn solve_then_simulate_the_saved_table() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run(dir.path(), SMALL, &["solve"]));
    let metrics = read(dir.path(), "solve_metrics.csv");
    assert_eq!(metrics.lines().count(), 3);
    assert!(read(dir.path(), "bisection_trace.csv").lines().count() > 2);

    let policy = dir.path().join("policy_lambda_plus.csv");
    let cfg = format!("{SMALL}sim.policy = cmdp\nsim.policy_file = {}\n", policy.display());
    assert_ok(&run(dir.path(), &cfg, &["simulate"]));
    assert_eq!(read(dir.path(), "simulate_cmdp.csv").lines().count(), 3);
    assert!(read(dir.path(), "series_cmdp.csv").lines().count() > 1);

    // The table was written for bound 3 and must be refused for bound 4.
    let other = cfg.replace("aoi_bound = 3", "aoi_bound = 4");
    let out = run(dir.path(), &other, &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn structure_reports_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run(dir.path(), SMALL, &["structure", "--lambda", "0.5,2"]));
    assert!(read(dir.path(), "structure_report.csv").lines().count() >= 3);
    assert!(dir.path().join("structure_0.5.csv").exists());
}

#[test]
fn simulate_dpp_unbounded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}sim.policy = dpp\n");
    let out = run(dir.path(), &cfg, &["simulate", "--unbounded"]);
    assert_ok(&out);
    let rows = read(dir.path(), "simulate_dpp.csv");
    assert_eq!(rows.lines().count(), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("WS-AAoI"));
}

#[test]
fn train_writes_log_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{SMALL}drl.episodes = 3\ndrl.steps_per_episode = 200\ndrl.min_fill = 64\ndrl.batch_size = 16\ndrl.hidden = 8, 8\n"
    );
    assert_ok(&run(dir.path(), &cfg, &["train"]));
    assert_eq!(read(dir.path(), "training_log.csv").lines().count(), 4);
    let ckpt = dir.path().join("qnetwork.ckpt");
    assert!(ckpt.exists());

    let sim = format!("{cfg}sim.policy = drl\nsim.checkpoint = {}\n", ckpt.display());
    assert_ok(&run(dir.path(), &sim, &["simulate"]));
    assert!(dir.path().join("simulate_drl.csv").exists());
}

#[test]
fn compare_runs_a_small_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{SMALL}experiment.name = tiny\nexperiment.sweep = budget\nexperiment.grid = 0.6, 1.2\nexperiment.policies = cmdp, dpp, greedy\nexperiment.table_bound = 3\nexperiment.horizon = 2000\nexperiment.replications = 2\n"
    );
    assert_ok(&run(dir.path(), &cfg, &["compare"]));
    let table = read(dir.path(), "tiny.csv");
    assert!(table.starts_with("sweep_value,policy,mean,ci_low,ci_high"));
    assert_eq!(table.lines().count(), 7);
}

#[test]
fn complexity_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_aoi-relay"))
        .args(["--out"])
        .arg(dir.path())
        .args(["complexity", "--bounds", "2,3", "--sweeps", "3"])
        .output()
        .unwrap();
    assert_ok(&out);
    assert_eq!(read(dir.path(), "complexity.csv").lines().count(), 3);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &format!("{SMALL}colour = blue\n"), &["solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let out = run(dir.path(), &SMALL.replace("p1 = 0.7", "p1 = 1.7"), &["solve"]);
    assert_eq!(out.status.code(), Some(2));
}
