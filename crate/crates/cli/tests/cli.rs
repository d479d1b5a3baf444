use std::path::Path;
use std::process::{Command, Output};

use hps_cli::output::{read_json, SolveJson, Table, TimestepJson};

fn hps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hps")).args(args).output().expect("spawn hps")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "hps failed ({:?}):\n{}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_writes_a_complete_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = hps(&["--problem", "poisson_green", "--boxes", "2", "--p", "6", "--out", arg(&out), "--write-nodes"]);
    ok(&o);
    let r: SolveJson = read_json(&out.join("report.json")).unwrap();
    assert_eq!(r.mode, "solve");
    assert_eq!(r.mesh.boxes_per_dim, vec![2, 2, 2]);
    assert!(r.rel_error.unwrap() <= 1e-5);
    assert!(r.residual < 1e-10);
    let t = &r.wall_times;
    for x in [t.dtn_assembly, t.t_assembly, t.factorize, t.interface_solve, t.interior_solve, t.load_reduction] {
        assert!(x.is_finite() && x >= 0.0);
    }
    let nodes = Table::read(&out.join("nodes.csv")).unwrap();
    assert_eq!(nodes.header, ["x1", "x2", "x3", "u"]);
    assert_eq!(nodes.rows.len(), r.mesh.n_total);
}

#[test]
fn unknown_problem_is_a_usage_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = hps(&["--problem", "no_such_problem", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_problem"));
}

#[test]
fn oracle_agrees_with_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let o = hps(&["--problem", "helmholtz_green", "--kappa", "8", "--p", "6", "--oracle", "--out", arg(dir.path())]);
    ok(&o);
    let r: SolveJson = read_json(&dir.path().join("report.json")).unwrap();
    assert!(r.oracle_rel_diff.unwrap() <= 1e-10);

    let o = hps(&["--mode", "oracle-check", "--problem", "gravity_helmholtz", "--p", "6", "--out", arg(dir.path())]);
    ok(&o);
    let o = hps(&["--mode", "oracle-check", "--boxes", "8", "--p", "8", "--out", arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn single_entry_sweep_has_no_order() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hps(&["--mode", "sweep", "--boxes", "2", "--p", "6", "--out", arg(dir.path())]));
    let t = Table::read(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!(t.f64_at(0, "rel_error").unwrap() <= 1e-5);
    assert_eq!(t.f64_at(0, "order"), None);
}

#[test]
fn sweep_orders_follow_from_the_errors() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hps(&["--mode", "sweep", "--boxes", "1,2,3", "--p", "8", "--out", arg(dir.path())]));
    let t = Table::read(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(t.rows.len(), 3);
    for r in 1..3 {
        let (e0, e1) = (t.f64_at(r - 1, "rel_error").unwrap(), t.f64_at(r, "rel_error").unwrap());
        let (h0, h1) = (t.f64_at(r - 1, "h").unwrap(), t.f64_at(r, "h").unwrap());
        assert!(e1 < e0);
        let order = t.f64_at(r, "order").unwrap();
        assert!((order - (e0 / e1).ln() / (h0 / h1).ln()).abs() < 1e-12);
    }
}

#[test]
fn plane_wave_p_refinement_converges_spectrally() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hps(&[
        "--mode", "sweep", "--problem", "helmholtz_green", "--dim", "2", "--kappa", "16",
        "--boxes", "2", "--p", "8,12,16,20,24", "--out", arg(dir.path()),
    ]));
    let t = Table::read(&dir.path().join("sweep.csv")).unwrap();
    let errs: Vec<f64> = (0..t.rows.len()).map(|r| t.f64_at(r, "rel_error").unwrap()).collect();
    let below = errs.iter().position(|&e| e < 1e-8).expect("p-refinement reaches 1e-8");
    assert!(errs[..=below].windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn refinement_lists_must_increase() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = hps(&["--mode", "sweep", "--boxes", "4,2", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "problem = helmholtz_green\nkappa = 4\np = 6\nboxes = 3\n").unwrap();
    ok(&hps(&["--config", arg(&cfg), "--boxes", "2", "--out", arg(dir.path())]));
    let r: SolveJson = read_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(r.problem.name, "helmholtz_green");
    assert_eq!(r.problem.kappa, 4.0);
    assert_eq!(r.mesh.boxes_per_dim, vec![2, 2, 2]);

    std::fs::write(&cfg, "p = 6\nworkers = many\n").unwrap();
    let o = hps(&["--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(":2:") && err.contains("workers"), "{err}");
}

#[test]
fn bench_reports_one_row_per_configuration() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hps(&["--mode", "bench", "--boxes", "1,2", "--p", "5,6", "--trials", "3", "--out", arg(dir.path())]));
    let t = Table::read(&dir.path().join("bench.csv")).unwrap();
    assert_eq!(t.rows.len(), 4);
    for r in 0..4 {
        assert!(t.f64_at(r, "factorize").unwrap() >= 0.0);
    }
}

#[test]
fn worker_count_does_not_change_the_answer() {
    let run = |workers: &str| {
        let dir = tempfile::tempdir().unwrap();
        ok(&hps(&["--p", "6", "--batch-size", "1", "--workers", workers, "--out", arg(dir.path())]));
        read_json::<SolveJson>(&dir.path().join("report.json")).unwrap()
    };
    assert_eq!(run("1").rel_error, run("3").rel_error);
}

#[test]
fn heat_steps_reuse_one_factorization() {
    let dir = tempfile::tempdir().unwrap();
    let o = hps(&[
        "--mode", "timestep", "--problem", "heat_manufactured", "--dim", "2", "--boxes", "2", "--p", "12",
        "--dt", "0.02", "--steps", "5", "--dt-halvings", "2", "--snapshot-stride", "5", "--out", arg(dir.path()),
    ]);
    ok(&o);
    let log: TimestepJson = read_json(&dir.path().join("timestep.json")).unwrap();
    assert_eq!(log.factorizations, 1);
    assert_eq!(log.step_times.len(), 5);
    assert_eq!(log.halvings.len(), 3);
    let order = log.temporal_order.unwrap();
    assert!((order - 2.0).abs() < 0.3, "{order}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("temporal order"));
    let snap = Table::read(&dir.path().join(&log.snapshots.last().unwrap().file)).unwrap();
    assert_eq!(snap.header.last().map(String::as_str), Some("u"));
}

#[test]
fn convection_rotates_the_upper_mass() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hps(&[
        "--mode", "timestep", "--problem", "convection_diffusion", "--boxes", "4", "--p", "8",
        "--dt", "0.1", "--steps", "20", "--snapshot-stride", "5", "--out", arg(dir.path()),
    ]));
    let log: TimestepJson = read_json(&dir.path().join("timestep.json")).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for s in log.snapshots.iter().filter(|s| s.step > 0) {
        let [x, y] = s.mass_center_upper.unwrap();
        let angle = y.atan2(x);
        assert!(angle > prev, "angle {angle} after {prev}");
        prev = angle;
    }
}
