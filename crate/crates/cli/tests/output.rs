use hps_cli::output::{
    fmt_f64, read_json, write_json, Cell, FactorInfo, HalvingRow, MeshInfo, ProblemInfo, ScheduleInfo, SnapshotInfo,
    SolveJson, Table, TimestepJson, SCHEMA_VERSION,
};
use hps_core::PhaseTimes;

fn problem() -> ProblemInfo {
    ProblemInfo {
        name: "poisson_green".into(),
        kappa: 16.0,
        amplitude: 0.25,
        frequency: 6.0,
        dim: 3,
        domain_lo: vec![-1.1, 1.0, 1.2],
        domain_hi: vec![0.1, 2.0, 2.2],
    }
}

fn mesh() -> MeshInfo {
    MeshInfo {
        boxes_per_dim: vec![2, 2, 2],
        p: 6,
        corner_mode: "drop".into(),
        leaves: 8,
        n_interior: 512,
        n_interface: 192,
        n_dirichlet: 384,
        n_total: 1088,
    }
}

fn times() -> PhaseTimes {
    PhaseTimes {
        dtn_assembly: 0.1,
        t_assembly: 1e-7,
        factorize: 0.30000000000000004,
        interface_solve: 5e-324,
        interior_solve: 1.7976931348623157e308,
        load_reduction: 0.0,
    }
}

fn solve_json() -> SolveJson {
    SolveJson {
        schema_version: SCHEMA_VERSION,
        mode: "solve".into(),
        problem: problem(),
        mesh: mesh(),
        schedule: ScheduleInfo {
            workers: 1,
            batch_size: 8,
            resident_limit: 64,
            memory_budget: 1 << 31,
            cache: "discard".into(),
            peak_bytes: 12345,
        },
        wall_times: times(),
        residual: 7.7e-16,
        rel_error: Some(7.98349639712285e-8),
        oracle_rel_diff: None,
        factor: FactorInfo {
            ordering: "MinimumDegree".into(),
            nnz_factors: 23552,
            fronts: 7,
            max_front: 96,
            delayed_pivots: 0,
            min_pivot: 26.101409457818793,
            growth: 0.999885653355942,
        },
        nodes_file: Some("nodes.csv".into()),
    }
}

#[test]
fn solve_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let r = solve_json();
    write_json(&path, &r).unwrap();
    let back: SolveJson = read_json(&path).unwrap();
    assert_eq!(back, r);
}

#[test]
fn report_keys_are_stable_and_versioned() {
    let text = serde_json::to_string_pretty(&solve_json()).unwrap();
    assert_eq!(text, serde_json::to_string_pretty(&solve_json()).unwrap());
    let keys = [
        "\"schema_version\"",
        "\"mode\"",
        "\"problem\"",
        "\"mesh\"",
        "\"schedule\"",
        "\"wall_times\"",
        "\"residual\"",
        "\"rel_error\"",
        "\"oracle_rel_diff\"",
        "\"factor\"",
        "\"nodes_file\"",
    ];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
    for phase in ["dtn_assembly", "t_assembly", "factorize", "interface_solve", "interior_solve", "load_reduction"] {
        assert!(text.contains(phase));
    }
    assert!(text.contains("\"oracle_rel_diff\": null"));
}

#[test]
fn timestep_log_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let log = TimestepJson {
        schema_version: SCHEMA_VERSION,
        mode: "timestep".into(),
        problem: problem(),
        mesh: mesh(),
        dt: 0.1,
        steps: 2,
        final_time: 0.2,
        factorizations: 1,
        step_times: vec![times(), PhaseTimes::default()],
        snapshots: vec![SnapshotInfo {
            step: 2,
            time: 0.2,
            file: "snapshots/step_000002.csv".into(),
            mass_center: Some([0.1, -0.3]),
            mass_center_upper: None,
        }],
        final_rel_error: None,
        halvings: vec![HalvingRow {
            dt: 0.05,
            steps: 4,
            rel_error: 1e-3,
            order: Some(2.0000000000000004),
        }],
        temporal_order: Some(2.0000000000000004),
    };
    write_json(&path, &log).unwrap();
    assert_eq!(read_json::<TimestepJson>(&path).unwrap(), log);
}

#[test]
fn shortest_decimals_round_trip_exactly() {
    let values = [
        0.1,
        1.0 / 3.0,
        -2.5e-300,
        5e-324,
        f64::MAX,
        1e21,
        123456789.0,
        -0.0,
        0.30000000000000004,
    ];
    for v in values {
        let s = fmt_f64(v);
        let back: f64 = s.parse().unwrap();
        assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
    }
    assert_eq!(fmt_f64(0.1), "0.1");
    assert_eq!(fmt_f64(1e-10), "1e-10");
}

#[test]
fn tables_round_trip_with_empty_cells() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut t = Table::new(&["p", "boxes", "rel_error", "order"]);
    t.push(vec![Cell::Int(6), Cell::Text("2x2x2".into()), Cell::Num(7.98349639712285e-8), Cell::Empty]);
    t.push(vec![Cell::Int(8), Cell::Text("4x4x4".into()), Cell::Num(1.0 / 3.0), Cell::Num(5.5)]);
    t.write(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("p,boxes,rel_error,order\n6,2x2x2,7.98349639712285e-8,\n"), "{text}");
    let back = Table::read(&path).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.f64_at(0, "order"), None);
    assert_eq!(back.f64_at(1, "rel_error"), Some(1.0 / 3.0));
    assert_eq!(back.f64_at(0, "missing"), None);
}

#[test]
fn malformed_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let e = read_json::<SolveJson>(&path).unwrap_err();
    assert_eq!(e.exit_code(), 4);
    assert!(read_json::<SolveJson>(&dir.path().join("absent.json")).is_err());
}
