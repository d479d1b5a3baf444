//! The five run modes.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use hps_core::problems::{
    crank_nicolson_run, interpolate_interior, mass_center, node_quadrature_weights, relative_l2_error,
    ParabolicProblem, Problem, ProblemSpec, TimeStepConfig,
};
use hps_core::sparse_backend::DEFAULT_ORACLE_CAP;
use hps_core::{
    build, build_discretization, dense_full_system_oracle, CornerMode, Discretization, DomainBox, InterfaceSystem,
    MeshConfig, PhaseTimes, SolveReport,
};

use crate::config::{Mode, Resolved, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{
    write_json, Cell, FactorInfo, HalvingRow, MeshInfo, ProblemInfo, ScheduleInfo, SnapshotInfo, SolveJson,
    Table, TimestepJson, SCHEMA_VERSION,
};

/// Oracle agreement required by `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

pub const PHASES: [&str; 6] = [
    "dtn_assembly",
    "t_assembly",
    "factorize",
    "interface_solve",
    "interior_solve",
    "load_reduction",
];

fn phase_values(t: &PhaseTimes) -> [f64; 6] {
    [
        t.dtn_assembly,
        t.t_assembly,
        t.factorize,
        t.interface_solve,
        t.interior_solve,
        t.load_reduction,
    ]
}

/// What a run printed and wrote.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Validates the configuration, then runs the selected mode. Nothing is
/// written when validation fails.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let resolved = cfg.validate()?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("hps-out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    match (&resolved.problem, cfg.mode) {
        (Problem::Elliptic(spec), Mode::Solve | Mode::OracleCheck) => run_solve(cfg, &resolved, spec, &out),
        (Problem::Elliptic(spec), Mode::Sweep) => run_sweep(cfg, &resolved, spec, &out),
        (Problem::Elliptic(spec), Mode::Bench) => run_bench(cfg, &resolved, spec, &out),
        (Problem::Parabolic(pp), Mode::Timestep) => run_timestep(cfg, &resolved, pp, &out),
        _ => unreachable!("validate pairs problems with modes"),
    }
}

fn problem_info(cfg: &RunConfig, name: &str, domain: &DomainBox) -> ProblemInfo {
    ProblemInfo {
        name: name.to_string(),
        kappa: cfg.kappa,
        amplitude: cfg.amplitude,
        frequency: cfg.frequency,
        dim: domain.dim(),
        domain_lo: domain.lo().to_vec(),
        domain_hi: domain.hi().to_vec(),
    }
}

fn mode_name(m: CornerMode) -> String {
    match m {
        CornerMode::DropCorners => "drop".into(),
        CornerMode::LegendreFaces => "legendre".into(),
    }
}

fn mesh_info(disc: &Discretization) -> MeshInfo {
    MeshInfo {
        boxes_per_dim: disc.mesh().boxes_per_dim.clone(),
        p: disc.p(),
        corner_mode: mode_name(disc.corner_mode()),
        leaves: disc.leaf_count(),
        n_interior: disc.n_interior(),
        n_interface: disc.n_interface(),
        n_dirichlet: disc.n_dirichlet(),
        n_total: disc.n_nodes(),
    }
}

fn schedule_info(sys: &InterfaceSystem) -> ScheduleInfo {
    let s = sys.schedule();
    ScheduleInfo {
        workers: s.workers,
        batch_size: s.batch_size,
        resident_limit: s.resident_limit,
        memory_budget: s.memory_budget,
        cache: format!("{:?}", s.cache).to_lowercase(),
        peak_bytes: sys.build_stats().peak_bytes,
    }
}

fn factor_info(sys: &InterfaceSystem) -> FactorInfo {
    let st = sys.factorization().stats();
    FactorInfo {
        ordering: format!("{:?}", st.ordering),
        nnz_factors: st.nnz_factors,
        fronts: st.fronts,
        max_front: st.max_front,
        delayed_pivots: st.delayed_pivots,
        min_pivot: st.min_pivot,
        growth: st.growth,
    }
}

fn discretize(domain: &DomainBox, boxes: &[usize], p: usize, mode: CornerMode) -> Result<Arc<Discretization>> {
    Ok(Arc::new(build_discretization(
        domain.clone(),
        MeshConfig::new(boxes.to_vec(), p, mode),
    )?))
}

struct Case {
    disc: Arc<Discretization>,
    sys: InterfaceSystem,
    report: SolveReport,
    rel_error: Option<f64>,
}

fn solve_case(cfg: &RunConfig, spec: &ProblemSpec, boxes: &[usize], p: usize, mode: CornerMode) -> Result<Case> {
    let disc = discretize(&spec.domain, boxes, p, mode)?;
    let sys = build(disc.clone(), spec.coeffs.clone(), &cfg.schedule())?;
    let report = sys.solve_problem(&*spec.f, &*spec.g)?;
    let rel_error = match spec.exact_at_nodes(&disc) {
        Some(e) => Some(relative_l2_error(&report.u, &e)?),
        None => None,
    };
    Ok(Case {
        disc,
        sys,
        report,
        rel_error,
    })
}

fn node_table(disc: &Discretization, u: &[f64]) -> Table {
    let d = disc.dim();
    let names: Vec<String> = (1..=d).map(|k| format!("x{k}")).chain(["u".to_string()]).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for (i, &v) in u.iter().enumerate() {
        let mut row: Vec<Cell> = disc.node(i).iter().map(|&x| Cell::Num(x)).collect();
        row.push(Cell::Num(v));
        t.push(row);
    }
    t
}

fn boxes_label(b: &[usize]) -> String {
    b.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

fn run_solve(cfg: &RunConfig, r: &Resolved, spec: &ProblemSpec, out: &Path) -> Result<RunSummary> {
    let (boxes, p) = (&r.boxes[0], cfg.p[0]);
    let case = solve_case(cfg, spec, boxes, p, r.corner_mode)?;
    let mut summary = RunSummary::default();
    let oracle_rel_diff = if cfg.oracle || cfg.mode == Mode::OracleCheck {
        let u_ref = dense_full_system_oracle(&case.disc, &spec.coeffs, &*spec.f, &*spec.g, DEFAULT_ORACLE_CAP)?;
        Some(relative_l2_error(&case.report.u, &u_ref)?)
    } else {
        None
    };
    let nodes_file = if cfg.write_nodes {
        let path = out.join("nodes.csv");
        node_table(&case.disc, &case.report.u).write(&path)?;
        summary.files.push(path);
        Some("nodes.csv".to_string())
    } else {
        None
    };
    let mode = if cfg.mode == Mode::OracleCheck { "oracle-check" } else { "solve" };
    let report = SolveJson {
        schema_version: SCHEMA_VERSION,
        mode: mode.into(),
        problem: problem_info(cfg, &spec.name, &spec.domain),
        mesh: mesh_info(&case.disc),
        schedule: schedule_info(&case.sys),
        wall_times: case.report.wall_times,
        residual: case.report.residual,
        rel_error: case.rel_error,
        oracle_rel_diff,
        factor: factor_info(&case.sys),
        nodes_file,
    };
    let path = out.join("report.json");
    write_json(&path, &report)?;
    summary.files.push(path);
    summary.lines.push(format!(
        "{} boxes {} p {}: {} unknowns, {} on the interface",
        spec.name,
        boxes_label(boxes),
        p,
        report.mesh.n_total,
        report.mesh.n_interface
    ));
    if let Some(e) = case.rel_error {
        summary.lines.push(format!("relative error {e:e}"));
    }
    if let Some(d) = oracle_rel_diff {
        summary.lines.push(format!("oracle relative difference {d:e}"));
        if cfg.mode == Mode::OracleCheck && !(d <= ORACLE_TOLERANCE) {
            return Err(CliError::CheckFailed(format!(
                "oracle relative difference {d:e} exceeds {ORACLE_TOLERANCE:e}"
            )));
        }
    }
    Ok(summary)
}

/// Largest leaf width, the mesh size used for observed orders.
fn mesh_size(domain: &DomainBox, boxes: &[usize]) -> f64 {
    domain
        .lo()
        .iter()
        .zip(domain.hi())
        .zip(boxes)
        .map(|((a, b), n)| (b - a) / *n as f64)
        .fold(0.0, f64::max)
}

pub const SWEEP_HEADER: [&str; 15] = [
    "p",
    "boxes",
    "h",
    "n_total",
    "n_interface",
    "rel_error",
    "order",
    "reference",
    "residual",
    "dtn_assembly",
    "t_assembly",
    "factorize",
    "interface_solve",
    "interior_solve",
    "load_reduction",
];

fn run_sweep(cfg: &RunConfig, r: &Resolved, spec: &ProblemSpec, out: &Path) -> Result<RunSummary> {
    let runs: Vec<(Vec<usize>, usize)> = if cfg.p.len() > 1 {
        cfg.p.iter().map(|&p| (r.boxes[0].clone(), p)).collect()
    } else {
        r.boxes.iter().map(|b| (b.clone(), cfg.p[0])).collect()
    };
    let p_mode = cfg.p.len() > 1;
    let mut cases = Vec::with_capacity(runs.len());
    for (boxes, p) in &runs {
        cases.push(solve_case(cfg, spec, boxes, *p, r.corner_mode)?);
    }
    // Without an exact solution, compare with the finest run at the interior
    // nodes of each coarser one.
    let self_convergence = spec.exact.is_none();
    let errors: Vec<Option<f64>> = if self_convergence {
        let fine = cases.last().expect("nonempty sweep");
        cases[..cases.len() - 1]
            .iter()
            .map(|c| {
                let n = c.disc.n_interior();
                let reference = (0..n)
                    .map(|i| interpolate_interior(&fine.disc, &fine.report.u, c.disc.node(i)))
                    .collect::<hps_core::Result<Vec<f64>>>()?;
                Ok(Some(relative_l2_error(&c.report.u[..n], &reference)?))
            })
            .chain(std::iter::once(Ok(None)))
            .collect::<Result<_>>()?
    } else {
        cases.iter().map(|c| c.rel_error).collect()
    };
    let mut table = Table::new(&SWEEP_HEADER);
    let mut summary = RunSummary::default();
    for (k, ((boxes, p), case)) in runs.iter().zip(&cases).enumerate() {
        let h = mesh_size(&spec.domain, boxes);
        let order = match (k.checked_sub(1).and_then(|j| errors[j]), errors[k]) {
            (Some(e0), Some(e1)) if e0 > 0.0 && e1 > 0.0 => Some(if p_mode {
                (e0 / e1).ln() / (*p - runs[k - 1].1) as f64
            } else {
                (e0 / e1).ln() / (mesh_size(&spec.domain, &runs[k - 1].0) / h).ln()
            }),
            _ => None,
        };
        let mut row = vec![
            Cell::Int(*p),
            Cell::Text(boxes_label(boxes)),
            Cell::Num(h),
            Cell::Int(case.disc.n_nodes()),
            Cell::Int(case.disc.n_interface()),
            errors[k].map_or(Cell::Empty, Cell::Num),
            order.map_or(Cell::Empty, Cell::Num),
            Cell::Text(if self_convergence { "finest" } else { "exact" }.into()),
            Cell::Num(case.report.residual),
        ];
        row.extend(phase_values(&case.report.wall_times).map(Cell::Num));
        table.push(row);
        summary.lines.push(format!(
            "p {p} boxes {}: error {} order {}",
            boxes_label(boxes),
            errors[k].map_or("-".into(), |e| format!("{e:.3e}")),
            order.map_or("-".into(), |o| format!("{o:.2}"))
        ));
    }
    let path = out.join("sweep.csv");
    table.write(&path)?;
    summary.files.push(path);
    Ok(summary)
}

pub const BENCH_HEADER: [&str; 11] = [
    "boxes",
    "p",
    "n_total",
    "n_interface",
    "trials",
    "dtn_assembly",
    "t_assembly",
    "factorize",
    "interface_solve",
    "interior_solve",
    "load_reduction",
];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn run_bench(cfg: &RunConfig, r: &Resolved, spec: &ProblemSpec, out: &Path) -> Result<RunSummary> {
    let mut table = Table::new(&BENCH_HEADER);
    let mut summary = RunSummary::default();
    for boxes in &r.boxes {
        for &p in &cfg.p {
            let mut samples: Vec<[f64; 6]> = Vec::with_capacity(cfg.trials);
            let mut sizes = (0, 0);
            for _ in 0..cfg.trials {
                let case = solve_case(cfg, spec, boxes, p, r.corner_mode)?;
                sizes = (case.disc.n_nodes(), case.disc.n_interface());
                samples.push(phase_values(&case.report.wall_times));
            }
            let med: Vec<f64> = (0..6).map(|j| median(samples.iter().map(|s| s[j]).collect())).collect();
            let mut row = vec![
                Cell::Text(boxes_label(boxes)),
                Cell::Int(p),
                Cell::Int(sizes.0),
                Cell::Int(sizes.1),
                Cell::Int(cfg.trials),
            ];
            row.extend(med.iter().map(|&t| Cell::Num(t)));
            table.push(row);
            summary.lines.push(format!(
                "boxes {} p {p}: median factorize {:.4}s, dtn assembly {:.4}s over {} trials",
                boxes_label(boxes),
                med[2],
                med[0],
                cfg.trials
            ));
        }
    }
    let path = out.join("bench.csv");
    table.write(&path)?;
    summary.files.push(path);
    Ok(summary)
}

fn final_error(disc: &Discretization, pp: &ParabolicProblem, u: &[f64], t: f64) -> Result<Option<f64>> {
    match &pp.exact {
        Some(e) => {
            let ex: Vec<f64> = (0..disc.n_nodes()).map(|i| e(disc.node(i), t)).collect();
            Ok(Some(relative_l2_error(u, &ex)?))
        }
        None => Ok(None),
    }
}

fn run_timestep(cfg: &RunConfig, r: &Resolved, pp: &ParabolicProblem, out: &Path) -> Result<RunSummary> {
    let disc = discretize(&pp.domain, &r.boxes[0], cfg.p[0], r.corner_mode)?;
    let schedule = cfg.schedule();
    let tcfg = TimeStepConfig {
        dt: cfg.dt,
        t_end: cfg.dt * cfg.steps as f64,
        snapshot_stride: cfg.snapshot_stride,
    };
    let traj = crank_nicolson_run(disc.clone(), pp, &tcfg, &schedule)?;
    let mut summary = RunSummary::default();

    let snap_dir = out.join("snapshots");
    std::fs::create_dir_all(&snap_dir).map_err(|e| CliError::io(&snap_dir, e))?;
    let weights = match disc.corner_mode() {
        CornerMode::DropCorners => Some(node_quadrature_weights(&disc)?),
        CornerMode::LegendreFaces => None,
    };
    let d = disc.dim();
    let mid = 0.5 * (pp.domain.lo()[d - 1] + pp.domain.hi()[d - 1]);
    let mut snapshots = Vec::with_capacity(traj.snapshots.len());
    for (time, u) in &traj.snapshots {
        let step = (time / cfg.dt).round() as usize;
        let name = format!("step_{step:06}.csv");
        let path = snap_dir.join(&name);
        node_table(&disc, u).write(&path)?;
        summary.files.push(path);
        let center = |region: &dyn Fn(&[f64]) -> bool| {
            weights.as_ref().map(|w| {
                let (x, y) = mass_center(&disc, u, w, region);
                [x, y]
            })
        };
        snapshots.push(SnapshotInfo {
            step,
            time: *time,
            file: format!("snapshots/{name}"),
            mass_center: center(&|_| true),
            mass_center_upper: if d == 3 { center(&|x| x[d - 1] > mid) } else { None },
        });
    }

    let final_rel_error = final_error(&disc, pp, &traj.final_state, traj.final_time)?;
    let mut halvings = Vec::new();
    if cfg.dt_halvings > 0 && pp.exact.is_some() {
        for k in 0..=cfg.dt_halvings {
            let scale = 1usize << k;
            let c = TimeStepConfig {
                dt: cfg.dt / scale as f64,
                t_end: tcfg.t_end,
                snapshot_stride: 0,
            };
            let (dt, steps) = (c.dt, c.steps());
            let rel_error = if k == 0 {
                final_rel_error.expect("exact solution known")
            } else {
                let t = crank_nicolson_run(disc.clone(), pp, &c, &schedule)?;
                final_error(&disc, pp, &t.final_state, t.final_time)?.expect("exact solution known")
            };
            let order = halvings.last().map(|prev: &HalvingRow| (prev.rel_error / rel_error).log2());
            halvings.push(HalvingRow {
                dt,
                steps,
                rel_error,
                order,
            });
        }
    }
    let temporal_order = halvings.last().and_then(|h| h.order);

    let log = TimestepJson {
        schema_version: SCHEMA_VERSION,
        mode: "timestep".into(),
        problem: problem_info(cfg, &pp.name, &pp.domain),
        mesh: mesh_info(&disc),
        dt: cfg.dt,
        steps: traj.step_times.len(),
        final_time: traj.final_time,
        factorizations: traj.factorizations,
        step_times: traj.step_times.clone(),
        snapshots,
        final_rel_error,
        halvings,
        temporal_order,
    };
    let path = out.join("timestep.json");
    write_json(&path, &log)?;
    summary.files.push(path);
    summary.lines.push(format!(
        "{}: {} steps of {} to t = {}, {} factorization(s)",
        pp.name, log.steps, cfg.dt, log.final_time, log.factorizations
    ));
    if let Some(e) = final_rel_error {
        summary.lines.push(format!("final relative error {e:e}"));
    }
    for h in &log.halvings {
        if let Some(o) = h.order {
            summary.lines.push(format!("dt {} error {:e} order {o:.3}", h.dt, h.rel_error));
        }
    }
    if let Some(o) = temporal_order {
        summary.lines.push(format!("temporal order {o:.3}"));
    }
    Ok(summary)
}
