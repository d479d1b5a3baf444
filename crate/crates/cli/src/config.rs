//! Run configuration: a flat `key = value` file with flag overrides.

use std::path::{Path, PathBuf};

use hps_core::problems::{problem_by_name, Problem, ProblemParams};
use hps_core::{BatchSchedule, CachePolicy, CornerMode, DomainBox};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Sweep,
    Bench,
    Timestep,
    OracleCheck,
}

impl Mode {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "solve" => Ok(Self::Solve),
            "sweep" => Ok(Self::Sweep),
            "bench" => Ok(Self::Bench),
            "timestep" => Ok(Self::Timestep),
            "oracle-check" => Ok(Self::OracleCheck),
            _ => Err(format!("unknown mode '{s}' (solve, sweep, bench, timestep, oracle-check)")),
        }
    }
}

/// Leaf counts as written by the user: one number for a uniform mesh or
/// `AxBxC` per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoxesSpec {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

impl BoxesSpec {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split('x').map(str::trim).collect();
        let nums = parts
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| format!("'{s}' is not a box count")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if nums.contains(&0) {
            return Err(format!("'{s}': box counts must be positive"));
        }
        Ok(if nums.len() == 1 {
            Self::Uniform(nums[0])
        } else {
            Self::PerAxis(nums)
        })
    }

    fn resolve(&self, d: usize) -> std::result::Result<Vec<usize>, String> {
        match self {
            Self::Uniform(n) => Ok(vec![*n; d]),
            Self::PerAxis(v) if v.len() == d => Ok(v.clone()),
            Self::PerAxis(v) => Err(format!("{} box counts given for a {d}-dimensional problem", v.len())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub kappa: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub dim: usize,
    pub domain_lo: Option<Vec<f64>>,
    pub domain_hi: Option<Vec<f64>>,
    pub boxes: Vec<BoxesSpec>,
    pub p: Vec<usize>,
    /// `None` picks the mode required by the operator.
    pub corner_mode: Option<CornerMode>,
    pub workers: usize,
    pub batch_size: usize,
    pub resident_limit: usize,
    pub memory_budget: usize,
    pub cache: CachePolicy,
    pub mode: Mode,
    pub out: Option<PathBuf>,
    pub oracle: bool,
    pub write_nodes: bool,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
    pub dt_halvings: usize,
    pub trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sched = BatchSchedule::default();
        Self {
            problem: "poisson_green".into(),
            kappa: 16.0,
            amplitude: 0.25,
            frequency: 6.0,
            dim: 3,
            domain_lo: None,
            domain_hi: None,
            boxes: vec![BoxesSpec::Uniform(2)],
            p: vec![6],
            corner_mode: None,
            workers: sched.workers,
            batch_size: sched.batch_size,
            resident_limit: sched.resident_limit,
            memory_budget: sched.memory_budget,
            cache: sched.cache,
            mode: Mode::Solve,
            out: None,
            oracle: false,
            write_nodes: false,
            dt: 0.01,
            steps: 10,
            snapshot_stride: 0,
            dt_halvings: 0,
            trials: 3,
        }
    }
}

/// Keys accepted in configuration files and as `--key` flags.
pub const KEYS: [&str; 25] = [
    "problem",
    "kappa",
    "amplitude",
    "frequency",
    "dim",
    "domain_lo",
    "domain_hi",
    "boxes",
    "p",
    "corner_mode",
    "workers",
    "batch_size",
    "resident_limit",
    "memory_budget",
    "cache",
    "mode",
    "out",
    "oracle",
    "write_nodes",
    "dt",
    "steps",
    "snapshot_stride",
    "dt_halvings",
    "trials",
    "config",
];

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.trim().parse().map_err(|_| format!("cannot parse '{v}'"))
}

fn parse_list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',').map(parse_num).collect()
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean")),
    }
}

/// Byte count with an optional K, M or G (binary) suffix.
pub fn parse_bytes(v: &str) -> std::result::Result<usize, String> {
    let t = v.trim();
    let (num, mult) = match t.chars().last() {
        Some('K' | 'k') => (&t[..t.len() - 1], 1usize << 10),
        Some('M' | 'm') => (&t[..t.len() - 1], 1 << 20),
        Some('G' | 'g') => (&t[..t.len() - 1], 1 << 30),
        _ => (t, 1),
    };
    let n: usize = num.trim().parse().map_err(|_| format!("'{v}' is not a byte count"))?;
    n.checked_mul(mult).ok_or_else(|| format!("'{v}' overflows"))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "problem" => self.problem = v.to_string(),
            "kappa" => self.kappa = parse_num(v)?,
            "amplitude" => self.amplitude = parse_num(v)?,
            "frequency" => self.frequency = parse_num(v)?,
            "dim" => self.dim = parse_num(v)?,
            "domain_lo" => self.domain_lo = Some(parse_list(v)?),
            "domain_hi" => self.domain_hi = Some(parse_list(v)?),
            "boxes" => self.boxes = v.split(',').map(BoxesSpec::parse).collect::<std::result::Result<_, _>>()?,
            "p" => self.p = parse_list(v)?,
            "corner_mode" => {
                self.corner_mode = match v {
                    "auto" => None,
                    "drop" | "drop-corners" => Some(CornerMode::DropCorners),
                    "legendre" | "legendre-faces" => Some(CornerMode::LegendreFaces),
                    _ => return Err(format!("unknown corner mode '{v}' (auto, drop, legendre)")),
                }
            }
            "workers" => self.workers = parse_num(v)?,
            "batch_size" => self.batch_size = parse_num(v)?,
            "resident_limit" => self.resident_limit = parse_num(v)?,
            "memory_budget" => self.memory_budget = parse_bytes(v)?,
            "cache" => {
                self.cache = match v {
                    "discard" => CachePolicy::Discard,
                    "keep" => CachePolicy::Keep,
                    _ => return Err(format!("unknown cache policy '{v}' (discard, keep)")),
                }
            }
            "mode" => self.mode = Mode::parse(v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "oracle" => self.oracle = parse_bool(v)?,
            "write_nodes" => self.write_nodes = parse_bool(v)?,
            "dt" => self.dt = parse_num(v)?,
            "steps" => self.steps = parse_num(v)?,
            "snapshot_stride" => self.snapshot_stride = parse_num(v)?,
            "dt_halvings" => self.dt_halvings = parse_num(v)?,
            "trials" => self.trials = parse_num(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a configuration text. Blank lines
    /// and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected 'key = value'", i + 1)))?;
            let k = k.trim();
            if k == "config" {
                return Err(CliError::Config(format!("{origin}:{}: nested config files are not supported", i + 1)));
            }
            self.set(k, v)
                .map_err(|e| CliError::Config(format!("{origin}:{}: field '{k}': {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn params(&self) -> Result<ProblemParams> {
        let domain = match (&self.domain_lo, &self.domain_hi) {
            (Some(lo), Some(hi)) => Some(DomainBox::new(lo.clone(), hi.clone()).map_err(CliError::from)?),
            (None, None) => None,
            _ => return Err(CliError::Config("domain_lo and domain_hi must be given together".into())),
        };
        Ok(ProblemParams {
            kappa: self.kappa,
            amplitude: self.amplitude,
            frequency: self.frequency,
            dim: self.dim,
            domain,
        })
    }

    pub fn schedule(&self) -> BatchSchedule {
        BatchSchedule {
            memory_budget: self.memory_budget,
            batch_size: self.batch_size,
            resident_limit: self.resident_limit,
            workers: self.workers,
            cache: self.cache,
        }
    }

    /// Checks the configuration and resolves the problem and mesh list
    /// without touching the file system.
    pub fn validate(&self) -> Result<Resolved> {
        let problem = problem_by_name(&self.problem, &self.params()?)?;
        let (domain, needs_legendre) = match &problem {
            Problem::Elliptic(s) => (s.domain.clone(), s.coeffs.has_cross_terms()),
            Problem::Parabolic(s) => (s.domain.clone(), false),
        };
        let d = domain.dim();
        let cfg_err = |m: String| CliError::Config(m);
        if self.boxes.is_empty() || self.p.is_empty() {
            return Err(cfg_err("boxes and p lists must be nonempty".into()));
        }
        let boxes = self
            .boxes
            .iter()
            .map(|b| b.resolve(d))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(cfg_err)?;
        for w in boxes.windows(2) {
            let grows = w[1].iter().zip(&w[0]).all(|(b, a)| b >= a);
            let more: bool = w[1].iter().product::<usize>() > w[0].iter().product::<usize>();
            if !(grows && more) {
                return Err(cfg_err(format!("boxes list must be strictly increasing: {:?} then {:?}", w[0], w[1])));
            }
        }
        if self.p.windows(2).any(|w| w[1] <= w[0]) {
            return Err(cfg_err(format!("p list must be strictly increasing: {:?}", self.p)));
        }
        let swept = (boxes.len() > 1) as usize + (self.p.len() > 1) as usize;
        match self.mode {
            Mode::Sweep if swept > 1 => {
                return Err(cfg_err("a sweep refines either boxes or p, not both".into()));
            }
            Mode::Solve | Mode::Timestep | Mode::OracleCheck if swept > 0 => {
                return Err(cfg_err(format!("mode {:?} takes a single boxes and p value", self.mode)));
            }
            _ => {}
        }
        let is_parabolic = matches!(problem, Problem::Parabolic(_));
        if self.mode == Mode::Timestep && !is_parabolic {
            return Err(cfg_err(format!("timestep mode needs a parabolic problem, '{}' is elliptic", self.problem)));
        }
        if self.mode != Mode::Timestep && is_parabolic {
            return Err(cfg_err(format!("'{}' is time dependent; use --mode timestep", self.problem)));
        }
        let corner_mode = match self.corner_mode {
            Some(CornerMode::DropCorners) if needs_legendre => {
                return Err(cfg_err(format!("'{}' has cross-derivative terms and needs legendre faces", self.problem)));
            }
            Some(m) => m,
            None if needs_legendre => CornerMode::LegendreFaces,
            None => CornerMode::DropCorners,
        };
        if self.workers == 0 || self.batch_size == 0 {
            return Err(cfg_err("workers and batch_size must be positive".into()));
        }
        if self.mode == Mode::Bench && self.trials == 0 {
            return Err(cfg_err("trials must be positive".into()));
        }
        if self.mode == Mode::Timestep && (!(self.dt > 0.0 && self.dt.is_finite()) || self.steps == 0) {
            return Err(cfg_err("timestep mode needs dt > 0 and steps > 0".into()));
        }
        Ok(Resolved {
            problem,
            boxes,
            corner_mode,
        })
    }
}

/// A validated configuration's problem and meshes.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub problem: Problem,
    pub boxes: Vec<Vec<usize>>,
    pub corner_mode: CornerMode,
}
