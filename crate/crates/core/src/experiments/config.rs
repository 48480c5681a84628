use std::collections::BTreeMap;

use crate::analytics::QuadratureSpec;
use crate::error::{Error, Result};
use crate::fmt::compact_f64;
use crate::functionals::{AlphaParams, SQRT_2};
use crate::process::DEFAULT_MAX_PARTICLES;

/// Which named experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Strong law of large numbers for the normalized high-point count.
    Slln,
    /// Onset of McKean's martingale in the conditional expectation.
    Onset,
    /// Decay of the conditional-expectation remainder.
    Decorrelation,
    /// Overshoot counts against the localization bound.
    Localization,
    /// Same-ancestor pair counts against the two-point quadrature bound.
    PairCount,
    /// Two-phase speed orderings and the REM centering.
    RemCollapse,
    /// Full martingale traces over a checkpoint grid.
    Trace,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Slln => "slln",
            ExperimentKind::Onset => "onset",
            ExperimentKind::Decorrelation => "decorrelation",
            ExperimentKind::Localization => "localization",
            ExperimentKind::PairCount => "pair-count",
            ExperimentKind::RemCollapse => "rem-collapse",
            ExperimentKind::Trace => "trace",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "slln" => Some(ExperimentKind::Slln),
            "onset" => Some(ExperimentKind::Onset),
            "decorrelation" => Some(ExperimentKind::Decorrelation),
            "localization" => Some(ExperimentKind::Localization),
            "pair-count" => Some(ExperimentKind::PairCount),
            "rem-collapse" => Some(ExperimentKind::RemCollapse),
            "trace" => Some(ExperimentKind::Trace),
            _ => None,
        }
    }
}

/// One experiment run: replica farm parameters plus the experiment's own
/// knobs. The paper's `r = (log t)^ε` schedule guidance is documentation;
/// at desk scale `r` is set explicitly through `r_grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub alphas: Vec<f64>,
    /// Horizon; for `onset` it enters analytically only.
    pub t: f64,
    /// Conditioning / barrier start times, strictly increasing, all < t.
    pub r_grid: Vec<f64>,
    /// Barrier margin; `None` takes the per-alpha default.
    pub eps: Option<f64>,
    pub replicas: u64,
    /// First replica id (for splitting a run across reports).
    pub replica_start: u64,
    pub seed: u64,
    /// Worker count; 0 means all available cores.
    pub parallelism: usize,
    pub max_particles: usize,
    /// First-phase speed for `rem-collapse` (σ2 follows from normalization).
    pub sigma1: Option<f64>,
    /// Horizon grid for `rem-collapse`.
    pub t_grid: Vec<f64>,
    /// Checkpoint grid for `trace`.
    pub checkpoints: Vec<f64>,
    pub quadrature: QuadratureSpec,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, t: f64, seed: u64) -> Self {
        ExperimentConfig {
            kind,
            alphas: vec![1.0],
            t,
            r_grid: Vec::new(),
            eps: None,
            replicas: 1,
            replica_start: 0,
            seed,
            parallelism: 0,
            max_particles: DEFAULT_MAX_PARTICLES,
            sigma1: None,
            t_grid: Vec::new(),
            checkpoints: Vec::new(),
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn alpha_params(&self) -> Result<Vec<AlphaParams>> {
        self.alphas.iter().map(|&a| AlphaParams::new(a)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        if self.kind != ExperimentKind::RemCollapse {
            if self.alphas.is_empty() {
                return Err(Error::Config("at least one alpha is required".into()));
            }
            for &a in &self.alphas {
                if !(a > 0.0 && a < SQRT_2) {
                    return Err(Error::Config(format!(
                        "alpha must lie strictly in (0, sqrt(2)), got {a}"
                    )));
                }
            }
            if !(self.t > 0.0) && self.kind != ExperimentKind::Trace {
                return Err(Error::Config(format!("t must be > 0, got {}", self.t)));
            }
        }
        for w in self.r_grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Config("r grid must be strictly increasing".into()));
            }
        }
        match self.kind {
            ExperimentKind::Slln | ExperimentKind::Onset => {
                if self.r_grid.len() != 1 {
                    return Err(Error::Config(format!(
                        "{} takes exactly one r, got {:?}",
                        self.kind.name(),
                        self.r_grid
                    )));
                }
            }
            ExperimentKind::Decorrelation
            | ExperimentKind::Localization
            | ExperimentKind::PairCount => {
                if self.r_grid.is_empty() {
                    return Err(Error::Config(format!(
                        "{} needs a non-empty r grid",
                        self.kind.name()
                    )));
                }
            }
            ExperimentKind::RemCollapse => {
                let s1 = self
                    .sigma1
                    .ok_or_else(|| Error::Config("rem-collapse needs sigma1".into()))?;
                if !(s1 > 0.0 && s1 * s1 < 2.0) {
                    return Err(Error::Config(format!(
                        "sigma1 must satisfy 0 < sigma1 < sqrt(2), got {s1}"
                    )));
                }
                if self.t_grid.is_empty() {
                    return Err(Error::Config("rem-collapse needs a t grid".into()));
                }
                for w in self.t_grid.windows(2) {
                    if !(w[0] < w[1]) {
                        return Err(Error::Config("t grid must be strictly increasing".into()));
                    }
                }
                if self.t_grid.iter().any(|&t| !(t > 0.0)) {
                    return Err(Error::Config("t grid entries must be > 0".into()));
                }
            }
            ExperimentKind::Trace => {
                if self.checkpoints.len() < 4 {
                    return Err(Error::Config(
                        "trace needs at least 4 checkpoint times".into(),
                    ));
                }
                for w in self.checkpoints.windows(2) {
                    if !(w[0] < w[1]) {
                        return Err(Error::Config(
                            "checkpoints must be strictly increasing".into(),
                        ));
                    }
                }
            }
        }
        // r = t (or beyond) is degenerate everywhere it can occur.
        if !matches!(self.kind, ExperimentKind::RemCollapse | ExperimentKind::Trace) {
            for &r in &self.r_grid {
                if !(r > 0.0 && r < self.t) {
                    return Err(Error::Config(format!(
                        "every r must satisfy 0 < r < t, got r={r}, t={}",
                        self.t
                    )));
                }
            }
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return Err(Error::Config(format!("eps must be > 0, got {eps}")));
            }
        }
        if self.max_particles == 0 {
            return Err(Error::Config("max_particles must be >= 1".into()));
        }
        Ok(())
    }

    /// Barrier margin for one alpha: explicit `eps` or the analytic default.
    pub fn eps_for(&self, p: &AlphaParams) -> f64 {
        self.eps
            .unwrap_or_else(|| crate::analytics::default_epsilon(p))
    }

    /// Worker count after resolving 0 to the machine's parallelism.
    pub fn workers(&self) -> usize {
        if self.parallelism == 0 {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        } else {
            self.parallelism
        }
    }

    /// Flat, fully-resolved key=value echo; round-trips via [`Self::from_echo`].
    pub fn to_echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let join = |v: &[f64]| {
            v.iter()
                .map(|&x| compact_f64(x))
                .collect::<Vec<_>>()
                .join(",")
        };
        m.insert("experiment".into(), self.kind.name().to_string());
        m.insert("alphas".into(), join(&self.alphas));
        m.insert("t".into(), compact_f64(self.t));
        m.insert("r_grid".into(), join(&self.r_grid));
        m.insert(
            "eps".into(),
            self.eps.map(compact_f64).unwrap_or_else(|| "default".into()),
        );
        m.insert("replicas".into(), self.replicas.to_string());
        m.insert("replica_start".into(), self.replica_start.to_string());
        m.insert("seed".into(), self.seed.to_string());
        // Worker count is an execution detail, not an experiment parameter:
        // it never changes a report byte and stays out of the echo.
        m.insert("max_particles".into(), self.max_particles.to_string());
        m.insert(
            "sigma1".into(),
            self.sigma1.map(compact_f64).unwrap_or_else(|| "none".into()),
        );
        m.insert("t_grid".into(), join(&self.t_grid));
        m.insert("checkpoints".into(), join(&self.checkpoints));
        m.insert("quad_rel_tol".into(), compact_f64(self.quadrature.rel_tol));
        m.insert(
            "quad_max_subdivisions".into(),
            self.quadrature.max_subdivisions.to_string(),
        );
        m
    }

    pub fn from_echo(echo: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| {
            echo.get(k)
                .ok_or_else(|| Error::Config(format!("config echo is missing key '{k}'")))
        };
        let parse_f = |k: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad value for {k}: '{v}'")))
        };
        let parse_list = |k: &str, v: &str| -> Result<Vec<f64>> {
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|s| parse_f(k, s)).collect()
        };
        let kind_raw = get("experiment")?;
        let kind = ExperimentKind::parse(kind_raw)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{kind_raw}'")))?;
        let eps_raw = get("eps")?;
        let sigma1_raw = get("sigma1")?;
        let cfg = ExperimentConfig {
            kind,
            alphas: parse_list("alphas", get("alphas")?)?,
            t: parse_f("t", get("t")?)?,
            r_grid: parse_list("r_grid", get("r_grid")?)?,
            eps: if eps_raw == "default" {
                None
            } else {
                Some(parse_f("eps", eps_raw)?)
            },
            replicas: get("replicas")?
                .parse()
                .map_err(|_| Error::Config("bad replicas".into()))?,
            replica_start: get("replica_start")?
                .parse()
                .map_err(|_| Error::Config("bad replica_start".into()))?,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Config("bad seed".into()))?,
            parallelism: 0,
            max_particles: get("max_particles")?
                .parse()
                .map_err(|_| Error::Config("bad max_particles".into()))?,
            sigma1: if sigma1_raw == "none" {
                None
            } else {
                Some(parse_f("sigma1", sigma1_raw)?)
            },
            t_grid: parse_list("t_grid", get("t_grid")?)?,
            checkpoints: parse_list("checkpoints", get("checkpoints")?)?,
            quadrature: QuadratureSpec {
                rel_tol: parse_f("quad_rel_tol", get("quad_rel_tol")?)?,
                max_subdivisions: get("quad_max_subdivisions")?
                    .parse()
                    .map_err(|_| Error::Config("bad quad_max_subdivisions".into()))?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
