//! Option resolution: command-line flags override a flat `key=value` config
//! file, which overrides the `BBM_LAB_SEED` environment fallback and the
//! built-in defaults. Every run writes a manifest of the fully resolved
//! values that can be fed back through `--config` to reproduce the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bbm_core::analytics::QuadratureSpec;
use bbm_core::experiments::{ExperimentConfig, ExperimentKind};
use bbm_core::process::DEFAULT_MAX_PARTICLES;
use bbm_core::{Error, Result};

pub const SEED_ENV: &str = "BBM_LAB_SEED";

/// Flat `key=value` file; `#` starts a comment, blank lines are ignored.
pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key=value, got '{raw}'",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Resolves flag/file/default precedence and records which keys the file
/// offered so unknown keys can be rejected.
pub struct Resolver {
    file: BTreeMap<String, String>,
    consumed: Vec<String>,
    pub resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(config_path: Option<&Path>) -> Result<Self> {
        let file = match config_path {
            Some(p) => load_config_file(p)?,
            None => BTreeMap::new(),
        };
        Ok(Resolver {
            file,
            consumed: Vec::new(),
            resolved: BTreeMap::new(),
        })
    }

    fn file_value(&mut self, key: &str) -> Option<String> {
        self.consumed.push(key.to_string());
        self.file.get(key).cloned()
    }

    /// Resolve one key: explicit flag, then file, then default; the chosen
    /// value is recorded for the manifest.
    pub fn string(&mut self, key: &str, flag: Option<String>, default: &str) -> String {
        let v = flag
            .or_else(|| self.file_value(key))
            .unwrap_or_else(|| default.to_string());
        self.resolved.insert(key.to_string(), v.clone());
        v
    }

    pub fn parsed<T: std::str::FromStr>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T>
    where
        T: ToString,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.file_value(key) {
                Some(raw) => raw
                    .parse()
                    .map_err(|_| Error::Config(format!("bad value for {key}: '{raw}'")))?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Seed resolution adds the environment fallback between file and
    /// default.
    pub fn seed(&mut self, flag: Option<u64>) -> Result<u64> {
        let v = match flag {
            Some(v) => v,
            None => match self.file_value("seed") {
                Some(raw) => raw
                    .parse()
                    .map_err(|_| Error::Config(format!("bad value for seed: '{raw}'")))?,
                None => match std::env::var(SEED_ENV) {
                    Ok(raw) => raw.parse().map_err(|_| {
                        Error::Config(format!("bad {SEED_ENV} value: '{raw}'"))
                    })?,
                    Err(_) => 0,
                },
            },
        };
        self.resolved.insert("seed".to_string(), v.to_string());
        Ok(v)
    }

    /// Comma-separated float list.
    pub fn f64_list(&mut self, key: &str, flag: Option<String>, default: &str) -> Result<Vec<f64>> {
        let raw = self.string(key, flag, default);
        parse_f64_list(key, &raw)
    }

    /// Reject file keys that no resolver consumed.
    pub fn finish(self) -> Result<BTreeMap<String, String>> {
        for k in self.file.keys() {
            if !self.consumed.contains(k) {
                return Err(Error::Config(format!("unknown config key '{k}'")));
            }
        }
        Ok(self.resolved)
    }
}

pub fn parse_f64_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad value in {key}: '{s}'")))
        })
        .collect()
}

/// Common experiment flags shared by every experiment subcommand.
#[derive(Debug, clap::Args)]
pub struct ExperimentArgs {
    /// Comma-separated alpha grid in (0, sqrt(2)).
    #[arg(long)]
    pub alpha: Option<String>,
    /// Horizon t.
    #[arg(long)]
    pub t: Option<f64>,
    /// Conditioning / barrier start time(s), comma-separated.
    #[arg(long)]
    pub r: Option<String>,
    /// Barrier margin epsilon; omit for the per-alpha analytic default.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of replicas.
    #[arg(long)]
    pub replicas: Option<u64>,
    /// First replica id (for splitting farms across runs).
    #[arg(long)]
    pub replica_start: Option<u64>,
    /// Master seed; falls back to the config file, then $BBM_LAB_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Population cap per replica.
    #[arg(long)]
    pub max_particles: Option<usize>,
    /// Quadrature relative tolerance (pair-count bound).
    #[arg(long)]
    pub quad_rel_tol: Option<f64>,
    /// Quadrature subdivision budget (pair-count bound).
    #[arg(long)]
    pub quad_max_subdivisions: Option<usize>,
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; all artifacts are written inside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format: json (default) or csv.
    #[arg(long)]
    pub format: Option<String>,
}

/// Fully resolved experiment invocation.
pub struct ResolvedExperiment {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub manifest: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    fn parse(raw: &str) -> Result<Self> {
        match raw {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Config(format!(
                "format must be json or csv, got '{other}'"
            ))),
        }
    }
}

/// Experiment defaults: mirrors the desk-scale runs described in the README.
pub fn resolve_experiment(
    kind: ExperimentKind,
    args: &ExperimentArgs,
    extra: &mut dyn FnMut(&mut Resolver, &mut ExperimentConfig) -> Result<()>,
) -> Result<ResolvedExperiment> {
    let mut r = Resolver::new(args.config.as_deref())?;
    r.resolved
        .insert("experiment".into(), kind.name().to_string());
    if let Some(exp) = r.file_value_public("experiment") {
        if exp != kind.name() {
            return Err(Error::Config(format!(
                "config file is for experiment '{exp}', not '{}'",
                kind.name()
            )));
        }
    }

    let mut cfg = ExperimentConfig::new(kind, 0.0, 0);
    cfg.alphas = r.f64_list("alpha", args.alpha.clone(), "1")?;
    cfg.t = r.parsed("t", args.t, 10.0)?;
    cfg.r_grid = r.f64_list("r", args.r.clone(), "")?;
    let eps = r.parsed("eps", args.eps, -1.0)?;
    cfg.eps = if eps < 0.0 { None } else { Some(eps) };
    // Normalize the manifest echo of the default marker.
    if cfg.eps.is_none() {
        r.resolved.insert("eps".into(), "-1".into());
    }
    cfg.replicas = r.parsed("replicas", args.replicas, 100)?;
    cfg.replica_start = r.parsed("replica_start", args.replica_start, 0)?;
    cfg.seed = r.seed(args.seed)?;
    cfg.parallelism = r.parsed("parallelism", args.parallelism, 0)?;
    cfg.max_particles = r.parsed("max_particles", args.max_particles, DEFAULT_MAX_PARTICLES)?;
    cfg.quadrature = QuadratureSpec {
        rel_tol: r.parsed("quad_rel_tol", args.quad_rel_tol, 1e-8)?,
        max_subdivisions: r.parsed(
            "quad_max_subdivisions",
            args.quad_max_subdivisions,
            20_000,
        )?,
    };
    extra(&mut r, &mut cfg)?;

    let out = PathBuf::from(r.string(
        "out",
        args.out.as_ref().map(|p| p.display().to_string()),
        "bbm-lab-out",
    ));
    let format = OutputFormat::parse(&r.string("format", args.format.clone(), "json"))?;
    // The output directory is a destination, not configuration: it stays
    // out of the manifest so round-trips into a fresh directory reproduce
    // byte-identical artifacts.
    let mut manifest = r.finish()?;
    manifest.remove("out");
    cfg.validate()?;
    Ok(ResolvedExperiment {
        cfg,
        out,
        format,
        manifest,
    })
}

impl Resolver {
    /// Like `file_value` but public for the experiment-name guard.
    fn file_value_public(&mut self, key: &str) -> Option<String> {
        self.consumed.push(key.to_string());
        self.file.get(key).cloned()
    }
}

pub fn write_manifest(dir: &Path, manifest: &BTreeMap<String, String>) -> Result<()> {
    let mut text = String::new();
    for (k, v) in manifest {
        text.push_str(&format!("{k}={v}\n"));
    }
    std::fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}
