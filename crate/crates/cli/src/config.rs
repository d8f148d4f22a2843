use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hedseg::harness::{DatasetLayout, EvalOptions, RegimeThresholds, ResolutionSpec};
use hedseg::hedonic::{InitMode, DEFAULT_MAX_SWEEPS};
use hedseg::pixelgraph::GraphParams;

pub const CONFIG_ENV: &str = "HEDSEG_CONFIG";
pub const DEFAULT_C: f64 = 900.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Singleton,
    One,
    /// Both inits, for sweep and dataset runs.
    Both,
}

impl FromStr for InitArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

impl InitArg {
    pub fn modes(self) -> Vec<InitMode> {
        match self {
            InitArg::Singleton => vec![InitMode::Singleton],
            InitArg::One => vec![InitMode::OneCoalition],
            InitArg::Both => vec![InitMode::Singleton, InitMode::OneCoalition],
        }
    }
}

/// Flags shared by every pipeline subcommand. Each can also be set in the
/// config file under the same name without the leading dashes.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// key=value config file; falls back to $HEDSEG_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Resolution as gamma = density / c.
    #[arg(long)]
    pub c: Option<f64>,
    /// Resolution given directly; conflicts with c.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    /// Cap on the number of communities in the greedy union.
    #[arg(long)]
    pub lmax: Option<usize>,
    /// Individual-F1 threshold for the threshold union.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Color scale sigma (not squared).
    #[arg(long)]
    pub sigma_color: Option<f64>,
    /// Boundary scale sigma (not squared).
    #[arg(long)]
    pub sigma_edge: Option<f64>,
    /// Affinities at or below this are dropped.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub canny_low: Option<f64>,
    #[arg(long)]
    pub canny_high: Option<f64>,
    #[arg(long)]
    pub blur_sigma: Option<f64>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Images evaluated concurrently; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub single_min: Option<f64>,
    #[arg(long)]
    pub gap_max: Option<f64>,
    #[arg(long)]
    pub union_min: Option<f64>,
}

const KEYS: [&str; 21] = [
    "c", "gamma", "init", "lmax", "tau", "sigma-color", "sigma-edge", "eps", "canny-low",
    "canny-high", "blur-sigma", "max-sweeps", "out", "jobs", "single-min", "gap-max",
    "union-min", "dataset", "image-pattern", "gt-pattern", "grid",
];

/// Parsed `key = value` lines. Blank lines and `#` comments are skipped;
/// underscores in keys are read as dashes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected key=value, got `{line}`", i + 1);
            };
            let key = k.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                bail!("config line {}: unknown key `{}`", i + 1, k.trim());
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// The flag value if given, else the parsed file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("config key `{key}`: {e}")))
            .transpose()
    }
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Debug)]
pub struct Settings {
    pub eval: EvalOptions,
    pub resolution: ResolutionSpec,
    pub init: InitArg,
    pub tau: f64,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub thresholds: RegimeThresholds,
    pub dataset: Option<PathBuf>,
    pub layout: DatasetLayout,
    /// Sweep grid from the config file, if any.
    pub grid: Option<String>,
}

impl Settings {
    pub fn resolve(common: &Common) -> Result<Self> {
        let path = common
            .config
            .clone()
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let file = match path {
            Some(p) => ConfigFile::load(&p)?,
            None => ConfigFile::default(),
        };
        Self::from_parts(common, &file)
    }

    pub fn from_parts(common: &Common, file: &ConfigFile) -> Result<Self> {
        let d = GraphParams::default();
        let params = GraphParams {
            sigma_color: file.pick(common.sigma_color, "sigma-color")?.unwrap_or(d.sigma_color),
            sigma_edge: file.pick(common.sigma_edge, "sigma-edge")?.unwrap_or(d.sigma_edge),
            eps_discard: file.pick(common.eps, "eps")?.unwrap_or(d.eps_discard),
            canny_low: file.pick(common.canny_low, "canny-low")?.unwrap_or(d.canny_low),
            canny_high: file.pick(common.canny_high, "canny-high")?.unwrap_or(d.canny_high),
            blur_sigma: file.pick(common.blur_sigma, "blur-sigma")?.unwrap_or(d.blur_sigma),
        };
        params.validate()?;

        let c = file.pick(common.c, "c")?;
        let gamma = file.pick(common.gamma, "gamma")?;
        let resolution = match (c, gamma) {
            (Some(_), Some(_)) => bail!("both c and gamma are set; use exactly one"),
            (Some(c), None) => ResolutionSpec::C(c),
            (None, Some(g)) => ResolutionSpec::Gamma(g),
            (None, None) => ResolutionSpec::C(DEFAULT_C),
        };

        let l_max = file.pick(common.lmax, "lmax")?;
        if l_max == Some(0) {
            bail!("lmax must be positive");
        }
        let max_sweeps = file.pick(common.max_sweeps, "max-sweeps")?.unwrap_or(DEFAULT_MAX_SWEEPS);
        if max_sweeps == 0 {
            bail!("max-sweeps must be positive");
        }
        let jobs = file.pick(common.jobs, "jobs")?;
        if jobs == Some(0) {
            bail!("jobs must be positive");
        }
        let td = RegimeThresholds::default();
        let dl = DatasetLayout::default();
        Ok(Self {
            eval: EvalOptions {
                params,
                max_sweeps,
                l_max,
            },
            resolution,
            init: file.pick(common.init, "init")?.unwrap_or(InitArg::Singleton),
            tau: file.pick(common.tau, "tau")?.unwrap_or(0.1),
            out: file.pick(common.out.clone(), "out")?.unwrap_or_else(|| "hedseg-out".into()),
            jobs,
            thresholds: RegimeThresholds {
                single_min: file.pick(common.single_min, "single-min")?.unwrap_or(td.single_min),
                gap_max: file.pick(common.gap_max, "gap-max")?.unwrap_or(td.gap_max),
                union_min: file.pick(common.union_min, "union-min")?.unwrap_or(td.union_min),
            },
            dataset: file.pick(None, "dataset")?,
            layout: DatasetLayout {
                image_pattern: file.pick(None, "image-pattern")?.unwrap_or(dl.image_pattern),
                gt_pattern: file.pick(None, "gt-pattern")?.unwrap_or(dl.gt_pattern),
                max_gts: dl.max_gts,
            },
            grid: file.pick(None, "grid")?,
        })
    }

    /// A single init mode, for commands that run the dynamics once.
    pub fn single_init(&self) -> Result<InitMode> {
        match self.init {
            InitArg::Both => bail!("--init both is only valid for sweep and dataset"),
            other => Ok(other.modes()[0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_flag_overrides() {
        let file = ConfigFile::parse("# comment\nc = 300\nsigma_color=10\ninit=one\n\nlmax=4\n").unwrap();
        let s = Settings::from_parts(&Common::default(), &file).unwrap();
        assert_eq!(s.resolution, ResolutionSpec::C(300.0));
        assert_eq!(s.eval.params.sigma_color, 10.0);
        assert_eq!(s.init, InitArg::One);
        assert_eq!(s.eval.l_max, Some(4));

        let flags = Common {
            c: Some(90.0),
            init: Some(InitArg::Singleton),
            ..Common::default()
        };
        let s = Settings::from_parts(&flags, &file).unwrap();
        assert_eq!(s.resolution, ResolutionSpec::C(90.0));
        assert_eq!(s.init, InitArg::Singleton);
    }

    #[test]
    fn defaults() {
        let s = Settings::from_parts(&Common::default(), &ConfigFile::default()).unwrap();
        assert_eq!(s.resolution, ResolutionSpec::C(DEFAULT_C));
        assert_eq!(s.eval, EvalOptions::default());
        assert_eq!(s.init, InitArg::Singleton);
        assert_eq!(s.tau, 0.1);
    }

    #[test]
    fn conflicts_and_bad_input() {
        let both = Common {
            c: Some(900.0),
            gamma: Some(0.1),
            ..Common::default()
        };
        assert!(Settings::from_parts(&both, &ConfigFile::default()).is_err());
        let file = ConfigFile::parse("gamma=0.2").unwrap();
        let c = Common {
            c: Some(9.0),
            ..Common::default()
        };
        assert!(Settings::from_parts(&c, &file).is_err());
        assert!(ConfigFile::parse("nonsense").is_err());
        assert!(ConfigFile::parse("colour=3").is_err());
        let bad = ConfigFile::parse("c=abc").unwrap();
        assert!(Settings::from_parts(&Common::default(), &bad).is_err());
        let bad = ConfigFile::parse("canny-low=200").unwrap();
        assert!(Settings::from_parts(&Common::default(), &bad).is_err());
    }
}
