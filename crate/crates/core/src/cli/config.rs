use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{CliError, CliResult, DataArgs, TrainArgs};
use crate::dataio::{gen_adversarial, gen_random, gen_spiral, load_csv, DataSet, LabelColumn, ADVERSARIAL_NOISE};
use crate::network::TrainConfig;

/// Spiral noise used when none is given.
pub const SPIRAL_NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic(String),
}

impl DataSource {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s.strip_prefix("synthetic:") {
            Some(name) => match name {
                "spiral" | "random" | "adversarial" => Ok(Self::Synthetic(name.to_string())),
                other => Err(CliError::config(format!(
                    "unknown synthetic dataset {other:?} (expected spiral, random or adversarial)"
                ))),
            },
            None => Ok(Self::Csv(PathBuf::from(s))),
        }
    }

    /// Load the data. Synthetic sets use their standard sizes.
    pub fn load(&self, label_col: Option<&str>, seed: u64) -> CliResult<DataSet> {
        match self {
            Self::Csv(path) => {
                let col = label_col.map_or(LabelColumn::Last, LabelColumn::parse);
                Ok(load_csv(path, &col)?)
            }
            Self::Synthetic(name) => Ok(synthetic(name, None, None, seed)?),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Csv(p) => p.display().to_string(),
            Self::Synthetic(n) => format!("synthetic:{n}"),
        }
    }
}

/// Generate a named synthetic set with `n` total samples.
pub fn synthetic(name: &str, n: Option<usize>, noise: Option<f64>, seed: u64) -> crate::Result<DataSet> {
    use crate::Error::InvalidParameter;
    match name {
        "spiral" => {
            let n = n.unwrap_or(300);
            if n % 3 != 0 {
                return Err(InvalidParameter(format!("spiral needs n divisible by 3, got {n}")));
            }
            gen_spiral(n / 3, noise.unwrap_or(SPIRAL_NOISE), seed)
        }
        "random" => gen_random(n.unwrap_or(80), 2, seed),
        "adversarial" => {
            let n = n.unwrap_or(80);
            if n % 2 != 0 {
                return Err(InvalidParameter(format!("adversarial needs even n, got {n}")));
            }
            gen_adversarial(n / 2, noise.unwrap_or(ADVERSARIAL_NOISE), seed)
        }
        other => Err(InvalidParameter(format!("unknown synthetic dataset {other:?}"))),
    }
}

/// Everything a `train` run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data: DataSource,
    pub label_col: Option<String>,
    pub folds: usize,
    pub out: PathBuf,
    pub jobs: usize,
    pub dump_spectra: bool,
}

impl RunConfig {
    /// Merge the optional config file with flags; flags win.
    pub fn from_args(args: &TrainArgs) -> CliResult<Self> {
        let mut kv = match &args.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let flags: [(&str, Option<String>); 11] = [
            ("data", args.data.data.clone()),
            ("label_col", args.data.label_col.clone()),
            ("seed", args.data.seed.map(|v| v.to_string())),
            ("folds", args.folds.map(|v| v.to_string())),
            ("out", args.out.as_ref().map(|p| p.display().to_string())),
            ("jobs", args.jobs.map(|v| v.to_string())),
            ("hsic_threshold", args.hsic_threshold.map(|v| v.to_string())),
            ("max_layers", args.max_layers.map(|v| v.to_string())),
            ("rff_width", args.rff_width.map(|v| v.to_string())),
            ("sigma_strategy", args.sigma_strategy.clone()),
            ("dump_spectra", args.dump_spectra.then(|| "true".to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                kv.insert(k.to_string(), v);
            }
        }
        Self::from_map(&kv)
    }

    pub fn from_map(kv: &BTreeMap<String, String>) -> CliResult<Self> {
        let mut train = TrainConfig::default();
        let mut data = None;
        let mut label_col = None;
        let mut folds = 10;
        let mut out = PathBuf::from("run");
        let mut jobs = 1;
        let mut dump_spectra = false;
        for (k, v) in kv {
            match k.as_str() {
                "data" => data = Some(DataSource::parse(v)?),
                "label_col" => label_col = Some(v.clone()),
                "seed" => train.seed = num(k, v)?,
                "folds" => folds = num(k, v)?,
                "out" => out = PathBuf::from(v),
                "jobs" => jobs = num(k, v)?,
                "hsic_threshold" => train.hsic_threshold = num(k, v)?,
                "max_layers" => train.max_layers = num(k, v)?,
                "rff_width" | "m_rff" => train.m_rff = num(k, v)?,
                "sigma_strategy" => train.sigma_strategy = v.parse()?,
                "dump_spectra" => dump_spectra = num(k, v)?,
                other => return Err(CliError::config(format!("unknown config key {other:?}"))),
            }
        }
        let data = data.ok_or_else(|| CliError::config("--data is required"))?;
        if folds < 2 {
            return Err(CliError::config(format!("folds must be >= 2, got {folds}")));
        }
        if jobs == 0 {
            return Err(CliError::config("jobs must be >= 1"));
        }
        train.validate()?;
        Ok(Self {
            train,
            data,
            label_col,
            folds,
            out,
            jobs,
            dump_spectra,
        })
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::config(format!("invalid value {v:?} for {key}")))
}

/// Read either a JSON object or `key = value` lines (`#` starts a comment).
pub fn read_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut kv = BTreeMap::new();
    if text.trim_start().starts_with('{') {
        let obj: BTreeMap<String, serde_json::Value> = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("invalid JSON config: {e}")))?;
        for (k, v) in obj {
            let s = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(_) | serde_json::Value::Bool(_) => v.to_string(),
                _ => return Err(CliError::config(format!("config key {k:?} must be a scalar"))),
            };
            kv.insert(k.replace('-', "_"), s);
        }
        return Ok(kv);
    }
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected key=value", i + 1)))?;
        kv.insert(k.trim().replace('-', "_"), v.trim().trim_matches('"').to_string());
    }
    Ok(kv)
}

impl DataArgs {
    pub fn source(&self) -> CliResult<DataSource> {
        let d = self.data.as_deref().ok_or_else(|| CliError::config("--data is required"))?;
        DataSource::parse(d)
    }

    pub fn load(&self) -> CliResult<DataSet> {
        self.source()?.load(self.label_col.as_deref(), self.seed.unwrap_or(0))
    }
}
