//! Settings from a flat `key = value` file, overridden by command flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hetfx::mle::default_fit_options;
use hetfx::{LatentDist, OptimOptions, OutcomeKind};

use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "outcome_kind",
    "input",
    "delimiter",
    "treatment",
    "outcome",
    "covariates",
    "c",
    "ci_level",
    "reps",
    "seed",
    "latent",
    "n",
    "treat_prob",
    "truth_draws",
    "max_iterations",
    "gradient_tolerance",
    "restarts",
    "jitter",
    "emit_data",
    "out",
];

/// Raw key-value pairs before typing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::input(format!(
                    "{origin}: line {}: expected key = value",
                    i + 1
                )));
            };
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::input(format!(
                    "{origin}: line {}: unknown key '{key}'",
                    i + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.values.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::input(format!("setting {key}: cannot parse '{v}'")))
            })
            .transpose()
    }
}

/// Parses `1,2,3` or an inclusive range `start:stop:step`.
pub fn parse_c_list(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::input(format!("c list '{s}': expected numbers like 0,1,2 or a range 0:20:2"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let out = if parts.len() == 3 {
        let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(stop >= start) {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else if parts.len() == 1 {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<Vec<f64>>>()?
    } else {
        return Err(bad());
    };
    if out.iter().any(|c| !c.is_finite()) {
        return Err(bad());
    }
    Ok(out)
}

fn parse_latents(s: &str) -> CliResult<Vec<LatentDist>> {
    s.split(',')
        .map(|v| v.parse::<LatentDist>().map_err(CliError::from))
        .collect()
}

/// Typed settings shared by all commands. Commands check that what they
/// need is present.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub outcome_kind: Option<OutcomeKind>,
    pub input: Option<PathBuf>,
    pub delimiter: Option<u8>,
    pub treatment: String,
    pub outcome: String,
    pub covariates: Option<Vec<String>>,
    pub cs: Option<Vec<f64>>,
    pub ci_level: f64,
    pub reps: usize,
    pub seed: u64,
    pub latents: Vec<LatentDist>,
    pub n: Option<usize>,
    pub treat_prob: Option<f64>,
    pub truth_draws: Option<u64>,
    pub fit: OptimOptions,
    pub emit_data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn from_raw(raw: &RawConfig) -> CliResult<Self> {
        let defaults = default_fit_options();
        let delimiter = match raw.get("delimiter") {
            None => None,
            Some("tab") | Some("\\t") => Some(b'\t'),
            Some(d) if d.len() == 1 => Some(d.as_bytes()[0]),
            Some(d) => return Err(CliError::input(format!("delimiter must be one character or 'tab', got '{d}'"))),
        };
        let covariates = raw.get("covariates").map(|s| {
            s.split(',')
                .map(|c| c.trim().to_string())
                .filter(|c| !c.is_empty())
                .collect()
        });
        let ci_level = raw.parsed::<f64>("ci_level")?.unwrap_or(0.95);
        hetfx::estimands::two_sided_z(ci_level)?;
        let fit = OptimOptions {
            max_iterations: raw.parsed("max_iterations")?.unwrap_or(defaults.max_iterations),
            gradient_tolerance: raw.parsed("gradient_tolerance")?.unwrap_or(defaults.gradient_tolerance),
            restarts: raw.parsed("restarts")?.unwrap_or(defaults.restarts),
            jitter: raw.parsed("jitter")?.unwrap_or(defaults.jitter),
            ..defaults
        };
        fit.validate()?;
        Ok(Self {
            outcome_kind: raw.get("outcome_kind").map(str::parse).transpose()?,
            input: raw.get("input").map(PathBuf::from),
            delimiter,
            treatment: raw.get("treatment").unwrap_or("t").to_string(),
            outcome: raw.get("outcome").unwrap_or("y").to_string(),
            covariates,
            cs: raw.get("c").map(parse_c_list).transpose()?,
            ci_level,
            reps: raw.parsed("reps")?.unwrap_or(200),
            seed: raw.parsed("seed")?.unwrap_or(1),
            latents: match raw.get("latent") {
                Some(s) => parse_latents(s)?,
                None => vec![LatentDist::Normal],
            },
            n: raw.parsed("n")?,
            treat_prob: raw.parsed("treat_prob")?,
            truth_draws: raw.parsed("truth_draws")?,
            fit,
            emit_data: raw.get("emit_data").map(PathBuf::from),
            out: raw.get("out").map(PathBuf::from),
        })
    }

    pub fn require_kind(&self) -> CliResult<OutcomeKind> {
        self.outcome_kind
            .ok_or_else(|| CliError::input("outcome_kind is required (continuous or binary)"))
    }

    pub fn require_input(&self) -> CliResult<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::input("an input file is required (--input PATH)"))
    }
}
