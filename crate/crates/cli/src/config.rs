//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Recognised keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `sensors` | physical sensor count `N` (FOGNA split from the optimizer) | 9 |
//! | `angles` | explicit source angles in degrees | unset |
//! | `sources` | number of sources spread uniformly over `[angle_min, angle_max]` | unset |
//! | `angle_min`, `angle_max` | range for `sources` | -60, 60 |
//! | `snr_db` | SNR list in dB | 0 |
//! | `snapshots` | snapshot-count list | 10000 |
//! | `trials` | Monte-Carlo trials per point | 20 |
//! | `seed` | base seed; trial `t` uses `seed + t` | required |
//! | `grid_step` | MUSIC grid step in degrees | 0.05 |
//! | `coupling` | `on` applies mutual coupling to the snapshots | off |
//! | `coarray` | `foeca` (all three cases) or `fodca` (difference case only) | foeca |
//! | `tolerance` | success tolerance in degrees for `resolve` | 0.4 |

use std::path::Path;

use fogna::coarray::FocaCase;
use fogna::signalsim::uniform_angles;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarrayChoice {
    Foeca,
    Fodca,
}

impl CoarrayChoice {
    pub fn cases(self) -> &'static [FocaCase] {
        match self {
            CoarrayChoice::Foeca => &FocaCase::ALL,
            CoarrayChoice::Fodca => &[FocaCase::Two],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub sensors: usize,
    pub angles: Option<Vec<f64>>,
    pub sources: Option<usize>,
    pub angle_min: f64,
    pub angle_max: f64,
    pub snr_db: Vec<f64>,
    pub snapshots: Vec<usize>,
    pub trials: usize,
    pub seed: Option<u64>,
    pub grid_step: f64,
    pub coupling: bool,
    pub coarray: CoarrayChoice,
    pub tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sensors: 9,
            angles: None,
            sources: None,
            angle_min: -60.0,
            angle_max: 60.0,
            snr_db: vec![0.0],
            snapshots: vec![10_000],
            trials: 20,
            seed: None,
            grid_step: fogna::estimator::DEFAULT_GRID_STEP_DEG,
            coupling: false,
            coarray: CoarrayChoice::Foeca,
            tolerance: 0.4,
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("`{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn parse_one<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| format!("`{}`: {e}", value.trim()))
}

impl ExperimentConfig {
    /// Sets one key. `origin` names the source of the value in error messages.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), CliError> {
        let err = |msg: String| CliError::Config {
            origin: origin.to_string(),
            message: format!("{key}: {msg}"),
        };
        match key {
            "sensors" => self.sensors = parse_one(value).map_err(err)?,
            "angles" => self.angles = Some(parse_list(value).map_err(err)?),
            "sources" => self.sources = Some(parse_one(value).map_err(err)?),
            "angle_min" => self.angle_min = parse_one(value).map_err(err)?,
            "angle_max" => self.angle_max = parse_one(value).map_err(err)?,
            "snr_db" => self.snr_db = parse_list(value).map_err(err)?,
            "snapshots" => self.snapshots = parse_list(value).map_err(err)?,
            "trials" => self.trials = parse_one(value).map_err(err)?,
            "seed" => self.seed = Some(parse_one(value).map_err(err)?),
            "grid_step" => self.grid_step = parse_one(value).map_err(err)?,
            "tolerance" => self.tolerance = parse_one(value).map_err(err)?,
            "coupling" => {
                self.coupling = match value.trim() {
                    "on" | "true" | "yes" => true,
                    "off" | "false" | "no" => false,
                    other => return Err(err(format!("expected on/off, got `{other}`"))),
                }
            }
            "coarray" => {
                self.coarray = match value.trim() {
                    "foeca" => CoarrayChoice::Foeca,
                    "fodca" => CoarrayChoice::Fodca,
                    other => return Err(err(format!("expected foeca/fodca, got `{other}`"))),
                }
            }
            _ => {
                return Err(CliError::Config {
                    origin: origin.to_string(),
                    message: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str, name: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let origin = format!("{name}:{}", i + 1);
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config {
                    origin,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.set(key.trim(), value, &origin)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Applies `KEY=VALUE` overrides given on the command line.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for item in overrides {
            let origin = format!("--set {item}");
            let Some((key, value)) = item.split_once('=') else {
                return Err(CliError::Config {
                    origin,
                    message: "expected KEY=VALUE".into(),
                });
            };
            self.set(key.trim(), value, &origin)?;
        }
        Ok(())
    }

    /// Checks ranges and returns the seed.
    pub fn validate(&self) -> Result<u64, CliError> {
        let bad = |message: String| CliError::Config {
            origin: "config".into(),
            message,
        };
        let seed = self.seed.ok_or_else(|| bad("`seed` is required".into()))?;
        if self.sensors < 4 {
            return Err(bad(format!(
                "sensors must be at least 4, got {}",
                self.sensors
            )));
        }
        if self.trials == 0 {
            return Err(bad("trials must be at least 1".into()));
        }
        if self.snapshots.iter().any(|&k| k < 2) {
            return Err(bad("every snapshot count must be at least 2".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(bad("SNR values must be numbers".into()));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(bad(format!(
                "grid_step must be positive, got {}",
                self.grid_step
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(bad(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        match (&self.angles, self.sources) {
            (Some(_), Some(_)) => {
                return Err(bad("set either `angles` or `sources`, not both".into()))
            }
            (None, None) => return Err(bad("one of `angles` or `sources` is required".into())),
            (None, Some(0)) => return Err(bad("sources must be at least 1".into())),
            (None, Some(_)) => {
                if !(self.angle_min < self.angle_max
                    && self.angle_min > -90.0
                    && self.angle_max < 90.0)
                {
                    return Err(bad(
                        "angle range must satisfy -90 < angle_min < angle_max < 90".into(),
                    ));
                }
            }
            (Some(_), None) => {}
        }
        Ok(seed)
    }

    pub fn source_angles(&self) -> Vec<f64> {
        match (&self.angles, self.sources) {
            (Some(a), _) => a.clone(),
            (None, Some(d)) => uniform_angles(d, self.angle_min, self.angle_max),
            (None, None) => Vec::new(),
        }
    }

    /// Canonical `key = value` rendering, readable by [`ExperimentConfig::apply_text`].
    pub fn render(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let mut out = format!("sensors = {}\n", self.sensors);
        if let Some(a) = &self.angles {
            out += &format!(
                "angles = {}\n",
                join(&a.iter().map(f64::to_string).collect::<Vec<_>>())
            );
        }
        if let Some(d) = self.sources {
            out += &format!(
                "sources = {d}\nangle_min = {}\nangle_max = {}\n",
                self.angle_min, self.angle_max
            );
        }
        out += &format!(
            "snr_db = {}\nsnapshots = {}\ntrials = {}\n",
            join(&self.snr_db.iter().map(f64::to_string).collect::<Vec<_>>()),
            join(
                &self
                    .snapshots
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
            ),
            self.trials
        );
        if let Some(seed) = self.seed {
            out += &format!("seed = {seed}\n");
        }
        out += &format!(
            "grid_step = {}\ncoupling = {}\ncoarray = {}\ntolerance = {}\n",
            self.grid_step,
            if self.coupling { "on" } else { "off" },
            match self.coarray {
                CoarrayChoice::Foeca => "foeca",
                CoarrayChoice::Fodca => "fodca",
            },
            self.tolerance
        );
        out
    }
}
