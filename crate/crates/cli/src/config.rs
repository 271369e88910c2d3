use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use procert::channels::{Gate, NoiseModel, NoisePlacement};
use procert::readout::{CalibrationSource, Mode};

/// Serializes through `Display` and parses through `FromStr`.
mod as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let text = String::deserialize(d)?;
        text.parse().map_err(de::Error::custom)
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    #[default]
    Exact,
    Shots,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// `all` or a positive number of Monte Carlo draws.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum Samples {
    #[default]
    All,
    Count(usize),
}

impl fmt::Display for Samples {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Samples::All => f.write_str("all"),
            Samples::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Samples {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "all" => Ok(Samples::All),
            t => match t.parse::<usize>() {
                Ok(0) | Err(_) => Err(format!("samples must be 'all' or a positive integer, got '{s}'")),
                Ok(n) => Ok(Samples::Count(n)),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(with = "as_string")]
    pub gate: Gate,
    #[serde(with = "as_string")]
    pub noise: NoiseModel,
    pub noise_placement: NoisePlacement,
    pub mode: ModeKind,
    pub shots: u32,
    #[serde(with = "as_string")]
    pub samples: Samples,
    pub eigenstate_sampling: bool,
    pub seed: u64,
    #[serde(with = "as_string")]
    pub calibration: CalibrationSource,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gate: Gate::Cnot,
            noise: NoiseModel::none(),
            noise_placement: NoisePlacement::After,
            mode: ModeKind::Exact,
            shots: 1000,
            samples: Samples::All,
            eigenstate_sampling: false,
            seed: 0,
            calibration: CalibrationSource::Default,
            output: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical form: pretty JSON, fixed key order, normalized descriptors.
    pub fn render(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.mode == ModeKind::Shots && self.shots == 0 {
            return Err("shot mode needs at least one shot".into());
        }
        Ok(())
    }

    pub fn readout_mode(&self) -> Mode {
        match self.mode {
            ModeKind::Exact => Mode::Exact,
            ModeKind::Shots => Mode::Shots { shots: self.shots, seed: self.seed },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_canonical() {
        let text = r#"{"gate": "toffoli", "noise": "depolarizing:0.10+amp_damp:0.050",
                       "samples": "100", "seed": 7, "calibration": "randomized:3"}"#;
        let parsed = RunConfig::parse(text).unwrap();
        assert_eq!(parsed.gate, Gate::Toffoli);
        assert_eq!(parsed.samples, Samples::Count(100));
        let canonical = parsed.render();
        assert!(canonical.contains(r#""noise": "depolarizing:0.1+amp_damp:0.05""#));
        assert_eq!(RunConfig::parse(&canonical).unwrap().render(), canonical);
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let config = RunConfig::parse("{}").unwrap();
        assert_eq!(config, RunConfig::default());
        assert_eq!(config.readout_mode(), Mode::Exact);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(RunConfig::parse(r#"{"gate": "swap"}"#).is_err());
        assert!(RunConfig::parse(r#"{"noise": "depolarizing:2"}"#).is_err());
        assert!(RunConfig::parse(r#"{"samples": "0"}"#).is_err());
        assert!(RunConfig::parse(r#"{"colour": "red"}"#).is_err());
        assert!(RunConfig::parse(r#"{"mode": "shots", "shots": 0}"#).is_err());
    }

    #[test]
    fn samples_grammar() {
        assert_eq!("all".parse::<Samples>().unwrap(), Samples::All);
        assert_eq!("12".parse::<Samples>().unwrap(), Samples::Count(12));
        assert!("-3".parse::<Samples>().is_err());
        assert_eq!(Samples::Count(5).to_string(), "5");
    }
}
