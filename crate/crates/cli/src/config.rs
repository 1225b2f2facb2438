//! Resolved run configuration.
//!
//! Precedence is flags, then config-file keys, then defaults. Flags and file
//! are both lowered to TOML tables and merged key by key before a single
//! deserialization, so every source passes the same validation.

use std::path::PathBuf;

use qmm_core::eval::{Scheme, SigmaSource};
use qmm_core::formats::Dither;
use qmm_core::sic::EntropyEstimator;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Entry distribution for `gen`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    /// iid `N(0, sigma²)`.
    Gaussian { sigma: f64 },
    /// iid uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// iid `N(0, sigma²)` with `count` entries per column replaced by `±magnitude`.
    Spike {
        count: usize,
        magnitude: f64,
        sigma: f64,
    },
}

impl Default for Distribution {
    fn default() -> Self {
        Distribution::Gaussian { sigma: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SicKind {
    #[default]
    Watersic,
    Gptq,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Accounting {
    #[default]
    Entropy,
    Rect,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    #[default]
    Waterfill,
    Diso,
    Drc,
    Gamma,
    Limit,
    Zador,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    #[default]
    CholDiag,
    DeltaHist,
    Nsm,
    Gap,
}

/// Every knob of every subcommand. Shape fields stay `None` until the
/// subcommand fills in its own default, so the echoed config is complete.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub format: OutputFormat,

    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub distribution: Distribution,

    pub n: Option<usize>,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub input_a: Option<PathBuf>,
    pub input_b: Option<PathBuf>,
    pub input_w: Option<PathBuf>,

    /// `exact`, `int<M>`, `e<E>m<M>` (dithered), `e<E>m<M>-plain`,
    /// `nvint4`, `nvfp4` or `nestquant`.
    pub scheme: String,
    pub q: u32,
    pub bank_size: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub rotate: bool,

    pub sic: SicKind,
    pub accounting: Accounting,
    pub rate: Option<f64>,
    pub alpha: Option<f64>,
    pub sweep: bool,
    pub rates: Vec<f64>,
    pub sigma: SigmaSource,
    pub sigma_w2: f64,
    pub estimator: EntropyEstimator,
    pub stem: String,

    pub curve: Curve,
    pub lambda: Vec<f64>,

    pub study: Study,
    pub trials: usize,
    pub low: f64,
    pub high: f64,
    pub lattice: String,
    pub samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            seed: 0,
            out: None,
            workers: None,
            format: OutputFormat::Json,
            rows: None,
            cols: None,
            distribution: Distribution::default(),
            n: None,
            a: None,
            b: None,
            input_a: None,
            input_b: None,
            input_w: None,
            scheme: "int8".into(),
            q: 16,
            bank_size: 16,
            r_min: 2.0,
            r_max: 6.0,
            rotate: false,
            sic: SicKind::Watersic,
            accounting: Accounting::Entropy,
            rate: None,
            alpha: None,
            sweep: false,
            rates: Vec::new(),
            sigma: SigmaSource::Wishart { dof: 0 },
            sigma_w2: 1.0,
            estimator: EntropyEstimator::Grassberger,
            stem: "weights".into(),
            curve: Curve::Waterfill,
            lambda: vec![3.0, 1.0],
            study: Study::CholDiag,
            trials: 50,
            low: 1.0,
            high: 10.0,
            lattice: "e8".into(),
            samples: 100_000,
        }
    }
}

/// Environment variable supplying the seed when neither flag nor file does.
pub const SEED_ENV: &str = "QMM_SEED";

impl RunConfig {
    /// Parse a config file on its own (defaults fill missing keys).
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(CliError::config)?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(CliError::config)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Merge `flags` over `file` over the environment seed over defaults.
    pub fn resolve(
        command: &str,
        file: Option<&str>,
        flags: toml::Table,
        env_seed: Option<&str>,
    ) -> Result<Self, CliError> {
        let mut table = toml::Table::new();
        if let Some(s) = env_seed {
            let seed: u64 = s.trim().parse().map_err(|_| {
                CliError::usage(format!("{SEED_ENV} must be an unsigned integer, got {s:?}"))
            })?;
            table.insert("seed".into(), seed_value(seed)?);
        }
        if let Some(text) = file {
            let parsed: toml::Table = text.parse().map_err(CliError::config)?;
            table.extend(parsed);
        }
        table.extend(flags);
        table.insert("command".into(), toml::Value::String(command.into()));
        Self::from_table(table)
    }

    /// Checks that do not depend on the subcommand's shape defaults.
    pub fn validate(&self) -> Result<(), CliError> {
        self.scheme()?;
        if self.workers == Some(0) {
            return Err(CliError::usage("workers must be at least 1"));
        }
        if !(self.sigma_w2 > 0.0) {
            return Err(CliError::usage("sigma_w2 must be positive"));
        }
        if let Some(r) = self.rate {
            if !r.is_finite() {
                return Err(CliError::usage("rate must be finite"));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0) || !a.is_finite() {
                return Err(CliError::usage("alpha must be positive and finite"));
            }
        }
        if self.rates.iter().any(|r| !r.is_finite()) {
            return Err(CliError::usage("rates must be finite"));
        }
        Ok(())
    }

    /// `scheme` parsed into the library's scheme type.
    pub fn scheme(&self) -> Result<Scheme, CliError> {
        parse_scheme(&self.scheme, self)
    }

    /// Fails when rotation is requested on a non-power-of-two length.
    pub fn check_rotation(&self, n: usize) -> Result<(), CliError> {
        if self.rotate && !n.is_power_of_two() {
            return Err(CliError::usage(format!(
                "rotation needs a power-of-two n, got {n}"
            )));
        }
        Ok(())
    }
}

/// TOML integers are `i64`; seeds above `i64::MAX` are rejected.
pub fn seed_value(seed: u64) -> Result<toml::Value, CliError> {
    i64::try_from(seed)
        .map(toml::Value::Integer)
        .map_err(|_| CliError::usage(format!("seed {seed} exceeds {}", i64::MAX)))
}

fn parse_scheme(id: &str, cfg: &RunConfig) -> Result<Scheme, CliError> {
    let bad = || CliError::usage(format!("unknown scheme {id:?}"));
    Ok(match id {
        "exact" => Scheme::Exact,
        "nvint4" => Scheme::NvInt4,
        "nvfp4" => Scheme::NvFp4,
        "nestquant" => Scheme::NestQuant {
            q: cfg.q,
            bank_size: cfg.bank_size,
            r_min: cfg.r_min,
            r_max: cfg.r_max,
        },
        _ => {
            if let Some(bits) = id.strip_prefix("int") {
                Scheme::Int {
                    bits: bits.parse().map_err(|_| bad())?,
                }
            } else if let Some(rest) = id.strip_prefix('e') {
                let (body, dither) = match rest.strip_suffix("-plain") {
                    Some(body) => (body, Dither::Fixed(1.0)),
                    None => (rest, Dither::Random),
                };
                let (e, m) = body.split_once('m').ok_or_else(bad)?;
                Scheme::Fp {
                    exponent_bits: e.parse().map_err(|_| bad())?,
                    mantissa_bits: m.parse().map_err(|_| bad())?,
                    dither,
                }
            } else {
                return Err(bad());
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, toml::Value)]) -> toml::Table {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    #[test]
    fn precedence_flag_file_env() {
        let file = "seed = 5\nscheme = \"e4m3\"\nrotate = true\n";
        let cfg = RunConfig::resolve("ipbench", Some(file), toml::Table::new(), Some("9")).unwrap();
        assert_eq!(cfg.seed, 5);
        assert!(cfg.rotate);
        let cfg = RunConfig::resolve(
            "ipbench",
            Some(file),
            flags(&[
                ("seed", toml::Value::Integer(7)),
                ("rotate", toml::Value::Boolean(false)),
            ]),
            Some("9"),
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert!(!cfg.rotate);
        let cfg = RunConfig::resolve("ipbench", None, toml::Table::new(), Some("9")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.command, "ipbench");
    }

    #[test]
    fn scheme_ids() {
        let cfg = RunConfig::default();
        assert_eq!(parse_scheme("int8", &cfg).unwrap(), Scheme::INT8);
        assert_eq!(parse_scheme("e4m3", &cfg).unwrap(), Scheme::FP8_DITHERED);
        assert_eq!(
            parse_scheme("nestquant", &cfg).unwrap(),
            Scheme::NESTQUANT_DEFAULT
        );
        assert!(matches!(
            parse_scheme("e5m2-plain", &cfg).unwrap(),
            Scheme::Fp { dither: Dither::Fixed(u), .. } if u == 1.0
        ));
        for bad in ["int", "fp8", "e4", "e4mx", ""] {
            assert!(parse_scheme(bad, &cfg).is_err(), "{bad}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("sede = 1").is_err());
        assert!(
            RunConfig::from_toml_str("distribution = { kind = \"spike\", count = 1 }").is_err()
        );
        let cfg = RunConfig::from_toml_str(
            "distribution = { kind = \"spike\", count = 2, magnitude = 50.0, sigma = 1.0 }\n\
             sigma = { kind = \"log_uniform\", low = 1.0, high = 10.0 }",
        )
        .unwrap();
        assert_eq!(
            cfg.distribution,
            Distribution::Spike {
                count: 2,
                magnitude: 50.0,
                sigma: 1.0
            }
        );
    }
}
