//! Command-line surface. Every flag is optional so that an absent flag
//! leaves the config-file value (or default) in place.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::{Table, Value};

use crate::config::{seed_value, Accounting, Curve, OutputFormat, SicKind, Study};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "qmm",
    version,
    about = "Quantized MatMul and weight-only quantization benchmarks"
)]
pub struct Cli {
    /// Master seed; falls back to the config file, then QMM_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path (a directory for `weightquant` artifacts).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with config keys; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random matrix (QMX1, or CSV with --format csv).
    Gen(GenArgs),
    /// Quantized inner-product error report for one scheme.
    Ipbench(IpbenchArgs),
    /// GPTQ or WaterSIC weight quantization, or a rate sweep.
    Weightquant(WeightquantArgs),
    /// Theoretical rate-distortion curves.
    Theory(TheoryArgs),
    /// Auxiliary studies.
    Study(StudyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Ipbench(_) => "ipbench",
            Command::Weightquant(_) => "weightquant",
            Command::Theory(_) => "theory",
            Command::Study(_) => "study",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DistKind {
    Gaussian,
    Uniform,
    Spike,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, value_enum)]
    pub dist: Option<DistKind>,
    /// Standard deviation (gaussian, spike) or half-width (uniform).
    #[arg(long, requires = "dist")]
    pub scale: Option<f64>,
    /// Outliers per column for `spike`.
    #[arg(long, requires = "dist")]
    pub spikes: Option<usize>,
    /// Outlier magnitude for `spike`.
    #[arg(long, requires = "dist")]
    pub magnitude: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// Vector length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Columns of A (or of W).
    #[arg(long)]
    pub a: Option<usize>,
    /// Columns of B.
    #[arg(long)]
    pub b: Option<usize>,
    /// Apply a random Hadamard rotation (n must be a power of two).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rotate: Option<bool>,
}

#[derive(Debug, Args)]
pub struct IpbenchArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Matrix file (QMX1 or CSV) for A; columns are the vectors.
    #[arg(long)]
    pub a_file: Option<PathBuf>,
    #[arg(long)]
    pub b_file: Option<PathBuf>,
    /// exact, int<M>, e<E>m<M>, e<E>m<M>-plain, nvint4, nvfp4, nestquant.
    #[arg(long)]
    pub scheme: Option<String>,
    /// NestQuant nesting ratio.
    #[arg(long)]
    pub q: Option<u32>,
    /// NestQuant scale-bank size.
    #[arg(long)]
    pub bank_size: Option<usize>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SigmaKind {
    Identity,
    Wishart,
    LogUniform,
}

#[derive(Debug, Args)]
pub struct SigmaArgs {
    /// Synthetic covariance family.
    #[arg(long, value_enum, conflicts_with = "sigma_file")]
    pub sigma: Option<SigmaKind>,
    /// Wishart degrees of freedom (0 means 2n).
    #[arg(long)]
    pub dof: Option<usize>,
    #[arg(long)]
    pub sigma_low: Option<f64>,
    #[arg(long)]
    pub sigma_high: Option<f64>,
    /// Covariance matrix file (QMX1 or CSV).
    #[arg(long)]
    pub sigma_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeightquantArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub sigma: SigmaArgs,
    /// Weight matrix file; rows must match the covariance.
    #[arg(long)]
    pub w_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub sic: Option<SicKind>,
    #[arg(long, value_enum)]
    pub accounting: Option<Accounting>,
    /// Target rate; sets alpha = sqrt(2 pi e sigma_w2) 2^-R.
    #[arg(long, conflicts_with = "alpha")]
    pub rate: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma_w2: Option<f64>,
    /// Entropy estimator for sweep rates: plug_in, miller_madow, grassberger.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Run all four schemes over the rate grid and emit RD curves.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub sweep: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Artifact file stem inside --out.
    #[arg(long)]
    pub stem: Option<String>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(value_enum)]
    pub curve: Option<Curve>,
    /// Covariance eigenvalues.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    #[arg(long)]
    pub sigma_w2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(value_enum)]
    pub study: Option<Study>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub sigma: SigmaArgs,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Spectrum lower end for chol-diag.
    #[arg(long)]
    pub low: Option<f64>,
    #[arg(long)]
    pub high: Option<f64>,
    /// z, z<d> or e8.
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
}

struct Lower(Table);

impl Lower {
    fn put(&mut self, key: &str, v: Option<impl Into<Value>>) {
        if let Some(v) = v {
            self.0.insert(key.into(), v.into());
        }
    }

    fn count(&mut self, key: &str, v: Option<usize>) -> Result<(), CliError> {
        if let Some(v) = v {
            let v = i64::try_from(v).map_err(|_| CliError::usage(format!("{key} is too large")))?;
            self.0.insert(key.into(), Value::Integer(v));
        }
        Ok(())
    }

    fn path(&mut self, key: &str, v: &Option<PathBuf>) {
        self.put(key, v.as_ref().map(|p| p.to_string_lossy().into_owned()));
    }

    fn named(&mut self, key: &str, v: Option<impl ValueEnum>) {
        if let Some(v) = v {
            let name = v.to_possible_value().expect("no skipped variants");
            self.0
                .insert(key.into(), Value::String(name.get_name().replace('-', "_")));
        }
    }

    fn shape(&mut self, s: &ShapeArgs) -> Result<(), CliError> {
        self.count("n", s.n)?;
        self.count("a", s.a)?;
        self.count("b", s.b)?;
        self.put("rotate", s.rotate);
        Ok(())
    }

    fn sigma(&mut self, s: &SigmaArgs) -> Result<(), CliError> {
        let mut t = Table::new();
        if let Some(p) = &s.sigma_file {
            t.insert("kind".into(), "file".into());
            t.insert("path".into(), p.to_string_lossy().into_owned().into());
        } else if let Some(kind) = s.sigma {
            match kind {
                SigmaKind::Identity => {
                    t.insert("kind".into(), "identity".into());
                }
                SigmaKind::Wishart => {
                    t.insert("kind".into(), "wishart".into());
                    let dof = i64::try_from(s.dof.unwrap_or(0))
                        .map_err(|_| CliError::usage("dof is too large"))?;
                    t.insert("dof".into(), dof.into());
                }
                SigmaKind::LogUniform => {
                    t.insert("kind".into(), "log_uniform".into());
                    t.insert("low".into(), s.sigma_low.unwrap_or(1.0).into());
                    t.insert("high".into(), s.sigma_high.unwrap_or(10.0).into());
                }
            }
        } else if s.dof.is_some() || s.sigma_low.is_some() || s.sigma_high.is_some() {
            return Err(CliError::usage(
                "--dof, --sigma-low and --sigma-high need --sigma",
            ));
        }
        if !t.is_empty() {
            self.0.insert("sigma".into(), Value::Table(t));
        }
        Ok(())
    }
}

impl Cli {
    /// Flags as a TOML table of config keys.
    pub fn flag_table(&self) -> Result<Table, CliError> {
        let mut l = Lower(Table::new());
        if let Some(seed) = self.seed {
            l.0.insert("seed".into(), seed_value(seed)?);
        }
        l.path("out", &self.out);
        l.count("workers", self.workers)?;
        l.named("format", self.format);
        match &self.command {
            Command::Gen(g) => {
                l.count("rows", g.rows)?;
                l.count("cols", g.cols)?;
                if let Some(kind) = g.dist {
                    let mut t = Table::new();
                    let scale = g.scale.unwrap_or(1.0);
                    match kind {
                        DistKind::Gaussian => {
                            t.insert("kind".into(), "gaussian".into());
                            t.insert("sigma".into(), scale.into());
                        }
                        DistKind::Uniform => {
                            t.insert("kind".into(), "uniform".into());
                            t.insert("half_width".into(), scale.into());
                        }
                        DistKind::Spike => {
                            let count = i64::try_from(g.spikes.unwrap_or(1))
                                .map_err(|_| CliError::usage("spikes is too large"))?;
                            t.insert("kind".into(), "spike".into());
                            t.insert("count".into(), count.into());
                            t.insert("magnitude".into(), g.magnitude.unwrap_or(100.0).into());
                            t.insert("sigma".into(), scale.into());
                        }
                    }
                    l.0.insert("distribution".into(), Value::Table(t));
                }
            }
            Command::Ipbench(i) => {
                l.shape(&i.shape)?;
                l.path("input_a", &i.a_file);
                l.path("input_b", &i.b_file);
                l.put("scheme", i.scheme.clone());
                l.put("q", i.q.map(i64::from));
                l.count("bank_size", i.bank_size)?;
                l.put("r_min", i.r_min);
                l.put("r_max", i.r_max);
            }
            Command::Weightquant(w) => {
                l.shape(&w.shape)?;
                l.sigma(&w.sigma)?;
                l.path("input_w", &w.w_file);
                l.named("sic", w.sic);
                l.named("accounting", w.accounting);
                l.put("rate", w.rate);
                l.put("alpha", w.alpha);
                l.put("sigma_w2", w.sigma_w2);
                l.put("estimator", w.estimator.clone());
                l.put("sweep", w.sweep);
                l.put("rates", w.rates.clone());
                l.put("stem", w.stem.clone());
            }
            Command::Theory(t) => {
                l.named("curve", t.curve);
                l.put("lambda", t.lambda.clone());
                l.put("rates", t.rates.clone());
                l.put("sigma_w2", t.sigma_w2);
            }
            Command::Study(s) => {
                if let Some(study) = s.study {
                    let name = study.to_possible_value().expect("no skipped variants");
                    l.0.insert("study".into(), name.get_name().into());
                }
                l.shape(&s.shape)?;
                l.sigma(&s.sigma)?;
                l.count("trials", s.trials)?;
                l.put("low", s.low);
                l.put("high", s.high);
                l.put("lattice", s.lattice.clone());
                l.count("samples", s.samples)?;
            }
        }
        Ok(l.0)
    }
}
