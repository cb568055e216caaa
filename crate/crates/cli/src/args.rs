use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use bgauss::experiment::BENCHMARK_EPSILONS;

/// Bad command line. `help` marks a requested help or version message, which
/// is printed to stdout with exit status 0.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct UsageError {
    pub message: String,
    pub help: bool,
}

impl UsageError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            help: false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.help {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Table,
}

/// Validated command with its inputs. Domain bounds are kept raw so that
/// invalid intervals surface as domain errors from the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    CalibrateUni {
        a: f64,
        b: f64,
        epsilon: f64,
        delta_q: f64,
    },
    CalibrateMulti {
        a: Vec<f64>,
        b: Vec<f64>,
        epsilon: f64,
        delta_q: f64,
    },
    Sample {
        a: Vec<f64>,
        b: Vec<f64>,
        epsilon: f64,
        delta_q: f64,
        s: Vec<f64>,
        seed: u64,
        count: usize,
    },
    Audit {
        a: Vec<f64>,
        b: Vec<f64>,
        epsilon: f64,
        delta_q: f64,
        grid_n: Option<usize>,
        sigma: Option<f64>,
    },
    Experiment {
        eps_list: Vec<f64>,
        k: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub format: OutputFormat,
}

#[derive(Parser)]
#[command(
    name = "bgauss",
    version,
    about = "Bounded Gaussian mechanism for epsilon-DP"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Calibrate the mechanism on an interval [a, b]
    CalibrateUni(UniArgs),
    /// Calibrate the mechanism on a box given by comma-separated bounds
    CalibrateMulti(BoxArgs),
    /// Draw seeded private releases for a true answer
    Sample(SampleArgs),
    /// Grid-audit the worst-case density ratio
    Audit(AuditArgs),
    /// Variance comparison on the graph-query benchmark
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, allow_negative_numbers = true)]
    eps: f64,
    /// l2 sensitivity of the query
    #[arg(long, allow_negative_numbers = true)]
    dq: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct UniArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BoxArgs {
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    a: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    b: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    domain: BoxArgs,
    /// True query answer, one value per coordinate
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    s: Vec<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    domain: BoxArgs,
    /// Points per axis; defaults to 200 on an interval and 60 on a box
    #[arg(long)]
    grid_n: Option<usize>,
    /// Audit this sigma instead of the calibrated one
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Number of edges by which adjacent graphs differ
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, value_delimiter = ',', default_values_t = BENCHMARK_EPSILONS)]
    eps_list: Vec<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

fn check_positive(name: &str, v: f64) -> Result<(), UsageError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(UsageError::new(format!(
            "--{name} must be a positive finite number, got {v}"
        )))
    }
}

fn check_common(c: &Common) -> Result<(), UsageError> {
    check_positive("eps", c.eps)?;
    check_positive("dq", c.dq)
}

fn check_box(d: &BoxArgs) -> Result<(), UsageError> {
    check_common(&d.common)?;
    if d.a.len() != d.b.len() {
        return Err(UsageError::new(format!(
            "--a has {} coordinates but --b has {}",
            d.a.len(),
            d.b.len()
        )));
    }
    Ok(())
}

/// Parse `argv` (program name first) into a validated configuration.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
        UsageError {
            message: e.render().to_string(),
            help,
        }
    })?;
    let (command, format) = match cli.command {
        Cmd::CalibrateUni(u) => {
            check_common(&u.common)?;
            (
                Command::CalibrateUni {
                    a: u.a,
                    b: u.b,
                    epsilon: u.common.eps,
                    delta_q: u.common.dq,
                },
                u.common.format,
            )
        }
        Cmd::CalibrateMulti(d) => {
            check_box(&d)?;
            (
                Command::CalibrateMulti {
                    a: d.a,
                    b: d.b,
                    epsilon: d.common.eps,
                    delta_q: d.common.dq,
                },
                d.common.format,
            )
        }
        Cmd::Sample(s) => {
            check_box(&s.domain)?;
            if s.s.len() != s.domain.a.len() {
                return Err(UsageError::new(format!(
                    "--s has {} coordinates, domain has {}",
                    s.s.len(),
                    s.domain.a.len()
                )));
            }
            (
                Command::Sample {
                    a: s.domain.a,
                    b: s.domain.b,
                    epsilon: s.domain.common.eps,
                    delta_q: s.domain.common.dq,
                    s: s.s,
                    seed: s.seed,
                    count: s.count,
                },
                s.domain.common.format,
            )
        }
        Cmd::Audit(a) => {
            check_box(&a.domain)?;
            if let Some(n) = a.grid_n {
                if n < bgauss::verify::MIN_GRID_N {
                    return Err(UsageError::new(format!(
                        "--grid-n must be at least {}",
                        bgauss::verify::MIN_GRID_N
                    )));
                }
            }
            if let Some(s) = a.sigma {
                check_positive("sigma", s)?;
            }
            (
                Command::Audit {
                    a: a.domain.a,
                    b: a.domain.b,
                    epsilon: a.domain.common.eps,
                    delta_q: a.domain.common.dq,
                    grid_n: a.grid_n,
                    sigma: a.sigma,
                },
                a.domain.common.format,
            )
        }
        Cmd::Experiment(e) => {
            if e.k == 0 {
                return Err(UsageError::new("--k must be at least 1"));
            }
            if e.eps_list.is_empty() {
                return Err(UsageError::new("--eps-list is empty"));
            }
            for &v in &e.eps_list {
                check_positive("eps-list", v)?;
            }
            (
                Command::Experiment {
                    eps_list: e.eps_list,
                    k: e.k,
                },
                e.format,
            )
        }
    };
    Ok(RunConfig { command, format })
}
