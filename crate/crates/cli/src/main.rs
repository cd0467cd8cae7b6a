//! `pqi`: command-line front end for poisson-qi.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use poisson_qi::channels::apply;
use poisson_qi::divergences::{classical_divergences, divergence, DEFAULT_TOL_S};
use poisson_qi::estimation::{helstrom, DEFAULT_DELTA_REG, DEFAULT_FD_STEP};
use poisson_qi::imaging::{helstrom_sweep, normalized_helstrom, ImagingConfig};
use poisson_qi::io::{
    channel_output_json, format_f64, parse_channel, parse_density, parse_family, parse_hermitian, parse_intensity,
    parse_intensity_vector, parse_list, real_rows, to_json, write_csv, Family,
};
use poisson_qi::kac::sample;
use poisson_qi::oracle::{convergence_sweep, ConvergenceKind};
use poisson_qi::psd::{spectral_decompose, validate_psd};
use poisson_qi::state::intensity_from_density;
use poisson_qi::{DivergenceKind, Error, Tolerances};

#[derive(Parser)]
#[command(name = "pqi", version, about = "Poisson quantum information: divergences, Helstrom information, channels and sampling")]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TolArgs {
    /// Relative Hermiticity tolerance
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_herm: f64,
    /// Relative negative-eigenvalue tolerance
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_psd: f64,
    /// Relative support threshold
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol_supp: f64,
    /// Reconstruction tolerance
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_recon: f64,
    /// Chernoff optimizer tolerance in s
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_S)]
    tol_s: f64,
}

impl TolArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            herm: self.tol_herm,
            psd: self.tol_psd,
            supp: self.tol_supp,
            recon: self.tol_recon,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DivKind {
    Fidelity,
    Bures,
    Chernoff,
    ChernoffDistance,
    Alpha,
    Kl,
}

impl From<DivKind> for DivergenceKind {
    fn from(k: DivKind) -> Self {
        match k {
            DivKind::Fidelity => DivergenceKind::Fidelity,
            DivKind::Bures => DivergenceKind::BuresSq,
            DivKind::Chernoff => DivergenceKind::ChernoffS,
            DivKind::ChernoffDistance => DivergenceKind::ChernoffDistance,
            DivKind::Alpha => DivergenceKind::AlphaDiv,
            DivKind::Kl => DivergenceKind::RelEntropy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvKind {
    Fidelity,
    Chernoff,
    Kl,
    Helstrom,
}

impl From<ConvKind> for ConvergenceKind {
    fn from(k: ConvKind) -> Self {
        match k {
            ConvKind::Fidelity => ConvergenceKind::Fidelity,
            ConvKind::Chernoff => ConvergenceKind::Chernoff,
            ConvKind::Kl => ConvergenceKind::Kl,
            ConvKind::Helstrom => ConvergenceKind::Helstrom,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Divergence between two intensity operators (or intensity vectors with --classical)
    Divergence {
        #[arg(long, value_enum)]
        kind: DivKind,
        /// Order s for chernoff and alpha
        #[arg(long)]
        s: Option<f64>,
        /// First argument: intensity-operator JSON file (or intensity vector with --classical)
        #[arg(long)]
        a: String,
        /// Second argument, same format as --a
        #[arg(long)]
        b: String,
        /// Treat --a and --b as intensity vectors (file or inline list)
        #[arg(long)]
        classical: bool,
    },
    /// Helstrom information matrix of a parametric family
    Helstrom {
        #[arg(long)]
        family: PathBuf,
        /// Comma-separated parameter values
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
    },
    /// Apply a channel to an intensity operator
    Channel {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        gamma: PathBuf,
    },
    /// Finite-M values against their Poisson limits (CSV)
    Converge {
        #[arg(long, value_enum)]
        kind: ConvKind,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        nprime: f64,
        #[arg(long)]
        tau1: PathBuf,
        #[arg(long)]
        tau1p: PathBuf,
        /// Comma-separated ascending mode counts, e.g. 1e2,1e3,1e4
        #[arg(long)]
        m_list: String,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
    },
    /// Sample Poisson bin counts (CSV, one row per trial)
    Sample {
        /// Intensities: file or inline list such as 0.5,1.5
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized Helstrom information of the two-source imaging problem (CSV)
    ImagingSweep {
        #[arg(long, default_value_t = 0.05)]
        theta_min: f64,
        #[arg(long, default_value_t = 8.0)]
        theta_max: f64,
        #[arg(long, default_value_t = 0.05)]
        theta_step: f64,
        /// Comma-separated real degrees of coherence
        #[arg(long, allow_hyphen_values = true)]
        gamma_list: Option<String>,
        #[arg(long, default_value_t = DEFAULT_DELTA_REG)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        n0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a matrix document is Hermitian and PSD
    Validate {
        #[arg(long)]
        matrix: PathBuf,
    },
}

type CliResult = Result<(), Failure>;

enum Failure {
    Domain(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// A file path if it exists, the literal text otherwise.
fn read_or_inline(arg: &str) -> Result<String, Failure> {
    let p = Path::new(arg);
    if p.is_file() {
        read(p)
    } else {
        Ok(arg.to_string())
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn theta_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || !(max >= min) {
        return Err(Error::InvalidConfig("need theta-step > 0 and theta-max >= theta-min".into()).into());
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| min + step * k as f64).collect())
}

fn run(cli: Cli) -> CliResult {
    let tol = cli.tol.tolerances();
    let tol_s = cli.tol.tol_s;
    let mut stdout = io::stdout().lock();
    match cli.cmd {
        Cmd::Divergence { kind, s, a, b, classical } => {
            let report = if classical {
                let (a, b) = (parse_intensity_vector(&read_or_inline(&a)?)?, parse_intensity_vector(&read_or_inline(&b)?)?);
                classical_divergences(&a, &b, kind.into(), s, tol_s)?
            } else {
                let (a, b) = (parse_intensity(&read(Path::new(&a))?, &tol)?, parse_intensity(&read(Path::new(&b))?, &tol)?);
                divergence(&a, &b, kind.into(), s, &tol, tol_s)?
            };
            writeln!(stdout, "{}", to_json(&report)?)?;
        }
        Cmd::Helstrom { family, theta, fd_step } => {
            let theta = parse_list(&theta)?;
            let k = match parse_family(&read(&family)?, &tol)? {
                Family::Imaging { n0, gamma, delta } => {
                    if theta.len() != 1 {
                        return Err(Error::ParameterIndex { index: theta.len(), q: 1 }.into());
                    }
                    let k = normalized_helstrom(n0, gamma, theta[0], delta)? * n0 / 2.0;
                    vec![vec![k]]
                }
                Family::Linear(f) => real_rows(helstrom(&f, &theta, fd_step)?.matrix()),
                Family::Grid(f) => real_rows(helstrom(&f, &theta, fd_step)?.matrix()),
            };
            writeln!(stdout, "{}", to_json(&json!({ "theta": theta, "K": k }))?)?;
        }
        Cmd::Channel { spec, gamma } => {
            let ch = parse_channel(&read(&spec)?, &tol)?;
            let g = parse_intensity(&read(&gamma)?, &tol)?;
            writeln!(stdout, "{}", channel_output_json(&apply(&ch, &g)?)?)?;
        }
        Cmd::Converge {
            kind,
            n,
            nprime,
            tau1,
            tau1p,
            m_list,
            s,
        } => {
            let a = intensity_from_density(&parse_density(&read(&tau1)?, &tol)?, n)?;
            let b = intensity_from_density(&parse_density(&read(&tau1p)?, &tol)?, nprime)?;
            let ms = parse_list(&m_list)?
                .into_iter()
                .map(|m| {
                    if m >= 1.0 && m.fract() == 0.0 && m <= u64::MAX as f64 {
                        Ok(m as u64)
                    } else {
                        Err(Error::InvalidConfig(format!("mode count {m} is not a positive integer")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rows = convergence_sweep(kind.into(), &a, &b, &ms, s)?;
            write_csv(
                &mut stdout,
                &["M", "finite", "limit", "abs_error"],
                rows.iter()
                    .map(|r| vec![r.m.to_string(), format_f64(r.finite), format_f64(r.limit), format_f64(r.abs_error)]),
            )?;
        }
        Cmd::Sample { lambda, trials, seed, out } => {
            let lambda = parse_intensity_vector(&read_or_inline(&lambda)?)?;
            let batch = sample(&lambda, trials, seed)?;
            let header: Vec<String> = (0..lambda.len()).map(|j| format!("bin{j}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut w = output(&out)?;
            write_csv(
                &mut w,
                &header,
                batch.counts.iter().map(|r| r.iter().map(u64::to_string).collect()),
            )?;
            w.flush()?;
        }
        Cmd::ImagingSweep {
            theta_min,
            theta_max,
            theta_step,
            gamma_list,
            delta,
            n0,
            out,
        } => {
            let mut cfg = ImagingConfig {
                n0,
                theta_grid: theta_grid(theta_min, theta_max, theta_step)?,
                delta_reg: delta,
                ..ImagingConfig::default()
            };
            if let Some(g) = gamma_list {
                cfg.gamma_grid = parse_list(&g)?.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
            }
            let rows = helstrom_sweep(&cfg)?;
            let mut w = output(&out)?;
            write_csv(
                &mut w,
                &["gamma", "theta", "K_normalized"],
                rows.iter()
                    .map(|r| vec![format_f64(r.gamma.re), format_f64(r.theta), format_f64(r.k_normalized)]),
            )?;
            w.flush()?;
        }
        Cmd::Validate { matrix } => {
            let h = parse_hermitian(&read(&matrix)?, &tol)?;
            let eig: Vec<f64> = spectral_decompose(&h).eigenvalues.iter().copied().collect();
            let psd = validate_psd(&h, tol.psd).is_ok();
            let report = json!({
                "hermitian": true,
                "psd": psd,
                "trace": h.trace(),
                "eigenvalues": eig,
            });
            writeln!(stdout, "{}", to_json(&report)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
