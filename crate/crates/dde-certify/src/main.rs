//! Command-line front end: reads a system JSON file, runs certificates,
//! spectra, asymptotic branches, or resonance constructions, and writes
//! machine-readable reports.
//!
//! Exit codes: 0 = certified stable/hyperbolic (or command succeeded),
//! 1 = certified not, 2 = inconclusive, 11 = usage/parse error,
//! 12 = numerical failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use dde_certify::asymptotic::{
    assemble_hierarchical_spectrum, branches_one_delay, branches_to_csv, default_omega_grid,
    scale_to_complex_plane, AsymptoticBranch, BranchScale,
};
use dde_certify::charroots::{compute_spectrum, spectrum_to_csv, DiscretizationConfig};
use dde_certify::criteria::{
    certify_absolute_hyperbolicity, certify_absolute_stability, certify_scalar, TorusSweepConfig,
};
use dde_certify::model::{Certificate, DdeSystem, DelayVector, PhaseVector, Verdict};
use dde_certify::resonance::{build_family, find_resonance_witness};

const EXIT_STABLE: i32 = 0;
const EXIT_NOT: i32 = 1;
const EXIT_INCONCLUSIVE: i32 = 2;
const EXIT_USAGE: i32 = 11;
const EXIT_NUMERICAL: i32 = 12;

#[derive(Parser)]
#[command(
    name = "dde-certify",
    version,
    about = "Delay-independent stability and hyperbolicity certificates for linear DDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify absolute (delay-independent) stability.
    Certify(CertifyArgs),
    /// Certify absolute hyperbolicity.
    Hyperbolic(CertifyArgs),
    /// Characteristic roots at a given delay vector.
    Spectrum(SpectrumArgs),
    /// Asymptotic continuous spectrum branches.
    Asymptotic(AsymptoticArgs),
    /// Resonance witness search and resonant delay families.
    Resonances(ResonancesArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// System JSON file: {"n": int, "m": int, "A": [matrix, ...]},
    /// entries either re or [re, im].
    system: PathBuf,
    /// Margin tolerance (default 1e-9; env DDE_CERTIFY_TOL).
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads (default all cores; env DDE_CERTIFY_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Coarse grid points per torus dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Skip the scalar closed-form fast path.
    #[arg(long)]
    no_fast_path: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated delays tau_1,...,tau_m.
    #[arg(long, required = true)]
    tau: String,
    /// Chebyshev nodes for the discretization (default scale-dependent).
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args)]
struct AsymptoticArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Frequency range "a:b" (default symmetric certificate bound).
    #[arg(long)]
    omega_range: Option<String>,
    /// Number of omega samples.
    #[arg(long, default_value_t = 2049)]
    points: usize,
    /// Scale curves to the complex plane with this single delay.
    #[arg(long)]
    tau: Option<f64>,
    /// Scale curves hierarchically with this epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Assemble the full hierarchical union (multi-delay systems).
    #[arg(long)]
    hierarchical: bool,
}

#[derive(Args)]
struct ResonancesArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Integer index range "lo:hi" for the delay families.
    #[arg(long, default_value = "1:3")]
    n_range: String,
    /// Also construct hierarchical delays with this epsilon target.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Use this witness frequency instead of searching (must be nonzero).
    #[arg(long)]
    omega0: Option<f64>,
    /// Comma-separated witness phases (used with --omega0).
    #[arg(long)]
    phi: Option<String>,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
    fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    input_digest: String,
    config_echo: serde_json::Value,
    result: serde_json::Value,
    timings_ms: serde_json::Value,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(EXIT_USAGE);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    std::process::exit(code);
}

fn env_f64(name: &str) -> Option<f64> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn env_usize(name: &str) -> Option<usize> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn init_threads(common: &CommonArgs) -> Result<usize, CliError> {
    let threads = common
        .threads
        .or_else(|| env_usize("DDE_CERTIFY_THREADS"))
        .unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    Ok(threads)
}

fn load_system(common: &CommonArgs) -> Result<(DdeSystem, String), CliError> {
    let bytes = std::fs::read(&common.system)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", common.system.display())))?;
    let digest = format!("{:x}", Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::usage("system file is not valid UTF-8"))?;
    let sys = DdeSystem::from_json_str(&text).map_err(|e| CliError::usage(e.to_string()))?;
    Ok((sys, digest))
}

fn sweep_config(common: &CommonArgs) -> TorusSweepConfig {
    let mut cfg = TorusSweepConfig::default();
    if let Some(tol) = common.tol.or_else(|| env_f64("DDE_CERTIFY_TOL")) {
        cfg.margin_tolerance = tol;
    }
    if let Some(grid) = common.grid {
        cfg.coarse_points_per_dim = grid;
    }
    cfg
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::usage(format!("{what} must be \"a:b\", got {text}")));
    }
    let a = parts[0]
        .parse()
        .map_err(|_| CliError::usage(format!("bad {what} bound: {}", parts[0])))?;
    let b = parts[1]
        .parse()
        .map_err(|_| CliError::usage(format!("bad {what} bound: {}", parts[1])))?;
    Ok((a, b))
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad {what} entry: {t}")))
        })
        .collect()
}

fn write_output(common: &CommonArgs, text: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            // tolerate closed pipes (e.g. piping into `head`)
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other
                    .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}"))),
            }
        }
    }
}

fn certificate_json(cert: &Certificate) -> serde_json::Value {
    serde_json::to_value(cert).expect("certificate serialization")
}

fn verdict_exit(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::CertifiedStable => EXIT_STABLE,
        Verdict::CertifiedNot => EXIT_NOT,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn emit_report(
    common: &CommonArgs,
    command: &str,
    digest: String,
    config_echo: serde_json::Value,
    result: serde_json::Value,
    started: Instant,
    csv: Option<String>,
) -> Result<(), CliError> {
    if common.format == Format::Csv {
        let Some(csv) = csv else {
            return Err(CliError::usage(format!(
                "--format csv is not available for `{command}`"
            )));
        };
        return write_output(common, &csv);
    }
    let report = RunReport {
        command: command.to_string(),
        input_digest: digest,
        config_echo,
        result,
        timings_ms: json!({ "total": started.elapsed().as_millis() as u64 }),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serialization");
    write_output(common, &text)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Certify(args) => cmd_certify(args, false),
        Command::Hyperbolic(args) => cmd_certify(args, true),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Asymptotic(args) => cmd_asymptotic(args),
        Command::Resonances(args) => cmd_resonances(args),
    }
}

fn cmd_certify(args: CertifyArgs, hyperbolic: bool) -> Result<i32, CliError> {
    let started = Instant::now();
    init_threads(&args.common)?;
    let (sys, digest) = load_system(&args.common)?;
    let cfg = sweep_config(&args.common);

    let fast_path = !hyperbolic && sys.dim() == 1 && !args.no_fast_path;
    let cert = if hyperbolic {
        certify_absolute_hyperbolicity(&sys, &cfg)
            .map_err(|e| CliError::numerical(e.to_string()))?
    } else if fast_path {
        certify_scalar(&sys).map_err(|e| CliError::numerical(e.to_string()))?
    } else {
        certify_absolute_stability(&sys, &cfg).map_err(|e| CliError::numerical(e.to_string()))?
    };

    let command = if hyperbolic { "hyperbolic" } else { "certify" };
    let config_echo = json!({
        "tol": cfg.margin_tolerance,
        "grid": cfg.coarse_points_per_dim,
        "refine_restarts": cfg.refine_restarts,
        "fast_path": fast_path,
    });
    let code = verdict_exit(cert.verdict);
    emit_report(
        &args.common,
        command,
        digest,
        config_echo,
        certificate_json(&cert),
        started,
        None,
    )?;
    Ok(code)
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    init_threads(&args.common)?;
    let (sys, digest) = load_system(&args.common)?;
    let taus = DelayVector::new(parse_f64_list(&args.tau, "--tau")?)
        .map_err(|e| CliError::usage(e.to_string()))?;
    if taus.len() != sys.delay_count() {
        return Err(CliError::usage(format!(
            "--tau has {} entries, system has m = {}",
            taus.len(),
            sys.delay_count()
        )));
    }
    let mut cfg = DiscretizationConfig::default_for(&sys, &taus);
    if let Some(nodes) = args.nodes {
        cfg.nodes = nodes;
    }
    let report =
        compute_spectrum(&sys, &taus, &cfg).map_err(|e| CliError::numerical(e.to_string()))?;
    let csv = spectrum_to_csv(&report);
    let config_echo = serde_json::to_value(&cfg).expect("config echo");
    let result = json!({
        "report": report,
        "csv": csv,
    });
    emit_report(
        &args.common,
        "spectrum",
        digest,
        config_echo,
        result,
        started,
        Some(csv),
    )?;
    Ok(EXIT_STABLE)
}

fn scaled_csv(branches: &[AsymptoticBranch], scale: BranchScale) -> Result<String, CliError> {
    let mut out = String::from("level,branch,omega,gamma,re_z,im_z\n");
    for b in branches {
        let z = scale_to_complex_plane(b, scale).map_err(|e| CliError::usage(e.to_string()))?;
        for (s, zz) in b.samples.iter().zip(z.iter()) {
            let _ = writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
                b.level, b.branch_index, s.omega, s.gamma, zz.re, zz.im
            );
        }
    }
    Ok(out)
}

fn cmd_asymptotic(args: AsymptoticArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    init_threads(&args.common)?;
    let (sys, digest) = load_system(&args.common)?;
    if args.tau.is_some() && args.epsilon.is_some() {
        return Err(CliError::usage("--tau and --epsilon are mutually exclusive"));
    }

    let grid: Vec<f64> = match &args.omega_range {
        Some(text) => {
            let (a, b) = parse_pair(text, "--omega-range")?;
            if !(a < b) {
                return Err(CliError::usage("--omega-range needs a < b"));
            }
            let p = args.points.max(3);
            (0..p)
                .map(|i| a + (b - a) * i as f64 / (p - 1) as f64)
                .collect()
        }
        None => default_omega_grid(&sys, args.points),
    };

    let (branches, strongly_unstable): (Vec<AsymptoticBranch>, Vec<Complex64>) =
        if args.hierarchical {
            let h = assemble_hierarchical_spectrum(&sys, &grid, &[])
                .map_err(|e| CliError::numerical(e.to_string()))?;
            (h.branches, h.strongly_unstable)
        } else {
            (
                branches_one_delay(&sys, &grid)
                    .map_err(|e| CliError::numerical(e.to_string()))?,
                Vec::new(),
            )
        };

    let scale = args
        .tau
        .map(BranchScale::Delay)
        .or(args.epsilon.map(BranchScale::Epsilon));
    let csv = match scale {
        Some(s) => scaled_csv(&branches, s)?,
        None => branches_to_csv(&branches),
    };
    let config_echo = json!({
        "points": args.points,
        "omega_range": args.omega_range,
        "tau": args.tau,
        "epsilon": args.epsilon,
        "hierarchical": args.hierarchical,
    });
    let result = json!({
        "branches": branches,
        "strongly_unstable": strongly_unstable.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "csv": csv,
    });
    emit_report(
        &args.common,
        "asymptotic",
        digest,
        config_echo,
        result,
        started,
        Some(csv),
    )?;
    Ok(EXIT_STABLE)
}

fn cmd_resonances(args: ResonancesArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    init_threads(&args.common)?;
    let (sys, digest) = load_system(&args.common)?;
    let cfg = sweep_config(&args.common);
    let (lo, hi) = parse_pair(&args.n_range, "--n-range")?;
    let (lo, hi) = (lo as i64, hi as i64);
    if lo > hi {
        return Err(CliError::usage("--n-range needs lo <= hi"));
    }

    let witness = match (args.omega0, &args.phi) {
        (Some(w0), Some(phi_text)) => {
            if w0 == 0.0 {
                return Err(CliError::usage("--omega0 must be nonzero"));
            }
            let phis = parse_f64_list(phi_text, "--phi")?;
            if phis.len() != sys.delay_count() {
                return Err(CliError::usage(format!(
                    "--phi has {} entries, system has m = {}",
                    phis.len(),
                    sys.delay_count()
                )));
            }
            Some((w0, PhaseVector::new(phis)))
        }
        (Some(0.0), None) => return Err(CliError::usage("--omega0 must be nonzero")),
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::usage("--omega0 and --phi must be given together"))
        }
        (None, None) => {
            find_resonance_witness(&sys, &cfg).map_err(|e| CliError::numerical(e.to_string()))?
        }
    };

    let config_echo = json!({
        "tol": cfg.margin_tolerance,
        "grid": cfg.coarse_points_per_dim,
        "n_range": [lo, hi],
        "epsilon": args.epsilon,
    });
    let result = match witness {
        None => json!({ "witness": null, "note": "no resonance found" }),
        Some((w0, phi)) => {
            let ranges = vec![(lo, hi); sys.delay_count()];
            let family = build_family(&sys, w0, &phi, &ranges, args.epsilon)
                .map_err(|e| CliError::numerical(e.to_string()))?;
            json!({ "witness": { "omega0": w0, "phi": phi }, "family": family })
        }
    };
    emit_report(
        &args.common,
        "resonances",
        digest,
        config_echo,
        result,
        started,
        None,
    )?;
    Ok(EXIT_STABLE)
}
