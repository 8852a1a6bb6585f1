//! Command-line front end: state generation, certification, threshold scans,
//! and volume diagnostics with machine-readable output.
//!
//! Exit codes: 0 certified / success, 1 inconclusive, 2 error, 3 no bracket.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sepcert::criteria::{ball_criterion, ellipsoid_criterion, trace_criterion, CertificateOutcome};
use sepcert::detect::{certify, natural_product_state, threshold_scan, OptimizerConfig};
use sepcert::error::SepError;
use sepcert::models::ising::{ising_rdm, Boundary, IsingSpec};
use sepcert::models::xstate::{x_state, XStateParams};
use sepcert::qmat::{eigh, exchange, HermitianMatrix, DEFAULT_RANK_TOL};
use sepcert::volume::log_volume_ratio;

#[derive(Parser)]
#[command(name = "sepcert", about = "Separability certification toolkit", version)]
struct Cli {
    /// Worker threads for optimizer restarts and scan probes
    /// (falls back to SEP_ELLIPSOID_JOBS, then all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for every random choice; identical seeds reproduce reports.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a state file in the matrix exchange format.
    Gen {
        #[command(subcommand)]
        model: GenModel,
    },
    /// Certify separability of a state file.
    Certify(CertifyArgs),
    /// Bisect a certification threshold over a state family.
    Scan {
        #[command(subcommand)]
        family: ScanFamily,
    },
    /// Ellipsoid-to-ball volume ratio of a reference spectrum.
    Volume(VolumeArgs),
}

#[derive(Subcommand)]
enum GenModel {
    /// Three-qubit X state under dephasing.
    XState(XStateArgs),
    /// Reduced density matrix of a transverse-field chain.
    IsingRdm(IsingArgs),
}

#[derive(Args)]
struct XStateArgs {
    /// Dephasing strength in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Parameter preset; `reference` is the worked example set.
    #[arg(long, value_enum, default_value_t = XPreset::Reference)]
    preset: XPreset,
    /// Override diagonal a-entries (comma-separated, 4 values).
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// Override diagonal b-entries (comma-separated, 4 values).
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<f64>>,
    /// Override anti-diagonal c-entries (comma-separated, 4 real values).
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum XPreset {
    Reference,
}

#[derive(Args)]
struct IsingArgs {
    /// Chain length.
    #[arg(long = "L")]
    length: usize,
    /// Transverse field strength.
    #[arg(long = "h")]
    field: f64,
    /// Temperature (0 = ground state).
    #[arg(long = "T", default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
    boundary: BoundaryArg,
    /// Either a site count (centered, adjacent) or an explicit
    /// comma-separated site list.
    #[arg(long, default_value = "3")]
    sites: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Args)]
struct CertifyArgs {
    file: PathBuf,
    /// Number of blocks for k-separability; defaults to full separability.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t = CriterionArg::Auto)]
    criterion: CriterionArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Ansatz terms for the optimizer stage.
    #[arg(long, default_value_t = 8)]
    u: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    /// Full pipeline: natural-product trace, then optimized reference.
    Auto,
    Trace,
    Ellipsoid,
    Ball,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Table,
}

#[derive(Subcommand)]
enum ScanFamily {
    /// Dephased three-qubit X state against its natural product reference.
    XDephase(ScanArgs),
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_enum, default_value_t = CriterionArg::Trace)]
    criterion: CriterionArg,
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 1.0)]
    to: f64,
    #[arg(long, default_value_t = 0.005)]
    tol: f64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VolumeArgs {
    /// Built-in reference spectra.
    #[arg(long, value_enum)]
    preset: Option<VolumePreset>,
    /// Explicit spectrum (comma-separated positive values).
    #[arg(long, value_delimiter = ',')]
    spectrum: Option<Vec<f64>>,
    /// State file; uses the spectrum of its natural product reference.
    #[arg(long)]
    state: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VolumePreset {
    /// Critical-chain three-site product spectrum (single-site 1/2 +- 1/pi).
    IsingH1,
    /// Natural product spectrum of the reference X state.
    XState,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs.or_else(|| {
        std::env::var("SEP_ELLIPSOID_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(SepError::NoBracket) => {
            eprintln!("error: endpoints do not bracket a verdict change");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, SepError> {
    match cli.command {
        Command::Gen { model } => match model {
            GenModel::XState(args) => gen_x_state(args),
            GenModel::IsingRdm(args) => gen_ising_rdm(args),
        },
        Command::Certify(args) => cmd_certify(args, cli.seed),
        Command::Scan { family } => match family {
            ScanFamily::XDephase(args) => cmd_scan_x(args),
        },
        Command::Volume(args) => cmd_volume(args),
    }
}

fn x_params(args: &XStateArgs) -> Result<XStateParams, SepError> {
    let mut params = match args.preset {
        XPreset::Reference => XStateParams::reference(),
    };
    let take4 = |v: &Option<Vec<f64>>, name: &str| -> Result<Option<[f64; 4]>, SepError> {
        match v {
            None => Ok(None),
            Some(xs) if xs.len() == 4 => Ok(Some([xs[0], xs[1], xs[2], xs[3]])),
            Some(xs) => Err(SepError::InvalidParameter(format!(
                "{} needs 4 values, got {}",
                name,
                xs.len()
            ))),
        }
    };
    if let Some(a) = take4(&args.a, "--a")? {
        params.a = a;
    }
    if let Some(b) = take4(&args.b, "--b")? {
        params.b = b;
    }
    if let Some(c) = take4(&args.c, "--c")? {
        params.c = [(c[0], 0.0), (c[1], 0.0), (c[2], 0.0), (c[3], 0.0)];
    }
    params.validate()?;
    params.dephase(args.p)
}

fn write_state(rho: &HermitianMatrix, out: &PathBuf, manifest: serde_json::Value) -> Result<(), SepError> {
    exchange::write_matrix_file(rho, out)?;
    let manifest_path = out.with_extension("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap() + "\n")?;
    Ok(())
}

fn gen_x_state(args: XStateArgs) -> Result<ExitCode, SepError> {
    let params = x_params(&args)?;
    let rho = x_state(&params)?;
    let manifest = serde_json::json!({
        "model": "x-state",
        "p": args.p,
        "params": params,
    });
    write_state(&rho, &args.out, manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_sites(arg: &str, length: usize) -> Result<Vec<usize>, SepError> {
    let parse_err = |s: &str| SepError::InvalidParameter(format!("bad site token '{}'", s));
    if arg.contains(',') {
        arg.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| parse_err(s)))
            .collect()
    } else {
        let count: usize = arg.trim().parse().map_err(|_| parse_err(arg))?;
        if count == 0 || count > length {
            return Err(SepError::InvalidParameter(format!(
                "site count {} invalid for chain of {}",
                count, length
            )));
        }
        let start = (length - count) / 2;
        Ok((start..start + count).collect())
    }
}

fn gen_ising_rdm(args: IsingArgs) -> Result<ExitCode, SepError> {
    let sites = parse_sites(&args.sites, args.length)?;
    let spec = IsingSpec {
        length: args.length,
        field: args.field,
        boundary: args.boundary.into(),
        temperature: args.temperature,
    };
    let rho = ising_rdm(&spec, &sites)?;
    let manifest = serde_json::json!({
        "model": "ising-rdm",
        "spec": spec,
        "sites": sites,
    });
    write_state(&rho, &args.out, manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn single_criterion(
    rho: &HermitianMatrix,
    dims: &[usize],
    which: CriterionArg,
) -> Result<CertificateOutcome, SepError> {
    let prod = natural_product_state(rho, dims)?;
    match which {
        CriterionArg::Trace => trace_criterion(rho, &prod, DEFAULT_RANK_TOL),
        CriterionArg::Ellipsoid => ellipsoid_criterion(rho, &prod, DEFAULT_RANK_TOL),
        CriterionArg::Ball => ball_criterion(rho, &prod),
        CriterionArg::Auto => unreachable!("auto handled by the pipeline"),
    }
}

fn cmd_certify(args: CertifyArgs, seed: u64) -> Result<ExitCode, SepError> {
    let rho = exchange::read_matrix_file(&args.file)?;
    let dims = rho
        .dims()
        .ok_or_else(|| SepError::Format("state file lacks subsystem dims".into()))?
        .to_vec();
    if dims.len() < 2 {
        return Err(SepError::Format(
            "state file must declare at least two subsystems".into(),
        ));
    }
    let k = args.k.unwrap_or(dims.len());

    let certified = if args.criterion == CriterionArg::Auto {
        let cfg = OptimizerConfig {
            ansatz_terms: args.u,
            max_iters: args.max_iters,
            restarts: args.restarts,
            seed,
            ..OptimizerConfig::default()
        };
        let report = certify(&rho, &dims, k, &cfg)?;
        match args.format {
            FormatArg::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
            FormatArg::Table => {
                println!("digest    {}", report.input_digest);
                println!("dims      {:?}  k = {}", report.dims, report.k);
                println!("negativity max {:.3e}", report.max_negativity);
                for s in &report.stages {
                    let (verdict, margin) = match &s.outcome {
                        Some(o) => (format!("{:?}", o.verdict), format!("{:+.6e}", o.margin)),
                        None => ("-".into(), "-".into()),
                    };
                    println!("stage {:<24} {:<20} margin {}", s.name, verdict, margin);
                    if let Some(n) = &s.note {
                        println!("      note: {}", n);
                    }
                }
                println!("verdict   {:?}", report.verdict);
            }
        }
        report.certified()
    } else {
        let outcome = single_criterion(&rho, &dims, args.criterion)?;
        match args.format {
            FormatArg::Json => println!("{}", serde_json::to_string_pretty(&outcome).unwrap()),
            FormatArg::Table => println!(
                "criterion {:<10} verdict {:?} margin {:+.6e}",
                outcome.criterion, outcome.verdict, outcome.margin
            ),
        }
        outcome.certified()
    };
    Ok(if certified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_scan_x(args: ScanArgs) -> Result<ExitCode, SepError> {
    if args.criterion == CriterionArg::Auto {
        return Err(SepError::InvalidParameter(
            "scan needs a concrete criterion (trace | ellipsoid | ball)".into(),
        ));
    }
    let base = XStateParams::reference();
    let probe = |p: f64| {
        let rho = x_state(&base.dephase(p)?)?;
        single_criterion(&rho, &[2, 2, 2], args.criterion)
    };
    let trace = threshold_scan(probe, args.from, args.to, args.tol)?;

    let mut csv = String::from("param,verdict,margin,criterion\n");
    for p in &trace.probes {
        let verdict = if p.certified { "certified" } else { "inconclusive" };
        csv.push_str(&format!(
            "{:.6},{},{:.9e},{}\n",
            p.param, verdict, p.margin, p.criterion
        ));
    }
    csv.push_str(&format!("# threshold={:.6}\n", trace.threshold));
    csv.push_str(&format!("# monotone={}\n", trace.monotone));
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{}", csv),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_volume(args: VolumeArgs) -> Result<ExitCode, SepError> {
    let selected = [args.preset.is_some(), args.spectrum.is_some(), args.state.is_some()]
        .iter()
        .filter(|&&x| x)
        .count();
    if selected != 1 {
        return Err(SepError::InvalidParameter(
            "give exactly one of --preset, --spectrum, --state".into(),
        ));
    }
    let spectrum: Vec<f64> = if let Some(preset) = args.preset {
        match preset {
            VolumePreset::IsingH1 => {
                let hi = 0.5 + 1.0 / std::f64::consts::PI;
                let lo = 0.5 - 1.0 / std::f64::consts::PI;
                let mut out = Vec::new();
                for &x in &[hi, lo] {
                    for &y in &[hi, lo] {
                        for &z in &[hi, lo] {
                            out.push(x * y * z);
                        }
                    }
                }
                out
            }
            VolumePreset::XState => {
                let rho = x_state(&XStateParams::reference())?;
                let prod = natural_product_state(&rho, &[2, 2, 2])?;
                eigh(&prod.assembled(), DEFAULT_RANK_TOL)?.eigenvalues
            }
        }
    } else if let Some(s) = args.spectrum {
        s
    } else {
        let rho = exchange::read_matrix_file(args.state.as_ref().unwrap())?;
        let dims = rho
            .dims()
            .ok_or_else(|| SepError::Format("state file lacks subsystem dims".into()))?
            .to_vec();
        let prod = natural_product_state(&rho, &dims)?;
        eigh(&prod.assembled(), DEFAULT_RANK_TOL)?.eigenvalues
    };
    let report = log_volume_ratio(&spectrum)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(ExitCode::SUCCESS)
}
