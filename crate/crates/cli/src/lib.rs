//! `wdfs` command-line tool: generate model channels, decompose their
//! algebras, verify reports, compute commutant bases, and search for
//! approximate protected subsystems.
//!
//! Exit codes: 0 success, 2 usage, 3 dimension cap, 4 unverified
//! decomposition (diagnostics report still written), 5 verification
//! failure, 6 optimizer warning under `--strict`, 1 anything else.

pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wdfs_core::adfs::{
    adfs_search, AdfsProblem, InitKind, OptimizerConfig, SearchPlan, Termination, WarmStartSpec,
};
use wdfs_core::algebra::{commutant_basis, hermitianize};
use wdfs_core::channels::perturbed_collective;
use wdfs_core::wedderburn::{decompose, decompose_commutant, verify_structure, Side, Tolerances};
use wdfs_core::{tol, Error, KrausChannel};

use io::{
    AdfsReport, AdfsRunRow, DecompositionReport, MatrixKind, MatrixSetFile, matrix_to_payload,
};

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionTooLarge { .. } => 3,
            Error::DecompositionUnverified { .. } => 4,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "wdfs", version, about = "Wedderburn decomposition and DFS toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Generate a model channel as a Kraus matrix-set file
    Gen(GenArgs),
    /// Decompose the *-algebra generated by a matrix-set file
    Decompose(DecomposeArgs),
    /// Re-verify a decomposition report against its generator file
    Verify(VerifyArgs),
    /// Search for exact or approximate protected subsystems
    Adfs(AdfsArgs),
    /// Compute a commutant basis and dump it as a matrix-set file
    Commutant(CommutantArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Model {
    Collective,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "collective")]
    pub model: Model,
    /// Qubit count (dimension 2^q)
    #[arg(long)]
    pub qubits: usize,
    /// Perturbation strength ε; 0 gives the exact model
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    /// Perturbation seed (default: $WDFS_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SideArg {
    Algebra,
    Commutant,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Which algebra to decompose: the generators' own, or their commutant
    #[arg(long, value_enum, default_value = "algebra")]
    pub side: SideArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the eigenvalue clustering tolerance factor
    #[arg(long)]
    pub tol_eig: Option<f64>,
    /// Override the block-coupling tolerance
    #[arg(long)]
    pub tol_block: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct AdfsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Candidate shape as noisy,logical (for example 2,2)
    #[arg(long, value_parser = parse_shape)]
    pub shape: (usize, usize),
    /// Decomposition report of an unperturbed reference channel
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Random restart count (default 6, or 0 when warm-starting)
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Treat line-search failures as an error (exit 6)
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CommutantArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated integers, for example 2,2".into());
    }
    let n1 = parts[0].trim().parse::<usize>().map_err(|e| e.to_string())?;
    let m1 = parts[1].trim().parse::<usize>().map_err(|e| e.to_string())?;
    Ok((n1, m1))
}

/// Seed precedence: explicit flag, then $WDFS_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("WDFS_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|_| Failure::new(2, format!("WDFS_SEED is not a valid seed: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn load_generators(path: &PathBuf) -> Result<(MatrixSetFile, wdfs_core::GeneratorSet), Failure> {
    let msf = MatrixSetFile::read(path)?;
    for w in msf.validate()? {
        eprintln!("warning: {w}");
    }
    let mats = msf.matrices()?;
    let gs = hermitianize(&mats, msf.label.clone())?;
    Ok((msf, gs))
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Decompose(args) => cmd_decompose(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Adfs(args) => cmd_adfs(args),
        Cmd::Commutant(args) => cmd_commutant(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let seed = resolve_seed(args.seed)?;
    let Model::Collective = args.model;
    let channel = perturbed_collective(args.qubits, args.perturb, seed)?;
    let perturbed = args.perturb != 0.0;
    let label = if perturbed {
        format!("collective-{}-perturbed", args.qubits)
    } else {
        format!("collective-{}", args.qubits)
    };
    let file = MatrixSetFile::from_matrices(
        MatrixKind::Kraus,
        label,
        perturbed.then_some(seed),
        channel.kraus(),
    );
    file.write(&args.out)?;
    println!(
        "wrote {} Kraus operators, dimension {} (model collective, qubits {}, perturb {}, seed {seed})",
        file.ops.len(),
        file.n,
        args.qubits,
        args.perturb,
    );
    Ok(())
}

fn cmd_decompose(args: DecomposeArgs) -> Result<(), Failure> {
    let seed = resolve_seed(args.seed)?;
    let (msf, gs) = load_generators(&args.input)?;
    let mut cfg = Tolerances::default();
    if let Some(t) = args.tol_eig {
        cfg.eig_factor = t;
    }
    if let Some(t) = args.tol_block {
        cfg.block = t;
    }
    let side = match args.side {
        SideArg::Algebra => Side::Algebra,
        SideArg::Commutant => Side::Commutant,
    };
    let outcome = match side {
        Side::Algebra => decompose(&gs, seed, &cfg),
        Side::Commutant => decompose_commutant(&gs, seed, &cfg).map(|(dec, _)| dec),
    };
    let dec = match outcome {
        Ok(dec) => dec,
        Err(Error::DecompositionUnverified { attempts, residual }) => {
            let report = DecompositionReport::unverified(
                msf.label, side, gs.dim(), seed, attempts, residual,
            );
            report.write(&args.out)?;
            return Err(Failure::new(
                4,
                format!(
                    "no attempt verified after {attempts} tries (best residual {residual:.3e}); \
                     diagnostics written to {}",
                    args.out.display()
                ),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    let report = DecompositionReport::from_decomposition(msf.label, seed, &dec, &gs);
    report.check_consistency()?;
    report.write(&args.out)?;
    println!(
        "side {:?}, {} component(s), residual {:.3e}, attempts {}",
        report.side,
        report.components.len(),
        report.residual,
        report.attempts
    );
    for (i, c) in report.components.iter().enumerate() {
        println!(
            "  component {i}: blocks {}x{}, multiplicity {}, offset {}",
            c.n_i, c.n_i, c.m_i, c.offset
        );
    }
    println!(
        "counting: sum n*m = {}, dim algebra = {}, dim commutant = {}",
        report.counting.sum_nm, report.counting.dim_algebra, report.counting.dim_commutant
    );
    println!("useful DFS components: {:?}", report.useful_dfs);
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let (_, gs) = load_generators(&args.input)?;
    let report = DecompositionReport::read(&args.report)?;
    let breach = |msg: String| Failure::new(5, msg);
    report
        .check_consistency()
        .map_err(|e| breach(e.to_string()))?;
    let ws = report.structure().map_err(|e| breach(e.to_string()))?;
    if ws.dim() != gs.dim() {
        return Err(breach(format!(
            "report dimension {} does not match generators ({})",
            ws.dim(),
            gs.dim()
        )));
    }
    let residual = verify_structure(&gs, &ws);
    println!("residual {residual:.6e} (stored {:.6e})", report.residual);
    if (residual - report.residual).abs() > 1e-12 {
        return Err(breach(format!(
            "recomputed residual {residual:.6e} disagrees with stored {:.6e}",
            report.residual
        )));
    }
    if residual > tol::VERIFY_RESIDUAL {
        return Err(breach(format!(
            "residual {residual:.6e} exceeds {:.0e}",
            tol::VERIFY_RESIDUAL
        )));
    }
    println!("ok");
    Ok(())
}

fn cmd_adfs(args: AdfsArgs) -> Result<(), Failure> {
    let seed = resolve_seed(args.seed)?;
    let msf = MatrixSetFile::read(&args.input)?;
    for w in msf.validate()? {
        eprintln!("warning: {w}");
    }
    if msf.kind != MatrixKind::Kraus {
        return Err(Failure::new(
            1,
            "adfs requires a kraus matrix-set file".to_string(),
        ));
    }
    let channel = KrausChannel::new(msf.matrices()?)?;
    let n = channel.dim();
    let (n1, m1) = args.shape;
    let problem = AdfsProblem::new(channel, n1, m1)?;

    let reference = match &args.warm_start {
        Some(path) => {
            let rep = DecompositionReport::read(path)?;
            rep.check_consistency()?;
            Some(rep.structure()?)
        }
        None => None,
    };
    let warm_start = match &reference {
        Some(ws) => {
            let component = (0..ws.components.len())
                .find(|&i| (ws.noisy_dim(i), ws.protected_dim(i)) == (n1, m1))
                .ok_or_else(|| {
                    Failure::new(
                        1,
                        format!("reference structure has no component of shape {n1},{m1}"),
                    )
                })?;
            Some(WarmStartSpec {
                reference: ws,
                component,
            })
        }
        None => None,
    };
    let restarts = args
        .restarts
        .unwrap_or(if warm_start.is_some() { 0 } else { 6 });
    let plan = SearchPlan {
        warm_start,
        random_restarts: restarts,
    };
    let cfg = OptimizerConfig {
        seed,
        restarts,
        ..OptimizerConfig::default()
    };
    let outcome = adfs_search(&problem, &plan, &cfg)?;

    let rows: Vec<AdfsRunRow> = outcome
        .rows
        .iter()
        .map(|r| AdfsRunRow {
            init: match r.init_kind {
                InitKind::Random => "random".into(),
                InitKind::WarmStart => "warm_start".into(),
            },
            seed: r.seed,
            j_init: r.j_init,
            j_min: r.j_min,
            iterations: r.iterations,
            termination: match r.termination {
                Termination::GradientConverged => "gradient_converged".into(),
                Termination::MaxIterations => "max_iterations".into(),
                Termination::LineSearchFailure => "line_search_failure".into(),
            },
        })
        .collect();
    let warnings = rows.iter().any(|r| r.termination == "line_search_failure");
    let report = AdfsReport {
        n,
        shape: [n1, m1],
        seed,
        label: msf.label,
        best_row: outcome.best_row,
        j_min: outcome.best().j_min,
        trace: outcome.best().trace.clone(),
        line_search_warnings: warnings,
        u_opt: matrix_to_payload(&outcome.best().u_opt),
        rows,
    };
    report.write(&args.out)?;

    println!("run  init        J_init        J_min         iters  termination");
    for (i, r) in report.rows.iter().enumerate() {
        println!(
            "{i:<4} {:<11} {:<13.6e} {:<13.6e} {:<6} {}",
            r.init, r.j_init, r.j_min, r.iterations, r.termination
        );
    }
    println!(
        "best run {} with J_min {:.6e} (seed {seed})",
        report.best_row, report.j_min
    );
    if warnings {
        eprintln!("warning: line search failed in at least one run");
        if args.strict {
            return Err(Failure::new(
                6,
                "line-search failure with --strict".to_string(),
            ));
        }
    }
    Ok(())
}

fn cmd_commutant(args: CommutantArgs) -> Result<(), Failure> {
    let (msf, gs) = load_generators(&args.input)?;
    let cb = commutant_basis(&gs)?;
    let out = MatrixSetFile::from_matrices(
        MatrixKind::CommutantBasis,
        format!("{} commutant", msf.label),
        None,
        cb.basis(),
    );
    out.write(&args.out)?;
    println!(
        "commutant dimension {} (algebra dimension {})",
        cb.count(),
        gs.dim()
    );
    Ok(())
}
