use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unitary_landscape::commands::{
    cmd_critvals, cmd_gradcheck, cmd_signatures, cmd_target_invariance, cmd_trials, DEFAULT_ROTATIONS,
};
use unitary_landscape::hessian::{DEFAULT_H, DEFAULT_ZERO_TOL};
use unitary_landscape::{AscentConfig, DomainKind, EscapeMode, Error, LandscapeDomain, ReportDocument};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "landscape-lab", version, about = "Critical points, Hessian signatures and trap-free ascent on unitary landscapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Domain: sym, sympl or full
    #[arg(long, default_value = "sym")]
    domain: DomainKind,

    /// N (number of Kramers blocks for sympl)
    #[arg(long)]
    dim: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Write the JSON report here
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write one CSV per table into this directory
    #[arg(long)]
    csv_dir: Option<PathBuf>,

    /// Suppress the text summary
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args, Debug, Clone)]
struct HessianArgs {
    /// Finite-difference step (h/2 is also evaluated)
    #[arg(long, default_value_t = DEFAULT_H)]
    h: f64,

    /// Relative eigenvalue threshold for zero curvature
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    zero_tol: f64,
}

#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// JSON file with ascent settings; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    initial_step: Option<f64>,
    #[arg(long)]
    backtrack_factor: Option<f64>,
    #[arg(long)]
    armijo_c: Option<f64>,
    #[arg(long)]
    saddle_window: Option<usize>,
    #[arg(long)]
    saddle_grad_band: Option<f64>,
    #[arg(long)]
    escape_norm: Option<f64>,
    #[arg(long)]
    max_escapes: Option<usize>,
    /// random-tangent or hessian-guided
    #[arg(long, value_parser = parse_escape_mode)]
    escape_mode: Option<EscapeMode>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic gradient against central differences
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Critical values and gradients at random critical points
    Critvals {
        #[command(flatten)]
        common: Common,
        /// Random realizations per critical value
        #[arg(long, default_value_t = DEFAULT_ROTATIONS)]
        rotations: usize,
    },
    /// Measured Hessian signatures against the closed forms
    Signatures {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hessian: HessianArgs,
        #[arg(long, default_value_t = DEFAULT_ROTATIONS)]
        rotations: usize,
    },
    /// Batch of gradient ascents from ensemble starts
    Trials {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Worker threads; results do not depend on this
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        ascent: ConfigArgs,
    },
    /// Critical points of Re Tr(W†S) for random targets W
    TargetInvariance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hessian: HessianArgs,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

fn parse_escape_mode(s: &str) -> Result<EscapeMode, String> {
    match s {
        "random-tangent" | "random_tangent" | "random" => Ok(EscapeMode::RandomTangent),
        "hessian-guided" | "hessian_guided" | "hessian" => Ok(EscapeMode::HessianGuided),
        other => Err(format!("unknown escape mode '{other}'")),
    }
}

fn ascent_config(args: &ConfigArgs) -> Result<AscentConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => AscentConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { cfg.$field = v; })*
        };
    }
    apply!(
        max_iters,
        grad_tol,
        initial_step,
        backtrack_factor,
        armijo_c,
        saddle_window,
        saddle_grad_band,
        escape_norm,
        max_escapes,
        escape_mode
    );
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n\nRun with --help for usage.");
    ExitCode::from(EXIT_USAGE)
}

fn emit(doc: &mut ReportDocument, common: &Common) -> ExitCode {
    doc.manifest.command_line = std::env::args().collect();
    if !common.quiet {
        print!("{}", doc.render_text());
    }
    if let Some(path) = &common.out {
        if let Err(e) = doc.write_json(path) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_FAIL);
        }
    }
    if let Some(dir) = &common.csv_dir {
        if let Err(e) = doc.write_csv_dir(dir) {
            eprintln!("error: cannot write CSV to {}: {e}", dir.display());
            return ExitCode::from(EXIT_FAIL);
        }
    }
    if doc.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Gradcheck { common, .. }
        | Command::Critvals { common, .. }
        | Command::Signatures { common, .. }
        | Command::Trials { common, .. }
        | Command::TargetInvariance { common, .. } => common.clone(),
    };
    let domain = match LandscapeDomain::new(common.domain, common.dim) {
        Ok(d) => d,
        Err(e) => return usage(&e.to_string()),
    };
    let result = match cli.command {
        Command::Gradcheck { samples, .. } => cmd_gradcheck(domain, samples, common.seed),
        Command::Critvals { rotations, .. } => cmd_critvals(domain, rotations, common.seed),
        Command::Signatures {
            hessian, rotations, ..
        } => cmd_signatures(domain, rotations, common.seed, hessian.h, hessian.zero_tol),
        Command::Trials {
            trials, jobs, ascent, ..
        } => {
            let cfg = match ascent_config(&ascent) {
                Ok(c) => c,
                Err(e) => return usage(&e),
            };
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            cmd_trials(domain, trials, common.seed, &cfg, jobs)
        }
        Command::TargetInvariance { hessian, samples, .. } => {
            cmd_target_invariance(domain, samples, common.seed, hessian.h, hessian.zero_tol)
        }
    };
    match result {
        Ok(mut doc) => emit(&mut doc, &common),
        Err(Error::InvalidArgument(msg)) => usage(&msg),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
