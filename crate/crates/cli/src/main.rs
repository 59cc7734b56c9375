use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kwave::pipeline::{self, AnalysisRequest, Stage, SystemSource};
use kwave::system::WaveSection;
use kwave::{DomainBox, Exec};

/// Riemann simple waves and k-waves for first-order quasilinear systems.
#[derive(Parser)]
#[command(name = "kwave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis pipeline and write its reports.
    Run(RunArgs),
    /// Summarize a system file: dimensions, homogeneity, evolutionary form.
    Describe {
        /// System file, or `fixture:<name>` for a bundled one.
        system: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// System file, or `fixture:<name>` (example2, example3, brownian, trautman).
    #[arg(long)]
    system: String,
    /// Domain overrides, e.g. `t=1:3, y=0.2:0.9, u1=0.1:1.7`.
    #[arg(long)]
    domain: Option<String>,
    /// Comma-separated prefix of homogenize,elements,conditions,rescale,solve,verify.
    #[arg(long, default_value = "all")]
    stages: String,
    /// Solve grid, e.g. `t=1:3:20, x=1:3:20, y=0.2:0.9:20`.
    #[arg(long)]
    grid: Option<String>,
    /// Seed for every randomized check.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the reports.
    #[arg(long, default_value = "kwave-out")]
    out: PathBuf,
    /// Newton tolerance on the Riemann invariants.
    #[arg(long)]
    tol_newton: Option<f64>,
    /// Threshold below which sampled values count as zero.
    #[arg(long)]
    tol_zero: Option<f64>,
    /// Finite-difference step of the verifier.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Wave covector ansatz `label: λ1; λ2; ...`, repeatable. Replaces the file's waves.
    #[arg(long = "wave")]
    waves: Vec<String>,
    /// Run every loop on the calling thread.
    #[arg(long)]
    sequential: bool,
}

fn parse_wave(s: &str) -> Result<WaveSection, String> {
    let (label, comps) = s.split_once(':').ok_or_else(|| format!("wave `{s}`: expected `label: λ1; λ2; ...`"))?;
    Ok(WaveSection {
        label: label.trim().to_string(),
        lambda: comps.split(';').map(|c| c.trim().to_string()).collect(),
        gamma: None,
        potential: None,
    })
}

fn request(a: &RunArgs) -> Result<AnalysisRequest, String> {
    let mut r = AnalysisRequest::new(SystemSource::parse(&a.system));
    r.stages = Stage::parse_list(&a.stages)?;
    r.domain = a.domain.as_deref().map(DomainBox::parse_spec).transpose().map_err(|e| e.to_string())?;
    r.grid = a.grid.clone();
    r.out = Some(a.out.clone());
    r.waves = a.waves.iter().map(|w| parse_wave(w)).collect::<Result<_, _>>()?;
    if let Some(s) = a.seed {
        r.seed = s;
    }
    if let Some(t) = a.tol_newton {
        r.tol_newton = t;
    }
    if let Some(t) = a.tol_zero {
        r.tol_zero = t;
    }
    if let Some(h) = a.fd_step {
        r.fd_step = h;
    }
    if a.sequential {
        r.exec = Exec::Sequential;
    }
    Ok(r)
}

fn run(a: &RunArgs) -> u8 {
    let req = match request(a) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("kwave: {e}");
            return 2;
        }
    };
    let analysis = pipeline::run(&req);
    for s in &analysis.completed {
        println!("{s}: ok");
    }
    if let Some(r) = &analysis.residual {
        println!("residual: max {:.3e}, mean {:.3e} over {} points", r.max, r.mean, r.checked);
    }
    if let Some(d) = &analysis.decomposition {
        let xi: Vec<String> = d.xi_range.iter().map(|(lo, hi)| format!("[{lo:.10}, {hi:.10}]")).collect();
        println!("decomposition: ξ in {}, max error {:.3e}", xi.join(" × "), d.max_error);
    }
    for p in &analysis.written {
        println!("wrote {}", p.display());
    }
    if let Some(f) = &analysis.failure {
        eprintln!("kwave: {f}");
    }
    analysis.exit_code() as u8
}

fn describe(system: &str) -> u8 {
    match SystemSource::parse(system).load().and_then(|f| pipeline::describe(&f)) {
        Ok(text) => {
            println!("{text}");
            0
        }
        Err(e) => {
            eprintln!("kwave: {e}");
            2
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(match &cli.command {
        Command::Run(a) => run(a),
        Command::Describe { system } => describe(system),
    })
}
