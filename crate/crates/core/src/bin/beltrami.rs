use std::path::PathBuf;
use std::process::ExitCode;

use beltrami_core::experiment::{
    resolve, run, CheckRecord, Command, ConfigPatch, Format, ProbePatch, Profile, OUT_DIR_ENV,
};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    CoeffCheck,
    TransformSelftest,
    SolveChart,
    LemmaBlowup,
    ChartRegularity,
    NijenhuisCheck,
    All,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::CoeffCheck => Command::CoeffCheck,
            Cmd::TransformSelftest => Command::TransformSelftest,
            Cmd::SolveChart => Command::SolveChart,
            Cmd::LemmaBlowup => Command::LemmaBlowup,
            Cmd::ChartRegularity => Command::ChartRegularity,
            Cmd::NijenhuisCheck => Command::NijenhuisCheck,
            Cmd::All => Command::All,
        }
    }
}

/// Run the transform, chart and regularity verification pipeline.
///
/// Exit status is 0 when every gated check passes, 1 when a gated check
/// fails and 2 on usage or I/O errors.
#[derive(Debug, Parser)]
#[command(name = "beltrami", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Built-in defaults the remaining options override.
    #[arg(long, default_value = "full")]
    profile: Profile,
    /// JSON configuration file; flags take precedence over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    grid_n: Option<usize>,
    /// Half width of the computational box.
    #[arg(long)]
    pad: Option<f64>,
    /// Neumann iteration tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    j_min: Option<u32>,
    #[arg(long)]
    j_max: Option<u32>,
    #[arg(long)]
    angles: Option<usize>,
    /// Probe pairs per scale.
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative tolerance on fitted slopes.
    #[arg(long)]
    fit_tol: Option<f64>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    /// Comma-separated subset of csv, json, svg.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Cli {
    fn patch(&self) -> ConfigPatch {
        let probes = ProbePatch {
            j_min: self.j_min,
            j_max: self.j_max,
            angles: self.angles,
            pairs: self.pairs,
            seed: self.seed,
        };
        ConfigPatch {
            k: self.k,
            grid_n: self.grid_n,
            pad_half_width: self.pad,
            tol: self.tol,
            max_iter: self.max_iter,
            probes: (probes != ProbePatch::default()).then_some(probes),
            fit_tol: self.fit_tol,
            quad_tol: None,
            out_dir: self.out_dir.clone(),
            formats: self.format.clone(),
            jobs: self.jobs,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match cli.config.as_deref().map(ConfigPatch::from_file).transpose() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cfg = match resolve(cli.profile, file.as_ref(), &cli.patch()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(jobs) = cfg.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match run(cli.command.into(), &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for c in &outcome.report.checks {
        println!("{}", format_check(c));
    }
    println!(
        "{} in {:.1} s, artifacts in {}",
        if outcome.report.overall_pass { "PASS" } else { "FAIL" },
        outcome.timing.total_seconds,
        cfg.out_dir.display()
    );
    if outcome.report.overall_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn format_check(c: &CheckRecord) -> String {
    let status = match (c.gated, c.pass) {
        (false, _) => "info",
        (true, true) => "pass",
        (true, false) => "FAIL",
    };
    let measured = c.measured.map_or_else(|| "-".to_string(), |m| format!("{m:.4e}"));
    let target = c.target.map_or_else(String::new, |t| format!(" target {t:.4e}"));
    let detail = if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) };
    format!("[{status}] {}: {measured}{target}{detail}", c.name)
}
