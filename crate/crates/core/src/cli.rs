//! Command-line front end. `main` returns the process exit code.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::pipeline::{self, RunConfig};
use crate::stage2::FairnessMode;

#[derive(Debug, Parser)]
#[command(name = "equiflex", version, about = "Equity-aware local energy and flexibility market clearing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clear the day-ahead market; writes dispatch, prices and scenario.json.
    RunStage1(RunArgs),
    /// Clear the flexibility market from stage-1 artifacts in --out.
    RunStage2(RunArgs),
    /// Both stages plus plot data.
    RunPipeline(RunArgs),
    /// Check nodal prices against finite differences of the dispatch cost.
    ValidateDuals {
        #[command(flatten)]
        run: RunArgs,
        /// Intervals sampled besides the peak.
        #[arg(long, default_value_t = 3)]
        intervals: usize,
        /// Load perturbation, kW.
        #[arg(long, default_value_t = 1.0)]
        eps_kw: f64,
        /// Relative error allowed at non-degenerate points.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Print a summary of the artifacts in a directory.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write plot-ready CSVs from the artifacts in a directory.
    Plotdata {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `builtin:ieee33` or a case file.
    #[arg(long)]
    pub case: Option<String>,
    /// `synth:<seed>` or a DER portfolio file.
    #[arg(long)]
    pub portfolio: Option<String>,
    /// Upstream price profile, one $/kWh value per line.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// `random:<fraction>`, `none`, or a disturbance file.
    #[arg(long)]
    pub disturbance: Option<String>,
    /// Fairness weight; repeat or comma-separate for a sweep.
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<f64>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<FairnessMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replay a scenario.json from an earlier run.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Single-threaded branch-and-bound.
    #[arg(long)]
    pub serial: bool,
    /// Hold every unit's flexibility at zero.
    #[arg(long)]
    pub no_flex: bool,
    /// Solve the continuous relaxation of the day-ahead market.
    #[arg(long)]
    pub relax_binaries: bool,
    #[arg(long)]
    pub gap_tol: Option<f64>,
    #[arg(long)]
    pub feas_tol: Option<f64>,
    #[arg(long)]
    pub node_limit: Option<usize>,
}

fn parse_mode(s: &str) -> std::result::Result<FairnessMode, String> {
    match s {
        "pairwise" => Ok(FairnessMode::Pairwise),
        "spread" => Ok(FairnessMode::Spread),
        _ => Err(format!("unknown fairness mode `{s}` (pairwise|spread)")),
    }
}

impl RunArgs {
    /// Config file values with flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.case {
            c.case = v.clone();
        }
        if let Some(v) = &self.portfolio {
            c.portfolio = v.clone();
        }
        if let Some(v) = &self.prices {
            c.prices = Some(v.clone());
        }
        if let Some(v) = &self.disturbance {
            c.disturbance = v.clone();
        }
        if !self.w.is_empty() {
            c.w = self.w.clone();
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
            c.penetration.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = &self.scenario {
            c.scenario = Some(v.clone());
        }
        c.serial |= self.serial;
        c.no_flex |= self.no_flex;
        c.relax_binaries |= self.relax_binaries;
        c.gap_tol = self.gap_tol.or(c.gap_tol);
        c.feas_tol = self.feas_tol.or(c.feas_tol);
        c.node_limit = self.node_limit.or(c.node_limit);
        c.validate()?;
        Ok(c)
    }
}

fn stage1(args: &RunArgs) -> Result<i32> {
    let cfg = args.resolve()?;
    let out = pipeline::run_stage1(&cfg)?;
    pipeline::write_stage1(&cfg.out, &out.scenario, &out.inputs, &out.artifact)?;
    println!("stage 1: cost ${:.2}, artifacts in {}", out.artifact.dispatch.total_cost, cfg.out.display());
    Ok(pipeline::limit_status(&out.artifact, None))
}

fn stage2(args: &RunArgs) -> Result<i32> {
    let cfg = args.resolve()?;
    let (scenario, s1) = pipeline::read_stage1(&cfg.out)?;
    let (inputs, _) = scenario.inputs()?;
    let s2 = pipeline::run_stage2(&cfg, &scenario, &s1, false)?;
    pipeline::write_stage2(&cfg.out, &inputs, &s2)?;
    for r in &s2.runs {
        println!(
            "stage 2 {}: curtailment {:.1} kW ({:.2}%), spread {:.4}",
            r.label,
            r.result.total_curtailment,
            100.0 * r.result.curtailment_fraction,
            r.fairness.spread
        );
    }
    Ok(pipeline::limit_status(&s1, Some(&s2)))
}

fn run_pipeline(args: &RunArgs) -> Result<i32> {
    let cfg = args.resolve()?;
    let code = pipeline::run_pipeline(&cfg)?;
    print!("{}", report_text(&cfg.out)?);
    Ok(code)
}

fn validate_duals(args: &RunArgs, intervals: usize, eps_kw: f64, tol: f64) -> Result<i32> {
    let cfg = args.resolve()?;
    let checks = pipeline::validate_duals(&cfg, intervals, eps_kw)?;
    let clean: Vec<_> = checks.iter().filter(|c| !c.degenerate).collect();
    let max_err = clean.iter().map(|c| c.rel_err).fold(0.0, f64::max);
    let passed = checks.iter().filter(|c| c.passes(tol)).count();
    println!(
        "{} samples ({} on kinks); max relative dual error {:.3e}; {} of {} within {}",
        checks.len(),
        checks.len() - clean.len(),
        max_err,
        passed,
        checks.len(),
        tol
    );
    for c in checks.iter().filter(|c| !c.passes(tol)) {
        println!("  bus {} t={}: dlmp {:.6} fd {:.6}/{:.6}", c.bus, c.t, c.dlmp, c.fd_up, c.fd_down);
    }
    Ok(if (passed as f64) >= 0.9 * checks.len() as f64 { 0 } else { 2 })
}

fn report_text(dir: &Path) -> Result<String> {
    let (scenario, s1) = pipeline::read_stage1(dir)?;
    let (inputs, _) = scenario.inputs()?;
    let s2 = match pipeline::read_stage2(dir) {
        Ok(s) => Some(s),
        Err(Error::MissingArtifact(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(pipeline::render_report(&inputs, &s1, s2.as_ref()))
}

fn plotdata(dir: &Path) -> Result<i32> {
    let (scenario, s1) = pipeline::read_stage1(dir)?;
    let (inputs, _) = scenario.inputs()?;
    let s2 = pipeline::read_stage2(dir)?;
    pipeline::write_plotdata(dir, &inputs, &s1, &s2)?;
    Ok(0)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::RunStage1(a) => stage1(a),
        Command::RunStage2(a) => stage2(a),
        Command::RunPipeline(a) => run_pipeline(a),
        Command::ValidateDuals { run, intervals, eps_kw, tol } => validate_duals(run, *intervals, *eps_kw, *tol),
        Command::Report { out } => {
            print!("{}", report_text(out)?);
            Ok(0)
        }
        Command::Plotdata { out } => plotdata(out),
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EQUIFLEX_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
