use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use counteract::pipeline::{
    cmd_compare, cmd_evaluate, cmd_llm_experiment, cmd_llm_prompt, cmd_mine, cmd_plan, Level, PlannerKind,
    RunConfig, EXIT_NOTHING_EVALUATED,
};
use counteract::Result;

#[derive(Parser)]
#[command(name = "counteract", version, about = "Defect-reduction plans from mined action rules")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Flags override values read from `--config`.
#[derive(Args)]
struct Global {
    /// JSON config file or a run's manifest.json.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_level)]
    level: Option<Level>,
    /// Release CSVs for t-1, t and t+1.
    #[arg(long, global = true, num_args = 3, value_names = ["PREV", "TEST", "NEXT"])]
    releases: Option<Vec<PathBuf>>,
    /// Commit-level CSV.
    #[arg(long, global = true)]
    commits: Option<PathBuf>,
    #[arg(long, global = true)]
    project: Option<String>,
    /// Number of actionable features.
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    min_supp: Option<f64>,
    #[arg(long, global = true)]
    min_conf: Option<f64>,
    /// Comma-separated planner list.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_planner)]
    planners: Option<Vec<PlannerKind>>,
    #[arg(long, global = true)]
    holdout_months: Option<u32>,
    #[arg(long, global = true)]
    test_size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize, rebalance and mine action rules.
    Mine,
    /// Plan every defective instance with each configured planner.
    Plan,
    /// Score stored plans against the next version.
    Evaluate,
    /// Cross-project tables from several report.json files.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
    /// Render prompts for the cases in a JSON or JSON-lines file.
    LlmPrompt {
        cases: PathBuf,
        /// Drop the plans and render the plain prompt.
        #[arg(long)]
        vanilla: bool,
    },
    /// Guided-vs-vanilla experiment against the configured endpoint.
    LlmExperiment {
        cases: PathBuf,
        #[arg(long)]
        n_samples: Option<usize>,
        /// Test command; receives each completion on stdin.
        #[arg(long, num_args = 1.., allow_hyphen_values = true)]
        test_command: Option<Vec<String>>,
    },
}

fn parse_level(s: &str) -> std::result::Result<Level, String> {
    serde_json::from_value(s.into()).map_err(|_| format!("unknown level `{s}` (release, commit)"))
}

fn parse_planner(s: &str) -> std::result::Result<PlannerKind, String> {
    serde_json::from_value(s.into())
        .map_err(|_| format!("unknown planner `{s}` (counteract, alves, shatnawi, oliveira, random)"))
}

fn config(g: &Global) -> Result<RunConfig> {
    let mut c = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = g.seed {
        c.seed = v;
    }
    if let Some(v) = &g.out {
        c.out = v.clone();
    }
    if let Some(v) = g.level {
        c.level = v;
    }
    if let Some(v) = &g.releases {
        c.releases = v.clone();
    }
    if let Some(v) = &g.commits {
        c.commits = Some(v.clone());
        if g.level.is_none() {
            c.level = Level::Commit;
        }
    }
    if let Some(v) = &g.project {
        c.project = Some(v.clone());
    }
    if let Some(v) = g.m {
        c.m = v;
    }
    if let Some(v) = g.min_supp {
        c.min_supp = v;
    }
    if let Some(v) = g.min_conf {
        c.min_conf = v;
    }
    if let Some(v) = &g.planners {
        c.planners = v.clone();
    }
    if let Some(v) = g.holdout_months {
        c.holdout_months = v;
    }
    if let Some(v) = g.test_size {
        c.test_size = v;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<i32> {
    let mut c = config(&cli.global)?;
    match cli.command {
        Command::Mine => {
            c.validate()?;
            let s = cmd_mine(&c)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::Plan => {
            c.validate()?;
            let plans = cmd_plan(&c)?;
            for p in &plans.planners {
                println!("{}: {} plans", p.planner, p.plans.len());
            }
            for s in &plans.skipped {
                println!("skipped {} ({}): {}", s.id, s.planner, s.reason);
            }
        }
        Command::Evaluate => {
            c.validate()?;
            let report = cmd_evaluate(&c)?;
            print!("{}", report.to_markdown());
            if report.instances.is_empty() {
                eprintln!("nothing evaluated");
                return Ok(EXIT_NOTHING_EVALUATED);
            }
        }
        Command::Compare { reports } => print!("{}", cmd_compare(&reports, &c.out)?),
        Command::LlmPrompt { cases, vanilla } => print!("{}", cmd_llm_prompt(&c, &cases, vanilla)?),
        Command::LlmExperiment {
            cases,
            n_samples,
            test_command,
        } => {
            if let Some(n) = n_samples {
                c.n_samples = n;
            }
            if let Some(t) = test_command {
                c.test_command = t;
            }
            let r = cmd_llm_experiment(&c, &cases)?;
            let t = &r.table;
            println!("guided pass / vanilla pass: {}", t.pass_pass);
            println!("guided pass / vanilla fail: {}", t.pass_fail);
            println!("guided fail / vanilla pass: {}", t.fail_pass);
            println!("guided fail / vanilla fail: {}", t.fail_fail);
            println!("mcnemar exact p = {:.6e}", r.mcnemar.p_value);
            if !r.errored.is_empty() {
                println!("errored cases: {}", r.errored.len());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
