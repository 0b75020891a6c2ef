use std::path::Path;

use super::config::RunConfig;
use super::run::{sha256_hex, Manifest};
use crate::llm::{
    render_prompt, run_experiment, CommandTester, CompletionSource, ExperimentCase, ExperimentResult,
    HttpCompletionSource, PromptCase, Tester,
};
use crate::{Error, Result};

pub const EXPERIMENT: &str = "experiment.json";
pub const AUDIT: &str = "audit.jsonl";

/// Reads cases from a JSON array or JSON lines; missing templates take `config.template`.
pub fn load_cases(path: &Path, config: &RunConfig) -> Result<Vec<PromptCase>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let values: Vec<serde_json::Value> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)?
    } else {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?
    };
    values
        .into_iter()
        .map(|mut v| {
            if let Some(obj) = v.as_object_mut() {
                obj.entry("template").or_insert_with(|| config.template.clone().into());
            }
            Ok(serde_json::from_value(v)?)
        })
        .collect()
}

/// `llm-prompt`: renders every case in the file (without plans when `vanilla`).
pub fn cmd_llm_prompt(config: &RunConfig, cases: &Path, vanilla: bool) -> Result<String> {
    let mut out = String::new();
    for case in load_cases(cases, config)? {
        let case = if vanilla { case.vanilla() } else { case };
        out.push_str(&render_prompt(&case)?);
        out.push('\n');
    }
    Ok(out)
}

/// `llm-experiment` with explicit completion source and tester; writes the
/// result and the audit log into the run directory.
pub fn llm_experiment_with(
    config: &RunConfig,
    cases: &Path,
    source: &dyn CompletionSource,
    tester: &dyn Tester,
) -> Result<ExperimentResult> {
    let cases = load_cases(cases, config)?
        .into_iter()
        .map(ExperimentCase::from_guided)
        .collect::<Result<Vec<_>>>()?;
    let mut audit = Vec::new();
    let result = run_experiment(&cases, source, tester, config.experiment_config(), &mut audit)?;
    let dir = &config.out;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut json = serde_json::to_vec_pretty(&result)?;
    json.push(b'\n');
    let mut manifest = Manifest::open(dir, config);
    for (name, bytes) in [(EXPERIMENT, &json), (AUDIT, &audit)] {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        manifest.artifacts.insert(name.to_string(), sha256_hex(bytes));
    }
    manifest.save(dir)?;
    Ok(result)
}

/// `llm-experiment` against the configured endpoint and test command.
pub fn cmd_llm_experiment(config: &RunConfig, cases: &Path) -> Result<ExperimentResult> {
    let tester = CommandTester::from_argv(&config.test_command)?;
    let source = HttpCompletionSource::from_env(config.endpoint.clone())?;
    llm_experiment_with(config, cases, &source, &tester)
}
