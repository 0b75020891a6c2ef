use std::collections::BTreeMap;
use std::io::Write as _;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::client::CompletionSource;
use super::prompt::{render_prompt, PromptCase};
use crate::eval::{mcnemar_exact, McNemarResult};
use crate::{Error, Result};

/// Applies a completion to the buggy code and runs the tests; `Ok(true)` is a pass.
/// An `Err` marks the case as errored.
pub trait Tester: Sync {
    fn test(&self, case: &PromptCase, completion: &str) -> Result<bool>;
}

/// Runs a user command per completion: the completion arrives on stdin,
/// `COUNTERACT_CASE_ID` and `COUNTERACT_CONDITION` in the environment. Exit
/// status 0 is a pass, any other status a fail; failing to start or being
/// killed by a signal is an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandTester {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandTester {
    pub fn from_argv(argv: &[String]) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::InvalidInput("test command is empty".into()))?;
        Ok(Self {
            program: program.clone(),
            args: args.to_vec(),
        })
    }
}

impl Tester for CommandTester {
    fn test(&self, case: &PromptCase, completion: &str) -> Result<bool> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .env("COUNTERACT_CASE_ID", &case.case_id)
            .env("COUNTERACT_CONDITION", condition(case))
            .stdin(Stdio::piped())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::io(&self.program, e))?;
        if let Some(mut stdin) = child.stdin.take() {
            // A command that exits without reading its input is not an error.
            let _ = stdin.write_all(completion.as_bytes());
        }
        let status = child.wait().map_err(|e| Error::io(&self.program, e))?;
        match status.code() {
            Some(code) => Ok(code == 0),
            None => Err(Error::InvalidInput(format!("`{}` was terminated by a signal", self.program))),
        }
    }
}

fn condition(case: &PromptCase) -> &'static str {
    if case.is_guided() {
        "guided"
    } else {
        "vanilla"
    }
}

/// Guided outcome × vanilla outcome.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub pass_pass: u64,
    /// Guided passed, vanilla failed.
    pub pass_fail: u64,
    /// Guided failed, vanilla passed.
    pub fail_pass: u64,
    pub fail_fail: u64,
}

impl ContingencyTable {
    pub fn add(&mut self, guided: bool, vanilla: bool) {
        match (guided, vanilla) {
            (true, true) => self.pass_pass += 1,
            (true, false) => self.pass_fail += 1,
            (false, true) => self.fail_pass += 1,
            (false, false) => self.fail_fail += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.pass_pass + self.pass_fail + self.fail_pass + self.fail_fail
    }

    pub fn guided_passes(&self) -> u64 {
        self.pass_pass + self.pass_fail
    }

    pub fn vanilla_passes(&self) -> u64 {
        self.pass_pass + self.fail_pass
    }

    /// Exact McNemar test on the discordant cells.
    pub fn mcnemar(&self) -> McNemarResult {
        mcnemar_exact(self.pass_fail, self.fail_pass)
    }
}

/// The two conditions of one bug.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCase {
    pub guided: PromptCase,
    pub vanilla: PromptCase,
}

impl ExperimentCase {
    /// Pairs a guided case with its plan-free twin.
    pub fn from_guided(guided: PromptCase) -> Result<Self> {
        if !guided.is_guided() {
            return Err(Error::InvalidInput(format!("case `{}` has no plan", guided.case_id)));
        }
        Ok(Self {
            vanilla: guided.vanilla(),
            guided,
        })
    }

    pub fn id(&self) -> &str {
        &self.guided.case_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Completions per prompt; the contingency table uses the first.
    pub n_samples: usize,
    /// Cases processed at once.
    pub concurrency: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_samples: 1,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    /// First-sample verdicts.
    pub guided_pass: bool,
    pub vanilla_pass: bool,
    /// Fraction of passing samples.
    pub guided_pass_rate: f64,
    pub vanilla_pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErroredCase {
    pub case_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub table: ContingencyTable,
    pub mcnemar: McNemarResult,
    pub cases: Vec<CaseResult>,
    pub errored: Vec<ErroredCase>,
}

/// One persisted call: prompt, completion and verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub case_id: String,
    pub condition: String,
    pub sample: usize,
    pub prompt: String,
    pub completion: String,
    /// `pass`, `fail` or `error: <reason>`.
    pub verdict: String,
}

/// Replaces every occurrence of each secret with `[REDACTED]`.
pub fn scrub(text: &str, secrets: &[String]) -> String {
    secrets
        .iter()
        .filter(|s| !s.is_empty())
        .fold(text.to_string(), |t, s| t.replace(s.as_str(), "[REDACTED]"))
}

enum CaseOutcome {
    Done(CaseResult),
    Errored(String),
}

struct Sampled {
    verdicts: Vec<Result<bool>>,
    records: Vec<AuditRecord>,
}

fn run_condition(
    case: &PromptCase,
    source: &dyn CompletionSource,
    tester: &dyn Tester,
    n: usize,
) -> Result<Sampled> {
    let prompt = render_prompt(case)?;
    let completions = source.complete(&prompt, n)?;
    let mut verdicts = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    for (sample, completion) in completions.into_iter().enumerate() {
        let v = tester.test(case, &completion);
        let verdict = match &v {
            Ok(true) => "pass".to_string(),
            Ok(false) => "fail".to_string(),
            Err(e) => format!("error: {e}"),
        };
        records.push(AuditRecord {
            case_id: case.case_id.clone(),
            condition: condition(case).into(),
            sample,
            prompt: prompt.clone(),
            completion,
            verdict,
        });
        verdicts.push(v);
    }
    Ok(Sampled { verdicts, records })
}

fn pass_rate(verdicts: &[Result<bool>]) -> f64 {
    let ok: Vec<bool> = verdicts.iter().filter_map(|v| v.as_ref().ok().copied()).collect();
    if ok.is_empty() {
        0.0
    } else {
        ok.iter().filter(|&&p| p).count() as f64 / ok.len() as f64
    }
}

fn run_case(
    case: &ExperimentCase,
    source: &dyn CompletionSource,
    tester: &dyn Tester,
    n: usize,
) -> Result<(CaseOutcome, Vec<AuditRecord>)> {
    let mut records = Vec::new();
    let mut sampled = Vec::with_capacity(2);
    for c in [&case.guided, &case.vanilla] {
        match run_condition(c, source, tester, n) {
            Ok(s) => {
                records.extend(s.records.iter().cloned());
                sampled.push(s);
            }
            Err(e @ Error::Transient { .. }) => return Ok((CaseOutcome::Errored(e.to_string()), records)),
            Err(e) => return Err(e),
        }
    }
    let (g, v) = (&sampled[0].verdicts, &sampled[1].verdicts);
    let outcome = match (&g[0], &v[0]) {
        (Ok(gp), Ok(vp)) => CaseOutcome::Done(CaseResult {
            case_id: case.id().to_string(),
            guided_pass: *gp,
            vanilla_pass: *vp,
            guided_pass_rate: pass_rate(g),
            vanilla_pass_rate: pass_rate(v),
        }),
        (Err(e), _) | (_, Err(e)) => CaseOutcome::Errored(format!("test command failed: {e}")),
    };
    Ok((outcome, records))
}

/// Runs both conditions of every case, tabulates first-sample verdicts and
/// tests the discordant cells. Every call is appended to `audit` as one JSON
/// line, ordered by case id, condition and sample, with the source's secrets
/// scrubbed. Credential and protocol errors abort the run; cases whose
/// endpoint calls keep failing, or whose test command errors, are excluded.
pub fn run_experiment(
    cases: &[ExperimentCase],
    source: &dyn CompletionSource,
    tester: &dyn Tester,
    config: ExperimentConfig,
    audit: &mut dyn std::io::Write,
) -> Result<ExperimentResult> {
    if config.n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    let mut ids = std::collections::BTreeSet::new();
    for c in cases {
        if !c.guided.is_guided() || c.vanilla.is_guided() {
            return Err(Error::InvalidInput(format!("case `{}` needs one guided and one vanilla prompt", c.id())));
        }
        if !ids.insert(c.id()) {
            return Err(Error::DuplicateKey(c.id().to_string()));
        }
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<BTreeMap<String, Result<(CaseOutcome, Vec<AuditRecord>)>>> = Mutex::new(BTreeMap::new());
    std::thread::scope(|s| {
        for _ in 0..config.concurrency.clamp(1, cases.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(case) = cases.get(i) else { break };
                let r = run_case(case, source, tester, config.n_samples);
                results.lock().expect("no worker panicked").insert(case.id().to_string(), r);
            });
        }
    });

    let secrets = source.secrets();
    let mut table = ContingencyTable::default();
    let mut done = Vec::new();
    let mut errored = Vec::new();
    for (id, r) in results.into_inner().expect("no worker panicked") {
        let (outcome, records) = r?;
        for mut rec in records {
            rec.prompt = scrub(&rec.prompt, &secrets);
            rec.completion = scrub(&rec.completion, &secrets);
            rec.verdict = scrub(&rec.verdict, &secrets);
            serde_json::to_writer(&mut *audit, &rec)?;
            audit.write_all(b"\n").map_err(|e| Error::io("<audit log>", e))?;
        }
        match outcome {
            CaseOutcome::Done(c) => {
                table.add(c.guided_pass, c.vanilla_pass);
                done.push(c);
            }
            CaseOutcome::Errored(reason) => errored.push(ErroredCase {
                case_id: id,
                reason: scrub(&reason, &secrets),
            }),
        }
    }
    Ok(ExperimentResult {
        mcnemar: table.mcnemar(),
        table,
        cases: done,
        errored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{Plan, PlanOrigin};

    struct Echo;

    impl CompletionSource for Echo {
        fn complete(&self, prompt: &str, n: usize) -> Result<Vec<String>> {
            Ok(vec![prompt.to_string(); n])
        }
    }

    /// Verdicts looked up by (case id, guided).
    struct Table(BTreeMap<(String, bool), Result<bool, ()>>);

    impl Tester for Table {
        fn test(&self, case: &PromptCase, _: &str) -> Result<bool> {
            self.0[&(case.case_id.clone(), case.is_guided())]
                .map_err(|_| Error::InvalidInput("crashed".into()))
        }
    }

    fn cases(n: usize) -> Vec<ExperimentCase> {
        (0..n)
            .map(|i| {
                ExperimentCase::from_guided(PromptCase {
                    case_id: format!("BUG-{i:02}"),
                    buggy_code: format!("void m{i}() {{}}"),
                    commit_message: "fix".into(),
                    plan: Some(Plan::no_change(&["loc".to_string()], PlanOrigin::planner("counteract"))),
                    template: "counteract-v1".into(),
                })
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn all_pass_is_degenerate() {
        let cs = cases(5);
        let verdicts = cs
            .iter()
            .flat_map(|c| [((c.id().to_string(), true), Ok(true)), ((c.id().to_string(), false), Ok(true))])
            .collect();
        let mut audit = Vec::new();
        let r = run_experiment(&cs, &Echo, &Table(verdicts), ExperimentConfig::default(), &mut audit).unwrap();
        assert_eq!(r.table.pass_pass, 5);
        assert!(r.mcnemar.degenerate && r.mcnemar.p_value == 1.0);
        assert_eq!(String::from_utf8(audit).unwrap().lines().count(), 10);
    }

    #[test]
    fn crashed_tests_are_excluded_and_counted() {
        let cs = cases(3);
        let mut verdicts: BTreeMap<_, _> = cs
            .iter()
            .flat_map(|c| [((c.id().to_string(), true), Ok(true)), ((c.id().to_string(), false), Ok(false))])
            .collect();
        verdicts.insert(("BUG-01".into(), false), Err(()));
        let mut audit = Vec::new();
        let r = run_experiment(&cs, &Echo, &Table(verdicts), ExperimentConfig::default(), &mut audit).unwrap();
        assert_eq!(r.table, ContingencyTable { pass_fail: 2, ..Default::default() });
        assert_eq!(r.errored.len(), 1);
        assert_eq!(r.errored[0].case_id, "BUG-01");
    }

    #[test]
    fn command_tester_uses_exit_status() {
        let c = &cases(1)[0].guided;
        let pass = CommandTester::from_argv(&["sh".into(), "-c".into(), "grep -q fixed".into()]).unwrap();
        assert!(pass.test(c, "fixed code").unwrap());
        assert!(!pass.test(c, "broken code").unwrap());
        let missing = CommandTester::from_argv(&["/nonexistent/tester".into()]).unwrap();
        assert!(missing.test(c, "x").is_err());
        assert!(CommandTester::from_argv(&[]).is_err());
    }

    #[test]
    fn scrub_removes_secrets() {
        assert_eq!(scrub("key=sk-123 and sk-123", &["sk-123".into()]), "key=[REDACTED] and [REDACTED]");
        assert_eq!(scrub("x", &[String::new()]), "x");
    }
}
