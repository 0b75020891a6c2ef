use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::planner::{Directive, Plan};
use crate::{Error, Result};

/// Templates this build can render.
pub const TEMPLATES: &[&str] = &["counteract-v1"];
pub const DEFAULT_TEMPLATE: &str = "counteract-v1";

/// One bug-fix request. Without a plan it is the vanilla condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptCase {
    pub case_id: String,
    pub buggy_code: String,
    pub commit_message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
    #[serde(default = "default_template")]
    pub template: String,
}

fn default_template() -> String {
    DEFAULT_TEMPLATE.to_string()
}

impl PromptCase {
    pub fn is_guided(&self) -> bool {
        self.plan.is_some()
    }

    /// The same case without its plan.
    pub fn vanilla(&self) -> Self {
        Self {
            plan: None,
            ..self.clone()
        }
    }
}

/// One line per moved metric, `NAME:(a, b]=>(c, d]`; the last line ends with
/// `and don't change the rest metrics`.
pub fn transition_lines(plan: &Plan) -> Vec<String> {
    let mut lines: Vec<String> = plan
        .directives
        .iter()
        .filter_map(|(f, d)| match d {
            Directive::MoveTo { target, from } => Some(match from {
                Some(from) => format!("{f}:{from}=>{target}"),
                None => format!("{f}:=>{target}"),
            }),
            Directive::NoChange => None,
        })
        .collect();
    match lines.last_mut() {
        Some(last) => last.push_str(" and don't change the rest metrics"),
        None => lines.push("don't change any metric".into()),
    }
    lines
}

/// Renders `case` with its template; identical cases give identical bytes.
pub fn render_prompt(case: &PromptCase) -> Result<String> {
    if !TEMPLATES.contains(&case.template.as_str()) {
        return Err(Error::UnknownTemplate {
            name: case.template.clone(),
            available: TEMPLATES.join(", "),
        });
    }
    if case.buggy_code.trim().is_empty() {
        return Err(Error::InvalidInput(format!("case `{}` has no code", case.case_id)));
    }
    let mut out = String::new();
    out.push_str("<s>[INST] You are an experienced software engineer. ");
    out.push_str("The method below contains a bug. Rewrite the method so that the bug is fixed.\n\n");
    writeln!(out, "Commit message: {}\n", case.commit_message.trim()).expect("string write");
    out.push_str("Buggy code:\n```\n");
    out.push_str(case.buggy_code.trim_end());
    out.push_str("\n```\n");
    if let Some(plan) = &case.plan {
        out.push_str("\nWhile fixing it, move these code metrics into the given ranges:\n");
        for line in transition_lines(plan) {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out.push_str("\nReply with the complete fixed method only. [/INST]");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::PlanOrigin;
    use crate::preprocess::Interval;
    use proptest::prelude::*;

    fn case(plan: Option<Plan>) -> PromptCase {
        PromptCase {
            case_id: "KAFKA-1".into(),
            buggy_code: "int f(int a) { return a - 1; }".into(),
            commit_message: "Fix off-by-one in offset lookup".into(),
            plan,
            template: DEFAULT_TEMPLATE.into(),
        }
    }

    fn numpar_plan() -> Plan {
        let mut p = Plan::no_change(&["NUMPAR".to_string(), "NL".to_string()], PlanOrigin::planner("counteract"));
        p.directives.insert(
            "NUMPAR".into(),
            Directive::MoveTo {
                target: Interval::new(1.025, 2.005).unwrap(),
                from: Some(Interval::new(0.995, 1.005).unwrap()),
            },
        );
        p
    }

    #[test]
    fn vanilla_has_no_plan_section() {
        let p = render_prompt(&case(None)).unwrap();
        assert!(!p.contains("=>"));
        assert!(!p.contains("metrics into"));
        assert!(p.starts_with("<s>[INST]") && p.ends_with("[/INST]"));
    }

    #[test]
    fn one_transition_gives_one_line() {
        let p = render_prompt(&case(Some(numpar_plan()))).unwrap();
        let lines: Vec<&str> = p.lines().filter(|l| l.contains("=>")).collect();
        assert_eq!(lines, ["NUMPAR:(0.995, 1.005]=>(1.025, 2.005] and don't change the rest metrics"]);
        assert_eq!(p, render_prompt(&case(Some(numpar_plan()))).unwrap());
    }

    #[test]
    fn unknown_template_lists_available() {
        let mut c = case(None);
        c.template = "v0".into();
        let e = render_prompt(&c).unwrap_err().to_string();
        assert!(e.contains("v0") && e.contains("counteract-v1"));
        c.template = DEFAULT_TEMPLATE.into();
        c.buggy_code = "  ".into();
        assert!(render_prompt(&c).is_err());
    }

    proptest! {
        #[test]
        fn distinct_plans_give_distinct_prompts(
            a in prop::collection::btree_map(0usize..4, (-5i32..5, 1i32..4), 1..4),
            b in prop::collection::btree_map(0usize..4, (-5i32..5, 1i32..4), 1..4),
        ) {
            let names: Vec<String> = (0..4).map(|i| format!("m{i}")).collect();
            let build = |moves: &std::collections::BTreeMap<usize, (i32, i32)>| {
                let mut p = Plan::no_change(&names, PlanOrigin::planner("x"));
                for (&j, &(lo, w)) in moves {
                    p.directives.insert(
                        names[j].clone(),
                        Directive::move_to(Interval::new(lo as f64, (lo + w) as f64).unwrap()),
                    );
                }
                p
            };
            let (pa, pb) = (build(&a), build(&b));
            let ra = render_prompt(&case(Some(pa.clone()))).unwrap();
            let rb = render_prompt(&case(Some(pb.clone()))).unwrap();
            prop_assert_eq!(pa.directives == pb.directives, ra == rb);
        }
    }
}
