use counteract::eval::{
    evaluate_planner, mcnemar_exact, wilcoxon_signed_rank, EvaluatedInstance, EvaluationReport,
    WilcoxonMethod, REPORT_SCHEMA,
};
use counteract::planner::{Directive, Plan, PlanOrigin};
use counteract::preprocess::{DiscretizationScheme, Interval};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    x: Vec<f64>,
    y: Vec<f64>,
    method: String,
    statistic: f64,
    p_value: f64,
}

fn fixture() -> Fixture {
    serde_json::from_str(include_str!("fixtures/wilcoxon_reference.json")).unwrap()
}

#[test]
fn wilcoxon_matches_scipy_reference() {
    let f = fixture();
    assert_eq!(f.cases.len(), 50);
    for (i, c) in f.cases.iter().enumerate() {
        let r = wilcoxon_signed_rank(&c.x, &c.y).unwrap();
        let method = match r.method {
            WilcoxonMethod::Exact => "exact",
            WilcoxonMethod::Normal => "normal",
        };
        assert_eq!(method, c.method, "case {i}");
        assert!((r.statistic - c.statistic).abs() < 1e-6, "case {i}: W {} vs {}", r.statistic, c.statistic);
        assert!((r.p_value - c.p_value).abs() < 1e-6, "case {i}: p {} vs {}", r.p_value, c.p_value);
    }
}

#[test]
fn mcnemar_paired_outcome_example() {
    let r = mcnemar_exact(0, 14);
    assert!((r.p_value - 2.0 * 0.5f64.powi(14)).abs() < 1e-12);
    assert!((r.p_value - 1.2207e-4).abs() < 1e-8);
    for b in 0..=20 {
        for c in 0..=20 {
            assert_eq!(mcnemar_exact(b, c).p_value, mcnemar_exact(c, b).p_value);
        }
    }
}

fn sample_report() -> EvaluationReport {
    let features: Vec<String> = vec!["wmc".into(), "cbo".into(), "loc".into()];
    let scheme = DiscretizationScheme::new(features.clone(), vec![vec![10.0], vec![5.0], vec![100.0, 300.0]]).unwrap();
    let instances: Vec<EvaluatedInstance> = (0..8)
        .map(|i| EvaluatedInstance {
            id: format!("org.demo.C{i}"),
            before: vec![20.0, 8.0, 350.0],
            after: vec![if i < 6 { 4.0 } else { 25.0 }, 8.0, if i % 2 == 0 { 200.0 } else { 350.0 }],
            q_prev: 2.0,
            q_next: if i < 6 { 0.0 } else { 3.0 },
        })
        .collect();
    let mut guided = Plan::no_change(&features, PlanOrigin::planner("counteract"));
    guided.directives.insert("wmc".into(), Directive::move_to(Interval::at_most(10.0)));
    let idle = Plan::no_change(&features, PlanOrigin::planner("idle"));
    let a = evaluate_planner("counteract", &vec![guided; 8], &instances, &scheme, Default::default()).unwrap();
    let b = evaluate_planner("idle", &vec![idle; 8], &instances, &scheme, Default::default()).unwrap();
    let ids = instances.iter().map(|x| x.id.clone()).collect();
    EvaluationReport::new("demo", "release", "counteract", ids, 2, vec![a, b]).unwrap()
}

#[test]
fn report_json_validates_against_schema() {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let report: serde_json::Value = serde_json::from_str(&sample_report().to_json()).unwrap();
    if let Err(errors) = compiled.validate(&report) {
        let msgs: Vec<String> = errors.map(|e| e.to_string()).collect();
        panic!("schema violations: {msgs:?}");
    }

    let mut broken = report.clone();
    broken["level"] = serde_json::json!("weekly");
    assert!(!compiled.is_valid(&broken));
    let mut extra = report;
    extra["unexpected"] = serde_json::json!(1);
    assert!(!compiled.is_valid(&extra));
}

#[test]
fn report_ratios_lie_in_unit_interval() {
    let r = sample_report();
    for p in &r.planners {
        for v in [p.median_overlap, p.iqr, p.s_scaled, p.precision, p.recall, p.f1, p.p_value]
            .into_iter()
            .flatten()
        {
            assert!((0.0..=1.0).contains(&v), "{}: {v}", p.planner);
        }
        assert_eq!(p.outcomes.total(), 8 * 3);
    }
}
