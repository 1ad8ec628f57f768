use mimb_web::{compare_oracle, explore, parse_family, parse_graph, sample_and_discover};
use serde_json::Value;

const TRACE: &str = "\
# worked example
E -> A, B
A, B -> T
T -> G
C -> G
F -> C
";
const TRACE_FAMILY: &str = "G\nA\nA B\n";

fn json(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

fn names(v: &Value) -> Vec<&str> {
    v.as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect()
}

#[test]
fn graph_text_matches_fixture() {
    let dag = parse_graph(TRACE).unwrap();
    let (fixture, fam) = mimb_core::fixtures::trace_dag();
    assert_eq!(dag.len(), fixture.len());
    for (a, b) in fixture.edges() {
        assert!(dag.has_edge(dag.id(fixture.name(a)).unwrap(), dag.id(fixture.name(b)).unwrap()));
    }
    assert_eq!(dag.edge_count(), fixture.edge_count());
    assert_eq!(parse_family(&dag, TRACE_FAMILY).unwrap().to_names(dag.vars()), fam.to_names(fixture.vars()));
}

#[test]
fn parse_errors_are_reported() {
    assert!(parse_graph("A -> B\nB -> A").is_err());
    assert!(parse_graph("-> B").is_err());
    assert!(parse_graph("# nothing").is_err());
    let dag = parse_graph("A -> B").unwrap();
    assert!(parse_family(&dag, "Z").is_err());
    assert!(parse_family(&dag, "").is_err());
    assert_eq!(parse_family(&dag, "-\nA").unwrap().sets()[0].len(), 0);
}

#[test]
fn explorer_shows_cut_edges_and_blankets() {
    let r = json(explore(TRACE, TRACE_FAMILY, "T"));
    let exps = r["experiments"].as_array().unwrap();
    assert_eq!(exps.len(), 3);
    assert_eq!(names(&exps[0]["mb"]), ["A", "B"]);
    assert_eq!(exps[0]["removed_edges"].as_array().unwrap().len(), 2);
    assert_eq!(names(&exps[1]["mb"]), ["A", "B", "C", "G"]);
    assert_eq!(exps[1]["removed_edges"], serde_json::json!([["E", "A"]]));
    assert_eq!(names(&exps[2]["mb"]), ["A", "B", "C", "G"]);
    assert_eq!(exps[2]["removed_edges"], serde_json::json!([["E", "A"], ["E", "B"]]));
    assert_eq!(names(&r["report"]["union"]), ["A", "B", "C", "G"]);
    assert_eq!(r["report"]["union_pass"], true);
    assert_eq!(r["report"]["intersection_pass"], true);
}

#[test]
fn oracle_comparison_on_worked_example() {
    let r = json(compare_oracle(TRACE, TRACE_FAMILY, "T", 3, false));
    assert_eq!(names(&r["mimb"]["mb"]), ["A", "B", "C", "G"]);
    assert_eq!(names(&r["mimb"]["pa"]), ["A", "B"]);
    assert_eq!(r["mimb"]["score"]["f1"], 1.0);
    assert_eq!(names(&r["truth_mb"]), ["A", "B", "C", "G"]);
    assert!(r["baseline"]["n_tests"].as_u64().unwrap() > 0);
}

#[test]
fn sampling_is_seeded() {
    let a = sample_and_discover(TRACE, TRACE_FAMILY, "T", 2000, 0.01, 7).unwrap();
    let b = sample_and_discover(TRACE, TRACE_FAMILY, "T", 2000, 0.01, 7).unwrap();
    assert_eq!(a, b);
    let r: Value = serde_json::from_str(&a).unwrap();
    let found = names(&r["mimb"]["mb"]);
    assert!(found.iter().all(|v| ["A", "B", "C", "E", "G"].contains(v)), "{found:?}");
    assert!(sample_and_discover(TRACE, TRACE_FAMILY, "T", 100, 1.5, 7).is_err());
}
