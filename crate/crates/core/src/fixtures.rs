//! Small hand-built graphs used by tests, examples and the demo page.

use crate::graph::{Dag, InterventionFamily};

/// Seven-variable worked example: `E → A, E → B, A → T, B → T, T → G,
/// C → G, F → C`, with three experiments manipulating `{G}`, `{A}` and
/// `{A, B}`. Variables are declared in the order `E, A, B, F, C, G, T`.
pub fn trace_dag() -> (Dag, InterventionFamily) {
    let dag = Dag::new(
        &["E", "A", "B", "F", "C", "G", "T"],
        &[("E", "A"), ("E", "B"), ("A", "T"), ("B", "T"), ("T", "G"), ("C", "G"), ("F", "C")],
    )
    .expect("fixture is acyclic");
    let fam = InterventionFamily::from_names(&dag, &[vec!["G"], vec!["A"], vec!["A", "B"]]).expect("fixture names");
    (dag, fam)
}

/// `A → T → B ← F`: one parent, one child, one spouse.
pub fn parent_child_spouse() -> Dag {
    Dag::new(&["A", "T", "B", "F"], &[("A", "T"), ("T", "B"), ("F", "B")]).expect("fixture is acyclic")
}

/// `A → T → B ← C`, the graph used to contrast unions and intersections.
pub fn collider_child() -> Dag {
    Dag::new(&["A", "T", "B", "C"], &[("A", "T"), ("T", "B"), ("C", "B")]).expect("fixture is acyclic")
}

/// `T → B ← A`, `A → C ← B`: a descendant that only a spouse can separate.
pub fn hidden_descendant() -> Dag {
    Dag::new(&["T", "A", "B", "C"], &[("T", "B"), ("A", "B"), ("A", "C"), ("B", "C")]).expect("fixture is acyclic")
}
