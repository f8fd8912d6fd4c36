mod common;

use common::{corpus, random_model, CORPUS};
use proptest::prelude::*;
use tm_core::dsl::print;
use tm_core::grip::{boundary_arcs, fold, fold_with, opaque_degree, unfold, GripError};
use tm_core::model::Node;
use tm_core::validate::validate;
use tm_core::{MachinePath, Model, StageKind};

use StageKind::*;

fn path(p: &str) -> MachinePath {
    MachinePath::parse(p).unwrap()
}

fn error_count(m: &Model) -> usize {
    validate(m).iter().filter(|d| d.is_error()).count()
}

#[test]
fn folding_work_leaves_three_machines_and_an_opaque_node() {
    let m = corpus("person");
    let (folded, state) = fold(&m, "work").unwrap();
    let subs = &folded.root.submachines;
    assert_eq!(subs.len(), 4);
    assert_eq!(subs.iter().filter(|s| s.folded).count(), 1);
    assert_eq!(subs.iter().filter(|s| !s.folded).count(), 3);
    assert_eq!(folded.folded_paths(), vec![path("work")]);
    assert_eq!(state.folded_paths().into_iter().collect::<Vec<_>>(), vec![&path("work")]);

    let cross = folded
        .flows
        .iter()
        .find(|f| f.source.to_string() == "person.transfer")
        .unwrap();
    assert_eq!(folded.node_of(&cross.target), Some(Node::Opaque(path("work"))));
    assert_eq!(opaque_degree(&folded, &path("work")), (1, 0));
}

#[test]
fn isolated_machine_folds_to_degree_zero() {
    let m = Model::builder("iso")
        .machine("a", &[Create, Process])
        .machine("b", &[Create])
        .thing("x")
        .flow("x", "a.create", "a.process")
        .build()
        .unwrap();
    let (folded, _) = fold(&m, "a").unwrap();
    assert_eq!(opaque_degree(&folded, &path("a")), (0, 0));
    assert!(folded.flows.is_empty());
}

#[test]
fn qualified_paths_resolve() {
    let m = corpus("person");
    let (a, _) = fold(&m, "person.work").unwrap();
    let (b, _) = fold(&m, "work").unwrap();
    assert_eq!(a, b);
}

#[test]
fn fold_unfold_is_identity_on_the_corpus() {
    for name in CORPUS {
        let m = corpus(name);
        for machine in m.machines().into_iter().skip(1) {
            let p = machine.path.as_str();
            let (folded, state) = fold(&m, p).unwrap();
            assert_eq!(error_count(&folded), 0, "{name}: {p}");
            let back = unfold(&folded, &state, p).unwrap();
            assert_eq!(print(&back), print(&m), "{name}: {p}");
            assert_eq!(back, m);
        }
    }
}

#[test]
fn unfolding_one_of_two_folds() {
    let m = corpus("person");
    let (once, s1) = fold(&m, "work").unwrap();
    let (twice, s2) = fold_with(&once, &s1, "eat").unwrap();
    let mut both = twice.folded_paths();
    both.sort();
    assert_eq!(both, vec![path("eat"), path("work")]);
    let back = unfold(&twice, &s2, "work").unwrap();
    let (only_eat, _) = fold(&m, "eat").unwrap();
    assert_eq!(print(&back), print(&only_eat));
}

#[test]
fn errors() {
    let m = corpus("hammer");
    assert_eq!(fold(&m, "nope").unwrap_err(), GripError::PathNotFound("nope".into()));
    assert_eq!(fold(&m, "hammering").unwrap_err(), GripError::CannotFoldRoot);
    let (_, state) = fold(&m, "hand").unwrap();
    assert_eq!(
        unfold(&m, &state, "nail").unwrap_err(),
        GripError::PathNotFolded("nail".into())
    );
    assert!(matches!(
        unfold(&m, &state, "hand"),
        Err(GripError::PathNotFolded(_))
    ));

    let (folded, state) = fold(&m, "hand.grasp").unwrap();
    assert!(matches!(
        fold_with(&folded, &state, "hand"),
        Err(GripError::NestedFold { .. })
    ));
    let (folded, state) = fold(&m, "hand").unwrap();
    assert!(matches!(
        fold_with(&folded, &state, "hand.grasp"),
        Err(GripError::PathNotFound(_))
    ));
}

#[test]
fn boundary_arcs_of_hand() {
    let m = corpus("hammer");
    let hand = path("hand");
    let (flows, triggers) = boundary_arcs(&m, &hand);
    let (folded, _) = fold(&m, "hand").unwrap();
    assert_eq!(
        opaque_degree(&folded, &hand),
        (
            flows.iter().filter(|f| !f.source.machine.is_within(&hand)).count()
                + triggers.iter().filter(|t| !t.source.machine.is_within(&hand)).count(),
            flows.iter().filter(|f| f.source.machine.is_within(&hand)).count()
                + triggers.iter().filter(|t| t.source.machine.is_within(&hand)).count(),
        )
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_folds_preserve_validity_and_invert(seed in 0u64..10_000, pick in 0usize..16) {
        let m = random_model(seed);
        let paths: Vec<MachinePath> = m.machines().into_iter().skip(1).map(|x| x.path.clone()).collect();
        prop_assume!(!paths.is_empty());
        let p = &paths[pick % paths.len()];
        let (folded, state) = fold(&m, p.as_str()).unwrap();
        prop_assert_eq!(error_count(&folded), 0, "{}", print(&folded));

        let (flows, triggers) = boundary_arcs(&m, p);
        let inward = flows.iter().filter(|f| !f.source.machine.is_within(p)).count()
            + triggers.iter().filter(|t| !t.source.machine.is_within(p)).count();
        let outward = flows.len() + triggers.len() - inward;
        prop_assert_eq!(opaque_degree(&folded, p), (inward, outward));

        let back = unfold(&folded, &state, p.as_str()).unwrap();
        prop_assert_eq!(print(&back), print(&m));
    }
}
