mod common;

use common::{corpus, random_model, CORPUS};
use proptest::prelude::*;
use tm_core::dsl::print;
use tm_core::model::{normalize_receive, Direction, NormalizeError};
use tm_core::{Model, StageKind};

use StageKind::*;

fn gate(kinds: &[StageKind], flows: &[(&str, &str)]) -> Model {
    let mut b = Model::builder("g").machine("m", kinds).thing("x");
    for (s, t) in flows {
        b = b.flow("x", s, t);
    }
    b.build().unwrap()
}

#[test]
fn fuse_merges_arrive_and_accept() {
    let m = gate(
        &[Arrive, Accept, Process],
        &[("m.arrive", "m.accept"), ("m.accept", "m.process")],
    );
    let fused = normalize_receive(&m, Direction::Fuse).unwrap();
    let expected = gate(&[Receive, Process], &[("m.receive", "m.process")]);
    assert_eq!(print(&fused), print(&expected));
}

#[test]
fn unfuse_splits_receive() {
    let m = gate(&[Receive, Process], &[("m.receive", "m.process")]);
    let unfused = normalize_receive(&m, Direction::Unfuse).unwrap();
    let expected = gate(
        &[Arrive, Accept, Process],
        &[("m.arrive", "m.accept"), ("m.accept", "m.process")],
    );
    assert_eq!(print(&unfused), print(&expected));
}

#[test]
fn bypassing_accept_cannot_fuse() {
    let m = Model::builder("g")
        .machine("m", &[Transfer, Arrive, Accept, Process])
        .thing("x")
        .flow("x", "m.arrive", "m.accept")
        .flow("x", "m.arrive", "m.process")
        .build()
        .unwrap();
    assert!(matches!(
        normalize_receive(&m, Direction::Fuse),
        Err(NormalizeError::CannotFuse { machines }) if machines.len() == 1
    ));
}

#[test]
fn corpus_unfuse_then_fuse_is_identity() {
    for name in CORPUS {
        let m = corpus(name);
        let there = normalize_receive(&m, Direction::Unfuse).unwrap();
        let back = normalize_receive(&there, Direction::Fuse).unwrap();
        assert_eq!(print(&back), print(&m), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_unfuse_then_fuse_is_identity(seed in 0u64..10_000) {
        let m = random_model(seed);
        prop_assume!(m.machines().iter().all(|x| !x.has(Arrive) && !x.has(Accept)));
        let there = normalize_receive(&m, Direction::Unfuse).unwrap();
        prop_assert!(there.machines().iter().all(|x| !x.has(Receive)));
        let back = normalize_receive(&there, Direction::Fuse).unwrap();
        prop_assert_eq!(print(&back), print(&m));
    }
}
