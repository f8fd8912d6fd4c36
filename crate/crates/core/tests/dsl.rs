mod common;

use common::{corpus, corpus_text, perturb, random_model, repo_file, CORPUS};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tm_core::diag::codes;
use tm_core::dsl::{parse, parse_full, print};
use tm_core::grip::fold;
use tm_core::{Model, StageKind};

use StageKind::*;

#[test]
fn person_has_four_submachines() {
    let m = corpus("person");
    let names: Vec<&str> = m.root.submachines.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, vec!["person", "work", "eat", "name"]);
}

#[test]
fn corpus_round_trips_and_printing_is_idempotent() {
    for name in CORPUS {
        let src = corpus_text(name);
        let m = parse(&src).unwrap();
        let once = print(&m);
        assert_eq!(parse(&once).unwrap(), m);
        assert_eq!(print(&parse(&once).unwrap()), once);
        assert!(parse_full(&src).unwrap().warnings.is_empty(), "{name}");
    }
}

#[test]
fn programmatic_person_prints_like_the_corpus() {
    let m = Model::builder("person")
        .machine("person", &[Create, Release, Transfer])
        .machine("work", &[Transfer, Receive, Process])
        .machine("eat", &[Create, Process])
        .machine("name", &[Create, Process])
        .thing("person")
        .thing("food")
        .thing("string")
        .flow("person", "person.create", "person.release")
        .flow("person", "person.release", "person.transfer")
        .flow("person", "person.transfer", "work.transfer")
        .flow("person", "work.transfer", "work.receive")
        .flow("person", "work.receive", "work.process")
        .flow("food", "eat.create", "eat.process")
        .flow("string", "name.create", "name.process")
        .trigger("person.create", "name.create")
        .trigger("person.create", "eat.create")
        .event("person-appears", &["person.create"], 1)
        .event(
            "goes-to-work",
            &[
                "person.release",
                "person.transfer",
                "person : person.transfer -> work.transfer",
                "work.receive",
                "work.process",
            ],
            1,
        )
        .event("eats", &["eat.create", "eat.process"], 1)
        .event("name-given", &["name.create", "name.process"], 1)
        .chronology("person-appears", "goes-to-work")
        .chronology("person-appears", "eats")
        .chronology("person-appears", "name-given")
        .build()
        .unwrap();
    assert_eq!(print(&m), print(&corpus("person")));
}

#[test]
fn dangling_mutant_gives_one_diagnostic() {
    let src = std::fs::read_to_string(repo_file("mutants/dangling-reference.tm")).unwrap();
    let d = parse(&src).unwrap_err();
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, codes::DANGLING_REFERENCE);
    let line = src
        .lines()
        .position(|l| l.contains("-> b.receive"))
        .unwrap() as u32
        + 1;
    assert_eq!(d[0].span.unwrap().line, line);
}

#[test]
fn diagnostics_are_sorted_and_every_error_has_a_span() {
    let src = "model m\nmachine a { create }\nthing t\nthing t\nflow t : a.create -> q.process\nmachine a {}\nbad line\n";
    let d = parse(src).unwrap_err();
    let keys: Vec<(u32, u32)> = d
        .iter()
        .map(|d| (d.span.unwrap().line, d.span.unwrap().column))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(d.len(), 4);
}

#[test]
fn parsing_never_panics_on_corpus_prefixes() {
    let src = corpus_text("hammer");
    for cut in (0..src.len()).step_by(7) {
        if src.is_char_boundary(cut) {
            let _ = parse(&src[..cut]);
        }
    }
}

fn shuffle_body(text: &str, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    let machines = lines
        .iter()
        .take_while(|l| l.starts_with("model") || l.starts_with("machine"))
        .count();
    lines[machines..].shuffle(&mut rng);
    lines.join("\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_models_round_trip(seed in any::<u64>()) {
        let m = random_model(seed);
        let text = print(&m);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(print(&back), text);
    }

    #[test]
    fn whitespace_does_not_change_the_parse(seed in any::<u64>(), noise in any::<u64>()) {
        let m = random_model(seed);
        let noisy = perturb(&print(&m), noise);
        prop_assert_eq!(parse(&noisy).unwrap(), m);
    }

    #[test]
    fn declaration_order_does_not_matter(seed in any::<u64>(), order in any::<u64>()) {
        let m = random_model(seed);
        let shuffled = shuffle_body(&print(&m), order);
        prop_assert_eq!(parse(&shuffled).unwrap(), m);
    }

    #[test]
    fn folded_views_round_trip(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let m = random_model(seed);
        let paths: Vec<String> = m.machines().iter().skip(1).map(|x| x.path.to_string()).collect();
        prop_assume!(!paths.is_empty());
        let (f, _) = fold(&m, &paths[pick.index(paths.len())]).unwrap();
        let text = print(&f);
        prop_assert_eq!(parse(&text).unwrap(), f);
    }
}
