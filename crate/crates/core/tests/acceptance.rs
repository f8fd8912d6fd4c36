mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{corpus, corpus_config, random_model, CORPUS, WITHIN};
use tm_core::diag::codes;
use tm_core::dsl::{parse, print};
use tm_core::events::state_at;
use tm_core::grip::{fold, opaque_degree, unfold};
use tm_core::render::{to_dot, to_event_timeline, RenderOptions};
use tm_core::sim::{
    check_chronology, enumerate_interleavings, simulate, Cause, SimConfig, Spawn, Trace,
};
use tm_core::validate::{validate, ADJACENCY_RULES, Scope};
use tm_core::{MachinePath, Model, StageKind, StageRef};

use StageKind::*;

fn errors(m: &Model) -> Vec<String> {
    validate(m)
        .into_iter()
        .filter(|d| d.is_error())
        .map(|d| d.to_string())
        .collect()
}

fn criterion_1() {
    for name in CORPUS {
        let m = corpus(name);
        assert_eq!(errors(&m), Vec::<String>::new(), "{name}");
    }
    let person = corpus("person");
    assert_eq!(person.root.submachines.len(), 4);
}

fn criterion_2() {
    let models = CORPUS
        .iter()
        .map(|n| corpus(n))
        .chain((0..200).map(random_model));
    for m in models {
        assert!(m.machines().len() <= 10 || CORPUS.contains(&m.name.as_str()));
        assert!(errors(&m).is_empty(), "{:?}\n{}", errors(&m), print(&m));
        let text = print(&m);
        let back = parse(&text).unwrap_or_else(|d| panic!("{d:?}\n{text}"));
        assert_eq!(back, m, "\n{text}");
        assert_eq!(print(&back), text);
    }
}

/// A smallest model exercising one legal flow, with the arc under test
/// returned separately.
fn minimal(source: StageKind, target: StageKind, cross: bool) -> (Model, (String, String)) {
    let complete = |kinds: &[StageKind]| {
        let mut v: BTreeSet<StageKind> = kinds.iter().copied().collect();
        if v.contains(&Release) {
            v.insert(Transfer);
        }
        if v.contains(&Arrive) || v.contains(&Accept) {
            v.insert(Arrive);
            v.insert(Accept);
        }
        v.into_iter().collect::<Vec<_>>()
    };
    if cross {
        let m = Model::builder("m")
            .machine("a", &complete(&[Create, Release, source]))
            .machine("b", &complete(&[target]))
            .thing("x")
            .flow("x", "a.create", "a.release")
            .flow("x", "a.release", &format!("a.{}", source.keyword()))
            .flow("x", &format!("a.{}", source.keyword()), &format!("b.{}", target.keyword()))
            .build()
            .unwrap();
        (m, (format!("a.{source}"), format!("b.{target}")))
    } else {
        let m = Model::builder("m")
            .machine("a", &complete(&[source, target]))
            .thing("x")
            .flow("x", &format!("a.{source}"), &format!("a.{target}"))
            .build()
            .unwrap();
        (m, (format!("a.{source}"), format!("a.{target}")))
    }
}

fn criterion_3() {
    let expected: BTreeSet<(StageKind, StageKind, Scope)> = WITHIN
        .iter()
        .map(|(s, t)| (*s, *t, Scope::WithinMachine))
        .chain([(Transfer, Transfer, Scope::CrossMachine)])
        .collect();
    let table: BTreeSet<_> = ADJACENCY_RULES
        .iter()
        .map(|r| (r.source, r.target, r.scope))
        .collect();
    assert_eq!(table, expected);
    for (s, t, scope) in expected {
        let (m, (from, to)) = minimal(s, t, scope == Scope::CrossMachine);
        assert!(errors(&m).is_empty(), "{s}->{t}: {:?}", errors(&m));
        let mut mutant = m.clone();
        let arc = mutant
            .flows
            .iter()
            .find(|f| f.source.to_string() == from && f.target.to_string() == to)
            .unwrap()
            .clone();
        mutant.flows.remove(&arc);
        mutant.flows.insert(tm_core::Flow::new(
            arc.thing.clone(),
            arc.target.clone(),
            arc.source.clone(),
        ));
        let found: Vec<&str> = validate(&mutant)
            .iter()
            .filter(|d| d.is_error())
            .map(|d| d.code)
            .collect();
        assert_eq!(found.len(), 1, "{s}->{t}: {found:?}");
        assert!(
            found[0] == codes::ILLEGAL_ADJACENCY || found[0] == codes::BOUNDARY_VIOLATION,
            "{s}->{t}: {found:?}"
        );
    }
}

/// First tick at which any of the listed stages fired.
fn first_tick(trace: &Trace, stages: &[&str]) -> Option<u64> {
    trace
        .firings
        .iter()
        .filter(|f| f.cause != Cause::Retired && stages.contains(&f.stage.to_string().as_str()))
        .map(|f| f.tick)
        .min()
}

fn last_tick(trace: &Trace, stages: &[&str]) -> Option<u64> {
    trace
        .firings
        .iter()
        .filter(|f| f.cause != Cause::Retired && stages.contains(&f.stage.to_string().as_str()))
        .map(|f| f.tick)
        .max()
}

fn criterion_4() {
    let m = corpus("person");
    let t = simulate(&m, &corpus_config("person")).unwrap();
    assert_eq!(t.firings[0].stage.to_string(), "person.create");
    let appears = first_tick(&t, &["person.create"]).unwrap();
    let work = first_tick(
        &t,
        &["person.release", "person.transfer", "work.transfer", "work.receive", "work.process"],
    )
    .unwrap();
    let eats = first_tick(&t, &["eat.create", "eat.process"]).unwrap();
    let name = first_tick(&t, &["name.create", "name.process"]).unwrap();
    assert!(appears < work && appears < eats && appears < name);
    assert!(check_chronology(&m, &t).iter().all(|d| !d.is_error()));
}

fn criterion_5() {
    let m = corpus("hammer");
    let t = simulate(&m, &corpus_config("hammer")).unwrap();
    let grasp_stages = [
        "hand.grasp.create",
        "hand.grasp.process",
        "hand.grasp.release",
        "hand.grasp.transfer",
        "hand.ungrasp.transfer",
    ];
    let grasp = (
        first_tick(&t, &grasp_stages).unwrap(),
        last_tick(&t, &grasp_stages).unwrap(),
    );
    let movement_start = first_tick(
        &t,
        &["hand.movement.create", "hand.movement.release", "hand.movement.transfer"],
    )
    .unwrap();
    let ungrasp = first_tick(&t, &["hand.ungrasp.transfer"]).unwrap();
    assert!(grasp.0 < movement_start && movement_start < grasp.1);
    assert_eq!(grasp.1, ungrasp);

    let table = to_event_timeline(&t, &m);
    let rows: BTreeMap<&str, (u64, u64)> = table
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c[0], (c[1].parse().unwrap(), c[2].parse().unwrap()))
        })
        .collect();
    assert_eq!(rows["grasp"], grasp);
    assert_eq!(rows["movement"].0, movement_start);
}

fn spawn_at(stage: &str) -> SimConfig {
    SimConfig {
        spawns: vec![Spawn {
            stage: stage.parse().unwrap(),
            tick: 1,
            count: 1,
        }],
        ..SimConfig::default()
    }
}

fn keep(paths: &[&str]) -> Vec<MachinePath> {
    paths.iter().map(|p| MachinePath::parse(p).unwrap()).collect()
}

fn criterion_6() {
    let cases = [
        (corpus("person"), corpus_config("person")),
        (corpus("person").restrict(&keep(&["person", "name"])), corpus_config("person")),
        (corpus("hammer").restrict(&keep(&["hand"])), corpus_config("hammer")),
        (
            corpus("chalice").restrict(&keep(&["idea", "silver", "smelter"])),
            spawn_at("idea.create"),
        ),
    ];
    for (m, cfg) in &cases {
        let seq = simulate(m, cfg).unwrap().firing_sequence();
        assert!(seq.len() <= 12, "{} firings", seq.len());
        let all = enumerate_interleavings(m, cfg, 12).unwrap();
        assert!(all.contains(&seq), "{}: {seq:?}", m.name);
    }
    let pipeline = Model::builder("line")
        .machine("a", &[Create, Process, Release, Transfer])
        .thing("x")
        .flow("x", "a.create", "a.process")
        .flow("x", "a.process", "a.release")
        .flow("x", "a.release", "a.transfer")
        .build()
        .unwrap();
    assert_eq!(
        enumerate_interleavings(&pipeline, &spawn_at("a.create"), 12)
            .unwrap()
            .len(),
        1
    );
}

fn criterion_7() {
    for name in CORPUS {
        let (m, cfg) = (corpus(name), corpus_config(name));
        let first = simulate(&m, &cfg).unwrap().to_json_lines();
        for _ in 0..99 {
            assert_eq!(simulate(&m, &cfg).unwrap().to_json_lines(), first);
        }
    }
}

fn criterion_8() {
    for name in CORPUS {
        let m = corpus(name);
        for machine in m.machines().into_iter().skip(1) {
            let p = machine.path.clone();
            let (folded, state) = fold(&m, p.as_str()).unwrap();
            let back = unfold(&folded, &state, p.as_str()).unwrap();
            assert_eq!(print(&back), print(&m), "{name}: {p}");

            let outside = m
                .machines()
                .into_iter()
                .filter(|x| !x.path.is_within(&p))
                .map(|x| x.stages.len())
                .sum::<usize>();
            let dot = to_dot(&folded, &RenderOptions::default()).unwrap();
            let nodes = dot.lines().filter(|l| l.contains("shape=")).count();
            assert_eq!(nodes, outside + 1, "{name}: {p}");

            let inside = |r: &StageRef| r.machine.is_within(&p);
            let arcs: Vec<(&StageRef, &StageRef)> = m
                .flows
                .iter()
                .map(|f| (&f.source, &f.target))
                .chain(m.triggers.iter().map(|t| (&t.source, &t.target)))
                .collect();
            let boundary_in = arcs.iter().filter(|(s, t)| !inside(s) && inside(t)).count();
            let boundary_out = arcs.iter().filter(|(s, t)| inside(s) && !inside(t)).count();
            assert_eq!(opaque_degree(&folded, &p), (boundary_in, boundary_out), "{name}: {p}");
            let interior = arcs.iter().filter(|(s, t)| inside(s) && inside(t)).count();
            let edges = dot.lines().filter(|l| l.contains(" -> ")).count();
            assert_eq!(edges, arcs.len() - interior);
        }
    }
}

fn criterion_9() {
    for name in CORPUS {
        let m = corpus(name);
        let t = simulate(&m, &corpus_config(name)).unwrap();
        let born = t
            .firings
            .iter()
            .filter(|f| matches!(f.cause, Cause::Spawn | Cause::Trigger))
            .count();
        let retired = t.firings.iter().filter(|f| f.cause == Cause::Retired).count();
        let positioned = state_at(&m, &t, t.horizon).unwrap().positions.len();
        assert!(born > 0);
        assert_eq!(born, retired + positioned, "{name}");
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(), u64); 9] = [
        ("1 corpus validity", criterion_1, 1),
        ("2 round-trip", criterion_2, 10),
        ("3 adjacency soundness", criterion_3, 1),
        ("4 chronology reproduction", criterion_4, 1),
        ("5 hammer concurrency", criterion_5, 1),
        ("6 oracle equivalence", criterion_6, 30),
        ("7 determinism", criterion_7, 10),
        ("8 fold/unfold identity", criterion_8, 5),
        ("9 conservation", criterion_9, 1),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(limit);
        let ok = outcome.is_ok() && in_time;
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {name} ({:.3}s, limit {limit}s){}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if outcome.is_ok() && !in_time { " too slow" } else { "" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
