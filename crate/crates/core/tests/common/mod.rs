#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tm_core::dsl::parse;
use tm_core::sim::{parse_config, SimConfig};
use tm_core::{Model, StageKind};

use StageKind::*;

pub const CORPUS: [&str; 3] = ["person", "hammer", "chalice"];

pub fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn corpus_text(name: &str) -> String {
    std::fs::read_to_string(repo_file(&format!("corpus/{name}.tm"))).unwrap()
}

pub fn corpus(name: &str) -> Model {
    parse(&corpus_text(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn corpus_config(name: &str) -> SimConfig {
    let text = std::fs::read_to_string(repo_file(&format!("corpus/{name}.cfg"))).unwrap();
    parse_config(&text).unwrap()
}

/// Legal flows, written out independently of the validator's table.
pub const WITHIN: &[(StageKind, StageKind)] = &[
    (Create, Process),
    (Create, Release),
    (Receive, Process),
    (Receive, Release),
    (Arrive, Accept),
    (Accept, Process),
    (Accept, Release),
    (Process, Release),
    (Release, Transfer),
    (Transfer, Receive),
    (Transfer, Arrive),
];

const TEMPLATES: &[&[StageKind]] = &[
    &[Create, Process, Release, Transfer],
    &[Transfer, Receive, Process],
    &[Transfer, Receive, Process, Release],
    &[Transfer, Arrive, Accept, Process],
    &[Create, Process],
    &[Create, Release, Transfer],
    &[Receive],
    &[],
];

const NAMES: &[&str] = &["shop", "work-cell", "hand", "store_b", "Idea", "x", "node-2a", "kiln"];
const THINGS: &[&str] = &["ore", "grip", "data-item", "T_x"];

fn stage(path: &str, kind: StageKind) -> String {
    if path.is_empty() {
        kind.keyword().to_string()
    } else {
        format!("{path}.{}", kind.keyword())
    }
}

/// A random model that validates without errors, with at most ten
/// machines including the root.
pub fn random_model(seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Model::builder(format!("gen{seed}"));
    let mut machines: Vec<(String, Vec<StageKind>)> = Vec::new();

    let root: Vec<StageKind> = if rng.gen_bool(0.25) {
        TEMPLATES.choose(&mut rng).unwrap().to_vec()
    } else {
        Vec::new()
    };
    b = b.root_stages(&root);
    machines.push((String::new(), root));
    for i in 0..rng.gen_range(0..=9) {
        let parent = machines.choose(&mut rng).unwrap().0.clone();
        let name = format!("{}{i}", NAMES.choose(&mut rng).unwrap());
        let path = if parent.is_empty() {
            name
        } else {
            format!("{parent}.{name}")
        };
        let stages = TEMPLATES.choose(&mut rng).unwrap().to_vec();
        b = b.machine(&path, &stages);
        machines.push((path, stages));
    }

    let things: Vec<String> = (0..rng.gen_range(1..=3))
        .map(|i| format!("{}{i}", THINGS.choose(&mut rng).unwrap()))
        .collect();
    for t in &things {
        b = b.thing(t);
    }

    let mut flows: BTreeSet<(String, String, String)> = BTreeSet::new();
    for (path, stages) in &machines {
        for (s, t) in WITHIN {
            if stages.contains(s) && stages.contains(t) && rng.gen_bool(0.7) {
                let thing = things.choose(&mut rng).unwrap().clone();
                flows.insert((thing, stage(path, *s), stage(path, *t)));
            }
        }
    }
    let with_transfer: Vec<&String> = machines
        .iter()
        .filter(|(_, s)| s.contains(&Transfer))
        .map(|(p, _)| p)
        .collect();
    for a in &with_transfer {
        for c in &with_transfer {
            if a == c || !rng.gen_bool(0.25) {
                continue;
            }
            let (src, dst) = (stage(a, Transfer), stage(c, Transfer));
            let fed: Vec<String> = flows
                .iter()
                .filter(|(_, s, t)| *t == src && *s != dst)
                .map(|(x, _, _)| x.clone())
                .collect();
            if let Some(x) = fed.choose(&mut rng) {
                flows.insert((x.clone(), src, dst));
            }
        }
    }
    for (x, s, t) in &flows {
        b = b.flow(x, s, t);
    }

    let all: Vec<(String, StageKind)> = machines
        .iter()
        .flat_map(|(p, s)| s.iter().map(move |k| (p.clone(), *k)))
        .collect();
    let mut triggers = BTreeSet::new();
    if !all.is_empty() {
        for _ in 0..rng.gen_range(0..=3) {
            let (sp, sk) = all.choose(&mut rng).unwrap().clone();
            let targets: Vec<&(String, StageKind)> = all
                .iter()
                .filter(|(p, k)| *k == Create || (*k == Transfer && *p != sp))
                .filter(|(p, k)| !(*p == sp && *k == sk))
                .collect();
            if let Some((tp, tk)) = targets.choose(&mut rng) {
                triggers.insert((stage(&sp, sk), stage(tp, *tk)));
            }
        }
    }
    for (s, t) in &triggers {
        b = b.trigger(s, t);
    }

    let flow_list: Vec<_> = flows.iter().collect();
    let mut events = Vec::new();
    if !all.is_empty() {
        for i in 0..rng.gen_range(0..=4) {
            let name = format!("ev-{i}");
            let duration = rng.gen_range(1..=4);
            let region: Vec<String> = if !flow_list.is_empty() && rng.gen_bool(0.5) {
                let (x, s, t) = flow_list.choose(&mut rng).unwrap();
                let mut r = vec![format!("{x} : {s} -> {t}")];
                if rng.gen_bool(0.5) {
                    r.push(s.clone());
                }
                r
            } else {
                let (p, k) = all.choose(&mut rng).unwrap();
                vec![stage(p, *k)]
            };
            let refs: Vec<&str> = region.iter().map(String::as_str).collect();
            b = b.event(&name, &refs, duration);
            events.push(name);
        }
    }
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            if rng.gen_bool(0.3) {
                b = b.chronology(&events[i], &events[j]);
            }
        }
    }
    b.build().expect("generator builds")
}

/// Re-spaces canonical text: extra blanks around tokens, comments, blank
/// lines and CRLF endings, keeping every token intact.
pub fn perturb(text: &str, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for line in text.lines() {
        if rng.gen_bool(0.2) {
            out.push_str("# noise\n");
        }
        if rng.gen_bool(0.2) {
            out.push_str("   \t\n");
        }
        let pad = |rng: &mut ChaCha8Rng| [" ", "  ", "\t", " \t "][rng.gen_range(0..4)];
        out.push_str(pad(&mut rng));
        for (i, word) in line.split(' ').enumerate() {
            if i > 0 {
                out.push_str(pad(&mut rng));
            }
            out.push_str(word);
        }
        out.push_str(if rng.gen_bool(0.5) { "\r\n" } else { "\n" });
    }
    out
}
