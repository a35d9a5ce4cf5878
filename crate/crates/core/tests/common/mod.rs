#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use changehound::builder::ModelBuilder;
use changehound::catgen::SequenceStatus;
use changehound::corpus::{corpus_dir, load_corpus, CorpusApp};
use changehound::impact::ChangeSet;
use changehound::model::{load_app_model, ActionKind, AppModel, Effect, FunctionRef, Guard};
use changehound::runner::RunOutput;
use changehound::simulator::{state_key, InputEvent, Simulator, StateKey};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn corpus() -> Vec<CorpusApp> {
    load_corpus(corpus_dir()).expect("bundled corpus loads")
}

pub fn app(name: &str) -> CorpusApp {
    changehound::corpus::find_app(corpus_dir(), name).expect("corpus app exists")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn chain_model() -> AppModel {
    load_app_model(fixture("chain.app.json")).unwrap()
}

/// A random call graph plus listener-bearing elements spread over a few
/// activities. Node count is functions + elements.
pub struct ImpactCase {
    pub model: AppModel,
    pub changes: ChangeSet,
}

pub fn random_impact_case(rng: &mut ChaCha8Rng, nodes: usize) -> ImpactCase {
    let n_fn = (nodes * 2 / 3).max(2);
    let n_el = (nodes - n_fn.min(nodes)).max(1);
    let fns: Vec<String> = (0..n_fn)
        .map(|i| format!("gen.C{}.f{i}(int)", i % 7))
        .collect();
    let n_act = rng.gen_range(1..=4usize);
    let mut b = ModelBuilder::new("random");
    for f in &fns {
        b = b.function(f);
    }
    let n_edges = rng.gen_range(0..=n_fn * 2);
    for _ in 0..n_edges {
        let a = rng.gen_range(0..n_fn);
        let c = rng.gen_range(0..n_fn);
        b = b.call(&fns[a], &fns[c]);
    }
    let mut per_act: Vec<Vec<String>> = vec![Vec::new(); n_act];
    for i in 0..n_el {
        let id = format!("e{i}");
        if rng.gen_bool(0.8) {
            let f = &fns[rng.gen_range(0..n_fn)];
            b = b.button_with_listener(&id, f);
        } else {
            b = b.button(&id);
        }
        per_act[rng.gen_range(0..n_act)].push(id.clone());
        // some elements appear on two screens
        let other = rng.gen_range(0..n_act);
        if rng.gen_bool(0.1) && !per_act[other].contains(&id) {
            per_act[other].push(id);
        }
    }
    for (a, els) in per_act.into_iter().enumerate() {
        let layout = format!("l{a}");
        b = b.activity(&format!("A{a}"), &layout, a == 0);
        b = b.layout_owned(&layout, els);
    }
    let k = rng.gen_range(1..=3usize.min(n_fn));
    let changed: Vec<FunctionRef> = fns
        .choose_multiple(rng, k)
        .map(|s| FunctionRef::new(s.as_str()))
        .collect();
    ImpactCase {
        model: b.build(),
        changes: ChangeSet::new(changed, Vec::new(), Vec::new()).unwrap(),
    }
}

/// Breadth-first reachability over the raw model: call edges and listener
/// bindings, both taken as undirected.
pub fn oracle_impact(
    model: &AppModel,
    changed: &[FunctionRef],
) -> (BTreeSet<String>, BTreeSet<FunctionRef>) {
    let mut adj: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut link = |a: String, b: String| {
        adj.entry(a.clone()).or_default().insert(b.clone());
        adj.entry(b).or_default().insert(a);
    };
    for (a, b) in &model.call_graph.edges {
        link(format!("f:{a}"), format!("f:{b}"));
    }
    for e in &model.elements {
        for f in e.listeners.values() {
            link(format!("e:{}", e.element_id), format!("f:{f}"));
        }
    }
    let mut seen: BTreeSet<String> = changed.iter().map(|f| format!("f:{f}")).collect();
    let mut queue: VecDeque<String> = seen.iter().cloned().collect();
    while let Some(n) = queue.pop_front() {
        for m in adj.get(&n).into_iter().flatten() {
            if seen.insert(m.clone()) {
                queue.push_back(m.clone());
            }
        }
    }
    let elements = seen
        .iter()
        .filter_map(|s| s.strip_prefix("e:"))
        .map(str::to_owned)
        .collect();
    let functions = seen
        .iter()
        .filter_map(|s| s.strip_prefix("f:"))
        .map(FunctionRef::new)
        .collect();
    (elements, functions)
}

/// Every state reachable from the start screen, with one event path to it,
/// found by forking the simulator on each enabled event.
pub fn reachable_states(
    model: &AppModel,
    seed: u64,
    limit: usize,
) -> BTreeMap<StateKey, Vec<InputEvent>> {
    let sim = Simulator::new(model, seed);
    let mut found = BTreeMap::new();
    found.insert(sim.key(), Vec::new());
    let mut queue = VecDeque::from([(sim, Vec::<InputEvent>::new())]);
    while let Some((sim, path)) = queue.pop_front() {
        if found.len() >= limit {
            break;
        }
        for event in sim.enabled_events() {
            let mut next = sim.clone();
            next.step(&event).unwrap();
            if let std::collections::btree_map::Entry::Vacant(slot) =
                found.entry(state_key(next.state()))
            {
                let mut p = path.clone();
                p.push(event);
                slot.insert(p.clone());
                queue.push_back((next, p));
            }
        }
    }
    found
}

/// A random app of `screens` activities wired by goto buttons. Some screens
/// carry a button that flips a shared flag, doubling the state space.
pub fn random_nav_model(rng: &mut ChaCha8Rng, screens: usize, acyclic: bool) -> AppModel {
    let mut b = ModelBuilder::new("nav").flag("toggled");
    for s in 0..screens {
        let layout = format!("s{s}");
        let mut els = Vec::new();
        let links = rng.gen_range(1..=3usize);
        for k in 0..links {
            let to = if acyclic {
                if s + 1 >= screens {
                    break;
                }
                rng.gen_range(s + 1..screens)
            } else {
                rng.gen_range(0..screens)
            };
            let id = format!("s{s}_go{k}");
            b = b.button(&id).goto(&id, &format!("A{to}"));
            els.push(id);
        }
        if rng.gen_bool(0.3) {
            let id = format!("s{s}_toggle");
            let set = |value: bool| {
                vec![Effect::SetFlag {
                    flag: "toggled".into(),
                    value,
                }]
            };
            let off = Guard::FlagIs {
                flag: "toggled".into(),
                value: false,
            };
            b = b
                .button(&id)
                .rule(&id, ActionKind::Click, Some(off), set(true))
                .rule(&id, ActionKind::Click, None, set(false));
            els.push(id);
        }
        if els.is_empty() {
            let id = format!("s{s}_noop");
            b = b.button(&id);
            els.push(id);
        }
        b = b
            .activity(&format!("A{s}"), &layout, s == 0)
            .layout_owned(&layout, els);
    }
    b.build()
}

/// All length-3 words over the enabled events holding exactly one target
/// event, whose other two events are distinct (or equal, when only one
/// non-target exists). With no non-targets, `(t, t, t)` per target.
pub fn brute_force_length3(
    enabled: &[String],
    targets: &BTreeSet<String>,
) -> BTreeSet<Vec<String>> {
    let others: Vec<&String> = enabled.iter().filter(|e| !targets.contains(*e)).collect();
    let mut out = BTreeSet::new();
    for a in enabled {
        for b in enabled {
            for c in enabled {
                let word = vec![a.clone(), b.clone(), c.clone()];
                let hits = word.iter().filter(|w| targets.contains(*w)).count();
                let ok = if others.is_empty() {
                    hits == 3 && a == b && b == c
                } else {
                    let rest: Vec<&String> =
                        word.iter().filter(|w| !targets.contains(*w)).collect();
                    hits == 1
                        && (if others.len() == 1 {
                            rest[0] == rest[1]
                        } else {
                            rest[0] != rest[1]
                        })
                };
                if ok {
                    out.insert(word);
                }
            }
        }
    }
    out
}

/// Checks that the sequence ledger agrees with the trace: each executed
/// sequence event ran in the sequence's target state, in order, and owns its
/// trace index. Returns how many sequences were paused and later resumed.
pub fn check_ledger(out: &RunOutput) -> Result<usize, String> {
    let mut owner: BTreeMap<usize, &str> = BTreeMap::new();
    let mut ids = BTreeSet::new();
    let mut resumed = 0;
    for seq in &out.sequences {
        let id = seq.sequence_id.as_str();
        if !ids.insert(id) {
            return Err(format!("duplicate sequence {id}"));
        }
        if seq.executed_at.len() != seq.executed_prefix
            || !seq.executed_at.windows(2).all(|w| w[0] < w[1])
        {
            return Err(format!("{id}: executed indices {:?}", seq.executed_at));
        }
        let status_ok = match seq.executed_prefix {
            0 => seq.status == SequenceStatus::Pending,
            n if n == seq.events.len() => seq.status == SequenceStatus::Complete,
            _ => matches!(
                seq.status,
                SequenceStatus::InProgress | SequenceStatus::Paused
            ),
        };
        if !status_ok || (seq.status == SequenceStatus::Paused && seq.pauses == 0) {
            return Err(format!(
                "{id}: status {:?} after {} events",
                seq.status, seq.executed_prefix
            ));
        }
        for (j, &at) in seq.executed_at.iter().enumerate() {
            let rec = &out.trace.records[at - 1];
            if !seq.events[j].matches(&rec.event) {
                return Err(format!(
                    "{id}: event {j} ran as {} at {at}",
                    rec.event.event_id
                ));
            }
            if Some(&rec.state_before) != seq.target_state.as_ref() {
                return Err(format!("{id}: event {j} ran outside its target state"));
            }
            if let Some(other) = owner.insert(at, id) {
                return Err(format!("index {at} claimed by {id} and {other}"));
            }
        }
        if seq.pauses > 0 && seq.executed_prefix > 1 {
            resumed += 1;
        }
    }
    Ok(resumed)
}
