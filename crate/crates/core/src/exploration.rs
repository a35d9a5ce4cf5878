//! The GUI model learned during exploration: known states with per-event
//! visit counts, observed transitions, and the recorded event sequence that
//! reaches each state from the start screen.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use crate::simulator::{InputEvent, StateKey};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownState {
    /// Event ids enabled in the state, in enabled-list order.
    pub events: Vec<String>,
    pub visits: Vec<u32>,
}

impl KnownState {
    fn position(&self, event_id: &str) -> Option<usize> {
        self.events.iter().position(|e| e == event_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub to: StateKey,
    pub crashed: bool,
}

#[derive(Debug, Clone)]
pub struct ExplorationModel {
    start: StateKey,
    known: HashMap<StateKey, KnownState>,
    discovery: Vec<StateKey>,
    transitions: HashMap<StateKey, BTreeMap<String, Transition>>,
    reach_path: HashMap<StateKey, Vec<InputEvent>>,
}

impl ExplorationModel {
    pub fn new(start: StateKey) -> Self {
        let mut reach_path = HashMap::new();
        reach_path.insert(start.clone(), Vec::new());
        ExplorationModel {
            start,
            known: HashMap::new(),
            discovery: Vec::new(),
            transitions: HashMap::new(),
            reach_path,
        }
    }

    pub fn start_key(&self) -> &StateKey {
        &self.start
    }

    /// Registers a state the first time it is seen.
    pub fn register(&mut self, key: &StateKey, enabled: &[InputEvent]) {
        if self.known.contains_key(key) {
            return;
        }
        self.known.insert(
            key.clone(),
            KnownState {
                events: enabled.iter().map(|e| e.event_id.clone()).collect(),
                visits: vec![0; enabled.len()],
            },
        );
        self.discovery.push(key.clone());
    }

    pub fn is_known(&self, key: &StateKey) -> bool {
        self.known.contains_key(key)
    }

    pub fn state(&self, key: &StateKey) -> Option<&KnownState> {
        self.known.get(key)
    }

    /// States in discovery order.
    pub fn states(&self) -> &[StateKey] {
        &self.discovery
    }

    pub fn visits(&self, key: &StateKey, event_id: &str) -> u32 {
        self.known
            .get(key)
            .and_then(|s| s.position(event_id).map(|i| s.visits[i]))
            .unwrap_or(0)
    }

    pub fn first_untried(&self, key: &StateKey) -> Option<&str> {
        let s = self.known.get(key)?;
        s.visits
            .iter()
            .position(|&v| v == 0)
            .map(|i| s.events[i].as_str())
    }

    pub fn has_untried(&self, key: &StateKey) -> bool {
        self.first_untried(key).is_some()
    }

    /// Least visited event of the state; ties go to the earliest event.
    pub fn least_visited(&self, key: &StateKey) -> Option<&str> {
        let s = self.known.get(key)?;
        let (i, _) = s.visits.iter().enumerate().min_by_key(|&(i, &v)| (v, i))?;
        Some(s.events[i].as_str())
    }

    pub fn transition(&self, from: &StateKey, event_id: &str) -> Option<&Transition> {
        self.transitions.get(from)?.get(event_id)
    }

    pub fn reach_path(&self, key: &StateKey) -> Option<&[InputEvent]> {
        self.reach_path.get(key).map(Vec::as_slice)
    }

    pub fn reach_paths(&self) -> impl Iterator<Item = (&StateKey, &[InputEvent])> {
        self.reach_path.iter().map(|(k, p)| (k, p.as_slice()))
    }

    /// Overrides (or, with `None`, forgets) the recorded path to a state.
    pub fn set_reach_path(&mut self, key: &StateKey, path: Option<Vec<InputEvent>>) {
        match path {
            Some(p) => {
                self.reach_path.insert(key.clone(), p);
            }
            None => {
                self.reach_path.remove(key);
            }
        }
    }

    /// Stores an observed transition and bumps the event's visit count. The
    /// destination's reach path becomes `reach_path(from) + event` when it is
    /// unset or strictly longer. Returns the previous reach path of `to`
    /// (`Some(None)` for unset) when it was replaced.
    pub fn record_transition(
        &mut self,
        from: &StateKey,
        event: &InputEvent,
        to: &StateKey,
        crashed: bool,
    ) -> Option<Option<Vec<InputEvent>>> {
        if let Some(s) = self.known.get_mut(from) {
            if let Some(i) = s.position(&event.event_id) {
                s.visits[i] += 1;
            }
        }
        self.transitions.entry(from.clone()).or_default().insert(
            event.event_id.clone(),
            Transition {
                to: to.clone(),
                crashed,
            },
        );
        if crashed {
            return None;
        }
        let base = self.reach_path.get(from)?;
        let candidate_len = base.len() + 1;
        let replace = self
            .reach_path
            .get(to)
            .is_none_or(|existing| existing.len() > candidate_len);
        if !replace {
            return None;
        }
        let mut candidate = base.clone();
        candidate.push(event.clone());
        Some(self.reach_path.insert(to.clone(), candidate))
    }

    /// Shortest known event route from `from` to any state satisfying
    /// `goal`, skipping transitions that crashed. Returns the event ids and
    /// the goal reached.
    pub fn route<F>(&self, from: &StateKey, goal: F) -> Option<(Vec<String>, StateKey)>
    where
        F: Fn(&StateKey) -> bool,
    {
        if goal(from) {
            return Some((Vec::new(), from.clone()));
        }
        let mut parent: HashMap<&StateKey, (&StateKey, &str)> = HashMap::new();
        let mut seen: HashSet<&StateKey> = HashSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(cur) = queue.pop_front() {
            let Some(known) = self.known.get(cur) else {
                continue;
            };
            let Some(out) = self.transitions.get(cur) else {
                continue;
            };
            for event_id in &known.events {
                let Some(t) = out.get(event_id) else { continue };
                if t.crashed || !seen.insert(&t.to) {
                    continue;
                }
                parent.insert(&t.to, (cur, event_id.as_str()));
                if goal(&t.to) {
                    let mut path = Vec::new();
                    let mut node = &t.to;
                    while let Some(&(prev, ev)) = parent.get(node) {
                        path.push(ev.to_owned());
                        node = prev;
                    }
                    path.reverse();
                    return Some((path, t.to.clone()));
                }
                queue.push_back(&t.to);
            }
        }
        None
    }
}
