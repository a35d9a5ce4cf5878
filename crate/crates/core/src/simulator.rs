//! Deterministic executable semantics for an [`AppModel`].
//!
//! The simulator keeps the current [`GuiState`], dispatches listeners,
//! applies the first matching transition rule, fires injected faults and
//! restarts the app after a crash. Edit-text payloads are derived from the
//! run seed, the element and its interaction count, so the enabled event list
//! of a state is stable across calls.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ActionKind, AppModel, Effect, FaultKind, FunctionRef, Guard};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event `{event}` is not enabled in state {state}")]
    IllegalEvent { event: String, state: StateKey },
    #[error("malformed event `{0}`: payload must be present exactly for edit_text")]
    MalformedEvent(String),
}

/// Digest identifying an abstract GUI state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateKey(pub String);

impl StateKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub activity_id: String,
    pub active_layouts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuiState {
    pub activity_id: String,
    pub active_layouts: Vec<String>,
    /// Flattened elements of the active layouts, in layout order.
    pub visible_elements: Vec<String>,
    pub flags: BTreeMap<String, bool>,
    pub values: BTreeMap<String, String>,
    pub interaction_counts: BTreeMap<String, u32>,
    pub back_stack: Vec<Frame>,
}

impl GuiState {
    pub fn is_visible(&self, element_id: &str) -> bool {
        self.visible_elements.iter().any(|e| e == element_id)
    }

    pub fn value(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn flag(&self, name: &str) -> bool {
        self.flags.get(name).copied().unwrap_or(false)
    }

    pub fn interactions(&self, element_id: &str) -> u32 {
        self.interaction_counts
            .get(element_id)
            .copied()
            .unwrap_or(0)
    }

    fn refresh_visible(&mut self, model: &AppModel) {
        let mut visible: Vec<String> = Vec::new();
        for l in &self.active_layouts {
            for e in model.flattened(l) {
                if !visible.contains(e) {
                    visible.push(e.clone());
                }
            }
        }
        self.visible_elements = visible;
    }
}

/// A single interaction. Events are identified by their element and action;
/// the payload is carried along but does not affect identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputEvent {
    pub event_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_id: Option<String>,
    pub action: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl InputEvent {
    pub fn descriptor_id(element_id: Option<&str>, action: ActionKind) -> String {
        match element_id {
            Some(e) => format!("{e}:{action}"),
            None => action.as_str().to_owned(),
        }
    }

    pub fn on(element_id: &str, action: ActionKind) -> Self {
        InputEvent {
            event_id: Self::descriptor_id(Some(element_id), action),
            element_id: Some(element_id.to_owned()),
            action,
            payload: None,
        }
    }

    pub fn click(element_id: &str) -> Self {
        Self::on(element_id, ActionKind::Click)
    }

    pub fn edit(element_id: &str, payload: &str) -> Self {
        InputEvent {
            payload: Some(payload.to_owned()),
            ..Self::on(element_id, ActionKind::EditText)
        }
    }

    pub fn back() -> Self {
        InputEvent {
            event_id: Self::descriptor_id(None, ActionKind::Back),
            element_id: None,
            action: ActionKind::Back,
            payload: None,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        let payload_ok = self.payload.is_some() == (self.action == ActionKind::EditText);
        let element_ok = self.element_id.is_some() != (self.action == ActionKind::Back);
        payload_ok && element_ok
    }

    /// Same element and action, ignoring payload.
    pub fn same_descriptor(&self, other: &InputEvent) -> bool {
        self.element_id == other.element_id && self.action == other.action
    }
}

impl fmt::Display for InputEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Some(p) => write!(f, "{}({p:?})", self.event_id),
            None => f.write_str(&self.event_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub new_state: GuiState,
    pub invoked_functions: BTreeSet<FunctionRef>,
    pub revealed_faults: BTreeSet<String>,
    pub crashed: bool,
    pub state_changed: bool,
}

/// The fresh state at the start activity.
pub fn start(model: &AppModel) -> GuiState {
    let start = model
        .start_activity()
        .expect("validated model has a start activity");
    let mut state = GuiState {
        activity_id: start.activity_id.clone(),
        active_layouts: vec![start.initial_layout.clone()],
        visible_elements: Vec::new(),
        flags: model.flags.iter().map(|f| (f.clone(), false)).collect(),
        values: BTreeMap::new(),
        interaction_counts: BTreeMap::new(),
        back_stack: Vec::new(),
    };
    state.refresh_visible(model);
    state
}

/// Digest over the activity, the sorted visible elements and the sorted set
/// of true flags. Text values and interaction counts do not contribute.
pub fn state_key(state: &GuiState) -> StateKey {
    let mut visible: Vec<&str> = state.visible_elements.iter().map(String::as_str).collect();
    visible.sort_unstable();
    let flags: Vec<&str> = state
        .flags
        .iter()
        .filter(|(_, &on)| on)
        .map(|(f, _)| f.as_str())
        .collect();
    let mut hasher = Sha256::new();
    hasher.update(state.activity_id.as_bytes());
    hasher.update([0]);
    for v in visible {
        hasher.update(v.as_bytes());
        hasher.update([1]);
    }
    hasher.update([0]);
    for f in flags {
        hasher.update(f.as_bytes());
        hasher.update([1]);
    }
    let digest = hasher.finalize();
    StateKey(hex::encode(&digest[..8]))
}

const WORDS: [&str; 32] = [
    "alpha", "bravo", "cobalt", "delta", "ember", "fjord", "garnet", "harbor", "indigo", "juniper",
    "kelp", "lumen", "maple", "nectar", "onyx", "pepper", "quartz", "raven", "saffron", "tundra",
    "umber", "velvet", "willow", "xenon", "yarrow", "zephyr", "basil", "cedar", "dune", "fern",
    "glacier", "hazel",
];

/// Deterministic edit-text payload for the `count`-th edit of an element.
pub fn edit_payload(seed: u64, element_id: &str, count: u32) -> String {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(element_id.as_bytes());
    hasher.update(count.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(bytes));
    let word = WORDS[rng.gen_range(0..WORDS.len())];
    format!("{word}{}", rng.gen_range(0..10_000))
}

/// One event per (visible element, supported action), ordered by element
/// declaration and then action, followed by `back`.
pub fn enabled_events(model: &AppModel, state: &GuiState, seed: u64) -> Vec<InputEvent> {
    let mut visible: Vec<(usize, &str)> = state
        .visible_elements
        .iter()
        .filter_map(|e| model.element_position(e).map(|p| (p, e.as_str())))
        .collect();
    visible.sort_unstable();
    let mut events = Vec::new();
    for (pos, id) in visible {
        let element = &model.elements[pos];
        for &action in &element.supported_actions {
            let mut ev = InputEvent::on(id, action);
            if action == ActionKind::EditText {
                ev.payload = Some(edit_payload(seed, id, state.interactions(id)));
            }
            events.push(ev);
        }
    }
    events.push(InputEvent::back());
    events
}

pub fn is_enabled(model: &AppModel, state: &GuiState, event: &InputEvent) -> bool {
    match (&event.element_id, event.action) {
        (None, ActionKind::Back) => true,
        (Some(e), action) if action != ActionKind::Back => {
            state.is_visible(e)
                && model
                    .element(e)
                    .is_some_and(|el| el.supported_actions.contains(&action))
        }
        _ => false,
    }
}

fn guard_holds(guard: &Guard, state: &GuiState) -> bool {
    match guard {
        Guard::FlagIs { flag, value } => state.flag(flag) == *value,
        Guard::ValueEquals { left, right } => state.value(left) == state.value(right),
        Guard::ValueEmpty { key } => state.value(key).is_empty(),
        Guard::InteractionCount { element_id, cmp, n } => {
            cmp.holds(state.interactions(element_id), *n)
        }
    }
}

/// Owns the evolving state of one app run. Once-only faults that have fired
/// stay spent across restarts, like data the app persisted before crashing.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    model: &'m AppModel,
    seed: u64,
    state: GuiState,
    spent_faults: BTreeSet<String>,
}

impl<'m> Simulator<'m> {
    pub fn new(model: &'m AppModel, seed: u64) -> Self {
        Simulator {
            model,
            seed,
            state: start(model),
            spent_faults: BTreeSet::new(),
        }
    }

    pub fn model(&self) -> &'m AppModel {
        self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self) -> &GuiState {
        &self.state
    }

    pub fn key(&self) -> StateKey {
        state_key(&self.state)
    }

    pub fn enabled_events(&self) -> Vec<InputEvent> {
        enabled_events(self.model, &self.state, self.seed)
    }

    pub fn restart(&mut self) {
        self.state = start(self.model);
    }

    pub fn step(&mut self, event: &InputEvent) -> Result<StepOutcome, SimError> {
        if !event.is_well_formed() {
            return Err(SimError::MalformedEvent(event.event_id.clone()));
        }
        if !is_enabled(self.model, &self.state, event) {
            return Err(SimError::IllegalEvent {
                event: event.event_id.clone(),
                state: self.key(),
            });
        }
        let model = self.model;
        let before = self.key();
        let mut next = self.state.clone();
        let mut invoked = BTreeSet::new();
        let mut revealed = BTreeSet::new();
        let mut crashed = false;

        match &event.element_id {
            None => {
                if let Some(frame) = next.back_stack.pop() {
                    next.activity_id = frame.activity_id;
                    next.active_layouts = frame.active_layouts;
                }
            }
            Some(element_id) => {
                *next
                    .interaction_counts
                    .entry(element_id.clone())
                    .or_insert(0) += 1;
                let element = model.element(element_id).expect("enabled element exists");
                if let Some(listener) = element.listeners.get(&event.action) {
                    invoked = model.call_closure(listener);
                }
                if event.action == ActionKind::EditText {
                    let text = event.payload.clone().unwrap_or_default();
                    for key in &element.persistent_fields {
                        next.values.insert(key.clone(), text.clone());
                    }
                }
                let rule = model
                    .rules_for(element_id, event.action)
                    .find(|r| r.guard.as_ref().is_none_or(|g| guard_holds(g, &next)));
                if let Some(rule) = rule {
                    for effect in &rule.effects {
                        if self.apply(effect, &mut next, &mut revealed) {
                            crashed = true;
                            break;
                        }
                    }
                }
            }
        }

        if crashed {
            next = start(model);
        } else {
            next.refresh_visible(model);
        }
        self.state = next;
        let after = self.key();
        Ok(StepOutcome {
            new_state: self.state.clone(),
            invoked_functions: invoked,
            revealed_faults: revealed,
            crashed,
            state_changed: crashed || before != after,
        })
    }

    /// Applies one effect; returns true when the app crashed.
    fn apply(
        &mut self,
        effect: &Effect,
        state: &mut GuiState,
        revealed: &mut BTreeSet<String>,
    ) -> bool {
        let model = self.model;
        match effect {
            Effect::GotoActivity(a) => {
                let Some(activity) = model.activity(a) else {
                    return false;
                };
                state.back_stack.push(Frame {
                    activity_id: std::mem::take(&mut state.activity_id),
                    active_layouts: std::mem::take(&mut state.active_layouts),
                });
                state.activity_id = activity.activity_id.clone();
                state.active_layouts = vec![activity.initial_layout.clone()];
            }
            Effect::Inflate(l) => {
                if !state.active_layouts.contains(l) {
                    state.active_layouts.push(l.clone());
                }
            }
            Effect::PopBack => {
                if let Some(frame) = state.back_stack.pop() {
                    state.activity_id = frame.activity_id;
                    state.active_layouts = frame.active_layouts;
                }
            }
            Effect::SetFlag { flag, value } => {
                state.flags.insert(flag.clone(), *value);
            }
            Effect::SetValue { key, text } => {
                state.values.insert(key.clone(), text.clone());
            }
            Effect::ClearValue(key) => {
                state.values.remove(key);
            }
            Effect::RevealFault(fault_id) => {
                let Some(fault) = model.fault(fault_id) else {
                    return false;
                };
                match fault.kind {
                    FaultKind::CrashFault => {
                        if fault.once_only && self.spent_faults.contains(fault_id) {
                            return false;
                        }
                        self.spent_faults.insert(fault_id.clone());
                        revealed.insert(fault_id.clone());
                        return true;
                    }
                    FaultKind::StateLossFault => {
                        state.refresh_visible(model);
                        let lost: Vec<String> = state
                            .visible_elements
                            .iter()
                            .filter_map(|e| model.element(e))
                            .flat_map(|e| e.persistent_fields.iter())
                            .filter(|k| !state.value(k).is_empty())
                            .cloned()
                            .collect();
                        if !lost.is_empty() {
                            for k in lost {
                                state.values.remove(&k);
                            }
                            revealed.insert(fault_id.clone());
                        }
                    }
                }
            }
            Effect::Crash => return true,
        }
        false
    }
}
