//! Change-focused event generation.
//!
//! Exploration is delegated to [`DfsExplorer`] until a state showing a target
//! element is entered. On first entry to each distinct target state the
//! generator enumerates length-3 sequences that contain a target event and
//! executes them. A sequence that navigates away is paused with its remaining
//! suffix queued; recorded transitions are used to re-enter the state, after
//! which paused sequences resume before fresh ones start. Once every
//! enumerated sequence is complete, control returns to exploration.

use std::collections::{BTreeSet, VecDeque};

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::impact::TargetSet;
use crate::model::ActionKind;
use crate::simulator::{GuiState, InputEvent, StateKey};
use crate::strategies::{DfsExplorer, StepContext, Strategy};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CatError {
    #[error("no target events among the enabled events")]
    NoTargets,
}

/// An event identified by element and action, with an optional fixed
/// payload for edit-text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_id: Option<String>,
    pub action: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl EventDescriptor {
    /// `element_id` of `None` denotes back.
    pub fn new(element_id: Option<&str>, action: ActionKind, payload: Option<&str>) -> Self {
        EventDescriptor {
            element_id: element_id.map(str::to_owned),
            action,
            payload: payload.map(str::to_owned),
        }
    }

    pub fn of(event: &InputEvent) -> Self {
        EventDescriptor {
            element_id: event.element_id.clone(),
            action: event.action,
            payload: None,
        }
    }

    pub fn id(&self) -> String {
        InputEvent::descriptor_id(self.element_id.as_deref(), self.action)
    }

    pub fn matches(&self, event: &InputEvent) -> bool {
        self.element_id == event.element_id && self.action == event.action
    }

    /// The enabled event this descriptor denotes, with the descriptor's
    /// payload substituted when one is given.
    pub fn resolve(&self, enabled: &[InputEvent]) -> Option<InputEvent> {
        let mut event = enabled.iter().find(|e| self.matches(e))?.clone();
        if let (Some(p), ActionKind::EditText) = (&self.payload, self.action) {
            event.payload = Some(p.clone());
        }
        Some(event)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceStatus {
    Pending,
    InProgress,
    Paused,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSequence {
    pub sequence_id: String,
    pub events: Vec<EventDescriptor>,
    pub target_positions: BTreeSet<usize>,
    pub status: SequenceStatus,
    pub executed_prefix: usize,
    /// State the sequence was enumerated for (empty until registered).
    #[serde(default)]
    pub target_state: Option<StateKey>,
    /// Trace indices at which each executed event ran.
    #[serde(default)]
    pub executed_at: Vec<usize>,
    #[serde(default)]
    pub pauses: usize,
}

impl EventSequence {
    fn new(events: Vec<EventDescriptor>, target_positions: BTreeSet<usize>) -> Self {
        let joined: Vec<String> = events.iter().map(EventDescriptor::id).collect();
        let digest = Sha256::digest(joined.join("|").as_bytes());
        EventSequence {
            sequence_id: format!("seq-{}", hex::encode(&digest[..6])),
            events,
            target_positions,
            status: SequenceStatus::Pending,
            executed_prefix: 0,
            target_state: None,
            executed_at: Vec::new(),
            pauses: 0,
        }
    }

    pub fn remaining(&self) -> &[EventDescriptor] {
        &self.events[self.executed_prefix..]
    }
}

/// True iff the state shows a target element or sits in an activity whose
/// triggering element is still unknown.
pub fn is_target_state(state: &GuiState, targets: &TargetSet) -> bool {
    state
        .visible_elements
        .iter()
        .any(|e| targets.is_target_element(e))
        || targets
            .pending_dynamic_activities
            .contains(&state.activity_id)
}

/// [`is_target_state`], additionally promoting `causing_element` when the
/// state is the first entry into a pending activity.
pub fn check_target_state(
    state: &GuiState,
    targets: &mut TargetSet,
    causing_element: Option<&str>,
) -> bool {
    let hit = is_target_state(state, targets);
    if targets
        .pending_dynamic_activities
        .contains(&state.activity_id)
    {
        if let Some(element) = causing_element {
            targets
                .resolve_dynamic_target(&state.activity_id, element)
                .expect("activity is pending");
        }
    }
    hit
}

/// Length-3 sequences around each target event: every ordered pair of
/// distinct non-target events, with the target inserted at positions 0, 1
/// and 2. One non-target event pairs with itself; none yields `(t, t, t)`.
pub fn enumerate_length3(
    enabled: &[InputEvent],
    targets_in_state: &[InputEvent],
    max_sequences: usize,
    seed: u64,
) -> Result<Vec<EventSequence>, CatError> {
    if targets_in_state.is_empty()
        || !targets_in_state
            .iter()
            .all(|t| enabled.iter().any(|e| e.same_descriptor(t)))
    {
        return Err(CatError::NoTargets);
    }
    let others: Vec<EventDescriptor> = enabled
        .iter()
        .filter(|e| !targets_in_state.iter().any(|t| t.same_descriptor(e)))
        .map(EventDescriptor::of)
        .collect();
    let pairs: Vec<(&EventDescriptor, &EventDescriptor)> = match others.len() {
        0 => Vec::new(),
        1 => vec![(&others[0], &others[0])],
        _ => others
            .iter()
            .enumerate()
            .flat_map(|(i, a)| {
                others
                    .iter()
                    .enumerate()
                    .filter(move |&(j, _)| j != i)
                    .map(move |(_, b)| (a, b))
            })
            .collect(),
    };

    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for t in targets_in_state {
        let t = EventDescriptor::of(t);
        let mut candidates = Vec::new();
        if pairs.is_empty() {
            candidates.push(EventSequence::new(
                vec![t.clone(); 3],
                [0, 1, 2].into_iter().collect(),
            ));
        }
        for pos in 0..3 {
            for &(a, b) in &pairs {
                let mut events = vec![a.clone(), b.clone()];
                events.insert(pos, t.clone());
                candidates.push(EventSequence::new(events, [pos].into_iter().collect()));
            }
        }
        for seq in candidates {
            if seen.insert(seq.sequence_id.clone()) {
                out.push(seq);
            }
        }
    }
    if out.len() > max_sequences {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = rand::seq::index::sample(&mut rng, out.len(), max_sequences).into_vec();
        keep.sort_unstable();
        let mut slots: Vec<Option<EventSequence>> = out.into_iter().map(Some).collect();
        out = keep.into_iter().filter_map(|i| slots[i].take()).collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CatMode {
    Exploring,
    Focused,
}

#[derive(Debug, Default, Clone)]
struct TargetWork {
    pending: VecDeque<usize>,
    paused: VecDeque<usize>,
    stalled: bool,
}

impl TargetWork {
    fn has_work(&self) -> bool {
        !self.pending.is_empty() || !self.paused.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Reentry {
    goal: StateKey,
    steps: usize,
    patience: usize,
}

/// Run state of the change-focused generator.
#[derive(Debug, Clone)]
pub struct CatGenerator {
    dfs: DfsExplorer,
    max_sequences: usize,
    seed: u64,
    mode: CatMode,
    ledger: Vec<EventSequence>,
    work: IndexMap<StateKey, TargetWork>,
    active: Option<usize>,
    reentry: Option<Reentry>,
}

impl CatGenerator {
    pub fn new(max_sequences: usize, seed: u64) -> Self {
        CatGenerator {
            dfs: DfsExplorer::new(),
            max_sequences,
            seed,
            mode: CatMode::Exploring,
            ledger: Vec::new(),
            work: IndexMap::new(),
            active: None,
            reentry: None,
        }
    }

    pub fn mode(&self) -> CatMode {
        self.mode
    }

    /// Every enumerated sequence with its current status.
    pub fn sequences(&self) -> &[EventSequence] {
        &self.ledger
    }

    /// Target states in discovery order.
    pub fn target_states(&self) -> impl Iterator<Item = &StateKey> {
        self.work.keys()
    }

    /// Sequence ids currently queued as paused for `state`.
    pub fn paused_queue(&self, state: &StateKey) -> Vec<&str> {
        self.work
            .get(state)
            .map(|w| {
                w.paused
                    .iter()
                    .map(|&i| self.ledger[i].sequence_id.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    fn register_target_state(&mut self, cx: &StepContext<'_>) {
        let targets_here: Vec<InputEvent> = cx
            .enabled
            .iter()
            .filter(|e| {
                e.element_id
                    .as_deref()
                    .is_some_and(|id| cx.targets.is_target_element(id))
            })
            .cloned()
            .collect();
        let Ok(sequences) =
            enumerate_length3(cx.enabled, &targets_here, self.max_sequences, self.seed)
        else {
            return;
        };
        let mut work = TargetWork::default();
        for mut seq in sequences {
            seq.sequence_id = format!("{}@{}", seq.sequence_id, cx.key);
            seq.target_state = Some(cx.key.clone());
            work.pending.push_back(self.ledger.len());
            self.ledger.push(seq);
        }
        self.work.insert(cx.key.clone(), work);
    }

    fn emit(&mut self, idx: usize, cx: &StepContext<'_>) -> Option<InputEvent> {
        let seq = &mut self.ledger[idx];
        let event = seq.events[seq.executed_prefix].resolve(cx.enabled)?;
        seq.executed_at.push(cx.index);
        seq.executed_prefix += 1;
        if seq.executed_prefix == seq.events.len() {
            seq.status = SequenceStatus::Complete;
            self.active = None;
        } else {
            seq.status = SequenceStatus::InProgress;
            self.active = Some(idx);
        }
        self.mode = CatMode::Focused;
        self.reentry = None;
        Some(event)
    }

    fn pause_active(&mut self) {
        if let Some(idx) = self.active.take() {
            let seq = &mut self.ledger[idx];
            seq.status = SequenceStatus::Paused;
            seq.pauses += 1;
            let state = seq.target_state.clone().expect("registered sequence");
            self.work.entry(state).or_default().paused.push_back(idx);
        }
    }

    /// One step of re-entry navigation toward `goal`; `None` stalls the goal.
    fn navigate(&mut self, goal: &StateKey, cx: &StepContext<'_>) -> Option<InputEvent> {
        let route = cx.exploration.route(cx.key, |k| k == goal);
        let reentry = match &mut self.reentry {
            Some(r) if &r.goal == goal => r,
            _ => {
                let patience = route.as_ref().map_or(4, |(p, _)| 2 * p.len() + 6);
                self.reentry.insert(Reentry {
                    goal: goal.clone(),
                    steps: 0,
                    patience,
                })
            }
        };
        reentry.steps += 1;
        if reentry.steps > reentry.patience {
            return None;
        }
        match route {
            Some((path, _)) => path.first().and_then(|id| cx.pick(id)),
            None if !cx.state.back_stack.is_empty() => Some(InputEvent::back()),
            None => None,
        }
    }
}

impl Strategy for CatGenerator {
    fn next_event(&mut self, cx: &mut StepContext<'_>) -> InputEvent {
        if cx.is_target && !self.work.contains_key(cx.key) {
            self.register_target_state(cx);
        }

        if let Some(idx) = self.active {
            if self.ledger[idx].target_state.as_ref() == Some(cx.key) {
                if let Some(ev) = self.emit(idx, cx) {
                    return ev;
                }
            }
            self.pause_active();
        }

        if let Some(work) = self.work.get_mut(cx.key) {
            work.stalled = false;
            let next = work.paused.pop_front().or_else(|| work.pending.pop_front());
            if let Some(idx) = next {
                if let Some(ev) = self.emit(idx, cx) {
                    return ev;
                }
            }
        }

        loop {
            let goal = self
                .work
                .iter()
                .find(|(_, w)| w.has_work() && !w.stalled)
                .map(|(k, _)| k.clone());
            let Some(goal) = goal else { break };
            if let Some(ev) = self.navigate(&goal, cx) {
                self.mode = CatMode::Focused;
                return ev;
            }
            self.work[&goal].stalled = true;
            self.reentry = None;
        }

        self.mode = CatMode::Exploring;
        self.dfs.next_event(cx)
    }
}
