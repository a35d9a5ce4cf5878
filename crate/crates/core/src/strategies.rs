//! Baseline event-generation strategies: uniform random, depth-first
//! model-based exploration, and a start-screen-biased variant.
//!
//! The start-biased strategy approximates an on-the-fly model-based tool that
//! keeps returning to the start screen. It is not a reimplementation of any
//! particular tool.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exploration::ExplorationModel;
use crate::impact::TargetSet;
use crate::model::AppModel;
use crate::simulator::{GuiState, InputEvent, StateKey, StepOutcome};

/// Probability that the start-biased strategy heads back toward the start
/// screen when it is elsewhere.
pub const START_BIAS: f64 = 0.7;

pub const DEFAULT_BUDGET: usize = 1000;
pub const DEFAULT_MAX_SEQUENCES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Random,
    Dfs,
    StartBiased,
    Cat,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Cat,
        StrategyKind::Dfs,
        StrategyKind::StartBiased,
        StrategyKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Dfs => "dfs",
            StrategyKind::StartBiased => "start-biased",
            StrategyKind::Cat => "cat",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(StrategyKind::Random),
            "dfs" => Ok(StrategyKind::Dfs),
            "start-biased" | "start_biased" => Ok(StrategyKind::StartBiased),
            "cat" => Ok(StrategyKind::Cat),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// Everything a strategy may look at when choosing the next event.
pub struct StepContext<'a> {
    pub model: &'a AppModel,
    pub state: &'a GuiState,
    pub key: &'a StateKey,
    pub enabled: &'a [InputEvent],
    pub exploration: &'a ExplorationModel,
    pub targets: &'a TargetSet,
    pub is_target: bool,
    /// Trace index the chosen event will be recorded under.
    pub index: usize,
    pub rng: &'a mut ChaCha8Rng,
}

impl StepContext<'_> {
    pub fn pick(&self, event_id: &str) -> Option<InputEvent> {
        self.enabled
            .iter()
            .find(|e| e.event_id == event_id)
            .cloned()
    }

    fn pick_or_back(&self, event_id: &str) -> InputEvent {
        self.pick(event_id).unwrap_or_else(InputEvent::back)
    }
}

pub trait Strategy {
    fn next_event(&mut self, cx: &mut StepContext<'_>) -> InputEvent;

    fn observe(&mut self, _outcome: &StepOutcome) {}
}

/// Uniform choice over the enabled events.
pub fn next_event_random(enabled: &[InputEvent], rng: &mut ChaCha8Rng) -> InputEvent {
    enabled[rng.gen_range(0..enabled.len())].clone()
}

#[derive(Debug, Default)]
pub struct RandomStrategy;

impl Strategy for RandomStrategy {
    fn next_event(&mut self, cx: &mut StepContext<'_>) -> InputEvent {
        next_event_random(cx.enabled, cx.rng)
    }
}

/// Depth-first exploration: take the first untried event of the current
/// state; otherwise walk known transitions to the nearest state that still
/// has untried events; otherwise take the least-visited event.
#[derive(Debug, Default, Clone)]
pub struct DfsExplorer {
    unreachable: HashSet<StateKey>,
    goal: Option<StateKey>,
    streak: usize,
    patience: usize,
}

impl DfsExplorer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_event(&mut self, cx: &StepContext<'_>) -> InputEvent {
        let explo = cx.exploration;
        self.unreachable.remove(cx.key);
        if let Some(id) = explo.first_untried(cx.key) {
            self.goal = None;
            return cx.pick_or_back(id);
        }
        let unreachable = &self.unreachable;
        if let Some((path, goal)) =
            explo.route(cx.key, |k| explo.has_untried(k) && !unreachable.contains(k))
        {
            if self.goal.as_ref() != Some(&goal) {
                self.goal = Some(goal.clone());
                self.streak = 0;
                self.patience = 2 * path.len() + 4;
            }
            self.streak += 1;
            if self.streak <= self.patience {
                return cx.pick_or_back(&path[0]);
            }
            // Known transitions keep failing to lead there.
            self.unreachable.insert(goal);
            self.goal = None;
        }
        explo
            .least_visited(cx.key)
            .map(|id| cx.pick_or_back(id))
            .unwrap_or_else(InputEvent::back)
    }
}

impl Strategy for DfsExplorer {
    fn next_event(&mut self, cx: &mut StepContext<'_>) -> InputEvent {
        DfsExplorer::next_event(self, cx)
    }
}

/// Prefers untried events on the start screen and, when elsewhere, heads
/// back toward it with probability [`START_BIAS`].
#[derive(Debug, Default, Clone)]
pub struct StartBiasedStrategy {
    dfs: DfsExplorer,
}

impl StartBiasedStrategy {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Strategy for StartBiasedStrategy {
    fn next_event(&mut self, cx: &mut StepContext<'_>) -> InputEvent {
        let start = cx.exploration.start_key();
        if cx.key == start {
            if let Some(id) = cx.exploration.first_untried(cx.key) {
                return cx.pick_or_back(id);
            }
            return self.dfs.next_event(cx);
        }
        if cx.rng.gen::<f64>() < START_BIAS {
            if !cx.state.back_stack.is_empty() {
                return InputEvent::back();
            }
            if let Some((path, _)) = cx.exploration.route(cx.key, |k| k == start) {
                if let Some(first) = path.first() {
                    return cx.pick_or_back(first);
                }
            }
        }
        self.dfs.next_event(cx)
    }
}
