//! The run loop shared by every strategy: executes guidance, asks the
//! strategy for events, steps the simulator, keeps the exploration model and
//! target set up to date, and records the execution trace.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catgen::{check_target_state, CatGenerator, EventDescriptor, EventSequence};
use crate::exploration::ExplorationModel;
use crate::impact::TargetSet;
use crate::model::{AppModel, FunctionRef};
use crate::simulator::{GuiState, InputEvent, SimError, Simulator, StateKey};
use crate::strategies::{
    DfsExplorer, RandomStrategy, StartBiasedStrategy, StepContext, Strategy, StrategyKind,
    DEFAULT_BUDGET, DEFAULT_MAX_SEQUENCES,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("guidance event {index} (`{event}`) is not enabled; state: {state}")]
    GuidanceMismatch {
        index: usize,
        event: String,
        state: String,
    },
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("cannot read guidance {path}: {message}")]
    GuidanceFile { path: String, message: String },
}

/// Event descriptors executed verbatim from the start screen.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Guidance(pub Vec<EventDescriptor>);

impl Guidance {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let err = |message: String| RunError::GuidanceFile {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub budget: usize,
    pub seed: u64,
    pub guidance: Option<Guidance>,
    pub max_sequences: usize,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind, seed: u64) -> Self {
        StrategyConfig {
            kind,
            budget: DEFAULT_BUDGET,
            seed,
            guidance: None,
            max_sequences: DEFAULT_MAX_SEQUENCES,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_guidance(mut self, guidance: Guidance) -> Self {
        self.guidance = Some(guidance);
        self
    }

    pub fn with_max_sequences(mut self, max_sequences: usize) -> Self {
        self.max_sequences = max_sequences;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub event: InputEvent,
    pub state_before: StateKey,
    pub state_after: StateKey,
    pub invoked_functions: Vec<FunctionRef>,
    pub revealed_faults: Vec<String>,
    pub crashed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub records: Vec<TraceRecord>,
}

impl ExecutionTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = &InputEvent> {
        self.records.iter().map(|r| &r.event)
    }

    /// One JSON object per line.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(ExecutionTrace { records })
    }
}

#[derive(Debug, Clone)]
pub struct DynamicResolution {
    pub activity_id: String,
    pub element_id: String,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: ExecutionTrace,
    /// Targets after runtime resolution of dynamic elements.
    pub targets: TargetSet,
    pub resolutions: Vec<DynamicResolution>,
    /// Sequence ledger; empty for strategies other than cat.
    pub sequences: Vec<EventSequence>,
    pub exploration: ExplorationModel,
}

enum AnyStrategy {
    Random(RandomStrategy),
    Dfs(DfsExplorer),
    StartBiased(StartBiasedStrategy),
    Cat(Box<CatGenerator>),
}

impl AnyStrategy {
    fn build(config: &StrategyConfig) -> Self {
        match config.kind {
            StrategyKind::Random => AnyStrategy::Random(RandomStrategy),
            StrategyKind::Dfs => AnyStrategy::Dfs(DfsExplorer::new()),
            StrategyKind::StartBiased => AnyStrategy::StartBiased(StartBiasedStrategy::new()),
            StrategyKind::Cat => AnyStrategy::Cat(Box::new(CatGenerator::new(
                config.max_sequences,
                config.seed,
            ))),
        }
    }

    fn as_dyn(&mut self) -> &mut dyn Strategy {
        match self {
            AnyStrategy::Random(s) => s,
            AnyStrategy::Dfs(s) => s,
            AnyStrategy::StartBiased(s) => s,
            AnyStrategy::Cat(s) => s.as_mut(),
        }
    }
}

pub fn describe_state(state: &GuiState) -> String {
    let mut out = format!(
        "activity={} visible=[{}]",
        state.activity_id,
        state.visible_elements.join(", ")
    );
    let on: Vec<&str> = state
        .flags
        .iter()
        .filter(|(_, &v)| v)
        .map(|(k, _)| k.as_str())
        .collect();
    if !on.is_empty() {
        let _ = write!(out, " flags=[{}]", on.join(", "));
    }
    out
}

/// Replays `events` on a fresh simulator and reports whether it ends in `goal`.
pub fn replays_to(model: &AppModel, seed: u64, events: &[InputEvent], goal: &StateKey) -> bool {
    let mut sim = Simulator::new(model, seed);
    for e in events {
        if sim.step(e).is_err() {
            return false;
        }
    }
    &sim.key() == goal
}

/// Executes one run of `config.kind` against the model.
pub fn run_strategy(
    model: &AppModel,
    targets: &TargetSet,
    config: &StrategyConfig,
) -> Result<RunOutput, RunError> {
    if config.budget == 0 {
        return Err(RunError::ZeroBudget);
    }
    let mut sim = Simulator::new(model, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut targets = targets.clone();
    let mut exploration = ExplorationModel::new(sim.key());
    let mut strategy = AnyStrategy::build(config);
    let guidance = config.guidance.clone().unwrap_or_default();
    let mut trace = ExecutionTrace::default();
    let mut resolutions = Vec::new();
    let mut session: Vec<InputEvent> = Vec::new();

    let start_key = sim.key();
    let mut is_target = check_target_state(sim.state(), &mut targets, None);

    for index in 1..=config.budget {
        let key = sim.key();
        let enabled = sim.enabled_events();
        exploration.register(&key, &enabled);

        let event = if let Some(desc) = guidance.0.get(index - 1) {
            desc.resolve(&enabled)
                .ok_or_else(|| RunError::GuidanceMismatch {
                    index,
                    event: desc.id(),
                    state: describe_state(sim.state()),
                })?
        } else {
            let mut cx = StepContext {
                model,
                state: sim.state(),
                key: &key,
                enabled: &enabled,
                exploration: &exploration,
                targets: &targets,
                is_target,
                index,
                rng: &mut rng,
            };
            strategy.as_dyn().next_event(&mut cx)
        };

        let before_activity = sim.state().activity_id.clone();
        let outcome = sim.step(&event)?;
        let after = sim.key();
        exploration.register(&after, &sim.enabled_events());

        if outcome.crashed {
            session.clear();
        } else {
            session.push(event.clone());
        }
        if let Some(previous) = exploration.record_transition(&key, &event, &after, outcome.crashed)
        {
            let fresh = exploration
                .reach_path(&after)
                .map(<[_]>::to_vec)
                .unwrap_or_default();
            if !replays_to(model, config.seed, &fresh, &after) {
                // Values or counters set off-path matter; fall back to the
                // full event history since the last (re)start.
                let fallback = previous
                    .as_ref()
                    .is_none_or(|p| p.len() > session.len())
                    .then(|| session.clone())
                    .filter(|s| replays_to(model, config.seed, s, &after));
                exploration.set_reach_path(&after, fallback.or(previous));
            }
        }

        let entered_new_activity = outcome.new_state.activity_id != before_activity;
        let causing = if entered_new_activity && !outcome.crashed {
            event.element_id.as_deref()
        } else {
            None
        };
        let was_pending = targets
            .pending_dynamic_activities
            .contains(&outcome.new_state.activity_id);
        is_target = check_target_state(&outcome.new_state, &mut targets, causing);
        if was_pending
            && !targets
                .pending_dynamic_activities
                .contains(&outcome.new_state.activity_id)
        {
            resolutions.push(DynamicResolution {
                activity_id: outcome.new_state.activity_id.clone(),
                element_id: causing.unwrap_or_default().to_owned(),
                index,
            });
        }

        strategy.as_dyn().observe(&outcome);
        trace.records.push(TraceRecord {
            index,
            event,
            state_before: key,
            state_after: after,
            invoked_functions: outcome.invoked_functions.into_iter().collect(),
            revealed_faults: outcome.revealed_faults.into_iter().collect(),
            crashed: outcome.crashed,
        });
    }
    debug_assert_eq!(exploration.start_key(), &start_key);

    let sequences = match strategy {
        AnyStrategy::Cat(cat) => cat.sequences().to_vec(),
        _ => Vec::new(),
    };
    Ok(RunOutput {
        trace,
        targets,
        resolutions,
        sequences,
        exploration,
    })
}

/// Executes the guidance verbatim, then continues with the change-focused
/// generator.
pub fn run_with_guidance(
    model: &AppModel,
    targets: &TargetSet,
    guidance: Guidance,
    config: &StrategyConfig,
) -> Result<ExecutionTrace, RunError> {
    let config = StrategyConfig {
        kind: StrategyKind::Cat,
        guidance: Some(guidance),
        ..config.clone()
    };
    Ok(run_strategy(model, targets, &config)?.trace)
}
