//! Scoring of execution traces and aggregation across seeds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::impact::TargetSet;
use crate::model::{AppModel, FaultKind, FunctionRef};
use crate::runner::{run_strategy, ExecutionTrace, RunError, RunOutput, StrategyConfig};
use crate::strategies::StrategyKind;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace does not match the model: {0}")]
    TargetModelMismatch(String),
    #[error("fewer than two interactions with the faulty element ({0})")]
    InsufficientEvidence(usize),
    #[error("no reports to aggregate")]
    EmptyInput,
    #[error(transparent)]
    Run(#[from] RunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashPattern {
    FirstInteractionOnly,
    Persistent,
    NotCrashing,
    /// Crashes on some later interactions but not all.
    Intermittent,
}

impl fmt::Display for CrashPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrashPattern::FirstInteractionOnly => "first_interaction_only",
            CrashPattern::Persistent => "persistent",
            CrashPattern::NotCrashing => "not_crashing",
            CrashPattern::Intermittent => "intermittent",
        })
    }
}

/// Classifies the crash history of successive interactions with one element.
pub fn classify_crash_pattern(crashes: &[bool]) -> Result<CrashPattern, MetricsError> {
    if crashes.len() < 2 {
        return Err(MetricsError::InsufficientEvidence(crashes.len()));
    }
    let later = &crashes[1..];
    Ok(
        match (
            crashes[0],
            later.iter().any(|&c| c),
            later.iter().all(|&c| c),
        ) {
            (true, _, true) => CrashPattern::Persistent,
            (true, false, _) => CrashPattern::FirstInteractionOnly,
            (false, false, _) => CrashPattern::NotCrashing,
            _ => CrashPattern::Intermittent,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealedFault {
    pub fault_id: String,
    /// 1-based index of the first event that revealed the fault.
    pub index: usize,
    pub times: usize,
    /// Crash faults only. `None` with `insufficient_evidence` when the trace
    /// interacts with the faulty element fewer than twice.
    pub classification: Option<CrashPattern>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub insufficient_evidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub app: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub first_target_interaction_index: Option<usize>,
    pub first_target_state_index: Option<usize>,
    pub target_interaction_count: usize,
    pub affected_function_coverage: f64,
    pub revealed_faults: Vec<RevealedFault>,
    pub total_events: usize,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn failed(&self) -> bool {
        self.first_target_interaction_index.is_none()
    }

    pub fn fault(&self, fault_id: &str) -> Option<&RevealedFault> {
        self.revealed_faults.iter().find(|f| f.fault_id == fault_id)
    }
}

/// Crash history of the interactions with the elements that can reveal
/// `fault_id`, in trace order.
pub fn crash_history(model: &AppModel, trace: &ExecutionTrace, fault_id: &str) -> Vec<bool> {
    let elements = model.fault_elements(fault_id);
    trace
        .records
        .iter()
        .filter(|r| {
            r.event
                .element_id
                .as_ref()
                .is_some_and(|e| elements.contains(e))
        })
        .map(|r| r.crashed && r.revealed_faults.iter().any(|f| f == fault_id))
        .collect()
}

/// Computes the run metrics of a trace. `targets` should be the resolved
/// target set returned by the run. `wall_time_ms` is left at 0 for the
/// caller to fill in.
pub fn score_trace(
    model: &AppModel,
    trace: &ExecutionTrace,
    targets: &TargetSet,
    strategy: StrategyKind,
    seed: u64,
) -> Result<RunReport, MetricsError> {
    for (i, r) in trace.records.iter().enumerate() {
        if r.index != i + 1 {
            return Err(MetricsError::TargetModelMismatch(format!(
                "record {} has index {}",
                i + 1,
                r.index
            )));
        }
        if let Some(e) = &r.event.element_id {
            if model.element(e).is_none() {
                return Err(MetricsError::TargetModelMismatch(format!(
                    "unknown element `{e}`"
                )));
            }
        }
        if let Some(f) = r.revealed_faults.iter().find(|f| model.fault(f).is_none()) {
            return Err(MetricsError::TargetModelMismatch(format!(
                "unknown fault `{f}`"
            )));
        }
    }
    if let Some(e) = targets
        .target_elements
        .iter()
        .find(|e| model.element(e).is_none())
    {
        return Err(MetricsError::TargetModelMismatch(format!(
            "unknown target element `{e}`"
        )));
    }

    let interactions: Vec<usize> = trace
        .records
        .iter()
        .filter(|r| {
            r.event
                .element_id
                .as_ref()
                .is_some_and(|e| targets.is_target_element(e))
        })
        .map(|r| r.index)
        .collect();

    let invoked: BTreeSet<&FunctionRef> = trace
        .records
        .iter()
        .flat_map(|r| &r.invoked_functions)
        .collect();
    let covered = targets
        .affected_functions
        .iter()
        .filter(|f| invoked.contains(f))
        .count();
    let affected_function_coverage = if targets.affected_functions.is_empty() {
        1.0
    } else {
        covered as f64 / targets.affected_functions.len() as f64
    };

    let first_target_state_index = first_target_state_index(model, trace, targets, seed);

    let mut revealed: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &trace.records {
        for f in &r.revealed_faults {
            revealed.entry(f).or_insert((r.index, 0)).1 += 1;
        }
    }
    let revealed_faults = revealed
        .into_iter()
        .map(|(fault_id, (index, times))| {
            let is_crash = model
                .fault(fault_id)
                .is_some_and(|f| f.kind == FaultKind::CrashFault);
            let (classification, insufficient_evidence) = if is_crash {
                match classify_crash_pattern(&crash_history(model, trace, fault_id)) {
                    Ok(c) => (Some(c), false),
                    Err(_) => (None, true),
                }
            } else {
                (None, false)
            };
            RevealedFault {
                fault_id: fault_id.to_owned(),
                index,
                times,
                classification,
                insufficient_evidence,
            }
        })
        .collect();

    Ok(RunReport {
        app: model.name.clone(),
        strategy,
        seed,
        first_target_interaction_index: interactions.first().copied(),
        first_target_state_index,
        target_interaction_count: interactions.len(),
        affected_function_coverage,
        revealed_faults,
        total_events: trace.len(),
        wall_time_ms: 0,
    })
}

/// Index of the first event after which a target element was visible; 0 if
/// the start screen already shows one.
fn first_target_state_index(
    model: &AppModel,
    trace: &ExecutionTrace,
    targets: &TargetSet,
    seed: u64,
) -> Option<usize> {
    use crate::simulator::Simulator;
    let mut sim = Simulator::new(model, seed);
    let shows_target = |sim: &Simulator<'_>| {
        sim.state()
            .visible_elements
            .iter()
            .any(|e| targets.is_target_element(e))
    };
    if shows_target(&sim) {
        return Some(0);
    }
    for r in &trace.records {
        if sim.step(&r.event).is_err() {
            return None;
        }
        if shows_target(&sim) {
            return Some(r.index);
        }
    }
    None
}

/// A finished run together with its score.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub output: RunOutput,
    pub report: RunReport,
}

/// Runs one strategy and scores the trace against the resolved targets.
pub fn evaluate(
    model: &AppModel,
    targets: &TargetSet,
    config: &StrategyConfig,
) -> Result<Evaluation, MetricsError> {
    let started = std::time::Instant::now();
    let output = run_strategy(model, targets, config)?;
    let mut report = score_trace(
        model,
        &output.trace,
        &output.targets,
        config.kind,
        config.seed,
    )?;
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(Evaluation { output, report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub app: String,
    pub strategy: StrategyKind,
    pub seeds: Vec<u64>,
    /// Over runs that reached a target; `None` when every run failed.
    pub mean_first_interaction: Option<f64>,
    pub median_first_interaction: Option<f64>,
    pub failures: usize,
    pub mean_interactions: f64,
    pub median_interactions: f64,
    pub mean_coverage: f64,
    pub median_coverage: f64,
    pub mean_first_state: Option<f64>,
    pub mean_total_events: f64,
    /// Fault id to the number of runs that revealed it.
    pub faults_revealed: BTreeMap<String, usize>,
}

impl AggregateRow {
    /// `fault:runs/seeds` entries separated by `;`.
    pub fn faults_cell(&self) -> String {
        self.faults_revealed
            .iter()
            .map(|(f, n)| format!("{f}:{n}/{}", self.seeds.len()))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Groups reports by (app, strategy). Rows are ordered by app name, then by
/// [`StrategyKind::ALL`] order.
pub fn aggregate(reports: &[RunReport]) -> Result<Vec<AggregateRow>, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let rank = |k: StrategyKind| {
        StrategyKind::ALL
            .iter()
            .position(|&x| x == k)
            .unwrap_or(usize::MAX)
    };
    let mut groups: BTreeMap<(&str, usize), Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((&r.app, rank(r.strategy)))
            .or_default()
            .push(r);
    }
    Ok(groups
        .into_values()
        .map(|mut runs| {
            runs.sort_by_key(|r| r.seed);
            let firsts: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.first_target_interaction_index.map(|i| i as f64))
                .collect();
            let states: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.first_target_state_index.map(|i| i as f64))
                .collect();
            let counts: Vec<f64> = runs
                .iter()
                .map(|r| r.target_interaction_count as f64)
                .collect();
            let coverage: Vec<f64> = runs.iter().map(|r| r.affected_function_coverage).collect();
            let totals: Vec<f64> = runs.iter().map(|r| r.total_events as f64).collect();
            let mut faults_revealed = BTreeMap::new();
            for r in &runs {
                for f in &r.revealed_faults {
                    *faults_revealed.entry(f.fault_id.clone()).or_insert(0) += 1;
                }
            }
            AggregateRow {
                app: runs[0].app.clone(),
                strategy: runs[0].strategy,
                seeds: runs.iter().map(|r| r.seed).collect(),
                mean_first_interaction: mean(&firsts),
                median_first_interaction: median(&firsts),
                failures: runs.iter().filter(|r| r.failed()).count(),
                mean_interactions: mean(&counts).unwrap_or(0.0),
                median_interactions: median(&counts).unwrap_or(0.0),
                mean_coverage: mean(&coverage).unwrap_or(0.0),
                median_coverage: median(&coverage).unwrap_or(0.0),
                mean_first_state: mean(&states),
                mean_total_events: mean(&totals).unwrap_or(0.0),
                faults_revealed,
            }
        })
        .collect())
}
