mod common;

use std::collections::BTreeSet;

use changehound::catgen::{enumerate_length3, is_target_state, EventDescriptor, EventSequence};
use changehound::metrics::score_trace;
use changehound::model::ActionKind;
use changehound::runner::{run_strategy, run_with_guidance, Guidance, RunError, StrategyConfig};
use changehound::simulator::{InputEvent, Simulator};
use changehound::strategies::StrategyKind;
use proptest::prelude::*;

fn clicks(ids: &[String]) -> Vec<InputEvent> {
    ids.iter().map(|id| InputEvent::click(id)).collect()
}

fn words(seqs: &[EventSequence]) -> Vec<Vec<String>> {
    seqs.iter()
        .map(|s| {
            s.events
                .iter()
                .map(|e| e.element_id.clone().unwrap())
                .collect()
        })
        .collect()
}

proptest! {
    #[test]
    fn enumeration_matches_brute_force(n in 1usize..=8, mask in 1u16..256) {
        let enabled: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        let targets: BTreeSet<String> = enabled.iter().enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, e)| e.clone())
            .collect();
        prop_assume!(!targets.is_empty());
        let target_events = clicks(&targets.iter().cloned().collect::<Vec<_>>());
        let seqs = enumerate_length3(&clicks(&enabled), &target_events, usize::MAX, 0).unwrap();
        let got = words(&seqs);
        let ids: BTreeSet<&str> = seqs.iter().map(|s| s.sequence_id.as_str()).collect();
        prop_assert_eq!(ids.len(), seqs.len());
        let want = common::brute_force_length3(&enabled, &targets);
        prop_assert_eq!(got.len(), want.len());
        prop_assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), want);
        for s in &seqs {
            prop_assert!(!s.target_positions.is_empty());
            for &p in &s.target_positions {
                prop_assert!(targets.contains(s.events[p].element_id.as_ref().unwrap()));
            }
        }
    }

    #[test]
    fn capped_enumeration_is_a_subset(n in 2usize..=8, cap in 1usize..40, seed in any::<u64>()) {
        let enabled: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        let target = clicks(&enabled[..1]);
        let full = enumerate_length3(&clicks(&enabled), &target, usize::MAX, seed).unwrap();
        let capped = enumerate_length3(&clicks(&enabled), &target, cap, seed).unwrap();
        prop_assert_eq!(capped.len(), cap.min(full.len()));
        let all: BTreeSet<_> = full.iter().map(|s| s.sequence_id.clone()).collect();
        prop_assert!(capped.iter().all(|s| all.contains(&s.sequence_id)));
        prop_assert_eq!(capped, enumerate_length3(&clicks(&enabled), &target, cap, seed).unwrap());
    }
}

#[test]
fn beecount_save_screen_sequences() {
    let app = common::app("beecount_like");
    let mut sim = Simulator::new(&app.model, 1);
    sim.step(&InputEvent::click("new_project")).unwrap();
    let enabled = sim.enabled_events();
    let save: Vec<InputEvent> = enabled
        .iter()
        .filter(|e| e.element_id.as_deref() == Some("save_project"))
        .cloned()
        .collect();
    let seqs = enumerate_length3(&enabled, &save, usize::MAX, 0).unwrap();
    let ids: Vec<Vec<String>> = seqs
        .iter()
        .map(|s| s.events.iter().map(EventDescriptor::id).collect())
        .collect();
    assert!(ids.contains(&vec![
        "add_count:click".into(),
        "remove_count:click".into(),
        "save_project:click".into()
    ]));
    assert!(ids.contains(&vec![
        "project_name:edit_text".into(),
        "menu:click".into(),
        "save_project:click".into()
    ]));
    let n = enabled.len() - 1;
    assert_eq!(seqs.len(), 3 * n * (n - 1));
}

#[test]
fn paused_sequences_resume_with_their_suffix() {
    for app in common::corpus() {
        for seed in 1..=2 {
            let config = StrategyConfig::new(StrategyKind::Cat, seed)
                .with_guidance(app.guidance.clone().unwrap_or_default());
            let out = run_strategy(&app.model, &app.expected_targets, &config).unwrap();
            let resumed = common::check_ledger(&out).unwrap();
            assert!(resumed <= out.sequences.len());
        }
    }
}

#[test]
fn amaze_interacts_right_after_entering_the_target_state() {
    let app = common::app("amaze_like");
    let out = run_strategy(
        &app.model,
        &app.expected_targets,
        &StrategyConfig::new(StrategyKind::Cat, 1),
    )
    .unwrap();
    let report = score_trace(
        &app.model,
        &out.trace,
        &app.expected_targets,
        StrategyKind::Cat,
        1,
    )
    .unwrap();
    let entered = report.first_target_state_index.unwrap();
    let touched = report.first_target_interaction_index.unwrap();
    assert!(
        touched > entered && touched - entered <= 2,
        "entered {entered}, touched {touched}"
    );

    // the entry index really is the first target state
    let mut sim = Simulator::new(&app.model, 1);
    for rec in &out.trace.records[..entered - 1] {
        sim.step(&rec.event).unwrap();
        assert!(!is_target_state(sim.state(), &app.expected_targets));
    }
    sim.step(&out.trace.records[entered - 1].event).unwrap();
    assert!(is_target_state(sim.state(), &app.expected_targets));
}

#[test]
fn guidance_mismatch_names_the_step() {
    let app = common::app("simplefm_like");
    let bogus = Guidance(vec![EventDescriptor::new(
        Some("no_such_button"),
        ActionKind::Click,
        None,
    )]);
    let config = StrategyConfig::new(StrategyKind::Cat, 1);
    match run_with_guidance(&app.model, &app.expected_targets, bogus, &config) {
        Err(RunError::GuidanceMismatch {
            index,
            event,
            state,
        }) => {
            assert_eq!(index, 1);
            assert_eq!(event, "no_such_button:click");
            assert!(state.contains("activity="));
        }
        other => panic!("unexpected {other:?}"),
    }
    let mut late = app.guidance.clone().unwrap();
    late.0.insert(
        2,
        EventDescriptor::new(Some("protected_info"), ActionKind::Click, None),
    );
    assert!(matches!(
        run_with_guidance(&app.model, &app.expected_targets, late, &config),
        Err(RunError::GuidanceMismatch { index: 3, .. })
    ));
}

#[test]
fn empty_guidance_is_plain_cat() {
    let app = common::app("currency_like");
    let config = StrategyConfig::new(StrategyKind::Cat, 4).with_budget(300);
    let plain = run_strategy(&app.model, &app.expected_targets, &config)
        .unwrap()
        .trace;
    let guided = run_with_guidance(
        &app.model,
        &app.expected_targets,
        Guidance::default(),
        &config,
    )
    .unwrap();
    assert_eq!(plain, guided);
}

#[test]
fn guidance_opens_the_password_gate() {
    let app = common::app("simplefm_like");
    let guidance = app.guidance.clone().unwrap();
    let config = StrategyConfig::new(StrategyKind::Cat, 1);
    let trace =
        run_with_guidance(&app.model, &app.expected_targets, guidance.clone(), &config).unwrap();
    for (desc, rec) in guidance.0.iter().zip(&trace.records) {
        assert!(desc.matches(&rec.event));
    }
    assert_eq!(
        trace.records[2].event.payload.as_deref(),
        Some("correct-horse-42")
    );
    let report = score_trace(
        &app.model,
        &trace,
        &app.expected_targets,
        StrategyKind::Cat,
        1,
    )
    .unwrap();
    assert!(report.target_interaction_count >= 1);

    let unguided = run_strategy(&app.model, &app.expected_targets, &config).unwrap();
    let report = score_trace(
        &app.model,
        &unguided.trace,
        &app.expected_targets,
        StrategyKind::Cat,
        1,
    )
    .unwrap();
    assert_eq!(report.target_interaction_count, 0);
}
