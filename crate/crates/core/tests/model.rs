mod common;

use changehound::model::{
    flatten_layout, validate_app_model, AppModel, Invariant, Layout, ModelError,
};
use proptest::prelude::*;
use serde_json::{json, Value};

fn invariants(model: &AppModel) -> Vec<Invariant> {
    validate_app_model(model)
        .into_iter()
        .map(|v| v.invariant)
        .collect()
}

#[test]
fn corpus_models_validate_and_round_trip() {
    for app in common::corpus() {
        let violations = validate_app_model(&app.model);
        assert!(violations.is_empty(), "{}: {violations:?}", app.name());
        let again = AppModel::from_json_str(&app.model.to_json_string()).unwrap();
        assert_eq!(again, app.model, "{}", app.name());
    }
}

#[test]
fn minimal_model_without_elements_is_valid() {
    let text = r#"{
        "name": "bare",
        "activities": [{"activity_id": "Main", "initial_layout": "main", "is_start": true}],
        "layouts": [{"layout_id": "main", "elements": []}],
        "elements": [],
        "call_graph": {"nodes": [], "edges": []},
        "transitions": []
    }"#;
    let model = AppModel::from_json_str(text).unwrap();
    assert!(validate_app_model(&model).is_empty());
}

#[test]
fn parse_errors_name_the_field() {
    let mut doc: Value =
        serde_json::from_str(&common::app("amaze_like").model.to_json_string()).unwrap();
    doc["elements"][2]["supported_actions"] = json!(["tap"]);
    let err = AppModel::from_json_str(&doc.to_string()).unwrap_err();
    match err {
        ModelError::Parse { field, .. } => assert_eq!(field, "elements[2].supported_actions[0]"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn self_embedding_layout_is_a_cycle() {
    let mut model = common::chain_model();
    model.layouts[1].embedded_layouts.push("second".into());
    let model = AppModel::from_json_str(&model.to_json_string()).unwrap();
    assert!(invariants(&model).contains(&Invariant::EmbeddingCycle));
    // flattening still terminates
    assert_eq!(
        flatten_layout(&model, "second").unwrap(),
        ["s_next", "s_opt"]
    );
}

#[test]
fn listener_outside_call_graph_is_reported() {
    let mut doc: Value = serde_json::from_str(&common::chain_model().to_json_string()).unwrap();
    doc["elements"][0]["listeners"] = json!({"click": "chain.MainActivity.onGhost(View)"});
    let model = AppModel::from_json_str(&doc.to_string()).unwrap();
    let violations = validate_app_model(&model);
    assert_eq!(violations.len(), 1, "{violations:?}");
    assert!(violations[0]
        .to_string()
        .contains("listener function not in call graph"));
}

#[test]
fn listener_on_unsupported_action_is_reported() {
    let mut doc: Value = serde_json::from_str(&common::chain_model().to_json_string()).unwrap();
    doc["elements"][3]["listeners"] = json!({"edit_text": "chain.SecondActivity.onOption(View)"});
    let model = AppModel::from_json_str(&doc.to_string()).unwrap();
    assert_eq!(invariants(&model), [Invariant::ListenerActionNotSupported]);
}

#[test]
fn amaze_compress_listener_loads() {
    let app = common::app("amaze_like");
    let compress = app.model.element("compress").unwrap();
    let listener = compress.listeners.values().next().unwrap();
    assert_eq!(
        listener.as_str(),
        "filemanager.MainActivityHelper.compressFiles(List)"
    );
    let parts = listener.parse().unwrap();
    assert_eq!(
        (parts.class, parts.method, parts.params),
        ("MainActivityHelper", "compressFiles", vec!["List"])
    );
}

/// Single-field corruptions of a valid document, each paired with the
/// invariant it must trip. `pos` picks among the candidate sites.
fn corrupt(doc: &mut Value, kind: usize, pos: usize) -> Option<Invariant> {
    let pick = |n: usize| if n == 0 { None } else { Some(pos % n) };
    match kind {
        0 => {
            let i = pick(doc["activities"].as_array()?.len())?;
            doc["activities"][i]["initial_layout"] = json!("ghost_layout");
            Some(Invariant::UnknownLayout)
        }
        1 => {
            let acts = doc["activities"].as_array_mut()?;
            let start = acts.iter_mut().find(|a| a["is_start"] == json!(true))?;
            start["is_start"] = json!(false);
            Some(Invariant::ExactlyOneStartActivity)
        }
        2 => {
            let layouts: Vec<usize> = (0..doc["layouts"].as_array()?.len())
                .filter(|&i| !doc["layouts"][i]["elements"].as_array().unwrap().is_empty())
                .collect();
            let l = layouts[pick(layouts.len())?];
            doc["layouts"][l]["elements"][0] = json!("ghost_element");
            Some(Invariant::UnknownElement)
        }
        3 => {
            let n = doc["elements"].as_array()?.len();
            if n < 2 {
                return None;
            }
            let i = 1 + pos % (n - 1);
            doc["elements"][i]["element_id"] = doc["elements"][0]["element_id"].clone();
            Some(Invariant::DuplicateId)
        }
        4 => {
            let with: Vec<usize> = (0..doc["elements"].as_array()?.len())
                .filter(|&i| doc["elements"][i].get("listeners").is_some())
                .collect();
            let i = with[pick(with.len())?];
            let listeners = doc["elements"][i]["listeners"].as_object_mut()?;
            let action = listeners.keys().next()?.clone();
            listeners.insert(action, json!("ghost.Ghost.boo()"));
            Some(Invariant::ListenerFunctionNotInCallGraph)
        }
        5 => {
            let i = pick(doc["transitions"].as_array()?.len())?;
            doc["transitions"][i]["trigger"]["element_id"] = json!("ghost_element");
            Some(Invariant::UnknownElement)
        }
        6 => effect_site(
            doc,
            "goto_activity",
            pos,
            json!("GhostActivity"),
            Invariant::UnknownActivity,
        ),
        7 => effect_site(
            doc,
            "reveal_fault",
            pos,
            json!("ghost_fault"),
            Invariant::UnknownFault,
        ),
        8 => {
            let i = pick(doc["call_graph"]["edges"].as_array()?.len())?;
            doc["call_graph"]["edges"][i][1] = json!("ghost.Ghost.boo()");
            Some(Invariant::CallGraphEdgeEndpoint)
        }
        9 => {
            let i = pick(doc["call_graph"]["nodes"].as_array()?.len())?;
            doc["call_graph"]["nodes"][i] = json!("not a signature");
            Some(Invariant::MalformedSignature)
        }
        10 => {
            let i = pick(doc["transitions"].as_array()?.len())?;
            doc["transitions"][i]["effects"] = json!([]);
            Some(Invariant::EmptyEffects)
        }
        11 => {
            let buttons: Vec<usize> = (0..doc["elements"].as_array()?.len())
                .filter(|&i| doc["elements"][i]["kind"] == json!("button"))
                .collect();
            let i = buttons[pick(buttons.len())?];
            doc["elements"][i]["persistent_fields"] =
                json!([doc["values"].get(0).cloned().unwrap_or(json!("v"))]);
            Some(Invariant::PersistentFieldsOnNonEditElement)
        }
        12 => {
            let i = pick(doc["transitions"].as_array()?.len())?;
            doc["transitions"][i]["trigger"]["action"] = json!("scroll");
            let id = doc["transitions"][i]["trigger"]["element_id"].clone();
            let el = doc["elements"]
                .as_array()?
                .iter()
                .find(|e| e["element_id"] == id)?;
            if el["supported_actions"]
                .as_array()?
                .contains(&json!("scroll"))
            {
                return None;
            }
            Some(Invariant::TriggerActionNotSupported)
        }
        13 => {
            let i = pick(doc["layouts"].as_array()?.len())?;
            let id = doc["layouts"][i]["layout_id"].clone();
            doc["layouts"][i]["embedded_layouts"] = json!([id]);
            Some(Invariant::EmbeddingCycle)
        }
        _ => unreachable!(),
    }
}

const CORRUPTIONS: usize = 14;

fn effect_site(
    doc: &mut Value,
    key: &str,
    pos: usize,
    with: Value,
    expect: Invariant,
) -> Option<Invariant> {
    let mut sites = Vec::new();
    for (r, rule) in doc["transitions"].as_array()?.iter().enumerate() {
        for (e, fx) in rule["effects"].as_array()?.iter().enumerate() {
            if fx.get(key).is_some() {
                sites.push((r, e));
            }
        }
    }
    if sites.is_empty() {
        return None;
    }
    let (r, e) = sites[pos % sites.len()];
    doc["transitions"][r]["effects"][e][key] = with;
    Some(expect)
}

#[test]
fn every_corruption_kind_applies_to_some_corpus_model() {
    let docs: Vec<Value> = common::corpus()
        .iter()
        .map(|a| serde_json::from_str(&a.model.to_json_string()).unwrap())
        .collect();
    for kind in 0..CORRUPTIONS {
        assert!(
            docs.iter()
                .any(|d| corrupt(&mut d.clone(), kind, 0).is_some()),
            "corruption {kind} never applies"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn single_field_corruption_is_caught(app in 0usize..13, kind in 0..CORRUPTIONS, pos in 0usize..1000) {
        let apps = common::corpus();
        let mut doc: Value = serde_json::from_str(&apps[app % apps.len()].model.to_json_string()).unwrap();
        if let Some(expected) = corrupt(&mut doc, kind, pos) {
            let model = AppModel::from_json_str(&doc.to_string()).unwrap();
            let found = invariants(&model);
            prop_assert!(found.contains(&expected), "expected {:?}, got {:?}", expected, found);
        }
    }

    #[test]
    fn flattening_matches_naive_expansion(dag in layout_dag()) {
        let model = AppModel::new("flat", vec![], dag.clone(), vec![], Default::default(), vec![], vec![], vec![], vec![]);
        for layout in &dag {
            let got = flatten_layout(&model, &layout.layout_id).unwrap();
            let mut want = Vec::new();
            for e in naive_expand(&dag, &layout.layout_id) {
                if !want.contains(&e) {
                    want.push(e);
                }
            }
            prop_assert_eq!(got, want);
        }
    }
}

/// Full recursive expansion, repeats and all.
fn naive_expand(layouts: &[Layout], id: &str) -> Vec<String> {
    let l = layouts.iter().find(|l| l.layout_id == id).unwrap();
    let mut out = l.elements.clone();
    for child in &l.embedded_layouts {
        out.extend(naive_expand(layouts, child));
    }
    out
}

/// Up to 7 layouts; a layout only embeds layouts with a larger index.
fn layout_dag() -> impl Strategy<Value = Vec<Layout>> {
    (1usize..8).prop_flat_map(|n| {
        proptest::collection::vec(
            (
                proptest::collection::vec(0u8..10, 0..4),
                proptest::collection::vec(0usize..8, 0..3),
            ),
            n,
        )
        .prop_map(move |rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (els, kids))| Layout {
                    layout_id: format!("l{i}"),
                    elements: els.into_iter().map(|e| format!("e{e}")).collect(),
                    embedded_layouts: kids
                        .into_iter()
                        .filter(|&k| k > i && k < n)
                        .map(|k| format!("l{k}"))
                        .collect(),
                })
                .collect()
        })
    })
}

#[test]
fn misspelled_keys_are_rejected() {
    let mut doc: Value = serde_json::from_str(&common::chain_model().to_json_string()).unwrap();
    doc["activities"][0]["is_strat"] = json!(true);
    match AppModel::from_json_str(&doc.to_string()) {
        Err(ModelError::Parse { field, message, .. }) => {
            assert_eq!(field, "activities[0].is_strat");
            assert!(message.contains("is_strat"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

/// Every key the corpus models use is a declared property of the matching
/// schema definition, and every required property is present.
#[test]
fn schema_covers_corpus_documents() {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../docs/schema/app-model.schema.json"
    );
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let check = |def: &Value, obj: &Value, what: &str| {
        let props = def["properties"].as_object().unwrap();
        for key in obj.as_object().unwrap().keys() {
            assert!(
                props.contains_key(key),
                "{what}: `{key}` missing from schema"
            );
        }
        for req in def["required"].as_array().into_iter().flatten() {
            assert!(
                obj.get(req.as_str().unwrap()).is_some(),
                "{what}: required `{req}` absent"
            );
        }
    };
    let defs = &schema["$defs"];
    for app in common::corpus() {
        let doc: Value = serde_json::from_str(&app.model.to_json_string()).unwrap();
        check(&schema, &doc, "model");
        for (section, def) in [
            ("activities", "activity"),
            ("layouts", "layout"),
            ("elements", "element"),
            ("transitions", "rule"),
            ("faults", "fault"),
        ] {
            for item in doc[section].as_array().unwrap() {
                check(&defs[def], item, def);
            }
        }
        for rule in doc["transitions"].as_array().unwrap() {
            for fx in rule["effects"].as_array().unwrap() {
                let allowed = &defs["effect"]["oneOf"];
                let ok = match fx {
                    Value::String(s) => {
                        allowed.as_array().unwrap().iter().any(|a| a["const"] == *s)
                    }
                    Value::Object(o) => o.keys().all(|k| allowed[2]["properties"].get(k).is_some()),
                    _ => false,
                };
                assert!(ok, "effect {fx} not in schema");
            }
        }
    }
}
