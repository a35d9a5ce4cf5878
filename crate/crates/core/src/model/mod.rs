//! Declarative description of an event-driven app: activities, layouts,
//! elements, listeners, the call graph, executable transition rules and
//! injected faults.
//!
//! Models are loaded from `.app.json` documents and validated before use.
//! Once loaded an [`AppModel`] is immutable; lookups go through a lazily
//! built [`ModelIndex`].

mod types;
mod validate;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use types::*;
pub use validate::{validate_app_model, Invariant, Violation};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at `{field}` (line {line}, column {column}): {message}")]
    Parse {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("model failed validation:\n{}", render_violations(.0))]
    Validation(Vec<Violation>),
    #[error("unknown layout `{0}`")]
    UnknownLayout(String),
}

fn render_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppModel {
    pub name: String,
    pub activities: Vec<Activity>,
    pub layouts: Vec<Layout>,
    pub elements: Vec<GuiElement>,
    #[serde(default)]
    pub call_graph: CallGraph,
    #[serde(default)]
    pub transitions: Vec<TransitionRule>,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    #[serde(default)]
    pub flags: Vec<String>,
    #[serde(default)]
    pub values: Vec<String>,
    #[serde(skip)]
    index: OnceLock<ModelIndex>,
}

impl PartialEq for AppModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.activities == other.activities
            && self.layouts == other.layouts
            && self.elements == other.elements
            && self.call_graph == other.call_graph
            && self.transitions == other.transitions
            && self.faults == other.faults
            && self.flags == other.flags
            && self.values == other.values
    }
}

/// Precomputed lookups over a model.
#[derive(Debug, Clone, Default)]
pub struct ModelIndex {
    activities: HashMap<String, usize>,
    layouts: HashMap<String, usize>,
    elements: HashMap<String, usize>,
    faults: HashMap<String, usize>,
    rules_by_trigger: HashMap<(String, ActionKind), Vec<usize>>,
    callees: HashMap<FunctionRef, Vec<FunctionRef>>,
    flattened: HashMap<String, Vec<String>>,
    fault_elements: HashMap<String, BTreeSet<String>>,
}

impl AppModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        activities: Vec<Activity>,
        layouts: Vec<Layout>,
        elements: Vec<GuiElement>,
        call_graph: CallGraph,
        transitions: Vec<TransitionRule>,
        faults: Vec<FaultSpec>,
        flags: Vec<String>,
        values: Vec<String>,
    ) -> Self {
        AppModel {
            name: name.into(),
            activities,
            layouts,
            elements,
            call_graph,
            transitions,
            faults,
            flags,
            values,
            index: OnceLock::new(),
        }
    }

    /// Parses a model document without validating it.
    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|err| {
            let field = err.path().to_string();
            let inner = err.into_inner();
            ModelError::Parse {
                field,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn index(&self) -> &ModelIndex {
        self.index.get_or_init(|| ModelIndex::build(self))
    }

    pub fn activity(&self, id: &str) -> Option<&Activity> {
        self.index()
            .activities
            .get(id)
            .map(|&i| &self.activities[i])
    }

    pub fn layout(&self, id: &str) -> Option<&Layout> {
        self.index().layouts.get(id).map(|&i| &self.layouts[i])
    }

    pub fn element(&self, id: &str) -> Option<&GuiElement> {
        self.index().elements.get(id).map(|&i| &self.elements[i])
    }

    /// Position of the element in the model's declaration order.
    pub fn element_position(&self, id: &str) -> Option<usize> {
        self.index().elements.get(id).copied()
    }

    pub fn fault(&self, id: &str) -> Option<&FaultSpec> {
        self.index().faults.get(id).map(|&i| &self.faults[i])
    }

    pub fn start_activity(&self) -> Option<&Activity> {
        self.activities.iter().find(|a| a.is_start)
    }

    /// Rules triggered by `(element, action)`, in declaration order.
    pub fn rules_for<'a>(
        &'a self,
        element_id: &str,
        action: ActionKind,
    ) -> impl Iterator<Item = &'a TransitionRule> + 'a {
        self.index()
            .rules_by_trigger
            .get(&(element_id.to_owned(), action))
            .into_iter()
            .flatten()
            .map(move |&i| &self.transitions[i])
    }

    /// Direct callees of `function` in the call graph.
    pub fn callees(&self, function: &FunctionRef) -> &[FunctionRef] {
        self.index()
            .callees
            .get(function)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// `function` plus everything it transitively calls.
    pub fn call_closure(&self, function: &FunctionRef) -> BTreeSet<FunctionRef> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([function.clone()]);
        while let Some(f) = queue.pop_front() {
            if seen.insert(f.clone()) {
                queue.extend(self.callees(&f).iter().cloned());
            }
        }
        seen
    }

    /// Elements whose transition rules can reveal `fault_id`.
    pub fn fault_elements(&self, fault_id: &str) -> BTreeSet<String> {
        self.index()
            .fault_elements
            .get(fault_id)
            .cloned()
            .unwrap_or_default()
    }

    /// Depth-first flattening of a layout and its embedded layouts, keeping
    /// the first occurrence of every element.
    pub fn flatten_layout(&self, layout_id: &str) -> Result<Vec<String>, ModelError> {
        if let Some(cached) = self.index.get().and_then(|i| i.flattened.get(layout_id)) {
            return Ok(cached.clone());
        }
        if !self.layouts.iter().any(|l| l.layout_id == layout_id) {
            return Err(ModelError::UnknownLayout(layout_id.to_owned()));
        }
        Ok(flatten_uncached(self, layout_id))
    }

    /// Cached flattening for hot paths; unknown layouts flatten to nothing.
    pub fn flattened(&self, layout_id: &str) -> &[String] {
        self.index()
            .flattened
            .get(layout_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

fn flatten_uncached(model: &AppModel, layout_id: &str) -> Vec<String> {
    fn visit<'a>(
        model: &'a AppModel,
        layout_id: &'a str,
        on_path: &mut HashSet<&'a str>,
        seen: &mut HashSet<&'a str>,
        out: &mut Vec<String>,
    ) {
        let Some(layout) = model.layouts.iter().find(|l| l.layout_id == layout_id) else {
            return;
        };
        if !on_path.insert(layout_id) {
            return;
        }
        for e in &layout.elements {
            if seen.insert(e) {
                out.push(e.clone());
            }
        }
        for embedded in &layout.embedded_layouts {
            visit(model, embedded, on_path, seen, out);
        }
        on_path.remove(layout_id);
    }
    let mut out = Vec::new();
    visit(
        model,
        layout_id,
        &mut HashSet::new(),
        &mut HashSet::new(),
        &mut out,
    );
    out
}

impl ModelIndex {
    fn build(model: &AppModel) -> Self {
        let positions = |ids: Vec<&String>| -> HashMap<String, usize> {
            let mut map = HashMap::new();
            for (i, id) in ids.into_iter().enumerate() {
                map.entry(id.clone()).or_insert(i);
            }
            map
        };
        let mut rules_by_trigger: HashMap<(String, ActionKind), Vec<usize>> = HashMap::new();
        let mut fault_elements: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (i, rule) in model.transitions.iter().enumerate() {
            rules_by_trigger
                .entry((rule.trigger.element_id.clone(), rule.trigger.action))
                .or_default()
                .push(i);
            for effect in &rule.effects {
                if let Effect::RevealFault(f) = effect {
                    fault_elements
                        .entry(f.clone())
                        .or_default()
                        .insert(rule.trigger.element_id.clone());
                }
            }
        }
        let mut callees: HashMap<FunctionRef, Vec<FunctionRef>> = HashMap::new();
        for (caller, callee) in &model.call_graph.edges {
            let list = callees.entry(caller.clone()).or_default();
            if !list.contains(callee) {
                list.push(callee.clone());
            }
        }
        let flattened = model
            .layouts
            .iter()
            .map(|l| (l.layout_id.clone(), flatten_uncached(model, &l.layout_id)))
            .collect();
        ModelIndex {
            activities: positions(model.activities.iter().map(|a| &a.activity_id).collect()),
            layouts: positions(model.layouts.iter().map(|l| &l.layout_id).collect()),
            elements: positions(model.elements.iter().map(|e| &e.element_id).collect()),
            faults: positions(model.faults.iter().map(|f| &f.fault_id).collect()),
            rules_by_trigger,
            callees,
            flattened,
            fault_elements,
        }
    }
}

/// Reads, parses and validates a model document.
pub fn load_app_model(path: impl AsRef<Path>) -> Result<AppModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let model = AppModel::from_json_str(&text)?;
    let violations = validate_app_model(&model);
    if !violations.is_empty() {
        return Err(ModelError::Validation(violations));
    }
    Ok(model)
}

/// Free-function form of [`AppModel::flatten_layout`].
pub fn flatten_layout(model: &AppModel, layout_id: &str) -> Result<Vec<String>, ModelError> {
    model.flatten_layout(layout_id)
}
