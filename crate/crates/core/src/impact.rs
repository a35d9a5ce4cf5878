//! Change impact analysis over the combined GUI-function map.
//!
//! The map joins the call graph (as an undirected graph) with one node per
//! listener-bearing element, connected to its listener functions. Elements
//! are bound to the activities whose layouts display them. A depth-first
//! traversal from the changed functions yields the target elements.
//!
//! Traversal is undirected, so callers and callees of a changed function are
//! both considered affected. This over-approximates what a directed analysis
//! would report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AppModel, Effect, FunctionRef};

#[derive(Debug, Error)]
pub enum ImpactError {
    #[error("change set lists no changes")]
    EmptyChangeSet,
    #[error("unknown change entries: {}", .0.join(", "))]
    UnknownChangeEntry(Vec<String>),
    #[error("activity `{0}` is not pending dynamic resolution")]
    NotPending(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed change set: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum NodeId {
    Function(FunctionRef),
    Element(String),
}

impl NodeId {
    pub fn label(&self) -> &str {
        match self {
            NodeId::Function(f) => f.as_str(),
            NodeId::Element(e) => e,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CombinedMap {
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    residence: BTreeMap<String, BTreeSet<String>>,
    unresolved_dynamic: BTreeSet<String>,
}

impl CombinedMap {
    fn add_node(&mut self, node: NodeId) {
        self.adjacency.entry(node).or_default();
    }

    fn add_edge(&mut self, a: NodeId, b: NodeId) {
        self.adjacency
            .entry(a.clone())
            .or_default()
            .insert(b.clone());
        self.adjacency.entry(b).or_default().insert(a);
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.adjacency.keys()
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.adjacency.contains_key(node)
    }

    pub fn neighbors(&self, node: &NodeId) -> impl Iterator<Item = &NodeId> {
        self.adjacency.get(node).into_iter().flatten()
    }

    /// Undirected edges, each reported once with the smaller endpoint first.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .flat_map(|(a, ns)| {
                ns.iter()
                    .filter(move |b| a <= *b)
                    .map(move |b| (a.clone(), b.clone()))
            })
            .collect()
    }

    pub fn residence(&self, element_id: &str) -> Option<&BTreeSet<String>> {
        self.residence.get(element_id)
    }

    pub fn residence_map(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.residence
    }

    pub fn unresolved_dynamic(&self) -> &BTreeSet<String> {
        &self.unresolved_dynamic
    }

    /// Graphviz rendering of the map; element nodes are boxes.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph combined {\n");
        for node in self.adjacency.keys() {
            let shape = match node {
                NodeId::Function(_) => "ellipse",
                NodeId::Element(_) => "box",
            };
            let _ = writeln!(out, "  \"{}\" [shape={shape}];", node.label());
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  \"{}\" -- \"{}\";", a.label(), b.label());
        }
        out.push_str("}\n");
        out
    }
}

/// First stage: undirected call graph plus element-listener edges.
pub fn build_function_graph(model: &AppModel) -> CombinedMap {
    let mut map = CombinedMap::default();
    for f in &model.call_graph.nodes {
        map.add_node(NodeId::Function(f.clone()));
    }
    for (caller, callee) in &model.call_graph.edges {
        map.add_edge(
            NodeId::Function(caller.clone()),
            NodeId::Function(callee.clone()),
        );
    }
    for e in &model.elements {
        for f in e.listeners.values() {
            map.add_edge(
                NodeId::Element(e.element_id.clone()),
                NodeId::Function(f.clone()),
            );
        }
    }
    map
}

/// Second stage: record which activities display each element, either via
/// the initial layout or a layout inflated later.
pub fn bind_elements_to_activities(model: &AppModel, mut map: CombinedMap) -> CombinedMap {
    map.residence.clear();
    map.unresolved_dynamic.clear();
    for e in &model.elements {
        if e.dynamic_target_of.is_some() {
            // Bound at runtime: the element that leads into the activity is
            // recorded when exploration first enters it.
            map.unresolved_dynamic.insert(e.element_id.clone());
            map.residence.insert(e.element_id.clone(), BTreeSet::new());
        }
    }
    for a in &model.activities {
        let layouts = std::iter::once(&a.initial_layout).chain(a.inflatable_layouts.iter());
        for l in layouts {
            for e in model.flattened(l) {
                if map.unresolved_dynamic.contains(e) {
                    continue;
                }
                map.residence
                    .entry(e.clone())
                    .or_default()
                    .insert(a.activity_id.clone());
            }
        }
    }
    map
}

pub fn build_combined_map(model: &AppModel) -> CombinedMap {
    bind_elements_to_activities(model, build_function_graph(model))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    #[serde(default)]
    pub changed_functions: Vec<FunctionRef>,
    #[serde(default)]
    pub new_elements: Vec<String>,
    #[serde(default)]
    pub modified_activities: Vec<String>,
}

impl ChangeSet {
    pub fn new(
        changed_functions: Vec<FunctionRef>,
        new_elements: Vec<String>,
        modified_activities: Vec<String>,
    ) -> Result<Self, ImpactError> {
        let cs = ChangeSet {
            changed_functions,
            new_elements,
            modified_activities,
        };
        if cs.is_empty() {
            return Err(ImpactError::EmptyChangeSet);
        }
        Ok(cs)
    }

    pub fn is_empty(&self) -> bool {
        self.changed_functions.is_empty()
            && self.new_elements.is_empty()
            && self.modified_activities.is_empty()
    }

    pub fn from_json_str(text: &str) -> Result<Self, ImpactError> {
        let cs: ChangeSet = serde_json::from_str(text)?;
        if cs.is_empty() {
            return Err(ImpactError::EmptyChangeSet);
        }
        Ok(cs)
    }
}

pub fn load_change_set(path: impl AsRef<Path>) -> Result<ChangeSet, ImpactError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ImpactError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ChangeSet::from_json_str(&text)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSet {
    pub target_elements: BTreeSet<String>,
    pub target_activities: BTreeSet<String>,
    pub affected_functions: BTreeSet<FunctionRef>,
    pub pending_dynamic_activities: BTreeSet<String>,
}

impl TargetSet {
    pub fn is_target_element(&self, element_id: &str) -> bool {
        self.target_elements.contains(element_id)
    }

    /// Promotes the element whose event first entered a pending activity.
    pub fn resolve_dynamic_target(
        &mut self,
        entered_activity: &str,
        causing_element: &str,
    ) -> Result<(), ImpactError> {
        if !self.pending_dynamic_activities.remove(entered_activity) {
            return Err(ImpactError::NotPending(entered_activity.to_owned()));
        }
        self.target_elements.insert(causing_element.to_owned());
        self.target_activities.insert(entered_activity.to_owned());
        Ok(())
    }
}

pub fn resolve_dynamic_target(
    targets: &TargetSet,
    entered_activity: &str,
    causing_element: &str,
) -> Result<TargetSet, ImpactError> {
    let mut next = targets.clone();
    next.resolve_dynamic_target(entered_activity, causing_element)?;
    Ok(next)
}

pub fn compute_change_impact(
    model: &AppModel,
    map: &CombinedMap,
    changes: &ChangeSet,
) -> Result<TargetSet, ImpactError> {
    if changes.is_empty() {
        return Err(ImpactError::EmptyChangeSet);
    }
    let mut unknown = Vec::new();
    for f in &changes.changed_functions {
        if !map.contains(&NodeId::Function(f.clone())) {
            unknown.push(f.to_string());
        }
    }
    for e in &changes.new_elements {
        if model.element(e).is_none() {
            unknown.push(e.clone());
        }
    }
    for a in &changes.modified_activities {
        if model.activity(a).is_none() {
            unknown.push(a.clone());
        }
    }
    if !unknown.is_empty() {
        return Err(ImpactError::UnknownChangeEntry(unknown));
    }

    let mut targets = TargetSet::default();
    let mut visited: BTreeSet<&NodeId> = BTreeSet::new();
    let starts: Vec<NodeId> = changes
        .changed_functions
        .iter()
        .cloned()
        .map(NodeId::Function)
        .collect();
    let mut stack: Vec<&NodeId> = starts.iter().collect();
    while let Some(node) = stack.pop() {
        if !visited.insert(node) {
            continue;
        }
        stack.extend(map.neighbors(node).filter(|n| !visited.contains(n)));
    }
    for node in visited {
        match node {
            NodeId::Function(f) => {
                targets.affected_functions.insert(f.clone());
            }
            NodeId::Element(e) => {
                targets.target_elements.insert(e.clone());
            }
        }
    }
    targets
        .affected_functions
        .extend(changes.changed_functions.iter().cloned());
    targets
        .target_elements
        .extend(changes.new_elements.iter().cloned());

    for activity in &changes.modified_activities {
        let entry_elements = static_entry_elements(model, activity);
        if entry_elements.is_empty() {
            targets.pending_dynamic_activities.insert(activity.clone());
        } else {
            targets.target_elements.extend(entry_elements);
        }
    }

    for e in &targets.target_elements {
        if let Some(acts) = map.residence(e) {
            targets.target_activities.extend(acts.iter().cloned());
        }
    }
    targets
        .target_activities
        .extend(targets.pending_dynamic_activities.iter().cloned());
    Ok(targets)
}

/// Non-dynamic elements with a rule that navigates into `activity`.
fn static_entry_elements(model: &AppModel, activity: &str) -> BTreeSet<String> {
    model
        .transitions
        .iter()
        .filter(|r| {
            r.effects
                .iter()
                .any(|fx| matches!(fx, Effect::GotoActivity(a) if a == activity))
        })
        .filter(|r| {
            model
                .element(&r.trigger.element_id)
                .is_some_and(|e| e.dynamic_target_of.is_none())
        })
        .map(|r| r.trigger.element_id.clone())
        .collect()
}
