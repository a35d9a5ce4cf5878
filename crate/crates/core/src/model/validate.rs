use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{ActionKind, AppModel, Effect, ElementKind, Guard};

/// The structural rule a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    ExactlyOneStartActivity,
    DuplicateId,
    MalformedSignature,
    ListenerActionNotSupported,
    BackBoundToElement,
    PersistentFieldsOnNonEditElement,
    UndeclaredValueKey,
    UndeclaredFlag,
    UnknownElement,
    UnknownLayout,
    UnknownActivity,
    UnknownFault,
    EmbeddingCycle,
    InitialLayoutInflatable,
    CallGraphEdgeEndpoint,
    ListenerFunctionNotInCallGraph,
    UnreachableElement,
    UnreachableLayout,
    TriggerActionNotSupported,
    EmptyEffects,
    InflateNotDeclared,
    DynamicTargetWithoutRule,
}

impl Invariant {
    pub fn describe(self) -> &'static str {
        match self {
            Invariant::ExactlyOneStartActivity => "exactly one start activity",
            Invariant::DuplicateId => "duplicate id",
            Invariant::MalformedSignature => "malformed function signature",
            Invariant::ListenerActionNotSupported => "listener action not in supported actions",
            Invariant::BackBoundToElement => "back is system-level and bound to no element",
            Invariant::PersistentFieldsOnNonEditElement => "persistent fields only on edit fields",
            Invariant::UndeclaredValueKey => "undeclared value key",
            Invariant::UndeclaredFlag => "undeclared flag",
            Invariant::UnknownElement => "unknown element reference",
            Invariant::UnknownLayout => "unknown layout reference",
            Invariant::UnknownActivity => "unknown activity reference",
            Invariant::UnknownFault => "unknown fault reference",
            Invariant::EmbeddingCycle => "embedded layouts form a cycle",
            Invariant::InitialLayoutInflatable => "initial layout is also inflatable",
            Invariant::CallGraphEdgeEndpoint => "call graph edge endpoint not a node",
            Invariant::ListenerFunctionNotInCallGraph => "listener function not in call graph",
            Invariant::UnreachableElement => "element not reachable from any layout",
            Invariant::UnreachableLayout => "layout not reachable from any activity",
            Invariant::TriggerActionNotSupported => "rule trigger action not supported",
            Invariant::EmptyEffects => "rule has no effects",
            Invariant::InflateNotDeclared => "inflated layout not inflatable by any activity",
            Invariant::DynamicTargetWithoutRule => "dynamic target has no navigating rule",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub invariant: Invariant,
    pub subject: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: `{}`", self.invariant.describe(), self.subject)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

struct Checker<'a> {
    model: &'a AppModel,
    out: Vec<Violation>,
    activities: HashSet<&'a str>,
    layouts: HashSet<&'a str>,
    elements: HashMap<&'a str, &'a super::GuiElement>,
    flags: HashSet<&'a str>,
    values: HashSet<&'a str>,
    faults: HashSet<&'a str>,
}

impl<'a> Checker<'a> {
    fn report(
        &mut self,
        invariant: Invariant,
        subject: impl Into<String>,
        detail: impl Into<String>,
    ) {
        self.out.push(Violation {
            invariant,
            subject: subject.into(),
            detail: detail.into(),
        });
    }

    fn unique<I>(&mut self, what: &str, ids: I) -> HashSet<&'a str>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut set = HashSet::new();
        for id in ids {
            if !set.insert(id) {
                self.report(Invariant::DuplicateId, id, what.to_string());
            }
        }
        set
    }

    fn run(mut self) -> Vec<Violation> {
        let m = self.model;
        self.activities = self.unique(
            "activity",
            m.activities.iter().map(|a| a.activity_id.as_str()),
        );
        self.layouts = self.unique("layout", m.layouts.iter().map(|l| l.layout_id.as_str()));
        let element_ids = self.unique("element", m.elements.iter().map(|e| e.element_id.as_str()));
        self.elements = m
            .elements
            .iter()
            .filter(|e| element_ids.contains(e.element_id.as_str()))
            .map(|e| (e.element_id.as_str(), e))
            .collect();
        self.flags = self.unique("flag", m.flags.iter().map(String::as_str));
        self.values = self.unique("value key", m.values.iter().map(String::as_str));
        self.faults = self.unique("fault", m.faults.iter().map(|f| f.fault_id.as_str()));
        self.unique("rule", m.transitions.iter().map(|r| r.rule_id.as_str()));
        self.unique("function", m.call_graph.nodes.iter().map(|f| f.as_str()));

        self.check_activities();
        self.check_layouts();
        self.check_elements();
        self.check_call_graph();
        self.check_rules();
        self.check_reachability();
        self.out
    }

    fn check_activities(&mut self) {
        let m = self.model;
        let starts: Vec<&str> = m
            .activities
            .iter()
            .filter(|a| a.is_start)
            .map(|a| a.activity_id.as_str())
            .collect();
        if starts.len() != 1 {
            self.report(
                Invariant::ExactlyOneStartActivity,
                m.name.clone(),
                format!("found {} start activities", starts.len()),
            );
        }
        for a in &m.activities {
            if !self.layouts.contains(a.initial_layout.as_str()) {
                self.report(
                    Invariant::UnknownLayout,
                    &a.initial_layout,
                    format!("initial layout of {}", a.activity_id),
                );
            }
            if a.inflatable_layouts.contains(&a.initial_layout) {
                self.report(
                    Invariant::InitialLayoutInflatable,
                    &a.activity_id,
                    a.initial_layout.clone(),
                );
            }
            for l in &a.inflatable_layouts {
                if !self.layouts.contains(l.as_str()) {
                    self.report(
                        Invariant::UnknownLayout,
                        l,
                        format!("inflatable in {}", a.activity_id),
                    );
                }
            }
        }
    }

    fn check_layouts(&mut self) {
        let m = self.model;
        for l in &m.layouts {
            for e in &l.elements {
                if !self.elements.contains_key(e.as_str()) {
                    self.report(
                        Invariant::UnknownElement,
                        e,
                        format!("in layout {}", l.layout_id),
                    );
                }
            }
            for embedded in &l.embedded_layouts {
                if !self.layouts.contains(embedded.as_str()) {
                    self.report(
                        Invariant::UnknownLayout,
                        embedded,
                        format!("embedded in {}", l.layout_id),
                    );
                }
            }
        }
        // Cycle detection over the embedding graph.
        let edges: HashMap<&str, Vec<&str>> = m
            .layouts
            .iter()
            .map(|l| {
                (
                    l.layout_id.as_str(),
                    l.embedded_layouts.iter().map(String::as_str).collect(),
                )
            })
            .collect();
        let mut colour: HashMap<&str, u8> = HashMap::new();
        let mut cycles = BTreeSet::new();
        fn dfs<'b>(
            node: &'b str,
            edges: &HashMap<&'b str, Vec<&'b str>>,
            colour: &mut HashMap<&'b str, u8>,
            stack: &mut Vec<&'b str>,
            cycles: &mut BTreeSet<String>,
        ) {
            colour.insert(node, 1);
            stack.push(node);
            for &next in edges.get(node).into_iter().flatten() {
                match colour.get(next).copied().unwrap_or(0) {
                    0 => dfs(next, edges, colour, stack, cycles),
                    1 => {
                        let start = stack.iter().position(|&n| n == next).unwrap_or(0);
                        let mut path: Vec<&str> = stack[start..].to_vec();
                        path.push(next);
                        cycles.insert(path.join(" -> "));
                    }
                    _ => {}
                }
            }
            stack.pop();
            colour.insert(node, 2);
        }
        for l in &m.layouts {
            if colour.get(l.layout_id.as_str()).copied().unwrap_or(0) == 0 {
                dfs(
                    &l.layout_id,
                    &edges,
                    &mut colour,
                    &mut Vec::new(),
                    &mut cycles,
                );
            }
        }
        for cycle in cycles {
            let head = cycle.split(" -> ").next().unwrap_or_default().to_string();
            self.report(Invariant::EmbeddingCycle, head, cycle);
        }
    }

    fn check_elements(&mut self) {
        let m = self.model;
        let functions: HashSet<&str> = m.call_graph.nodes.iter().map(|f| f.as_str()).collect();
        for e in &m.elements {
            if e.supported_actions.contains(&ActionKind::Back) {
                self.report(Invariant::BackBoundToElement, &e.element_id, "");
            }
            for (action, f) in &e.listeners {
                if !e.supported_actions.contains(action) {
                    self.report(
                        Invariant::ListenerActionNotSupported,
                        &e.element_id,
                        format!("{action} listener"),
                    );
                }
                if let Err(msg) = f.parse() {
                    self.report(Invariant::MalformedSignature, f.as_str(), msg);
                }
                if !functions.contains(f.as_str()) {
                    self.report(
                        Invariant::ListenerFunctionNotInCallGraph,
                        f.as_str(),
                        format!("listener of {}", e.element_id),
                    );
                }
            }
            if e.kind != ElementKind::EditField && !e.persistent_fields.is_empty() {
                self.report(
                    Invariant::PersistentFieldsOnNonEditElement,
                    &e.element_id,
                    "",
                );
            }
            for key in &e.persistent_fields {
                if !self.values.contains(key.as_str()) {
                    self.report(
                        Invariant::UndeclaredValueKey,
                        key,
                        format!("persistent field of {}", e.element_id),
                    );
                }
            }
            if let Some(target) = &e.dynamic_target_of {
                if !self.activities.contains(target.as_str()) {
                    self.report(
                        Invariant::UnknownActivity,
                        target,
                        format!("dynamic target of {}", e.element_id),
                    );
                } else {
                    let navigates = m.transitions.iter().any(|r| {
                        r.trigger.element_id == e.element_id
                            && r.effects
                                .iter()
                                .any(|fx| matches!(fx, Effect::GotoActivity(a) if a == target))
                    });
                    if !navigates {
                        self.report(
                            Invariant::DynamicTargetWithoutRule,
                            &e.element_id,
                            target.clone(),
                        );
                    }
                }
            }
        }
    }

    fn check_call_graph(&mut self) {
        let m = self.model;
        for f in &m.call_graph.nodes {
            if let Err(msg) = f.parse() {
                self.report(Invariant::MalformedSignature, f.as_str(), msg);
            }
        }
        let nodes: HashSet<&str> = m.call_graph.nodes.iter().map(|f| f.as_str()).collect();
        for (caller, callee) in &m.call_graph.edges {
            for end in [caller, callee] {
                if !nodes.contains(end.as_str()) {
                    self.report(
                        Invariant::CallGraphEdgeEndpoint,
                        end.as_str(),
                        format!("edge {caller} -> {callee}"),
                    );
                }
            }
        }
    }

    fn check_guard(&mut self, rule_id: &str, guard: &Guard) {
        match guard {
            Guard::FlagIs { flag, .. } => {
                if !self.flags.contains(flag.as_str()) {
                    self.report(
                        Invariant::UndeclaredFlag,
                        flag,
                        format!("guard of {rule_id}"),
                    );
                }
            }
            Guard::ValueEquals { left, right } => {
                for key in [left, right] {
                    if !self.values.contains(key.as_str()) {
                        self.report(
                            Invariant::UndeclaredValueKey,
                            key,
                            format!("guard of {rule_id}"),
                        );
                    }
                }
            }
            Guard::ValueEmpty { key } => {
                if !self.values.contains(key.as_str()) {
                    self.report(
                        Invariant::UndeclaredValueKey,
                        key,
                        format!("guard of {rule_id}"),
                    );
                }
            }
            Guard::InteractionCount { element_id, .. } => {
                if !self.elements.contains_key(element_id.as_str()) {
                    self.report(
                        Invariant::UnknownElement,
                        element_id,
                        format!("guard of {rule_id}"),
                    );
                }
            }
        }
    }

    fn check_rules(&mut self) {
        let m = self.model;
        let inflatable: HashSet<&str> = m
            .activities
            .iter()
            .flat_map(|a| a.inflatable_layouts.iter().map(String::as_str))
            .collect();
        for rule in &m.transitions {
            let id = rule.rule_id.as_str();
            match self.elements.get(rule.trigger.element_id.as_str()) {
                None => self.report(
                    Invariant::UnknownElement,
                    &rule.trigger.element_id,
                    format!("trigger of {id}"),
                ),
                Some(e) if !e.supported_actions.contains(&rule.trigger.action) => self.report(
                    Invariant::TriggerActionNotSupported,
                    id,
                    format!("{} does not support {}", e.element_id, rule.trigger.action),
                ),
                Some(_) => {}
            }
            if rule.effects.is_empty() {
                self.report(Invariant::EmptyEffects, id, "");
            }
            if let Some(guard) = &rule.guard {
                self.check_guard(id, guard);
            }
            for effect in &rule.effects {
                match effect {
                    Effect::GotoActivity(a) if !self.activities.contains(a.as_str()) => {
                        self.report(Invariant::UnknownActivity, a, format!("effect of {id}"))
                    }
                    Effect::Inflate(l) if !self.layouts.contains(l.as_str()) => {
                        self.report(Invariant::UnknownLayout, l, format!("effect of {id}"))
                    }
                    Effect::Inflate(l) if !inflatable.contains(l.as_str()) => {
                        self.report(Invariant::InflateNotDeclared, l, format!("effect of {id}"))
                    }
                    Effect::SetFlag { flag, .. } if !self.flags.contains(flag.as_str()) => {
                        self.report(Invariant::UndeclaredFlag, flag, format!("effect of {id}"))
                    }
                    Effect::SetValue { key, .. } | Effect::ClearValue(key)
                        if !self.values.contains(key.as_str()) =>
                    {
                        self.report(
                            Invariant::UndeclaredValueKey,
                            key,
                            format!("effect of {id}"),
                        )
                    }
                    Effect::RevealFault(f) if !self.faults.contains(f.as_str()) => {
                        self.report(Invariant::UnknownFault, f, format!("effect of {id}"))
                    }
                    _ => {}
                }
            }
        }
    }

    fn check_reachability(&mut self) {
        let m = self.model;
        let mut reachable_layouts: HashSet<&str> = HashSet::new();
        let mut stack: Vec<&str> = m
            .activities
            .iter()
            .flat_map(|a| {
                std::iter::once(a.initial_layout.as_str())
                    .chain(a.inflatable_layouts.iter().map(String::as_str))
            })
            .collect();
        while let Some(l) = stack.pop() {
            if reachable_layouts.insert(l) {
                if let Some(layout) = m.layouts.iter().find(|x| x.layout_id == l) {
                    stack.extend(layout.embedded_layouts.iter().map(String::as_str));
                }
            }
        }
        let mut placed: HashSet<&str> = HashSet::new();
        for l in &m.layouts {
            if !reachable_layouts.contains(l.layout_id.as_str()) {
                self.report(Invariant::UnreachableLayout, &l.layout_id, "");
            }
            placed.extend(l.elements.iter().map(String::as_str));
        }
        for e in &m.elements {
            if !placed.contains(e.element_id.as_str()) {
                self.report(Invariant::UnreachableElement, &e.element_id, "");
            }
        }
    }
}

/// Checks every structural invariant of the model. An empty result means the
/// model is valid.
pub fn validate_app_model(model: &AppModel) -> Vec<Violation> {
    Checker {
        model,
        out: Vec::new(),
        activities: HashSet::new(),
        layouts: HashSet::new(),
        elements: HashMap::new(),
        flags: HashSet::new(),
        values: HashSet::new(),
        faults: HashSet::new(),
    }
    .run()
}
