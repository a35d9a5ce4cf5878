//! Fluent construction of [`AppModel`]s for tests, fixtures and corpus
//! generation. The builder does not validate; call
//! [`validate_app_model`](crate::model::validate_app_model) on the result.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    ActionKind, Activity, AppModel, CallGraph, Effect, ElementKind, FaultKind, FaultSpec,
    FunctionRef, Guard, GuiElement, Layout, TransitionRule, Trigger,
};

#[derive(Debug, Clone, Default)]
pub struct ModelBuilder {
    name: String,
    activities: Vec<Activity>,
    layouts: Vec<Layout>,
    elements: Vec<GuiElement>,
    functions: Vec<FunctionRef>,
    calls: Vec<(FunctionRef, FunctionRef)>,
    rules: Vec<TransitionRule>,
    faults: Vec<FaultSpec>,
    flags: Vec<String>,
    values: Vec<String>,
}

impl ModelBuilder {
    pub fn new(name: &str) -> Self {
        ModelBuilder {
            name: name.to_owned(),
            ..Default::default()
        }
    }

    pub fn activity(mut self, id: &str, initial_layout: &str, is_start: bool) -> Self {
        self.activities.push(Activity {
            activity_id: id.into(),
            initial_layout: initial_layout.into(),
            inflatable_layouts: BTreeSet::new(),
            is_start,
        });
        self
    }

    pub fn inflatable(mut self, activity: &str, layout: &str) -> Self {
        if let Some(a) = self
            .activities
            .iter_mut()
            .find(|a| a.activity_id == activity)
        {
            a.inflatable_layouts.insert(layout.into());
        }
        self
    }

    pub fn layout(mut self, id: &str, elements: &[&str]) -> Self {
        self.layouts.push(Layout {
            layout_id: id.into(),
            elements: elements.iter().map(|s| s.to_string()).collect(),
            embedded_layouts: Vec::new(),
        });
        self
    }

    pub fn layout_owned(mut self, id: &str, elements: Vec<String>) -> Self {
        self.layouts.push(Layout {
            layout_id: id.into(),
            elements,
            embedded_layouts: Vec::new(),
        });
        self
    }

    pub fn embed(mut self, parent: &str, child: &str) -> Self {
        if let Some(l) = self.layouts.iter_mut().find(|l| l.layout_id == parent) {
            l.embedded_layouts.push(child.into());
        }
        self
    }

    pub fn element(mut self, element: GuiElement) -> Self {
        for f in element.listeners.values() {
            self.ensure_function(f.as_str());
        }
        self.elements.push(element);
        self
    }

    pub fn widget(self, id: &str, kind: ElementKind, actions: &[ActionKind]) -> Self {
        self.element(GuiElement {
            element_id: id.into(),
            kind,
            supported_actions: actions.iter().copied().collect(),
            listeners: BTreeMap::new(),
            dynamic_target_of: None,
            persistent_fields: BTreeSet::new(),
        })
    }

    pub fn button(self, id: &str) -> Self {
        self.widget(id, ElementKind::Button, &[ActionKind::Click])
    }

    pub fn button_with_listener(self, id: &str, function: &str) -> Self {
        self.button(id).listener(id, ActionKind::Click, function)
    }

    /// Binds `function` as the listener for `(element, action)`, adding the
    /// action to the element's supported set if needed.
    pub fn listener(mut self, element: &str, action: ActionKind, function: &str) -> Self {
        self.ensure_function(function);
        if let Some(e) = self.elements.iter_mut().find(|e| e.element_id == element) {
            e.supported_actions.insert(action);
            e.listeners.insert(action, FunctionRef::from(function));
        }
        self
    }

    pub fn edit_field(mut self, id: &str, value_key: &str) -> Self {
        if !self.values.iter().any(|v| v == value_key) {
            self.values.push(value_key.into());
        }
        self.element(GuiElement {
            element_id: id.into(),
            kind: ElementKind::EditField,
            supported_actions: [ActionKind::Click, ActionKind::EditText]
                .into_iter()
                .collect(),
            listeners: BTreeMap::new(),
            dynamic_target_of: None,
            persistent_fields: [value_key.to_string()].into_iter().collect(),
        })
    }

    pub fn dynamic_item(self, id: &str, target_activity: &str) -> Self {
        self.element(GuiElement {
            element_id: id.into(),
            kind: ElementKind::ListItem,
            supported_actions: [ActionKind::Click].into_iter().collect(),
            listeners: BTreeMap::new(),
            dynamic_target_of: Some(target_activity.into()),
            persistent_fields: BTreeSet::new(),
        })
    }

    fn ensure_function(&mut self, sig: &str) {
        if !self.functions.iter().any(|f| f.as_str() == sig) {
            self.functions.push(FunctionRef::from(sig));
        }
    }

    pub fn function(mut self, sig: &str) -> Self {
        self.ensure_function(sig);
        self
    }

    pub fn call(mut self, caller: &str, callee: &str) -> Self {
        self.ensure_function(caller);
        self.ensure_function(callee);
        self.calls.push((caller.into(), callee.into()));
        self
    }

    pub fn flag(mut self, name: &str) -> Self {
        if !self.flags.iter().any(|f| f == name) {
            self.flags.push(name.into());
        }
        self
    }

    pub fn value(mut self, key: &str) -> Self {
        if !self.values.iter().any(|v| v == key) {
            self.values.push(key.into());
        }
        self
    }

    pub fn fault(mut self, id: &str, kind: FaultKind, once_only: bool, description: &str) -> Self {
        self.faults.push(FaultSpec {
            fault_id: id.into(),
            description: description.into(),
            kind,
            once_only,
        });
        self
    }

    pub fn rule(
        mut self,
        element: &str,
        action: ActionKind,
        guard: Option<Guard>,
        effects: Vec<Effect>,
    ) -> Self {
        let rule_id = format!("r{}_{element}_{action}", self.rules.len());
        self.rules.push(TransitionRule {
            rule_id,
            trigger: Trigger {
                element_id: element.into(),
                action,
            },
            guard,
            effects,
        });
        self
    }

    pub fn goto(self, element: &str, activity: &str) -> Self {
        self.rule(
            element,
            ActionKind::Click,
            None,
            vec![Effect::GotoActivity(activity.into())],
        )
    }

    pub fn build(self) -> AppModel {
        AppModel::new(
            self.name,
            self.activities,
            self.layouts,
            self.elements,
            CallGraph {
                nodes: self.functions,
                edges: self.calls,
            },
            self.rules,
            self.faults,
            self.flags,
            self.values,
        )
    }
}
