use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Kinds of input an element (or the system) can receive.
///
/// The variant order is the order in which enabled events are listed for an
/// element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Click,
    LongClick,
    EditText,
    Scroll,
    Back,
}

impl ActionKind {
    pub const ALL: [ActionKind; 5] = [
        ActionKind::Click,
        ActionKind::LongClick,
        ActionKind::EditText,
        ActionKind::Scroll,
        ActionKind::Back,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Click => "click",
            ActionKind::LongClick => "long_click",
            ActionKind::EditText => "edit_text",
            ActionKind::Scroll => "scroll",
            ActionKind::Back => "back",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ActionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown action `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Button,
    Text,
    EditField,
    ListItem,
    MenuItem,
    Container,
}

/// A qualified function signature, `package.Class.method(paramList)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionRef(pub String);

/// The pieces of a parsed [`FunctionRef`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureParts<'a> {
    pub package: Vec<&'a str>,
    pub class: &'a str,
    pub method: &'a str,
    pub params: Vec<&'a str>,
}

impl FunctionRef {
    pub fn new(signature: impl Into<String>) -> Self {
        FunctionRef(signature.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn parse(&self) -> Result<SignatureParts<'_>, String> {
        let sig = self.0.trim();
        if sig.is_empty() {
            return Err("empty signature".into());
        }
        let open = sig
            .find('(')
            .ok_or_else(|| format!("`{sig}` has no parameter list"))?;
        if !sig.ends_with(')') {
            return Err(format!("`{sig}` does not end with `)`"));
        }
        let path: Vec<&str> = sig[..open].split('.').collect();
        if path.len() < 2 || path.iter().any(|p| !is_identifier(p)) {
            return Err(format!("`{sig}` needs at least `Class.method` before `(`"));
        }
        let inner = sig[open + 1..sig.len() - 1].trim();
        let params = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(str::trim).collect()
        };
        if params.iter().any(|p| p.is_empty()) {
            return Err(format!("`{sig}` has an empty parameter"));
        }
        let method = path[path.len() - 1];
        let class = path[path.len() - 2];
        Ok(SignatureParts {
            package: path[..path.len() - 2].to_vec(),
            class,
            method,
            params,
        })
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

impl fmt::Display for FunctionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FunctionRef {
    fn from(s: &str) -> Self {
        FunctionRef(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuiElement {
    pub element_id: String,
    pub kind: ElementKind,
    pub supported_actions: BTreeSet<ActionKind>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub listeners: BTreeMap<ActionKind, FunctionRef>,
    /// Set for programmatically created elements whose navigation target is
    /// only known at runtime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_target_of: Option<String>,
    /// Value keys written by `edit_text` on this element.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub persistent_fields: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub layout_id: String,
    #[serde(default)]
    pub elements: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedded_layouts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activity {
    pub activity_id: String,
    /// The layout installed when the activity starts.
    pub initial_layout: String,
    /// Layouts the activity may inflate after it starts.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub inflatable_layouts: BTreeSet<String>,
    #[serde(default)]
    pub is_start: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallGraph {
    #[serde(default)]
    pub nodes: Vec<FunctionRef>,
    /// Directed `(caller, callee)` pairs.
    #[serde(default)]
    pub edges: Vec<(FunctionRef, FunctionRef)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trigger {
    pub element_id: String,
    pub action: ActionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn holds(self, lhs: u32, rhs: u32) -> bool {
        match self {
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    FlagIs {
        flag: String,
        value: bool,
    },
    ValueEquals {
        left: String,
        right: String,
    },
    ValueEmpty {
        key: String,
    },
    InteractionCount {
        element_id: String,
        cmp: Comparator,
        n: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    GotoActivity(String),
    Inflate(String),
    PopBack,
    SetFlag { flag: String, value: bool },
    SetValue { key: String, text: String },
    ClearValue(String),
    RevealFault(String),
    Crash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRule {
    pub rule_id: String,
    pub trigger: Trigger,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<Guard>,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    CrashFault,
    StateLossFault,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub fault_id: String,
    #[serde(default)]
    pub description: String,
    pub kind: FaultKind,
    /// A crash fault that only fires the first time it is triggered.
    #[serde(default)]
    pub once_only: bool,
}
