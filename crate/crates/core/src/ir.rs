//! The thinging-machine intermediate representation.
//!
//! A [`Model`] is a static region: a forest of thimacs, the action nodes each
//! thimac owns, and the flow/trigger arcs between actions. Events and the
//! chronology describe the dynamic level on top of the same nodes.
//!
//! Ids are dotted paths. A top-level thimac `Users` has id `Users`, its child
//! `ID` has id `Users.ID`, and an action `scan` owned by `Users` has id
//! `Users.scan`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! string_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            /// Last dotted segment of the id.
            pub fn local(&self) -> &str {
                self.0.rsplit('.').next().unwrap_or(&self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Model-wide unique id of a thimac.
    ThimacId
);
string_id!(
    /// Model-wide unique id of an action node.
    ActionId
);
string_id!(ArcId);
string_id!(EventId);

/// Error returned when a keyword does not name a known variant.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {what} `{found}`")]
pub struct UnknownKeyword {
    pub what: &'static str,
    pub found: String,
}

macro_rules! keyword_enum {
    ($(#[$doc:meta])* $name:ident, $what:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownKeyword;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(UnknownKeyword { what: $what, found: s.to_owned() }),
                }
            }
        }
    };
}

keyword_enum!(
    /// Declared role of a thimac. Roles are never inferred.
    Role, "role", {
        Entity => "entity",
        Attribute => "attribute",
        Relationship => "relationship",
        Actor => "actor",
        Message => "message",
        Set => "set",
        Generic => "generic",
    }
);

keyword_enum!(
    /// The five generic actions. Arrive and accept are folded into receive.
    ActionKind, "action kind", {
        Create => "create",
        Process => "process",
        Release => "release",
        Transfer => "transfer",
        Receive => "receive",
    }
);

keyword_enum!(
    /// Column type used by the relational exporter.
    ValueType, "type", {
        Text => "text",
        Int => "int",
    }
);

keyword_enum!(
    /// Relationship cardinality over `[first, second]` participants.
    ///
    /// `1-n` reads "one first relates to many second": every second-side
    /// value has at most one first-side partner.
    Cardinality, "cardinality", {
        OneToOne => "1-1",
        OneToMany => "1-n",
        ManyToOne => "n-1",
        ManyToMany => "m-n",
    }
);

keyword_enum!(
    /// Executable behaviour attached to an action by an `op=` annotation.
    Op, "op", {
        Add => "add",
        Compare => "compare",
        Retrieve => "retrieve",
        Lookup => "lookup",
        Contains => "contains",
        Insert => "insert",
        Field => "field",
        NewVersion => "newversion",
        CopyOld => "copyold",
        Export => "export",
    }
);

keyword_enum!(
    /// Simplification level. Levels are cumulative.
    Level, "level", {
        S1 => "S1",
        S2 => "S2",
        S3 => "S3",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variety {
    Flow,
    Trigger,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thimac {
    pub id: ThimacId,
    /// Display string; defaults to the local id segment.
    pub name: String,
    pub role: Role,
    pub parent: Option<ThimacId>,
    pub storage: bool,
    pub children: Vec<ThimacId>,
    pub actions: Vec<ActionId>,
    /// Key attribute marker (meaningful on `role=attribute`).
    pub key: bool,
    pub value_type: Option<ValueType>,
    pub cardinality: Option<Cardinality>,
    /// Explicit store column names; otherwise derived from attribute children.
    pub columns: Option<Vec<String>>,
}

impl Thimac {
    pub fn new(id: impl Into<String>, role: Role) -> Self {
        let id = ThimacId::new(id);
        Thimac {
            name: id.local().to_owned(),
            id,
            role,
            parent: None,
            storage: false,
            children: Vec::new(),
            actions: Vec::new(),
            key: false,
            value_type: None,
            cardinality: None,
            columns: None,
        }
    }

    /// Whether the thimac holds a tuple store at run time.
    pub fn holds_store(&self) -> bool {
        self.storage || self.role == Role::Set
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionNode {
    pub id: ActionId,
    pub kind: ActionKind,
    pub owner: ThimacId,
    pub storage: bool,
    pub label: Option<String>,
    pub op: Option<Op>,
    /// Column selector for `field`/`lookup`.
    pub column: Option<String>,
}

impl ActionNode {
    pub fn new(id: impl Into<String>, kind: ActionKind, owner: &ThimacId) -> Self {
        ActionNode {
            id: ActionId::new(id),
            kind,
            owner: owner.clone(),
            storage: false,
            label: None,
            op: None,
            column: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub id: ArcId,
    pub from: ActionId,
    pub to: ActionId,
    pub variety: Variety,
    /// Heterogeneous flow (thick arrow).
    pub bulk: bool,
    /// Outcome label (`eq`, `neq`, `found`, ...) the source must produce for
    /// this arc to carry activation.
    pub guard: Option<String>,
}

impl Arc {
    pub fn flow(id: impl Into<String>, from: &ActionId, to: &ActionId) -> Self {
        Arc { id: ArcId::new(id), from: from.clone(), to: to.clone(), variety: Variety::Flow, bulk: false, guard: None }
    }

    pub fn trigger(id: impl Into<String>, from: &ActionId, to: &ActionId) -> Self {
        Arc { variety: Variety::Trigger, ..Arc::flow(id, from, to) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub description: String,
    pub region: BTreeSet<ActionId>,
    /// Firing this event ends the current round.
    pub halt: bool,
}

pub const DEFAULT_MAX_ITERATIONS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum Step {
    Event { event: EventId },
    Repeat { body: Vec<Step>, until: EventId, max_iterations: u32 },
}

impl Step {
    pub fn event(id: impl Into<String>) -> Self {
        Step::Event { event: EventId::new(id) }
    }

    /// Every event id referenced by this step, in order.
    pub fn event_refs(&self) -> Vec<&EventId> {
        match self {
            Step::Event { event } => vec![event],
            Step::Repeat { body, until, .. } => {
                let mut refs: Vec<&EventId> = body.iter().flat_map(Step::event_refs).collect();
                refs.push(until);
                refs
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chronology {
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub name: String,
    /// Set when the model is the output of a simplification pass.
    pub level: Option<Level>,
    pub thimacs: Vec<Thimac>,
    pub actions: Vec<ActionNode>,
    pub arcs: Vec<Arc>,
    pub events: Vec<Event>,
    pub chronology: Option<Chronology>,
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Model { name: name.into(), ..Model::default() }
    }

    pub fn thimac(&self, id: &str) -> Option<&Thimac> {
        self.thimacs.iter().find(|t| t.id.as_str() == id)
    }

    pub fn action(&self, id: &str) -> Option<&ActionNode> {
        self.actions.iter().find(|a| a.id.as_str() == id)
    }

    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id.as_str() == id)
    }

    /// Top-level thimacs in declaration order.
    pub fn roots(&self) -> impl Iterator<Item = &Thimac> {
        self.thimacs.iter().filter(|t| t.parent.is_none())
    }

    /// Canonical JSON dump: struct fields in declaration order, ids as strings.
    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn index(&self) -> ModelIndex<'_> {
        ModelIndex::new(self)
    }
}

/// Lookup tables over a borrowed model.
pub struct ModelIndex<'m> {
    pub model: &'m Model,
    thimacs: HashMap<&'m str, usize>,
    actions: HashMap<&'m str, usize>,
    events: HashMap<&'m str, usize>,
    outgoing: HashMap<&'m str, Vec<usize>>,
    incoming: HashMap<&'m str, Vec<usize>>,
}

impl<'m> ModelIndex<'m> {
    pub fn new(model: &'m Model) -> Self {
        let thimacs = model.thimacs.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
        let actions = model.actions.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
        let events = model.events.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
        let mut outgoing: HashMap<&str, Vec<usize>> = HashMap::new();
        let mut incoming: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, arc) in model.arcs.iter().enumerate() {
            outgoing.entry(arc.from.as_str()).or_default().push(i);
            incoming.entry(arc.to.as_str()).or_default().push(i);
        }
        ModelIndex { model, thimacs, actions, events, outgoing, incoming }
    }

    pub fn thimac(&self, id: &str) -> Option<&'m Thimac> {
        self.thimacs.get(id).map(|&i| &self.model.thimacs[i])
    }

    pub fn action(&self, id: &str) -> Option<&'m ActionNode> {
        self.actions.get(id).map(|&i| &self.model.actions[i])
    }

    pub fn action_position(&self, id: &str) -> Option<usize> {
        self.actions.get(id).copied()
    }

    pub fn event(&self, id: &str) -> Option<&'m Event> {
        self.events.get(id).map(|&i| &self.model.events[i])
    }

    pub fn outgoing(&self, id: &str) -> impl Iterator<Item = &'m Arc> + '_ {
        self.outgoing.get(id).into_iter().flatten().map(|&i| &self.model.arcs[i])
    }

    pub fn incoming(&self, id: &str) -> impl Iterator<Item = &'m Arc> + '_ {
        self.incoming.get(id).into_iter().flatten().map(|&i| &self.model.arcs[i])
    }

    /// The owner thimac of an action.
    pub fn owner(&self, action: &str) -> Option<&'m Thimac> {
        self.action(action).and_then(|a| self.thimac(a.owner.as_str()))
    }

    /// `id` itself followed by its ancestors, innermost first. Stops on a
    /// revisited id so malformed parent links cannot loop.
    pub fn ancestors_or_self(&self, id: &str) -> Vec<&'m Thimac> {
        let mut chain: Vec<&'m Thimac> = Vec::new();
        let mut cursor = self.thimac(id);
        while let Some(t) = cursor {
            if chain.iter().any(|seen| seen.id == t.id) {
                break;
            }
            chain.push(t);
            cursor = t.parent.as_ref().and_then(|p| self.thimac(p.as_str()));
        }
        chain
    }

    /// Whether `thimac` is `ancestor` or nested inside it.
    pub fn is_within(&self, thimac: &str, ancestor: &str) -> bool {
        self.ancestors_or_self(thimac).iter().any(|t| t.id.as_str() == ancestor)
    }

    /// Nearest enclosing thimac (owner included) that holds a tuple store.
    pub fn store_of(&self, action: &str) -> Option<&'m Thimac> {
        let owner = self.action(action)?;
        self.ancestors_or_self(owner.owner.as_str()).into_iter().find(|t| t.holds_store())
    }

    /// Store columns: explicit `cols`, else attribute children names, else `value`.
    pub fn store_columns(&self, thimac: &Thimac) -> Vec<String> {
        if let Some(cols) = &thimac.columns {
            return cols.clone();
        }
        let attrs: Vec<String> = thimac
            .children
            .iter()
            .filter_map(|c| self.thimac(c.as_str()))
            .filter(|c| c.role == Role::Attribute)
            .map(|c| c.name.clone())
            .collect();
        if attrs.is_empty() {
            vec!["value".to_owned()]
        } else {
            attrs
        }
    }
}
