//! The dynamic level: events over regions, chronology execution, traces.

mod sim;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::ir::{ActionId, EventId, Model, ThimacId};
use crate::passes::ERSchema;
use crate::sets::{DisplayTuple, Scalar, Tuple, TupleStore};
use crate::validate::{Rule, ValidationReport, Violation};

pub use sim::{simulate, simulate_with, SimError, SimOptions};

/// A value travelling along flow arcs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Unit,
    Scalar(Scalar),
    Tuple(Tuple),
    /// A whole store extension (bulk value).
    Set(Vec<Tuple>),
}

impl Value {
    /// Scalars and tuples as tuple components; `None` for units and sets.
    pub fn components(&self) -> Option<Tuple> {
        match self {
            Value::Scalar(s) => Some(vec![s.clone()]),
            Value::Tuple(t) => Some(t.clone()),
            Value::Unit | Value::Set(_) => None,
        }
    }

    /// Equality that identifies a scalar with its one-tuple.
    pub fn same_as(&self, other: &Value) -> bool {
        match (self.components(), other.components()) {
            (Some(a), Some(b)) => a == b,
            _ => self == other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Scalar(s) => write!(f, "{s}"),
            Value::Tuple(t) => write!(f, "{}", DisplayTuple(t.clone())),
            Value::Set(ts) => {
                f.write_str("{")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", DisplayTuple(t.clone()))?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub target: ActionId,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Fired(Vec<EventId>),
    NotFired(Vec<EventId>),
    /// The exact fired sequence.
    Sequence(Vec<EventId>),
    Emitted(String),
    NotEmitted(String),
    StoreEquals {
        store: ThimacId,
        tuples: Vec<Tuple>,
    },
    StoreContains {
        store: ThimacId,
        tuple: Tuple,
    },
    Created {
        node: ActionId,
        value: Value,
    },
}

/// External inputs for one simulation. Injections are consumed first in,
/// first out per target across all rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    /// How many times the chronology runs. Stores persist between rounds.
    pub rounds: u32,
    pub seeds: Vec<(ThimacId, Vec<Tuple>)>,
    pub injections: Vec<Injection>,
    pub expectations: Vec<Expectation>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario { name: String::new(), rounds: 1, seeds: Vec::new(), injections: Vec::new(), expectations: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fired {
    pub event: EventId,
    pub time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Created {
    pub time: u64,
    pub node: ActionId,
    pub value: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub fired: Vec<Fired>,
    /// Store snapshots keyed by thimac id.
    pub final_state: BTreeMap<String, TupleStore>,
    pub emitted: Vec<String>,
    pub created: Vec<Created>,
}

impl Trace {
    pub fn fired_ids(&self) -> Vec<&str> {
        self.fired.iter().map(|f| f.event.as_str()).collect()
    }

    pub fn has_fired(&self, event: &str) -> bool {
        self.fired.iter().any(|f| f.event.as_str() == event)
    }

    pub fn store(&self, id: &str) -> Option<&TupleStore> {
        self.final_state.get(id)
    }

    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Every region must be nonempty and made of existing action nodes.
pub fn check_regions(model: &Model) -> ValidationReport {
    let idx = model.index();
    let mut out = Vec::new();
    for ev in &model.events {
        if ev.region.is_empty() {
            out.push(Violation::error(Rule::EmptyRegion, ev.id.as_str(), "event region is empty"));
        }
        for node in &ev.region {
            if idx.action(node.as_str()).is_none() {
                out.push(Violation::error(
                    Rule::RegionNotInterior,
                    ev.id.as_str(),
                    format!("region member `{node}` is not an action of the static model"),
                ));
            }
        }
    }
    ValidationReport::from_violations(out)
}

/// Column of `store` holding participant `i`'s key, by key attribute name,
/// falling back to position.
fn participant_column(schema: &ERSchema, participant: &str, i: usize, store: &TupleStore) -> Option<usize> {
    let by_name = schema.entity(participant).and_then(|e| e.keys().find_map(|k| store.column_index(&k.name)));
    by_name.or((i < store.arity()).then_some(i))
}

/// Check declared binary cardinalities against final relationship stores.
///
/// Over participants `[A, B]`: `1-n` allows each B value one A partner,
/// `n-1` allows each A value one B partner, `1-1` both; `m-n` is
/// unconstrained.
pub fn cardinality_check(trace: &Trace, schema: &ERSchema) -> ValidationReport {
    let mut out = Vec::new();
    for rel in &schema.relationships {
        let (Some(card), [a, b, ..]) = (rel.cardinality, rel.participants.as_slice()) else {
            continue;
        };
        let Some(store) = trace.final_state.get(rel.id.as_str()) else {
            continue;
        };
        let (Some(mut ca), Some(mut cb)) =
            (participant_column(schema, a, 0, store), participant_column(schema, b, 1, store))
        else {
            continue;
        };
        if ca == cb {
            // Both keys share a name; fall back to position.
            (ca, cb) = (0, 1);
        }
        if store.arity() < 2 {
            continue;
        }
        use crate::ir::Cardinality::*;
        let (check_a, check_b) = match card {
            OneToOne => (true, true),
            OneToMany => (false, true),
            ManyToOne => (true, false),
            ManyToMany => (false, false),
        };
        let mut sides = Vec::new();
        if check_a {
            sides.push((ca, cb, a.as_str(), b.as_str()));
        }
        if check_b {
            sides.push((cb, ca, b.as_str(), a.as_str()));
        }
        for (key, partner, key_name, partner_name) in sides {
            let mut partners: BTreeMap<&Scalar, Vec<&Scalar>> = BTreeMap::new();
            for t in store.tuples() {
                let list = partners.entry(&t[key]).or_default();
                if !list.contains(&&t[partner]) {
                    list.push(&t[partner]);
                }
            }
            for (value, list) in partners.iter().filter(|(_, l)| l.len() > 1) {
                let names: Vec<String> = list.iter().map(|s| s.to_string()).collect();
                out.push(Violation::error(
                    Rule::CardinalityViolation,
                    rel.name.as_str(),
                    format!(
                        "{card} allows one {partner_name} per {key_name}, but {key_name} {value} has {}: {}",
                        list.len(),
                        names.join(", ")
                    ),
                ));
            }
        }
    }
    ValidationReport::from_violations(out)
}

/// Failed expectations, one message each. Empty means the scenario passed.
pub fn check_expectations(trace: &Trace, scenario: &Scenario) -> Vec<String> {
    let mut failures = Vec::new();
    let fired: Vec<&str> = trace.fired_ids();
    for ex in &scenario.expectations {
        match ex {
            Expectation::Fired(evs) => {
                for e in evs.iter().filter(|e| !trace.has_fired(e.as_str())) {
                    failures.push(format!("expected {e} to fire"));
                }
            }
            Expectation::NotFired(evs) => {
                for e in evs.iter().filter(|e| trace.has_fired(e.as_str())) {
                    failures.push(format!("expected {e} not to fire"));
                }
            }
            Expectation::Sequence(evs) => {
                let want: Vec<&str> = evs.iter().map(|e| e.as_str()).collect();
                if want != fired {
                    failures.push(format!("expected sequence [{}], got [{}]", want.join(", "), fired.join(", ")));
                }
            }
            Expectation::Emitted(s) => {
                if !trace.emitted.contains(s) {
                    failures.push(format!("expected {s:?} to be emitted"));
                }
            }
            Expectation::NotEmitted(s) => {
                if trace.emitted.contains(s) {
                    failures.push(format!("expected {s:?} not to be emitted"));
                }
            }
            Expectation::StoreEquals { store, tuples } => match trace.store(store.as_str()) {
                None => failures.push(format!("no store `{store}` in the final state")),
                Some(st) => {
                    let want: std::collections::BTreeSet<&Tuple> = tuples.iter().collect();
                    if st.as_set() != want || st.len() != tuples.len() {
                        let got: Vec<String> =
                            st.tuples().iter().map(|t| DisplayTuple(t.clone()).to_string()).collect();
                        failures.push(format!("store `{store}` holds {{{}}}", got.join(", ")));
                    }
                }
            },
            Expectation::StoreContains { store, tuple } => match trace.store(store.as_str()) {
                None => failures.push(format!("no store `{store}` in the final state")),
                Some(st) => {
                    if !st.contains(tuple) {
                        failures.push(format!("store `{store}` lacks {}", DisplayTuple(tuple.clone())));
                    }
                }
            },
            Expectation::Created { node, value } => {
                if !trace.created.iter().any(|c| &c.node == node && c.value.same_as(value)) {
                    failures.push(format!("expected `{node}` to be created with {value}"));
                }
            }
        }
    }
    failures
}
