//! Deterministic chronology executor.
//!
//! Each action node carries a per-round status: never run, live with a value
//! and an optional outcome label (`eq`, `found`, `ok`, ...), or dead (its
//! event was skipped). Firing an event runs its region in dependency order.
//! An event is skipped when a guard arc entering its region carries a label
//! the source did not produce, or when a flow feeding the region comes from
//! a dead node. A feeding node that never ran is a deadlock.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::ir::{ActionId, ActionKind, ActionNode, EventId, Model, ModelIndex, Op, Role, Step, ThimacId, Variety};
use crate::sets::{Scalar, SetError, Tuple, TupleStore, VersionBuilder};

use super::{check_regions, Created, Fired, Scenario, Trace, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Replaces every repeat block's own bound.
    pub max_iter_override: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("model has no chronology")]
    NoChronology,
    #[error("event regions are invalid:\n{0}")]
    Regions(crate::validate::ValidationReport),
    #[error("unknown event `{0}` in chronology")]
    UnknownEvent(EventId),
    #[error("deadlock at {event}: `{node}` waits on `{waiting_on}`, which has not run")]
    Deadlock { event: EventId, node: ActionId, waiting_on: ActionId },
    #[error("repeat until {until} did not terminate within {max} iterations")]
    LoopBound { until: EventId, max: u32 },
    #[error("injection target `{target}` {reason}")]
    InjectionTarget { target: ActionId, reason: &'static str },
    #[error("`{0}` does not hold a store")]
    UnknownStore(ThimacId),
    #[error("at `{node}`: {source}")]
    Store { node: ActionId, source: SetError },
    #[error("seeding: {0}")]
    Seed(SetError),
    #[error("at `{node}`: {message}")]
    Type { node: ActionId, message: String },
}

const FOUND: &str = "found";
const NOT_FOUND: &str = "notfound";
const EQ: &str = "eq";
const NEQ: &str = "neq";
const OK: &str = "ok";
const DUPLICATE: &str = "duplicate";

#[derive(Debug, Clone)]
enum Status {
    Live { value: Value, outcome: Option<&'static str>, epoch: u64 },
    Dead,
}

enum Gate {
    Open,
    Skip,
}

enum Flow {
    Continue,
    Halt,
}

pub fn simulate(model: &Model, scenario: &Scenario) -> Result<Trace, SimError> {
    simulate_with(model, scenario, SimOptions::default())
}

pub fn simulate_with(model: &Model, scenario: &Scenario, opts: SimOptions) -> Result<Trace, SimError> {
    let chronology = model.chronology.as_ref().ok_or(SimError::NoChronology)?;
    let report = check_regions(model);
    if !report.is_clean() {
        return Err(SimError::Regions(report));
    }
    let idx = model.index();
    let mut sim = Sim::new(model, &idx, scenario, opts)?;
    for _ in 0..scenario.rounds.max(1) {
        sim.start_round();
        sim.run(&chronology.steps)?;
    }
    Ok(sim.finish())
}

struct Sim<'m, 'i> {
    model: &'m Model,
    idx: &'i ModelIndex<'m>,
    opts: SimOptions,
    stores: BTreeMap<ThimacId, TupleStore>,
    pending: HashMap<ThimacId, VersionBuilder>,
    queues: HashMap<ActionId, VecDeque<Value>>,
    status: HashMap<ActionId, Status>,
    cursors: HashMap<ActionId, usize>,
    epoch: u64,
    time: u64,
    trace: Trace,
}

impl<'m, 'i> Sim<'m, 'i> {
    fn new(model: &'m Model, idx: &'i ModelIndex<'m>, scenario: &Scenario, opts: SimOptions) -> Result<Self, SimError> {
        let mut stores = BTreeMap::new();
        for t in model.thimacs.iter().filter(|t| t.holds_store()) {
            stores.insert(t.id.clone(), TupleStore::new(t.id.clone(), idx.store_columns(t)));
        }
        for (id, tuples) in &scenario.seeds {
            let Some(st) = stores.get(id) else {
                return Err(SimError::UnknownStore(id.clone()));
            };
            let seeded =
                TupleStore::with_tuples(id.clone(), st.columns.clone(), tuples.clone()).map_err(SimError::Seed)?;
            stores.insert(id.clone(), seeded);
        }
        let in_region: BTreeSet<&ActionId> = model.events.iter().flat_map(|e| e.region.iter()).collect();
        let mut queues: HashMap<ActionId, VecDeque<Value>> = HashMap::new();
        for inj in &scenario.injections {
            let Some(node) = idx.action(inj.target.as_str()) else {
                return Err(SimError::InjectionTarget { target: inj.target.clone(), reason: "is not an action" });
            };
            if !matches!(node.kind, ActionKind::Transfer | ActionKind::Create) {
                return Err(SimError::InjectionTarget {
                    target: inj.target.clone(),
                    reason: "must be a transfer or create node",
                });
            }
            if !in_region.contains(&node.id) {
                return Err(SimError::InjectionTarget {
                    target: inj.target.clone(),
                    reason: "is not in any event region",
                });
            }
            queues.entry(node.id.clone()).or_default().push_back(inj.value.clone());
        }
        Ok(Sim {
            model,
            idx,
            opts,
            stores,
            pending: HashMap::new(),
            queues,
            status: HashMap::new(),
            cursors: HashMap::new(),
            epoch: 0,
            time: 0,
            trace: Trace::default(),
        })
    }

    fn start_round(&mut self) {
        self.status.clear();
        self.cursors.clear();
        self.pending.clear();
        self.epoch += 1;
    }

    fn finish(mut self) -> Trace {
        self.trace.final_state = self.stores.into_iter().map(|(k, v)| (k.0, v)).collect();
        self.trace
    }

    fn run(&mut self, steps: &[Step]) -> Result<Flow, SimError> {
        for step in steps {
            match step {
                Step::Event { event } => {
                    if let Some(true) = self.fire(event)? {
                        return Ok(Flow::Halt);
                    }
                }
                Step::Repeat { body, until, max_iterations } => {
                    let max = self.opts.max_iter_override.unwrap_or(*max_iterations);
                    let mut iterations = 0u32;
                    loop {
                        if iterations >= max {
                            return Err(SimError::LoopBound { until: until.clone(), max });
                        }
                        iterations += 1;
                        self.epoch += 1;
                        if let Flow::Halt = self.run(body)? {
                            return Ok(Flow::Halt);
                        }
                        match self.fire(until)? {
                            Some(true) => return Ok(Flow::Halt),
                            Some(false) => break,
                            None => {}
                        }
                    }
                }
            }
        }
        Ok(Flow::Continue)
    }

    fn is_active(&self, from: &ActionId, guard: &Option<String>) -> bool {
        match self.status.get(from) {
            Some(Status::Live { outcome, .. }) => match guard {
                None => true,
                Some(g) => outcome.is_some_and(|o| o == g),
            },
            _ => false,
        }
    }

    fn has_injection(&self, node: &ActionId) -> bool {
        self.queues.get(node).is_some_and(|q| !q.is_empty())
    }

    /// `Some(halt)` if the event fired, `None` if it was skipped.
    fn fire(&mut self, event: &EventId) -> Result<Option<bool>, SimError> {
        let ev = self.idx.event(event.as_str()).ok_or_else(|| SimError::UnknownEvent(event.clone()))?;
        // Two-level coherence: the region must still sit inside the static model.
        let mut region: Vec<(usize, &'m ActionNode)> = Vec::new();
        for id in &ev.region {
            let pos =
                self.idx.action_position(id.as_str()).ok_or_else(|| SimError::Regions(check_regions(self.model)))?;
            region.push((pos, &self.model.actions[pos]));
        }
        region.sort_by_key(|(p, _)| *p);
        let inside = |id: &ActionId| ev.region.contains(id);

        if let Gate::Skip = self.gate(event, &region, &inside)? {
            for (_, node) in &region {
                let fresh =
                    matches!(self.status.get(&node.id), Some(Status::Live { epoch, .. }) if *epoch == self.epoch);
                if !fresh {
                    self.status.insert(node.id.clone(), Status::Dead);
                }
            }
            return Ok(None);
        }

        let time = self.time + 1;
        for node in self.order(&region, &inside) {
            self.execute(node, time)?;
        }
        self.time = time;
        self.trace.fired.push(Fired { event: event.clone(), time });
        Ok(Some(ev.halt))
    }

    fn gate(
        &self,
        event: &EventId,
        region: &[(usize, &'m ActionNode)],
        inside: &dyn Fn(&ActionId) -> bool,
    ) -> Result<Gate, SimError> {
        for (_, node) in region {
            for arc in self.idx.incoming(node.id.as_str()) {
                if inside(&arc.from) {
                    continue;
                }
                let guarded = arc.guard.is_some();
                if !guarded && (arc.variety == Variety::Trigger || self.has_injection(&node.id)) {
                    continue;
                }
                match self.status.get(&arc.from) {
                    None => {
                        return Err(SimError::Deadlock {
                            event: event.clone(),
                            node: node.id.clone(),
                            waiting_on: arc.from.clone(),
                        })
                    }
                    Some(Status::Dead) => return Ok(Gate::Skip),
                    Some(Status::Live { .. }) => {
                        if guarded && !self.is_active(&arc.from, &arc.guard) {
                            return Ok(Gate::Skip);
                        }
                    }
                }
            }
        }
        Ok(Gate::Open)
    }

    /// Topological order over arcs inside the region; model order breaks ties.
    fn order(&self, region: &[(usize, &'m ActionNode)], inside: &dyn Fn(&ActionId) -> bool) -> Vec<&'m ActionNode> {
        let mut indegree: HashMap<&str, usize> = region.iter().map(|(_, n)| (n.id.as_str(), 0)).collect();
        for (_, n) in region {
            for arc in self.idx.outgoing(n.id.as_str()) {
                if inside(&arc.to) && arc.to != n.id {
                    *indegree.get_mut(arc.to.as_str()).unwrap() += 1;
                }
            }
        }
        let by_id: HashMap<&str, (usize, &'m ActionNode)> =
            region.iter().map(|(p, n)| (n.id.as_str(), (*p, *n))).collect();
        let mut ready: BTreeSet<usize> =
            region.iter().filter(|(_, n)| indegree[n.id.as_str()] == 0).map(|(p, _)| *p).collect();
        let mut out = Vec::with_capacity(region.len());
        let mut done: BTreeSet<usize> = BTreeSet::new();
        while out.len() < region.len() {
            let next = match ready.pop_first() {
                Some(p) => p,
                // Cycle inside the region: take the earliest remaining node.
                None => region.iter().map(|(p, _)| *p).find(|p| !done.contains(p)).unwrap(),
            };
            if !done.insert(next) {
                continue;
            }
            let node = &self.model.actions[next];
            out.push(node);
            for arc in self.idx.outgoing(node.id.as_str()) {
                if let Some(d) = indegree.get_mut(arc.to.as_str()) {
                    if arc.to != node.id && inside(&arc.to) {
                        *d = d.saturating_sub(1);
                        if *d == 0 {
                            let (p, _) = by_id[arc.to.as_str()];
                            if !done.contains(&p) {
                                ready.insert(p);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn store_of(&self, node: &ActionNode) -> Result<ThimacId, SimError> {
        self.idx.store_of(node.id.as_str()).map(|t| t.id.clone()).ok_or_else(|| SimError::Type {
            node: node.id.clone(),
            message: format!("`{}` needs an enclosing store", node.op.map_or("op", |o| o.as_str())),
        })
    }

    fn execute(&mut self, node: &'m ActionNode, time: u64) -> Result<(), SimError> {
        let flows: Vec<_> = self.idx.incoming(node.id.as_str()).filter(|a| a.variety == Variety::Flow).collect();
        let triggers: Vec<_> = self.idx.incoming(node.id.as_str()).filter(|a| a.variety == Variety::Trigger).collect();
        let injected = self.queues.get_mut(&node.id).and_then(VecDeque::pop_front);

        let (value, outcome) = if let Some(v) = injected {
            (v, None)
        } else {
            let active_flows: Vec<Value> =
                flows.iter().filter(|a| self.is_active(&a.from, &a.guard)).map(|a| self.value_of(&a.from)).collect();
            let labeled: Vec<_> = triggers.iter().filter(|a| a.guard.is_some()).collect();
            let skip = (!flows.is_empty() && active_flows.is_empty())
                || (flows.is_empty()
                    && !labeled.is_empty()
                    && !labeled.iter().any(|a| self.is_active(&a.from, &a.guard)));
            if skip {
                self.status.insert(node.id.clone(), Status::Dead);
                return Ok(());
            }
            let inputs = if flows.is_empty() {
                triggers.iter().filter(|a| self.is_active(&a.from, &a.guard)).map(|a| self.value_of(&a.from)).collect()
            } else {
                active_flows
            };
            self.apply(node, inputs)?
        };

        if node.kind == ActionKind::Create {
            self.trace.created.push(Created { time, node: node.id.clone(), value: value.clone() });
            if self.idx.owner(node.id.as_str()).is_some_and(|t| t.role == Role::Message) {
                let text = node.label.clone().unwrap_or_else(|| self.idx.owner(node.id.as_str()).unwrap().name.clone());
                self.trace.emitted.push(text);
            }
        }
        self.status.insert(node.id.clone(), Status::Live { value, outcome, epoch: self.epoch });
        Ok(())
    }

    fn value_of(&self, id: &ActionId) -> Value {
        match self.status.get(id) {
            Some(Status::Live { value, .. }) => value.clone(),
            _ => Value::Unit,
        }
    }

    fn type_error(node: &ActionNode, message: impl Into<String>) -> SimError {
        SimError::Type { node: node.id.clone(), message: message.into() }
    }

    fn apply(&mut self, node: &ActionNode, inputs: Vec<Value>) -> Result<(Value, Option<&'static str>), SimError> {
        let Some(op) = node.op else {
            let value = match inputs.len() {
                0 => Value::Unit,
                1 => inputs.into_iter().next().unwrap(),
                _ => Value::Tuple(record(&inputs)),
            };
            return Ok((value, None));
        };
        match op {
            Op::Add => {
                let mut sum: i64 = 0;
                for s in record(&inputs) {
                    match s {
                        Scalar::Int(i) => {
                            sum = sum.checked_add(i).ok_or_else(|| Self::type_error(node, "integer overflow"))?
                        }
                        Scalar::Str(s) => return Err(Self::type_error(node, format!("cannot add string {s:?}"))),
                    }
                }
                Ok((Value::Scalar(Scalar::Int(sum)), None))
            }
            Op::Compare => {
                let operands: Vec<&Value> = inputs.iter().filter(|v| !matches!(v, Value::Unit)).collect();
                if operands.len() != 2 {
                    return Err(Self::type_error(node, format!("compare needs 2 inputs, got {}", operands.len())));
                }
                let outcome = if operands[0].same_as(operands[1]) { EQ } else { NEQ };
                Ok((operands[0].clone(), Some(outcome)))
            }
            Op::Retrieve => {
                let sid = self.store_of(node)?;
                let cursor = self.cursors.entry(node.id.clone()).or_insert(0);
                let store = &self.stores[&sid];
                match store.tuples().get(*cursor) {
                    Some(t) => {
                        *cursor += 1;
                        let value = match &node.column {
                            Some(c) => Value::Scalar(column(node, store, t, c)?),
                            None => Value::Tuple(t.clone()),
                        };
                        Ok((value, Some(FOUND)))
                    }
                    None => Ok((Value::Unit, Some(NOT_FOUND))),
                }
            }
            Op::Lookup => {
                let sid = self.store_of(node)?;
                let key = record(&inputs);
                let [key] = key.as_slice() else {
                    return Err(Self::type_error(node, "lookup needs one scalar input"));
                };
                let store = &self.stores[&sid];
                let col = node.column.as_deref().ok_or_else(|| Self::type_error(node, "lookup needs `col=`"))?;
                let ci = column_index(node, store, col)?;
                let found = store.tuples().iter().any(|t| &t[ci] == key);
                Ok((Value::Scalar(key.clone()), Some(if found { FOUND } else { NOT_FOUND })))
            }
            Op::Contains => {
                let sid = self.store_of(node)?;
                let t = record(&inputs);
                let found = self.stores[&sid].contains(&t);
                Ok((Value::Tuple(t), Some(if found { FOUND } else { NOT_FOUND })))
            }
            Op::Insert => {
                let sid = self.store_of(node)?;
                let t = record(&inputs);
                match self.stores[&sid].add_member(t.clone()) {
                    Ok(next) => {
                        let ext = next.export_extension();
                        self.stores.insert(sid, next);
                        Ok((Value::Set(ext), Some(OK)))
                    }
                    Err(SetError::Duplicate { .. }) => Ok((Value::Tuple(t), Some(DUPLICATE))),
                    Err(e) => Err(SimError::Store { node: node.id.clone(), source: e }),
                }
            }
            Op::Field => {
                let t = record(&inputs);
                let col = node.column.as_deref().ok_or_else(|| Self::type_error(node, "field needs `col=`"))?;
                let value = match col.parse::<usize>() {
                    Ok(i) => t.get(i).cloned().ok_or_else(|| Self::type_error(node, format!("no component {i}")))?,
                    Err(_) => {
                        let sid = self.store_of(node)?;
                        column(node, &self.stores[&sid], &t, col)?
                    }
                };
                Ok((Value::Scalar(value), None))
            }
            Op::NewVersion => {
                let sid = self.store_of(node)?;
                let t = record(&inputs);
                let mut builder = VersionBuilder::open(&self.stores[&sid]);
                match builder.insert(t.clone()) {
                    Ok(()) => {
                        self.pending.insert(sid, builder);
                        Ok((Value::Tuple(t), Some(OK)))
                    }
                    Err(SetError::Duplicate { .. }) => Ok((Value::Tuple(t), Some(DUPLICATE))),
                    Err(e) => Err(SimError::Store { node: node.id.clone(), source: e }),
                }
            }
            Op::CopyOld => {
                let sid = self.store_of(node)?;
                let builder = self
                    .pending
                    .remove(&sid)
                    .ok_or_else(|| Self::type_error(node, format!("no open new version of `{sid}`")))?;
                let next = builder.copy_old();
                let ext = next.export_extension();
                self.stores.insert(sid, next);
                Ok((Value::Set(ext), Some(OK)))
            }
            Op::Export => {
                let sid = self.store_of(node)?;
                Ok((Value::Set(self.stores[&sid].export_extension()), None))
            }
        }
    }
}

/// Concatenate scalar and tuple inputs into one record; units and whole
/// extensions do not contribute.
fn record(inputs: &[Value]) -> Tuple {
    inputs.iter().filter_map(Value::components).flatten().collect()
}

fn column_index(node: &ActionNode, store: &TupleStore, col: &str) -> Result<usize, SimError> {
    store.column_index(col).ok_or_else(|| SimError::Type {
        node: node.id.clone(),
        message: format!("store `{}` has no column `{col}`", store.owner),
    })
}

fn column(node: &ActionNode, store: &TupleStore, t: &Tuple, col: &str) -> Result<Scalar, SimError> {
    let i = column_index(node, store, col)?;
    t.get(i).cloned().ok_or_else(|| SimError::Type {
        node: node.id.clone(),
        message: format!("record has no component for column `{col}`"),
    })
}
