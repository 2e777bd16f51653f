//! Structural validation and reachability over a static model.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::ir::{ActionId, ActionKind, Model, ModelIndex, Role, Step, Variety};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    UnresolvedReference,
    DuplicateId,
    ThimacCycle,
    IllegalFlowAdjacency,
    IllegalInterThimacFlow,
    TriggerWithinChain,
    SetStructureMissing,
    ChronologyInvalid,
    RegionNotInterior,
    EmptyRegion,
    CardinalityViolation,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::UnresolvedReference => "unresolved-reference",
            Rule::DuplicateId => "duplicate-id",
            Rule::ThimacCycle => "thimac-cycle",
            Rule::IllegalFlowAdjacency => "illegal-flow-adjacency",
            Rule::IllegalInterThimacFlow => "illegal-inter-thimac-flow",
            Rule::TriggerWithinChain => "trigger-within-chain",
            Rule::SetStructureMissing => "set-structure-missing",
            Rule::ChronologyInvalid => "chronology-invalid",
            Rule::RegionNotInterior => "region-not-interior",
            Rule::EmptyRegion => "empty-region",
            Rule::CardinalityViolation => "cardinality-violation",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Violation {
    /// Id of the offending node, arc, thimac, or event.
    pub subject: String,
    pub rule: Rule,
    pub severity: Severity,
    pub message: String,
}

impl Violation {
    pub fn error(rule: Rule, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { subject: subject.into(), rule, severity: Severity::Error, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] {}: {}", self.rule, self.subject, self.message)
    }
}

/// Violations are data. The list is kept sorted so reports compare equal
/// regardless of the order the model lists its arcs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(mut violations: Vec<Violation>) -> Self {
        violations.sort();
        violations.dedup();
        ValidationReport { violations }
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// No error-severity violations (warnings allowed).
    pub fn is_clean(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Warning)
    }

    pub fn has_rule(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn merge(self, other: ValidationReport) -> ValidationReport {
        let mut all = self.violations;
        all.extend(other.violations);
        ValidationReport::from_violations(all)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Downgrade adjacency and trigger-chain violations to warnings.
    pub lenient: bool,
    /// Skip adjacency and trigger-chain checks entirely. Implied for models
    /// that carry a simplification level.
    pub relaxed: bool,
}

impl ValidateOptions {
    pub fn lenient() -> Self {
        ValidateOptions { lenient: true, relaxed: false }
    }

    pub fn relaxed() -> Self {
        ValidateOptions { lenient: false, relaxed: true }
    }
}

/// Permitted flow successors. Within one thimac the chain runs
/// transfer → receive → {process | release}, process → release,
/// create → {process | release}, release → transfer. Between thimacs only
/// transfer → transfer crosses a boundary.
pub fn flow_pair_allowed(from: ActionKind, to: ActionKind, same_thimac: bool) -> bool {
    use ActionKind::*;
    if !same_thimac {
        return from == Transfer && to == Transfer;
    }
    matches!(
        (from, to),
        (Transfer, Receive)
            | (Receive, Process)
            | (Receive, Release)
            | (Process, Release)
            | (Create, Process)
            | (Create, Release)
            | (Release, Transfer)
    )
}

pub fn validate(model: &Model) -> ValidationReport {
    validate_with(model, ValidateOptions::default())
}

pub fn validate_with(model: &Model, opts: ValidateOptions) -> ValidationReport {
    let idx = model.index();
    let mut out = Vec::new();
    check_ids(model, &idx, &mut out);
    check_tree(model, &idx, &mut out);
    if !(opts.relaxed || model.level.is_some()) {
        let severity = if opts.lenient { Severity::Warning } else { Severity::Error };
        let before = out.len();
        check_flows(model, &idx, &mut out);
        check_triggers(model, &idx, &mut out);
        for v in &mut out[before..] {
            v.severity = severity;
        }
    }
    for t in model.thimacs.iter().filter(|t| t.role == Role::Set) {
        out.extend(crate::sets::check_set_structure(&idx, t));
    }
    check_chronology(model, &idx, &mut out);
    ValidationReport::from_violations(out)
}

fn check_ids(model: &Model, idx: &ModelIndex<'_>, out: &mut Vec<Violation>) {
    let mut seen: HashSet<&str> = HashSet::new();
    let node_ids = model.thimacs.iter().map(|t| t.id.as_str()).chain(model.actions.iter().map(|a| a.id.as_str()));
    for id in node_ids {
        if !seen.insert(id) {
            out.push(Violation::error(Rule::DuplicateId, id, "id declared more than once"));
        }
    }
    let mut arcs = HashSet::new();
    for arc in &model.arcs {
        if !arcs.insert(arc.id.as_str()) {
            out.push(Violation::error(Rule::DuplicateId, arc.id.as_str(), "arc id declared more than once"));
        }
        for end in [&arc.from, &arc.to] {
            if idx.action(end.as_str()).is_none() {
                out.push(Violation::error(
                    Rule::UnresolvedReference,
                    arc.id.as_str(),
                    format!("arc endpoint `{end}` is not an action"),
                ));
            }
        }
    }
    let mut events = HashSet::new();
    for ev in &model.events {
        if !events.insert(ev.id.as_str()) {
            out.push(Violation::error(Rule::DuplicateId, ev.id.as_str(), "event declared more than once"));
        }
    }
    for a in &model.actions {
        if idx.thimac(a.owner.as_str()).is_none() {
            out.push(Violation::error(
                Rule::UnresolvedReference,
                a.id.as_str(),
                format!("owner `{}` is not a thimac", a.owner),
            ));
        }
    }
}

fn check_tree(model: &Model, idx: &ModelIndex<'_>, out: &mut Vec<Violation>) {
    for t in &model.thimacs {
        if let Some(p) = &t.parent {
            if idx.thimac(p.as_str()).is_none() {
                out.push(Violation::error(
                    Rule::UnresolvedReference,
                    t.id.as_str(),
                    format!("parent `{p}` is not a thimac"),
                ));
                continue;
            }
        }
        // Walk parents; returning to `t` means `t` sits on a cycle.
        let mut visited = HashSet::new();
        let mut cursor = t.parent.as_ref();
        while let Some(p) = cursor {
            if p == &t.id {
                out.push(Violation::error(Rule::ThimacCycle, t.id.as_str(), "thimac is its own ancestor"));
                break;
            }
            if !visited.insert(p.as_str()) {
                break;
            }
            cursor = idx.thimac(p.as_str()).and_then(|pt| pt.parent.as_ref());
        }
        for c in &t.children {
            if idx.thimac(c.as_str()).is_none() {
                out.push(Violation::error(
                    Rule::UnresolvedReference,
                    t.id.as_str(),
                    format!("child `{c}` is not a thimac"),
                ));
            }
        }
    }
}

fn check_flows(model: &Model, idx: &ModelIndex<'_>, out: &mut Vec<Violation>) {
    for arc in model.arcs.iter().filter(|a| a.variety == Variety::Flow) {
        let (Some(from), Some(to)) = (idx.action(arc.from.as_str()), idx.action(arc.to.as_str())) else {
            continue;
        };
        let same = from.owner == to.owner;
        if flow_pair_allowed(from.kind, to.kind, same) {
            continue;
        }
        let (rule, what) = if same {
            (Rule::IllegalFlowAdjacency, "within a thimac")
        } else {
            (Rule::IllegalInterThimacFlow, "across thimacs (only transfer -> transfer crosses)")
        };
        out.push(Violation::error(
            rule,
            arc.id.as_str(),
            format!("{} -> {} is not a permitted flow {what}: {} -> {}", from.kind, to.kind, arc.from, arc.to),
        ));
    }
}

/// Flow chains: components of intra-thimac flow arcs.
pub(crate) fn flow_chains(model: &Model, idx: &ModelIndex<'_>) -> HashMap<String, usize> {
    let mut parent: Vec<usize> = (0..model.actions.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for arc in model.arcs.iter().filter(|a| a.variety == Variety::Flow) {
        let (Some(a), Some(b)) = (idx.action_position(arc.from.as_str()), idx.action_position(arc.to.as_str())) else {
            continue;
        };
        if model.actions[a].owner != model.actions[b].owner {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    (0..model.actions.len()).map(|i| (model.actions[i].id.0.clone(), find(&mut parent, i))).collect()
}

fn check_triggers(model: &Model, idx: &ModelIndex<'_>, out: &mut Vec<Violation>) {
    let chains = flow_chains(model, idx);
    for arc in model.arcs.iter().filter(|a| a.variety == Variety::Trigger) {
        let (Some(ca), Some(cb)) = (chains.get(arc.from.as_str()), chains.get(arc.to.as_str())) else {
            continue;
        };
        if ca == cb {
            out.push(Violation::error(
                Rule::TriggerWithinChain,
                arc.id.as_str(),
                format!("trigger {} ~> {} stays inside one flow chain", arc.from, arc.to),
            ));
        }
    }
}

fn check_chronology(model: &Model, idx: &ModelIndex<'_>, out: &mut Vec<Violation>) {
    fn walk(steps: &[Step], idx: &ModelIndex<'_>, out: &mut Vec<Violation>) {
        for step in steps {
            match step {
                Step::Event { event } => {
                    if idx.event(event.as_str()).is_none() {
                        out.push(Violation::error(
                            Rule::ChronologyInvalid,
                            event.as_str(),
                            "chronology references an undeclared event",
                        ));
                    }
                }
                Step::Repeat { body, until, max_iterations } => {
                    if body.is_empty() {
                        out.push(Violation::error(Rule::ChronologyInvalid, until.as_str(), "repeat body is empty"));
                    }
                    if *max_iterations == 0 {
                        out.push(Violation::error(
                            Rule::ChronologyInvalid,
                            until.as_str(),
                            "repeat bound must be at least 1",
                        ));
                    }
                    if idx.event(until.as_str()).is_none() {
                        out.push(Violation::error(
                            Rule::ChronologyInvalid,
                            until.as_str(),
                            "repeat `until` references an undeclared event",
                        ));
                    }
                    if body.iter().flat_map(Step::event_refs).any(|e| e == until) {
                        out.push(Violation::error(
                            Rule::ChronologyInvalid,
                            until.as_str(),
                            "`until` event must not appear inside the repeat body",
                        ));
                    }
                    walk(body, idx, out);
                }
            }
        }
    }
    if let Some(ch) = &model.chronology {
        walk(&ch.steps, idx, out);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action `{0}`")]
pub struct UnknownAction(pub String);

/// Transitive closure from `from` over flow arcs (and trigger arcs when
/// `include_triggers` is set). The start node is always in the result.
pub fn reachable(model: &Model, from: &str, include_triggers: bool) -> Result<BTreeSet<ActionId>, UnknownAction> {
    let idx = model.index();
    let start = idx.action(from).ok_or_else(|| UnknownAction(from.to_owned()))?;
    let mut seen = BTreeSet::new();
    seen.insert(start.id.clone());
    let mut queue = VecDeque::from([start.id.as_str()]);
    while let Some(n) = queue.pop_front() {
        for arc in idx.outgoing(n) {
            if arc.variety == Variety::Trigger && !include_triggers {
                continue;
            }
            if idx.action(arc.to.as_str()).is_some() && seen.insert(arc.to.clone()) {
                queue.push_back(arc.to.as_str());
            }
        }
    }
    Ok(seen)
}
