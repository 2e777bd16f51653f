//! AST to IR: ids, auto-naming, scoped reference resolution.

use std::collections::{BTreeSet, HashSet};

use crate::ir::{
    ActionId, ActionNode, Arc, Chronology, Event, EventId, Model, Op, Step, Thimac, ThimacId, DEFAULT_MAX_ITERATIONS,
};

use super::parser::{ArcStmt, Arrow, BodyItem, File, Item, Spanned, StepAst, ThimacDecl};
use super::{Diagnostic, Span};

struct Lowerer {
    model: Model,
    errors: Vec<Diagnostic>,
    action_ids: HashSet<String>,
    thimac_ids: HashSet<String>,
}

impl Lowerer {
    fn err(&mut self, message: impl Into<String>, span: Span) {
        self.errors.push(Diagnostic::error(message, span));
    }

    fn declare_thimac(&mut self, decl: &ThimacDecl, parent: Option<&ThimacId>) {
        let id = match parent {
            Some(p) => ThimacId::new(format!("{p}.{}", decl.name.value)),
            None => ThimacId::new(decl.name.value.clone()),
        };
        if !self.thimac_ids.insert(id.0.clone()) || self.action_ids.contains(id.as_str()) {
            self.err(format!("duplicate id `{id}`"), decl.name.span);
            return;
        }
        let mut t = Thimac::new(id.0.clone(), decl.role);
        if let Some(d) = &decl.display {
            t.name = d.clone();
        }
        t.parent = parent.cloned();
        t.storage = decl.storage;
        t.key = decl.key;
        t.value_type = decl.value_type;
        t.cardinality = decl.cardinality;
        t.columns = decl.columns.clone();
        let pos = self.model.thimacs.len();
        self.model.thimacs.push(t);
        if let Some(p) = parent {
            if let Some(pt) = self.model.thimacs.iter_mut().find(|t| &t.id == p) {
                pt.children.push(id.clone());
            }
        }

        let child_names: HashSet<&str> = decl
            .body
            .iter()
            .filter_map(|b| match b {
                BodyItem::Thimac(c) => Some(c.name.value.as_str()),
                _ => None,
            })
            .collect();
        let actions: Vec<_> = decl
            .body
            .iter()
            .filter_map(|b| match b {
                BodyItem::Action(a) => Some(a),
                _ => None,
            })
            .collect();

        // Explicit names claim first; anonymous actions take the kind name,
        // then kind2, kind3, ...
        let mut taken: HashSet<String> = child_names.iter().map(|s| s.to_string()).collect();
        let mut names: Vec<Option<String>> = Vec::with_capacity(actions.len());
        for a in &actions {
            match &a.name {
                Some(n) => {
                    if !taken.insert(n.value.clone()) {
                        self.err(format!("duplicate id `{id}.{}`", n.value), n.span);
                        names.push(None);
                    } else {
                        names.push(Some(n.value.clone()));
                    }
                }
                None => names.push(None),
            }
        }
        for (i, a) in actions.iter().enumerate() {
            if a.name.is_some() {
                continue;
            }
            let base = a.kind.as_str();
            let mut candidate = base.to_owned();
            let mut n = 2;
            while taken.contains(&candidate) {
                candidate = format!("{base}{n}");
                n += 1;
            }
            taken.insert(candidate.clone());
            names[i] = Some(candidate);
        }
        for (a, name) in actions.iter().zip(names) {
            let Some(name) = name else { continue };
            if matches!(a.op, Some(Op::Field | Op::Lookup)) && a.column.is_none() {
                self.err(format!("`op={}` needs `col=`", a.op.unwrap()), a.kind_span);
            }
            let mut node = ActionNode::new(format!("{id}.{name}"), a.kind, &id);
            node.storage = a.storage;
            node.label = a.label.clone();
            node.op = a.op;
            node.column = a.column.clone();
            self.action_ids.insert(node.id.0.clone());
            self.model.thimacs[pos].actions.push(node.id.clone());
            self.model.actions.push(node);
        }

        for b in &decl.body {
            if let BodyItem::Thimac(c) = b {
                self.declare_thimac(c, Some(&id));
            }
        }
    }

    /// Innermost scope first, then absolute.
    fn resolve(&self, r: &str, scope: Option<&str>) -> Option<ActionId> {
        let mut s = scope.map(str::to_owned);
        while let Some(prefix) = s {
            let candidate = format!("{prefix}.{r}");
            if self.action_ids.contains(&candidate) {
                return Some(ActionId::new(candidate));
            }
            s = prefix.rfind('.').map(|i| prefix[..i].to_owned());
        }
        self.action_ids.contains(r).then(|| ActionId::new(r))
    }

    fn lower_arcs(&mut self, stmt: &ArcStmt, scope: Option<&str>) {
        let resolved: Vec<Option<ActionId>> = stmt
            .refs
            .iter()
            .map(|r| {
                let res = self.resolve(&r.value, scope);
                if res.is_none() {
                    self.errors.push(Diagnostic::error(format!("undeclared node `{}`", r.value), r.span));
                }
                res
            })
            .collect();
        for (i, arrow) in stmt.arrows.iter().enumerate() {
            let (Some(from), Some(to)) = (&resolved[i], &resolved[i + 1]) else {
                continue;
            };
            let id = format!("a{}", self.model.arcs.len());
            let mut arc = match arrow {
                Arrow::Trigger => Arc::trigger(id, from, to),
                Arrow::Flow | Arrow::Bulk => Arc::flow(id, from, to),
            };
            arc.bulk = stmt.bulk || *arrow == Arrow::Bulk;
            arc.guard = stmt.guard.clone();
            self.model.arcs.push(arc);
        }
    }

    fn walk_arcs(&mut self, decl: &ThimacDecl, scope: &str) {
        let id = format!("{scope}{}{}", if scope.is_empty() { "" } else { "." }, decl.name.value);
        for b in &decl.body {
            match b {
                BodyItem::Arc(stmt) => self.lower_arcs(stmt, Some(&id)),
                BodyItem::Thimac(c) => self.walk_arcs(c, &id),
                BodyItem::Action(_) => {}
            }
        }
    }

    fn lower_steps(&mut self, steps: &[StepAst], events: &HashSet<String>) -> Vec<Step> {
        let mut out = Vec::new();
        for s in steps {
            match s {
                StepAst::Event(e) => {
                    self.check_event(e, events);
                    out.push(Step::event(e.value.clone()));
                }
                StepAst::Repeat { max, body, until } => {
                    self.check_event(until, events);
                    let lowered = self.lower_steps(body, events);
                    if lowered.iter().flat_map(Step::event_refs).any(|r| r.as_str() == until.value) {
                        self.err(
                            format!("`until` event `{}` must not appear in the repeat body", until.value),
                            until.span,
                        );
                    }
                    if body.is_empty() {
                        self.err("repeat body is empty", until.span);
                    }
                    if *max == Some(0) {
                        self.err("repeat bound must be at least 1", until.span);
                    }
                    out.push(Step::Repeat {
                        body: lowered,
                        until: EventId::new(until.value.clone()),
                        max_iterations: max.unwrap_or(DEFAULT_MAX_ITERATIONS),
                    });
                }
            }
        }
        out
    }

    fn check_event(&mut self, e: &Spanned<String>, events: &HashSet<String>) {
        if !events.contains(&e.value) {
            self.err(format!("undeclared event `{}`", e.value), e.span);
        }
    }
}

pub(super) fn lower(file: File) -> Result<Model, Vec<Diagnostic>> {
    let mut lw =
        Lowerer { model: Model::default(), errors: Vec::new(), action_ids: HashSet::new(), thimac_ids: HashSet::new() };
    let mut name_seen = false;
    let mut level_seen = false;
    for item in &file.items {
        match item {
            Item::Model(n) => {
                if name_seen {
                    lw.err("model name declared twice", n.span);
                }
                name_seen = true;
                lw.model.name = n.value.clone();
            }
            Item::Level(l) => {
                if level_seen {
                    lw.err("level declared twice", l.span);
                }
                level_seen = true;
                lw.model.level = Some(l.value);
            }
            Item::Thimac(t) => lw.declare_thimac(t, None),
            _ => {}
        }
    }
    for item in &file.items {
        match item {
            Item::Thimac(t) => lw.walk_arcs(t, ""),
            Item::Arc(stmt) => lw.lower_arcs(stmt, None),
            _ => {}
        }
    }

    let mut event_ids = HashSet::new();
    for item in &file.items {
        if let Item::Event(e) = item {
            if !event_ids.insert(e.id.value.clone()) {
                lw.err(format!("duplicate event `{}`", e.id.value), e.id.span);
                continue;
            }
            let region: BTreeSet<ActionId> = e.region.iter().map(|r| ActionId::new(r.value.clone())).collect();
            lw.model.events.push(Event {
                id: EventId::new(e.id.value.clone()),
                description: e.description.clone().unwrap_or_default(),
                region,
                halt: e.halt,
            });
        }
    }

    let mut chron_seen = false;
    for item in &file.items {
        if let Item::Chronology(steps) = item {
            if chron_seen {
                lw.err("chronology declared twice", steps.span);
                continue;
            }
            chron_seen = true;
            let steps = lw.lower_steps(&steps.value, &event_ids);
            lw.model.chronology = Some(Chronology { steps });
        }
    }

    if lw.errors.is_empty() {
        Ok(lw.model)
    } else {
        Err(lw.errors)
    }
}
