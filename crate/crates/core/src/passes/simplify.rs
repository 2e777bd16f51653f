use std::collections::{HashMap, HashSet, VecDeque};

use crate::ir::{ActionKind, Arc, ArcId, Chronology, Level, Model, Step, Variety};
use crate::validate::{validate_with, ValidateOptions};

use super::{PassConfig, PassError};

fn deleted_kinds(level: Level) -> &'static [ActionKind] {
    use ActionKind::*;
    match level {
        Level::S1 => &[Release, Transfer, Receive],
        Level::S2 | Level::S3 => &[Release, Transfer, Receive, Create],
    }
}

/// Apply simplification rules up to `config.level`.
///
/// Thimacs eliminated at S3 go first, taking their actions and incident arcs
/// with them. Deleted action kinds are then spliced out: every path
/// `a -> d1 -> ... -> dk -> b` through deleted nodes becomes one arc `a -> b`
/// that is a trigger if any hop was, bulk if any hop was, and carries the
/// first guard label met along the way. Parallel arcs with the same
/// endpoints, variety and label are coalesced.
pub fn simplify(model: &Model, config: &PassConfig) -> Result<Model, PassError> {
    let opts = if model.level.is_some() { ValidateOptions::relaxed() } else { ValidateOptions::default() };
    let report = validate_with(model, opts);
    if !report.is_clean() {
        return Err(PassError::Invalid(report));
    }
    let idx = model.index();

    let mut dropped_thimacs: HashSet<&str> = HashSet::new();
    if config.level == Level::S3 {
        for t in &model.thimacs {
            if idx.ancestors_or_self(t.id.as_str()).iter().any(|a| config.elimination_set.contains(&a.role)) {
                dropped_thimacs.insert(t.id.as_str());
            }
        }
    }
    let kinds = deleted_kinds(config.level);
    let eliminated: HashSet<&str> =
        model.actions.iter().filter(|a| dropped_thimacs.contains(a.owner.as_str())).map(|a| a.id.as_str()).collect();
    let spliced: HashSet<&str> = model
        .actions
        .iter()
        .filter(|a| !eliminated.contains(a.id.as_str()) && kinds.contains(&a.kind))
        .map(|a| a.id.as_str())
        .collect();
    let survives = |id: &str| !eliminated.contains(id) && !spliced.contains(id);

    let mut out = model.clone();
    out.level = Some(model.level.map_or(config.level, |l| l.max(config.level)));
    out.thimacs.retain(|t| !dropped_thimacs.contains(t.id.as_str()));
    for t in &mut out.thimacs {
        t.children.retain(|c| !dropped_thimacs.contains(c.as_str()));
        t.actions.retain(|a| survives(a.as_str()));
    }
    out.actions.retain(|a| survives(a.id.as_str()));

    // Outgoing arcs restricted to the graph after thimac elimination.
    let live_arcs: Vec<&Arc> = model
        .arcs
        .iter()
        .filter(|a| !eliminated.contains(a.from.as_str()) && !eliminated.contains(a.to.as_str()))
        .collect();
    let mut outgoing: HashMap<&str, Vec<&Arc>> = HashMap::new();
    for a in &live_arcs {
        outgoing.entry(a.from.as_str()).or_default().push(a);
    }

    type Key = (String, String, Variety, Option<String>);
    let mut arcs: Vec<Arc> = Vec::new();
    let mut slot: HashMap<Key, usize> = HashMap::new();
    let mut emit = |from: &str, to: &str, trigger: bool, label: Option<String>, bulk: bool| {
        let variety = if trigger { Variety::Trigger } else { Variety::Flow };
        let key = (from.to_owned(), to.to_owned(), variety, label.clone());
        match slot.get(&key) {
            Some(&i) => arcs[i].bulk |= bulk,
            None => {
                slot.insert(key, arcs.len());
                arcs.push(Arc {
                    id: ArcId::new(String::new()),
                    from: from.into(),
                    to: to.into(),
                    variety,
                    bulk,
                    guard: label,
                });
            }
        }
    };

    for arc in &live_arcs {
        if !survives(arc.from.as_str()) {
            continue;
        }
        let state = (arc.variety == Variety::Trigger, arc.guard.clone(), arc.bulk);
        if survives(arc.to.as_str()) {
            emit(arc.from.as_str(), arc.to.as_str(), state.0, state.1, state.2);
            continue;
        }
        let mut seen: HashSet<(&str, bool, Option<String>, bool)> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert((arc.to.as_str(), state.0, state.1.clone(), state.2));
        queue.push_back((arc.to.as_str(), state));
        while let Some((node, (trig, label, bulk))) = queue.pop_front() {
            for next in outgoing.get(node).into_iter().flatten() {
                let st = (
                    trig || next.variety == Variety::Trigger,
                    label.clone().or_else(|| next.guard.clone()),
                    bulk || next.bulk,
                );
                if survives(next.to.as_str()) {
                    emit(arc.from.as_str(), next.to.as_str(), st.0, st.1, st.2);
                } else if seen.insert((next.to.as_str(), st.0, st.1.clone(), st.2)) {
                    queue.push_back((next.to.as_str(), st));
                }
            }
        }
    }
    for (i, a) in arcs.iter_mut().enumerate() {
        a.id = ArcId::new(format!("a{i}"));
    }
    out.arcs = arcs;

    for ev in &mut out.events {
        ev.region.retain(|a| survives(a.as_str()));
    }
    out.events.retain(|e| !e.region.is_empty());
    let kept: HashSet<String> = out.events.iter().map(|e| e.id.0.clone()).collect();
    out.chronology = model.chronology.as_ref().map(|c| Chronology { steps: prune_steps(&c.steps, &kept) });
    Ok(out)
}

/// Drop references to removed events. A repeat whose `until` is gone is
/// inlined; one whose body is gone collapses to its `until` event.
fn prune_steps(steps: &[Step], kept: &HashSet<String>) -> Vec<Step> {
    let mut out = Vec::new();
    for s in steps {
        match s {
            Step::Event { event } => {
                if kept.contains(event.as_str()) {
                    out.push(s.clone());
                }
            }
            Step::Repeat { body, until, max_iterations } => {
                let body = prune_steps(body, kept);
                let until_kept = kept.contains(until.as_str());
                match (body.is_empty(), until_kept) {
                    (false, true) => {
                        out.push(Step::Repeat { body, until: until.clone(), max_iterations: *max_iterations })
                    }
                    (true, true) => out.push(Step::Event { event: until.clone() }),
                    (_, false) => out.extend(body),
                }
            }
        }
    }
    out
}
