//! Shared fixtures: corpus access, a random valid-model generator and a
//! brute-force reachability oracle.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tm_core::dsl::{self, scenario::parse_scenario, SourceFile};
use tm_core::dynamics::Scenario;
use tm_core::passes::{simplify, PassConfig};
use tm_core::validate::flow_pair_allowed;
use tm_core::{
    ActionId, ActionKind, ActionNode, Arc, Cardinality, Chronology, Event, Level, Model, Role, Step, Thimac, ThimacId,
    ValueType, Variety,
};

pub const CORPUS: [&str; 9] =
    ["arith", "cow", "set", "login", "company", "borrow", "borrow_or", "ownership", "marriage"];

/// Every shipped scenario with the model it runs against.
pub const SCENARIOS: [(&str, &str); 16] = [
    ("arith", "arith"),
    ("cow", "cow"),
    ("set_add", "set"),
    ("set_duplicate", "set"),
    ("login_ok", "login"),
    ("login_bad_password", "login"),
    ("login_second_record", "login"),
    ("login_unknown_id", "login"),
    ("new_employee", "company"),
    ("new_employee_twice", "company"),
    ("bad_department", "company"),
    ("manager", "company"),
    ("borrow", "borrow"),
    ("borrow_or", "borrow_or"),
    ("ownership", "ownership"),
    ("marriage", "marriage"),
];

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn corpus(name: &str) -> Model {
    let path = root().join("corpus").join(format!("{name}.tm"));
    let src = SourceFile::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    dsl::parse(&src).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn scenario(name: &str) -> Scenario {
    let path = root().join("scenarios").join(format!("{name}.scn"));
    let src = SourceFile::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_scenario(&src).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

/// Compare `actual` with the golden file, or rewrite it when
/// `UPDATE_GOLDEN` is set.
pub fn golden(rel: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(rel);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1 to create)", path.display()));
    assert!(expected == actual, "{} differs from output:\n{actual}", path.display());
}

const KINDS: [ActionKind; 5] =
    [ActionKind::Create, ActionKind::Process, ActionKind::Release, ActionKind::Transfer, ActionKind::Receive];
const ROLES: [Role; 6] = [Role::Generic, Role::Entity, Role::Relationship, Role::Actor, Role::Message, Role::Attribute];
const LABELS: [&str; 6] = ["plain", "with \"quotes\"", "back\\slash", "tab\there", "line\nbreak", "ünïcode"];
const GUARDS: [&str; 4] = ["ok", "found", "eq", "neq"];

fn maybe<T>(rng: &mut ChaCha8Rng, p: f64, f: impl FnOnce(&mut ChaCha8Rng) -> T) -> Option<T> {
    if rng.gen_bool(p) {
        Some(f(rng))
    } else {
        None
    }
}

/// A random model that passes default validation, in canonical order.
///
/// Every non-process action gets at most one incoming arc, so splicing a
/// deleted chain never multiplies arcs.
pub fn gen_model(seed: u64, max_nodes: usize) -> Model {
    let rng = &mut ChaCha8Rng::seed_from_u64(seed);
    let mut m = Model::new(if rng.gen_bool(0.8) { format!("g{}", seed % 1000) } else { String::new() });

    // Thimac tree shape: parent index per thimac, parents before children.
    let n_thimacs = rng.gen_range(1..=5);
    let mut parents: Vec<Option<usize>> = Vec::new();
    for i in 0..n_thimacs {
        parents.push(if i > 0 && rng.gen_bool(0.4) { Some(rng.gen_range(0..i)) } else { None });
    }
    // Pre-order walk assigns ids.
    fn walk(i: usize, parents: &[Option<usize>], prefix: Option<&str>, out: &mut Vec<(usize, String, Option<String>)>) {
        let id = match prefix {
            Some(p) => format!("{p}.C{i}"),
            None => format!("T{i}"),
        };
        out.push((i, id.clone(), prefix.map(str::to_owned)));
        for (j, p) in parents.iter().enumerate() {
            if *p == Some(i) {
                walk(j, parents, Some(&id), out);
            }
        }
    }
    let mut order = Vec::new();
    for (i, p) in parents.iter().enumerate() {
        if p.is_none() {
            walk(i, &parents, None, &mut order);
        }
    }
    let mut thimacs: Vec<Thimac> = Vec::new();
    for (_, id, parent) in &order {
        let mut t = Thimac::new(id.clone(), *ROLES.choose(rng).unwrap());
        t.parent = parent.as_ref().map(|p| ThimacId::new(p.clone()));
        if rng.gen_bool(0.2) {
            t.name = LABELS.choose(rng).unwrap().to_string();
        }
        t.storage = rng.gen_bool(0.2);
        t.key = t.role == Role::Attribute && rng.gen_bool(0.5);
        t.value_type = maybe(rng, 0.2, |r| *[ValueType::Int, ValueType::Text].choose(r).unwrap());
        if t.role == Role::Relationship {
            t.cardinality = maybe(rng, 0.6, |r| *Cardinality::ALL.choose(r).unwrap());
        }
        if t.storage && rng.gen_bool(0.5) {
            t.columns = Some(vec!["a".into(), "b c".into()]);
        }
        thimacs.push(t);
    }
    for i in 0..thimacs.len() {
        if let Some(p) = thimacs[i].parent.clone() {
            let child = thimacs[i].id.clone();
            thimacs.iter_mut().find(|t| t.id == p).unwrap().children.push(child);
        }
    }

    // Actions, grouped by thimac in pre-order.
    let n_nodes = rng.gen_range(1..=max_nodes);
    let mut counts = vec![0usize; thimacs.len()];
    for _ in 0..n_nodes {
        counts[rng.gen_range(0..thimacs.len())] += 1;
    }
    let mut counter = 0;
    for (ti, t) in thimacs.iter_mut().enumerate() {
        let mut used_plain: BTreeSet<ActionKind> = BTreeSet::new();
        for _ in 0..counts[ti] {
            let kind = *KINDS.choose(rng).unwrap();
            // Unnamed actions print as their kind; allow one per kind.
            let local = if rng.gen_bool(0.3) && used_plain.insert(kind) {
                kind.as_str().to_owned()
            } else {
                counter += 1;
                format!("n{counter}")
            };
            let mut a = ActionNode::new(format!("{}.{local}", t.id), kind, &t.id);
            a.storage = rng.gen_bool(0.1);
            a.label = maybe(rng, 0.2, |r| LABELS.choose(r).unwrap().to_string());
            if kind == ActionKind::Process {
                a.op = maybe(rng, 0.2, |r| *tm_core::Op::ALL.choose(r).unwrap());
                if a.op.is_some() {
                    a.column = Some("a".into());
                }
            }
            t.actions.push(a.id.clone());
            m.actions.push(a);
        }
    }
    m.thimacs = thimacs;

    // Flow arcs that satisfy the adjacency rules.
    let n = m.actions.len();
    let mut indeg = vec![0usize; n];
    let capped = |k: ActionKind| k != ActionKind::Process;
    for _ in 0..rng.gen_range(1..=3) {
        for a in 0..n {
            if !rng.gen_bool(0.6) {
                continue;
            }
            let x = &m.actions[a];
            let candidates: Vec<usize> = (0..n)
                .filter(|&b| {
                    let y = &m.actions[b];
                    b != a && flow_pair_allowed(x.kind, y.kind, x.owner == y.owner) && !(capped(y.kind) && indeg[b] > 0)
                })
                .collect();
            let Some(&b) = candidates.choose(rng) else { continue };
            let mut arc = Arc::flow(format!("a{}", m.arcs.len()), &m.actions[a].id, &m.actions[b].id);
            arc.bulk = rng.gen_bool(0.2);
            arc.guard = maybe(rng, 0.2, |r| GUARDS.choose(r).unwrap().to_string());
            m.arcs.push(arc);
            indeg[b] += 1;
        }
    }

    // Triggers between different flow chains.
    let mut chain: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            x = c[x];
        }
        x
    }
    let pos = |m: &Model, id: &ActionId| m.actions.iter().position(|a| &a.id == id).unwrap();
    for arc in &m.arcs {
        let (a, b) = (pos(&m, &arc.from), pos(&m, &arc.to));
        if m.actions[a].owner == m.actions[b].owner {
            let (ra, rb) = (find(&mut chain, a), find(&mut chain, b));
            chain[ra] = rb;
        }
    }
    for _ in 0..rng.gen_range(0..=n / 2) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if find(&mut chain, a) == find(&mut chain, b) || (capped(m.actions[b].kind) && indeg[b] > 0) {
            continue;
        }
        let mut arc = Arc::trigger(format!("a{}", m.arcs.len()), &m.actions[a].id, &m.actions[b].id);
        arc.bulk = rng.gen_bool(0.1);
        arc.guard = maybe(rng, 0.3, |r| GUARDS.choose(r).unwrap().to_string());
        m.arcs.push(arc);
        indeg[b] += 1;
    }

    // Events over random regions and a chronology over them.
    let n_events = rng.gen_range(0..=4);
    for i in 0..n_events {
        let mut region = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=3) {
            region.insert(m.actions[rng.gen_range(0..n)].id.clone());
        }
        m.events.push(Event {
            id: format!("E{}", i + 1).into(),
            description: if rng.gen_bool(0.5) { LABELS.choose(rng).unwrap().to_string() } else { String::new() },
            region,
            halt: rng.gen_bool(0.2),
        });
    }
    if !m.events.is_empty() && rng.gen_bool(0.7) {
        let ids: Vec<String> = m.events.iter().map(|e| e.id.0.clone()).collect();
        let mut steps = Vec::new();
        for _ in 0..rng.gen_range(1..=5) {
            if ids.len() >= 2 && rng.gen_bool(0.3) {
                let until = ids.choose(rng).unwrap().clone();
                let others: Vec<&String> = ids.iter().filter(|e| **e != until).collect();
                let body =
                    (0..rng.gen_range(1..=2)).map(|_| Step::event(others.choose(rng).unwrap().as_str())).collect();
                let max_iterations =
                    if rng.gen_bool(0.5) { tm_core::ir::DEFAULT_MAX_ITERATIONS } else { rng.gen_range(1..50) };
                steps.push(Step::Repeat { body, until: until.into(), max_iterations });
            } else {
                steps.push(Step::event(ids.choose(rng).unwrap().as_str()));
            }
        }
        m.chronology = Some(Chronology { steps });
    }
    m
}

/// Pairs `(u, v)` with `v` reachable from `u` in one or more hops, by
/// Floyd–Warshall over the arcs accepted by `keep`. Nodes outside `alive`
/// are removed first.
#[allow(clippy::needless_range_loop)]
pub fn closure(model: &Model, alive: &dyn Fn(&str) -> bool, keep: &dyn Fn(&Arc) -> bool) -> BTreeSet<(String, String)> {
    let ids: Vec<&str> = model.actions.iter().map(|a| a.id.as_str()).filter(|id| alive(id)).collect();
    let n = ids.len();
    let index = |id: &str| ids.iter().position(|x| *x == id);
    let mut r = vec![vec![false; n]; n];
    for arc in model.arcs.iter().filter(|a| keep(a)) {
        if let (Some(i), Some(j)) = (index(arc.from.as_str()), index(arc.to.as_str())) {
            r[i][j] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if r[i][j] {
                out.insert((ids[i].to_owned(), ids[j].to_owned()));
            }
        }
    }
    out
}

pub fn is_flow(a: &Arc) -> bool {
    a.variety == Variety::Flow
}

pub const LEVELS: [Level; 3] = [Level::S1, Level::S2, Level::S3];

fn deleted(level: Level) -> &'static [ActionKind] {
    use ActionKind::*;
    match level {
        Level::S1 => &[Release, Transfer, Receive],
        _ => &[Release, Transfer, Receive, Create],
    }
}

/// Actions owned by a thimac that has an eliminated role on its ancestor
/// path (S3 only).
fn eliminated(model: &Model, level: Level) -> HashSet<String> {
    if level != Level::S3 {
        return HashSet::new();
    }
    let gone = [Role::Actor, Role::Message];
    let mut dropped: HashSet<&str> = HashSet::new();
    for t in &model.thimacs {
        let mut cur = Some(t);
        while let Some(c) = cur {
            if gone.contains(&c.role) {
                dropped.insert(t.id.as_str());
                break;
            }
            cur = c.parent.as_ref().and_then(|p| model.thimac(p.as_str()));
        }
    }
    model.actions.iter().filter(|a| dropped.contains(a.owner.as_str())).map(|a| a.id.0.clone()).collect()
}

pub fn check_laws(name: &str, m: &Model) -> Result<(), String> {
    for level in LEVELS {
        let cfg = PassConfig::new(level);
        let s = simplify(m, &cfg).map_err(|e| format!("{name} {level}: {e}"))?;
        let twice = simplify(&s, &cfg).map_err(|e| format!("{name} {level} (again): {e}"))?;
        if twice != s {
            return Err(format!("{name}: {level} is not idempotent"));
        }
        if s.actions.len() > m.actions.len() || s.arcs.len() > m.arcs.len() {
            return Err(format!(
                "{name} {level}: counts grew ({} -> {} nodes, {} -> {} arcs)",
                m.actions.len(),
                s.actions.len(),
                m.arcs.len(),
                s.arcs.len()
            ));
        }
        if let Some(a) = s.actions.iter().find(|a| deleted(level).contains(&a.kind)) {
            return Err(format!("{name} {level}: {} survived", a.id));
        }
        // Oracle on the original model: eliminated nodes vanish, everything
        // else may be passed through.
        let gone = eliminated(m, level);
        let surviving: BTreeSet<&str> = s.actions.iter().map(|a| a.id.as_str()).collect();
        let expected: BTreeSet<(String, String)> = closure(m, &|id| !gone.contains(id), &is_flow)
            .into_iter()
            .filter(|(u, v)| surviving.contains(u.as_str()) && surviving.contains(v.as_str()))
            .collect();
        let actual = closure(&s, &|_| true, &is_flow);
        if expected != actual {
            let missing: Vec<_> = expected.difference(&actual).collect();
            let extra: Vec<_> = actual.difference(&expected).collect();
            return Err(format!("{name} {level}: reachability differs; missing {missing:?}, extra {extra:?}"));
        }
    }
    Ok(())
}
