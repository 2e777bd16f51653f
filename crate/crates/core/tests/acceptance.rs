//! One check per acceptance criterion. Each prints a PASS or FAIL line;
//! the test fails if any criterion does. The lines go straight to stdout,
//! so they appear even when the harness captures output.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use tm_core::dsl::{parse_str, print};
use tm_core::dynamics::{cardinality_check, simulate, Trace, Value};
use tm_core::export::{to_dot, to_sql, upper_snake};
use tm_core::passes::project;
use tm_core::{Model, Op, Scalar, TupleStore, Variety};

use common::{check_laws, corpus, gen_model, golden, scenario, CORPUS};

/// Seeds for the generated-model criteria; at least 100 are required.
const GENERATED: u64 = 120;
const MAX_NODES: usize = 30;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(label: &str, f: fn() -> Check) -> bool {
    let outcome = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let line = match &outcome {
        Ok(()) => format!("PASS {label}\n"),
        Err(why) => format!("FAIL {label}: {why}\n"),
    };
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    outcome.is_ok()
}

fn names<T>(items: &[T], f: impl Fn(&T) -> &str) -> Vec<String> {
    items.iter().map(|i| f(i).to_owned()).collect()
}

fn c1_projection() -> Check {
    let login = project(&corpus("login")).map_err(|e| e.to_string())?;
    let ents: BTreeSet<String> = names(&login.entities, |e| &e.name).into_iter().collect();
    ensure(ents == BTreeSet::from(["Users".into(), "LogEntries".into()]), || format!("login entities {ents:?}"))?;
    ensure(login.relationships.len() == 1, || format!("login has {} relationships", login.relationships.len()))?;

    let company = project(&corpus("company")).map_err(|e| e.to_string())?;
    ensure(company.entities.len() == 3, || format!("company has {} entities", company.entities.len()))?;
    let rels = names(&company.relationships, |r| &r.name);
    ensure(rels == ["WORK_FOR", "CONTROL", "WORK_ON", "MANAGER"], || format!("company relationships {rels:?}"))?;
    for (rel, attr) in [("WORK_ON", "Hours"), ("MANAGER", "Start-date")] {
        let r = company.relationship(rel).unwrap();
        ensure(r.attributes.iter().any(|a| a.name == attr), || format!("{rel} lacks {attr}"))?;
    }
    Ok(())
}

fn c2_simplification() -> Check {
    for name in CORPUS {
        check_laws(name, &corpus(name))?;
    }
    for seed in 0..GENERATED {
        check_laws(&format!("seed {seed}"), &gen_model(seed, MAX_NODES))?;
    }
    Ok(())
}

fn round_trips(name: &str, m: &Model) -> Check {
    let again = parse_str(&print(m)).map_err(|d| format!("{name}: reparse failed: {d:?}"))?;
    ensure(again.dump() == m.dump(), || format!("{name}: dump changed"))
}

fn c3_round_trip() -> Check {
    for name in CORPUS {
        round_trips(name, &corpus(name))?;
    }
    for seed in 0..GENERATED {
        round_trips(&format!("seed {seed}"), &gen_model(seed, MAX_NODES))?;
    }
    Ok(())
}

/// Where one fired event feeds another by a flow arc (and not the other
/// way round), the feeder fires first.
fn order_respects_flows(model: &Model, trace: &Trace) -> Check {
    let mut first: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, f) in trace.fired.iter().enumerate() {
        first.entry(f.event.as_str()).or_insert(i);
    }
    let region = |e: &str| &model.event(e).unwrap().region;
    let feeds = |a: &str, b: &str| {
        model
            .arcs
            .iter()
            .any(|arc| arc.variety == Variety::Flow && region(a).contains(&arc.from) && region(b).contains(&arc.to))
    };
    for (&a, &ia) in &first {
        for (&b, &ib) in &first {
            if a != b && feeds(a, b) && !feeds(b, a) && ia > ib {
                return Err(format!("{a} feeds {b} but fired after it"));
            }
        }
    }
    Ok(())
}

fn c4_login() -> Check {
    let m = corpus("login");
    let ok = simulate(&m, &scenario("login_ok")).map_err(|e| e.to_string())?;
    let expected = ["E1", "E2", "E4", "E5", "E6", "E8", "E9", "E10", "E12", "E13", "E14"];
    ensure(ok.fired_ids() == expected, || format!("happy path fired {:?}", ok.fired_ids()))?;
    order_respects_flows(&m, &ok)?;
    let log = ok.store("LogEntries").unwrap();
    ensure(log.len() == 1, || format!("{} log entries appended", log.len()))?;
    golden("traces/login_ok.json", &(ok.dump() + "\n"));

    let bad = simulate(&m, &scenario("login_bad_password")).map_err(|e| e.to_string())?;
    ensure(bad.has_fired("E11"), || "E11 did not fire".into())?;
    ensure(bad.store("LogEntries").unwrap().is_empty(), || "wrong password appended a log entry".into())?;
    golden("traces/login_bad_password.json", &(bad.dump() + "\n"));
    Ok(())
}

fn c5_company() -> Check {
    let m = corpus("company");
    let once = simulate(&m, &scenario("new_employee")).map_err(|e| e.to_string())?;
    let work_for = once.store("WORK_FOR").unwrap();
    ensure(work_for.columns == ["ID", "DNum"], || format!("WORK_FOR columns {:?}", work_for.columns))?;
    ensure(work_for.contains(&[Scalar::Int(1), Scalar::Int(3)]), || "(1, 3) not in WORK_FOR".into())?;

    let twice = simulate(&m, &scenario("new_employee_twice")).map_err(|e| e.to_string())?;
    ensure(twice.has_fired("Edup"), || "duplicate error event did not fire".into())?;
    ensure(twice.emitted == ["employee already works for the department"], || format!("emitted {:?}", twice.emitted))?;
    ensure(twice.store("WORK_FOR").unwrap().len() == 1, || "duplicate was stored".into())?;

    let s = scenario("manager");
    let trace = simulate(&m, &s).map_err(|e| e.to_string())?;
    let (_, seed) = s.seeds.iter().find(|(t, _)| t.as_str() == "MANAGER").unwrap();
    let before =
        TupleStore::with_tuples("MANAGER".into(), trace.store("MANAGER").unwrap().columns.clone(), seed.clone())
            .map_err(|e| e.to_string())?;
    let new = vec![Scalar::Int(1), Scalar::Int(3), Scalar::Str("2024-01-01".into())];
    let direct = before.add_member(new.clone()).map_err(|e| e.to_string())?;
    let copied = before.new_version_copy(new).map_err(|e| e.to_string())?;
    let simulated = trace.store("MANAGER").unwrap();
    ensure(simulated.as_set() == direct.as_set(), || format!("simulated MANAGER {:?}", simulated.tuples()))?;
    ensure(copied.as_set() == direct.as_set(), || "new_version_copy differs from add_member".into())
}

fn c6_arith() -> Check {
    let trace = simulate(&corpus("arith"), &scenario("arith")).map_err(|e| e.to_string())?;
    let six = Value::Scalar(Scalar::Int(6));
    ensure(trace.created.iter().any(|c| c.value == six), || format!("created {:?}", trace.created))
}

fn c7_sets() -> Check {
    let m = corpus("set");
    let s = scenario("set_add");
    let trace = simulate(&m, &s).map_err(|e| e.to_string())?;
    let ids = trace.fired_ids();
    ensure(ids[..9] == ["E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9"], || format!("fired {ids:?}"))?;

    let op_in = |events: std::ops::RangeInclusive<u32>, op: Op| {
        events.into_iter().any(|i| {
            m.event(&format!("E{i}")).unwrap().region.iter().any(|a| m.action(a.as_str()).unwrap().op == Some(op))
        })
    };
    ensure(op_in(1..=6, Op::Insert), || "no insert in E1..E6".into())?;
    ensure(!op_in(1..=6, Op::Retrieve), || "retrieve inside E1..E6".into())?;
    ensure(op_in(7..=9, Op::Retrieve), || "no retrieve in E7..E9".into())?;

    let seeded = s.seeds.iter().find(|(t, _)| t.as_str() == "Numbers").unwrap().1.len();
    let after = trace.store("Numbers").unwrap().len();
    ensure(after == seeded + 1, || format!("extension went from {seeded} to {after}"))?;

    let nodes: BTreeSet<&str> = m.actions.iter().map(|a| a.id.as_str()).collect();
    for f in &trace.fired {
        let region = &m.event(f.event.as_str()).unwrap().region;
        ensure(region.iter().all(|a| nodes.contains(a.as_str())), || format!("{} leaves the model", f.event))?;
    }
    Ok(())
}

fn c8_cardinality() -> Check {
    let trace = simulate(&corpus("marriage"), &scenario("marriage")).map_err(|e| e.to_string())?;
    let report = cardinality_check(&trace, &project(&corpus("marriage")).unwrap());
    ensure(report.violations.iter().any(|v| v.subject == "MARRIAGE"), || format!("marriage: {report}"))?;

    let m = corpus("borrow");
    let trace = simulate(&m, &scenario("borrow")).map_err(|e| e.to_string())?;
    let one_n = trace.store("BORROWS_S").unwrap();
    let students: BTreeSet<&Scalar> = one_n.tuples().iter().map(|t| &t[0]).collect();
    ensure(students.len() < one_n.len(), || "scenario never repeats a student".into())?;
    let report = cardinality_check(&trace, &project(&m).unwrap());
    ensure(report.violations.iter().all(|v| v.subject != "BORROWS_S"), || format!("1-n flagged: {report}"))?;
    ensure(report.violations.iter().any(|v| v.subject == "BORROWS_D"), || format!("1-1 missed: {report}"))
}

fn c9_exports() -> Check {
    for name in CORPUS {
        let m = corpus(name);
        ensure(to_dot(&m) == to_dot(&m), || format!("{name}: DOT differs between runs"))?;
    }
    let schema = project(&corpus("company")).map_err(|e| e.to_string())?;
    let sql = to_sql(&schema).map_err(|e| e.to_string())?.to_string();
    ensure(sql == to_sql(&schema).unwrap().to_string(), || "SQL differs between runs".into())?;
    golden("sql/company.sql", &sql);

    let tables = sql.matches("CREATE TABLE ").count();
    ensure(tables == 7, || format!("{tables} tables"))?;
    let keys: BTreeMap<String, BTreeSet<String>> = schema
        .entities
        .iter()
        .map(|e| (upper_snake(&e.name), e.keys().map(|k| upper_snake(&k.name)).collect()))
        .collect();
    for r in &schema.relationships {
        let table = upper_snake(&r.name);
        let stmt =
            sql.split("\n\n").find(|s| s.starts_with(&format!("CREATE TABLE {table} ("))).ok_or(table.clone())?;
        let mut targets = BTreeSet::new();
        for line in stmt.lines().filter(|l| l.contains("FOREIGN KEY")) {
            let (_, rest) = line.split_once("REFERENCES ").unwrap();
            let (entity, cols) = rest.split_once(" (").unwrap();
            let col = cols.trim_end_matches([',', ')', ';', '\n']).trim_end_matches(')');
            ensure(keys.get(entity).is_some_and(|k| k.contains(col)), || format!("{table}: bad reference {line}"))?;
            targets.insert(entity.to_owned());
        }
        let wanted: BTreeSet<String> = r.participants.iter().map(|p| upper_snake(p)).collect();
        ensure(targets == wanted, || format!("{table} references {targets:?}"))?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("1 projection of login and company", c1_projection),
        ("2 simplification laws (corpus + 120 generated)", c2_simplification),
        ("3 parse/print round trip (corpus + 120 generated)", c3_round_trip),
        ("4 login dynamics", c4_login),
        ("5 company dynamics", c5_company),
        ("6 arithmetic creates 6", c6_arith),
        ("7 set add and retrieve", c7_sets),
        ("8 cardinality", c8_cardinality),
        ("9 DOT and SQL exports", c9_exports),
    ];
    let failed: Vec<&str> = criteria.iter().filter(|(label, f)| !run(label, *f)).map(|(l, _)| *l).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
