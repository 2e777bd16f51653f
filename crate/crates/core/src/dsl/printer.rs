//! Canonical pretty-printer. Actions come before child thimacs and every arc
//! is printed once, at top level, with absolute ids.

use std::fmt::Write;

use crate::ir::{Model, ModelIndex, Step, Thimac, Variety, DEFAULT_MAX_ITERATIONS};

const HEADER: &str = "// canonical TM source";
const INDENT: &str = "    ";

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn print(model: &Model) -> String {
    let idx = model.index();
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    if !model.name.is_empty() {
        let _ = writeln!(out, "model {};", model.name);
    }
    if let Some(level) = model.level {
        let _ = writeln!(out, "level {level};");
    }
    for t in model.roots() {
        out.push('\n');
        print_thimac(&idx, t, 0, &mut out);
    }
    if !model.arcs.is_empty() {
        out.push('\n');
    }
    for arc in &model.arcs {
        let arrow = match (arc.variety, arc.bulk) {
            (Variety::Flow, false) => "->",
            (Variety::Flow, true) => "=>",
            (Variety::Trigger, _) => "~>",
        };
        let _ = write!(out, "{} {arrow} {}", arc.from, arc.to);
        if let Some(g) = &arc.guard {
            let _ = write!(out, " when {g}");
        }
        if arc.variety == Variety::Trigger && arc.bulk {
            out.push_str(" bulk");
        }
        out.push_str(";\n");
    }
    for ev in &model.events {
        out.push('\n');
        let _ = write!(out, "event {}", ev.id);
        if !ev.description.is_empty() {
            let _ = write!(out, " {}", quote(&ev.description));
        }
        if ev.halt {
            out.push_str(" halt");
        }
        let region: Vec<&str> = ev.region.iter().map(|a| a.as_str()).collect();
        if region.is_empty() {
            out.push_str(" {\n    region: ;\n}\n");
        } else {
            let _ = write!(out, " {{\n{INDENT}region: {};\n}}\n", region.join(", "));
        }
    }
    if let Some(ch) = &model.chronology {
        out.push_str("\nchronology {\n");
        print_steps(&ch.steps, 1, &mut out);
        out.push_str("}\n");
    }
    out
}

fn print_thimac(idx: &ModelIndex<'_>, t: &Thimac, depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    let _ = write!(out, "{pad}thimac {}", t.id.local());
    if t.name != t.id.local() {
        let _ = write!(out, " {}", quote(&t.name));
    }
    let _ = write!(out, " role={}", t.role);
    if t.storage {
        out.push_str(" store");
    }
    if t.key {
        out.push_str(" key");
    }
    if let Some(vt) = t.value_type {
        let _ = write!(out, " type={vt}");
    }
    if let Some(c) = t.cardinality {
        let _ = write!(out, " card={c}");
    }
    if let Some(cols) = &t.columns {
        let _ = write!(out, " cols={}", quote(&cols.join(",")));
    }
    let children: Vec<&Thimac> = t.children.iter().filter_map(|c| idx.thimac(c.as_str())).collect();
    if t.actions.is_empty() && children.is_empty() {
        out.push_str(" {}\n");
        return;
    }
    out.push_str(" {\n");
    let inner = INDENT.repeat(depth + 1);
    for a in t.actions.iter().filter_map(|a| idx.action(a.as_str())) {
        let _ = write!(out, "{inner}{}", a.kind);
        if a.id.local() != a.kind.as_str() {
            let _ = write!(out, " {}", a.id.local());
        }
        if let Some(l) = &a.label {
            let _ = write!(out, " {}", quote(l));
        }
        if a.storage {
            out.push_str(" store");
        }
        if let Some(op) = a.op {
            let _ = write!(out, " op={op}");
        }
        if let Some(c) = &a.column {
            let _ = write!(out, " col={}", quote(c));
        }
        out.push_str(";\n");
    }
    for c in children {
        print_thimac(idx, c, depth + 1, out);
    }
    let _ = writeln!(out, "{pad}}}");
}

fn print_steps(steps: &[Step], depth: usize, out: &mut String) {
    let pad = INDENT.repeat(depth);
    for s in steps {
        match s {
            Step::Event { event } => {
                let _ = writeln!(out, "{pad}{event};");
            }
            Step::Repeat { body, until, max_iterations } => {
                let _ = write!(out, "{pad}repeat");
                if *max_iterations != DEFAULT_MAX_ITERATIONS {
                    let _ = write!(out, " max={max_iterations}");
                }
                out.push_str(" {\n");
                print_steps(body, depth + 1, out);
                let _ = writeln!(out, "{pad}}} until {until};");
            }
        }
    }
}
