use std::fmt::Write;

use crate::ir::{Model, ModelIndex, Thimac, Variety};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Render a model as a Graphviz digraph. Thimacs become nested clusters,
/// actions become nodes labeled by kind.
pub fn to_dot(model: &Model) -> String {
    let idx = model.index();
    let name = if model.name.is_empty() { "tm" } else { model.name.as_str() };
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    out.push_str("    compound=true;\n    node [shape=box, fontsize=10];\n");
    if let Some(level) = model.level {
        writeln!(out, "    label={};", quote(level.as_str())).unwrap();
    }
    for root in model.roots() {
        cluster(&mut out, &idx, root, 1);
    }
    for arc in &model.arcs {
        let mut attrs = Vec::new();
        if arc.variety == Variety::Trigger {
            attrs.push("style=dashed".to_owned());
        }
        if arc.bulk {
            attrs.push("penwidth=2".to_owned());
        }
        if let Some(g) = &arc.guard {
            attrs.push(format!("label={}", quote(g)));
        }
        write!(out, "    {} -> {}", quote(arc.from.as_str()), quote(arc.to.as_str())).unwrap();
        if !attrs.is_empty() {
            write!(out, " [{}]", attrs.join(", ")).unwrap();
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
    out
}

fn cluster(out: &mut String, idx: &ModelIndex<'_>, t: &Thimac, depth: usize) {
    let pad = "    ".repeat(depth);
    writeln!(out, "{pad}subgraph {} {{", quote(&format!("cluster_{}", t.id))).unwrap();
    writeln!(out, "{pad}    label={};", quote(&format!("{} ({})", t.name, t.role))).unwrap();
    if t.holds_store() {
        writeln!(out, "{pad}    style=bold;").unwrap();
    }
    for a in t.actions.iter().filter_map(|a| idx.action(a.as_str())) {
        let label = match &a.label {
            Some(l) => format!("{}\n{}", a.kind, l),
            None => a.kind.to_string(),
        };
        let shape = if a.storage { ", shape=cylinder" } else { "" };
        writeln!(out, "{pad}    {} [label={}{shape}];", quote(a.id.as_str()), quote(&label)).unwrap();
    }
    if t.actions.is_empty() {
        // Graphviz drops empty clusters; keep an invisible anchor.
        writeln!(out, "{pad}    {} [shape=point, style=invis];", quote(&format!("{}.", t.id))).unwrap();
    }
    for c in t.children.iter().filter_map(|c| idx.thimac(c.as_str())) {
        cluster(out, idx, c, depth + 1);
    }
    writeln!(out, "{pad}}}").unwrap();
}
