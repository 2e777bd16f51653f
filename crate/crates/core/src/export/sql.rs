use std::fmt;

use serde::Serialize;

use crate::ir::{Cardinality, ValueType};
use crate::passes::{Attribute, ERSchema, Entity, Relationship};

pub const DIALECT: &str = "generic SQL (CREATE TABLE, PRIMARY KEY, UNIQUE, FOREIGN KEY; TEXT and INTEGER)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DdlScript {
    /// One CREATE TABLE per entity, then one per relationship.
    pub statements: Vec<String>,
    pub dialect: &'static str,
}

impl fmt::Display for DdlScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "-- {}", self.dialect)?;
        for s in &self.statements {
            writeln!(f)?;
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("entity `{0}` has no key attribute")]
    NoKey(String),
    #[error("relationship `{relationship}` refers to unknown entity `{entity}`")]
    UnknownParticipant { relationship: String, entity: String },
    #[error("table `{table}` would have two columns named `{column}`")]
    DuplicateColumn { table: String, column: String },
}

/// `LogEntries` -> `LOG_ENTRIES`, `Start-date` -> `START_DATE`.
pub fn upper_snake(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    let mut prev_lower = false;
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            if c.is_ascii_uppercase() && prev_lower {
                out.push('_');
            }
            out.push(c.to_ascii_uppercase());
            prev_lower = c.is_ascii_lowercase() || c.is_ascii_digit();
        } else {
            if !out.ends_with('_') && !out.is_empty() {
                out.push('_');
            }
            prev_lower = false;
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

/// Reserved words that common engines reject as bare table or column names.
const RESERVED: &[&str] = &[
    "ALL",
    "AND",
    "ANY",
    "AS",
    "ASC",
    "BETWEEN",
    "BY",
    "CASE",
    "CHECK",
    "COLUMN",
    "CONSTRAINT",
    "CREATE",
    "CROSS",
    "CURRENT",
    "DATE",
    "DEFAULT",
    "DELETE",
    "DESC",
    "DISTINCT",
    "DROP",
    "ELSE",
    "END",
    "EXISTS",
    "FOR",
    "FOREIGN",
    "FROM",
    "FULL",
    "GRANT",
    "GROUP",
    "HAVING",
    "IN",
    "INDEX",
    "INNER",
    "INSERT",
    "INTO",
    "IS",
    "JOIN",
    "KEY",
    "LEFT",
    "LIKE",
    "NOT",
    "NULL",
    "OF",
    "ON",
    "OR",
    "ORDER",
    "OUTER",
    "PRIMARY",
    "REFERENCES",
    "RIGHT",
    "SELECT",
    "SET",
    "TABLE",
    "THEN",
    "TO",
    "UNION",
    "UNIQUE",
    "UPDATE",
    "USER",
    "VALUES",
    "WHEN",
    "WHERE",
    "WITH",
];

/// Double-quote `name` when it is a reserved word.
fn ident(name: &str) -> String {
    if RESERVED.contains(&name) {
        format!("\"{name}\"")
    } else {
        name.to_owned()
    }
}

fn idents(names: &[String]) -> String {
    names.iter().map(|n| ident(n)).collect::<Vec<_>>().join(", ")
}

fn sql_type(t: Option<ValueType>) -> &'static str {
    match t {
        Some(ValueType::Int) => "INTEGER",
        _ => "TEXT",
    }
}

struct Column {
    name: String,
    ty: &'static str,
    not_null: bool,
}

struct Table {
    name: String,
    columns: Vec<Column>,
    primary: Vec<String>,
    unique: Vec<String>,
    foreign: Vec<(Vec<String>, String, Vec<String>)>,
}

impl Table {
    fn new(name: &str) -> Self {
        Table {
            name: upper_snake(name),
            columns: Vec::new(),
            primary: Vec::new(),
            unique: Vec::new(),
            foreign: Vec::new(),
        }
    }

    fn push(&mut self, name: String, ty: &'static str, not_null: bool) -> Result<(), ExportError> {
        if self.columns.iter().any(|c| c.name == name) {
            return Err(ExportError::DuplicateColumn { table: self.name.clone(), column: name });
        }
        self.columns.push(Column { name, ty, not_null });
        Ok(())
    }

    fn render(&self) -> String {
        let mut lines: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("    {} {}{}", ident(&c.name), c.ty, if c.not_null { " NOT NULL" } else { "" }))
            .collect();
        lines.push(format!("    PRIMARY KEY ({})", idents(&self.primary)));
        if !self.unique.is_empty() {
            lines.push(format!("    UNIQUE ({})", idents(&self.unique)));
        }
        for (cols, table, keys) in &self.foreign {
            lines.push(format!("    FOREIGN KEY ({}) REFERENCES {} ({})", idents(cols), ident(table), idents(keys)));
        }
        format!("CREATE TABLE {} (\n{}\n);", ident(&self.name), lines.join(",\n"))
    }
}

fn keys(e: &Entity) -> Result<Vec<&Attribute>, ExportError> {
    let keys: Vec<&Attribute> = e.keys().collect();
    if keys.is_empty() {
        return Err(ExportError::NoKey(e.name.clone()));
    }
    Ok(keys)
}

fn entity_table(e: &Entity) -> Result<Table, ExportError> {
    let mut t = Table::new(&e.name);
    t.primary = keys(e)?.iter().map(|k| upper_snake(&k.name)).collect();
    for a in &e.attributes {
        t.push(upper_snake(&a.name), sql_type(a.value_type), a.is_key)?;
    }
    Ok(t)
}

fn relationship_table(schema: &ERSchema, r: &Relationship) -> Result<Table, ExportError> {
    let mut t = Table::new(&r.name);
    let participants: Vec<&Entity> = r
        .participants
        .iter()
        .map(|p| {
            schema
                .entity(p)
                .ok_or_else(|| ExportError::UnknownParticipant { relationship: r.name.clone(), entity: p.clone() })
        })
        .collect::<Result<_, _>>()?;
    let mut all_keys: Vec<&Attribute> = Vec::new();
    for e in &participants {
        all_keys.extend(keys(e)?);
    }
    // Participant key columns; prefix with the entity name only on a clash.
    let mut per_entity: Vec<Vec<String>> = Vec::new();
    for e in &participants {
        let mut cols = Vec::new();
        for k in keys(e)? {
            let plain = upper_snake(&k.name);
            let clashes = all_keys.iter().filter(|o| upper_snake(&o.name) == plain).count() > 1;
            let name = if clashes { format!("{}_{}", upper_snake(&e.name), plain) } else { plain };
            t.push(name.clone(), sql_type(k.value_type), true)?;
            cols.push(name);
        }
        per_entity.push(cols);
    }
    for a in &r.attributes {
        t.push(upper_snake(&a.name), sql_type(a.value_type), a.is_key)?;
    }
    let binary = per_entity.len() == 2;
    match r.cardinality {
        Some(Cardinality::OneToMany) if binary => t.primary = per_entity[1].clone(),
        Some(Cardinality::ManyToOne) if binary => t.primary = per_entity[0].clone(),
        Some(Cardinality::OneToOne) if binary => {
            t.primary = per_entity[0].clone();
            t.unique = per_entity[1].clone();
        }
        _ => t.primary = per_entity.concat(),
    }
    // Key attributes declared on the relationship itself join the key.
    for a in r.attributes.iter().filter(|a| a.is_key) {
        t.primary.push(upper_snake(&a.name));
    }
    for (e, cols) in participants.iter().zip(&per_entity) {
        let targets = keys(e)?.iter().map(|k| upper_snake(&k.name)).collect();
        t.foreign.push((cols.clone(), upper_snake(&e.name), targets));
    }
    Ok(t)
}

/// Standard ER-to-relational mapping. Entities come first so every foreign
/// key target is already defined.
pub fn to_sql(schema: &ERSchema) -> Result<DdlScript, ExportError> {
    let mut statements = Vec::new();
    for e in &schema.entities {
        statements.push(entity_table(e)?.render());
    }
    for r in &schema.relationships {
        statements.push(relationship_table(schema, r)?.render());
    }
    Ok(DdlScript { statements, dialect: DIALECT })
}
