//! Text emitters: Graphviz DOT for models and relational DDL for ER schemas.

mod dot;
mod sql;

pub use dot::to_dot;
pub use sql::{to_sql, upper_snake, DdlScript, ExportError, DIALECT};
