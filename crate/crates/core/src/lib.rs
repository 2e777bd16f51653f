//! Thinging-machine models: parse, validate, simplify, project onto ER
//! schemas, simulate events over tuple stores, and export DOT or SQL.
//!
//! ```
//! use tm_core::{dsl, passes, Level};
//!
//! let model = dsl::parse_str("thimac S role=generic { create; release; }  S.create -> S.release;").unwrap();
//! let s1 = passes::simplify(&model, &passes::PassConfig::new(Level::S1)).unwrap();
//! assert_eq!(s1.actions.len(), 1);
//! ```

pub mod dsl;
pub mod dynamics;
pub mod export;
pub mod ir;
pub mod passes;
pub mod sets;
pub mod validate;

pub use ir::{
    ActionId, ActionKind, ActionNode, Arc, ArcId, Cardinality, Chronology, Event, EventId, Level, Model, ModelIndex,
    Op, Role, Step, Thimac, ThimacId, ValueType, Variety,
};
pub use sets::{Scalar, SetError, Tuple, TupleStore};
pub use validate::{validate, validate_with, Rule, ValidateOptions, ValidationReport, Violation};
