//! Simplification passes and the ER projection.

mod project;
mod simplify;

use serde::{Deserialize, Serialize};

use crate::ir::{Level, Model, Role, ThimacId};
use crate::validate::ValidationReport;

pub use project::{project_er, Attribute, ERSchema, Entity, Relationship};
pub use simplify::simplify;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassConfig {
    pub level: Level,
    /// Roles whose thimacs are dropped at S3.
    pub elimination_set: Vec<Role>,
}

impl PassConfig {
    pub fn new(level: Level) -> Self {
        PassConfig { level, elimination_set: vec![Role::Actor, Role::Message] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PassError {
    #[error("input model does not validate:\n{0}")]
    Invalid(ValidationReport),
    #[error("cannot project `{thimac}`: {message}")]
    Projection { thimac: ThimacId, message: String },
}

/// Simplify to S3 with the default elimination set, then project.
pub fn project(model: &Model) -> Result<ERSchema, PassError> {
    let simplified = simplify(model, &PassConfig::new(Level::S3))?;
    project_er(&simplified)
}
