use serde::{Deserialize, Serialize};

use crate::ir::{Cardinality, Model, ModelIndex, Role, Thimac, ThimacId, ValueType};

use super::PassError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub is_key: bool,
    pub value_type: Option<ValueType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    /// Thimac this entity was projected from.
    pub id: ThimacId,
    pub attributes: Vec<Attribute>,
}

impl Entity {
    pub fn keys(&self) -> impl Iterator<Item = &Attribute> {
        self.attributes.iter().filter(|a| a.is_key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub name: String,
    pub id: ThimacId,
    /// Entity names, in entity declaration order.
    pub participants: Vec<String>,
    pub attributes: Vec<Attribute>,
    pub cardinality: Option<Cardinality>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ERSchema {
    pub entities: Vec<Entity>,
    pub relationships: Vec<Relationship>,
}

impl ERSchema {
    pub fn entity(&self, name: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.name == name)
    }

    pub fn relationship(&self, name: &str) -> Option<&Relationship> {
        self.relationships.iter().find(|r| r.name == name)
    }

    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }
}

fn attributes(idx: &ModelIndex<'_>, t: &Thimac) -> Vec<Attribute> {
    t.children
        .iter()
        .filter_map(|c| idx.thimac(c.as_str()))
        .filter(|c| c.role == Role::Attribute)
        .map(|c| Attribute { name: c.name.clone(), is_key: c.key, value_type: c.value_type })
        .collect()
}

/// Nearest enclosing thimac (self included) with `role`.
fn enclosing<'m>(idx: &ModelIndex<'m>, thimac: &str, role: Role) -> Option<&'m Thimac> {
    idx.ancestors_or_self(thimac).into_iter().find(|t| t.role == role)
}

/// Map a simplified model onto entities and relationships. A relationship's
/// participants are the entities whose subtrees share an arc, in either
/// direction, with the relationship's subtree.
pub fn project_er(model: &Model) -> Result<ERSchema, PassError> {
    let idx = model.index();
    let mut schema = ERSchema::default();
    let entity_thimacs: Vec<&Thimac> = model.thimacs.iter().filter(|t| t.role == Role::Entity).collect();
    for t in &entity_thimacs {
        schema.entities.push(Entity { name: t.name.clone(), id: t.id.clone(), attributes: attributes(&idx, t) });
    }
    for rel in model.thimacs.iter().filter(|t| t.role == Role::Relationship) {
        let mut touched: Vec<&ThimacId> = Vec::new();
        for arc in &model.arcs {
            let (Some(from), Some(to)) = (idx.action(arc.from.as_str()), idx.action(arc.to.as_str())) else {
                continue;
            };
            for (mine, other) in [(from, to), (to, from)] {
                if !idx.is_within(mine.owner.as_str(), rel.id.as_str()) {
                    continue;
                }
                if let Some(e) = enclosing(&idx, other.owner.as_str(), Role::Entity) {
                    if !idx.is_within(e.id.as_str(), rel.id.as_str()) && !touched.contains(&&e.id) {
                        touched.push(&e.id);
                    }
                }
            }
        }
        let participants: Vec<String> =
            entity_thimacs.iter().filter(|e| touched.contains(&&e.id)).map(|e| e.name.clone()).collect();
        if participants.len() < 2 {
            return Err(PassError::Projection {
                thimac: rel.id.clone(),
                message: format!(
                    "a relationship needs at least 2 connected entities, found {}",
                    if participants.is_empty() { "none".to_owned() } else { participants.join(", ") }
                ),
            });
        }
        schema.relationships.push(Relationship {
            name: rel.name.clone(),
            id: rel.id.clone(),
            participants,
            attributes: attributes(&idx, rel),
            cardinality: rel.cardinality,
        });
    }
    Ok(schema)
}
