//! Graph file format: one JSON document with `entities` and `edges`
//! arrays, both in a stable sort order so equal graphs serialize to
//! identical bytes.

use serde::{Deserialize, Serialize};

use super::{Edge, EntityData, EntityId, OntologyError, OntologyGraph, Relation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GraphFile {
    schema: u32,
    entities: Vec<EntityRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
struct EntityRecord {
    local_id: String,
    #[serde(flatten)]
    data: EntityData,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    source: String,
    relation: Relation,
    target: String,
}

impl OntologyGraph {
    /// Serializes to the graph file format. Deterministic: entities are
    /// sorted by (kind, local id) and edges by (source, relation,
    /// target), so two equal graphs produce identical bytes.
    pub fn to_json(&self) -> Vec<u8> {
        let file = GraphFile {
            schema: SCHEMA_VERSION,
            entities: self
                .entities()
                .map(|(id, data)| EntityRecord {
                    local_id: id.local_id.clone(),
                    data: data.clone(),
                })
                .collect(),
            edges: self
                .edges()
                .map(|e| EdgeRecord {
                    source: e.source.to_string(),
                    relation: e.relation,
                    target: e.target.to_string(),
                })
                .collect(),
        };
        let mut bytes = serde_json::to_vec_pretty(&file).expect("graph serialization");
        bytes.push(b'\n');
        bytes
    }

    /// Parses a graph file. Structural problems (bad JSON, wrong
    /// schema version, duplicate ids) are format errors; semantic
    /// problems such as dangling edges load fine and are left for
    /// [`OntologyGraph::validate`] to report.
    pub fn from_json(bytes: &[u8]) -> Result<Self, OntologyError> {
        let file: GraphFile = serde_json::from_slice(bytes).map_err(|e| OntologyError::Format {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.schema != SCHEMA_VERSION {
            return Err(OntologyError::Format {
                line: 0,
                column: 0,
                message: format!(
                    "unsupported schema version {} (expected {})",
                    file.schema, SCHEMA_VERSION
                ),
            });
        }
        let mut graph = OntologyGraph::new();
        for record in file.entities {
            let id = EntityId::new(record.data.kind(), record.local_id);
            if graph.entities.insert(id.clone(), record.data).is_some() {
                return Err(OntologyError::Format {
                    line: 0,
                    column: 0,
                    message: format!("duplicate entity id `{id}`"),
                });
            }
        }
        for record in file.edges {
            graph.edges.insert(Edge {
                source: record.source.parse()?,
                relation: record.relation,
                target: record.target.parse()?,
            });
        }
        Ok(graph)
    }
}
