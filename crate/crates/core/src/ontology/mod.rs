//! The workforce demand ontology: five entity kinds and four typed
//! relations.
//!
//! Demand drivers never link to industry titles directly; the only
//! path runs through a workforce segment (`Driver -DRIVES-> Segment
//! -MAPS_TO-> IndustryTitle`), and skills hang off titles via
//! `REQUIRES`. Edge insertion enforces the relation signatures, and
//! [`OntologyGraph::validate`] re-checks everything so graphs loaded
//! from disk can be audited before use.

mod serial;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use serial::SCHEMA_VERSION;

/// The five entity kinds. Ordering is the serialization sort order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Workforce,
    Segment,
    IndustryTitle,
    Driver,
    Skill,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Workforce => "workforce",
            Self::Segment => "segment",
            Self::IndustryTitle => "industry_title",
            Self::Driver => "driver",
            Self::Skill => "skill",
        }
    }
}

impl FromStr for EntityKind {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, OntologyError> {
        match s {
            "workforce" => Ok(Self::Workforce),
            "segment" => Ok(Self::Segment),
            "industry_title" => Ok(Self::IndustryTitle),
            "driver" => Ok(Self::Driver),
            "skill" => Ok(Self::Skill),
            other => Err(OntologyError::Format {
                line: 0,
                column: 0,
                message: format!("unknown entity kind `{other}`"),
            }),
        }
    }
}

/// Graph-wide entity identifier: kind plus an opaque local id.
///
/// Renders as `kind:local_id`, e.g. `driver:cloud-computing`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    pub kind: EntityKind,
    pub local_id: String,
}

impl EntityId {
    pub fn new(kind: EntityKind, local_id: impl Into<String>) -> Self {
        Self {
            kind,
            local_id: local_id.into(),
        }
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.local_id)
    }
}

impl FromStr for EntityId {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, OntologyError> {
        let (kind, local_id) = s.split_once(':').ok_or_else(|| OntologyError::Format {
            line: 0,
            column: 0,
            message: format!("entity id `{s}` is missing the `kind:` prefix"),
        })?;
        Ok(Self::new(kind.parse::<EntityKind>()?, local_id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKind {
    Core,
    Transformation,
}

/// How an attribute value entered the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    Matched,
}

/// Entity payloads, tagged by kind in the serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntityData {
    Workforce {
        name: String,
    },
    Segment {
        name: String,
        #[serde(default)]
        dimensions: BTreeMap<String, String>,
    },
    IndustryTitle {
        canonical_name: String,
        #[serde(default)]
        aliases: BTreeSet<String>,
    },
    Driver {
        name: String,
        driver_kind: DriverKind,
        #[serde(default)]
        definition_text: String,
        #[serde(default)]
        provenance: BTreeMap<String, Provenance>,
    },
    Skill {
        name: String,
    },
}

impl EntityData {
    pub fn kind(&self) -> EntityKind {
        match self {
            Self::Workforce { .. } => EntityKind::Workforce,
            Self::Segment { .. } => EntityKind::Segment,
            Self::IndustryTitle { .. } => EntityKind::IndustryTitle,
            Self::Driver { .. } => EntityKind::Driver,
            Self::Skill { .. } => EntityKind::Skill,
        }
    }

    pub fn display_name(&self) -> &str {
        match self {
            Self::Workforce { name }
            | Self::Segment { name, .. }
            | Self::Driver { name, .. }
            | Self::Skill { name } => name,
            Self::IndustryTitle { canonical_name, .. } => canonical_name,
        }
    }
}

/// An entity ready for insertion; the id kind always matches the payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: EntityId,
    pub data: EntityData,
}

impl Entity {
    pub fn new(local_id: impl Into<String>, data: EntityData) -> Self {
        Self {
            id: EntityId::new(data.kind(), local_id),
            data,
        }
    }

    pub fn workforce(local_id: impl Into<String>, name: impl Into<String>) -> Self {
        Self::new(local_id, EntityData::Workforce { name: name.into() })
    }

    pub fn segment(
        local_id: impl Into<String>,
        name: impl Into<String>,
        dimensions: BTreeMap<String, String>,
    ) -> Self {
        Self::new(
            local_id,
            EntityData::Segment {
                name: name.into(),
                dimensions,
            },
        )
    }

    /// Builds an industry title whose alias set always contains the
    /// canonical name itself.
    pub fn industry_title(
        local_id: impl Into<String>,
        canonical_name: impl Into<String>,
        aliases: impl IntoIterator<Item = String>,
    ) -> Self {
        let canonical_name = canonical_name.into();
        let mut aliases: BTreeSet<String> = aliases.into_iter().collect();
        aliases.insert(canonical_name.clone());
        Self::new(
            local_id,
            EntityData::IndustryTitle {
                canonical_name,
                aliases,
            },
        )
    }

    pub fn driver(
        local_id: impl Into<String>,
        name: impl Into<String>,
        driver_kind: DriverKind,
        definition_text: impl Into<String>,
    ) -> Self {
        Self::new(
            local_id,
            EntityData::Driver {
                name: name.into(),
                driver_kind,
                definition_text: definition_text.into(),
                provenance: BTreeMap::new(),
            },
        )
    }

    pub fn skill(local_id: impl Into<String>, name: impl Into<String>) -> Self {
        Self::new(local_id, EntityData::Skill { name: name.into() })
    }
}

/// The four relations and their endpoint signatures.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    HasSegment,
    MapsTo,
    Drives,
    Requires,
}

impl Relation {
    /// (source kind, target kind) this relation connects.
    pub fn signature(self) -> (EntityKind, EntityKind) {
        match self {
            Self::HasSegment => (EntityKind::Workforce, EntityKind::Segment),
            Self::MapsTo => (EntityKind::Segment, EntityKind::IndustryTitle),
            Self::Drives => (EntityKind::Driver, EntityKind::Segment),
            Self::Requires => (EntityKind::IndustryTitle, EntityKind::Skill),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HasSegment => "has_segment",
            Self::MapsTo => "maps_to",
            Self::Drives => "drives",
            Self::Requires => "requires",
        }
    }
}

/// A directed, typed edge. Duplicate triples collapse in the edge set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: EntityId,
    pub relation: Relation,
    pub target: EntityId,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.source, self.relation.as_str(), self.target)
    }
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("entity `{id}` already exists with different content")]
    DuplicateIdConflict { id: EntityId },
    #[error("edge endpoint `{id}` does not exist")]
    MissingEndpoint { id: EntityId },
    #[error("relation {relation:?} cannot connect {from_kind:?} to {to_kind:?}")]
    KindMismatch {
        relation: Relation,
        from_kind: EntityKind,
        to_kind: EntityKind,
    },
    #[error("drivers may not link directly to industry titles (`{from_id}` -> `{to_id}`)")]
    ForbiddenRelation { from_id: EntityId, to_id: EntityId },
    #[error("unknown entity `{id}`")]
    UnknownEntity { id: EntityId },
    #[error("graph format error at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },
}

/// One broken invariant found by [`OntologyGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingEndpoint { edge: Edge, id: EntityId },
    KindMismatch { edge: Edge },
    ForbiddenRelation { edge: Edge },
    EmptyDefinition { id: EntityId },
    EmptyName { id: EntityId },
    CanonicalAliasMissing { id: EntityId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingEndpoint { edge, id } => {
                write!(f, "edge `{edge}` references missing entity `{id}`")
            }
            Self::KindMismatch { edge } => {
                write!(f, "edge `{edge}` violates its relation signature")
            }
            Self::ForbiddenRelation { edge } => {
                write!(f, "edge `{edge}` links a driver directly to an industry title")
            }
            Self::EmptyDefinition { id } => {
                write!(f, "transformation driver `{id}` has no definition text")
            }
            Self::EmptyName { id } => write!(f, "entity `{id}` has an empty name"),
            Self::CanonicalAliasMissing { id } => {
                write!(f, "industry title `{id}` does not list its canonical name as an alias")
            }
        }
    }
}

/// Entity set plus typed edge set.
///
/// Mutation requires exclusive access; queries borrow immutably and
/// are safe to run concurrently on a shared snapshot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OntologyGraph {
    entities: BTreeMap<EntityId, EntityData>,
    edges: BTreeSet<Edge>,
}

impl OntologyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an entity. Re-adding identical content is a no-op;
    /// re-using an id with different content is a conflict.
    pub fn add_entity(&mut self, entity: Entity) -> Result<(), OntologyError> {
        match self.entities.get(&entity.id) {
            None => {
                self.entities.insert(entity.id, entity.data);
                Ok(())
            }
            Some(existing) if *existing == entity.data => Ok(()),
            Some(_) => Err(OntologyError::DuplicateIdConflict { id: entity.id }),
        }
    }

    /// Replaces an entity's content unconditionally. For pipeline-owned
    /// entities whose attributes are refreshed between runs.
    pub fn upsert_entity(&mut self, entity: Entity) {
        self.entities.insert(entity.id, entity.data);
    }

    /// Inserts an edge after checking both endpoints and the relation
    /// signature. Any attempted driver-to-title link is rejected
    /// regardless of relation.
    pub fn add_edge(
        &mut self,
        source: &EntityId,
        relation: Relation,
        target: &EntityId,
    ) -> Result<(), OntologyError> {
        for id in [source, target] {
            if !self.entities.contains_key(id) {
                return Err(OntologyError::MissingEndpoint { id: id.clone() });
            }
        }
        if source.kind == EntityKind::Driver && target.kind == EntityKind::IndustryTitle {
            return Err(OntologyError::ForbiddenRelation {
                from_id: source.clone(),
                to_id: target.clone(),
            });
        }
        let (want_source, want_target) = relation.signature();
        if source.kind != want_source || target.kind != want_target {
            return Err(OntologyError::KindMismatch {
                relation,
                from_kind: source.kind,
                to_kind: target.kind,
            });
        }
        self.edges.insert(Edge {
            source: source.clone(),
            relation,
            target: target.clone(),
        });
        Ok(())
    }

    pub fn entity(&self, id: &EntityId) -> Option<&EntityData> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = (&EntityId, &EntityData)> {
        self.entities.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.entities.contains_key(id)
    }

    /// Derives a local id from a display name: lowercased, words joined
    /// by `-`, with a numeric suffix when the slug is already taken by
    /// another entity of the same kind.
    pub fn unique_local_id(&self, kind: EntityKind, name: &str) -> String {
        let base = slugify(name);
        let mut candidate = base.clone();
        let mut n = 1;
        while self.entities.contains_key(&EntityId::new(kind, candidate.clone())) {
            n += 1;
            candidate = format!("{base}-{n}");
        }
        candidate
    }

    fn require_driver(&self, driver_id: &EntityId) -> Result<(), OntologyError> {
        match self.entities.get(driver_id) {
            Some(data) if data.kind() == EntityKind::Driver => Ok(()),
            _ => Err(OntologyError::UnknownEntity {
                id: driver_id.clone(),
            }),
        }
    }

    /// Industry titles reachable from a driver through its segments,
    /// sorted by canonical name (local id breaks ties).
    pub fn titles_for_driver(&self, driver_id: &EntityId) -> Result<Vec<EntityId>, OntologyError> {
        self.require_driver(driver_id)?;
        let mut titles = BTreeSet::new();
        for drives in self.edges_from(driver_id, Relation::Drives) {
            for maps in self.edges_from(&drives.target, Relation::MapsTo) {
                titles.insert(maps.target.clone());
            }
        }
        Ok(self.sort_by_name(titles))
    }

    /// Skills required by any title reachable from a driver.
    pub fn skills_for_driver(&self, driver_id: &EntityId) -> Result<Vec<EntityId>, OntologyError> {
        self.require_driver(driver_id)?;
        let mut skills = BTreeSet::new();
        for drives in self.edges_from(driver_id, Relation::Drives) {
            for maps in self.edges_from(&drives.target, Relation::MapsTo) {
                for requires in self.edges_from(&maps.target, Relation::Requires) {
                    skills.insert(requires.target.clone());
                }
            }
        }
        Ok(self.sort_by_name(skills))
    }

    fn edges_from<'a>(
        &'a self,
        source: &'a EntityId,
        relation: Relation,
    ) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.relation == relation && &e.source == source)
    }

    fn sort_by_name(&self, ids: BTreeSet<EntityId>) -> Vec<EntityId> {
        let mut out: Vec<EntityId> = ids.into_iter().collect();
        out.sort_by(|a, b| {
            let name_a = self.entity(a).map(EntityData::display_name).unwrap_or("");
            let name_b = self.entity(b).map(EntityData::display_name).unwrap_or("");
            name_a.cmp(name_b).then_with(|| a.cmp(b))
        });
        out
    }

    /// Checks every graph invariant and returns all violations found.
    /// An empty result means the graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (id, data) in &self.entities {
            if data.display_name().trim().is_empty() {
                violations.push(Violation::EmptyName { id: id.clone() });
            }
            match data {
                EntityData::Driver {
                    driver_kind: DriverKind::Transformation,
                    definition_text,
                    ..
                } if definition_text.trim().is_empty() => {
                    violations.push(Violation::EmptyDefinition { id: id.clone() });
                }
                EntityData::IndustryTitle {
                    canonical_name,
                    aliases,
                } if !aliases.contains(canonical_name) => {
                    violations.push(Violation::CanonicalAliasMissing { id: id.clone() });
                }
                _ => {}
            }
        }
        for edge in &self.edges {
            let mut dangling = false;
            for id in [&edge.source, &edge.target] {
                if !self.entities.contains_key(id) {
                    violations.push(Violation::MissingEndpoint {
                        edge: edge.clone(),
                        id: id.clone(),
                    });
                    dangling = true;
                }
            }
            if dangling {
                continue;
            }
            if edge.source.kind == EntityKind::Driver
                && edge.target.kind == EntityKind::IndustryTitle
            {
                violations.push(Violation::ForbiddenRelation { edge: edge.clone() });
                continue;
            }
            let (want_source, want_target) = edge.relation.signature();
            if edge.source.kind != want_source || edge.target.kind != want_target {
                violations.push(Violation::KindMismatch { edge: edge.clone() });
            }
        }
        violations
    }
}

/// Lowercase, alphanumeric words joined by hyphens.
pub fn slugify(name: &str) -> String {
    let mut slug = String::with_capacity(name.len());
    let mut pending = false;
    for c in name.chars() {
        if c.is_alphanumeric() {
            if pending && !slug.is_empty() {
                slug.push('-');
            }
            pending = false;
            for lower in c.to_lowercase() {
                slug.push(lower);
            }
        } else {
            pending = true;
        }
    }
    if slug.is_empty() {
        "unnamed".to_string()
    } else {
        slug
    }
}
