//! `occumap populate`: the semi-automatic review loop.
//!
//! First pass (no `--review`): read the match output, consolidate, and
//! write a review file in which every (driver, segment, title) link is
//! `proposed`. Nothing is committed. Second pass (`--review <file>`):
//! commit the links marked `accepted` into the ontology graph, validate
//! it, and write it atomically.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use sha2::{Digest, Sha256};

use occumap::consolidate::{consolidate, top_n, CompanyLookup, OccupationGroup};
use occumap::matcher::MatchResult;
use occumap::ontology::{
    slugify, DriverKind, Entity, EntityData, EntityId, EntityKind, OntologyGraph, Provenance,
    Relation,
};
use occumap::report::matches_from_jsonl;

use super::DriverDefinition;
use crate::config::RunConfig;
use crate::errors::StageError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewLink {
    pub driver_slug: String,
    pub segment: String,
    pub canonical_title: String,
    pub status: ReviewStatus,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReviewStatus {
    Proposed,
    Accepted,
    Rejected,
}

impl ReviewStatus {
    fn parse(s: &str) -> Result<Self, StageError> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "accepted" => Ok(Self::Accepted),
            "rejected" => Ok(Self::Rejected),
            other => Err(StageError::data(format!(
                "review status `{other}` is not proposed/accepted/rejected"
            ))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Accepted => "accepted",
            Self::Rejected => "rejected",
        }
    }
}

pub fn run(config: &RunConfig, review: Option<&Path>) -> Result<(), StageError> {
    let drivers = super::load_drivers(config.drivers_dir()?)?;
    let postings = super::load_corpus(config)?;
    let companies: CompanyLookup = postings
        .iter()
        .map(|p| (p.posting_id.clone(), p.company.clone()))
        .collect();
    let rules = config.load_rules()?;

    // Re-derive the consolidated groups from the match files.
    let mut driver_matches: BTreeMap<String, Vec<MatchResult>> = BTreeMap::new();
    for driver in &drivers {
        let path = config.out_dir.join(format!("{}.matches.jsonl", driver.slug));
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        driver_matches.insert(driver.slug.clone(), matches_from_jsonl(&text)?);
    }
    if driver_matches.is_empty() && !drivers.is_empty() {
        return Err(StageError::data(
            "no match output found (run `occumap match` first)",
        ));
    }

    let run_id = config
        .run_id
        .clone()
        .unwrap_or_else(|| derive_run_id(&driver_matches));
    let mut groups: BTreeMap<String, Vec<OccupationGroup>> = BTreeMap::new();
    for (slug, matches) in &driver_matches {
        let consolidated = consolidate(matches, &companies, &rules)?;
        groups.insert(slug.clone(), top_n(&consolidated, config.top_k).to_vec());
    }

    match review {
        None => propose(config, &drivers, &groups, &run_id),
        Some(path) => commit(config, &drivers, &groups, &run_id, path),
    }
}

fn segment_name(driver_name: &str, run_id: &str) -> String {
    format!("{driver_name} matched cohort {run_id}")
}

/// Run id derived from the match output itself, so re-running the
/// stage on unchanged inputs commits the same segment ids.
fn derive_run_id(driver_matches: &BTreeMap<String, Vec<MatchResult>>) -> String {
    let mut hasher = Sha256::new();
    for (slug, matches) in driver_matches {
        for m in matches {
            hasher.update(slug.as_bytes());
            hasher.update(m.posting_id.as_bytes());
            hasher.update(m.score.to_string().as_bytes());
            hasher.update([0x1f]);
        }
    }
    let digest = hasher.finalize();
    digest[..4].iter().map(|b| format!("{b:02x}")).collect()
}

fn propose(
    config: &RunConfig,
    drivers: &[DriverDefinition],
    groups: &BTreeMap<String, Vec<OccupationGroup>>,
    run_id: &str,
) -> Result<(), StageError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["driver", "segment", "canonical_title", "status", "note"])
        .map_err(|e| StageError::data(e.to_string()))?;
    let mut proposed = 0usize;
    for driver in drivers {
        let Some(driver_groups) = groups.get(&driver.slug) else {
            continue;
        };
        for group in driver_groups {
            writer
                .write_record([
                    driver.slug.as_str(),
                    &segment_name(&driver.name, run_id),
                    &group.canonical_title,
                    ReviewStatus::Proposed.as_str(),
                    "",
                ])
                .map_err(|e| StageError::data(e.to_string()))?;
            proposed += 1;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| StageError::data(e.to_string()))?;
    let path = config.review_path();
    super::write_atomic(&path, &bytes)?;
    println!(
        "populate: proposed {proposed} links in `{}`; edit statuses to `accepted` and re-run with --review",
        path.display()
    );
    Ok(())
}

fn read_review(path: &Path) -> Result<Vec<ReviewLink>, StageError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        StageError::data(format!("cannot read review file `{}`: {e}", path.display()))
    })?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut links = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| StageError::data(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        links.push(ReviewLink {
            driver_slug: field(0),
            segment: field(1),
            canonical_title: field(2),
            status: ReviewStatus::parse(&field(3))?,
            note: field(4),
        });
    }
    Ok(links)
}

fn commit(
    config: &RunConfig,
    drivers: &[DriverDefinition],
    groups: &BTreeMap<String, Vec<OccupationGroup>>,
    run_id: &str,
    review_path: &Path,
) -> Result<(), StageError> {
    let links = read_review(review_path)?;
    let known_slugs: BTreeSet<&str> = drivers.iter().map(|d| d.slug.as_str()).collect();
    for link in &links {
        if !known_slugs.contains(link.driver_slug.as_str()) {
            return Err(StageError::data(format!(
                "review references unknown driver `{}`",
                link.driver_slug
            )));
        }
        let titles = groups
            .get(&link.driver_slug)
            .map(|gs| gs.iter().any(|g| g.canonical_title == link.canonical_title))
            .unwrap_or(false);
        if !titles {
            return Err(StageError::data(format!(
                "review references unknown title `{}` for driver `{}`",
                link.canonical_title, link.driver_slug
            )));
        }
    }

    let ontology_path = config.ontology_path();
    let mut graph = if ontology_path.exists() {
        OntologyGraph::from_json(&std::fs::read(&ontology_path)?)?
    } else {
        OntologyGraph::new()
    };

    // Drivers always exist in the graph, accepted links or not.
    for driver in drivers {
        let provenance: BTreeMap<String, Provenance> = [
            ("name".to_string(), Provenance::Manual),
            ("definition_text".to_string(), Provenance::Manual),
        ]
        .into_iter()
        .collect();
        graph.upsert_entity(Entity::new(
            driver.slug.clone(),
            EntityData::Driver {
                name: driver.name.clone(),
                driver_kind: DriverKind::Transformation,
                definition_text: driver.definition.clone(),
                provenance,
            },
        ));
    }

    let mut committed = 0usize;
    for driver in drivers {
        let accepted: Vec<&ReviewLink> = links
            .iter()
            .filter(|l| l.driver_slug == driver.slug && l.status == ReviewStatus::Accepted)
            .collect();
        if accepted.is_empty() {
            continue;
        }
        let driver_id = EntityId::new(EntityKind::Driver, driver.slug.clone());
        let segment_local = format!("{}-cohort-{run_id}", driver.slug);
        let segment_id = EntityId::new(EntityKind::Segment, segment_local.clone());
        let dimensions: BTreeMap<String, String> = [
            ("cohort".to_string(), "matched".to_string()),
            ("run_id".to_string(), run_id.to_string()),
        ]
        .into_iter()
        .collect();
        graph.upsert_entity(Entity::segment(
            segment_local,
            segment_name(&driver.name, run_id),
            dimensions,
        ));
        graph.add_edge(&driver_id, Relation::Drives, &segment_id)?;

        let driver_groups = &groups[&driver.slug];
        for link in accepted {
            let group = driver_groups
                .iter()
                .find(|g| g.canonical_title == link.canonical_title)
                .expect("validated above");
            let title_local = slugify(&group.canonical_title);
            let title_id = EntityId::new(EntityKind::IndustryTitle, title_local.clone());
            // Raw member titles become aliases; merge with any aliases
            // an earlier run recorded.
            let mut aliases: BTreeSet<String> = member_titles(config, driver, group)?;
            if let Some(EntityData::IndustryTitle { aliases: existing, .. }) =
                graph.entity(&title_id)
            {
                aliases.extend(existing.iter().cloned());
            }
            graph.upsert_entity(Entity::industry_title(
                title_local,
                group.canonical_title.clone(),
                aliases,
            ));
            graph.add_edge(&segment_id, Relation::MapsTo, &title_id)?;
            committed += 1;
        }
    }

    let violations = graph.validate();
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(StageError::data(format!(
            "graph validation failed; nothing written:\n  {}",
            listed.join("\n  ")
        )));
    }
    super::write_atomic(&ontology_path, &graph.to_json())?;
    println!(
        "populate: committed {committed} accepted links; graph has {} entities and {} edges",
        graph.entity_count(),
        graph.edge_count()
    );
    Ok(())
}

/// Raw titles of the postings inside one group, for the alias set.
fn member_titles(
    config: &RunConfig,
    driver: &DriverDefinition,
    group: &OccupationGroup,
) -> Result<BTreeSet<String>, StageError> {
    let path = config.out_dir.join(format!("{}.matches.jsonl", driver.slug));
    let matches = matches_from_jsonl(&std::fs::read_to_string(path)?)?;
    Ok(matches
        .iter()
        .filter(|m| group.member_posting_ids.contains(&m.posting_id))
        .map(|m| m.title.clone())
        .collect())
}
