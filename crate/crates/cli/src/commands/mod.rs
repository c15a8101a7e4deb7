//! Pipeline stage implementations behind the subcommands.

pub mod embed;
pub mod ingest;
pub mod matchcmd;
pub mod populate;
pub mod report;

use std::path::Path;

use occumap::ingest::CleanPosting;
use occumap::ontology::slugify;

use crate::config::RunConfig;
use crate::errors::StageError;

/// A transformation initiative definition loaded from the drivers
/// directory: one `.txt` file per driver, file stem as the name.
#[derive(Debug, Clone)]
pub struct DriverDefinition {
    pub name: String,
    pub slug: String,
    pub definition: String,
}

/// Loads driver definitions sorted by name. Files that are not `.txt`
/// are ignored; an empty directory is a valid zero-driver run.
pub fn load_drivers(dir: &Path) -> Result<Vec<DriverDefinition>, StageError> {
    let entries = std::fs::read_dir(dir).map_err(|e| {
        StageError::usage(format!("cannot read drivers_dir `{}`: {e}", dir.display()))
    })?;
    let mut drivers = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(name) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let definition = std::fs::read_to_string(&path)?;
        drivers.push(DriverDefinition {
            name: name.to_string(),
            slug: slugify(name),
            definition: definition.trim().to_string(),
        });
    }
    drivers.sort_by(|a, b| a.name.cmp(&b.name));
    for pair in drivers.windows(2) {
        if pair[0].slug == pair[1].slug {
            return Err(StageError::usage(format!(
                "drivers `{}` and `{}` collide on slug `{}`",
                pair[0].name, pair[1].name, pair[0].slug
            )));
        }
    }
    Ok(drivers)
}

/// Loads the clean corpus written by the ingest stage.
pub fn load_corpus(config: &RunConfig) -> Result<Vec<CleanPosting>, StageError> {
    let path = config.corpus_path();
    let file = std::fs::File::open(&path).map_err(|e| {
        StageError::data(format!(
            "cannot open corpus `{}` (run `occumap ingest` first): {e}",
            path.display()
        ))
    })?;
    Ok(occumap::ingest::read_corpus(std::io::BufReader::new(file))?)
}

/// Writes a file through a temp sibling and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StageError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
