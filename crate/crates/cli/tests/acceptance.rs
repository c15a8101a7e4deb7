//! Acceptance suite: one test per release criterion, every tolerance
//! pinned in code. Run with `cargo test --test acceptance -- --nocapture`
//! to see one pass line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use occumap::consolidate::{canonical_title, consolidate, CompanyLookup, ConsolidationRules};
use occumap::embedding::{local_embed, EmbeddingVector};
use occumap::ingest::{
    build_corpus, content_key, deduplicate, is_allowed_char, normalize_text, RawPostingRecord,
};
use occumap::matcher::{cosine, rank_matches, MatchResult, SimilarityScore, VectorIndex};
use occumap::ontology::{DriverKind, Entity, EntityId, EntityKind, OntologyGraph, Relation};

use common::{assert_trees_identical, run_full_pipeline};

fn random_unit(rng: &mut ChaCha8Rng, dim: usize, tag: &str) -> EmbeddingVector {
    loop {
        let values: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        if let Ok(v) = EmbeddingVector::from_unnormalized(values, tag) {
            return v;
        }
    }
}

/// Neumaier-compensated dot product: f32 products are exact in f64 and
/// the compensated summation removes nearly all accumulation error, so
/// this serves as the extended-precision reference.
fn oracle_dot(u: &[f32], v: &[f32]) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for (&a, &b) in u.iter().zip(v) {
        let term = a as f64 * b as f64;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            compensation += (sum - t) + term;
        } else {
            compensation += (term - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

fn oracle_cosine(u: &[f32], v: &[f32]) -> f64 {
    oracle_dot(u, v) / (oracle_dot(u, u).sqrt() * oracle_dot(v, v).sqrt())
}

#[test]
fn criterion_1_cosine_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC05);
    for i in 0..10_000 {
        let dim = rng.gen_range(2..=1024);
        let u = random_unit(&mut rng, dim, "t");
        let v = random_unit(&mut rng, dim, "t");
        let got = cosine(&u, &v).unwrap().value();
        let want = oracle_cosine(u.values(), v.values());
        assert!(
            (got - want).abs() < 1e-9,
            "pair {i} (dim {dim}): {got} vs oracle {want}"
        );
    }

    let unit = |values: Vec<f32>| EmbeddingVector::from_unnormalized(values, "t").unwrap();
    let x = unit(vec![0.6, -0.8, 0.0]);
    assert!((cosine(&x, &x).unwrap().value() - 1.0).abs() < 1e-8);
    let e1 = unit(vec![1.0, 0.0]);
    let e2 = unit(vec![0.0, 1.0]);
    assert!(cosine(&e1, &e2).unwrap().value().abs() < 1e-8);
    let diag = unit(vec![1.0, 1.0]);
    assert!(
        (cosine(&diag, &e1).unwrap().value() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("criterion 1 (cosine oracle, 10k pairs, {elapsed:?}): PASS");
}

#[test]
fn criterion_2_ranking_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4A4E);
    for instance in 0..200 {
        let dim = rng.gen_range(4..=64);
        let count = rng.gen_range(0..=5_000);
        let mut index = VectorIndex::new("t", dim);
        let mut stored = Vec::with_capacity(count);
        for i in 0..count {
            let id = format!("p{i:05}");
            let v = random_unit(&mut rng, dim, "t");
            index.insert(&id, format!("title {i}"), &v).unwrap();
            stored.push((id, v));
        }
        let query = random_unit(&mut rng, dim, "t");
        let threshold = rng.gen_range(-0.1f64..0.5);
        let top_k = if rng.gen_bool(0.5) {
            Some(rng.gen_range(1..=25))
        } else {
            None
        };
        let got = rank_matches(&query, &index, threshold, top_k).unwrap();

        let mut want: Vec<(String, f64)> = stored
            .iter()
            .map(|(id, v)| (id.clone(), cosine(&query, v).unwrap().value()))
            .filter(|(_, s)| *s >= threshold)
            .collect();
        want.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(k) = top_k {
            want.truncate(k);
        }
        assert_eq!(got.len(), want.len(), "instance {instance}");
        for (g, (id, score)) in got.iter().zip(&want) {
            assert_eq!(&g.posting_id, id, "instance {instance}");
            assert_eq!(g.score.value(), *score, "instance {instance}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("criterion 2 (ranking oracle, 200 instances, {elapsed:?}): PASS");
}

#[test]
fn criterion_3_threshold_monotonicity_and_inclusivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7437);
    for _ in 0..50 {
        let dim = rng.gen_range(4..=32);
        let mut index = VectorIndex::new("t", dim);
        for i in 0..300 {
            let v = random_unit(&mut rng, dim, "t");
            index.insert(format!("p{i:03}"), "title", &v).unwrap();
        }
        let query = random_unit(&mut rng, dim, "t");
        let t1 = rng.gen_range(-0.5f64..0.5);
        let t2 = t1 + rng.gen_range(0.0f64..0.5);
        let loose = rank_matches(&query, &index, t1, None).unwrap();
        let tight = rank_matches(&query, &index, t2, None).unwrap();
        let loose_ids: BTreeSet<&str> = loose.iter().map(|m| m.posting_id.as_str()).collect();
        assert!(tight.len() <= loose.len());
        assert!(tight.iter().all(|m| loose_ids.contains(m.posting_id.as_str())));
    }

    // A posting scoring exactly at the threshold is retained.
    let query = EmbeddingVector::from_unnormalized(vec![1.0, 0.0], "t").unwrap();
    let entry = EmbeddingVector::from_unnormalized(vec![0.6, 0.8], "t").unwrap();
    let mut index = VectorIndex::new("t", 2);
    index.insert("edge", "edge", &entry).unwrap();
    let exact = cosine(&query, &entry).unwrap().value();
    let kept = rank_matches(&query, &index, exact, None).unwrap();
    assert_eq!(kept.len(), 1, "boundary score must be retained");

    // 0.70 is the wired default, in the matcher and in the run config.
    assert_eq!(occumap::matcher::DEFAULT_THRESHOLD, 0.70);
    assert_eq!(occumap_cli::config::RunConfig::default().threshold, 0.70);
    println!("criterion 3 (threshold monotonicity, inclusive 0.70 default): PASS");
}

#[test]
fn criterion_4_ingest_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1135);

    // normalize_text idempotence over 10,000 randomized inputs.
    let alphabet: Vec<char> =
        "aBcdEfgh ij0189.,'-–!&;#\t\u{0}\u{FFFD}éñΩ\"<>()/\\".chars().collect();
    for _ in 0..10_000 {
        let len = rng.gen_range(0..60);
        let text: String = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect();
        let once = normalize_text(&text);
        assert_eq!(normalize_text(&once), once, "input {text:?}");
        assert!(once.chars().all(is_allowed_char), "input {text:?}");
    }

    // deduplicate idempotence over 10,000 randomized records.
    let record = |t: u32, d: u32| RawPostingRecord {
        source_id: "s".into(),
        title: format!("title {t}"),
        description: format!("desc {d}"),
        company: None,
        location: None,
        posted_date: None,
        url: None,
        source_portal: None,
    };
    let mut remaining = 10_000u32;
    while remaining > 0 {
        let batch = rng.gen_range(1..=200).min(remaining);
        let records: Vec<RawPostingRecord> = (0..batch)
            .map(|_| record(rng.gen_range(0..20), rng.gen_range(0..20)))
            .collect();
        remaining -= batch;
        let once = deduplicate(records);
        let snapshot: Vec<(String, String)> = once
            .iter()
            .map(|r| (r.title.clone(), r.description.clone()))
            .collect();
        let twice = deduplicate(once);
        let snapshot_2: Vec<(String, String)> = twice
            .iter()
            .map(|r| (r.title.clone(), r.description.clone()))
            .collect();
        assert_eq!(snapshot, snapshot_2);
        let unique: BTreeSet<&(String, String)> = snapshot.iter().collect();
        assert_eq!(unique.len(), snapshot.len());
    }

    // The bundled 13-record fixture yields stats (13, 11, 10) exactly.
    let path = format!(
        "{}/../core/tests/fixtures/corpus_13.jsonl",
        env!("CARGO_MANIFEST_DIR")
    );
    let bytes = std::fs::read(path).unwrap();
    let (records, failures) = occumap::ingest::collect_postings(
        &bytes[..],
        occumap::ingest::InputFormat::JsonLines,
        occumap::ingest::FieldMap::default(),
    )
    .unwrap();
    assert!(failures.is_empty());
    let (postings, stats) = build_corpus(records, &failures);
    assert_eq!(
        (
            stats.raw_count,
            stats.after_dedup_count,
            stats.after_malformed_drop_count
        ),
        (13, 11, 10)
    );
    assert_eq!(postings.len(), 10);
    println!("criterion 4 (ingest laws, 10k randomized inputs + fixture stats): PASS");
}

/// Cohort attribution for the planted fixture: posting id (content
/// hash) -> driver slug, read from the raw fixture source ids.
fn cohort_of_posting() -> BTreeMap<String, String> {
    let path = common::fixture_dir().join("cohort/corpus.jsonl");
    let text = std::fs::read_to_string(path).unwrap();
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let source_id = v["source_id"].as_str().unwrap();
        let cohort = source_id.rsplit_once("-p").unwrap().0.to_string();
        let posting_id = content_key(
            &normalize_text(v["title"].as_str().unwrap()),
            &normalize_text(v["description"].as_str().unwrap()),
        );
        map.insert(posting_id, cohort);
    }
    map
}

#[test]
fn criterion_5_planted_cohort_end_to_end() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = run_full_pipeline(dir.path());

    let cohorts = cohort_of_posting();
    let corpus = occumap::ingest::read_corpus(std::io::BufReader::new(
        std::fs::File::open(out.join("corpus.jsonl")).unwrap(),
    ))
    .unwrap();
    let drivers_dir = common::fixture_dir().join("cohort/drivers");
    let mut driver_slugs = Vec::new();
    for entry in std::fs::read_dir(&drivers_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("txt") {
            let name = path.file_stem().unwrap().to_str().unwrap().to_string();
            driver_slugs.push((occumap::ontology::slugify(&name), path));
        }
    }
    driver_slugs.sort();
    assert_eq!(driver_slugs.len(), 10);

    for (slug, definition_path) in &driver_slugs {
        // Brute-force oracle: embed everything directly and score with
        // the compensated reference, entirely outside the match path.
        let definition = std::fs::read_to_string(definition_path).unwrap();
        let query = local_embed(definition.trim(), 512).unwrap();
        let mut expected: BTreeSet<String> = BTreeSet::new();
        for posting in &corpus {
            let vector = local_embed(&posting.description, 512).unwrap();
            let score = oracle_cosine(query.values(), vector.values());
            if score >= 0.70 {
                expected.insert(posting.posting_id.clone());
            }
        }

        let matches_text =
            std::fs::read_to_string(out.join(format!("{slug}.matches.jsonl"))).unwrap();
        let matches = occumap::report::matches_from_jsonl(&matches_text).unwrap();
        let got: BTreeSet<String> = matches.iter().map(|m| m.posting_id.clone()).collect();
        assert_eq!(got, expected, "driver {slug}: match set differs from oracle");

        // Every retained posting must come from this driver's cohort.
        for posting_id in &got {
            assert_eq!(
                cohorts.get(posting_id).map(String::as_str),
                Some(slug.as_str()),
                "driver {slug} matched a non-cohort posting"
            );
        }

        // Top-10 groups: recomputed from the raw matches, and at least
        // 9 of 10 (here all) originate from the planted cohort.
        let rows = occumap::report::groups_from_csv(
            &std::fs::read_to_string(out.join(format!("{slug}.top10.csv"))).unwrap(),
        )
        .unwrap();
        assert_eq!(rows.len(), 10, "driver {slug} should fill a top-10 table");
        let rules = ConsolidationRules::default();
        let mut cohort_groups = 0;
        for row in &rows {
            let members: Vec<&MatchResult> = matches
                .iter()
                .filter(|m| canonical_title(&m.title, &rules) == row.canonical_title)
                .collect();
            assert!(!members.is_empty(), "group {} has no members", row.canonical_title);
            if members
                .iter()
                .all(|m| cohorts.get(&m.posting_id).map(String::as_str) == Some(slug.as_str()))
            {
                cohort_groups += 1;
            }
        }
        assert!(
            cohort_groups >= 9,
            "driver {slug}: only {cohort_groups} of {} top groups from cohort",
            rows.len()
        );

        // And the published table equals a brute-force regrouping.
        let companies: CompanyLookup = corpus
            .iter()
            .map(|p| (p.posting_id.clone(), p.company.clone()))
            .collect();
        let regrouped = consolidate(&matches, &companies, &rules).unwrap();
        let top: Vec<&occumap::consolidate::OccupationGroup> =
            regrouped.iter().take(10).collect();
        for (row, group) in rows.iter().zip(&top) {
            assert_eq!(row.canonical_title, group.canonical_title);
            assert_eq!(row.distinct_count, group.distinct_count);
            assert!((row.best_score - group.best_score.value()).abs() < 1e-8);
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("criterion 5 (planted-cohort end-to-end, {elapsed:?}): PASS");
}

#[test]
fn criterion_6_consolidation_golden() {
    let rules = ConsolidationRules::default();
    for title in ["Senior Cloud Engineer", "Lead Cloud Engineer", "Cloud Engineer"] {
        assert_eq!(canonical_title(title, &rules), "Cloud Engineers");
    }

    let matches = vec![
        MatchResult {
            driver_id: "cloud-computing".into(),
            posting_id: "acme-sydney".into(),
            title: "Senior Cloud Engineer".into(),
            score: SimilarityScore::new(0.92).unwrap(),
        },
        MatchResult {
            driver_id: "cloud-computing".into(),
            posting_id: "acme-london".into(),
            title: "Cloud Engineer".into(),
            score: SimilarityScore::new(0.90).unwrap(),
        },
        MatchResult {
            driver_id: "cloud-computing".into(),
            posting_id: "beta-nyc".into(),
            title: "Cloud Engineer".into(),
            score: SimilarityScore::new(0.88).unwrap(),
        },
    ];
    let companies: CompanyLookup = [
        ("acme-sydney".to_string(), Some("Acme".to_string())),
        ("acme-london".to_string(), Some("Acme".to_string())),
        ("beta-nyc".to_string(), Some("Beta".to_string())),
    ]
    .into_iter()
    .collect();
    let groups = consolidate(&matches, &companies, &rules).unwrap();
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0].canonical_title, "Cloud Engineers");
    assert_eq!(groups[0].member_posting_ids.len(), 3);
    assert_eq!(groups[0].distinct_count, 2);
    println!("criterion 6 (consolidation golden rule): PASS");
}

#[test]
fn criterion_7_ontology_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0407);
    let kinds = [
        EntityKind::Workforce,
        EntityKind::Segment,
        EntityKind::IndustryTitle,
        EntityKind::Driver,
        EntityKind::Skill,
    ];
    let relations = [
        Relation::HasSegment,
        Relation::MapsTo,
        Relation::Drives,
        Relation::Requires,
    ];
    let mut graph = OntologyGraph::new();
    for kind in kinds {
        for n in 0..5 {
            let local = format!("{}-{n}", kind.as_str());
            let entity = match kind {
                EntityKind::Workforce => Entity::workforce(local.clone(), local),
                EntityKind::Segment => Entity::segment(local.clone(), local, Default::default()),
                EntityKind::IndustryTitle => Entity::industry_title(local.clone(), local, []),
                EntityKind::Driver => {
                    Entity::driver(local.clone(), local, DriverKind::Transformation, "text")
                }
                EntityKind::Skill => Entity::skill(local.clone(), local),
            };
            graph.add_entity(entity).unwrap();
        }
    }
    let mut rejected_driver_title = 0;
    for _ in 0..1_000 {
        let relation = relations[rng.gen_range(0..relations.len())];
        let source_kind = kinds[rng.gen_range(0..kinds.len())];
        let target_kind = kinds[rng.gen_range(0..kinds.len())];
        let source = EntityId::new(
            source_kind,
            format!("{}-{}", source_kind.as_str(), rng.gen_range(0..5)),
        );
        let target = EntityId::new(
            target_kind,
            format!("{}-{}", target_kind.as_str(), rng.gen_range(0..5)),
        );
        let result = graph.add_edge(&source, relation, &target);
        let forbidden =
            source_kind == EntityKind::Driver && target_kind == EntityKind::IndustryTitle;
        let signature_ok = relation.signature() == (source_kind, target_kind);
        assert_eq!(result.is_ok(), signature_ok && !forbidden);
        if forbidden {
            assert!(matches!(
                result,
                Err(occumap::ontology::OntologyError::ForbiddenRelation { .. })
            ));
            rejected_driver_title += 1;
        }
    }
    assert!(rejected_driver_title > 0, "rng never tried a driver-title edge");
    assert!(graph.validate().is_empty());
    for edge in graph.edges() {
        assert_eq!(edge.relation.signature(), (edge.source.kind, edge.target.kind));
        assert!(
            !(edge.source.kind == EntityKind::Driver
                && edge.target.kind == EntityKind::IndustryTitle)
        );
    }

    let bytes = graph.to_json();
    let back = OntologyGraph::from_json(&bytes).unwrap();
    assert_eq!(back, graph, "round trip must be graph-equal");
    assert_eq!(back.to_json(), bytes, "serialization must be byte-deterministic");
    println!(
        "criterion 7 (ontology constraints, 1000 insertions, {rejected_driver_title} driver-title rejections): PASS"
    );
}

#[test]
fn criterion_8_pipeline_determinism() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let out_a = run_full_pipeline(dir_a.path());
    let out_b = run_full_pipeline(dir_b.path());
    assert_trees_identical(&out_a, &out_b);
    println!("criterion 8 (end-to-end byte determinism): PASS");
}

#[test]
fn criterion_9_performance_gates() {
    // Flat-scan ranking: one query over 100,000 vectors of dim 512.
    let mut rng = ChaCha8Rng::seed_from_u64(0x9EF);
    let dim = 512;
    let mut index = VectorIndex::new("t", dim);
    for i in 0..100_000 {
        let values: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let v = EmbeddingVector::from_unnormalized(values, "t").unwrap();
        index.insert(format!("p{i:06}"), "title", &v).unwrap();
    }
    let query = random_unit(&mut rng, dim, "t");
    let start = Instant::now();
    let ranked = rank_matches(&query, &index, 0.0, Some(10)).unwrap();
    let scan = start.elapsed();
    assert_eq!(ranked.len(), 10);
    assert!(
        scan.as_secs_f64() < 2.0,
        "flat scan of 100k x {dim} took {scan:?}"
    );

    // Streaming ingest of 100k synthetic records, consumed one at a
    // time from a lazily generated source.
    struct Synthetic {
        next: usize,
        buf: Vec<u8>,
        pos: usize,
    }
    impl std::io::Read for Synthetic {
        fn read(&mut self, out: &mut [u8]) -> std::io::Result<usize> {
            if self.pos == self.buf.len() {
                if self.next == 100_000 {
                    return Ok(0);
                }
                self.buf = format!(
                    "{{\"source_id\":\"s{0}\",\"title\":\"Role {0}\",\"description\":\"body {0}\"}}\n",
                    self.next
                )
                .into_bytes();
                self.pos = 0;
                self.next += 1;
            }
            let n = out.len().min(self.buf.len() - self.pos);
            out[..n].copy_from_slice(&self.buf[self.pos..self.pos + n]);
            self.pos += n;
            Ok(n)
        }
    }
    let start = Instant::now();
    let reader = occumap::ingest::parse_posting_stream(
        Synthetic {
            next: 0,
            buf: Vec::new(),
            pos: 0,
        },
        occumap::ingest::InputFormat::JsonLines,
        occumap::ingest::FieldMap::default(),
    );
    let mut builder = occumap::ingest::CorpusBuilder::new();
    let mut kept = 0u64;
    for item in reader {
        if let occumap::ingest::StreamItem::Record(r) = item.unwrap() {
            if builder.push(r).is_some() {
                kept += 1;
            }
        }
    }
    let ingest_elapsed = start.elapsed();
    assert_eq!(kept, 100_000);
    assert!(
        ingest_elapsed.as_secs_f64() < 30.0,
        "streaming ingest took {ingest_elapsed:?}"
    );
    println!(
        "criterion 9 (performance: 100k scan {scan:?}, 100k streamed ingest {ingest_elapsed:?}): PASS"
    );
}
