//! Collapsing matched job titles into canonical occupation groups.
//!
//! Seniority qualifiers are stripped, custom merges applied, and the
//! remaining title pluralized into its group form, so "Senior Cloud
//! Engineer", "Lead Cloud Engineer" and "Cloud Engineer" all land in
//! "Cloud Engineers". Repostings of one company's role across locations
//! count once in `distinct_count`.

mod rules;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::matcher::{MatchResult, SimilarityScore};

pub use rules::ConsolidationRules;

#[derive(Debug, Error)]
pub enum ConsolidateError {
    #[error("match references unknown posting `{0}`")]
    UnresolvablePosting(String),
    #[error("rules file line {line}: {message}")]
    Rules { line: u64, message: String },
}

/// A consolidated occupation with its members and counts.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationGroup {
    pub canonical_title: String,
    pub member_posting_ids: BTreeSet<String>,
    /// Unique (canonical title, company) pairs among the members.
    pub distinct_count: u64,
    /// Highest member similarity.
    pub best_score: SimilarityScore,
}

/// Canonical group form of one raw title. Idempotent.
pub fn canonical_title(title: &str, rules: &ConsolidationRules) -> String {
    let collapsed = collapse_whitespace(title);
    // A canonical form produced by a merge is final, even when it
    // contains words the other rules would rewrite.
    if rules.is_merge_target(&collapsed) {
        return collapsed;
    }
    let stripped = rules.strip_seniority(&collapsed);
    if stripped.is_empty() {
        return stripped;
    }
    if let Some(merged) = rules.custom_merge(&stripped) {
        return merged.to_string();
    }
    rules.pluralize(&stripped)
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Company lookup for location dedup: posting id -> company, if known.
pub type CompanyLookup = BTreeMap<String, Option<String>>;

/// Groups matches by canonical title.
///
/// `distinct_count` counts unique (canonical title, company) pairs, so
/// one company advertising the same occupation in several locations
/// counts once; postings without a company form a single unknown
/// bucket per group. Groups come back sorted by best score descending,
/// canonical title ascending on ties.
pub fn consolidate(
    matches: &[MatchResult],
    companies: &CompanyLookup,
    rules: &ConsolidationRules,
) -> Result<Vec<OccupationGroup>, ConsolidateError> {
    struct Accum {
        members: BTreeSet<String>,
        pairs: BTreeSet<Option<String>>,
        best: f64,
    }
    let mut groups: BTreeMap<String, Accum> = BTreeMap::new();
    for m in matches {
        let Some(company) = companies.get(&m.posting_id) else {
            return Err(ConsolidateError::UnresolvablePosting(m.posting_id.clone()));
        };
        let canonical = canonical_title(&m.title, rules);
        let entry = groups.entry(canonical).or_insert_with(|| Accum {
            members: BTreeSet::new(),
            pairs: BTreeSet::new(),
            best: f64::NEG_INFINITY,
        });
        entry.members.insert(m.posting_id.clone());
        entry.pairs.insert(company.clone());
        entry.best = entry.best.max(m.score.value());
    }
    let mut out: Vec<OccupationGroup> = groups
        .into_iter()
        .map(|(canonical_title, accum)| OccupationGroup {
            canonical_title,
            distinct_count: accum.pairs.len() as u64,
            best_score: SimilarityScore::new(accum.best).expect("scores validated upstream"),
            member_posting_ids: accum.members,
        })
        .collect();
    out.sort_by(|a, b| {
        b.best_score
            .value()
            .total_cmp(&a.best_score.value())
            .then_with(|| a.canonical_title.cmp(&b.canonical_title))
    });
    Ok(out)
}

/// First `n` groups of an already-sorted consolidation.
pub fn top_n(groups: &[OccupationGroup], n: usize) -> &[OccupationGroup] {
    &groups[..groups.len().min(n)]
}

/// Score histogram with half-open bins `[lo, lo + width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bin_width: f64,
    bins: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// (bin lower bound, count) in ascending bin order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.bins
            .iter()
            .map(move |(&idx, &count)| (idx as f64 * self.bin_width, count))
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// Bins match scores by `bin_width` (0.01 mirrors the report layout).
///
/// A small epsilon keeps scores that sit exactly on a boundary in the
/// bin they name: 0.70 lands in the 0.70 bin even though 0.70/0.01
/// rounds below 70 in floating point.
pub fn frequency_distribution(matches: &[MatchResult], bin_width: f64) -> Histogram {
    let mut bins = BTreeMap::new();
    for m in matches {
        let idx = (m.score.value() / bin_width + 1e-9).floor() as i64;
        *bins.entry(idx).or_insert(0) += 1;
    }
    Histogram { bin_width, bins }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(title: &str, posting_id: &str, score: f64) -> MatchResult {
        MatchResult {
            driver_id: "d".into(),
            posting_id: posting_id.into(),
            title: title.into(),
            score: SimilarityScore::new(score).unwrap(),
        }
    }

    fn company_map(entries: &[(&str, Option<&str>)]) -> CompanyLookup {
        entries
            .iter()
            .map(|(id, c)| (id.to_string(), c.map(String::from)))
            .collect()
    }

    #[test]
    fn seniority_variants_assimilate() {
        let rules = ConsolidationRules::default();
        assert_eq!(canonical_title("Senior Cloud Engineer", &rules), "Cloud Engineers");
        assert_eq!(canonical_title("Lead Cloud Engineer", &rules), "Cloud Engineers");
        assert_eq!(canonical_title("Cloud Engineer", &rules), "Cloud Engineers");
    }

    #[test]
    fn whitespace_and_plural_rule() {
        let rules = ConsolidationRules::default();
        assert_eq!(canonical_title("Data Scientist ", &rules), "Data Scientists");
        assert_eq!(canonical_title("  Data   Scientist", &rules), "Data Scientists");
    }

    #[test]
    fn canonical_title_is_idempotent() {
        let rules = ConsolidationRules::default();
        for t in [
            "Senior Cloud Engineer",
            "Head of Platform Engineering",
            "Entry-Level Analyst",
            "Security Analysts",
            "Graduate Junior Developer",
        ] {
            let once = canonical_title(t, &rules);
            assert_eq!(canonical_title(&once, &rules), once, "title {t:?}");
        }
    }

    #[test]
    fn acme_beta_location_dedup() {
        let rules = ConsolidationRules::default();
        let matches = vec![
            result("Senior Cloud Engineer", "p1", 0.91),
            result("Cloud Engineer", "p2", 0.88),
            result("Cloud Engineer", "p3", 0.86),
        ];
        let companies = company_map(&[
            ("p1", Some("Acme")),
            ("p2", Some("Acme")),
            ("p3", Some("Beta")),
        ]);
        let groups = consolidate(&matches, &companies, &rules).unwrap();
        assert_eq!(groups.len(), 1);
        let group = &groups[0];
        assert_eq!(group.canonical_title, "Cloud Engineers");
        assert_eq!(group.member_posting_ids.len(), 3);
        assert_eq!(group.distinct_count, 2);
        assert!((group.best_score.value() - 0.91).abs() < 1e-12);
    }

    #[test]
    fn single_match_single_group() {
        let rules = ConsolidationRules::default();
        let matches = vec![result("Data Scientist", "p1", 0.8)];
        let companies = company_map(&[("p1", None)]);
        let groups = consolidate(&matches, &companies, &rules).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].distinct_count, 1);
    }

    #[test]
    fn empty_matches_empty_groups() {
        let rules = ConsolidationRules::default();
        let groups = consolidate(&[], &CompanyLookup::new(), &rules).unwrap();
        assert!(groups.is_empty());
    }

    #[test]
    fn unknown_posting_is_an_error() {
        let rules = ConsolidationRules::default();
        let matches = vec![result("Analyst", "ghost", 0.8)];
        assert!(matches!(
            consolidate(&matches, &CompanyLookup::new(), &rules),
            Err(ConsolidateError::UnresolvablePosting(_))
        ));
    }

    #[test]
    fn count_conservation_across_groups() {
        let rules = ConsolidationRules::default();
        let matches: Vec<_> = (0..40)
            .map(|i| {
                let title = match i % 3 {
                    0 => "Cloud Engineer",
                    1 => "Data Scientist",
                    _ => "Product Manager",
                };
                result(title, &format!("p{i}"), 0.7 + (i as f64) * 0.001)
            })
            .collect();
        let companies: CompanyLookup = (0..40)
            .map(|i| (format!("p{i}"), Some(format!("c{}", i % 7))))
            .collect();
        let groups = consolidate(&matches, &companies, &rules).unwrap();
        let members: usize = groups.iter().map(|g| g.member_posting_ids.len()).sum();
        assert_eq!(members, matches.len());
    }

    #[test]
    fn groups_sorted_by_best_score_then_title() {
        let rules = ConsolidationRules::default();
        let matches = vec![
            result("Alpha Role", "p1", 0.75),
            result("Beta Role", "p2", 0.9),
            result("Gamma Role", "p3", 0.75),
        ];
        let companies = company_map(&[
            ("p1", Some("A")),
            ("p2", Some("B")),
            ("p3", Some("C")),
        ]);
        let groups = consolidate(&matches, &companies, &rules).unwrap();
        let titles: Vec<_> = groups.iter().map(|g| g.canonical_title.as_str()).collect();
        assert_eq!(titles, vec!["Beta Roles", "Alpha Roles", "Gamma Roles"]);
    }

    #[test]
    fn top_n_truncates_only_past_n() {
        let rules = ConsolidationRules::default();
        let matches: Vec<_> = (0..15)
            .map(|i| result(&format!("Role Number{i}"), &format!("p{i}"), 0.99 - i as f64 * 0.01))
            .collect();
        let companies: CompanyLookup = (0..15).map(|i| (format!("p{i}"), None)).collect();
        let groups = consolidate(&matches, &companies, &rules).unwrap();
        assert_eq!(top_n(&groups, 10).len(), 10);
        assert_eq!(top_n(&groups[..3], 10).len(), 3);
        // The truncated list is exactly the ten best groups.
        assert_eq!(top_n(&groups, 10), &groups[..10]);
    }

    #[test]
    fn histogram_bins_are_boundary_stable() {
        let matches = vec![
            result("A", "p1", 0.70),
            result("B", "p2", 0.705),
            result("C", "p3", 0.71),
        ];
        let hist = frequency_distribution(&matches, 0.01);
        let bins: Vec<_> = hist.iter().collect();
        assert_eq!(bins.len(), 2);
        assert!((bins[0].0 - 0.70).abs() < 1e-9);
        assert_eq!(bins[0].1, 2);
        assert!((bins[1].0 - 0.71).abs() < 1e-9);
        assert_eq!(bins[1].1, 1);
        assert_eq!(hist.total(), 3);
    }

    #[test]
    fn histogram_of_empty_matches_is_empty() {
        assert!(frequency_distribution(&[], 0.01).is_empty());
    }

    #[test]
    fn histogram_matches_sort_and_count_oracle() {
        let matches: Vec<_> = (0..1000)
            .map(|i| {
                let score = 0.70 + (i as f64 * 0.000_29) % 0.3;
                result("T", &format!("p{i}"), score)
            })
            .collect();
        let hist = frequency_distribution(&matches, 0.01);
        // Oracle: sort scores into bins by scanning bin edges.
        let mut scores: Vec<f64> = matches.iter().map(|m| m.score.value()).collect();
        scores.sort_by(f64::total_cmp);
        let mut oracle: BTreeMap<i64, u64> = BTreeMap::new();
        for s in scores {
            let mut idx = (s / 0.01).floor() as i64;
            // Nudge boundary cases the same way binning defines them.
            if ((idx + 1) as f64 * 0.01 - s).abs() < 1e-9 {
                idx += 1;
            }
            *oracle.entry(idx).or_insert(0) += 1;
        }
        let got: BTreeMap<i64, u64> = hist
            .iter()
            .map(|(lo, count)| ((lo / 0.01).round() as i64, count))
            .collect();
        assert_eq!(got, oracle);
        assert_eq!(hist.total(), 1000);
    }
}
