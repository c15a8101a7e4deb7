//! Consolidation invariants over randomized titles and match sets.

use proptest::prelude::*;

use occumap::consolidate::{
    canonical_title, consolidate, frequency_distribution, top_n, CompanyLookup,
    ConsolidationRules,
};
use occumap::matcher::{MatchResult, SimilarityScore};

fn match_result(title: &str, posting_id: &str, company_hint: u8, score: f64) -> (MatchResult, (String, Option<String>)) {
    let m = MatchResult {
        driver_id: "d".into(),
        posting_id: posting_id.into(),
        title: title.into(),
        score: SimilarityScore::new(score).unwrap(),
    };
    let company = if company_hint == 0 {
        None
    } else {
        Some(format!("company-{company_hint}"))
    };
    (m, (posting_id.to_string(), company))
}

fn title_strategy() -> impl Strategy<Value = String> {
    let qualifier = prop_oneof![
        Just(""),
        Just("Senior"),
        Just("Lead"),
        Just("Head of"),
        Just("Entry-Level"),
        Just("Graduate"),
    ];
    let stem = prop_oneof![
        Just("Cloud Engineer"),
        Just("Data Scientist"),
        Just("Security Analyst"),
        Just("Product Manager"),
        Just("Delivery Boy"),
        Just("Records Secretary"),
    ];
    (qualifier, stem).prop_map(|(q, s)| {
        if q.is_empty() {
            s.to_string()
        } else {
            format!("{q} {s}")
        }
    })
}

proptest! {
    #[test]
    fn canonical_title_idempotent_over_rule_vocabulary(title in title_strategy()) {
        let rules = ConsolidationRules::default();
        let once = canonical_title(&title, &rules);
        prop_assert_eq!(canonical_title(&once, &rules), once);
    }

    /// Membership counts are conserved and unaffected by the location
    /// permutation of the underlying postings.
    #[test]
    fn count_conservation_and_location_invariance(
        specs in proptest::collection::vec((title_strategy(), 0u8..5, 0.70f64..0.99), 1..50)
    ) {
        let rules = ConsolidationRules::default();
        let mut matches = Vec::new();
        let mut companies = CompanyLookup::new();
        for (i, (title, company_hint, score)) in specs.iter().enumerate() {
            let (m, (id, company)) =
                match_result(title, &format!("p{i:03}"), *company_hint, *score);
            matches.push(m);
            companies.insert(id, company);
        }
        let groups = consolidate(&matches, &companies, &rules).unwrap();
        let member_total: usize = groups.iter().map(|g| g.member_posting_ids.len()).sum();
        prop_assert_eq!(member_total, matches.len());
        for g in &groups {
            prop_assert!(g.distinct_count as usize <= g.member_posting_ids.len());
        }

        // Shuffle the match order; groups must be unchanged.
        let mut shuffled = matches.clone();
        shuffled.reverse();
        let regrouped = consolidate(&shuffled, &companies, &rules).unwrap();
        prop_assert_eq!(groups, regrouped);
    }

    /// Adding a group scoring below position n leaves the top n alone.
    #[test]
    fn top_n_stability(scores in proptest::collection::vec(0.71f64..0.99, 12..30), low in 0.701f64..0.709) {
        let rules = ConsolidationRules::default();
        let mut matches = Vec::new();
        let mut companies = CompanyLookup::new();
        for (i, score) in scores.iter().enumerate() {
            let (m, (id, company)) =
                match_result(&format!("Distinct Role{i}"), &format!("p{i:03}"), 1, *score);
            matches.push(m);
            companies.insert(id, company);
        }
        let groups = consolidate(&matches, &companies, &rules).unwrap();
        let before: Vec<String> = top_n(&groups, 10).iter().map(|g| g.canonical_title.clone()).collect();

        let (m, (id, company)) = match_result("Below Threshold Role", "plow", 1, low);
        matches.push(m);
        companies.insert(id, company);
        let groups = consolidate(&matches, &companies, &rules).unwrap();
        let after: Vec<String> = top_n(&groups, 10).iter().map(|g| g.canonical_title.clone()).collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn histogram_total_equals_match_count(
        scores in proptest::collection::vec(0.70f64..1.0, 0..200)
    ) {
        let matches: Vec<MatchResult> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| MatchResult {
                driver_id: "d".into(),
                posting_id: format!("p{i}"),
                title: "T".into(),
                score: SimilarityScore::new(*s).unwrap(),
            })
            .collect();
        let hist = frequency_distribution(&matches, 0.01);
        prop_assert_eq!(hist.total() as usize, matches.len());
    }
}
