//! Consolidation rule set and its plain-text file format.
//!
//! ```text
//! # comments and blank lines are skipped
//! seniority Head of            # replaces the default strip list
//! plural Person => People      # irregular plural form
//! merge Sr Cloud Eng => Cloud Engineers
//! ```
//!
//! `seniority` lines, when present, replace the default token list;
//! `plural` and `merge` lines extend the defaults. Merge aliases match
//! case-insensitively after seniority stripping and their targets are
//! taken verbatim.

use std::collections::{BTreeMap, BTreeSet};

use super::ConsolidateError;

/// Default seniority qualifiers stripped from title edges.
pub const DEFAULT_SENIORITY_TOKENS: [&str; 10] = [
    "Senior",
    "Lead",
    "Junior",
    "Principal",
    "Head of",
    "Chief",
    "Staff",
    "Associate",
    "Graduate",
    "Entry-Level",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsolidationRules {
    seniority_tokens: Vec<String>,
    /// lowercased singular -> rendered plural.
    plural_overrides: BTreeMap<String, String>,
    /// lowercased plural forms, to keep pluralization idempotent.
    plural_targets: BTreeSet<String>,
    /// lowercased alias -> canonical rendering.
    custom_merges: BTreeMap<String, String>,
    /// lowercased canonical renderings of merges.
    merge_targets: BTreeSet<String>,
}

impl Default for ConsolidationRules {
    fn default() -> Self {
        let mut rules = Self {
            seniority_tokens: DEFAULT_SENIORITY_TOKENS.iter().map(|s| s.to_string()).collect(),
            plural_overrides: BTreeMap::new(),
            plural_targets: BTreeSet::new(),
            custom_merges: BTreeMap::new(),
            merge_targets: BTreeSet::new(),
        };
        rules.add_plural("Person", "People");
        rules.add_plural("Analysis", "Analyses");
        rules
    }
}

impl ConsolidationRules {
    pub fn add_seniority(&mut self, token: impl Into<String>) {
        self.seniority_tokens.push(token.into());
    }

    pub fn add_plural(&mut self, singular: &str, plural: &str) {
        self.plural_overrides
            .insert(singular.to_lowercase(), plural.to_string());
        self.plural_targets.insert(plural.to_lowercase());
    }

    pub fn add_merge(&mut self, alias: &str, canonical: &str) {
        self.custom_merges
            .insert(alias.to_lowercase(), canonical.to_string());
        self.merge_targets.insert(canonical.to_lowercase());
    }

    /// Parses the rules file format described in the module docs.
    pub fn parse(text: &str) -> Result<Self, ConsolidateError> {
        let mut rules = Self::default();
        let mut seniority_replaced = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (directive, rest) = line.split_once(char::is_whitespace).ok_or_else(|| {
                ConsolidateError::Rules {
                    line: line_no,
                    message: format!("directive `{line}` has no argument"),
                }
            })?;
            let rest = rest.trim();
            match directive {
                "seniority" => {
                    if !seniority_replaced {
                        rules.seniority_tokens.clear();
                        seniority_replaced = true;
                    }
                    rules.add_seniority(rest);
                }
                "plural" | "merge" => {
                    let (from, to) = rest.split_once("=>").ok_or_else(|| {
                        ConsolidateError::Rules {
                            line: line_no,
                            message: format!("`{directive}` expects `from => to`"),
                        }
                    })?;
                    let (from, to) = (from.trim(), to.trim());
                    if from.is_empty() || to.is_empty() {
                        return Err(ConsolidateError::Rules {
                            line: line_no,
                            message: "empty side of `=>`".into(),
                        });
                    }
                    if directive == "plural" {
                        rules.add_plural(from, to);
                    } else {
                        rules.add_merge(from, to);
                    }
                }
                other => {
                    return Err(ConsolidateError::Rules {
                        line: line_no,
                        message: format!("unknown directive `{other}`"),
                    })
                }
            }
        }
        Ok(rules)
    }

    /// Strips seniority qualifiers from both ends until none match.
    /// Matching is case-insensitive and word-aligned, so "Lead" never
    /// bites into "Leadership".
    pub(super) fn strip_seniority(&self, title: &str) -> String {
        let mut words: Vec<&str> = title.split_whitespace().collect();
        let tokens: Vec<Vec<String>> = self
            .seniority_tokens
            .iter()
            .map(|t| t.split_whitespace().map(str::to_lowercase).collect())
            .collect();
        loop {
            let mut changed = false;
            for token_words in &tokens {
                if token_words.is_empty() || words.len() < token_words.len() {
                    continue;
                }
                let matches_at = |start: usize| {
                    words[start..start + token_words.len()]
                        .iter()
                        .zip(token_words)
                        .all(|(w, t)| w.to_lowercase() == *t)
                };
                if matches_at(0) {
                    words.drain(..token_words.len());
                    changed = true;
                    break;
                }
                if matches_at(words.len() - token_words.len()) {
                    words.truncate(words.len() - token_words.len());
                    changed = true;
                    break;
                }
            }
            if !changed || words.is_empty() {
                return words.join(" ");
            }
        }
    }

    pub(super) fn custom_merge(&self, title: &str) -> Option<&str> {
        self.custom_merges.get(&title.to_lowercase()).map(String::as_str)
    }

    pub(super) fn is_merge_target(&self, title: &str) -> bool {
        self.merge_targets.contains(&title.to_lowercase())
    }

    /// Renders the plural group form by pluralizing the last word.
    /// Words already ending in `s` and words without letters are left
    /// alone; irregular forms come from the override table.
    pub(super) fn pluralize(&self, title: &str) -> String {
        let title = title.trim_end();
        let Some(last) = title.split_whitespace().last() else {
            return title.to_string();
        };
        let lower = last.to_lowercase();
        if self.plural_targets.contains(&lower) {
            return title.to_string();
        }
        let plural = if let Some(irregular) = self.plural_overrides.get(&lower) {
            irregular.clone()
        } else if !last.chars().any(char::is_lowercase) || lower.ends_with('s') {
            // Acronyms, numerals and bare digits ("II", "SRE", "3")
            // have no natural plural group form.
            return title.to_string();
        } else if lower.ends_with('x')
            || lower.ends_with('z')
            || lower.ends_with("ch")
            || lower.ends_with("sh")
        {
            format!("{last}es")
        } else if lower.ends_with('y') && !ends_with_vowel_y(&lower) {
            format!("{}ies", &last[..last.len() - 1])
        } else {
            format!("{last}s")
        };
        let head = &title[..title.len() - last.len()];
        format!("{head}{plural}")
    }
}

fn ends_with_vowel_y(lower: &str) -> bool {
    let bytes = lower.as_bytes();
    bytes.len() >= 2 && matches!(bytes[bytes.len() - 2], b'a' | b'e' | b'i' | b'o' | b'u')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_prefix_and_suffix_qualifiers() {
        let rules = ConsolidationRules::default();
        assert_eq!(rules.strip_seniority("Senior Cloud Engineer"), "Cloud Engineer");
        assert_eq!(rules.strip_seniority("Cloud Engineer Senior"), "Cloud Engineer");
        assert_eq!(rules.strip_seniority("Senior Lead Cloud Engineer"), "Cloud Engineer");
        assert_eq!(rules.strip_seniority("Head of Engineering"), "Engineering");
    }

    #[test]
    fn word_boundaries_are_respected() {
        let rules = ConsolidationRules::default();
        assert_eq!(rules.strip_seniority("Leadership Coach"), "Leadership Coach");
        assert_eq!(rules.strip_seniority("Staffing Partner"), "Staffing Partner");
    }

    #[test]
    fn title_of_only_qualifiers_becomes_empty() {
        let rules = ConsolidationRules::default();
        assert_eq!(rules.strip_seniority("Senior Lead"), "");
        assert_eq!(rules.strip_seniority("Senior"), "");
    }

    #[test]
    fn pluralization_rules() {
        let rules = ConsolidationRules::default();
        assert_eq!(rules.pluralize("Cloud Engineer"), "Cloud Engineers");
        assert_eq!(rules.pluralize("Security Analysts"), "Security Analysts");
        assert_eq!(rules.pluralize("Records Secretary"), "Records Secretaries");
        assert_eq!(rules.pluralize("UX Coach"), "UX Coaches");
        assert_eq!(rules.pluralize("Delivery Boy"), "Delivery Boys");
        assert_eq!(rules.pluralize("Engineer II"), "Engineer II");
        assert_eq!(rules.pluralize("Sales Person"), "Sales People");
        assert_eq!(rules.pluralize("Sales People"), "Sales People");
    }

    #[test]
    fn parse_rules_file() {
        let text = "
            # custom setup
            seniority Senior
            seniority Lead
            plural Secretary => Secretaries
            merge Sr Cloud Eng => Cloud Engineers
        ";
        let rules = ConsolidationRules::parse(text).unwrap();
        // Replaced list: only the two configured tokens strip.
        assert_eq!(rules.strip_seniority("Senior Analyst"), "Analyst");
        assert_eq!(rules.strip_seniority("Junior Analyst"), "Junior Analyst");
        assert_eq!(rules.custom_merge("sr cloud eng"), Some("Cloud Engineers"));
        assert!(rules.is_merge_target("cloud engineers"));
    }

    #[test]
    fn parse_rejects_bad_lines() {
        assert!(ConsolidationRules::parse("nonsense Senior").is_err());
        assert!(ConsolidationRules::parse("merge onlyleft").is_err());
        assert!(ConsolidationRules::parse("plural a =>").is_err());
    }
}
