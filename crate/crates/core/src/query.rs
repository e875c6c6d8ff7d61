//! Query expressions: an OR-combination of up to five search phrases joined by `+`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Maximum number of phrases a single trends query may combine.
pub const MAX_TERMS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query expression is empty")]
    EmptyExpression,
    #[error("term {position} of the expression is empty")]
    EmptyTerm { position: usize },
    #[error("query expression has {count} terms, at most {MAX_TERMS} are allowed")]
    TooManyTerms { count: usize },
    #[error("term {term:?} appears more than once")]
    DuplicateTerm { term: String },
}

/// A parsed, validated query expression.
///
/// Terms keep their original casing; duplicate detection is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryExpr {
    terms: Vec<String>,
    canonical: String,
}

impl QueryExpr {
    pub fn parse(text: &str) -> Result<Self, QueryError> {
        if text.chars().all(|c| c.is_whitespace() || c == '+') {
            return Err(QueryError::EmptyExpression);
        }
        let raw: Vec<&str> = text.split('+').map(str::trim).collect();
        if let Some(position) = raw.iter().position(|t| t.is_empty()) {
            return Err(QueryError::EmptyTerm { position });
        }
        if raw.len() > MAX_TERMS {
            return Err(QueryError::TooManyTerms { count: raw.len() });
        }
        let mut folded: Vec<String> = Vec::with_capacity(raw.len());
        for term in &raw {
            let key = fold(term);
            if folded.contains(&key) {
                return Err(QueryError::DuplicateTerm {
                    term: (*term).to_string(),
                });
            }
            folded.push(key);
        }
        let terms: Vec<String> = raw.into_iter().map(collapse_ws).collect();
        let canonical = terms.join(" + ");
        Ok(Self { terms, canonical })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// The normalized `term1 + term2 + ...` rendering.
    pub fn canonical_text(&self) -> &str {
        &self.canonical
    }

    pub fn first_term(&self) -> &str {
        &self.terms[0]
    }
}

fn collapse_ws(term: &str) -> String {
    term.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fold(term: &str) -> String {
    collapse_ws(term).to_lowercase()
}

impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

impl FromStr for QueryExpr {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for QueryExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical)
    }
}

impl<'de> Deserialize<'de> for QueryExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Kebab-case slug used for catalog ids: lowercase ASCII alphanumerics
/// separated by single dashes, apostrophes dropped.
pub fn slugify(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_dash = false;
    for c in text.chars().filter(|c| *c != '\'' && *c != '\u{2019}') {
        if c.is_ascii_alphanumeric() {
            if pending_dash && !out.is_empty() {
                out.push('-');
            }
            pending_dash = false;
            out.push(c.to_ascii_lowercase());
        } else {
            pending_dash = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_term() {
        let e = QueryExpr::parse("medicaid").unwrap();
        assert_eq!(e.terms(), ["medicaid"]);
        assert_eq!(e.canonical_text(), "medicaid");
    }

    #[test]
    fn two_terms_from_appendix() {
        let e = QueryExpr::parse("coronavirus hoax + coronavirus fake news").unwrap();
        assert_eq!(e.terms(), ["coronavirus hoax", "coronavirus fake news"]);
    }

    #[test]
    fn six_terms_rejected() {
        assert_eq!(
            QueryExpr::parse("a + b + c + d + e + f"),
            Err(QueryError::TooManyTerms { count: 6 })
        );
    }

    #[test]
    fn canonical_spacing() {
        let e = QueryExpr::parse("  hoarding+hoard  ").unwrap();
        assert_eq!(e.canonical_text(), "hoarding + hoard");
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(QueryExpr::parse("   "), Err(QueryError::EmptyExpression));
        assert_eq!(QueryExpr::parse(" + +"), Err(QueryError::EmptyExpression));
        assert_eq!(QueryExpr::parse(""), Err(QueryError::EmptyExpression));
        assert_eq!(
            QueryExpr::parse("a + + b"),
            Err(QueryError::EmptyTerm { position: 1 })
        );
    }

    #[test]
    fn duplicate_is_case_insensitive() {
        assert!(matches!(
            QueryExpr::parse("Medicare + medicare"),
            Err(QueryError::DuplicateTerm { .. })
        ));
        let e = QueryExpr::parse("Coronavirus can i see a doctor + x").unwrap();
        assert_eq!(e.first_term(), "Coronavirus can i see a doctor");
    }

    #[test]
    fn slugs() {
        assert_eq!(slugify("coronavirus symptoms"), "coronavirus-symptoms");
        assert_eq!(slugify("can't pay rent"), "cant-pay-rent");
        assert_eq!(slugify("Coronavirus can i see a doctor"), "coronavirus-can-i-see-a-doctor");
        assert_eq!(slugify("ladies' night"), "ladies-night");
    }

    proptest! {
        #[test]
        fn parse_is_idempotent(terms in proptest::collection::btree_set("[a-z]{1,6}( [a-z]{1,6}){0,2}", 1..=5)) {
            let text = terms.iter().cloned().collect::<Vec<_>>().join("+");
            let e = QueryExpr::parse(&text).unwrap();
            let again = QueryExpr::parse(e.canonical_text()).unwrap();
            prop_assert_eq!(&again, &e);
            prop_assert_eq!(again.terms().len(), terms.len());
        }
    }
}
