//! The curated query catalog and its delimiter-separated file format
//! (`id,theme,expr,ideology`, header row required).

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::query::{slugify, QueryExpr};

const BUNDLED_CATALOG: &str = include_str!("../data/catalog.csv");
const HEADER: [&str; 4] = ["id", "theme", "expr", "ideology"];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog line {line}, field `{field}`: {message}")]
    Parse {
        line: u64,
        field: &'static str,
        message: String,
    },
    #[error("catalog query `{id}`: {reason}")]
    InvariantViolation { id: String, reason: String },
    #[error("reading catalog: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Theme {
    CareSeeking,
    GovernmentPrograms,
    HealthPrograms,
    NewsInfluence,
    OutlookConcerns,
    SocialTravel,
}

impl Theme {
    pub const ALL: [Theme; 6] = [
        Theme::CareSeeking,
        Theme::GovernmentPrograms,
        Theme::HealthPrograms,
        Theme::NewsInfluence,
        Theme::OutlookConcerns,
        Theme::SocialTravel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Theme::CareSeeking => "CareSeeking",
            Theme::GovernmentPrograms => "GovernmentPrograms",
            Theme::HealthPrograms => "HealthPrograms",
            Theme::NewsInfluence => "NewsInfluence",
            Theme::OutlookConcerns => "OutlookConcerns",
            Theme::SocialTravel => "SocialTravel",
        }
    }

    /// Human-readable label, e.g. "Outlook & Concerns".
    pub fn label(self) -> &'static str {
        match self {
            Theme::CareSeeking => "Care Seeking",
            Theme::GovernmentPrograms => "Government Programs",
            Theme::HealthPrograms => "Health Programs",
            Theme::NewsInfluence => "News & Influence",
            Theme::OutlookConcerns => "Outlook & Concerns",
            Theme::SocialTravel => "Social & Travel",
        }
    }
}

impl fmt::Display for Theme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Theme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Theme::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown theme {s:?}"))
    }
}

/// Audience ideology of a news outlet query. Only meaningful for
/// [`Theme::NewsInfluence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ideology {
    Left,
    Right,
    FarRight,
}

impl Ideology {
    pub fn as_str(self) -> &'static str {
        match self {
            Ideology::Left => "Left",
            Ideology::Right => "Right",
            Ideology::FarRight => "FarRight",
        }
    }

    fn parse_field(s: &str) -> Result<Option<Self>, String> {
        match s.trim() {
            "" | "None" | "none" => Ok(None),
            "Left" | "left" => Ok(Some(Ideology::Left)),
            "Right" | "right" => Ok(Some(Ideology::Right)),
            "FarRight" | "farright" | "far-right" => Ok(Some(Ideology::FarRight)),
            other => Err(format!("unknown ideology {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThemedQuery {
    pub id: String,
    pub theme: Theme,
    pub expr: QueryExpr,
    pub ideology: Option<Ideology>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub version: String,
    pub queries: Vec<ThemedQuery>,
}

impl Catalog {
    /// The 39-query, six-theme catalog shipped with the crate.
    pub fn bundled() -> &'static Catalog {
        static BUNDLED: OnceLock<Catalog> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            Catalog::parse_str(BUNDLED_CATALOG).expect("bundled catalog is valid")
        })
    }

    /// Loads a catalog file, or the bundled catalog when `source` is `None`.
    pub fn load(source: Option<&Path>) -> Result<Catalog, CatalogError> {
        match source {
            None => Ok(Catalog::bundled().clone()),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Catalog::parse_str(&text)
            }
        }
    }

    pub fn parse_str(text: &str) -> Result<Catalog, CatalogError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| CatalogError::Parse {
            line: 1,
            field: "header",
            message: e.to_string(),
        })?;
        if headers.iter().collect::<Vec<_>>() != HEADER {
            return Err(CatalogError::Parse {
                line: 1,
                field: "header",
                message: format!("expected `{}`", HEADER.join(",")),
            });
        }

        let mut queries = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CatalogError::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                field: "record",
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |idx: usize, name: &'static str| {
                record.get(idx).ok_or(CatalogError::Parse {
                    line,
                    field: name,
                    message: "missing field".into(),
                })
            };
            let id = field(0, "id")?.to_string();
            let theme = field(1, "theme")?
                .parse::<Theme>()
                .map_err(|message| CatalogError::Parse {
                    line,
                    field: "theme",
                    message,
                })?;
            let expr = QueryExpr::parse(field(2, "expr")?).map_err(|e| CatalogError::Parse {
                line,
                field: "expr",
                message: e.to_string(),
            })?;
            let ideology = Ideology::parse_field(record.get(3).unwrap_or("")).map_err(|message| {
                CatalogError::Parse {
                    line,
                    field: "ideology",
                    message,
                }
            })?;
            queries.push(ThemedQuery {
                id,
                theme,
                expr,
                ideology,
            });
        }
        Catalog::from_queries(queries)
    }

    /// Validates the invariants and derives the content version.
    pub fn from_queries(queries: Vec<ThemedQuery>) -> Result<Catalog, CatalogError> {
        let mut seen = HashSet::new();
        for q in &queries {
            if q.id.is_empty() || slugify(&q.id) != q.id {
                return Err(CatalogError::InvariantViolation {
                    id: q.id.clone(),
                    reason: "id must be a non-empty kebab-case slug".into(),
                });
            }
            if !seen.insert(q.id.as_str()) {
                return Err(CatalogError::InvariantViolation {
                    id: q.id.clone(),
                    reason: "duplicate id".into(),
                });
            }
            if q.ideology.is_some() && q.theme != Theme::NewsInfluence {
                return Err(CatalogError::InvariantViolation {
                    id: q.id.clone(),
                    reason: format!("ideology set on a {} query", q.theme),
                });
            }
        }
        let mut catalog = Catalog {
            version: String::new(),
            queries,
        };
        catalog.version = format!("sha256:{}", &hex::encode(Sha256::digest(catalog.to_csv()))[..16]);
        Ok(catalog)
    }

    /// Renders the catalog in its file format.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(HEADER).expect("in-memory write");
        for q in &self.queries {
            writer
                .write_record([
                    q.id.as_str(),
                    q.theme.as_str(),
                    q.expr.canonical_text(),
                    q.ideology.map(Ideology::as_str).unwrap_or(""),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn get(&self, id: &str) -> Option<&ThemedQuery> {
        self.queries.iter().find(|q| q.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.queries.iter().position(|q| q.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.queries.iter().map(|q| q.id.as_str())
    }

    pub fn themes(&self) -> BTreeSet<Theme> {
        self.queries.iter().map(|q| q.theme).collect()
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Ids of the nine queries that had missing state values in the
/// March 1 - April 15, 2020 state panel.
pub const INCOMPLETE_STATE_QUERIES: [&str; 9] = [
    "coronavirus-infowars",
    "how-can-i-stop-coronavirus",
    "coronavirus-can-i-see-a-doctor",
    "coronavirus-afford-doctor",
    "bar-closed",
    "government-aid",
    "doctor-appointment",
    "doctor-open",
    "cant-pay-rent",
];
