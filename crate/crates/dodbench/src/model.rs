//! Canonical bibliographic data model.
//!
//! The denormalized record type used across the whole toolkit: ingest
//! produces it, the generators emit it, and the oracle evaluates over it.
//! One record holds a publication together with its authors and venue, so
//! no cross-record relationships are needed.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Publication sub-type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecordKind {
    JournalArticle,
    ConferenceArticle,
    Book,
    BookChapter,
}

impl RecordKind {
    pub fn is_article(self) -> bool {
        matches!(self, RecordKind::JournalArticle | RecordKind::ConferenceArticle)
    }

    pub fn is_book(self) -> bool {
        !self.is_article()
    }
}

/// Venue classification for articles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VenueType {
    Journal,
    Proceedings,
    SpecialIssue,
}

impl VenueType {
    pub fn as_str(self) -> &'static str {
        match self {
            VenueType::Journal => "journal",
            VenueType::Proceedings => "proceedings",
            VenueType::SpecialIssue => "special-issue",
        }
    }

    pub fn parse(s: &str) -> Option<VenueType> {
        match s {
            "journal" => Some(VenueType::Journal),
            "proceedings" => Some(VenueType::Proceedings),
            "special-issue" => Some(VenueType::SpecialIssue),
            _ => None,
        }
    }
}

/// Publication venue of an article.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VenueRef {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub issn: Option<String>,
    pub venue_title: String,
    pub venue_type: VenueType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub issue: Option<String>,
}

/// One publication in denormalized form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalRecord {
    pub record_id: String,
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub year: i32,
    pub authors: Vec<String>,
    pub kind: RecordKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pages: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub venue: Option<VenueRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub publisher: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub editors: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isbn: Option<String>,
}

impl CanonicalRecord {
    pub fn new(record_id: impl Into<String>, title: impl Into<String>, year: i32, kind: RecordKind) -> Self {
        CanonicalRecord {
            record_id: record_id.into(),
            title: title.into(),
            url: None,
            year,
            authors: Vec::new(),
            kind,
            pages: None,
            venue: None,
            publisher: None,
            editors: None,
            isbn: None,
        }
    }
}

/// A single invariant violation found by [`validate_record`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyTitle,
    ArticleCarriesIsbn,
    ArticleCarriesEditors,
    BookCarriesVenue,
    EmptyVenueTitle,
    ImplausibleYear(i32),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTitle => write!(f, "empty title"),
            Violation::ArticleCarriesIsbn => write!(f, "article carries isbn"),
            Violation::ArticleCarriesEditors => write!(f, "article carries editors"),
            Violation::BookCarriesVenue => write!(f, "book carries venue"),
            Violation::EmptyVenueTitle => write!(f, "empty venue title"),
            Violation::ImplausibleYear(y) => write!(f, "implausible year {y}"),
        }
    }
}

pub const YEAR_MIN: i32 = 1936;
pub const YEAR_MAX: i32 = 2100;

/// Checks every model invariant; violations are returned as data, not errors.
pub fn validate_record(candidate: &CanonicalRecord) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if candidate.title.is_empty() {
        violations.push(Violation::EmptyTitle);
    }
    if candidate.kind.is_article() {
        if candidate.isbn.is_some() {
            violations.push(Violation::ArticleCarriesIsbn);
        }
        if candidate.editors.is_some() {
            violations.push(Violation::ArticleCarriesEditors);
        }
    } else if candidate.venue.is_some() {
        violations.push(Violation::BookCarriesVenue);
    }
    if let Some(venue) = &candidate.venue {
        if venue.venue_title.is_empty() {
            violations.push(Violation::EmptyVenueTitle);
        }
    }
    if candidate.year < YEAR_MIN || candidate.year > YEAR_MAX {
        violations.push(Violation::ImplausibleYear(candidate.year));
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Fraction of the full dataset a generated subset holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub const ALL: [ScaleFactor; 4] = [
        ScaleFactor(0.125),
        ScaleFactor(0.25),
        ScaleFactor(0.5),
        ScaleFactor(1.0),
    ];

    pub fn new(value: f64) -> Result<ScaleFactor, InvalidScaleFactor> {
        if Self::ALL.iter().any(|sf| sf.0 == value) {
            Ok(ScaleFactor(value))
        } else {
            Err(InvalidScaleFactor(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Number of records a subset of `total` records holds at this factor.
    pub fn subset_len(self, total: usize) -> usize {
        (total as f64 * self.0).round() as usize
    }
}

impl fmt::Display for ScaleFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for ScaleFactor {
    type Err = InvalidScaleFactor;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s.parse().map_err(|_| InvalidScaleFactor(f64::NAN))?;
        ScaleFactor::new(v)
    }
}

impl TryFrom<f64> for ScaleFactor {
    type Error = InvalidScaleFactor;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        ScaleFactor::new(v)
    }
}

impl From<ScaleFactor> for f64 {
    fn from(sf: ScaleFactor) -> f64 {
        sf.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("invalid scale factor {0}; expected one of 0.125, 0.25, 0.5, 1.0")]
pub struct InvalidScaleFactor(pub f64);

/// One of the parameterized search terms t1..t3.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermParam {
    /// 1-based parameter slot, in 1..=3.
    pub index: u8,
    pub term: String,
}

impl TermParam {
    pub fn new(index: u8, term: impl Into<String>) -> Result<TermParam, InvalidTermParam> {
        let term = term.into();
        if !(1..=3).contains(&index) {
            return Err(InvalidTermParam::BadIndex(index));
        }
        if term.is_empty() {
            return Err(InvalidTermParam::EmptyTerm);
        }
        Ok(TermParam { index, term })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidTermParam {
    #[error("term index {0} out of range 1..=3")]
    BadIndex(u8),
    #[error("empty search term")]
    EmptyTerm,
}
