//! Backend-neutral workload model: the nine benchmark queries as abstract
//! syntax, plus the title tokenizer and substring predicate that define the
//! workload vocabulary and filter semantics.

use crate::model::TermParam;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Splits a title into lowercase tokens on every non-alphanumeric character.
pub fn tokenize(title: &str) -> Vec<String> {
    title
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// Substring containment test used by every filter constraint.
/// Case-insensitive unless `case_sensitive` is set.
pub fn contains(title: &str, term: &str, case_sensitive: bool) -> bool {
    if case_sensitive {
        title.contains(term)
    } else {
        title.to_lowercase().contains(&term.to_lowercase())
    }
}

/// A single `contains(title, t_i)` constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermConstraint {
    pub term: TermParam,
}

/// Boolean combination of term constraints. Constructors normalize leaf
/// order by term index so structurally equal filters compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintExpr {
    Leaf(TermConstraint),
    And(Vec<TermConstraint>),
    Or(Vec<TermConstraint>),
}

impl ConstraintExpr {
    pub fn leaf(term: TermParam) -> ConstraintExpr {
        ConstraintExpr::Leaf(TermConstraint { term })
    }

    pub fn and(terms: Vec<TermParam>) -> ConstraintExpr {
        ConstraintExpr::And(Self::normalize(terms))
    }

    pub fn or(terms: Vec<TermParam>) -> ConstraintExpr {
        ConstraintExpr::Or(Self::normalize(terms))
    }

    fn normalize(terms: Vec<TermParam>) -> Vec<TermConstraint> {
        let mut leaves: Vec<TermConstraint> =
            terms.into_iter().map(|term| TermConstraint { term }).collect();
        leaves.sort_by_key(|c| c.term.index);
        leaves
    }

    pub fn leaves(&self) -> &[TermConstraint] {
        match self {
            ConstraintExpr::Leaf(c) => std::slice::from_ref(c),
            ConstraintExpr::And(cs) | ConstraintExpr::Or(cs) => cs,
        }
    }

    /// Evaluates the filter over a title.
    pub fn matches(&self, title: &str, case_sensitive: bool) -> bool {
        match self {
            ConstraintExpr::Leaf(c) => contains(title, &c.term.term, case_sensitive),
            ConstraintExpr::And(cs) => cs
                .iter()
                .all(|c| contains(title, &c.term.term, case_sensitive)),
            ConstraintExpr::Or(cs) => cs
                .iter()
                .any(|c| contains(title, &c.term.term, case_sensitive)),
        }
    }
}

/// Attribute shape of a query's output rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Projection {
    /// {title}
    Titles,
    /// {author_name, count}
    AuthorCount,
    /// {author_name, year, count}
    AuthorYearCount,
}

/// Grouping key of an aggregation query; the aggregation function is always
/// a count of record ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregationSpec {
    ByAuthor,
    ByAuthorYear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QueryId {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    Q7,
    Q8,
    Q9,
}

impl QueryId {
    pub const ALL: [QueryId; 9] = [
        QueryId::Q1,
        QueryId::Q2,
        QueryId::Q3,
        QueryId::Q4,
        QueryId::Q5,
        QueryId::Q6,
        QueryId::Q7,
        QueryId::Q8,
        QueryId::Q9,
    ];

    /// Number of term parameters the query takes.
    pub fn arity(self) -> usize {
        match self {
            QueryId::Q1 => 1,
            QueryId::Q2 | QueryId::Q3 => 2,
            QueryId::Q4 | QueryId::Q5 | QueryId::Q8 | QueryId::Q9 => 3,
            QueryId::Q6 | QueryId::Q7 => 0,
        }
    }

    pub fn is_aggregation(self) -> bool {
        matches!(self, QueryId::Q6 | QueryId::Q7 | QueryId::Q8 | QueryId::Q9)
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", *self as u8 + 1)
    }
}

impl FromStr for QueryId {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Q1" => Ok(QueryId::Q1),
            "Q2" => Ok(QueryId::Q2),
            "Q3" => Ok(QueryId::Q3),
            "Q4" => Ok(QueryId::Q4),
            "Q5" => Ok(QueryId::Q5),
            "Q6" => Ok(QueryId::Q6),
            "Q7" => Ok(QueryId::Q7),
            "Q8" => Ok(QueryId::Q8),
            "Q9" => Ok(QueryId::Q9),
            other => Err(QueryError::UnknownQueryId(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown query id {0:?}")]
    UnknownQueryId(String),
    #[error("query {id} takes {expected} terms, got {got}")]
    ArityMismatch { id: QueryId, expected: usize, got: usize },
    #[error("cannot parse query spec {0:?}")]
    BadSpecText(String),
}

/// One of the nine benchmark queries, fully parameterized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuerySpec {
    pub id: QueryId,
    pub filter: Option<ConstraintExpr>,
    pub projection: Projection,
    pub aggregation: Option<AggregationSpec>,
}

impl QuerySpec {
    /// Canonical textual form, e.g. `Q2(i=1,j=2)`; stable across runs and
    /// used in CLI arguments, report rows, and golden file names.
    pub fn canonical_text(&self) -> String {
        let indices: Vec<u8> = self
            .filter
            .as_ref()
            .map(|f| f.leaves().iter().map(|c| c.term.index).collect())
            .unwrap_or_default();
        match indices.as_slice() {
            [] => self.id.to_string(),
            [i] => format!("{}(i={})", self.id, i),
            [i, j] => format!("{}(i={},j={})", self.id, i, j),
            [i, j, k] => format!("{}(i={},j={},k={})", self.id, i, j, k),
            _ => unreachable!("filters carry at most three leaves"),
        }
    }
}

/// Builds the QuerySpec for a query id from its term parameters.
///
/// Q1 takes one term, Q2/Q3 two, Q4/Q5/Q8/Q9 three, Q6/Q7 none; And-folded
/// for Q2/Q4/Q8, Or-folded for Q3/Q5/Q9.
pub fn build_query(id: QueryId, terms: Vec<TermParam>) -> Result<QuerySpec, QueryError> {
    if terms.len() != id.arity() {
        return Err(QueryError::ArityMismatch { id, expected: id.arity(), got: terms.len() });
    }
    let spec = match id {
        QueryId::Q1 => QuerySpec {
            id,
            filter: Some(ConstraintExpr::leaf(terms.into_iter().next().unwrap())),
            projection: Projection::Titles,
            aggregation: None,
        },
        QueryId::Q2 | QueryId::Q4 => QuerySpec {
            id,
            filter: Some(ConstraintExpr::and(terms)),
            projection: Projection::Titles,
            aggregation: None,
        },
        QueryId::Q3 | QueryId::Q5 => QuerySpec {
            id,
            filter: Some(ConstraintExpr::or(terms)),
            projection: Projection::Titles,
            aggregation: None,
        },
        QueryId::Q6 => QuerySpec {
            id,
            filter: None,
            projection: Projection::AuthorCount,
            aggregation: Some(AggregationSpec::ByAuthor),
        },
        QueryId::Q7 => QuerySpec {
            id,
            filter: None,
            projection: Projection::AuthorYearCount,
            aggregation: Some(AggregationSpec::ByAuthorYear),
        },
        QueryId::Q8 => QuerySpec {
            id,
            filter: Some(ConstraintExpr::and(terms)),
            projection: Projection::AuthorYearCount,
            aggregation: Some(AggregationSpec::ByAuthorYear),
        },
        QueryId::Q9 => QuerySpec {
            id,
            filter: Some(ConstraintExpr::or(terms)),
            projection: Projection::AuthorYearCount,
            aggregation: Some(AggregationSpec::ByAuthorYear),
        },
    };
    Ok(spec)
}

/// Parses the canonical textual form (`Q1(i=2)`, `Q6`, `Q8(i=1,j=2,k=3)`)
/// against a pool of term values indexed 1..=3. Queries with a filter default
/// to indices 1..arity when the index list is omitted.
pub fn parse_spec_text(text: &str, term_pool: &[String]) -> Result<QuerySpec, QueryError> {
    let text = text.trim();
    let (id_part, args) = match text.find('(') {
        Some(open) => {
            let close = text
                .rfind(')')
                .ok_or_else(|| QueryError::BadSpecText(text.to_string()))?;
            (&text[..open], Some(&text[open + 1..close]))
        }
        None => (text, None),
    };
    let id: QueryId = id_part.parse()?;
    let indices: Vec<u8> = match args {
        Some(args) if !args.trim().is_empty() => args
            .split(',')
            .map(|part| {
                let value = part.split('=').next_back().unwrap_or("").trim();
                value
                    .parse::<u8>()
                    .map_err(|_| QueryError::BadSpecText(text.to_string()))
            })
            .collect::<Result<_, _>>()?,
        _ => (1..=id.arity() as u8).collect(),
    };
    let terms = indices
        .into_iter()
        .map(|index| {
            let value = term_pool
                .get(index as usize - 1)
                .ok_or_else(|| QueryError::BadSpecText(format!("no term value for index {index}")))?;
            TermParam::new(index, value.clone())
                .map_err(|_| QueryError::BadSpecText(text.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    build_query(id, terms)
}

/// The standard workload term parameterization t1..t3.
pub fn default_term_pool() -> Vec<String> {
    vec!["database".into(), "text".into(), "mining".into()]
}
