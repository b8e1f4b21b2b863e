//! Exact in-process evaluator for the nine workload queries; the ground
//! truth against which every backend translation is validated.
//!
//! Selection queries scan the record list and project titles. Aggregation
//! queries conceptually unwind each record into (author, record) pairs, one
//! per author occurrence, filter on the record title, then group and count.
//! Counting is over pairs: a record that lists the same author twice counts
//! twice, matching what unwind/UNNEST produce in the live backends.

use crate::canonical::{CanonicalError, RecordReader};
use crate::model::CanonicalRecord;
use crate::query::{tokenize, AggregationSpec, QuerySpec};
use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;

/// Immutable loaded dataset with the derived counts the selectivity formula
/// needs.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<CanonicalRecord>,
    pair_count: u64,
    vocabulary: HashSet<String>,
}

impl Dataset {
    pub fn from_records(records: Vec<CanonicalRecord>) -> Dataset {
        let pair_count = records.iter().map(|r| r.authors.len() as u64).sum();
        let vocabulary = records
            .iter()
            .flat_map(|r| tokenize(&r.title))
            .collect();
        Dataset { records, pair_count, vocabulary }
    }

    pub fn load(path: &Path) -> Result<Dataset, CanonicalError> {
        let file = std::fs::File::open(path)?;
        Self::load_from(std::io::BufReader::new(file))
    }

    pub fn load_from<R: BufRead>(input: R) -> Result<Dataset, CanonicalError> {
        let records = RecordReader::new(input).collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset::from_records(records))
    }

    pub fn records(&self) -> &[CanonicalRecord] {
        &self.records
    }

    pub fn record_count(&self) -> u64 {
        self.records.len() as u64
    }

    /// Number of (author, record) pairs in the unwound dataset.
    pub fn pair_count(&self) -> u64 {
        self.pair_count
    }

    pub fn vocabulary(&self) -> &HashSet<String> {
        &self.vocabulary
    }
}

/// Grouping key of an aggregation row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    pub author: String,
    pub year: Option<i32>,
}

/// Query output: title rows for selection queries, sorted (key, count) rows
/// for aggregation queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResultSet {
    Titles(Vec<String>),
    Groups(Vec<(GroupKey, u64)>),
}

impl ResultSet {
    /// Returned-row count n(Q).
    pub fn row_count(&self) -> u64 {
        match self {
            ResultSet::Titles(rows) => rows.len() as u64,
            ResultSet::Groups(rows) => rows.len() as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub case_sensitive: bool,
}

/// Evaluates a query over the dataset. Selection rows preserve record order;
/// aggregation rows are ordered by group key.
pub fn evaluate(ds: &Dataset, q: &QuerySpec, options: EvalOptions) -> ResultSet {
    let passes = |record: &CanonicalRecord| {
        q.filter
            .as_ref()
            .map_or(true, |f| f.matches(&record.title, options.case_sensitive))
    };
    match q.aggregation {
        None => ResultSet::Titles(
            ds.records
                .iter()
                .filter(|r| passes(r))
                .map(|r| r.title.clone())
                .collect(),
        ),
        Some(agg) => {
            let mut groups: BTreeMap<GroupKey, u64> = BTreeMap::new();
            for record in &ds.records {
                if !passes(record) {
                    continue;
                }
                let year = match agg {
                    AggregationSpec::ByAuthor => None,
                    AggregationSpec::ByAuthorYear => Some(record.year),
                };
                for author in &record.authors {
                    *groups
                        .entry(GroupKey { author: author.clone(), year })
                        .or_insert(0) += 1;
                }
            }
            ResultSet::Groups(groups.into_iter().collect())
        }
    }
}

/// Fraction of the population not returned: s = 1 - n/N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectivityReport {
    pub n: u64,
    pub population: u64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("selectivity undefined over an empty population")]
pub struct EmptyPopulation;

/// Computes S(Q) = 1 - n/N, with N the record count for selection queries
/// and the (author, record) pair count for aggregation queries.
pub fn selectivity(
    ds: &Dataset,
    q: &QuerySpec,
    rs: &ResultSet,
) -> Result<SelectivityReport, EmptyPopulation> {
    let population = if q.id.is_aggregation() { ds.pair_count } else { ds.record_count() };
    if population == 0 {
        return Err(EmptyPopulation);
    }
    let n = rs.row_count();
    Ok(SelectivityReport { n, population, s: 1.0 - n as f64 / population as f64 })
}
