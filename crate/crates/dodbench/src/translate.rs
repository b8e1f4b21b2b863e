//! Compiles a [`QuerySpec`] into executable query text for each backend
//! dialect.
//!
//! Filtering folds all term constraints into a single conditional
//! expression (conjunction for Q2/Q4/Q8, disjunction for Q3/Q5/Q9).
//! Aggregations flatten the author list with the dialect's native mechanism:
//! XQuery grouping clauses, Mongo's unwind stage, Couch map/reduce views,
//! and N1QL's UNNEST. All aggregation output is ordered by group key so
//! cross-backend comparison is order-insensitive by construction.

use crate::query::{AggregationSpec, ConstraintExpr, QuerySpec, TermConstraint};
use sha2::{Digest, Sha256};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    XQuery31,
    XQuery10,
    MongoPipeline,
    CouchMangoView,
    N1ql,
}

impl Dialect {
    pub const ALL: [Dialect; 5] = [
        Dialect::XQuery31,
        Dialect::XQuery10,
        Dialect::MongoPipeline,
        Dialect::CouchMangoView,
        Dialect::N1ql,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::XQuery31 => "xquery31",
            Dialect::XQuery10 => "xquery10",
            Dialect::MongoPipeline => "mongo",
            Dialect::CouchMangoView => "couch",
            Dialect::N1ql => "n1ql",
        }
    }

    /// File extension for the main query text.
    pub fn extension(self) -> &'static str {
        match self {
            Dialect::XQuery31 | Dialect::XQuery10 => "xq",
            Dialect::MongoPipeline => "js",
            Dialect::CouchMangoView => "txt",
            Dialect::N1ql => "n1ql",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dialect {
    type Err = UnknownDialect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xquery31" => Ok(Dialect::XQuery31),
            "xquery10" => Ok(Dialect::XQuery10),
            "mongo" => Ok(Dialect::MongoPipeline),
            "couch" => Ok(Dialect::CouchMangoView),
            "n1ql" => Ok(Dialect::N1ql),
            other => Err(UnknownDialect(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown dialect {0:?}; expected xquery31, xquery10, mongo, couch, or n1ql")]
pub struct UnknownDialect(pub String);

/// Auxiliary artifact that must be installed before the main text can run,
/// e.g. a Couch design document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupText {
    /// Suggested file name, extension included.
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslatedQuery {
    pub dialect: Dialect,
    pub main_text: String,
    pub setup_texts: Vec<SetupText>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TranslateOptions {
    pub case_sensitive: bool,
}

/// Translates a query into the target dialect; pure and deterministic.
pub fn translate(q: &QuerySpec, dialect: Dialect, options: TranslateOptions) -> TranslatedQuery {
    match dialect {
        Dialect::XQuery31 => xquery(q, options, true),
        Dialect::XQuery10 => xquery(q, options, false),
        Dialect::MongoPipeline => mongo(q, options),
        Dialect::CouchMangoView => couch(q, options),
        Dialect::N1ql => n1ql(q, options),
    }
}

/// Human-readable notes on the strategy the translation applies.
pub fn explain(q: &QuerySpec, dialect: Dialect) -> String {
    let mut notes = Vec::new();
    match &q.filter {
        None => notes.push("no filter; full scan of the collection".to_string()),
        Some(ConstraintExpr::Leaf(_)) => {
            notes.push("single contains() constraint on the title".to_string())
        }
        Some(ConstraintExpr::And(cs)) => notes.push(format!(
            "{} contains() constraints folded into one conjunctive filter expression",
            cs.len()
        )),
        Some(ConstraintExpr::Or(cs)) => notes.push(format!(
            "{} contains() constraints folded into one disjunctive filter expression",
            cs.len()
        )),
    }
    match q.aggregation {
        None => notes.push("selection query: title projection, no grouping needed".to_string()),
        Some(agg) => {
            let key = match agg {
                AggregationSpec::ByAuthor => "author",
                AggregationSpec::ByAuthorYear => "author and year",
            };
            let mechanism = match dialect {
                Dialect::XQuery31 => "FLWOR group-by clause over unnested author elements",
                Dialect::XQuery10 => "FOR/LET/ORDER BY over distinct author values",
                Dialect::MongoPipeline => "aggregation pipeline: unwind authors, then group",
                Dialect::CouchMangoView => {
                    "materialized view: map-side filtering and author flattening, reduce-side count"
                }
                Dialect::N1ql => "UNNEST of the authors array, then GROUP BY",
            };
            notes.push(format!("count of records grouped by {key} via {mechanism}"));
        }
    }
    notes.push("aggregation output ordered by group key".to_string());
    notes.join("; ")
}

fn xml_attr_escape(term: &str) -> String {
    term.replace('&', "&amp;").replace('<', "&lt;").replace('"', "&quot;")
}

fn xq_string(term: &str) -> String {
    format!("\"{}\"", xml_attr_escape(term))
}

fn xq_contains(path: &str, c: &TermConstraint, options: TranslateOptions) -> String {
    if options.case_sensitive {
        format!("contains({path}, {})", xq_string(&c.term.term))
    } else {
        format!(
            "contains(lower-case({path}), {})",
            xq_string(&c.term.term.to_lowercase())
        )
    }
}

fn xq_where(filter: &ConstraintExpr, path: &str, options: TranslateOptions) -> String {
    match filter {
        ConstraintExpr::Leaf(c) => xq_contains(path, c, options),
        ConstraintExpr::And(cs) => cs
            .iter()
            .map(|c| xq_contains(path, c, options))
            .collect::<Vec<_>>()
            .join(" and "),
        ConstraintExpr::Or(cs) => cs
            .iter()
            .map(|c| xq_contains(path, c, options))
            .collect::<Vec<_>>()
            .join(" or "),
    }
}

fn xquery(q: &QuerySpec, options: TranslateOptions, xquery31: bool) -> TranslatedQuery {
    let dialect = if xquery31 { Dialect::XQuery31 } else { Dialect::XQuery10 };
    let col = "collection(\"dblp\")/dblp/*";
    let mut text = String::new();
    match q.aggregation {
        None => {
            let filter = q.filter.as_ref().expect("selection queries always carry a filter");
            let _ = writeln!(text, "for $r in {col}");
            let _ = writeln!(text, "where {}", xq_where(filter, "$r/title", options));
            let _ = writeln!(text, "return <title>{{string($r/title)}}</title>");
        }
        Some(agg) if xquery31 => {
            let _ = writeln!(text, "for $r in {col}");
            if let Some(filter) = &q.filter {
                let _ = writeln!(text, "where {}", xq_where(filter, "$r/title", options));
            }
            let _ = writeln!(text, "for $a in $r/author");
            let _ = writeln!(text, "let $name := string($a)");
            match agg {
                AggregationSpec::ByAuthor => {
                    let _ = writeln!(text, "group by $name");
                    let _ = writeln!(text, "order by $name");
                    let _ = writeln!(
                        text,
                        "return <group><author>{{$name}}</author><count>{{count($a)}}</count></group>"
                    );
                }
                AggregationSpec::ByAuthorYear => {
                    let _ = writeln!(text, "let $year := string($r/year)");
                    let _ = writeln!(text, "group by $name, $year");
                    let _ = writeln!(text, "order by $name, $year");
                    let _ = writeln!(
                        text,
                        "return <group><author>{{$name}}</author><year>{{$year}}</year><count>{{count($a)}}</count></group>"
                    );
                }
            }
        }
        Some(agg) => {
            // XQuery 1.0 has no group-by clause; group keys come from
            // distinct-values and counts from filtered path expressions.
            let filtered = match &q.filter {
                Some(filter) => format!("{col}[{}]", xq_where(filter, "title", options)),
                None => col.to_string(),
            };
            let _ = writeln!(text, "let $recs := {filtered}");
            let _ = writeln!(text, "for $name in distinct-values($recs/author)");
            match agg {
                AggregationSpec::ByAuthor => {
                    let _ = writeln!(text, "let $hits := $recs/author[. = $name]");
                    let _ = writeln!(text, "order by $name");
                    let _ = writeln!(
                        text,
                        "return <group><author>{{$name}}</author><count>{{count($hits)}}</count></group>"
                    );
                }
                AggregationSpec::ByAuthorYear => {
                    let _ = writeln!(
                        text,
                        "for $year in distinct-values($recs[author = $name]/year)"
                    );
                    let _ = writeln!(text, "let $hits := $recs[year = $year]/author[. = $name]");
                    let _ = writeln!(text, "order by $name, $year");
                    let _ = writeln!(
                        text,
                        "return <group><author>{{$name}}</author><year>{{$year}}</year><count>{{count($hits)}}</count></group>"
                    );
                }
            }
        }
    }
    TranslatedQuery { dialect, main_text: text, setup_texts: Vec::new() }
}

fn regex_escape(term: &str) -> String {
    let mut out = String::new();
    for c in term.chars() {
        if "\\^$.|?*+()[]{}".contains(c) {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn json_string_escape(text: &str) -> String {
    serde_json::to_string(text).expect("string serialization is infallible")
}

fn mongo_regex_clause(c: &TermConstraint, options: TranslateOptions) -> String {
    let pattern = json_string_escape(&regex_escape(&c.term.term));
    if options.case_sensitive {
        format!("{{\"title\": {{\"$regex\": {pattern}}}}}")
    } else {
        format!("{{\"title\": {{\"$regex\": {pattern}, \"$options\": \"i\"}}}}")
    }
}

fn mongo_match(filter: &ConstraintExpr, options: TranslateOptions) -> String {
    match filter {
        ConstraintExpr::Leaf(c) => mongo_regex_clause(c, options),
        ConstraintExpr::And(cs) => format!(
            "{{\"$and\": [{}]}}",
            cs.iter().map(|c| mongo_regex_clause(c, options)).collect::<Vec<_>>().join(", ")
        ),
        ConstraintExpr::Or(cs) => format!(
            "{{\"$or\": [{}]}}",
            cs.iter().map(|c| mongo_regex_clause(c, options)).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn mongo(q: &QuerySpec, options: TranslateOptions) -> TranslatedQuery {
    let text = match q.aggregation {
        None => {
            let filter = q.filter.as_ref().expect("selection queries always carry a filter");
            format!(
                "db.dblp.find({}, {{\"title\": 1, \"_id\": 0}})\n",
                mongo_match(filter, options)
            )
        }
        Some(agg) => {
            let mut stages = Vec::new();
            if let Some(filter) = &q.filter {
                stages.push(format!("  {{\"$match\": {}}}", mongo_match(filter, options)));
            }
            stages.push("  {\"$unwind\": \"$authors\"}".to_string());
            let group_id = match agg {
                AggregationSpec::ByAuthor => "{\"author\": \"$authors\"}",
                AggregationSpec::ByAuthorYear => "{\"author\": \"$authors\", \"year\": \"$year\"}",
            };
            stages.push(format!(
                "  {{\"$group\": {{\"_id\": {group_id}, \"count\": {{\"$sum\": 1}}}}}}"
            ));
            stages.push("  {\"$sort\": {\"_id\": 1}}".to_string());
            format!("db.dblp.aggregate([\n{}\n])\n", stages.join(",\n"))
        }
    };
    TranslatedQuery { dialect: Dialect::MongoPipeline, main_text: text, setup_texts: Vec::new() }
}

fn couch_regex(c: &TermConstraint, options: TranslateOptions) -> String {
    let pattern = if options.case_sensitive {
        regex_escape(&c.term.term)
    } else {
        format!("(?i){}", regex_escape(&c.term.term))
    };
    format!("{{\"title\": {{\"$regex\": {}}}}}", json_string_escape(&pattern))
}

fn couch_js_condition(filter: &ConstraintExpr, options: TranslateOptions) -> String {
    let clause = |c: &TermConstraint| {
        if options.case_sensitive {
            format!("doc.title.indexOf({}) !== -1", json_string_escape(&c.term.term))
        } else {
            format!(
                "doc.title.toLowerCase().indexOf({}) !== -1",
                json_string_escape(&c.term.term.to_lowercase())
            )
        }
    };
    match filter {
        ConstraintExpr::Leaf(c) => clause(c),
        ConstraintExpr::And(cs) => cs.iter().map(clause).collect::<Vec<_>>().join(" && "),
        ConstraintExpr::Or(cs) => cs.iter().map(clause).collect::<Vec<_>>().join(" || "),
    }
}

/// Content-hashed view name so repeated installs of the same query are
/// idempotent.
pub fn couch_view_name(q: &QuerySpec, options: TranslateOptions) -> String {
    let mut hasher = Sha256::new();
    hasher.update(q.canonical_text());
    hasher.update([options.case_sensitive as u8]);
    let digest = hasher.finalize();
    let mut name = String::from("q_");
    for byte in &digest[..6] {
        let _ = write!(name, "{byte:02x}");
    }
    name
}

fn couch(q: &QuerySpec, options: TranslateOptions) -> TranslatedQuery {
    match q.aggregation {
        None => {
            let filter = q.filter.as_ref().expect("selection queries always carry a filter");
            let selector = match filter {
                ConstraintExpr::Leaf(c) => couch_regex(c, options),
                ConstraintExpr::And(cs) => format!(
                    "{{\"$and\": [{}]}}",
                    cs.iter().map(|c| couch_regex(c, options)).collect::<Vec<_>>().join(", ")
                ),
                ConstraintExpr::Or(cs) => format!(
                    "{{\"$or\": [{}]}}",
                    cs.iter().map(|c| couch_regex(c, options)).collect::<Vec<_>>().join(", ")
                ),
            };
            let main_text = format!(
                "POST /dblp/_find\n{{\"selector\": {selector}, \"fields\": [\"title\"], \"limit\": 999999999}}\n"
            );
            TranslatedQuery { dialect: Dialect::CouchMangoView, main_text, setup_texts: Vec::new() }
        }
        Some(agg) => {
            let view = couch_view_name(q, options);
            let guard = match &q.filter {
                Some(filter) => format!("doc.title && ({})", couch_js_condition(filter, options)),
                None => "doc.title !== undefined".to_string(),
            };
            let emit_key = match agg {
                AggregationSpec::ByAuthor => "doc.authors[i]",
                AggregationSpec::ByAuthorYear => "[doc.authors[i], doc.year]",
            };
            let map = format!(
                "function(doc) {{ if ({guard}) {{ for (var i = 0; i < doc.authors.length; i++) {{ emit({emit_key}, 1); }} }} }}"
            );
            let design = format!(
                "{{\"_id\": \"_design/{view}\", \"views\": {{\"agg\": {{\"map\": {}, \"reduce\": \"_count\"}}}}}}\n",
                json_string_escape(&map)
            );
            let main_text =
                format!("GET /dblp/_design/{view}/_view/agg?group=true&reduce=true\n");
            TranslatedQuery {
                dialect: Dialect::CouchMangoView,
                main_text,
                setup_texts: vec![SetupText { name: format!("{view}.design.json"), text: design }],
            }
        }
    }
}

fn n1ql_string(term: &str) -> String {
    format!("\"{}\"", term.replace('\\', "\\\\").replace('"', "\\\""))
}

fn n1ql_contains(c: &TermConstraint, options: TranslateOptions) -> String {
    if options.case_sensitive {
        format!("CONTAINS(r.title, {})", n1ql_string(&c.term.term))
    } else {
        format!(
            "CONTAINS(LOWER(r.title), {})",
            n1ql_string(&c.term.term.to_lowercase())
        )
    }
}

fn n1ql_where(filter: &ConstraintExpr, options: TranslateOptions) -> String {
    match filter {
        ConstraintExpr::Leaf(c) => n1ql_contains(c, options),
        ConstraintExpr::And(cs) => cs
            .iter()
            .map(|c| n1ql_contains(c, options))
            .collect::<Vec<_>>()
            .join(" AND "),
        ConstraintExpr::Or(cs) => cs
            .iter()
            .map(|c| n1ql_contains(c, options))
            .collect::<Vec<_>>()
            .join(" OR "),
    }
}

fn n1ql(q: &QuerySpec, options: TranslateOptions) -> TranslatedQuery {
    let text = match q.aggregation {
        None => {
            let filter = q.filter.as_ref().expect("selection queries always carry a filter");
            format!(
                "SELECT r.title FROM dblp AS r WHERE {};\n",
                n1ql_where(filter, options)
            )
        }
        Some(agg) => {
            let where_clause = q
                .filter
                .as_ref()
                .map(|f| format!("WHERE {} ", n1ql_where(f, options)))
                .unwrap_or_default();
            match agg {
                AggregationSpec::ByAuthor => format!(
                    "SELECT a AS author, COUNT(META(r).id) AS count FROM dblp AS r UNNEST r.authors AS a {where_clause}GROUP BY a ORDER BY a;\n"
                ),
                AggregationSpec::ByAuthorYear => format!(
                    "SELECT a AS author, r.year AS year, COUNT(META(r).id) AS count FROM dblp AS r UNNEST r.authors AS a {where_clause}GROUP BY a, r.year ORDER BY a, r.year;\n"
                ),
            }
        }
    };
    TranslatedQuery { dialect: Dialect::N1ql, main_text: text, setup_texts: Vec::new() }
}
