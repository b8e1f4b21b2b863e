//! Scale-factor subset generation and XML/JSON document emission.
//!
//! Subsets are nested: one seeded permutation of the input is drawn and each
//! scale factor takes a prefix of it, so every smaller subset is contained in
//! every larger one and scaling curves are monotone in data volume.

use crate::model::{CanonicalRecord, RecordKind, ScaleFactor, VenueType};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use std::fmt::Write as _;
use std::io::{self, Write};

/// Selects `round(N * sf)` records. For a fixed seed the selected id set at a
/// smaller factor is a subset of the set at any larger factor; sf = 1.0
/// preserves the input order exactly.
pub fn subset(records: &[CanonicalRecord], sf: ScaleFactor, seed: u64) -> Vec<CanonicalRecord> {
    let take = sf.subset_len(records.len());
    if take >= records.len() {
        return records.to_vec();
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut picked: Vec<usize> = order.into_iter().take(take).collect();
    // keep document order within the subset
    picked.sort_unstable();
    picked.into_iter().map(|i| records[i].clone()).collect()
}

/// Returns the permutation prefix indices a subset call would select; used by
/// tests to cross-check selection independently of `subset`.
pub fn subset_indices(total: usize, sf: ScaleFactor, seed: u64) -> Vec<usize> {
    let take = sf.subset_len(total);
    if take >= total {
        return (0..total).collect();
    }
    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order.truncate(take);
    order.sort_unstable();
    order
}

fn xml_escape(text: &str, out: &mut String) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
}

fn element_tag(kind: RecordKind) -> &'static str {
    match kind {
        RecordKind::JournalArticle => "article",
        RecordKind::ConferenceArticle => "inproceedings",
        RecordKind::Book => "book",
        RecordKind::BookChapter => "incollection",
    }
}

fn write_simple(out: &mut String, indent: &str, tag: &str, text: &str) {
    out.push_str(indent);
    out.push('<');
    out.push_str(tag);
    out.push('>');
    xml_escape(text, out);
    out.push_str("</");
    out.push_str(tag);
    out.push_str(">\n");
}

/// Renders one record as an XML element. The element tag encodes the record
/// kind; authors are repeated `author` elements; absent fields are omitted.
pub fn record_to_xml(record: &CanonicalRecord) -> String {
    let mut out = String::new();
    let tag = element_tag(record.kind);
    out.push_str("  <");
    out.push_str(tag);
    out.push_str(" key=\"");
    xml_escape(&record.record_id, &mut out);
    out.push_str("\">\n");
    write_simple(&mut out, "    ", "title", &record.title);
    let _ = writeln!(out, "    <year>{}</year>", record.year);
    for author in &record.authors {
        write_simple(&mut out, "    ", "author", author);
    }
    if let Some(url) = &record.url {
        write_simple(&mut out, "    ", "url", url);
    }
    if let Some(pages) = &record.pages {
        write_simple(&mut out, "    ", "pages", pages);
    }
    if let Some(venue) = &record.venue {
        out.push_str("    <venue");
        if let Some(issn) = &venue.issn {
            out.push_str(" issn=\"");
            xml_escape(issn, &mut out);
            out.push('"');
        }
        out.push_str(" type=\"");
        out.push_str(venue.venue_type.as_str());
        out.push('"');
        if let Some(volume) = &venue.volume {
            out.push_str(" volume=\"");
            xml_escape(volume, &mut out);
            out.push('"');
        }
        if let Some(issue) = &venue.issue {
            out.push_str(" issue=\"");
            xml_escape(issue, &mut out);
            out.push('"');
        }
        out.push('>');
        xml_escape(&venue.venue_title, &mut out);
        out.push_str("</venue>\n");
    }
    if let Some(publisher) = &record.publisher {
        write_simple(&mut out, "    ", "publisher", publisher);
    }
    if let Some(editors) = &record.editors {
        for editor in editors {
            write_simple(&mut out, "    ", "editor", editor);
        }
    }
    if let Some(isbn) = &record.isbn {
        write_simple(&mut out, "    ", "isbn", isbn);
    }
    out.push_str("  </");
    out.push_str(tag);
    out.push_str(">\n");
    out
}

/// Writes all records as one XML container file with a single `dblp` root.
pub fn emit_xml<'a, W, I>(out: &mut W, records: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a CanonicalRecord>,
{
    out.write_all(b"<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dblp>\n")?;
    for record in records {
        out.write_all(record_to_xml(record).as_bytes())?;
    }
    out.write_all(b"</dblp>\n")
}

/// Renders one record as a flat JSON document: scalar fields become
/// top-level labels, authors a list-valued `authors` label, venue fields
/// inlined. Absent fields yield no label.
pub fn record_to_json(record: &CanonicalRecord) -> Value {
    let mut doc = Map::new();
    doc.insert("key".into(), json!(record.record_id));
    doc.insert("type".into(), json!(element_tag(record.kind)));
    doc.insert("title".into(), json!(record.title));
    doc.insert("year".into(), json!(record.year));
    doc.insert("authors".into(), json!(record.authors));
    if let Some(url) = &record.url {
        doc.insert("url".into(), json!(url));
    }
    if let Some(pages) = &record.pages {
        doc.insert("pages".into(), json!(pages));
    }
    if let Some(venue) = &record.venue {
        doc.insert("venue".into(), json!(venue.venue_title));
        doc.insert("venue_type".into(), json!(venue.venue_type.as_str()));
        if let Some(issn) = &venue.issn {
            doc.insert("issn".into(), json!(issn));
        }
        if let Some(volume) = &venue.volume {
            doc.insert("volume".into(), json!(volume));
        }
        if let Some(issue) = &venue.issue {
            doc.insert("issue".into(), json!(issue));
        }
    }
    if let Some(publisher) = &record.publisher {
        doc.insert("publisher".into(), json!(publisher));
    }
    if let Some(editors) = &record.editors {
        doc.insert("editors".into(), json!(editors));
    }
    if let Some(isbn) = &record.isbn {
        doc.insert("isbn".into(), json!(isbn));
    }
    Value::Object(doc)
}

/// Parses a document produced by [`record_to_json`] back into a record.
pub fn record_from_json(doc: &Value) -> Option<CanonicalRecord> {
    let obj = doc.as_object()?;
    let kind = match obj.get("type")?.as_str()? {
        "article" => RecordKind::JournalArticle,
        "inproceedings" => RecordKind::ConferenceArticle,
        "book" => RecordKind::Book,
        "incollection" => RecordKind::BookChapter,
        _ => return None,
    };
    let mut record = CanonicalRecord::new(
        obj.get("key")?.as_str()?,
        obj.get("title")?.as_str()?,
        obj.get("year")?.as_i64()? as i32,
        kind,
    );
    record.authors = obj
        .get("authors")?
        .as_array()?
        .iter()
        .map(|a| a.as_str().map(String::from))
        .collect::<Option<_>>()?;
    record.url = obj.get("url").and_then(|v| v.as_str()).map(String::from);
    record.pages = obj.get("pages").and_then(|v| v.as_str()).map(String::from);
    if let Some(venue_title) = obj.get("venue").and_then(|v| v.as_str()) {
        record.venue = Some(crate::model::VenueRef {
            issn: obj.get("issn").and_then(|v| v.as_str()).map(String::from),
            venue_title: venue_title.to_string(),
            venue_type: obj
                .get("venue_type")
                .and_then(|v| v.as_str())
                .and_then(VenueType::parse)?,
            volume: obj.get("volume").and_then(|v| v.as_str()).map(String::from),
            issue: obj.get("issue").and_then(|v| v.as_str()).map(String::from),
        });
    }
    record.publisher = obj.get("publisher").and_then(|v| v.as_str()).map(String::from);
    record.editors = obj.get("editors").and_then(|v| v.as_array()).map(|editors| {
        editors
            .iter()
            .filter_map(|e| e.as_str().map(String::from))
            .collect()
    });
    record.isbn = obj.get("isbn").and_then(|v| v.as_str()).map(String::from);
    Some(record)
}

/// Writes all records as line-delimited JSON documents.
pub fn emit_json<'a, W, I>(out: &mut W, records: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a CanonicalRecord>,
{
    for record in records {
        serde_json::to_writer(&mut *out, &record_to_json(record))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads back a line-delimited JSON file written by [`emit_json`].
pub fn parse_json_lines<R: io::BufRead>(input: R) -> io::Result<Vec<CanonicalRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)?;
        let record = record_from_json(&value).ok_or_else(|| {
            io::Error::new(io::ErrorKind::InvalidData, "document does not match record shape")
        })?;
        records.push(record);
    }
    Ok(records)
}
