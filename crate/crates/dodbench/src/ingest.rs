//! Streaming ingestion of bibliographic XML into canonical records.
//!
//! The parser walks the event stream of a single-rooted XML file whose
//! direct children are publication elements (`article`, `inproceedings`,
//! `book`, `incollection`). Memory stays bounded by the size of one
//! publication element regardless of file size.

use crate::model::{validate_record, CanonicalRecord, RecordKind, VenueRef, VenueType, Violation};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use std::collections::BTreeMap;
use std::io::{self, BufRead};

/// Default cap on a single publication element; larger elements signal
/// corrupt input.
pub const DEFAULT_MAX_ELEMENT_BYTES: usize = 1024 * 1024;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub records_accepted: u64,
    pub records_skipped: u64,
    pub skip_reasons: BTreeMap<String, u64>,
    pub bytes_read: u64,
}

impl IngestStats {
    fn skip(&mut self, reason: &str) {
        self.records_skipped += 1;
        *self.skip_reasons.entry(reason.to_string()).or_insert(0) += 1;
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed XML at byte {position}: {detail}")]
    MalformedXml { position: u64, detail: String },
    #[error("publication element at byte {position} exceeds cap of {cap} bytes")]
    OversizedElement { position: u64, cap: usize },
    #[error("sink failed: {0}")]
    Sink(#[source] io::Error),
}

/// Consumer of ingested records; the parser hands over ownership, so a sink
/// may forward records to another thread.
pub trait RecordSink {
    fn accept(&mut self, record: CanonicalRecord) -> io::Result<()>;
}

impl<F: FnMut(CanonicalRecord) -> io::Result<()>> RecordSink for F {
    fn accept(&mut self, record: CanonicalRecord) -> io::Result<()> {
        self(record)
    }
}

/// Maps an XML publication element name onto a record kind; any name outside
/// the four-entry table is unmapped and the element is skipped.
pub fn map_kind(element_name: &str) -> Option<RecordKind> {
    match element_name {
        "article" => Some(RecordKind::JournalArticle),
        "inproceedings" => Some(RecordKind::ConferenceArticle),
        "book" => Some(RecordKind::Book),
        "incollection" => Some(RecordKind::BookChapter),
        _ => None,
    }
}

#[derive(Debug, Default)]
struct PendingVenue {
    issn: Option<String>,
    venue_type: Option<VenueType>,
    volume: Option<String>,
    issue: Option<String>,
    title: String,
}

#[derive(Debug)]
struct PendingRecord {
    kind: Option<RecordKind>,
    element_name: String,
    key: Option<String>,
    start_position: u64,
    title: Option<String>,
    url: Option<String>,
    year: Option<i32>,
    authors: Vec<String>,
    pages: Option<String>,
    venue: Option<PendingVenue>,
    publisher: Option<String>,
    editors: Vec<String>,
    isbn: Option<String>,
}

impl PendingRecord {
    fn new(name: &str, key: Option<String>, start_position: u64) -> Self {
        PendingRecord {
            kind: map_kind(name),
            element_name: name.to_string(),
            key,
            start_position,
            title: None,
            url: None,
            year: None,
            authors: Vec::new(),
            pages: None,
            venue: None,
            publisher: None,
            editors: Vec::new(),
            isbn: None,
        }
    }

    fn venue_mut(&mut self) -> &mut PendingVenue {
        self.venue.get_or_insert_with(PendingVenue::default)
    }

    fn set_field(&mut self, name: &str, text: String) {
        match name {
            "title" => self.title = Some(text),
            "url" | "ee" => self.url = Some(text),
            "year" => self.year = text.trim().parse().ok(),
            "author" => self.authors.push(text),
            "pages" => self.pages = Some(text),
            "publisher" => self.publisher = Some(text),
            "editor" => self.editors.push(text),
            "isbn" => self.isbn = Some(text),
            // DBLP-style venue children
            "journal" => {
                let v = self.venue_mut();
                v.title = text;
                v.venue_type.get_or_insert(VenueType::Journal);
            }
            "booktitle" => {
                let v = self.venue_mut();
                v.title = text;
                v.venue_type.get_or_insert(VenueType::Proceedings);
            }
            "volume" => self.venue_mut().volume = Some(text),
            "number" => self.venue_mut().issue = Some(text),
            "issn" => self.venue_mut().issn = Some(text),
            "venue" => self.venue_mut().title = text,
            _ => {}
        }
    }

    fn set_venue_attrs(&mut self, attrs: &BTreeMap<String, String>) {
        let v = self.venue_mut();
        if let Some(issn) = attrs.get("issn") {
            v.issn = Some(issn.clone());
        }
        if let Some(t) = attrs.get("type").and_then(|t| VenueType::parse(t)) {
            v.venue_type = Some(t);
        }
        if let Some(vol) = attrs.get("volume") {
            v.volume = Some(vol.clone());
        }
        if let Some(issue) = attrs.get("issue") {
            v.issue = Some(issue.clone());
        }
    }

    fn finish(self, seq: u64) -> Result<CanonicalRecord, &'static str> {
        let kind = self.kind.ok_or("unmapped kind")?;
        let year = self.year.ok_or("missing year")?;
        let record_id = self
            .key
            .unwrap_or_else(|| format!("{}-{}", self.element_name, seq));
        let mut record = CanonicalRecord::new(record_id, self.title.unwrap_or_default(), year, kind);
        record.url = self.url;
        record.authors = self.authors;
        record.pages = self.pages;
        record.publisher = self.publisher;
        if !self.editors.is_empty() {
            record.editors = Some(self.editors);
        }
        record.isbn = self.isbn;
        if let Some(v) = self.venue {
            if kind.is_article() {
                record.venue = Some(VenueRef {
                    issn: v.issn,
                    venue_title: v.title,
                    venue_type: v.venue_type.unwrap_or(VenueType::Journal),
                    volume: v.volume,
                    issue: v.issue,
                });
            }
            // venue children on books are dropped rather than violating the model
        }
        match validate_record(&record) {
            Ok(()) => Ok(record),
            Err(violations) => {
                if violations.contains(&Violation::EmptyTitle) {
                    Err("empty title")
                } else {
                    Err("invalid record")
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    pub max_element_bytes: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { max_element_bytes: DEFAULT_MAX_ELEMENT_BYTES }
    }
}

/// Streams publication elements out of `input`, delivering each valid record
/// to `sink` in document order.
pub fn ingest_stream<R: BufRead, S: RecordSink>(
    input: R,
    sink: &mut S,
    options: IngestOptions,
) -> Result<IngestStats, IngestError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(true);

    let mut stats = IngestStats::default();
    let mut buf = Vec::new();
    let mut depth: usize = 0;
    let mut pending: Option<PendingRecord> = None;
    // text accumulator for the current depth-2 field element
    let mut field: Option<(String, String)> = None;
    let mut seen = 0u64;

    loop {
        let position = reader.buffer_position();
        let event = reader.read_event_into(&mut buf).map_err(|e| IngestError::MalformedXml {
            position: reader.buffer_position(),
            detail: e.to_string(),
        })?;
        if let Some(p) = &pending {
            if (reader.buffer_position() - p.start_position) as usize > options.max_element_bytes {
                return Err(IngestError::OversizedElement {
                    position: p.start_position,
                    cap: options.max_element_bytes,
                });
            }
        }
        match event {
            Event::Start(e) => {
                depth += 1;
                if depth == 2 {
                    seen += 1;
                    pending = Some(start_publication(&reader, &e, position)?);
                } else if depth == 3 {
                    if let Some(p) = &mut pending {
                        let name = element_name(&reader, &e)?;
                        if name == "venue" || name == "journal" || name == "booktitle" {
                            p.set_venue_attrs(&read_attrs(&reader, &e)?);
                        }
                        field = Some((name, String::new()));
                    }
                }
            }
            Event::Empty(e) => {
                if depth == 1 {
                    seen += 1;
                    let p = start_publication(&reader, &e, position)?;
                    finish_publication(p, seen, sink, &mut stats)?;
                } else if depth == 2 {
                    if let Some(p) = &mut pending {
                        let name = element_name(&reader, &e)?;
                        if name == "venue" || name == "journal" || name == "booktitle" {
                            p.set_venue_attrs(&read_attrs(&reader, &e)?);
                        }
                        p.set_field(&name, String::new());
                    }
                }
            }
            Event::Text(t) => {
                if let Some((_, acc)) = &mut field {
                    let text = t.unescape().map_err(|e| IngestError::MalformedXml {
                        position: reader.buffer_position(),
                        detail: e.to_string(),
                    })?;
                    acc.push_str(&text);
                }
            }
            Event::End(_) => {
                if depth == 3 {
                    if let (Some(p), Some((name, text))) = (&mut pending, field.take()) {
                        p.set_field(&name, text);
                    }
                } else if depth == 2 {
                    if let Some(p) = pending.take() {
                        finish_publication(p, seen, sink, &mut stats)?;
                    }
                }
                depth = depth.saturating_sub(1);
            }
            Event::Eof => {
                if depth > 0 || pending.is_some() {
                    return Err(IngestError::MalformedXml {
                        position: reader.buffer_position(),
                        detail: "unexpected end of input with unclosed elements".into(),
                    });
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    stats.bytes_read = reader.buffer_position();
    debug_assert_eq!(stats.records_accepted + stats.records_skipped, seen);
    Ok(stats)
}

fn start_publication<R>(
    reader: &Reader<R>,
    e: &BytesStart<'_>,
    position: u64,
) -> Result<PendingRecord, IngestError> {
    let name = element_name(reader, e)?;
    let attrs = read_attrs(reader, e)?;
    Ok(PendingRecord::new(&name, attrs.get("key").cloned(), position))
}

fn finish_publication<S: RecordSink>(
    pending: PendingRecord,
    seq: u64,
    sink: &mut S,
    stats: &mut IngestStats,
) -> Result<(), IngestError> {
    match pending.finish(seq) {
        Ok(record) => {
            sink.accept(record).map_err(IngestError::Sink)?;
            stats.records_accepted += 1;
        }
        Err(reason) => stats.skip(reason),
    }
    Ok(())
}

fn element_name<R>(reader: &Reader<R>, e: &BytesStart<'_>) -> Result<String, IngestError> {
    String::from_utf8(e.name().as_ref().to_vec()).map_err(|err| IngestError::MalformedXml {
        position: reader.buffer_position(),
        detail: err.to_string(),
    })
}

fn read_attrs<R>(
    reader: &Reader<R>,
    e: &BytesStart<'_>,
) -> Result<BTreeMap<String, String>, IngestError> {
    let mut attrs = BTreeMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| IngestError::MalformedXml {
            position: reader.buffer_position(),
            detail: err.to_string(),
        })?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|err| IngestError::MalformedXml {
                position: reader.buffer_position(),
                detail: err.to_string(),
            })?
            .into_owned();
        attrs.insert(key, value);
    }
    Ok(attrs)
}

/// Convenience wrapper collecting every record into memory; tests and small
/// fixtures only.
pub fn ingest_to_vec<R: BufRead>(
    input: R,
    options: IngestOptions,
) -> Result<(Vec<CanonicalRecord>, IngestStats), IngestError> {
    let mut records = Vec::new();
    let mut sink = |r: CanonicalRecord| {
        records.push(r);
        Ok(())
    };
    let stats = ingest_stream(input, &mut sink, options)?;
    Ok((records, stats))
}
