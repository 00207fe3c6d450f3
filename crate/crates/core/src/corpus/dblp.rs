//! Streaming reader for the DBLP XML dump (plain or gzip).
//!
//! Records are the children of the root `<dblp>` element. Only `article`
//! (journals) and `inproceedings` (conferences) become papers; everything
//! else in the DBLP vocabulary is dropped and counted by kind. `www` records
//! under `homepages/` contribute author aliases.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use quick_xml::escape::{resolve_html5_entity, resolve_predefined_entity};
use quick_xml::events::{BytesRef, BytesStart, Event};
use quick_xml::Reader;

use super::{parse_page_count, Corpus, CorpusBuilder, CorpusError, FilterConfig, IngestStats};
use super::{RawRecord, VenueKind};

const KNOWN_KINDS: &[&str] = &[
    "article",
    "inproceedings",
    "proceedings",
    "book",
    "incollection",
    "phdthesis",
    "mastersthesis",
    "www",
    "data",
    "person",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Author,
    Year,
    Pages,
    Journal,
    Booktitle,
}

impl Field {
    fn from_tag(tag: &[u8]) -> Option<Self> {
        Some(match tag {
            b"author" => Field::Author,
            b"year" => Field::Year,
            b"pages" => Field::Pages,
            b"journal" => Field::Journal,
            b"booktitle" => Field::Booktitle,
            _ => return None,
        })
    }
}

#[derive(Debug, Default)]
struct Pending {
    kind: String,
    key: String,
    informal: bool,
    authors: Vec<String>,
    year: Option<String>,
    pages: Option<String>,
    journal: Option<String>,
    booktitle: Option<String>,
}

impl Pending {
    fn start(e: &BytesStart<'_>, kind: String) -> Self {
        let mut p = Pending {
            kind,
            ..Default::default()
        };
        for attr in e.attributes().flatten() {
            let value = String::from_utf8_lossy(&attr.value).into_owned();
            match attr.key.as_ref() {
                b"key" => p.key = value,
                b"publtype" => p.informal = value.contains("informal"),
                _ => {}
            }
        }
        p
    }

    fn store(&mut self, field: Field, text: String) {
        let text = text.trim().to_string();
        match field {
            Field::Author => self.authors.push(text),
            Field::Year => self.year = Some(text),
            Field::Pages => self.pages = Some(text),
            Field::Journal => self.journal = Some(text),
            Field::Booktitle => self.booktitle = Some(text),
        }
    }
}

fn resolve_ref(r: &BytesRef<'_>, out: &mut String) {
    if r.is_char_ref() {
        if let Ok(Some(c)) = r.resolve_char_ref() {
            out.push(c);
        }
        return;
    }
    let name = String::from_utf8_lossy(r);
    match resolve_predefined_entity(&name).or_else(|| resolve_html5_entity(&name)) {
        Some(s) => out.push_str(s),
        None => {
            out.push('&');
            out.push_str(&name);
            out.push(';');
        }
    }
}

/// Parses a DBLP XML stream into a filtered corpus.
///
/// The stream is processed event by event and never materialized. Malformed
/// XML fails with the byte offset of the offending markup; element kinds
/// outside the DBLP vocabulary are skipped and counted.
pub fn ingest_dblp<R: BufRead>(reader: R, filter: &FilterConfig) -> Result<(Corpus, IngestStats), CorpusError> {
    let mut xml = Reader::from_reader(reader);
    xml.config_mut().trim_text(false);
    let mut builder = CorpusBuilder::new(filter.clone());
    let mut buf = Vec::with_capacity(8192);

    let mut depth = 0usize;
    let mut record: Option<Pending> = None;
    let mut field: Option<Field> = None;
    let mut text = String::new();

    loop {
        let event = xml.read_event_into(&mut buf).map_err(|e| CorpusError::Xml {
            offset: xml.error_position(),
            message: e.to_string(),
        })?;
        match event {
            Event::Start(ref e) => {
                depth += 1;
                if depth == 2 {
                    let kind = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                    record = Some(Pending::start(e, kind));
                } else if depth == 3 && record.is_some() {
                    field = Field::from_tag(e.name().as_ref());
                    text.clear();
                }
            }
            Event::Empty(ref e) if depth == 1 => {
                let kind = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                finish_record(&mut builder, Pending::start(e, kind));
            }
            Event::Text(ref e) if field.is_some() => {
                let decoded = e.decode().map_err(|err| CorpusError::Xml {
                    offset: xml.buffer_position(),
                    message: err.to_string(),
                })?;
                text.push_str(&decoded);
            }
            Event::CData(ref e) if field.is_some() => {
                text.push_str(&String::from_utf8_lossy(e));
            }
            Event::GeneralRef(ref r) if field.is_some() => resolve_ref(r, &mut text),
            Event::End(_) => {
                if depth == 3 {
                    if let (Some(f), Some(rec)) = (field.take(), record.as_mut()) {
                        rec.store(f, std::mem::take(&mut text));
                    }
                } else if depth == 2 {
                    if let Some(rec) = record.take() {
                        finish_record(&mut builder, rec);
                    }
                }
                depth = depth.saturating_sub(1);
            }
            Event::Eof => {
                if depth != 0 {
                    return Err(CorpusError::Xml {
                        offset: xml.buffer_position(),
                        message: format!("unexpected end of input with {depth} open element(s)"),
                    });
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    Ok(builder.finish())
}

fn finish_record(builder: &mut CorpusBuilder, rec: Pending) {
    let filter = builder.filter().clone();
    let kind = match rec.kind.as_str() {
        "article" => VenueKind::Journal,
        "inproceedings" => VenueKind::Conference,
        "incollection" if filter.keep_incollection => VenueKind::Journal,
        other => {
            let stats = builder.stats_mut();
            stats.records_seen += 1;
            if KNOWN_KINDS.contains(&other) {
                *stats.dropped_kind.entry(other.to_string()).or_insert(0) += 1;
            } else {
                *stats.skipped_unknown_kind.entry(other.to_string()).or_insert(0) += 1;
            }
            if other == "www" && rec.key.starts_with("homepages/") && rec.authors.len() > 1 {
                let mut names = rec.authors.into_iter();
                let canonical = names.next().expect("len > 1");
                builder.add_aliases(canonical, names.collect());
            }
            return;
        }
    };
    let venue = match kind {
        VenueKind::Journal if rec.kind == "article" => rec.journal,
        _ => rec.booktitle,
    };
    if filter.drop_preprints && (rec.informal || venue.as_deref() == Some("CoRR")) {
        let stats = builder.stats_mut();
        stats.records_seen += 1;
        stats.dropped_preprint += 1;
        return;
    }
    builder.push(RawRecord {
        venue,
        kind,
        year: rec.year.and_then(|y| y.trim().parse().ok()),
        pages: rec.pages.as_deref().and_then(parse_page_count),
        authors: rec.authors,
    });
}

/// Opens a DBLP dump from disk, transparently decompressing gzip input.
pub fn ingest_dblp_path(path: &Path, filter: &FilterConfig) -> Result<(Corpus, IngestStats), CorpusError> {
    let mut file = BufReader::with_capacity(1 << 16, File::open(path)?);
    let gzipped = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if gzipped {
        ingest_dblp(BufReader::new(MultiGzDecoder::new(file)), filter)
    } else {
        ingest_dblp(file, filter)
    }
}
