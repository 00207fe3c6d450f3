//! Normalized corpus format: one paper per line,
//! `venue<TAB>year<TAB>pages-or-?<TAB>author|author|...`.

use std::io::{BufRead, Write};

use super::{Corpus, CorpusBuilder, CorpusError, FilterConfig, IngestStats, RawRecord, VenueKind};

/// Reads the normalized format, applying the same filters as DBLP ingestion.
pub fn ingest_normalized<R: BufRead>(reader: R, filter: &FilterConfig) -> Result<(Corpus, IngestStats), CorpusError> {
    let mut builder = CorpusBuilder::new(filter.clone());
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(CorpusError::Line {
                line: lineno,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let year: i32 = fields[1].trim().parse().map_err(|_| CorpusError::Line {
            line: lineno,
            message: format!("invalid year {:?}", fields[1]),
        })?;
        let pages = match fields[2].trim() {
            "?" | "" => None,
            p => Some(p.parse::<u32>().map_err(|_| CorpusError::Line {
                line: lineno,
                message: format!("invalid page count {p:?}"),
            })?),
        };
        builder.push(RawRecord {
            venue: Some(fields[0].to_string()),
            kind: VenueKind::Conference,
            year: Some(year),
            pages,
            authors: fields[3].split('|').map(str::to_string).collect(),
        });
    }
    Ok(builder.finish())
}

fn check_field(s: &str) -> Result<&str, CorpusError> {
    if s.contains(['\t', '\n', '\r', '|']) {
        return Err(CorpusError::UnexportableField(s.to_string()));
    }
    Ok(s)
}

/// Writes every paper of `corpus` in the normalized format, in paper-id order.
pub fn export_normalized<W: Write>(corpus: &Corpus, mut out: W) -> Result<(), CorpusError> {
    for paper in corpus.papers() {
        let venue = check_field(&corpus.venue(paper.venue).name)?;
        let pages = paper.pages.map_or_else(|| "?".to_string(), |p| p.to_string());
        write!(out, "{venue}\t{}\t{pages}\t", paper.year)?;
        for (i, a) in paper.authors.iter().enumerate() {
            if i > 0 {
                out.write_all(b"|")?;
            }
            out.write_all(check_field(&corpus.author(*a).name)?.as_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
