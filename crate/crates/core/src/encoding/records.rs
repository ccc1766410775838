//! Encoded-record files: the boundary through which externally produced
//! token encodings enter the index.
//!
//! ```text
//! {"format":"coil-enc","version":1,"n_t":32,"n_c":768}
//! {"id":"d1","token_ids":[5,9],"token_vecs":[[...],[...]],"cls_vec":[...]}
//! ```
//!
//! `cls_vec` is omitted when `n_c = 0`. Floats are written in shortest
//! round-trip form, so reading a written file reproduces every bit.

use std::io::{BufRead, Lines, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_id, EncodedDocument, TokenId};

pub const FORMAT_NAME: &str = "coil-enc";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodedHeader {
    pub n_t: usize,
    pub n_c: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderLine {
    format: String,
    version: u32,
    n_t: usize,
    n_c: usize,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    token_ids: &'a [TokenId],
    token_vecs: &'a [Vec<f32>],
    #[serde(skip_serializing_if = "Option::is_none")]
    cls_vec: Option<&'a Vec<f32>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordIn {
    id: String,
    token_ids: Vec<TokenId>,
    token_vecs: Vec<Vec<f32>>,
    #[serde(default)]
    cls_vec: Option<Vec<f32>>,
}

pub fn parse_header(line: &str) -> Result<EncodedHeader> {
    let h: HeaderLine = serde_json::from_str(line).map_err(|e| Error::parse(1, e))?;
    if h.format != FORMAT_NAME {
        return Err(Error::parse(1, format!("unexpected format `{}`", h.format)));
    }
    if h.version != FORMAT_VERSION {
        return Err(Error::Version {
            file: "encoded-record header".into(),
            found: h.version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(EncodedHeader { n_t: h.n_t, n_c: h.n_c })
}

/// Streams records in file order, validating each against the header.
pub struct RecordReader<R> {
    lines: Lines<R>,
    line_no: usize,
    header: EncodedHeader,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let first = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::parse(1, "missing header line")),
        };
        let header = parse_header(&first)?;
        Ok(RecordReader {
            lines,
            line_no: 1,
            header,
        })
    }

    pub fn header(&self) -> EncodedHeader {
        self.header
    }

    fn parse_record(&self, line: &str) -> Result<EncodedDocument> {
        let rec: RecordIn = serde_json::from_str(line).map_err(|e| Error::parse(self.line_no, e))?;
        validate_id(&rec.id)?;
        let doc = EncodedDocument {
            doc_id: rec.id,
            token_ids: rec.token_ids,
            token_vecs: rec.token_vecs,
            cls_vec: rec.cls_vec,
        };
        doc.check_dims(self.header.n_t, self.header.n_c)?;
        Ok(doc)
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<EncodedDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse_record(&line));
        }
    }
}

pub fn read_encoded<R: BufRead>(reader: R) -> Result<(EncodedHeader, Vec<EncodedDocument>)> {
    let reader = RecordReader::new(reader)?;
    let header = reader.header();
    let docs = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, docs))
}

pub struct RecordWriter<W: Write> {
    out: W,
    header: EncodedHeader,
    count: usize,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(mut out: W, header: EncodedHeader) -> Result<Self> {
        let line = HeaderLine {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            n_t: header.n_t,
            n_c: header.n_c,
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        Ok(RecordWriter { out, header, count: 0 })
    }

    pub fn write(&mut self, doc: &EncodedDocument) -> Result<()> {
        validate_id(&doc.doc_id)?;
        doc.check_dims(self.header.n_t, self.header.n_c)?;
        let rec = RecordOut {
            id: &doc.doc_id,
            token_ids: &doc.token_ids,
            token_vecs: &doc.token_vecs,
            cls_vec: doc.cls_vec.as_ref(),
        };
        serde_json::to_writer(&mut self.out, &rec).map_err(std::io::Error::from)?;
        self.out.write_all(b"\n")?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_encoded<W: Write>(out: W, header: EncodedHeader, docs: &[EncodedDocument]) -> Result<W> {
    let mut w = RecordWriter::new(out, header)?;
    for d in docs {
        w.write(d)?;
    }
    w.finish()
}
