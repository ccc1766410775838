//! Line-delimited JSON corpus and query files: one `{"id", "text"}` object
//! per line.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_unique_ids, Document, Query};

#[derive(Deserialize, Serialize)]
struct TextRecord {
    id: String,
    text: String,
}

fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e))?);
    }
    Ok(out)
}

/// Reads a corpus, validating that ids are unique and whitespace-free.
pub fn read_documents<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let docs: Vec<Document> = read_jsonl::<TextRecord, _>(reader)?
        .into_iter()
        .map(|r| Document { id: r.id, text: r.text })
        .collect();
    validate_unique_ids(docs.iter().map(|d| d.id.as_str()))?;
    Ok(docs)
}

pub fn read_queries<R: BufRead>(reader: R) -> Result<Vec<Query>> {
    let queries: Vec<Query> = read_jsonl::<TextRecord, _>(reader)?
        .into_iter()
        .map(|r| Query { id: r.id, text: r.text })
        .collect();
    validate_unique_ids(queries.iter().map(|q| q.id.as_str()))?;
    Ok(queries)
}

pub fn write_documents<W: Write>(mut w: W, docs: &[Document]) -> Result<()> {
    for d in docs {
        let rec = TextRecord {
            id: d.id.clone(),
            text: d.text.clone(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
