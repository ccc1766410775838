#![no_main]

use coil::corpus::{read_documents, read_queries, write_documents};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_queries(data);
    if let Ok(docs) = read_documents(data) {
        let mut out = Vec::new();
        write_documents(&mut out, &docs).unwrap();
        assert_eq!(read_documents(out.as_slice()).unwrap(), docs);
    }
});
