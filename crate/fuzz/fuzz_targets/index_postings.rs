#![no_main]

use coil::index::decode_postings;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((n_t, lists)) = decode_postings(data) {
        for list in &lists {
            assert_eq!(list.dim(), n_t);
            assert_eq!(list.vectors().len(), list.len() * n_t);
            assert!(list.doc_refs().windows(2).all(|w| w[0] <= w[1]));
        }
    }
});
