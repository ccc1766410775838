#![no_main]

use coil::index::decode_cls;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((n_c, num_docs, matrix)) = decode_cls(data) {
        assert_eq!(matrix.len(), n_c * num_docs);
    }
});
