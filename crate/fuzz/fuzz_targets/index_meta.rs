#![no_main]

use coil::index::IndexMeta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = IndexMeta::from_json(data);
});
