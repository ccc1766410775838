#![no_main]

use coil::encoding::records::{read_encoded, write_encoded};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((header, docs)) = read_encoded(data) {
        let out = write_encoded(Vec::new(), header, &docs).unwrap();
        assert_eq!(read_encoded(out.as_slice()).unwrap(), (header, docs));
    }
});
