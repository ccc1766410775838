#![no_main]

use coil::eval::{read_qrels, write_qrels};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(qrels) = read_qrels(data) {
        let mut out = Vec::new();
        write_qrels(&mut out, &qrels).unwrap();
        assert_eq!(read_qrels(out.as_slice()).unwrap(), qrels);
    }
});
