#![no_main]

use coil::eval::{read_run, write_run};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(run) = read_run(data) {
        let mut out = Vec::new();
        write_run(&mut out, &run, "fuzz").unwrap();
        let again = read_run(out.as_slice()).unwrap();
        for (qid, list) in &run.lists {
            assert_eq!(
                again.get(qid).unwrap().doc_ids().collect::<Vec<_>>(),
                list.doc_ids().collect::<Vec<_>>()
            );
        }
    }
});
