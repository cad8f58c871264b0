#![no_main]

use libfuzzer_sys::fuzz_target;
use pvrl_bench::metrics::{parse_metrics, write_all};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(rows) = parse_metrics(text) else {
        return;
    };
    let mut out = Vec::new();
    write_all(&mut out, &rows).expect("writing to memory");
    let again = parse_metrics(std::str::from_utf8(&out).unwrap()).expect("written rows parse");
    assert_eq!(rows, again);
});
