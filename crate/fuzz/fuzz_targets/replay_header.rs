#![no_main]

use libfuzzer_sys::fuzz_target;
use pvrl_agent::replay::ReplayHeader;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(header) = ReplayHeader::parse(text) {
        let again = ReplayHeader::parse(&header.to_text()).expect("canonical header parses");
        assert_eq!(header, again);
    }
});
