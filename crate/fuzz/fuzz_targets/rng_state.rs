#![no_main]

use libfuzzer_sys::fuzz_target;
use pvrl_core::seed::RngState;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Some(state) = RngState::decode(text) {
        assert_eq!(RngState::decode(&state.encode()), Some(state));
        let _ = state.restore();
    }
});
