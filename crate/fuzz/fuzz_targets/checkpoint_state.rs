#![no_main]

use libfuzzer_sys::fuzz_target;
use pvrl_agent::checkpoint::CheckpointState;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(state) = CheckpointState::parse(text) {
        let again = CheckpointState::parse(&state.to_text()).expect("canonical sidecar parses");
        assert_eq!(state, again);
    }
});
