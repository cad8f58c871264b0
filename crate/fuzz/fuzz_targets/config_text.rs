#![no_main]

use libfuzzer_sys::fuzz_target;
use pvrl_core::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ExperimentConfig::from_text(text) else {
        return;
    };
    // Anything that parses must survive its own serialization.
    let again = ExperimentConfig::from_text(&cfg.to_text()).expect("canonical text parses");
    assert_eq!(cfg, again);
    let _ = cfg.validate();
});
