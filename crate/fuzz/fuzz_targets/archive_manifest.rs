#![no_main]

use libfuzzer_sys::fuzz_target;
use pvrl_core::archive::{Archive, Manifest};

fuzz_target!(|data: &[u8]| {
    // First byte splits the input into manifest text and tensor bytes.
    let Some((&split, rest)) = data.split_first() else {
        return;
    };
    let cut = (split as usize).min(rest.len());
    let (text, bin) = rest.split_at(rest.len() - cut);
    let Ok(text) = std::str::from_utf8(text) else {
        return;
    };
    let Ok(manifest) = Manifest::parse(text) else {
        return;
    };
    let again = Manifest::parse(&manifest.to_text()).expect("canonical manifest parses");
    assert_eq!(manifest, again);
    let _ = Archive::from_parts(manifest, bin.to_vec());
});
