#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let classes = vec!["Horror".to_string(), "Mystery".to_string()];
    if let Ok(records) = stylus_core::probe_io::parse_predictions(s, &classes, None) {
        assert!(records.len() <= s.lines().count());
    }
});
