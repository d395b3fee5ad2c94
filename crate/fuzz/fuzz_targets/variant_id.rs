#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let (kind, cat) = match s.split_once(':') {
        Some((k, c)) => (k, Some(c)),
        None => (s, None),
    };
    if let Ok(v) = stylus_core::perturb::VariantKind::parse(kind, cat) {
        assert_eq!(stylus_core::perturb::VariantKind::parse(&v.id(), None).unwrap(), v);
    }
});
