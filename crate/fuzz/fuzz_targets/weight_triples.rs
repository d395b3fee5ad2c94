#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    use stylus_core::probe_io::{parse_weight_triples, NegativePolicy, WeightKind};
    for policy in [NegativePolicy::Reject, NegativePolicy::Clamp] {
        if let Ok((m, _)) = parse_weight_triples(s, WeightKind::Count, policy) {
            assert_eq!(m.weights.len(), m.groups.len());
            assert!(m.weights.iter().all(|r| r.len() == m.tokens.len()));
            assert!(m.weights.iter().flatten().all(|w| w.is_finite() && *w >= 0.0));
        }
    }
});
