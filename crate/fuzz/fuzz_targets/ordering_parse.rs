#![no_main]

use atem_core::hamiltonian::Ordering;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ord) = text.parse::<Ordering>() {
        let s = ord.spec;
        assert!((s.eta + s.eps + s.rho + 1.0).abs() < 1e-9);
        let _ = ord.label();
    }
});
