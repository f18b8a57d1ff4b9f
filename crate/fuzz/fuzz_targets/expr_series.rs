#![no_main]

use atem_core::expr::{self, Bindings};
use atem_core::scalar::TwoFloat;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.is_empty() {
        return;
    }
    let capacity = 1 + data[0] as usize % 40;
    let Ok(text) = std::str::from_utf8(&data[1..]) else {
        return;
    };
    let Ok(e) = expr::parse(text) else {
        return;
    };
    let bindings: Bindings = e.parameters().into_iter().map(|p| (p, 0.25)).collect();
    if let Ok(s) = expr::to_series::<f64>(&e, &bindings, capacity) {
        assert!(s.is_finite());
        assert_eq!(s.capacity(), capacity);
    }
    let _ = expr::to_series::<TwoFloat>(&e, &bindings, capacity);
});
