#![no_main]

use atem_core::expr::{self, Bindings};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(e) = expr::parse(text) else {
        return;
    };
    // Printing must reparse to the same canonical text.
    let printed = e.to_string();
    let again = expr::parse(&printed).expect("printed expression reparses");
    assert_eq!(again.to_string(), printed);
    let bindings: Bindings = e.parameters().into_iter().map(|p| (p, 0.5)).collect();
    let _ = e.eval(0.3, &bindings);
});
