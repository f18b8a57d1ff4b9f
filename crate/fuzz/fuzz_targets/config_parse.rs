#![no_main]

use atem_core::config::{self, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(pairs) = config::parse_pairs(text) else {
        return;
    };
    let Ok(cfg) = RunConfig::from_pairs(&pairs) else {
        return;
    };
    let _ = cfg.problem();
    let _ = cfg.converge_settings();
    let _ = cfg.oracle_grid();
});
