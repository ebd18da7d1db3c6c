#![no_main]

use libfuzzer_sys::fuzz_target;
use tau_core::rat::{fmt_q, parse_q};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Some(x) = parse_q(s) {
        assert_eq!(parse_q(&fmt_q(&x)), Some(x));
    }
});
