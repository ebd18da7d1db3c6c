#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use tau_core::problem::parse_element;
use tau_core::{Ctx, SessionConfig, ValSeries};

fn ctx() -> &'static Ctx {
    static CTX: OnceLock<Ctx> = OnceLock::new();
    CTX.get_or_init(|| SessionConfig::new(3, 1).build().unwrap())
}

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(x) = parse_element(ctx(), s) {
        let back = ValSeries::parse_literal(ctx(), &x.to_literal()).expect("printed literals parse");
        assert_eq!(back.terms(), x.terms());
    }
});
