#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use tau_core::{Ctx, SessionConfig, ValSeries};

fn ctx() -> &'static Ctx {
    static CTX: OnceLock<Ctx> = OnceLock::new();
    CTX.get_or_init(|| SessionConfig::new(2, 1).build().unwrap())
}

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(x) = ValSeries::parse_literal(ctx(), s) {
        let lit = x.to_literal();
        let back = ValSeries::parse_literal(ctx(), &lit).expect("printed literals parse");
        assert_eq!(back.to_literal(), lit);
    }
});
