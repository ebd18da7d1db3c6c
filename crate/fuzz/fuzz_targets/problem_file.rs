#![no_main]

use libfuzzer_sys::fuzz_target;
use tau_core::problem::{build, ProblemFile};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(pf) = ProblemFile::parse(s) {
        let again = ProblemFile::parse(&pf.to_toml()).expect("serialized problems parse");
        assert_eq!(again, pf);
        let _ = build(&pf);
    }
});
