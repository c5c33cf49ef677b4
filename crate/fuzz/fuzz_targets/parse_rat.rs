#![no_main]

use libfuzzer_sys::fuzz_target;
use pvcsp::arith::{fmt_rat, parse_rat, ExtRat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = parse_rat(text) {
        assert_eq!(parse_rat(&fmt_rat(&r)).expect("printed rational parses"), r);
    }
    if let Ok(x) = text.parse::<ExtRat>() {
        assert_eq!(x.to_string().parse::<ExtRat>().expect("printed value parses"), x);
    }
});
