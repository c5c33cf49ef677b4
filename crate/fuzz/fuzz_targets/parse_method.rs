#![no_main]

use libfuzzer_sys::fuzz_target;
use pvcsp::relax::Method;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = text.parse::<Method>() {
        assert_eq!(m.to_string().parse::<Method>().expect("printed method parses"), m);
    }
});
