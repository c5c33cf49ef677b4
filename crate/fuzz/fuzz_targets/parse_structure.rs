#![no_main]

use libfuzzer_sys::fuzz_target;
use pvcsp::model::parse;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = parse(text) else { return };
    // Anything that parses must print back to a fixed point.
    let printed = file.structure.to_text(file.threshold.as_ref());
    let again = parse(&printed).expect("printed structure parses");
    assert_eq!(again.structure, file.structure);
    assert_eq!(again.threshold, file.threshold);
    assert_eq!(again.structure.to_text(again.threshold.as_ref()), printed);
});
