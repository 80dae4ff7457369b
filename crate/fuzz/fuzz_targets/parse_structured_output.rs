#![no_main]

use dynprog::cli::{parse_structured_output, to_structured};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(out) = parse_structured_output(text) {
        let again = parse_structured_output(&to_structured(&out)).expect("rendered output reparses");
        assert_eq!(again, out);
    }
});
