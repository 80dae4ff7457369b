#![no_main]

use dynprog::FiniteMdp;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = FiniteMdp::from_json(text) {
        // Anything accepted must survive a second trip unchanged.
        let again = FiniteMdp::from_json(&model.to_json()).expect("serialized model reparses");
        assert_eq!(again.to_json(), model.to_json());
    }
});
