#![no_main]

use dynprog::zoo::{build, names, parse_params};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut lines = text.lines();
    let Some(first) = lines.next() else { return };
    let items: Vec<&str> = lines.collect();
    if let Ok(params) = parse_params(&items) {
        // Only the cheap finite models are built; the rest just validate.
        let name = names().into_iter().find(|n| *n == first.trim()).unwrap_or("machine_replacement");
        if matches!(name, "machine_replacement" | "queueing") {
            let _ = build(name, &params);
        }
    }
});
