#![no_main]

use libfuzzer_sys::fuzz_target;
use tqsl::harness::sweep::{parse_sweep_csv, sweep_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(rows) = parse_sweep_csv(text) else { return };
    // rows that parsed once must survive a write/parse round trip
    let written = sweep_csv(&rows).expect("rows serialize");
    let again = parse_sweep_csv(&written).expect("own output parses");
    assert_eq!(sweep_csv(&again).expect("rows serialize"), written);
});
