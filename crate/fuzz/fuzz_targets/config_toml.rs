#![no_main]

use libfuzzer_sys::fuzz_target;
use tqsl::harness::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_toml_str(text) {
            // accepted configs must yield a usable time grid
            let times = cfg.times.times().expect("validated config has a time grid");
            assert!(!times.is_empty());
        }
    }
});
