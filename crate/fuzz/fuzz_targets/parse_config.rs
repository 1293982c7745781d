#![no_main]
use libfuzzer_sys::fuzz_target;
use peakctl_core::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(s) {
            let _ = cfg.validate();
        }
    }
});
