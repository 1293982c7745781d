#![no_main]
use libfuzzer_sys::fuzz_target;
use peakctl_core::config::parse_config;

// Serializing an accepted configuration must give text that parses back to
// the same value.
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = parse_config(s) else { return };
    let text = cfg.to_json();
    let again = parse_config(&text).expect("serialized configuration parses");
    if again != cfg {
        panic!("round trip changed the configuration:\n{text}");
    }
});
