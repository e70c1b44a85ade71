#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = physmap::config::RunConfig::from_toml(text) {
            let echo = cfg.effective().to_toml();
            let again = physmap::config::RunConfig::from_toml(&echo).unwrap();
            assert_eq!(again.effective().to_toml(), echo);
        }
    }
});
