#![no_main]

use libfuzzer_sys::fuzz_target;
use spidereval_cli::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = toml::from_str::<Config>(text) else { return };
    if config.validate().is_ok() {
        let _ = config.pipeline();
        let _ = config.generator();
        let _ = config.corrector();
        let _ = config.digest();
    }
});
