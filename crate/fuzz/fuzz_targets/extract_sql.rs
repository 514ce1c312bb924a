#![no_main]

use libfuzzer_sys::fuzz_target;
use spidereval_pipeline::extract_sql;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sql) = extract_sql(text) {
        assert!(!sql.is_empty());
        assert!(text.contains(sql.lines().next().unwrap_or_default()));
    }
});
