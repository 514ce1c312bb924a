#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use spidereval_core::schema::{parse_tables_json, DatabaseSchema};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(entries) = parse_tables_json(text) else { return };
    for (i, e) in entries.iter().enumerate() {
        if let Ok(schema) = DatabaseSchema::from_spider_entry(i, e, Path::new("/nonexistent")) {
            let _ = schema.validate(i);
            let _ = schema.prompt_block();
            let _ = schema.to_spider_entry();
        }
    }
});
