#![no_main]

use libfuzzer_sys::fuzz_target;
use spidereval_pipeline::transcript::{parse_line, to_line};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_line(text) {
        let line = to_line(&t);
        let back = parse_line(&line).expect("serialized transcript parses");
        assert_eq!(to_line(&back), line);
    }
});
