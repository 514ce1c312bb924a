#![no_main]

use libfuzzer_sys::fuzz_target;
use spidereval_pipeline::chat::{parse_chat_response, response_body};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(content) = parse_chat_response(text) {
        let body = response_body("m", &content);
        assert_eq!(parse_chat_response(&body).unwrap(), content);
    }
});
