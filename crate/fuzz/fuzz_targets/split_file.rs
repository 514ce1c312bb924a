#![no_main]

use libfuzzer_sys::fuzz_target;
use spidereval_core::corpus::skeleton_response;
use spidereval_core::dataset::RawExample;
use spidereval_core::hardness::classify_hardness;
use spidereval_core::sql::parse_unbound;

fuzz_target!(|data: &[u8]| {
    let Ok(examples) = serde_json::from_slice::<Vec<RawExample>>(data) else { return };
    for e in &examples {
        if let Ok(ast) = parse_unbound(&e.query) {
            let _ = classify_hardness(&ast);
        }
        let _ = skeleton_response(&e.query);
    }
});
