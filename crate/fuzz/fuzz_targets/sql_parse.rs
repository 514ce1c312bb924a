#![no_main]

use libfuzzer_sys::fuzz_target;
use spidereval_core::hardness::classify_hardness;
use spidereval_core::sql::joins::detect_conditionless_join;
use spidereval_core::sql::{canonicalize, diff, parse_unbound, to_skeleton, to_sql};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(ast) = parse_unbound(text) else { return };
    let printed = to_sql(&ast);
    let again = parse_unbound(&printed).expect("printed SQL parses");
    assert_eq!(to_sql(&again), printed);
    let canon = canonicalize(&ast);
    assert_eq!(canonicalize(canon.ast()), canon);
    assert!(diff(&canon, &canon).is_empty());
    let _ = classify_hardness(&ast);
    let _ = detect_conditionless_join(&ast);
    let _ = to_skeleton(&ast);
});
