#![no_main]

use std::path::Path;

use chm_cli::corpus::parse_expect;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let _ = parse_expect(Path::new("fuzz.expect"), src);
});
