#![no_main]

use chm_core::surface::print_program;
use chm_core::{infer_program, parse, Options};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(p) = parse(src) else { return };
    let once = print_program(&p);
    let q = parse(&once).expect("printed program parses");
    assert_eq!(once, print_program(&q));
    // Small fuel keeps every input fast; errors are fine, panics are not.
    let _ = infer_program(&p, &Options { fuel: 300, ..Options::default() });
});
