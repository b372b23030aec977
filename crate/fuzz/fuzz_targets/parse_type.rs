#![no_main]

use chm_core::surface::{parse_qual_type, parse_scheme, parse_type};
use chm_core::types::TypeScheme;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_type(src) {
        assert_eq!(parse_type(&t.to_string()).as_ref(), Ok(&t), "{t}");
    }
    let _ = parse_qual_type(src);
    if let Ok(s) = parse_scheme(src) {
        let again = parse_scheme(&s.to_string()).expect("printed scheme parses");
        // Printed without a binder, free variables read back as quantified.
        let want =
            if s.quantified.is_empty() { TypeScheme::closed(s.context.clone(), s.body.clone()) } else { s.clone() };
        assert!(again.alpha_eq(&want), "{s}");
    }
});
