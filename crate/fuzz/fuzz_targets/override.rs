#![no_main]

use aggdiff_cli::spec::{apply_override, parse_override};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ov) = parse_override(text) {
        let mut doc = toml::Table::new();
        if apply_override(&mut doc, &ov).is_ok() {
            let mut t = &doc;
            for key in &ov.path[..ov.path.len() - 1] {
                t = t[key].as_table().expect("intermediate tables created");
            }
            assert_eq!(t[ov.path.last().unwrap()], ov.value);
        }
    }
});
