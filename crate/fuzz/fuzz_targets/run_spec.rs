#![no_main]

use aggdiff_cli::RunSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = RunSpec::from_toml_str(text) {
        // A validated spec must survive its own round trip.
        let again = RunSpec::from_toml_str(&spec.to_toml()).expect("resolved spec reparses");
        assert_eq!(spec.to_toml(), again.to_toml());
    }
});
