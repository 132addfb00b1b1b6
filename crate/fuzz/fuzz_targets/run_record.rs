#![no_main]

use entcut_cli::record::RunRecord;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rec) = RunRecord::from_json(data) {
        // anything that verifies re-serializes to a record that verifies
        let again = RunRecord::from_json(&rec.to_json()).expect("round trip");
        assert_eq!(again, rec);
    }
});
