#![no_main]

use entcut::cft::{KacLabel, MinimalModel};
use entcut_cli::config::parse_label;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&p, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(x) = text.parse::<KacLabel>() {
        let again: KacLabel = format!("{},{}", x.r, x.s).parse().unwrap();
        assert_eq!(again, x);
    }
    let p = 3 + u32::from(p % 8);
    if let Ok(x) = parse_label(p, text) {
        let m = MinimalModel::new(p).unwrap();
        assert!(x.validate(&m).is_ok());
        assert_eq!(x.canonical(&m), x);
    }
});
