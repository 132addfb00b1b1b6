#![no_main]

use entcut_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_toml_str(text) {
        // an accepted config yields a chain for every length
        for &l in &cfg.run.lengths {
            cfg.chain(l).expect("validated config builds its chains");
            let cut = cfg.cut_for(l);
            assert!(cut >= 1 && cut < l);
        }
    }
});
