//! Fixture builders shared by the benchmarks.

use proxyexp::synth::{generate_corpus, SynthConfig, SyntheticData};

/// A smaller planted corpus than the default, sized for repeated timing runs.
pub fn small_synthetic(seed: u64) -> SyntheticData {
    let config = SynthConfig {
        seed,
        n_docs: 500,
        vocab_size: 300,
        n_codes: 10,
        ..SynthConfig::default()
    };
    generate_corpus(&config).expect("valid synthetic config")
}
