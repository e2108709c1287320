//! Fixtures shared by the benchmarks.

use guidance_core::analysis::Design;
use guidance_core::guidance::catalog::reference_rules;
use guidance_core::guidance::compile_ruleset;
use guidance_core::{CompiledRuleSet, DraftState, RuleSetDocument};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// The reference catalog repeated until it holds `n` rules, each renamed so
/// names stay unique.
pub fn ruleset_of(n: usize) -> CompiledRuleSet {
    let catalog = reference_rules();
    let rules = (0..n)
        .map(|i| {
            let mut rule = catalog[i % catalog.len()].rule.clone();
            rule.name = format!("{}-{i}", rule.name);
            rule.enabled = true;
            rule
        })
        .collect();
    compile_ruleset(RuleSetDocument { community_id: "bench".into(), version: 1, rules }).expect("catalog compiles")
}

/// A draft whose body is `len` characters of prose with an occasional link.
pub fn draft_of(len: usize) -> DraftState {
    let body: String = "the engine stalls when cold, see example.org for logs. ".chars().cycle().take(len).collect();
    DraftState::new("bench", "u1", "Why does my engine stall", body)
}

/// Arm indicator plus a binary covariate and their product, with Poisson
/// responses drawn around a known multiplicative model.
pub fn poisson_data(n: usize, seed: u64) -> (Vec<f64>, Design) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut treat = Vec::with_capacity(n);
    let mut cov = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let t = f64::from(rng.random_bool(0.5));
        let c = f64::from(rng.random_bool(0.3));
        let mean = (0.2 - 0.14 * t + 0.3 * c - 0.1 * t * c).exp();
        y.push(Poisson::new(mean).expect("positive mean").sample(&mut rng));
        treat.push(t);
        cov.push(c);
    }
    let inter: Vec<f64> = treat.iter().zip(&cov).map(|(t, c)| t * c).collect();
    let design = Design::from_columns(&["treatment", "covariate", "interaction"], &[treat, cov, inter])
        .expect("well-formed columns");
    (y, design)
}
