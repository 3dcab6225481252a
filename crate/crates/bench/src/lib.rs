//! Shared fixtures for the benchmarks.

use rand::Rng;
use tensor_bandits::rng::{stream, Purpose};
use tensor_bandits::{synth_tucker_env, Arm, Environment, Observation};

/// Noisy cubic Tucker environment with equal ranks.
pub fn cubic_env(p: usize, r: usize, seed: u64) -> Environment {
    synth_tucker_env(&[p, p, p], &[r, r, r], 0.8, 1.0, 0, seed).expect("valid synthetic shape")
}

/// `count` uniformly sampled noisy observations of `env`.
pub fn uniform_observations(env: &Environment, count: usize, seed: u64) -> Vec<Observation> {
    let dims = env.dims().to_vec();
    let total: usize = dims.iter().product();
    let mut pick = stream(seed, 0, Purpose::Policy);
    let mut noise = stream(seed, 0, Purpose::Noise);
    (0..count)
        .map(|_| {
            let offset = pick.random_range(0..total);
            let arm = Arm::from_offset(offset, &dims);
            let y = env.pull(&arm, &mut noise).expect("arm in range");
            Observation::new(arm, y)
        })
        .collect()
}
