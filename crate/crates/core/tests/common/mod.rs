#![allow(dead_code)]

use drss::channel::{drss_from_rss, sample_rss, ChannelParams, DrssSampleSet};
use drss::model::{whitened_model, WhitenedModel};
use drss::scenario::Scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn drss(s: &Scenario, gamma: f64, sigma_n2: f64, seed: u64) -> DrssSampleSet {
    let p = ChannelParams::with_noise_variance(gamma, sigma_n2).unwrap();
    drss_from_rss(&sample_rss(s, &p, &mut ChaCha8Rng::seed_from_u64(seed)))
}

pub fn model(s: &Scenario, gamma: f64, sigma_n2: f64, seed: u64) -> WhitenedModel {
    whitened_model(&drss(s, gamma, sigma_n2, seed), s.anchors(), gamma).unwrap()
}
