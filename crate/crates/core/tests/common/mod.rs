#![allow(dead_code)]

use rand::SeedableRng;

pub mod conic;
use rand_chacha::ChaCha8Rng;
use relaynet::linalg::{c, fro_norm, CMatrix, C64};
use relaynet::model::{complex_gaussian, db_to_linear, ChannelRealization, Mode, Network, SystemConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[allow(clippy::too_many_arguments)]
pub fn config(mode: Mode, k: usize, n_s: usize, n_r: usize, n_d: usize, n_b: usize, ps_db: f64, pr_db: f64) -> SystemConfig {
    SystemConfig::uniform(mode, k, n_s, n_r, n_d, n_b, db_to_linear(ps_db), db_to_linear(pr_db)).unwrap()
}

pub fn scalar(x: f64) -> CMatrix {
    CMatrix::from_element(1, 1, c(x, 0.0))
}

/// 1x1 channels with the given real gains.
pub fn scalar_channels(h: &[f64], g: &[f64]) -> ChannelRealization {
    ChannelRealization { h: h.iter().map(|&x| scalar(x)).collect(), g: g.iter().map(|&x| scalar(x)).collect(), seed: 0 }
}

/// Random precoders scaled to use a random fraction of each budget.
pub fn random_precoders(net: &Network, rng: &mut ChaCha8Rng) -> Vec<CMatrix> {
    (0..net.users())
        .map(|j| {
            let b = complex_gaussian(rng, net.tx_antennas(j), net.streams[j], 1.0);
            let s = (0.5 * net.source_power[j]).sqrt() / fro_norm(&b);
            b * c(s, 0.0)
        })
        .collect()
}

pub fn random_receivers(net: &Network, rng: &mut ChaCha8Rng, var: f64) -> Vec<CMatrix> {
    (0..net.users())
        .map(|k| complex_gaussian(rng, net.rx_antennas(k), net.streams[net.desired(k)], var))
        .collect()
}

/// Central-difference gradient of `f` over the real and imaginary parts of
/// every entry of `x`, packed as a complex matrix.
pub fn fd_gradient(f: impl Fn(&CMatrix) -> f64, x: &CMatrix, h: f64) -> CMatrix {
    let mut g = CMatrix::zeros(x.nrows(), x.ncols());
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let mut part = [0.0; 2];
            for (p, dir) in [c(h, 0.0), c(0.0, h)].into_iter().enumerate() {
                let mut plus = x.clone();
                plus[(i, j)] += dir;
                let mut minus = x.clone();
                minus[(i, j)] -= dir;
                part[p] = (f(&plus) - f(&minus)) / (2.0 * h);
            }
            g[(i, j)] = C64::new(part[0], part[1]);
        }
    }
    g
}

/// Minimum of `f` over `n` evenly spaced points of `[lo, hi]`.
pub fn grid_min(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .map(|x| (f(x), x))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
}

/// Scalar link MSE `|1 − w·a|² + |w|²·noise` for real gain `a`.
pub fn scalar_mse(w: f64, a: f64, noise: f64) -> f64 {
    (1.0 - w * a).powi(2) + w * w * noise
}
