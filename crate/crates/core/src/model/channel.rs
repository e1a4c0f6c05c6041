use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{Mode, SystemConfig};
use crate::linalg::{c, CMatrix};

/// One draw of the flat Rayleigh fading channels.
///
/// `h[k]` is `N_r × N_s[k]` (source to relay) and `g[k]` is `N_d[k] × N_r`
/// (relay to destination). In two-way mode the uplink of user `K + k` is
/// `g[k]ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<CMatrix>,
    pub g: Vec<CMatrix>,
    pub seed: u64,
}

/// Circularly-symmetric complex Gaussian entries of variance `var`
/// (each real part has variance `var / 2`).
pub fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMatrix {
    let s = (var / 2.0).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(s * re, s * im)
    })
}

pub fn generate_channels(cfg: &SystemConfig, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = (0..cfg.k)
        .map(|k| complex_gaussian(&mut rng, cfg.n_r, cfg.n_s[k], 1.0 / cfg.n_s[k] as f64))
        .collect();
    let g = (0..cfg.k)
        .map(|k| complex_gaussian(&mut rng, cfg.n_d[k], cfg.n_r, 1.0 / cfg.n_r as f64))
        .collect();
    ChannelRealization { h, g, seed }
}

impl ChannelRealization {
    /// Channel from transmitting user `j` to the relay.
    pub fn uplink(&self, mode: Mode, j: usize) -> CMatrix {
        let k = self.h.len();
        match mode {
            Mode::OneWay => self.h[j].clone(),
            Mode::TwoWay if j < k => self.h[j].clone(),
            Mode::TwoWay => self.g[j - k].transpose(),
        }
    }

    /// Channel from the relay to receiving user `k`.
    pub fn downlink(&self, mode: Mode, k: usize) -> CMatrix {
        let kk = self.h.len();
        match mode {
            Mode::OneWay => self.g[k].clone(),
            Mode::TwoWay if k < kk => self.h[k].transpose(),
            Mode::TwoWay => self.g[k - kk].clone(),
        }
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> crate::error::Result<()> {
        let ok = self.h.len() == cfg.k
            && self.g.len() == cfg.k
            && (0..cfg.k).all(|k| {
                self.h[k].shape() == (cfg.n_r, cfg.n_s[k]) && self.g[k].shape() == (cfg.n_d[k], cfg.n_r)
            });
        if ok {
            Ok(())
        } else {
            Err(crate::error::Error::InvalidArgument(
                "channel dimensions do not match the configuration".into(),
            ))
        }
    }
}
