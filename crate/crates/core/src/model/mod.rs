//! System configuration, channel draws and the closed-form signal model.

mod channel;
mod config;
mod network;

pub use channel::{complex_gaussian, generate_channels, ChannelRealization};
pub use config::{db_to_linear, Mode, SystemConfig};
pub use network::{partner, relay_power, Network};

use crate::error::{Error, Result};
use crate::linalg::{trace_re, CMatrix};

/// Source precoders `B_k`, relay matrix `F` and receivers `W_k`.
///
/// In two-way mode `b` and `w` are indexed over all `2K` users.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverDesign {
    pub b: Vec<CMatrix>,
    pub f: CMatrix,
    pub w: Vec<CMatrix>,
}

pub fn received_covariance(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix]) -> Result<CMatrix> {
    Network::new(cfg, ch)?.received_covariance(b)
}

/// `Ψ̄_k = Ψ − H_k B_k B_kᴴ H_kᴴ`.
pub fn excluded_covariance(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    b: &[CMatrix],
    k: usize,
) -> Result<CMatrix> {
    let net = Network::new(cfg, ch)?;
    if k >= net.users() {
        return Err(Error::InvalidArgument(format!("user {k} out of range")));
    }
    net.excluded_covariance(b, k)
}

/// Scalar and matrix MSE of destination `k` in a one-way network.
pub fn mse_oneway(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    design: &TransceiverDesign,
    k: usize,
) -> Result<(f64, CMatrix)> {
    if cfg.mode != Mode::OneWay {
        return Err(Error::InvalidArgument("mse_oneway needs a one-way configuration".into()));
    }
    let e = user_mse_matrix(cfg, ch, design, k)?;
    Ok((trace_re(&e), e))
}

/// MSE of user `k` (over `0..2K`) after self-interference cancellation.
pub fn mse_twoway(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    design: &TransceiverDesign,
    k: usize,
) -> Result<f64> {
    if cfg.mode != Mode::TwoWay {
        return Err(Error::InvalidArgument("mse_twoway needs a two-way configuration".into()));
    }
    user_mse_matrix(cfg, ch, design, k).map(|e| trace_re(&e))
}

fn user_mse_matrix(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    design: &TransceiverDesign,
    k: usize,
) -> Result<CMatrix> {
    let net = Network::new(cfg, ch)?;
    if k >= net.users() || design.w.len() != net.users() {
        return Err(Error::InvalidArgument(format!(
            "user {k} or receiver count {} does not fit {} users",
            design.w.len(),
            net.users()
        )));
    }
    net.mse_matrix(&design.b, &design.f, &design.w[k], k)
}

/// Naive amplify-and-forward: equal power per stream at every source, a
/// scaled identity at the relay, MMSE receivers.
pub fn naf_design(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<TransceiverDesign> {
    if let Some(k) = (0..cfg.k).find(|&k| cfg.n_b[k] != cfg.n_s[k]) {
        return Err(Error::InvalidArgument(format!(
            "NAF needs n_b = n_s; pair {} has n_b = {}, n_s = {}",
            k + 1,
            cfg.n_b[k],
            cfg.n_s[k]
        )));
    }
    naf_for(&Network::new(cfg, ch)?)
}

pub(crate) fn naf_for(net: &Network) -> Result<TransceiverDesign> {
    let b = net.initial_precoders();
    let f = net.isotropic_relay(&b)?;
    let w = net.mmse_receivers(&b, &f)?;
    Ok(TransceiverDesign { b, f, w })
}
