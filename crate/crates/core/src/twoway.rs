//! Two-way relaying: both users of a pair transmit in the MAC phase, the
//! relay broadcasts, and each user removes its own relayed signal before
//! detecting its partner's streams.
//!
//! Users are indexed over `0..2K`; user `k < K` is paired with `k + K`.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{partner, ChannelRealization, Mode, Network, SystemConfig, TransceiverDesign};
use crate::opt::{self, IterationTrace, Settings, SimplifiedDesignOutput, SubproblemStats};

/// Partner relation over the `2K` users of a two-way network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoWayIndexMap {
    pairs: usize,
}

impl TwoWayIndexMap {
    pub fn new(pairs: usize) -> Self {
        Self { pairs }
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn users(&self) -> usize {
        2 * self.pairs
    }

    pub fn partner(&self, k: usize) -> usize {
        partner(self.pairs, k)
    }

    /// Pair index of user `k`.
    pub fn pair_of(&self, k: usize) -> usize {
        k % self.pairs
    }
}

fn network(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<Network> {
    if cfg.mode != Mode::TwoWay {
        return Err(Error::InvalidArgument("expected a two-way configuration".into()));
    }
    Network::new(cfg, ch)
}

fn check_user(net: &Network, k: usize) -> Result<()> {
    if k < net.users() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("user {k} out of range (2K = {})", net.users())))
    }
}

pub fn twoway_mmse_receivers(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], f: &CMatrix) -> Result<Vec<CMatrix>> {
    network(cfg, ch)?.mmse_receivers(b, f)
}

pub fn twoway_initial_design(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<TransceiverDesign> {
    let net = network(cfg, ch)?;
    let b = net.initial_precoders();
    let f = net.isotropic_relay(&b)?;
    let w = net.mmse_receivers(&b, &f)?;
    Ok(TransceiverDesign { b, f, w })
}

pub fn twoway_relay_sdp(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    b: &[CMatrix],
    w: &[CMatrix],
    incumbent: Option<&CMatrix>,
    settings: &Settings,
) -> Result<(CMatrix, SubproblemStats)> {
    opt::relay_step(&network(cfg, ch)?, b, w, incumbent, settings)
}

pub fn twoway_source_sdp(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    f: &CMatrix,
    w: &[CMatrix],
    incumbent: Option<&[CMatrix]>,
    settings: &Settings,
) -> Result<(Vec<CMatrix>, SubproblemStats)> {
    opt::source_step(&network(cfg, ch)?, f, w, incumbent, settings)
}

pub fn twoway_iterate(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    init: &TransceiverDesign,
    settings: &Settings,
) -> Result<(TransceiverDesign, IterationTrace)> {
    opt::iterate(&network(cfg, ch)?, init, settings)
}

pub fn twoway_simplified(cfg: &SystemConfig, ch: &ChannelRealization, settings: &Settings) -> Result<SimplifiedDesignOutput> {
    opt::simplified_design(&network(cfg, ch)?, settings)
}

/// Relay forwarding only the partner's first-hop estimate to user `k`:
/// `F_k = T̃ (Ψ_k⁻¹ H_k̄ B_k̄)ᴴ`, where `Ψ_k` omits user `k`'s own
/// contribution.
pub fn twoway_per_user_relay(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], t_tilde: &CMatrix, k: usize) -> Result<CMatrix> {
    let net = network(cfg, ch)?;
    check_user(&net, k)?;
    crate::oneway::per_user_relay_for(&net, b, t_tilde, k)
}

/// Two-term decomposition of user `k`'s MSE under
/// [`twoway_per_user_relay`].
pub fn twoway_decomposed_mse(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], t_tilde: &CMatrix, k: usize) -> Result<(f64, f64)> {
    let net = network(cfg, ch)?;
    check_user(&net, k)?;
    crate::oneway::decomposed_mse_for(&net, b, t_tilde, k)
}

/// MSE attained by the MMSE receiver of user `k` after self-interference
/// cancellation, in information form.
pub fn twoway_mmse_form_mse(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], f: &CMatrix, k: usize) -> Result<f64> {
    let net = network(cfg, ch)?;
    check_user(&net, k)?;
    crate::oneway::mmse_form_mse_for(&net, b, f, k)
}
