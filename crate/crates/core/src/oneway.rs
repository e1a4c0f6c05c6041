//! One-way relaying: the alternating min-max design, the simplified
//! decomposition design, and the MSE decomposition identities behind it.

use crate::error::{Error, Result};
use crate::linalg::{eye, hermitian_evd, inv_hpd, pinv_solve_hermitian, solve_hpd, trace_re, CMatrix, PINV_CLIP};
use crate::model::{ChannelRealization, Mode, Network, SystemConfig, TransceiverDesign};
use crate::opt::{self, IterationTrace, QSolution, Settings, SimplifiedDesignOutput, SubproblemStats};

fn network(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<Network> {
    if cfg.mode != Mode::OneWay {
        return Err(Error::InvalidArgument("expected a one-way configuration".into()));
    }
    Network::new(cfg, ch)
}

fn check_user(net: &Network, k: usize) -> Result<()> {
    if k < net.users() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("user {k} out of range (K = {})", net.users())))
    }
}

pub fn mmse_receivers(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], f: &CMatrix) -> Result<Vec<CMatrix>> {
    network(cfg, ch)?.mmse_receivers(b, f)
}

/// Feasible starting point: `B_k = √(P_s/N_b)[I; 0]`, `F = √(P_r/tr Ψ) I`,
/// MMSE receivers.
pub fn initial_design(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<TransceiverDesign> {
    let net = network(cfg, ch)?;
    let b = net.initial_precoders();
    let f = net.isotropic_relay(&b)?;
    let w = net.mmse_receivers(&b, &f)?;
    Ok(TransceiverDesign { b, f, w })
}

/// Relay update for fixed precoders and receivers. With an incumbent the
/// worst-user MSE never increases.
pub fn relay_subproblem(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    b: &[CMatrix],
    w: &[CMatrix],
    incumbent: Option<&CMatrix>,
    settings: &Settings,
) -> Result<(CMatrix, SubproblemStats)> {
    opt::relay_step(&network(cfg, ch)?, b, w, incumbent, settings)
}

/// Precoder update for fixed relay and receivers.
pub fn source_subproblem(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    f: &CMatrix,
    w: &[CMatrix],
    incumbent: Option<&[CMatrix]>,
    settings: &Settings,
) -> Result<(Vec<CMatrix>, SubproblemStats)> {
    opt::source_step(&network(cfg, ch)?, f, w, incumbent, settings)
}

pub fn iterate_minmax(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    init: &TransceiverDesign,
    settings: &Settings,
) -> Result<(TransceiverDesign, IterationTrace)> {
    opt::iterate(&network(cfg, ch)?, init, settings)
}

pub fn first_hop_filters(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix]) -> Result<Vec<CMatrix>> {
    opt::first_hop_filters(&network(cfg, ch)?, b)
}

pub fn first_hop_mse(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], d: &[CMatrix], k: usize) -> Result<f64> {
    let net = network(cfg, ch)?;
    check_user(&net, k)?;
    opt::first_hop_mse(&net, b, d, k)
}

pub fn source_socp(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    d: &[CMatrix],
    settings: &Settings,
) -> Result<(Vec<CMatrix>, SubproblemStats)> {
    opt::source_socp(&network(cfg, ch)?, d, settings)
}

pub fn relay_q_sdp(cfg: &SystemConfig, ch: &ChannelRealization, settings: &Settings) -> Result<QSolution> {
    opt::relay_q_sdp(&network(cfg, ch)?, settings)
}

/// Rank-truncated factor of `Q` times the stacked first-hop filters.
/// Returns `(F, T̃)`.
pub fn assemble_relay_matrix(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    b: &[CMatrix],
    d: &[CMatrix],
    q: &CMatrix,
) -> Result<(CMatrix, CMatrix)> {
    opt::assemble_relay_matrix(&network(cfg, ch)?, b, d, q)
}

pub fn simplified_design(cfg: &SystemConfig, ch: &ChannelRealization, settings: &Settings) -> Result<SimplifiedDesignOutput> {
    opt::simplified_design(&network(cfg, ch)?, settings)
}

/// Relay matrix that forwards only user `k`'s first-hop estimate:
/// `F_k = T̃ B_kᴴ H_kᴴ Ψ⁻¹`.
pub fn per_user_relay(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], t_tilde: &CMatrix, k: usize) -> Result<CMatrix> {
    let net = network(cfg, ch)?;
    check_user(&net, k)?;
    per_user_relay_for(&net, b, t_tilde, k)
}

pub(crate) fn per_user_relay_for(net: &Network, b: &[CMatrix], t_tilde: &CMatrix, k: usize) -> Result<CMatrix> {
    let d = net.desired(k);
    let psi = net.receiver_side_covariance(b, k)?;
    let dk = solve_hpd(&psi, &(&net.uplinks[d] * &b[d]))?;
    Ok(t_tilde * dk.adjoint())
}

/// Two-term decomposition of user `k`'s MMSE for the relay of
/// [`per_user_relay`]:
///
/// ```text
/// tr(I + BᴴHᴴΨ̄_k⁻¹HB)⁻¹ + tr((BᴴHᴴΨ⁻¹HB)⁻¹ + T̃ᴴGᴴGT̃/σ_d²)⁻¹
/// ```
///
/// Returns the two terms separately.
pub fn decomposed_mse(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], t_tilde: &CMatrix, k: usize) -> Result<(f64, f64)> {
    let net = network(cfg, ch)?;
    check_user(&net, k)?;
    decomposed_mse_for(&net, b, t_tilde, k)
}

pub(crate) fn decomposed_mse_for(net: &Network, b: &[CMatrix], t_tilde: &CMatrix, k: usize) -> Result<(f64, f64)> {
    let d = net.desired(k);
    let nb = net.streams[d];
    let hb = &net.uplinks[d] * &b[d];
    let psi = net.receiver_side_covariance(b, k)?;
    let hbb = &hb * hb.adjoint();
    let psi_bar = &psi - &hbb;
    let first = inv_hpd(&(eye(nb) + hb.adjoint() * solve_hpd(&psi_bar, &hb)?))?;
    let gain = hb.adjoint() * solve_hpd(&psi, &hb)?;
    let rt = &net.downlinks[k] * t_tilde;
    let m = (rt.adjoint() * &rt).scale(1.0 / net.sigma2_d);
    let second = inv_hpd(&(inv_hpd(&gain)? + m))?;
    Ok((trace_re(&first), trace_re(&second)))
}

/// `tr(I + BᴴHᴴFᴴGᴴ C̄⁻¹ GFHB)⁻¹` with `C̄` the interference-plus-noise
/// covariance at destination `k`: the MSE attained by the MMSE receiver.
pub fn mmse_form_mse(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], f: &CMatrix, k: usize) -> Result<f64> {
    let net = network(cfg, ch)?;
    check_user(&net, k)?;
    mmse_form_mse_for(&net, b, f, k)
}

pub(crate) fn mmse_form_mse_for(net: &Network, b: &[CMatrix], f: &CMatrix, k: usize) -> Result<f64> {
    let (channel, noise) = net.equivalent_link(b, f, k)?;
    let nb = channel.ncols();
    let m = eye(nb) + channel.adjoint() * solve_hpd(&noise, &channel)?;
    Ok(trace_re(&inv_hpd(&m)?))
}

/// Eigenvalues of `B_kᴴ H_kᴴ Ψ⁻¹ H_k B_k`, descending. Unlike the rest of
/// the crate this accepts `σ_r² = 0`, where the inverse becomes the clipped
/// pseudo-inverse.
pub fn first_hop_gain_eigenvalues(cfg: &SystemConfig, ch: &ChannelRealization, b: &[CMatrix], k: usize) -> Result<Vec<f64>> {
    if !(cfg.sigma2_r >= 0.0) {
        return Err(Error::Config("relay noise variance must be non-negative".into()));
    }
    let mut checked = cfg.clone();
    if cfg.sigma2_r == 0.0 {
        checked.sigma2_r = 1.0;
    }
    let mut net = network(&checked, ch)?;
    net.sigma2_r = cfg.sigma2_r;
    check_user(&net, k)?;
    let hb = &net.uplinks[k] * &b[k];
    let mut psi = crate::linalg::zeros(net.n_r, net.n_r);
    for j in 0..net.users() {
        let x = &net.uplinks[j] * &b[j];
        psi += &x * x.adjoint();
    }
    psi += eye(net.n_r).scale(net.sigma2_r);
    let solved = if net.sigma2_r > 0.0 {
        solve_hpd(&psi, &hb)?
    } else {
        pinv_solve_hermitian(&psi, &hb, PINV_CLIP)?
    };
    Ok(hermitian_evd(&(hb.adjoint() * solved))?.eigenvalues)
}
