use super::channel::ChannelRealization;
use super::config::{Mode, SystemConfig};
use super::TransceiverDesign;
use crate::error::{Error, Result};
use crate::linalg::{eye, hermitian_part, solve_hpd, trace_re, zeros, CMatrix};

/// Link structure shared by the one-way and two-way formulas.
///
/// Transmitter `j` reaches the relay through `uplinks[j]`, receiver `k`
/// hears the relay through `downlinks[k]` and wants the streams of
/// transmitter `desired(k)`. In two-way mode receiver `k` is also
/// transmitter `k` and removes its own contribution before detection.
#[derive(Debug, Clone)]
pub struct Network {
    pub mode: Mode,
    pub pairs: usize,
    pub n_r: usize,
    pub uplinks: Vec<CMatrix>,
    pub downlinks: Vec<CMatrix>,
    pub streams: Vec<usize>,
    pub source_power: Vec<f64>,
    pub relay_power: f64,
    pub sigma2_r: f64,
    pub sigma2_d: f64,
}

impl Network {
    pub fn new(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<Self> {
        cfg.validate()?;
        ch.check_dims(cfg)?;
        let users = cfg.users();
        Ok(Self {
            mode: cfg.mode,
            pairs: cfg.k,
            n_r: cfg.n_r,
            uplinks: (0..users).map(|j| ch.uplink(cfg.mode, j)).collect(),
            downlinks: (0..users).map(|k| ch.downlink(cfg.mode, k)).collect(),
            streams: (0..users).map(|j| cfg.streams(j)).collect(),
            source_power: (0..users).map(|j| cfg.source_power(j)).collect(),
            relay_power: cfg.p_r,
            sigma2_r: cfg.sigma2_r,
            sigma2_d: cfg.sigma2_d,
        })
    }

    /// Number of transmitters, equal to the number of receivers.
    pub fn users(&self) -> usize {
        self.uplinks.len()
    }

    pub fn desired(&self, k: usize) -> usize {
        match self.mode {
            Mode::OneWay => k,
            Mode::TwoWay => partner(self.pairs, k),
        }
    }

    /// Transmitter whose signal receiver `k` cancels, if any.
    pub fn own(&self, k: usize) -> Option<usize> {
        match self.mode {
            Mode::OneWay => None,
            Mode::TwoWay => Some(k),
        }
    }

    /// Transmitters that interfere at receiver `k`.
    pub fn interferers(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.desired(k);
        let own = self.own(k);
        (0..self.users()).filter(move |&j| j != d && Some(j) != own)
    }

    pub fn rx_antennas(&self, k: usize) -> usize {
        self.downlinks[k].nrows()
    }

    pub fn tx_antennas(&self, j: usize) -> usize {
        self.uplinks[j].ncols()
    }

    fn signal_term(&self, b: &[CMatrix], j: usize) -> CMatrix {
        let hb = &self.uplinks[j] * &b[j];
        &hb * hb.adjoint()
    }

    fn check_precoders(&self, b: &[CMatrix]) -> Result<()> {
        let ok = b.len() == self.users()
            && b.iter().enumerate().all(|(j, bj)| {
                bj.shape() == (self.tx_antennas(j), self.streams[j])
            });
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("precoder shapes do not match the network".into()))
        }
    }

    /// `Ψ = Σ_j H_j B_j B_jᴴ H_jᴴ + σ_r² I`.
    pub fn received_covariance(&self, b: &[CMatrix]) -> Result<CMatrix> {
        self.check_precoders(b)?;
        let mut psi = eye(self.n_r).scale(self.sigma2_r);
        for j in 0..self.users() {
            psi += self.signal_term(b, j);
        }
        Ok(hermitian_part(&psi))
    }

    /// `Ψ` without transmitter `k`'s own signal term.
    pub fn excluded_covariance(&self, b: &[CMatrix], k: usize) -> Result<CMatrix> {
        self.check_precoders(b)?;
        let mut psi = eye(self.n_r).scale(self.sigma2_r);
        for j in (0..self.users()).filter(|&j| j != k) {
            psi += self.signal_term(b, j);
        }
        Ok(hermitian_part(&psi))
    }

    /// Relay-side covariance of everything receiver `k` does not cancel.
    pub fn receiver_side_covariance(&self, b: &[CMatrix], k: usize) -> Result<CMatrix> {
        match self.own(k) {
            Some(own) => self.excluded_covariance(b, own),
            None => self.received_covariance(b),
        }
    }

    /// Equivalent channel `R_k F H_d B_d` and noise-plus-interference
    /// covariance at receiver `k`.
    pub fn equivalent_link(&self, b: &[CMatrix], f: &CMatrix, k: usize) -> Result<(CMatrix, CMatrix)> {
        self.check_precoders(b)?;
        let rf = &self.downlinks[k] * f;
        let d = self.desired(k);
        let channel = &rf * &self.uplinks[d] * &b[d];
        let mut inner = eye(self.n_r).scale(self.sigma2_r);
        for j in self.interferers(k) {
            inner += self.signal_term(b, j);
        }
        let noise = &rf * inner * rf.adjoint() + eye(self.rx_antennas(k)).scale(self.sigma2_d);
        Ok((channel, hermitian_part(&noise)))
    }

    /// MSE matrix `E[(Wᴴy − s)(Wᴴy − s)ᴴ]` of receiver `k`.
    pub fn mse_matrix(&self, b: &[CMatrix], f: &CMatrix, w: &CMatrix, k: usize) -> Result<CMatrix> {
        let (channel, noise) = self.equivalent_link(b, f, k)?;
        let nb = self.streams[self.desired(k)];
        if w.shape() != (self.rx_antennas(k), nb) {
            return Err(Error::InvalidArgument(format!(
                "receiver {k} must be {}x{nb}, got {}x{}",
                self.rx_antennas(k),
                w.nrows(),
                w.ncols()
            )));
        }
        let cross = w.adjoint() * &channel;
        let total = &channel * channel.adjoint() + noise;
        let e = eye(nb) - &cross - cross.adjoint() + w.adjoint() * total * w;
        Ok(hermitian_part(&e))
    }

    pub fn mse(&self, b: &[CMatrix], f: &CMatrix, w: &CMatrix, k: usize) -> Result<f64> {
        self.mse_matrix(b, f, w, k).map(|e| trace_re(&e))
    }

    /// Linear MMSE receiver `(R F Ψ_k Fᴴ Rᴴ + σ_d² I)⁻¹ R F H_d B_d`.
    pub fn mmse_receiver(&self, b: &[CMatrix], f: &CMatrix, k: usize) -> Result<CMatrix> {
        let (channel, noise) = self.equivalent_link(b, f, k)?;
        let total = &channel * channel.adjoint() + noise;
        Ok(solve_hpd(&total, &channel)?)
    }

    pub fn mmse_receivers(&self, b: &[CMatrix], f: &CMatrix) -> Result<Vec<CMatrix>> {
        (0..self.users()).map(|k| self.mmse_receiver(b, f, k)).collect()
    }

    pub fn per_user_mse(&self, design: &TransceiverDesign) -> Result<Vec<f64>> {
        (0..self.users())
            .map(|k| self.mse(&design.b, &design.f, &design.w[k], k))
            .collect()
    }

    pub fn max_mse(&self, b: &[CMatrix], f: &CMatrix, w: &[CMatrix]) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for k in 0..self.users() {
            worst = worst.max(self.mse(b, f, &w[k], k)?);
        }
        Ok(worst)
    }

    /// `√(P_s / N_b)` times the first `N_b` columns of the identity.
    pub fn initial_precoders(&self) -> Vec<CMatrix> {
        (0..self.users())
            .map(|j| {
                let (n, nb) = (self.tx_antennas(j), self.streams[j]);
                let scale = (self.source_power[j] / nb as f64).sqrt();
                let mut m = zeros(n, nb);
                for i in 0..nb {
                    m[(i, i)] = scale.into();
                }
                m
            })
            .collect()
    }

    /// `√(P_r / tr Ψ) I`, which spends the relay budget exactly.
    pub fn isotropic_relay(&self, b: &[CMatrix]) -> Result<CMatrix> {
        let psi = self.received_covariance(b)?;
        Ok(eye(self.n_r).scale((self.relay_power / trace_re(&psi)).sqrt()))
    }

    /// Total relay transmit power `tr(F Ψ Fᴴ)` for these precoders.
    pub fn relay_power_of(&self, b: &[CMatrix], f: &CMatrix) -> Result<f64> {
        Ok(relay_power(f, &self.received_covariance(b)?))
    }

    /// Checks both power budgets with absolute slack `tol`.
    pub fn is_feasible(&self, design: &TransceiverDesign, tol: f64) -> Result<bool> {
        let sources = design
            .b
            .iter()
            .zip(&self.source_power)
            .all(|(b, &p)| crate::linalg::fro_norm_sqr(b) <= p + tol);
        Ok(sources && self.relay_power_of(&design.b, &design.f)? <= self.relay_power + tol)
    }
}

/// `k̄`: pair partner in the two-way index map over `0..2K`.
pub fn partner(pairs: usize, k: usize) -> usize {
    if k < pairs {
        k + pairs
    } else {
        k - pairs
    }
}

/// `tr(F Ψ Fᴴ)`.
pub fn relay_power(f: &CMatrix, psi: &CMatrix) -> f64 {
    trace_re(&(f * psi * f.adjoint()))
}
