use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64};

/// Largest number of candidate symbol vectors the exhaustive detector
/// accepts (`4^6`).
pub const ML_MAX_CANDIDATES: usize = 4096;

/// Gray-mapped unit-energy QPSK: `(b0, b1) ↦ ((1 − 2b0) + i(1 − 2b1))/√2`.
pub fn qpsk_modulate(bits: &[bool]) -> Result<Vec<C64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "QPSK needs an even number of bits, got {}",
            bits.len()
        )));
    }
    Ok(bits.chunks(2).map(|p| qpsk_symbol(p[0], p[1])).collect())
}

fn qpsk_symbol(b0: bool, b1: bool) -> C64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    c(if b0 { -a } else { a }, if b1 { -a } else { a })
}

/// Exhaustive ML detector for one equivalent link, with the whitened
/// candidate images precomputed.
#[derive(Debug, Clone)]
pub struct MlDetector {
    streams: usize,
    chol: nalgebra::Cholesky<C64, nalgebra::Dyn>,
    images: Vec<CMatrix>,
}

impl MlDetector {
    pub fn new(channel: &CMatrix, noise_cov: &CMatrix, streams: usize) -> Result<Self> {
        if channel.ncols() != streams || noise_cov.nrows() != channel.nrows() || !noise_cov.is_square() {
            return Err(Error::InvalidArgument(format!(
                "detector shapes: channel {}x{}, noise {}x{}, {streams} streams",
                channel.nrows(),
                channel.ncols(),
                noise_cov.nrows(),
                noise_cov.ncols()
            )));
        }
        let count = 4usize.checked_pow(streams as u32).filter(|&n| n <= ML_MAX_CANDIDATES).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "ML detection over {streams} QPSK streams exceeds {ML_MAX_CANDIDATES} candidates; use at most 6 streams"
            ))
        })?;
        let chol = noise_cov.clone().cholesky().ok_or_else(|| {
            Error::InvalidArgument("detector noise covariance is not positive definite".into())
        })?;
        let white = chol.l().solve_lower_triangular(channel).expect("triangular factor is nonsingular");
        let images = (0..count)
            .map(|idx| &white * candidate(idx, streams))
            .collect();
        Ok(Self { streams, chol, images })
    }

    /// Bits of the candidate minimizing `(y − H̄s)ᴴ C̄⁻¹ (y − H̄s)`; ties go
    /// to the lowest candidate index.
    pub fn detect(&self, y: &CMatrix) -> Vec<bool> {
        let yw = self.chol.l().solve_lower_triangular(y).expect("triangular factor is nonsingular");
        let mut best = (f64::INFINITY, 0);
        for (idx, img) in self.images.iter().enumerate() {
            let d: f64 = yw.iter().zip(img.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
            if d < best.0 {
                best = (d, idx);
            }
        }
        candidate_bits(best.1, self.streams)
    }
}

fn candidate_bits(idx: usize, streams: usize) -> Vec<bool> {
    (0..2 * streams).map(|i| (idx >> i) & 1 == 1).collect()
}

fn candidate(idx: usize, streams: usize) -> CMatrix {
    let bits = candidate_bits(idx, streams);
    CMatrix::from_iterator(streams, 1, bits.chunks(2).map(|p| qpsk_symbol(p[0], p[1])))
}

/// One-shot whitened ML detection of `n_streams` QPSK symbols.
pub fn ml_detect(y: &CMatrix, channel: &CMatrix, noise_cov: &CMatrix, n_streams: usize) -> Result<Vec<bool>> {
    Ok(MlDetector::new(channel, noise_cov, n_streams)?.detect(y))
}

pub(crate) fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random()).collect()
}

pub(crate) fn count_errors(a: &[bool], b: &[bool]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Bit errors of QPSK over a unit-gain scalar AWGN channel at `snr_db`
/// (`E_s/N_0`), detected with [`ml_detect`]. Returns `(errors, bits)`.
pub fn awgn_qpsk_errors<R: Rng>(rng: &mut R, snr_db: f64, bits: usize) -> Result<(u64, u64)> {
    let n0 = 10f64.powf(-snr_db / 10.0);
    let one = CMatrix::from_element(1, 1, c(1.0, 0.0));
    let det = MlDetector::new(&one, &CMatrix::from_element(1, 1, c(n0, 0.0)), 1)?;
    let sd = (n0 / 2.0).sqrt();
    let mut errors = 0;
    for _ in 0..bits / 2 {
        let tx = random_bits(rng, 2);
        let s = qpsk_symbol(tx[0], tx[1]);
        let n = c(rng.sample::<f64, _>(StandardNormal) * sd, rng.sample::<f64, _>(StandardNormal) * sd);
        let rx = det.detect(&CMatrix::from_element(1, 1, s + n));
        errors += count_errors(&tx, &rx);
    }
    Ok((errors, (bits / 2 * 2) as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_mapping() {
        let s = qpsk_modulate(&[false, false, true, true, false, true]).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s, vec![c(a, a), c(-a, -a), c(a, -a)]);
        assert!(s.iter().all(|x| (x.norm_sqr() - 1.0).abs() < 1e-15));
        assert!(qpsk_modulate(&[true]).is_err());
    }

    #[test]
    fn candidate_bound() {
        let h = CMatrix::identity(7, 7);
        assert!(MlDetector::new(&h, &CMatrix::identity(7, 7), 7).is_err());
        let h = CMatrix::identity(6, 6);
        assert!(MlDetector::new(&h, &CMatrix::identity(6, 6), 6).is_ok());
    }
}
