//! Cone arithmetic for the interior-point solver: Jordan products,
//! Nesterov-Todd scalings and step lengths. PSD blocks are stored as full
//! column-major `d × d` matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Nonneg,
    Soc,
    Psd(usize),
}

impl Kind {
    pub fn degree(self, len: usize) -> usize {
        match self {
            Kind::Nonneg => len,
            Kind::Soc => 1,
            Kind::Psd(d) => d,
        }
    }
}

fn mat(d: usize, u: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(d, d, u)
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn identity(kind: Kind, out: &mut [f64]) {
    out.fill(0.0);
    match kind {
        Kind::Nonneg => out.fill(1.0),
        Kind::Soc => out[0] = 1.0,
        Kind::Psd(d) => {
            for i in 0..d {
                out[i + i * d] = 1.0;
            }
        }
    }
}

fn soc_j(u: &[f64]) -> f64 {
    u[0] * u[0] - u[1..].iter().map(|v| v * v).sum::<f64>()
}

fn min_sym_eig(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(sym(&m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest `t` with `u − t·e` on the cone boundary (negative when `u` is
/// outside the cone).
pub(crate) fn interior_margin(kind: Kind, u: &[f64]) -> f64 {
    match kind {
        Kind::Nonneg => u.iter().copied().fold(f64::INFINITY, f64::min),
        Kind::Soc => u[0] - u[1..].iter().map(|v| v * v).sum::<f64>().sqrt(),
        Kind::Psd(d) => min_sym_eig(mat(d, u)),
    }
}

pub(crate) fn jprod(kind: Kind, x: &[f64], y: &[f64], out: &mut [f64]) {
    match kind {
        Kind::Nonneg => {
            for i in 0..x.len() {
                out[i] = x[i] * y[i];
            }
        }
        Kind::Soc => {
            out[0] = x.iter().zip(y).map(|(a, b)| a * b).sum();
            for i in 1..x.len() {
                out[i] = x[0] * y[i] + y[0] * x[i];
            }
        }
        Kind::Psd(d) => {
            let xm = mat(d, x);
            let ym = mat(d, y);
            let p = sym(&(&xm * &ym));
            out.copy_from_slice(p.as_slice());
        }
    }
}

/// Solves `λ ∘ u = v` for a scaled point `λ` (diagonal for PSD blocks).
pub(crate) fn jdiv(kind: Kind, lambda: &[f64], v: &[f64], out: &mut [f64]) {
    match kind {
        Kind::Nonneg => {
            for i in 0..v.len() {
                out[i] = v[i] / lambda[i];
            }
        }
        Kind::Soc => {
            let jl = soc_j(lambda);
            let dot: f64 = lambda[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
            let u0 = (lambda[0] * v[0] - dot) / jl;
            out[0] = u0;
            for i in 1..v.len() {
                out[i] = (v[i] - u0 * lambda[i]) / lambda[0];
            }
        }
        Kind::Psd(d) => {
            for j in 0..d {
                for i in 0..d {
                    let li = lambda[i + i * d];
                    let lj = lambda[j + j * d];
                    out[i + j * d] = 2.0 * v[i + j * d] / (li + lj);
                }
            }
        }
    }
}

/// Max `α` with `λ + α·d` in the cone (`f64::INFINITY` if unbounded).
pub(crate) fn max_step(kind: Kind, lambda: &[f64], d: &[f64]) -> f64 {
    match kind {
        Kind::Nonneg => lambda
            .iter()
            .zip(d)
            .filter(|(_, &di)| di < 0.0)
            .map(|(&l, &di)| -l / di)
            .fold(f64::INFINITY, f64::min),
        Kind::Soc => {
            let a = soc_j(d);
            let b = 2.0 * (lambda[0] * d[0] - lambda[1..].iter().zip(&d[1..]).map(|(x, y)| x * y).sum::<f64>());
            let c = soc_j(lambda);
            smallest_positive_root(a, b, c)
        }
        Kind::Psd(dim) => {
            let s: Vec<f64> = (0..dim).map(|i| 1.0 / lambda[i + i * dim].sqrt()).collect();
            let m = DMatrix::from_fn(dim, dim, |i, j| s[i] * d[i + j * dim] * s[j]);
            let e = min_sym_eig(m);
            if e >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / e
            }
        }
    }
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    // c > 0 at an interior point.
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= 1e-15 * scale {
        return if b < 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { f64::INFINITY };
    [r1, r2]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Nesterov-Todd scaling `W` of one block with `W z = W⁻ᵀ s = λ`.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    Nonneg { w: Vec<f64> },
    Soc { beta: f64, v: Vec<f64> },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64> },
}

impl Scaling {
    /// Returns `None` unless both points are strictly interior.
    pub fn compute(kind: Kind, s: &[f64], z: &[f64]) -> Option<(Scaling, Vec<f64>)> {
        match kind {
            Kind::Nonneg => {
                if s.iter().chain(z).any(|v| !(*v > 0.0)) {
                    return None;
                }
                let w: Vec<f64> = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect();
                let lambda = s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect();
                Some((Scaling::Nonneg { w }, lambda))
            }
            Kind::Soc => {
                let js = soc_j(s);
                let jz = soc_j(z);
                if !(js > 0.0 && jz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                let (rs, rz) = (js.sqrt(), jz.sqrt());
                let sb: Vec<f64> = s.iter().map(|v| v / rs).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / rz).collect();
                let dot: f64 = sb.iter().zip(&zb).map(|(a, b)| a * b).sum();
                let gamma = ((1.0 + dot) / 2.0).sqrt();
                // NT point w̄ = (s̄ + J z̄)/(2γ), then W = β(2vvᵀ − J) with
                // v = (w̄ + e)/√(2(w̄₀ + 1)).
                let mut wb: Vec<f64> = sb.iter().zip(&zb).map(|(a, b)| (a - b) / (2.0 * gamma)).collect();
                wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
                let nv = (2.0 * (wb[0] + 1.0)).sqrt();
                let mut v: Vec<f64> = wb.iter().map(|x| x / nv).collect();
                v[0] = (wb[0] + 1.0) / nv;
                let sc = Scaling::Soc {
                    beta: (js / jz).powf(0.25),
                    v,
                };
                let mut lambda = z.to_vec();
                sc.apply(false, false, &mut lambda);
                Some((sc, lambda))
            }
            Kind::Psd(d) => {
                let ls = nalgebra::Cholesky::new(sym(&mat(d, s)))?.l();
                let lz = nalgebra::Cholesky::new(sym(&mat(d, z)))?.l();
                let svd = (lz.transpose() * &ls).svd(true, true);
                let u = svd.u?;
                let vt = svd.v_t?;
                let sig = svd.singular_values;
                if sig.iter().any(|x| !(*x > 0.0)) {
                    return None;
                }
                let isq = DVector::from_iterator(d, sig.iter().map(|x| 1.0 / x.sqrt()));
                let r = ls * vt.transpose() * DMatrix::from_diagonal(&isq);
                let rinv = DMatrix::from_diagonal(&isq) * u.transpose() * lz.transpose();
                let mut lambda = vec![0.0; d * d];
                for i in 0..d {
                    lambda[i + i * d] = sig[i];
                }
                Some((Scaling::Psd { r, rinv }, lambda))
            }
        }
    }

    /// In place: `W u`, `Wᵀ u`, `W⁻¹ u` or `W⁻ᵀ u`.
    pub fn apply(&self, transpose: bool, inverse: bool, u: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for (x, wi) in u.iter_mut().zip(w) {
                    if inverse {
                        *x /= wi
                    } else {
                        *x *= wi
                    }
                }
            }
            Scaling::Soc { beta, v } => {
                // W = β(2vvᵀ − J) and W⁻¹ = (2Jv(Jv)ᵀ − J)/β are symmetric.
                if inverse {
                    let jv0 = v[0];
                    let dot = jv0 * u[0] - v[1..].iter().zip(&u[1..]).map(|(a, b)| a * b).sum::<f64>();
                    u[0] = (2.0 * jv0 * dot - u[0]) / beta;
                    for i in 1..u.len() {
                        u[i] = (-2.0 * v[i] * dot + u[i]) / beta;
                    }
                } else {
                    let dot: f64 = v.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
                    u[0] = beta * (2.0 * v[0] * dot - u[0]);
                    for i in 1..u.len() {
                        u[i] = beta * (2.0 * v[i] * dot + u[i]);
                    }
                }
            }
            Scaling::Psd { r, rinv } => {
                let d = r.nrows();
                let m = mat(d, u);
                let out = match (transpose, inverse) {
                    (false, false) => r.transpose() * m * r,
                    (true, false) => r * m * r.transpose(),
                    (false, true) => rinv.transpose() * m * rinv,
                    (true, true) => rinv * m * rinv.transpose(),
                };
                u.copy_from_slice(sym(&out).as_slice());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn soc_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        u[0] = u[1..].iter().map(|v| v * v).sum::<f64>().sqrt() + 0.1 + rng.random::<f64>();
        u
    }

    fn psd_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let g = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() - 0.5);
        let m = &g * g.transpose() + DMatrix::identity(d, d) * 0.1;
        m.as_slice().to_vec()
    }

    fn check_scaling(kind: Kind, s: &[f64], z: &[f64]) {
        let (w, lambda) = Scaling::compute(kind, s, z).unwrap();
        let mut wz = z.to_vec();
        w.apply(false, false, &mut wz);
        let mut ws = s.to_vec();
        w.apply(true, true, &mut ws);
        for i in 0..s.len() {
            assert!((wz[i] - lambda[i]).abs() < 1e-9, "Wz != lambda");
            assert!((ws[i] - lambda[i]).abs() < 1e-9, "W^-T s != lambda");
        }
        let mut round = s.to_vec();
        w.apply(false, false, &mut round);
        w.apply(false, true, &mut round);
        for i in 0..s.len() {
            assert!((round[i] - s[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn nt_scaling_maps_both_points_to_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s: Vec<f64> = (0..4).map(|_| rng.random::<f64>() + 0.1).collect();
        let z: Vec<f64> = (0..4).map(|_| rng.random::<f64>() + 0.1).collect();
        check_scaling(Kind::Nonneg, &s, &z);
        let s = soc_point(&mut rng, 5);
        let z = soc_point(&mut rng, 5);
        check_scaling(Kind::Soc, &s, &z);
        let s = psd_point(&mut rng, 4);
        let z = psd_point(&mut rng, 4);
        check_scaling(Kind::Psd(4), &s, &z);
    }

    #[test]
    fn jdiv_inverts_jprod() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let lam = soc_point(&mut rng, 4);
        let v: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let mut u = vec![0.0; 4];
        jdiv(Kind::Soc, &lam, &v, &mut u);
        let mut back = vec![0.0; 4];
        jprod(Kind::Soc, &lam, &u, &mut back);
        for i in 0..4 {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
        let d = 3;
        let mut lam = vec![0.0; 9];
        for i in 0..d {
            lam[i + i * d] = 1.0 + i as f64;
        }
        let v = psd_point(&mut rng, d);
        let mut u = vec![0.0; 9];
        jdiv(Kind::Psd(d), &lam, &v, &mut u);
        let mut back = vec![0.0; 9];
        jprod(Kind::Psd(d), &lam, &u, &mut back);
        for i in 0..9 {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_lands_on_boundary() {
        let lam = vec![2.0, 0.5, 0.0];
        let d = vec![-1.0, 0.3, 0.4];
        let a = max_step(Kind::Soc, &lam, &d);
        let p: Vec<f64> = lam.iter().zip(&d).map(|(l, x)| l + a * x).collect();
        assert!(interior_margin(Kind::Soc, &p).abs() < 1e-12);
        assert!(a > 0.0);
    }
}
