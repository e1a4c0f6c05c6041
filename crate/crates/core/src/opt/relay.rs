use super::{run_program, RelayForm, Settings, SubproblemStats};
use crate::conic::{embed_hermitian, AffineForm, CAffine, ConicProgram, SocConstraint, VarAlloc};
use crate::error::Result;
use crate::linalg::{fro_norm_sqr, inv_hpd, psd_sqrt, CMatrix};
use crate::model::{relay_power, Network};

/// Variable layout of the relay program.
#[derive(Debug, Clone)]
pub struct RelayLayout {
    pub tau: usize,
    pub f: usize,
    pub xi: Vec<usize>,
    pub phi: usize,
}

/// Relay SDP for fixed precoders and receivers:
///
/// ```text
/// minimize τ
///   tr Ξ_k + σ_d² tr(W_kᴴW_k) + N_b ≤ τ
///   [[Ξ_k + 2 Re(W_kᴴ R_k F H_d B_d), W_kᴴ R_k F], [·ᴴ, Ψ_k⁻¹]] ⪰ 0
///   [[Φ, F], [Fᴴ, Ψ⁻¹]] ⪰ 0,  tr Φ ≤ P_r
/// ```
///
/// where `Ψ_k` is the relay-side covariance seen by receiver `k`.
pub fn relay_program(net: &Network, b: &[CMatrix], w: &[CMatrix]) -> Result<(ConicProgram, RelayLayout)> {
    let nr = net.n_r;
    let users = net.users();
    let mut alloc = VarAlloc::new();
    let tau = alloc.take(1);
    let f0 = alloc.take(2 * nr * nr);
    let xi: Vec<usize> = (0..users)
        .map(|k| {
            let nb = net.streams[net.desired(k)];
            alloc.take(nb * nb)
        })
        .collect();
    let phi = alloc.take(nr * nr);
    let mut prog = ConicProgram::new(alloc.count());
    prog.set_objective(tau, 1.0);

    let f = CAffine::matrix_var(nr, nr, f0);
    for k in 0..users {
        let d = net.desired(k);
        let nb = net.streams[d];
        let wr = w[k].adjoint() * &net.downlinks[k];
        let wrf = f.lmul(&wr)?;
        let m = wrf.rmul(&(&net.uplinks[d] * &b[d]))?;
        let top = CAffine::hermitian_var(nb, xi[k]).add(&m)?.add(&m.adjoint())?;
        let psi_k = net.receiver_side_covariance(b, k)?;
        let corner = CAffine::constant(inv_hpd(&psi_k)?);
        let lmi = CAffine::block2(&top, &wrf, &wrf.adjoint(), &corner)?;
        prog.add_psd(embed_hermitian(&lmi)?);

        let offset = net.sigma2_d * fro_norm_sqr(&w[k]) + nb as f64;
        let epi = CAffine::hermitian_var(nb, xi[k]).trace_re().plus_const(offset);
        prog.add_le(&epi, &AffineForm::var(tau));
    }

    let psi = net.received_covariance(b)?;
    let lmi = CAffine::block2(
        &CAffine::hermitian_var(nr, phi),
        &f,
        &f.adjoint(),
        &CAffine::constant(inv_hpd(&psi)?),
    )?;
    prog.add_psd(embed_hermitian(&lmi)?);
    let power = CAffine::hermitian_var(nr, phi).trace_re();
    prog.add_le(&power, &AffineForm::constant(net.relay_power));

    Ok((prog, RelayLayout { tau, f: f0, xi, phi }))
}

/// Second-order cone form of [`relay_program`]. Each LMI is the Schur
/// complement of a convex quadratic in `F`, so the epigraphs become rotated
/// cones in `vec(W_kᴴ R_k F Ψ_k^{1/2})` and the power constraint becomes
/// `‖F Ψ^{1/2}‖ ≤ √P_r`. Variables are `τ` followed by `F` in the same
/// layout as the SDP; `xi` is empty and `phi` unused.
pub fn relay_cone_program(net: &Network, b: &[CMatrix], w: &[CMatrix]) -> Result<(ConicProgram, RelayLayout)> {
    let nr = net.n_r;
    let mut alloc = VarAlloc::new();
    let tau = alloc.take(1);
    let f0 = alloc.take(2 * nr * nr);
    let mut prog = ConicProgram::new(alloc.count());
    prog.set_objective(tau, 1.0);
    let f = CAffine::matrix_var(nr, nr, f0);
    for k in 0..net.users() {
        let d = net.desired(k);
        let wr = w[k].adjoint() * &net.downlinks[k];
        let root = psd_sqrt(&net.receiver_side_covariance(b, k)?)?;
        let u = f.lmul(&wr)?.rmul(&root)?.real_entries();
        let gain = f.lmul(&wr)?.rmul(&(&net.uplinks[d] * &b[d]))?.trace_re();
        let offset = net.sigma2_d * fro_norm_sqr(&w[k]) + net.streams[d] as f64;
        let v = AffineForm::var(tau).plus_const(-offset).plus(&gain.scaled(2.0));
        prog.add_soc(SocConstraint::rotated(&v, &AffineForm::constant(1.0), u));
    }
    let root = psd_sqrt(&net.received_covariance(b)?)?;
    prog.add_soc(SocConstraint::new(
        AffineForm::constant(net.relay_power.sqrt()),
        f.rmul(&root)?.real_entries(),
    ));
    Ok((prog, RelayLayout { tau, f: f0, xi: Vec::new(), phi: alloc.count() }))
}

/// Solves the relay SDP and returns a power-feasible `F`.
///
/// A solution that would raise the worst-user MSE above the incumbent's
/// (beyond round-off) is discarded in favour of the incumbent.
pub fn relay_step(
    net: &Network,
    b: &[CMatrix],
    w: &[CMatrix],
    incumbent: Option<&CMatrix>,
    settings: &Settings,
) -> Result<(CMatrix, SubproblemStats)> {
    let (prog, layout) = match settings.relay_form {
        RelayForm::Lmi => relay_program(net, b, w)?,
        RelayForm::Cone => relay_cone_program(net, b, w)?,
    };
    let (x, stats) = run_program("relay", &prog, settings)?;
    let mut f = CAffine::read_matrix_var(&x, net.n_r, net.n_r, layout.f);
    let psi = net.received_covariance(b)?;
    let p = relay_power(&f, &psi);
    if p > net.relay_power {
        f *= crate::linalg::c((net.relay_power / p).sqrt(), 0.0);
    }
    if let Some(inc) = incumbent {
        if net.max_mse(b, &f, w)? > net.max_mse(b, inc, w)? + 1e-9 {
            return Ok((inc.clone(), stats));
        }
    }
    Ok((f, stats))
}
