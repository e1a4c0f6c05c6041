use super::{run_program, Settings, SubproblemStats};
use crate::conic::{AffineForm, CAffine, ConicProgram, SocConstraint, VarAlloc};
use crate::error::{Error, Result};
use crate::linalg::{fro_norm_sqr, CMatrix};
use crate::model::Network;

/// Variable layout of the source program: `τ` then one complex matrix
/// block per precoder.
#[derive(Debug, Clone)]
pub struct SourceLayout {
    pub tau: usize,
    pub b: Vec<usize>,
}

/// Source-precoder program for fixed relay and receivers.
///
/// With `H̃_kj = W_kᴴ R_k F H_j` the MSE of receiver `k` is
/// `θ_k − 2 Re tr(H̃_kd B_d) + Σ_j ‖H̃_kj B_j‖²`, the sum running over every
/// transmitter receiver `k` does not cancel, and
/// `θ_k = σ_r² ‖W_kᴴ R_k F‖² + σ_d² ‖W_k‖² + N_b`. Each epigraph is a rotated
/// cone; the relay budget becomes `‖(F H_j B_j)_j‖ ≤ √P̄_r` with
/// `P̄_r = P_r − σ_r² tr(F Fᴴ)`.
pub fn source_program(net: &Network, f: &CMatrix, w: &[CMatrix]) -> Result<(ConicProgram, SourceLayout)> {
    let users = net.users();
    let spare = net.relay_power - net.sigma2_r * fro_norm_sqr(f);
    if spare <= 0.0 {
        return Err(Error::RelayPowerExhausted(spare));
    }
    let mut alloc = VarAlloc::new();
    let tau = alloc.take(1);
    let firsts: Vec<usize> = (0..users)
        .map(|j| alloc.take(2 * net.tx_antennas(j) * net.streams[j]))
        .collect();
    let bvars: Vec<CAffine> = (0..users)
        .map(|j| CAffine::matrix_var(net.tx_antennas(j), net.streams[j], firsts[j]))
        .collect();
    let mut prog = ConicProgram::new(alloc.count());
    prog.set_objective(tau, 1.0);

    for k in 0..users {
        let d = net.desired(k);
        let wrf = w[k].adjoint() * &net.downlinks[k] * f;
        let theta = net.sigma2_r * fro_norm_sqr(&wrf)
            + net.sigma2_d * fro_norm_sqr(&w[k])
            + net.streams[d] as f64;
        let mut u = Vec::new();
        for j in (0..users).filter(|&j| Some(j) != net.own(k)) {
            u.extend(bvars[j].lmul(&(&wrf * &net.uplinks[j]))?.real_entries());
        }
        let gain = bvars[d].lmul(&(&wrf * &net.uplinks[d]))?.trace_re();
        let v = AffineForm::var(tau).plus_const(-theta).plus(&gain.scaled(2.0));
        prog.add_soc(SocConstraint::rotated(&v, &AffineForm::constant(1.0), u));
    }

    let mut tail = Vec::new();
    for j in 0..users {
        tail.extend(bvars[j].lmul(&(f * &net.uplinks[j]))?.real_entries());
    }
    prog.add_soc(SocConstraint::new(AffineForm::constant(spare.sqrt()), tail));
    for j in 0..users {
        prog.add_soc(SocConstraint::new(
            AffineForm::constant(net.source_power[j].sqrt()),
            bvars[j].real_entries(),
        ));
    }
    Ok((prog, SourceLayout { tau, b: firsts }))
}

/// Solves the source program. Precoders are shrunk onto the power budgets
/// if round-off left them marginally outside, and the incumbent is kept
/// when the new point would raise the worst-user MSE.
pub fn source_step(
    net: &Network,
    f: &CMatrix,
    w: &[CMatrix],
    incumbent: Option<&[CMatrix]>,
    settings: &Settings,
) -> Result<(Vec<CMatrix>, SubproblemStats)> {
    let (prog, layout) = source_program(net, f, w)?;
    let (x, stats) = run_program("source", &prog, settings)?;
    let mut b: Vec<CMatrix> = (0..net.users())
        .map(|j| CAffine::read_matrix_var(&x, net.tx_antennas(j), net.streams[j], layout.b[j]))
        .collect();
    for (bj, &p) in b.iter_mut().zip(&net.source_power) {
        let e = fro_norm_sqr(bj);
        if e > p {
            *bj *= crate::linalg::c((p / e).sqrt(), 0.0);
        }
    }
    let relay = net.relay_power_of(&b, f)?;
    if relay > net.relay_power {
        // every term of the relay power except the noise part scales with |B|²
        let noise = net.sigma2_r * fro_norm_sqr(f);
        let s = ((net.relay_power - noise) / (relay - noise)).sqrt();
        for bj in &mut b {
            *bj *= crate::linalg::c(s, 0.0);
        }
    }
    if let Some(inc) = incumbent {
        if net.max_mse(&b, f, w)? > net.max_mse(inc, f, w)? + 1e-9 {
            return Ok((inc.to_vec(), stats));
        }
    }
    Ok((b, stats))
}
