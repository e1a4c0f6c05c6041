use super::{run_program, RelayRecovery, Settings, SubproblemStats};
use crate::conic::{embed_hermitian, AffineForm, CAffine, ConicProgram, SocConstraint, VarAlloc};
use crate::error::{Error, Result};
use crate::linalg::{c, eye, fro_norm_sqr, hermitian_evd, inv_hpd, solve_hpd, trace_re, zeros, CMatrix};
use crate::model::{relay_power, Mode, Network, TransceiverDesign};

#[derive(Debug, Clone)]
pub struct SimplifiedDesignOutput {
    pub design: TransceiverDesign,
    /// First-hop MMSE filters, one per receiver (see [`first_hop_filters`]).
    pub d_filters: Vec<CMatrix>,
    pub t_tilde: CMatrix,
    pub q: CMatrix,
    /// Per receiver.
    pub first_hop_mse: Vec<f64>,
    /// Per receiver, `tr(I + R_k Q R_kᴴ / σ_d²)⁻¹`.
    pub second_hop_mse: Vec<f64>,
    /// Per transmitter, `10 log10(‖H_j B_j‖² / (N_b σ_r²))`.
    pub first_hop_snr_db: Vec<f64>,
    pub inner_iters: usize,
    pub stats: Vec<SubproblemStats>,
}

/// Solution of the relay covariance program.
#[derive(Debug, Clone)]
pub struct QSolution {
    pub q: CMatrix,
    pub y: Vec<CMatrix>,
    pub objective: f64,
    pub stats: SubproblemStats,
}

/// First-hop MMSE filters, one per receiver: `D_k = Ψ_k⁻¹ H_d B_d` for the
/// transmitter `d` that receiver `k` wants, where `Ψ_k` is the relay
/// covariance without the signal receiver `k` cancels. In one-way mode
/// `Ψ_k = Ψ` and `d = k`.
pub fn first_hop_filters(net: &Network, b: &[CMatrix]) -> Result<Vec<CMatrix>> {
    (0..net.users())
        .map(|k| {
            let d = net.desired(k);
            let psi = net.receiver_side_covariance(b, k)?;
            Ok(solve_hpd(&psi, &(&net.uplinks[d] * &b[d]))?)
        })
        .collect()
}

/// `E‖D_kᴴ y_k − s_d‖² = tr(D_kᴴ Ψ_k D_k − 2 Re D_kᴴ H_d B_d + I)`, with
/// `y_k` the relay signal after removing what receiver `k` cancels.
pub fn first_hop_mse(net: &Network, b: &[CMatrix], d: &[CMatrix], k: usize) -> Result<f64> {
    let src = net.desired(k);
    let psi = net.receiver_side_covariance(b, k)?;
    let cross = d[k].adjoint() * &net.uplinks[src] * &b[src];
    let quad = d[k].adjoint() * psi * &d[k];
    Ok(trace_re(&quad) - 2.0 * trace_re(&cross) + net.streams[src] as f64)
}

/// Min-max first-hop MSE over the precoders for fixed filters:
/// minimize `t` with `‖(σ_r D_k, (D_kᴴ H_j B_j − δ_jd I)_j)‖ ≤ t` for every
/// receiver `k` (desired transmitter `d`, cancelled transmitter skipped)
/// and `‖B_j‖ ≤ √P_s`. The optimal `t²` is the worst first-hop MSE.
pub fn source_socp(net: &Network, d: &[CMatrix], settings: &Settings) -> Result<(Vec<CMatrix>, SubproblemStats)> {
    let users = net.users();
    let mut alloc = VarAlloc::new();
    let t = alloc.take(1);
    let firsts: Vec<usize> = (0..users)
        .map(|j| alloc.take(2 * net.tx_antennas(j) * net.streams[j]))
        .collect();
    let bvars: Vec<CAffine> = (0..users)
        .map(|j| CAffine::matrix_var(net.tx_antennas(j), net.streams[j], firsts[j]))
        .collect();
    let mut prog = ConicProgram::new(alloc.count());
    prog.set_objective(t, 1.0);
    let sr = net.sigma2_r.sqrt();
    for k in 0..users {
        let mut tail: Vec<AffineForm> = CAffine::constant(d[k].scale(sr)).real_entries();
        let src = net.desired(k);
        for j in (0..users).filter(|&j| Some(j) != net.own(k)) {
            let mut e = bvars[j].lmul(&(d[k].adjoint() * &net.uplinks[j]))?;
            if j == src {
                e = e.add_constant(&(-eye(net.streams[j])))?;
            }
            tail.extend(e.real_entries());
        }
        prog.add_soc(SocConstraint::new(AffineForm::var(t), tail));
    }
    for j in 0..users {
        prog.add_soc(SocConstraint::new(
            AffineForm::constant(net.source_power[j].sqrt()),
            bvars[j].real_entries(),
        ));
    }
    let (x, stats) = run_program("first-hop source", &prog, settings)?;
    let mut b: Vec<CMatrix> = (0..users)
        .map(|j| CAffine::read_matrix_var(&x, net.tx_antennas(j), net.streams[j], firsts[j]))
        .collect();
    for (bj, &p) in b.iter_mut().zip(&net.source_power) {
        let e = fro_norm_sqr(bj);
        if e > p {
            *bj *= c((p / e).sqrt(), 0.0);
        }
    }
    Ok((b, stats))
}

/// Worst-user second-hop MSE over the relay covariance `Q`:
///
/// ```text
/// minimize t
///   tr Y_k + o_k ≤ t,  tr Q ≤ P_r,  Q ⪰ 0
///   [[Y_k, I], [I, I + R_k Q R_kᴴ / σ_d²]] ⪰ 0
/// ```
///
/// `o_k = N_b − N_rx,k`, shifted so the smallest offset is zero, makes
/// receivers with more antennas than streams comparable.
pub fn relay_q_sdp(net: &Network, settings: &Settings) -> Result<QSolution> {
    let users = net.users();
    let nr = net.n_r;
    let mut alloc = VarAlloc::new();
    let t = alloc.take(1);
    let q0 = alloc.take(nr * nr);
    let y0: Vec<usize> = (0..users)
        .map(|k| {
            let n = net.rx_antennas(k);
            alloc.take(n * n)
        })
        .collect();
    let mut prog = ConicProgram::new(alloc.count());
    prog.set_objective(t, 1.0);
    let q = CAffine::hermitian_var(nr, q0);
    let offsets = q_offsets(net);
    for k in 0..users {
        let n = net.rx_antennas(k);
        let r = &net.downlinks[k];
        let y = CAffine::hermitian_var(n, y0[k]);
        let corner = q.lmul(r)?.rmul(&r.adjoint())?.scaled(1.0 / net.sigma2_d).add_constant(&eye(n))?;
        let id = CAffine::constant(eye(n));
        prog.add_psd(embed_hermitian(&CAffine::block2(&y, &id, &id, &corner)?)?);
        prog.add_le(&y.trace_re().plus_const(offsets[k]), &AffineForm::var(t));
    }
    prog.add_psd(embed_hermitian(&q)?);
    prog.add_le(&q.trace_re(), &AffineForm::constant(net.relay_power));
    let (x, stats) = run_program("relay covariance", &prog, settings)?;
    Ok(QSolution {
        q: CAffine::read_hermitian_var(&x, nr, q0),
        y: (0..users)
            .map(|k| CAffine::read_hermitian_var(&x, net.rx_antennas(k), y0[k]))
            .collect(),
        objective: x[t],
        stats,
    })
}

fn q_offsets(net: &Network) -> Vec<f64> {
    let raw: Vec<f64> = (0..net.users())
        .map(|k| net.streams[net.desired(k)] as f64 - net.rx_antennas(k) as f64)
        .collect();
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    raw.into_iter().map(|o| o - min).collect()
}

/// Users whose first-hop estimates share one relay output block: each user
/// in one-way mode, each pair in two-way mode.
fn relay_groups(net: &Network) -> Vec<Vec<usize>> {
    match net.mode {
        Mode::OneWay => (0..net.users()).map(|k| vec![k]).collect(),
        Mode::TwoWay => (0..net.pairs).map(|p| vec![p, p + net.pairs]).collect(),
    }
}

fn common_streams(net: &Network) -> Result<usize> {
    let nb = net.streams[0];
    if net.streams.iter().any(|&s| s != nb) {
        return Err(Error::InvalidArgument(
            "the simplified design needs the same stream count for every user".into(),
        ));
    }
    Ok(nb)
}

/// `T̃ = Ũ Λ̃^{1/2}` from the leading eigenpairs of `Q`, then
/// `F = Σ_g T̃_g (Σ_{j∈g} D_j)ᴴ` over relay groups, scaled down if needed so
/// that `tr(F Ψ Fᴴ) ≤ P_r`. Returns `(F, T̃)`.
pub fn assemble_relay_matrix(
    net: &Network,
    b: &[CMatrix],
    d: &[CMatrix],
    q: &CMatrix,
) -> Result<(CMatrix, CMatrix)> {
    let nb = common_streams(net)?;
    let groups = relay_groups(net);
    let width = (groups.len() * nb).min(net.n_r);
    let evd = hermitian_evd(q)?;
    let mut t_tilde = zeros(net.n_r, groups.len() * nb);
    for i in 0..width {
        let s = evd.eigenvalues[i].max(0.0).sqrt();
        t_tilde.set_column(i, &(evd.eigenvectors.column(i) * c(s, 0.0)));
    }
    let mut f = zeros(net.n_r, net.n_r);
    for (g, members) in groups.iter().enumerate() {
        let mut dsum = zeros(net.n_r, nb);
        for &j in members {
            dsum += &d[j];
        }
        f += t_tilde.columns(g * nb, nb) * dsum.adjoint();
    }
    let psi = net.received_covariance(b)?;
    let p = relay_power(&f, &psi);
    if p > net.relay_power {
        f *= c((net.relay_power / p).sqrt(), 0.0);
    }
    Ok((f, t_tilde))
}

/// Relay matrix with the optimal structure for fixed receivers,
///
/// ```text
/// T_g = (Σ_k λ_k R_kᴴ V_k V_kᴴ R_k + λ_r I)⁻¹ Σ_{k hears g} λ_k R_kᴴ V_k
/// F   = Σ_g T_g (Σ_{j∈g} D_j)ᴴ
/// ```
///
/// where `V_k` spans the `N_b` strongest directions of `R_k Q R_kᴴ` (scaled
/// by `√(μ/(1+μ))` of its eigenvalues), `λ_r = σ_d² N_streams / P_r`, and the
/// per-receiver weights `λ_k` are rebalanced toward the worst user for up
/// to `rounds` rounds. `F` is normalized to spend the relay budget. Returns
/// the best `F` found with its `T` blocks and weights.
pub fn structured_relay_matrix(
    net: &Network,
    b: &[CMatrix],
    d: &[CMatrix],
    q: &CMatrix,
    rounds: usize,
) -> Result<(CMatrix, CMatrix, Vec<f64>)> {
    let nb = common_streams(net)?;
    let users = net.users();
    let groups = relay_groups(net);
    let mut v = Vec::with_capacity(users);
    for k in 0..users {
        let r = &net.downlinks[k];
        let evd = hermitian_evd(&(r * q * r.adjoint()))?;
        let mut vk = zeros(r.nrows(), nb);
        for i in 0..nb.min(r.nrows()) {
            let mu = evd.eigenvalues[i].max(0.0);
            vk.set_column(i, &(evd.eigenvectors.column(i) * c((mu / (1.0 + mu)).sqrt(), 0.0)));
        }
        v.push(net.downlinks[k].adjoint() * vk);
    }
    let lambda_r = net.sigma2_d * (users * nb) as f64 / net.relay_power;
    let psi = net.received_covariance(b)?;
    let mut weights = vec![1.0; users];
    let mut best: Option<(f64, CMatrix, CMatrix, Vec<f64>)> = None;
    for _ in 0..rounds.max(1) {
        let mut a = eye(net.n_r).scale(lambda_r);
        for k in 0..users {
            a += (&v[k] * v[k].adjoint()).scale(weights[k]);
        }
        let mut t = zeros(net.n_r, groups.len() * nb);
        let mut f = zeros(net.n_r, net.n_r);
        for (g, members) in groups.iter().enumerate() {
            let mut rhs = zeros(net.n_r, nb);
            let mut dsum = zeros(net.n_r, nb);
            for k in (0..users).filter(|&k| members.contains(&net.desired(k))) {
                rhs += v[k].scale(weights[k]);
            }
            for &j in members {
                dsum += &d[j];
            }
            let tg = solve_hpd(&a, &rhs)?;
            f += &tg * dsum.adjoint();
            t.columns_mut(g * nb, nb).copy_from(&tg);
        }
        let p = relay_power(&f, &psi);
        if p <= 0.0 {
            return Ok((f, t, weights));
        }
        let s = c((net.relay_power / p).sqrt(), 0.0);
        f *= s;
        t *= s;
        let w = net.mmse_receivers(b, &f)?;
        let e = (0..users)
            .map(|k| net.mse(b, &f, &w[k], k))
            .collect::<Result<Vec<_>>>()?;
        let worst = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if best.as_ref().is_none_or(|bst| worst < bst.0) {
            best = Some((worst, f.clone(), t.clone(), weights.clone()));
        }
        let mean = e.iter().sum::<f64>() / users as f64;
        if worst - e.iter().cloned().fold(f64::INFINITY, f64::min) < 1e-3 * mean {
            break;
        }
        for k in 0..users {
            weights[k] *= (e[k] / mean).powi(2);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|x| *x *= users as f64 / total);
    }
    let (_, f, t, wts) = best.expect("at least one round");
    Ok((f, t, wts))
}

/// Decoupled design: alternate first-hop filters and the source program
/// until the worst first-hop MSE settles, solve the relay covariance
/// program once, assemble `F`, and finish with MMSE receivers.
pub fn simplified_design(net: &Network, settings: &Settings) -> Result<SimplifiedDesignOutput> {
    common_streams(net)?;
    let users = net.users();
    let mut stats = Vec::new();
    let mut b = net.initial_precoders();
    let mut d = first_hop_filters(net, &b)?;
    let worst = |b: &[CMatrix], d: &[CMatrix]| -> Result<f64> {
        let mut m = f64::NEG_INFINITY;
        for k in 0..users {
            m = m.max(first_hop_mse(net, b, d, k)?);
        }
        Ok(m)
    };
    let mut prev = worst(&b, &d)?;
    let mut inner_iters = 0;
    for _ in 0..settings.inner_max {
        let (b_new, s) = source_socp(net, &d, settings)?;
        stats.push(s);
        inner_iters += 1;
        let d_new = first_hop_filters(net, &b_new)?;
        let obj = worst(&b_new, &d_new)?;
        if obj > prev {
            break;
        }
        b = b_new;
        d = d_new;
        let done = prev - obj < settings.inner_tol;
        prev = obj;
        if done {
            break;
        }
    }
    let qs = relay_q_sdp(net, settings)?;
    stats.push(qs.stats.clone());
    let (f, t_tilde) = match settings.recovery {
        RelayRecovery::Truncated => assemble_relay_matrix(net, &b, &d, &qs.q)?,
        RelayRecovery::Structured => {
            let (f, t, _) = structured_relay_matrix(net, &b, &d, &qs.q, settings.balance_rounds)?;
            (f, t)
        }
    };
    let w = net.mmse_receivers(&b, &f)?;
    let first_hop = (0..users)
        .map(|k| first_hop_mse(net, &b, &d, k))
        .collect::<Result<Vec<_>>>()?;
    let second_hop = (0..users)
        .map(|k| {
            let r = &net.downlinks[k];
            let m = eye(r.nrows()) + r * &qs.q * r.adjoint() * c(1.0 / net.sigma2_d, 0.0);
            Ok(trace_re(&inv_hpd(&m)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let snr = (0..users)
        .map(|j| {
            let s = fro_norm_sqr(&(&net.uplinks[j] * &b[j]));
            10.0 * (s / (net.streams[j] as f64 * net.sigma2_r)).log10()
        })
        .collect();
    Ok(SimplifiedDesignOutput {
        design: TransceiverDesign { b, f, w },
        d_filters: d,
        t_tilde,
        q: qs.q,
        first_hop_mse: first_hop,
        second_hop_mse: second_hop,
        first_hop_snr_db: snr,
        inner_iters,
        stats,
    })
}
