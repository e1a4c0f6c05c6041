mod common;

use common::*;
use proptest::prelude::*;
use relaynet::linalg::{c, fro_norm, trace_re, zeros, CMatrix};
use relaynet::model::{complex_gaussian, generate_channels, ChannelRealization, Mode, Network, SystemConfig, TransceiverDesign};
use relaynet::opt::{RelayForm, Settings};
use relaynet::twoway::*;

/// One pair of single-antenna users: user 0 has channel `h`, user 1 has `g`.
fn pair(h: f64, g: f64, ps_db: f64, pr_db: f64) -> (SystemConfig, ChannelRealization) {
    (config(Mode::TwoWay, 1, 1, 1, 1, 1, ps_db, pr_db), scalar_channels(&[h], &[g]))
}

fn instance(seed: u64, k: usize) -> (SystemConfig, ChannelRealization, Network) {
    let cfg = config(Mode::TwoWay, k, 2, 2 * k, 3, 2, 10.0, 10.0);
    let ch = generate_channels(&cfg, seed);
    let net = Network::new(&cfg, &ch).unwrap();
    (cfg, ch, net)
}

/// `(E_0, E_1)` of the scalar pair, each user detecting the other.
fn pair_mse(h: f64, g: f64, b: [f64; 2], f: f64, w: [f64; 2]) -> (f64, f64) {
    (
        scalar_mse(w[0], h * f * g * b[1], h * h * f * f + 1.0),
        scalar_mse(w[1], g * f * h * b[0], g * g * f * f + 1.0),
    )
}

#[test]
fn index_map() {
    let m = TwoWayIndexMap::new(3);
    assert_eq!(m.users(), 6);
    assert_eq!(m.partner(0), 3);
    assert_eq!(m.partner(5), 2);
    assert_eq!(m.pair_of(4), 1);
}

proptest! {
    #[test]
    fn partner_is_an_involution(pairs in 1usize..20, k in 0usize..40) {
        let m = TwoWayIndexMap::new(pairs);
        let k = k % m.users();
        prop_assert_eq!(m.partner(m.partner(k)), k);
        prop_assert_ne!(m.partner(k), k);
        if k < pairs {
            prop_assert_eq!(m.partner(k), k + pairs);
        }
    }
}

#[test]
fn receivers_for_scalar_pair_and_silent_relay() {
    let (h, g, f) = (0.7, 1.4, 0.9);
    let (cfg, ch) = pair(h, g, 0.0, 10.0);
    let b = [scalar(1.0), scalar(0.5)];
    let w = twoway_mmse_receivers(&cfg, &ch, &b, &scalar(f)).unwrap();
    let a0 = h * f * g * 0.5;
    let a1 = g * f * h * 1.0;
    assert!((w[0][(0, 0)] - c(a0 / (a0 * a0 + h * h * f * f + 1.0), 0.0)).norm() < 1e-14);
    assert!((w[1][(0, 0)] - c(a1 / (a1 * a1 + g * g * f * f + 1.0), 0.0)).norm() < 1e-14);

    let (cfg, ch, net) = instance(1, 2);
    let b = random_precoders(&net, &mut rng(1));
    let w = twoway_mmse_receivers(&cfg, &ch, &b, &zeros(4, 4)).unwrap();
    assert!(w.iter().all(|x| fro_norm(x) == 0.0));
}

#[test]
fn receivers_are_stationary() {
    for seed in 0..5 {
        let (cfg, ch, net) = instance(seed, 2);
        let mut r = rng(200 + seed);
        let b = random_precoders(&net, &mut r);
        let f = complex_gaussian(&mut r, 4, 4, 0.3);
        let w = twoway_mmse_receivers(&cfg, &ch, &b, &f).unwrap();
        for k in 0..4 {
            let e = |x: &CMatrix| net.mse(&b, &f, x, k).unwrap();
            let g0 = fd_gradient(e, &w[k], 1e-6);
            let g1 = fd_gradient(e, &(&w[k] + complex_gaussian(&mut r, net.rx_antennas(k), 2, 0.01)), 1e-6);
            assert!(fro_norm(&g0) <= 1e-6 * fro_norm(&g1));
        }
    }
}

#[test]
fn relay_matches_pair_grid() {
    for (h, g, b, w) in [(0.8, 1.3, [2.0, 1.0], [0.4, 0.3]), (1.5, 0.6, [1.0, 3.0], [0.2, 0.5])] {
        let (cfg, ch) = pair(h, g, 10.0, 10.0);
        let bs = [scalar(b[0]), scalar(b[1])];
        let ws = [scalar(w[0]), scalar(w[1])];
        let (f, _) = twoway_relay_sdp(&cfg, &ch, &bs, &ws, None, &Settings::default()).unwrap();
        let got = Network::new(&cfg, &ch).unwrap().max_mse(&bs, &f, &ws).unwrap();
        let fmax = (cfg.p_r / ((h * b[0]).powi(2) + (g * b[1]).powi(2) + 1.0)).sqrt();
        let (grid, _) = grid_min(-fmax, fmax, 10_000, |x| {
            let (e0, e1) = pair_mse(h, g, b, x, w);
            e0.max(e1)
        });
        assert!(got <= grid + 1e-9, "solver {got} grid {grid}");
        assert!(grid - got <= 1e-4, "solver {got} grid {grid}");
    }
}

#[test]
fn relay_with_silent_users_stays_off() {
    let (cfg, ch, net) = instance(2, 2);
    let b = vec![zeros(2, 2), zeros(2, 2), zeros(3, 2), zeros(3, 2)];
    let w = random_receivers(&net, &mut rng(3), 0.5);
    let (f, _) = twoway_relay_sdp(&cfg, &ch, &b, &w, None, &Settings::default()).unwrap();
    assert!(net.relay_power_of(&b, &f).unwrap() <= 1e-6);
}

#[test]
fn relay_forms_agree() {
    let (cfg, ch, net) = instance(4, 2);
    let mut r = rng(4);
    let b = random_precoders(&net, &mut r);
    let w = random_receivers(&net, &mut r, 0.3);
    let lmi = Settings { relay_form: RelayForm::Lmi, ..Default::default() };
    let (f1, _) = twoway_relay_sdp(&cfg, &ch, &b, &w, None, &lmi).unwrap();
    let (f2, _) = twoway_relay_sdp(&cfg, &ch, &b, &w, None, &Settings::default()).unwrap();
    let e1 = net.max_mse(&b, &f1, &w).unwrap();
    let e2 = net.max_mse(&b, &f2, &w).unwrap();
    assert!((e1 - e2).abs() <= 1e-6 * e1, "{e1} vs {e2}");
}

#[test]
fn source_matches_pair_grid() {
    for (h, g, f, w) in [(0.8, 1.3, 0.5, [0.4, 0.3]), (1.5, 0.6, 0.9, [0.2, 0.5])] {
        let (cfg, ch) = pair(h, g, 10.0, 10.0);
        let ws = [scalar(w[0]), scalar(w[1])];
        let (b, _) = twoway_source_sdp(&cfg, &ch, &scalar(f), &ws, None, &Settings::default()).unwrap();
        let got = Network::new(&cfg, &ch).unwrap().max_mse(&b, &scalar(f), &ws).unwrap();
        let n = 400;
        let top = cfg.p_s[0].sqrt();
        let mut grid = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let bb = [top * i as f64 / (n - 1) as f64, top * j as f64 / (n - 1) as f64];
                if f * f * ((h * bb[0]).powi(2) + (g * bb[1]).powi(2) + 1.0) > cfg.p_r {
                    continue;
                }
                let (e0, e1) = pair_mse(h, g, bb, f, w);
                grid = grid.min(e0.max(e1));
            }
        }
        assert!(got <= grid + 1e-9, "solver {got} grid {grid}");
        assert!(grid - got <= 1e-3, "solver {got} grid {grid}");
    }
}

#[test]
fn source_with_relay_off_hits_noise_floor() {
    let (cfg, ch, net) = instance(5, 2);
    let w = random_receivers(&net, &mut rng(5), 0.5);
    let f = zeros(4, 4);
    let (b, _) = twoway_source_sdp(&cfg, &ch, &f, &w, None, &Settings::default()).unwrap();
    let expect = w.iter().map(|x| 2.0 + trace_re(&(x.adjoint() * x))).fold(f64::MIN, f64::max);
    assert!((net.max_mse(&b, &f, &w).unwrap() - expect).abs() < 1e-7);
}

#[test]
fn iterate_reentry_and_descent() {
    let cfg = config(Mode::TwoWay, 3, 2, 6, 6, 2, 10.0, 20.0);
    for seed in 0..2 {
        let ch = generate_channels(&cfg, seed);
        let init = twoway_initial_design(&cfg, &ch).unwrap();
        let (design, trace) = twoway_iterate(&cfg, &ch, &init, &Settings::default()).unwrap();
        assert!(trace.max_increase() <= 1e-8);
        let net = Network::new(&cfg, &ch).unwrap();
        assert!(net.is_feasible(&design, 1e-6).unwrap());
        if trace.converged {
            let (_, again) = twoway_iterate(&cfg, &ch, &design, &Settings::default()).unwrap();
            assert_eq!(again.iters, 1);
        }
    }
}

#[test]
fn simplified_with_silent_users() {
    let (cfg, ch, _) = instance(6, 2);
    let cfg = SystemConfig { p_s: vec![0.0; 2], ..cfg };
    let out = twoway_simplified(&cfg, &ch, &Settings::default()).unwrap();
    let net = Network::new(&cfg, &ch).unwrap();
    for e in net.per_user_mse(&out.design).unwrap() {
        assert!((e - 2.0).abs() < 1e-9);
    }
}

#[test]
fn simplified_close_to_iterative_for_single_pair() {
    let (cfg, ch) = pair(0.9, 1.2, 20.0, 20.0);
    let net = Network::new(&cfg, &ch).unwrap();
    let simp = twoway_simplified(&cfg, &ch, &Settings::default()).unwrap();
    let e_s = net.per_user_mse(&simp.design).unwrap().into_iter().fold(f64::MIN, f64::max);
    let init = twoway_initial_design(&cfg, &ch).unwrap();
    let (it, _) = twoway_iterate(&cfg, &ch, &init, &Settings::default()).unwrap();
    let e_i = net.per_user_mse(&it).unwrap().into_iter().fold(f64::MIN, f64::max);
    assert!(e_s <= 1.1 * e_i, "simplified {e_s} iterative {e_i}");
}

#[test]
fn decomposition_identity() {
    for seed in 0..9 {
        let k = 1 + seed as usize % 3;
        let mut cfg = config(Mode::TwoWay, k, 2, 2 * k + 1, 3, 2, 10.0, 10.0);
        cfg.sigma2_d = 0.7;
        let ch = generate_channels(&cfg, seed);
        let net = Network::new(&cfg, &ch).unwrap();
        let mut r = rng(700 + seed);
        let b = random_precoders(&net, &mut r);
        let t = complex_gaussian(&mut r, cfg.n_r, 2, 1.0);
        for user in 0..2 * k {
            let f = twoway_per_user_relay(&cfg, &ch, &b, &t, user).unwrap();
            let (e1, e2) = twoway_decomposed_mse(&cfg, &ch, &b, &t, user).unwrap();
            let direct = twoway_mmse_form_mse(&cfg, &ch, &b, &f, user).unwrap();
            let w = net.mmse_receiver(&b, &f, user).unwrap();
            let design_mse = net.mse(&b, &f, &w, user).unwrap();
            assert!(((e1 + e2) - direct).abs() <= 1e-8 * direct, "seed {seed} user {user}");
            assert!((design_mse - direct).abs() <= 1e-8 * direct);
        }
    }
}

#[test]
fn own_signal_does_not_change_mse() {
    let (_, _, net) = instance(8, 2);
    let mut r = rng(8);
    let b = random_precoders(&net, &mut r);
    let f = complex_gaussian(&mut r, 4, 4, 0.3);
    let w = net.mmse_receivers(&b, &f).unwrap();
    for k in 0..4 {
        let mut b2 = b.clone();
        b2[k] = complex_gaussian(&mut r, net.tx_antennas(k), 2, 2.0);
        let d = TransceiverDesign { b: b.clone(), f: f.clone(), w: w.clone() };
        let e = net.mse(&d.b, &d.f, &d.w[k], k).unwrap();
        // only user k's own precoder changes; its relay power share does
        // not enter its own error
        let e2 = net.mse(&b2, &f, &w[k], k).unwrap();
        assert!((e - e2).abs() < 1e-12);
    }
}

#[test]
fn wrong_mode_is_rejected() {
    let cfg = config(Mode::OneWay, 1, 1, 1, 1, 1, 0.0, 0.0);
    let ch = generate_channels(&cfg, 0);
    assert!(twoway_initial_design(&cfg, &ch).is_err());
}
