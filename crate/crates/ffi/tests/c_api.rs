use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use relaynet::model::{db_to_linear, Mode, SystemConfig};
use relaynet::sim::{csv_string, run_mse_sweep, Algorithm, SimOptions};
use relaynet_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(relaynet_last_error()) }.to_str().unwrap().to_owned()
}

fn uniform(mode: RelaynetMode, pairs: usize, n_s: usize, n_r: usize, n_d: usize, n_b: usize) -> *mut RelaynetConfig {
    let mut cfg = ptr::null_mut();
    let st = unsafe { relaynet_config_uniform(mode, pairs, n_s, n_r, n_d, n_b, 10.0, 20.0, &mut cfg) };
    assert_eq!(st, RelaynetStatus::Ok, "{}", last_error());
    cfg
}

#[test]
fn design_round_trip() {
    unsafe {
        let cfg = uniform(RelaynetMode::OneWay, 2, 2, 4, 2, 2);
        let mut users = 0;
        assert_eq!(relaynet_config_users(cfg, &mut users), RelaynetStatus::Ok);
        assert_eq!(users, 2);

        let mut ch = ptr::null_mut();
        assert_eq!(relaynet_channels_generate(cfg, 5, &mut ch), RelaynetStatus::Ok);

        for alg in [RelaynetAlgorithm::Naf, RelaynetAlgorithm::Simplified, RelaynetAlgorithm::Iterative] {
            let mut d = ptr::null_mut();
            assert_eq!(relaynet_design_compute(cfg, ch, alg, &mut d), RelaynetStatus::Ok, "{}", last_error());
            assert_eq!(last_error(), "");

            let mut mse = [0.0; 2];
            assert_eq!(relaynet_design_user_mse(d, mse.as_mut_ptr(), 2), RelaynetStatus::Ok);
            let mut worst = 0.0;
            assert_eq!(relaynet_design_worst_nmse(d, &mut worst), RelaynetStatus::Ok);
            let expect = mse.iter().fold(0.0f64, |m, &e| m.max(e / 2.0));
            assert!((worst - expect).abs() < 1e-15);
            assert!(worst > 0.0 && worst < 1.0);

            let mut iters = usize::MAX;
            assert_eq!(relaynet_design_iterations(d, &mut iters), RelaynetStatus::Ok);
            assert_eq!(iters == 0, alg == RelaynetAlgorithm::Naf);

            let (mut rows, mut cols) = (0, 0);
            assert_eq!(relaynet_design_relay_shape(d, &mut rows, &mut cols), RelaynetStatus::Ok);
            assert_eq!((rows, cols), (4, 4));
            let mut re = vec![0.0; 16];
            let mut im = vec![0.0; 16];
            assert_eq!(relaynet_design_relay_matrix(d, re.as_mut_ptr(), im.as_mut_ptr(), 16), RelaynetStatus::Ok);
            assert!(re.iter().chain(&im).any(|&x| x != 0.0));
            relaynet_design_free(d);
        }
        relaynet_channels_free(ch);
        relaynet_config_free(cfg);
    }
}

#[test]
fn two_way_config_counts_both_ends() {
    unsafe {
        let cfg = uniform(RelaynetMode::TwoWay, 2, 2, 4, 3, 2);
        let mut users = 0;
        assert_eq!(relaynet_config_users(cfg, &mut users), RelaynetStatus::Ok);
        assert_eq!(users, 4);
        relaynet_config_free(cfg);
    }
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        let mut users = 0;
        assert_eq!(relaynet_config_users(ptr::null(), &mut users), RelaynetStatus::NullPointer);
        assert!(last_error().contains("config"));

        let cfg = uniform(RelaynetMode::OneWay, 1, 1, 1, 1, 1);
        assert_eq!(relaynet_config_users(cfg, ptr::null_mut()), RelaynetStatus::NullPointer);
        assert_eq!(relaynet_channels_generate(cfg, 0, ptr::null_mut()), RelaynetStatus::NullPointer);
        assert_eq!(relaynet_config_load(ptr::null(), &mut ptr::null_mut()), RelaynetStatus::NullPointer);
        relaynet_config_free(cfg);

        relaynet_config_free(ptr::null_mut());
        relaynet_channels_free(ptr::null_mut());
        relaynet_design_free(ptr::null_mut());
        relaynet_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_inputs_map_to_error_codes() {
    unsafe {
        let mut cfg = ptr::null_mut();
        // More streams than source antennas.
        let st = relaynet_config_uniform(RelaynetMode::OneWay, 2, 1, 4, 2, 2, 10.0, 20.0, &mut cfg);
        assert_eq!(st, RelaynetStatus::Config);
        assert!(cfg.is_null());
        assert!(!last_error().is_empty());

        let missing = CString::new("/nonexistent/relaynet.conf").unwrap();
        assert_eq!(relaynet_config_load(missing.as_ptr(), &mut cfg), RelaynetStatus::Io);
        assert!(last_error().contains("/nonexistent/relaynet.conf"));

        let cfg = uniform(RelaynetMode::OneWay, 1, 1, 1, 1, 1);
        assert_eq!(relaynet_config_set_noise(cfg, -1.0, 1.0), RelaynetStatus::Config);
        assert_eq!(relaynet_config_set_source_power_db(cfg, 3.0), RelaynetStatus::Ok);
        assert_eq!(last_error(), "");

        let mut ch = ptr::null_mut();
        assert_eq!(relaynet_channels_generate(cfg, 1, &mut ch), RelaynetStatus::Ok);
        let mut d = ptr::null_mut();
        assert_eq!(relaynet_design_compute(cfg, ch, RelaynetAlgorithm::Naf, &mut d), RelaynetStatus::Ok);
        let mut one = [0.0; 1];
        assert_eq!(relaynet_design_user_mse(d, one.as_mut_ptr(), 0), RelaynetStatus::InvalidArgument);
        assert_eq!(relaynet_design_relay_matrix(d, one.as_mut_ptr(), ptr::null_mut(), 1), RelaynetStatus::NullPointer);
        relaynet_design_free(d);
        relaynet_channels_free(ch);
        relaynet_config_free(cfg);
    }
}

#[test]
fn loads_config_files() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/oneway-k3-ns2.conf");
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(relaynet_config_load(c_path.as_ptr(), &mut cfg), RelaynetStatus::Ok);
        let mut users = 0;
        relaynet_config_users(cfg, &mut users);
        assert_eq!(users, 3);
        relaynet_config_free(cfg);
    }
}

#[test]
fn sweep_csv_matches_library() {
    let algs = [RelaynetAlgorithm::Simplified, RelaynetAlgorithm::Naf];
    let axis = [0.0, 10.0];
    let text = unsafe {
        let cfg = uniform(RelaynetMode::OneWay, 2, 2, 4, 2, 2);
        let mut out = ptr::null_mut();
        let st = relaynet_sweep_mse_csv(cfg, algs.as_ptr(), 2, axis.as_ptr(), 2, 3, 9, 2, &mut out);
        assert_eq!(st, RelaynetStatus::Ok, "{}", last_error());
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        relaynet_string_free(out);
        relaynet_config_free(cfg);
        text
    };
    let cfg = SystemConfig::uniform(Mode::OneWay, 2, 2, 4, 2, 2, db_to_linear(10.0), db_to_linear(20.0)).unwrap();
    let lib = run_mse_sweep(&cfg, &[Algorithm::SimplifiedOneWay, Algorithm::Naf], &axis, 3, 9, &SimOptions::default()).unwrap();
    assert_eq!(text, csv_string(&lib));
    assert!(text.starts_with("p_s_db,algorithm,metric,value,trials,failures\n"));

    unsafe {
        let cfg = uniform(RelaynetMode::OneWay, 1, 1, 1, 1, 1);
        let mut out = ptr::null_mut();
        let st = relaynet_sweep_mse_csv(cfg, algs.as_ptr(), 0, axis.as_ptr(), 2, 3, 9, 1, &mut out);
        assert_eq!(st, RelaynetStatus::InvalidArgument);
        assert!(out.is_null());
        let st = relaynet_sweep_mse_csv(cfg, algs.as_ptr(), 1, axis.as_ptr(), 2, 0, 9, 1, &mut out);
        assert_eq!(st, RelaynetStatus::InvalidArgument);
        relaynet_config_free(cfg);
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        let mut users = 0;
        relaynet_config_users(ptr::null(), &mut users);
    }
    assert!(!last_error().is_empty());
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(relaynet_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/relaynet.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "relaynet_last_error",
        "relaynet_config_uniform",
        "relaynet_design_compute",
        "relaynet_sweep_mse_csv",
        "relaynet_string_free",
        "RELAYNET_STATUS_NULL_POINTER",
        "typedef struct RelaynetDesign RelaynetDesign",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"]).arg(&header).output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
