mod common;

use common::conic::{barrier_oracle, build, certify, gauss, random_instance, random_sym, Instance, Lmi};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaynet::conic::{embed_hermitian, solve, AffineForm, CAffine, ConicProgram, SocConstraint, SolveStatus, SymAffine};
use relaynet::linalg::{c, from_rows, CMatrix};

#[test]
fn certifies_random_sdp_and_socp_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = Vec::new();
    for i in 0..200 {
        let (lmi, soc) = match i % 3 {
            0 => (true, false),
            1 => (false, true),
            _ => (true, true),
        };
        let inst = random_instance(&mut rng, lmi, soc);
        if let Err(e) = certify(&inst, &build(&inst)) {
            failures.push(format!("instance {i}: {e}"));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn agrees_with_barrier_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..20 {
        let inst = random_instance(&mut rng, true, i % 2 == 1);
        let s = solve(&build(&inst)).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        let oracle = barrier_oracle(&inst);
        let rel = (s.objective_value - oracle).abs() / oracle.abs().max(1.0);
        assert!(rel <= 1e-5, "instance {i}: {} vs {oracle} ({rel:e})", s.objective_value);
    }
}

#[test]
fn two_by_two_lmi_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 3;
    let inst = Instance {
        c: DVector::from_fn(n, |_, _| gauss(&mut rng)),
        lmis: vec![Lmi {
            base: DMatrix::identity(2, 2),
            coefs: (0..n).map(|_| random_sym(&mut rng, 2)).collect(),
        }],
        socs: Vec::new(),
    };
    let s = solve(&build(&inst)).unwrap();
    let oracle = barrier_oracle(&inst);
    assert!((s.objective_value - oracle).abs() <= 1e-5 * oracle.abs().max(1.0));
}

#[test]
fn minimum_eigenvalue_program() {
    // X = [[x0, x1], [x1, x2]], min tr(diag(1, 2) X) s.t. tr X = 1.
    let mut blk = SymAffine::new(2);
    blk.add_term(0, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
    blk.add_term(1, &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
    blk.add_term(2, &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])).unwrap();
    let mut p = ConicProgram::new(3);
    p.set_objective(0, 1.0);
    p.set_objective(2, 2.0);
    p.add_psd(blk);
    p.add_eq(AffineForm::var(0).plus(&AffineForm::var(2)).plus_const(-1.0));
    let s = solve(&p).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective_value - 1.0).abs() < 1e-7);
    let x = &s.primal_values;
    assert!((x[0] - 1.0).abs() < 1e-6 && x[1].abs() < 1e-4 && x[2].abs() < 1e-6);
}

#[test]
fn fixed_vector_soc() {
    let mut p = ConicProgram::new(1);
    p.set_objective(0, 1.0);
    p.add_soc(SocConstraint::new(
        AffineForm::var(0),
        vec![AffineForm::constant(3.0), AffineForm::constant(4.0)],
    ));
    let s = solve(&p).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective_value - 5.0).abs() < 1e-7);
}

fn embedded_matrix(m: &CMatrix) -> DMatrix<f64> {
    embed_hermitian(&CAffine::constant(m.clone())).unwrap().eval(&[])
}

#[test]
fn embedding_examples() {
    let id = embedded_matrix(&CMatrix::identity(2, 2));
    assert_eq!(id, DMatrix::identity(4, 4));

    let m = from_rows(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]).unwrap();
    let e = embedded_matrix(&m);
    let mut eig: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    for (got, want) in eig.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn embedding_preserves_psd_on_random_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut seen = [0usize; 2];
    for _ in 0..50 {
        let a = CMatrix::from_fn(3, 3, |_, _| c(gauss(&mut rng), gauss(&mut rng)));
        // Shifting a PSD matrix by a random amount gives both signs.
        let shift = 4.0 * rng.random::<f64>();
        let h = &a * a.adjoint() - CMatrix::identity(3, 3) * c(shift, 0.0);
        let min_c = h.symmetric_eigenvalues().min();
        let min_r = embedded_matrix(&h).symmetric_eigenvalues().min();
        assert!((min_c - min_r).abs() < 1e-9);
        seen[(min_c >= 0.0) as usize] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}
