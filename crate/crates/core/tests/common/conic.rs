use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use relaynet::conic::{solve, AffineForm, ConicProgram, SocConstraint, SolveStatus, SymAffine};

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| gauss(rng));
    (&a + a.transpose()) * 0.5
}

pub struct Lmi {
    pub base: DMatrix<f64>,
    pub coefs: Vec<DMatrix<f64>>,
}

impl Lmi {
    pub fn at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut s = self.base.clone();
        for (i, a) in self.coefs.iter().enumerate() {
            s += a * x[i];
        }
        s
    }
}

/// ‖A x + b‖ ≤ d + eᵀx
pub struct Soc {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub d: f64,
    pub e: DVector<f64>,
}

/// min cᵀx over LMIs and SOCs intersected with the box |x_i| ≤ 1. The origin
/// is strictly feasible by construction.
pub struct Instance {
    pub c: DVector<f64>,
    pub lmis: Vec<Lmi>,
    pub socs: Vec<Soc>,
}

pub fn random_instance(rng: &mut ChaCha8Rng, with_lmi: bool, with_soc: bool) -> Instance {
    let n = rng.random_range(2..=5);
    let c = DVector::from_fn(n, |_, _| gauss(rng));
    let mut lmis = Vec::new();
    if with_lmi {
        for _ in 0..rng.random_range(1..=2) {
            let m = rng.random_range(2..=4);
            lmis.push(Lmi {
                base: DMatrix::identity(m, m),
                coefs: (0..n).map(|_| random_sym(rng, m)).collect(),
            });
        }
    }
    let mut socs = Vec::new();
    if with_soc {
        for _ in 0..rng.random_range(1..=2) {
            let m = rng.random_range(1..=4);
            let b = DVector::from_fn(m, |_, _| gauss(rng));
            socs.push(Soc {
                a: DMatrix::from_fn(m, n, |_, _| gauss(rng)),
                d: b.norm() + 0.5 + rng.random::<f64>(),
                b,
                e: DVector::from_fn(n, |_, _| 0.3 * gauss(rng)),
            });
        }
    }
    Instance { c, lmis, socs }
}

pub fn build(inst: &Instance) -> ConicProgram {
    let n = inst.c.len();
    let mut p = ConicProgram::new(n);
    for i in 0..n {
        p.set_objective(i, inst.c[i]);
        p.add_nonneg(AffineForm::term(i, -1.0).plus_const(1.0));
        p.add_nonneg(AffineForm::var(i).plus_const(1.0));
    }
    for l in &inst.lmis {
        let mut blk = SymAffine::new(l.base.nrows()).with_constant(l.base.clone()).unwrap();
        for (i, a) in l.coefs.iter().enumerate() {
            blk.add_term(i, a).unwrap();
        }
        p.add_psd(blk);
    }
    for s in &inst.socs {
        let mut head = AffineForm::constant(s.d);
        for i in 0..n {
            head = head.plus(&AffineForm::term(i, s.e[i]));
        }
        let tail = (0..s.a.nrows())
            .map(|r| {
                let mut f = AffineForm::constant(s.b[r]);
                for i in 0..n {
                    f = f.plus(&AffineForm::term(i, s.a[(r, i)]));
                }
                f
            })
            .collect();
        p.add_soc(SocConstraint::new(head, tail));
    }
    p
}

/// Barrier value, gradient and Hessian; None outside the interior.
pub fn barrier(inst: &Instance, x: &DVector<f64>) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
    let n = x.len();
    let mut val = 0.0;
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let (lo, hi) = (1.0 + x[i], 1.0 - x[i]);
        if lo <= 0.0 || hi <= 0.0 {
            return None;
        }
        val -= lo.ln() + hi.ln();
        g[i] += 1.0 / hi - 1.0 / lo;
        h[(i, i)] += 1.0 / (hi * hi) + 1.0 / (lo * lo);
    }
    for l in &inst.lmis {
        let chol = l.at(x).cholesky()?;
        val -= 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let sa: Vec<DMatrix<f64>> = l.coefs.iter().map(|a| chol.solve(a)).collect();
        for i in 0..n {
            g[i] -= sa[i].trace();
            for j in 0..n {
                h[(i, j)] += (&sa[i] * &sa[j]).trace();
            }
        }
    }
    for s in &inst.socs {
        let v = &s.a * x + &s.b;
        let t = s.d + s.e.dot(x);
        let q = t * t - v.norm_squared();
        if t <= 0.0 || q <= 0.0 {
            return None;
        }
        val -= q.ln();
        let dq = &s.e * (2.0 * t) - s.a.transpose() * &v * 2.0;
        let d2q = &s.e * s.e.transpose() * 2.0 - s.a.transpose() * &s.a * 2.0;
        g -= &dq / q;
        h += &dq * dq.transpose() / (q * q) - d2q / q;
    }
    Some((val, g, h))
}

/// Log-barrier path following with damped Newton centering; the final
/// suboptimality is bounded by ν / t.
pub fn barrier_oracle(inst: &Instance) -> f64 {
    let n = inst.c.len();
    let mut x = DVector::zeros(n);
    let mut t = 1.0;
    while t <= 1e10 {
        for _ in 0..200 {
            let (f0, g, h) = barrier(inst, &x).expect("iterate left the interior");
            let grad = &inst.c * t + g;
            let step = h.cholesky().expect("barrier Hessian").solve(&(-&grad));
            let decrement = -grad.dot(&step);
            if decrement < 1e-12 {
                break;
            }
            let mut alpha = 1.0;
            loop {
                let y = &x + &step * alpha;
                if let Some((f1, _, _)) = barrier(inst, &y) {
                    if t * inst.c.dot(&y) + f1 <= t * inst.c.dot(&x) + f0 - 0.25 * alpha * decrement {
                        x = y;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    break;
                }
            }
            if alpha < 1e-14 {
                break;
            }
        }
        t *= 10.0;
    }
    inst.c.dot(&x)
}

pub fn certify(inst: &Instance, p: &ConicProgram) -> Result<f64, String> {
    let s = solve(p).map_err(|e| e.to_string())?;
    if s.status != SolveStatus::Optimal {
        return Err(format!("status {:?}", s.status));
    }
    let scale = 1.0 + s.objective_value.abs();
    if s.duality_gap > 1e-7 * scale {
        return Err(format!("gap {:e}", s.duality_gap));
    }
    if s.kkt_residual > 1e-7 {
        return Err(format!("kkt {:e}", s.kkt_residual));
    }
    if s.objective_value < s.dual_objective - 1e-9 * scale {
        return Err("weak duality violated".into());
    }
    let x = DVector::from_column_slice(&s.primal_values);
    for l in &inst.lmis {
        let e = l.at(&x).symmetric_eigenvalues().min();
        if e < -1e-7 {
            return Err(format!("psd slack {e:e}"));
        }
    }
    for soc in &p.soc {
        let slack = soc.slack(&s.primal_values);
        if slack < -1e-7 {
            return Err(format!("soc slack {slack:e}"));
        }
    }
    let again = solve(p).unwrap();
    if again.primal_values != s.primal_values || again.iterations != s.iterations {
        return Err("not deterministic".into());
    }
    Ok(s.objective_value)
}

