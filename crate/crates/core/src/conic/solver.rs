//! Homogeneous self-dual primal-dual interior-point method with
//! Nesterov-Todd scaling and Mehrotra correction, for
//!
//! ```text
//! minimize cᵀx  subject to  Gx + s = h,  Ax = b,  s ∈ K
//! ```
//!
//! where `K` is a product of a nonnegative orthant, second-order cones and
//! PSD cones.

use nalgebra::{DMatrix, DVector};

use super::cones::{self, Kind, Scaling};
use super::program::ConicProgram;
use crate::error::ProgramError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// A certificate of primal infeasibility was found.
    Infeasible,
    /// A certificate of dual infeasibility (unbounded objective) was found.
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Accuracy required to report [`SolveStatus::Optimal`].
    pub tolerance: f64,
    /// Accuracy the iteration aims for before stopping early.
    pub target: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            target: 1e-9,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal_values: Vec<f64>,
    pub objective_value: f64,
    pub dual_objective: f64,
    /// Absolute duality gap of the reported iterate.
    pub duality_gap: f64,
    /// Relative primal/dual residual of the reported iterate.
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

struct Block {
    kind: Kind,
    off: usize,
    len: usize,
    vars: Vec<usize>,
    /// `len × vars.len()` slice of `G`.
    g: DMatrix<f64>,
    /// PSD only: nonzeros `(flat index, value)` of each local column.
    sparse: Vec<Vec<(usize, f64)>>,
}

struct Compiled {
    n: usize,
    p: usize,
    m: usize,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    h: DVector<f64>,
    blocks: Vec<Block>,
    degree: usize,
}

fn collect_vars(rows: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let mut v: Vec<usize> = rows.iter().flatten().map(|t| t.0).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn local_matrix(rows: &[Vec<(usize, f64)>], vars: &[usize]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(rows.len(), vars.len());
    for (i, row) in rows.iter().enumerate() {
        for &(v, a) in row {
            let j = vars.binary_search(&v).expect("collected variable");
            g[(i, j)] += a;
        }
    }
    g
}

impl Compiled {
    fn new(prog: &ConicProgram) -> Result<Self, ProgramError> {
        prog.validate()?;
        let n = prog.var_count;
        let mut blocks = Vec::new();
        let mut h = Vec::new();
        let mut push_rows = |kind: Kind, forms: Vec<&super::program::AffineForm>, h: &mut Vec<f64>| {
            let rows: Vec<Vec<(usize, f64)>> = forms
                .iter()
                .map(|f| f.terms.iter().map(|&(v, a)| (v, -a)).collect())
                .collect();
            let vars = collect_vars(&rows);
            let g = local_matrix(&rows, &vars);
            let off = h.len();
            h.extend(forms.iter().map(|f| f.constant));
            blocks.push(Block {
                kind,
                off,
                len: forms.len(),
                vars,
                g,
                sparse: Vec::new(),
            });
        };
        if !prog.nonneg.is_empty() {
            push_rows(Kind::Nonneg, prog.nonneg.iter().collect(), &mut h);
        }
        for s in &prog.soc {
            push_rows(
                Kind::Soc,
                std::iter::once(&s.head).chain(&s.tail).collect(),
                &mut h,
            );
        }
        for blk in &prog.psd {
            let d = blk.dim;
            let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d * d];
            for &(v, r, c, a) in &blk.terms {
                rows[r + c * d].push((v, -a));
                if r != c {
                    rows[c + r * d].push((v, -a));
                }
            }
            let vars = collect_vars(&rows);
            let g = local_matrix(&rows, &vars);
            let sparse = (0..vars.len())
                .map(|j| {
                    (0..d * d)
                        .filter(|&i| g[(i, j)] != 0.0)
                        .map(|i| (i, g[(i, j)]))
                        .collect()
                })
                .collect();
            let off = h.len();
            h.extend(blk.constant.iter().copied());
            blocks.push(Block {
                kind: Kind::Psd(d),
                off,
                len: d * d,
                vars,
                g,
                sparse,
            });
        }
        let m = h.len();
        if m == 0 {
            return Err(ProgramError::Shape("program has no cone constraints".into()));
        }
        let p = prog.eq.len();
        let mut a = DMatrix::zeros(p, n);
        let mut b = DVector::zeros(p);
        for (i, f) in prog.eq.iter().enumerate() {
            for &(v, coef) in &f.terms {
                a[(i, v)] += coef;
            }
            b[i] = -f.constant;
        }
        let degree = blocks.iter().map(|bl| bl.kind.degree(bl.len)).sum();
        Ok(Self {
            n,
            p,
            m,
            c: DVector::from_column_slice(&prog.objective),
            a,
            b,
            h: DVector::from_vec(h),
            blocks,
            degree,
        })
    }

    fn g_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for bl in &self.blocks {
            let xl = DVector::from_iterator(bl.vars.len(), bl.vars.iter().map(|&v| x[v]));
            out.rows_mut(bl.off, bl.len).copy_from(&(&bl.g * xl));
        }
        out
    }

    fn gt_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for bl in &self.blocks {
            let r = bl.g.tr_mul(&z.rows(bl.off, bl.len));
            for (j, &v) in bl.vars.iter().enumerate() {
                out[v] += r[j];
            }
        }
        out
    }
}

struct Scalings(Vec<Scaling>);

impl Scalings {
    fn identity(cp: &Compiled) -> Self {
        Self(
            cp.blocks
                .iter()
                .map(|bl| match bl.kind {
                    Kind::Nonneg => Scaling::Nonneg {
                        w: vec![1.0; bl.len],
                    },
                    Kind::Soc => {
                        let mut v = vec![0.0; bl.len];
                        v[0] = 1.0;
                        Scaling::Soc { beta: 1.0, v }
                    }
                    Kind::Psd(d) => Scaling::Psd {
                        r: DMatrix::identity(d, d),
                        rinv: DMatrix::identity(d, d),
                    },
                })
                .collect(),
        )
    }

    fn apply(&self, cp: &Compiled, transpose: bool, inverse: bool, u: &mut DVector<f64>) {
        for (bl, w) in cp.blocks.iter().zip(&self.0) {
            w.apply(transpose, inverse, &mut u.as_mut_slice()[bl.off..bl.off + bl.len]);
        }
    }

    /// `V u = Wᵀ W u`.
    fn v_mul(&self, cp: &Compiled, u: &DVector<f64>) -> DVector<f64> {
        let mut t = u.clone();
        self.apply(cp, false, false, &mut t);
        self.apply(cp, true, false, &mut t);
        t
    }

    /// `V⁻¹ u = W⁻¹ W⁻ᵀ u`.
    fn v_solve(&self, cp: &Compiled, u: &DVector<f64>) -> DVector<f64> {
        let mut t = u.clone();
        self.apply(cp, true, true, &mut t);
        self.apply(cp, false, true, &mut t);
        t
    }
}

enum Factor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

/// Factored reduced system for
/// `[[0, Aᵀ, Gᵀ], [A, 0, 0], [G, 0, −V]]`.
struct Kkt<'a> {
    cp: &'a Compiled,
    w: &'a Scalings,
    factor: Factor,
}

impl<'a> Kkt<'a> {
    fn new(cp: &'a Compiled, w: &'a Scalings) -> Option<Self> {
        let n = cp.n;
        let mut hm = DMatrix::<f64>::zeros(n, n);
        for (bl, sc) in cp.blocks.iter().zip(&w.0) {
            let nv = bl.vars.len();
            if nv == 0 {
                continue;
            }
            let mut gh = DMatrix::<f64>::zeros(bl.len, nv);
            match (bl.kind, sc) {
                (Kind::Psd(d), Scaling::Psd { rinv, .. }) => {
                    for j in 0..nv {
                        let nnz = &bl.sparse[j];
                        let col = if nnz.len() < 2 * d {
                            let mut acc = DMatrix::<f64>::zeros(d, d);
                            for &(idx, val) in nnz {
                                let (r, c) = (idx % d, idx / d);
                                acc.ger(val, &rinv.column(r), &rinv.column(c), 1.0);
                            }
                            acc
                        } else {
                            let gi = DMatrix::from_column_slice(d, d, bl.g.column(j).as_slice());
                            rinv * gi * rinv.transpose()
                        };
                        gh.column_mut(j).copy_from_slice(col.as_slice());
                    }
                }
                _ => {
                    for j in 0..nv {
                        let mut col: Vec<f64> = bl.g.column(j).iter().copied().collect();
                        sc.apply(true, true, &mut col);
                        gh.column_mut(j).copy_from_slice(&col);
                    }
                }
            }
            let local = gh.tr_mul(&gh);
            for (lj, &vj) in bl.vars.iter().enumerate() {
                for (li, &vi) in bl.vars.iter().enumerate() {
                    hm[(vi, vj)] += local[(li, lj)];
                }
            }
        }
        let factor = if cp.p == 0 {
            let scale = hm.diagonal().iter().fold(1.0_f64, |a, v| a.max(v.abs()));
            let mut reg = 0.0;
            loop {
                let mut t = hm.clone();
                for i in 0..n {
                    t[(i, i)] += reg;
                }
                if let Some(ch) = nalgebra::Cholesky::new(t) {
                    break Factor::Chol(ch);
                }
                reg = if reg == 0.0 { 1e-13 * scale } else { reg * 100.0 };
                if reg > 1e-4 * scale {
                    return None;
                }
            }
        } else {
            let p = cp.p;
            let mut k = DMatrix::<f64>::zeros(n + p, n + p);
            k.view_mut((0, 0), (n, n)).copy_from(&hm);
            k.view_mut((0, n), (n, p)).copy_from(&cp.a.transpose());
            k.view_mut((n, 0), (p, n)).copy_from(&cp.a);
            let lu = k.lu();
            if !lu.is_invertible() {
                return None;
            }
            Factor::Lu(lu)
        };
        Some(Self { cp, w, factor })
    }

    fn solve_once(
        &self,
        px: &DVector<f64>,
        py: &DVector<f64>,
        pz: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let cp = self.cp;
        let rhs_x = px + cp.gt_mul(&self.w.v_solve(cp, pz));
        let (ux, uy) = match &self.factor {
            Factor::Chol(ch) => (ch.solve(&rhs_x), DVector::zeros(0)),
            Factor::Lu(lu) => {
                let mut rhs = DVector::zeros(cp.n + cp.p);
                rhs.rows_mut(0, cp.n).copy_from(&rhs_x);
                rhs.rows_mut(cp.n, cp.p).copy_from(py);
                let sol = lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(cp.n + cp.p));
                (sol.rows(0, cp.n).into_owned(), sol.rows(cp.n, cp.p).into_owned())
            }
        };
        let uz = self.w.v_solve(cp, &(cp.g_mul(&ux) - pz));
        (ux, uy, uz)
    }

    /// Solves with one step of iterative refinement.
    fn solve(
        &self,
        px: &DVector<f64>,
        py: &DVector<f64>,
        pz: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let cp = self.cp;
        let (mut ux, mut uy, mut uz) = self.solve_once(px, py, pz);
        let rx = px - (cp.a.tr_mul(&uy) + cp.gt_mul(&uz));
        let ry = py - &cp.a * &ux;
        let rz = pz - (cp.g_mul(&ux) - self.w.v_mul(cp, &uz));
        let (cx, cy, cz) = self.solve_once(&rx, &ry, &rz);
        ux += cx;
        uy += cy;
        uz += cz;
        (ux, uy, uz)
    }
}

struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    s: DVector<f64>,
    z: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Best {
    merit: f64,
    x: Vec<f64>,
    pcost: f64,
    dcost: f64,
    gap: f64,
    res: f64,
    iteration: usize,
}

fn for_blocks(cp: &Compiled, f: impl Fn(Kind, std::ops::Range<usize>) -> f64) -> f64 {
    cp.blocks
        .iter()
        .map(|bl| f(bl.kind, bl.off..bl.off + bl.len))
        .fold(f64::INFINITY, f64::min)
}

fn shift_into_cone(cp: &Compiled, u: &mut DVector<f64>) {
    let margin = for_blocks(cp, |k, r| cones::interior_margin(k, &u.as_slice()[r]));
    let t = -margin;
    if t >= -1e-8 * u.norm().max(1.0) {
        let mut e = DVector::zeros(cp.m);
        for bl in &cp.blocks {
            cones::identity(bl.kind, &mut e.as_mut_slice()[bl.off..bl.off + bl.len]);
        }
        *u += e * (1.0 + t);
    }
}

fn blockwise(
    cp: &Compiled,
    a: &DVector<f64>,
    b: &DVector<f64>,
    f: impl Fn(Kind, &[f64], &[f64], &mut [f64]),
) -> DVector<f64> {
    let mut out = DVector::zeros(cp.m);
    for bl in &cp.blocks {
        let r = bl.off..bl.off + bl.len;
        f(
            bl.kind,
            &a.as_slice()[r.clone()],
            &b.as_slice()[r.clone()],
            &mut out.as_mut_slice()[r],
        );
    }
    out
}

pub fn solve(prog: &ConicProgram) -> Result<ConicSolution, ProgramError> {
    solve_with(prog, &SolverSettings::default())
}

pub fn solve_with(
    prog: &ConicProgram,
    settings: &SolverSettings,
) -> Result<ConicSolution, ProgramError> {
    let cp = Compiled::new(prog)?;
    Ok(run(&cp, settings))
}

fn run(cp: &Compiled, settings: &SolverSettings) -> ConicSolution {
    let failure = |status, iterations| ConicSolution {
        status,
        primal_values: vec![f64::NAN; cp.n],
        objective_value: f64::NAN,
        dual_objective: f64::NAN,
        duality_gap: f64::NAN,
        kkt_residual: f64::NAN,
        iterations,
    };

    let ident = Scalings::identity(cp);
    let Some(k0) = Kkt::new(cp, &ident) else {
        return failure(SolveStatus::NumericalFailure, 0);
    };
    let (x, _, zp) = k0.solve(&DVector::zeros(cp.n), &cp.b, &cp.h);
    let mut s = -zp;
    let (_, y, mut z) = k0.solve(&(-&cp.c), &DVector::zeros(cp.p), &DVector::zeros(cp.m));
    shift_into_cone(cp, &mut s);
    shift_into_cone(cp, &mut z);
    let mut it = Iterate {
        x,
        y,
        s,
        z,
        tau: 1.0,
        kappa: 1.0,
    };

    let resx0 = cp.c.norm().max(1.0);
    let resy0 = cp.b.norm().max(1.0);
    let resz0 = cp.h.norm().max(1.0);
    let nu = cp.degree as f64;
    let mut best: Option<Best> = None;

    let finish = |best: Option<Best>, fallback: SolveStatus, iterations: usize| match best {
        Some(b) if b.merit <= settings.tolerance => ConicSolution {
            status: SolveStatus::Optimal,
            primal_values: b.x,
            objective_value: b.pcost,
            dual_objective: b.dcost,
            duality_gap: b.gap,
            kkt_residual: b.res,
            iterations: b.iteration,
        },
        Some(b) => ConicSolution {
            status: fallback,
            primal_values: b.x,
            objective_value: b.pcost,
            dual_objective: b.dcost,
            duality_gap: b.gap,
            kkt_residual: b.res,
            iterations,
        },
        None => failure(fallback, iterations),
    };

    for iter in 0..=settings.max_iterations {
        let gx = cp.g_mul(&it.x);
        let rx = cp.a.tr_mul(&it.y) + cp.gt_mul(&it.z) + &cp.c * it.tau;
        let ry = &cp.b * it.tau - &cp.a * &it.x;
        let rz = &it.s + &gx - &cp.h * it.tau;
        let cx = cp.c.dot(&it.x);
        let by_hz = cp.b.dot(&it.y) + cp.h.dot(&it.z);
        let rt = it.kappa + cx + by_hz;
        let sz = it.s.dot(&it.z);

        let pcost = cx / it.tau;
        let dcost = -by_hz / it.tau;
        let gap = (sz / (it.tau * it.tau)).max((pcost - dcost).abs());
        let pres = (ry.norm() / resy0).max(rz.norm() / resz0) / it.tau;
        let dres = rx.norm() / resx0 / it.tau;
        let rel_gap = gap / pcost.abs().max(1.0);
        let merit = pres.max(dres).max(rel_gap);
        if merit.is_finite() && best.as_ref().is_none_or(|b| merit < b.merit) {
            best = Some(Best {
                merit,
                x: (&it.x / it.tau).iter().copied().collect(),
                pcost,
                dcost,
                gap,
                res: pres.max(dres),
                iteration: iter,
            });
        }
        if merit <= settings.target {
            return finish(best, SolveStatus::Optimal, iter);
        }
        if let Some(b) = &best {
            if b.merit <= settings.tolerance && iter >= b.iteration + 4 {
                return finish(best, SolveStatus::Optimal, iter);
            }
        }
        // Infeasibility certificates.
        if by_hz < 0.0 {
            let pinf = (cp.a.tr_mul(&it.y) + cp.gt_mul(&it.z)).norm() / resx0 / (-by_hz);
            if pinf <= settings.tolerance && merit > settings.tolerance {
                let mut sol = failure(SolveStatus::Infeasible, iter);
                sol.kkt_residual = pinf;
                return sol;
            }
        }
        if cx < 0.0 {
            let dinf = ((&cp.a * &it.x).norm() / resy0).max((&gx + &it.s).norm() / resz0) / (-cx);
            if dinf <= settings.tolerance && merit > settings.tolerance {
                let mut sol = failure(SolveStatus::Unbounded, iter);
                sol.kkt_residual = dinf;
                return sol;
            }
        }
        if iter == settings.max_iterations {
            return finish(best, SolveStatus::MaxIterations, iter);
        }

        // Scaling at the current point.
        let mut scal = Vec::with_capacity(cp.blocks.len());
        let mut lambda = DVector::zeros(cp.m);
        for bl in &cp.blocks {
            let r = bl.off..bl.off + bl.len;
            match Scaling::compute(bl.kind, &it.s.as_slice()[r.clone()], &it.z.as_slice()[r.clone()]) {
                Some((w, l)) => {
                    scal.push(w);
                    lambda.as_mut_slice()[r].copy_from_slice(&l);
                }
                None => return finish(best, SolveStatus::NumericalFailure, iter),
            }
        }
        let w = Scalings(scal);
        let Some(kkt) = Kkt::new(cp, &w) else {
            return finish(best, SolveStatus::NumericalFailure, iter);
        };
        let (x2, y2, z2) = kkt.solve(&(-&cp.c), &cp.b, &cp.h);
        let denom_base = cp.c.dot(&x2) + cp.b.dot(&y2) + cp.h.dot(&z2) - it.kappa / it.tau;
        let mu = (sz + it.tau * it.kappa) / (nu + 1.0);

        let direction = |eta: f64, d_s: &DVector<f64>, dk: f64| {
            let t = blockwise(cp, &lambda, d_s, cones::jdiv);
            let mut wt = t.clone();
            w.apply(cp, true, false, &mut wt);
            let (x1, y1, z1) = kkt.solve(&(&rx * -eta), &(&ry * eta), &(&rz * -eta - wt));
            let dtau = (-eta * rt - dk / it.tau - (cp.c.dot(&x1) + cp.b.dot(&y1) + cp.h.dot(&z1)))
                / denom_base;
            let dx = x1 + &x2 * dtau;
            let dy = y1 + &y2 * dtau;
            let dz = z1 + &z2 * dtau;
            let mut dzt = dz.clone();
            w.apply(cp, false, false, &mut dzt);
            let dst = t - &dzt;
            let dkappa = (dk - it.kappa * dtau) / it.tau;
            (dx, dy, dz, dtau, dst, dzt, dkappa)
        };
        let step_length = |dst: &DVector<f64>, dzt: &DVector<f64>, dtau: f64, dkappa: f64| {
            let mut a = for_blocks(cp, |k, r| {
                cones::max_step(k, &lambda.as_slice()[r.clone()], &dst.as_slice()[r.clone()])
                    .min(cones::max_step(k, &lambda.as_slice()[r.clone()], &dzt.as_slice()[r]))
            });
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-it.kappa / dkappa);
            }
            a
        };

        let ll = blockwise(cp, &lambda, &lambda, cones::jprod);
        let (_, _, _, dtau_a, dst_a, dzt_a, dk_a) = direction(1.0, &(-&ll), -it.tau * it.kappa);
        let alpha_a = step_length(&dst_a, &dzt_a, dtau_a, dk_a).min(1.0);
        let sigma = (1.0 - alpha_a).clamp(0.0, 1.0).powi(3);

        let mut e = DVector::zeros(cp.m);
        for bl in &cp.blocks {
            cones::identity(bl.kind, &mut e.as_mut_slice()[bl.off..bl.off + bl.len]);
        }
        let corr = blockwise(cp, &dst_a, &dzt_a, cones::jprod);
        let d_s = -&ll - corr + e * (sigma * mu);
        let dk = -it.tau * it.kappa - dtau_a * dk_a + sigma * mu;
        let (dx, dy, dz, dtau, dst, dzt, dkappa) = direction(1.0 - sigma, &d_s, dk);
        let alpha = (0.99 * step_length(&dst, &dzt, dtau, dkappa)).min(1.0);
        if !(alpha > 1e-12) || !alpha.is_finite() {
            return finish(best, SolveStatus::NumericalFailure, iter);
        }
        let mut ds = dst;
        w.apply(cp, true, false, &mut ds);
        it.x += dx * alpha;
        it.y += dy * alpha;
        it.z += dz * alpha;
        it.s += ds * alpha;
        it.tau += dtau * alpha;
        it.kappa += dkappa * alpha;
    }
    unreachable!("loop returns at max_iterations")
}
