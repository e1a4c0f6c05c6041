use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::program::{AffineForm, SymAffine};
use crate::error::ProgramError;
use crate::linalg::{hermitian_defect, CMatrix};

/// Allocates consecutive real variable indices.
#[derive(Debug, Clone, Default)]
pub struct VarAlloc {
    next: usize,
}

impl VarAlloc {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reserves `n` indices and returns the first.
    pub fn take(&mut self, n: usize) -> usize {
        let first = self.next;
        self.next += n;
        first
    }

    pub fn count(&self) -> usize {
        self.next
    }
}

/// Complex matrix affine in real variables: `C + Σ x_v A_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CAffine {
    pub constant: CMatrix,
    pub terms: BTreeMap<usize, CMatrix>,
}

impl CAffine {
    pub fn constant(m: CMatrix) -> Self {
        Self {
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(CMatrix::zeros(rows, cols))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.constant.shape()
    }

    /// General complex `rows × cols` matrix variable occupying `2·rows·cols`
    /// indices from `first`: entry `(i, j)` has real part at
    /// `first + 2(i + j·rows)` and imaginary part right after it.
    pub fn matrix_var(rows: usize, cols: usize, first: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                let k = first + 2 * (i + j * rows);
                let mut re = CMatrix::zeros(rows, cols);
                re[(i, j)] = Complex64::new(1.0, 0.0);
                let mut im = CMatrix::zeros(rows, cols);
                im[(i, j)] = Complex64::new(0.0, 1.0);
                out.terms.insert(k, re);
                out.terms.insert(k + 1, im);
            }
        }
        out
    }

    /// Value of a [`CAffine::matrix_var`] block in `x`.
    pub fn read_matrix_var(x: &[f64], rows: usize, cols: usize, first: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |i, j| {
            let k = first + 2 * (i + j * rows);
            Complex64::new(x[k], x[k + 1])
        })
    }

    /// Hermitian `n × n` variable occupying `n²` indices from `first`:
    /// the `n` diagonal entries, then real and imaginary parts of each
    /// strictly lower entry in column order.
    pub fn hermitian_var(n: usize, first: usize) -> Self {
        let mut out = Self::zeros(n, n);
        let mut k = first;
        for i in 0..n {
            let mut e = CMatrix::zeros(n, n);
            e[(i, i)] = Complex64::new(1.0, 0.0);
            out.terms.insert(k, e);
            k += 1;
        }
        for j in 0..n {
            for i in (j + 1)..n {
                let mut re = CMatrix::zeros(n, n);
                re[(i, j)] = Complex64::new(1.0, 0.0);
                re[(j, i)] = Complex64::new(1.0, 0.0);
                let mut im = CMatrix::zeros(n, n);
                im[(i, j)] = Complex64::new(0.0, 1.0);
                im[(j, i)] = Complex64::new(0.0, -1.0);
                out.terms.insert(k, re);
                out.terms.insert(k + 1, im);
                k += 2;
            }
        }
        out
    }

    pub fn read_hermitian_var(x: &[f64], n: usize, first: usize) -> CMatrix {
        let h = Self::hermitian_var(n, first);
        h.eval(x)
    }

    pub fn lmul(&self, m: &CMatrix) -> Result<Self, ProgramError> {
        if m.ncols() != self.constant.nrows() {
            return Err(shape_err("lmul", m.shape(), self.shape()));
        }
        Ok(self.map(|a| m * a))
    }

    pub fn rmul(&self, m: &CMatrix) -> Result<Self, ProgramError> {
        if m.nrows() != self.constant.ncols() {
            return Err(shape_err("rmul", self.shape(), m.shape()));
        }
        Ok(self.map(|a| a * m))
    }

    pub fn adjoint(&self) -> Self {
        self.map(|a| a.adjoint())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|a| a * Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &CAffine) -> Result<Self, ProgramError> {
        if self.shape() != other.shape() {
            return Err(shape_err("add", self.shape(), other.shape()));
        }
        let mut out = self.clone();
        out.constant += &other.constant;
        for (k, a) in &other.terms {
            match out.terms.get_mut(k) {
                Some(m) => *m += a,
                None => {
                    out.terms.insert(*k, a.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn add_constant(&self, m: &CMatrix) -> Result<Self, ProgramError> {
        self.add(&CAffine::constant(m.clone()))
    }

    /// `[[a11, a12], [a21, a22]]`.
    pub fn block2(
        a11: &CAffine,
        a12: &CAffine,
        a21: &CAffine,
        a22: &CAffine,
    ) -> Result<Self, ProgramError> {
        let (r1, c1) = a11.shape();
        let (r2, c2) = a22.shape();
        if a12.shape() != (r1, c2) || a21.shape() != (r2, c1) {
            return Err(ProgramError::Shape(format!(
                "block2: diagonal blocks {r1}x{c1}, {r2}x{c2} but off-diagonal {:?}, {:?}",
                a12.shape(),
                a21.shape()
            )));
        }
        let place = |parts: [Option<&CMatrix>; 4]| {
            let mut m = CMatrix::zeros(r1 + r2, c1 + c2);
            let offsets = [(0, 0), (0, c1), (r1, 0), (r1, c1)];
            for (p, (ro, co)) in parts.iter().zip(offsets) {
                if let Some(p) = p {
                    m.view_mut((ro, co), p.shape()).copy_from(*p);
                }
            }
            m
        };
        let blocks = [a11, a12, a21, a22];
        let mut out = CAffine::constant(place([
            Some(&a11.constant),
            Some(&a12.constant),
            Some(&a21.constant),
            Some(&a22.constant),
        ]));
        let mut keys: Vec<usize> = blocks.iter().flat_map(|b| b.terms.keys().copied()).collect();
        keys.sort_unstable();
        keys.dedup();
        for k in keys {
            let m = place([
                a11.terms.get(&k),
                a12.terms.get(&k),
                a21.terms.get(&k),
                a22.terms.get(&k),
            ]);
            out.terms.insert(k, m);
        }
        Ok(out)
    }

    /// `Re tr(·)` as a real affine form.
    pub fn trace_re(&self) -> AffineForm {
        let tr = |m: &CMatrix| m.diagonal().iter().map(|z| z.re).sum::<f64>();
        AffineForm {
            constant: tr(&self.constant),
            terms: self
                .terms
                .iter()
                .map(|(&k, a)| (k, tr(a)))
                .filter(|t| t.1 != 0.0)
                .collect(),
        }
    }

    /// Real and imaginary parts of every entry, column-major, as affine forms.
    /// Their Euclidean norm equals the Frobenius norm of the expression.
    pub fn real_entries(&self) -> Vec<AffineForm> {
        let (r, c) = self.shape();
        let mut out = Vec::with_capacity(2 * r * c);
        for j in 0..c {
            for i in 0..r {
                for part in 0..2 {
                    let pick = |z: Complex64| if part == 0 { z.re } else { z.im };
                    out.push(AffineForm {
                        constant: pick(self.constant[(i, j)]),
                        terms: self
                            .terms
                            .iter()
                            .map(|(&k, a)| (k, pick(a[(i, j)])))
                            .filter(|t| t.1 != 0.0)
                            .collect(),
                    });
                }
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> CMatrix {
        let mut m = self.constant.clone();
        for (&k, a) in &self.terms {
            m += a * Complex64::new(x[k], 0.0);
        }
        m
    }

    fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self {
            constant: f(&self.constant),
            terms: self.terms.iter().map(|(&k, a)| (k, f(a))).collect(),
        }
    }
}

fn shape_err(op: &str, a: (usize, usize), b: (usize, usize)) -> ProgramError {
    ProgramError::Shape(format!("{op}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

/// Real symmetric embedding `[[Re, −Im], [Im, Re]]` of a Hermitian
/// expression. The embedding is PSD exactly when the expression is.
pub fn embed_hermitian(expr: &CAffine) -> Result<SymAffine, ProgramError> {
    let (n, m) = expr.shape();
    if n != m {
        return Err(ProgramError::Shape(format!("LMI block is {n}x{m}")));
    }
    let check = |a: &CMatrix, what: &str| {
        let scale = a.iter().fold(1.0_f64, |s, z| s.max(z.norm()));
        if hermitian_defect(a) > 1e-10 * scale {
            Err(ProgramError::NotHermitian(what.to_string()))
        } else {
            Ok(())
        }
    };
    check(&expr.constant, "constant term")?;
    let mut out = SymAffine::new(2 * n);
    out.constant = real_embedding(&expr.constant);
    for (&k, a) in &expr.terms {
        check(a, &format!("coefficient of variable {k}"))?;
        out.add_term(k, &real_embedding(a))?;
    }
    Ok(out)
}

fn real_embedding(a: &CMatrix) -> DMatrix<f64> {
    let n = a.nrows();
    // Symmetrize exactly so tiny rounding asymmetry never trips the check.
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}
