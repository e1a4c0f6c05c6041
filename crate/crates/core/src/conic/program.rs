use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::ProgramError;

/// Real affine scalar `constant + Σ coef·x[var]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineForm {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineForm {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            terms: Vec::new(),
        }
    }

    pub fn var(index: usize) -> Self {
        Self::term(index, 1.0)
    }

    pub fn term(index: usize, coef: f64) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(index, coef)],
        }
    }

    pub fn plus(mut self, other: &AffineForm) -> Self {
        self.constant += other.constant;
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn minus(self, other: &AffineForm) -> Self {
        self.plus(&other.clone().scaled(-1.0))
    }

    pub fn plus_const(mut self, value: f64) -> Self {
        self.constant += value;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.constant *= factor;
        for t in &mut self.terms {
            t.1 *= factor;
        }
        self
    }

    /// Merges repeated variables and drops exact zeros.
    pub fn compact(&self) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for &(i, v) in &self.terms {
            *acc.entry(i).or_insert(0.0) += v;
        }
        Self {
            constant: self.constant,
            terms: acc.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, v)| v * x[i]).sum::<f64>()
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }
}

/// `‖tail‖₂ ≤ head`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub head: AffineForm,
    pub tail: Vec<AffineForm>,
}

impl SocConstraint {
    pub fn new(head: AffineForm, tail: Vec<AffineForm>) -> Self {
        Self { head, tail }
    }

    /// Rotated cone `‖u‖² ≤ v·w` with `v, w ≥ 0`, written as
    /// `‖(2u, v − w)‖ ≤ v + w`.
    pub fn rotated(v: &AffineForm, w: &AffineForm, u: Vec<AffineForm>) -> Self {
        let mut tail: Vec<AffineForm> = u.into_iter().map(|f| f.scaled(2.0)).collect();
        tail.push(v.clone().minus(w));
        Self {
            head: v.clone().plus(w),
            tail,
        }
    }

    /// Slack `head − ‖tail‖` at `x`.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let n: f64 = self.tail.iter().map(|f| f.eval(x).powi(2)).sum::<f64>().sqrt();
        self.head.eval(x) - n
    }
}

/// Real symmetric affine matrix `C + Σ x_v A_v`, required PSD.
///
/// Coefficients are kept as lower-triangle triplets `(var, row, col, value)`
/// with `row ≥ col`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymAffine {
    pub dim: usize,
    pub constant: DMatrix<f64>,
    pub terms: Vec<(usize, usize, usize, f64)>,
}

impl SymAffine {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constant: DMatrix::zeros(dim, dim),
            terms: Vec::new(),
        }
    }

    pub fn with_constant(mut self, c: DMatrix<f64>) -> Result<Self, ProgramError> {
        check_sym(&c, self.dim)?;
        self.constant = c;
        Ok(self)
    }

    /// Adds `x[var]·coef`; `coef` must be symmetric.
    pub fn add_term(&mut self, var: usize, coef: &DMatrix<f64>) -> Result<(), ProgramError> {
        check_sym(coef, self.dim)?;
        for col in 0..self.dim {
            for row in col..self.dim {
                let v = coef[(row, col)];
                if v != 0.0 {
                    self.terms.push((var, row, col, v));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for &(v, r, c, a) in &self.terms {
            m[(r, c)] += a * x[v];
            if r != c {
                m[(c, r)] += a * x[v];
            }
        }
        m
    }

    /// Smallest eigenvalue of the expression at `x`.
    pub fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        let m = self.eval(x);
        nalgebra::SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }
}

fn check_sym(m: &DMatrix<f64>, dim: usize) -> Result<(), ProgramError> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(ProgramError::Shape(format!(
            "expected {dim}x{dim}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    for i in 0..dim {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(ProgramError::NotHermitian(format!(
                    "entries ({i},{j}) and ({j},{i}) differ"
                )));
            }
        }
    }
    Ok(())
}

/// Minimize `objective·x` subject to affine nonnegativity, second-order cone,
/// PSD and equality constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub var_count: usize,
    pub objective: Vec<f64>,
    pub nonneg: Vec<AffineForm>,
    pub soc: Vec<SocConstraint>,
    pub psd: Vec<SymAffine>,
    pub eq: Vec<AffineForm>,
}

impl ConicProgram {
    pub fn new(var_count: usize) -> Self {
        Self {
            var_count,
            objective: vec![0.0; var_count],
            nonneg: Vec::new(),
            soc: Vec::new(),
            psd: Vec::new(),
            eq: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    /// `form ≥ 0`.
    pub fn add_nonneg(&mut self, form: AffineForm) {
        self.nonneg.push(form);
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, lhs: &AffineForm, rhs: &AffineForm) {
        self.nonneg.push(rhs.clone().minus(lhs));
    }

    pub fn add_soc(&mut self, c: SocConstraint) {
        self.soc.push(c);
    }

    pub fn add_psd(&mut self, block: SymAffine) {
        self.psd.push(block);
    }

    /// `form = 0`.
    pub fn add_eq(&mut self, form: AffineForm) {
        self.eq.push(form);
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        if self.var_count == 0 {
            return Err(ProgramError::Empty);
        }
        if self.objective.len() != self.var_count {
            return Err(ProgramError::Shape(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.var_count
            )));
        }
        let max_var = self
            .nonneg
            .iter()
            .chain(&self.eq)
            .filter_map(AffineForm::max_var)
            .chain(
                self.soc
                    .iter()
                    .flat_map(|s| std::iter::once(&s.head).chain(&s.tail))
                    .filter_map(AffineForm::max_var),
            )
            .chain(self.psd.iter().filter_map(SymAffine::max_var))
            .max();
        if let Some(m) = max_var {
            if m >= self.var_count {
                return Err(ProgramError::UnknownVariable {
                    index: m,
                    var_count: self.var_count,
                });
            }
        }
        for b in &self.psd {
            if b.dim == 0 {
                return Err(ProgramError::Shape("PSD block of dimension 0".into()));
            }
        }
        Ok(())
    }
}
