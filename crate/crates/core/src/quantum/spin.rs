use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{QuantumError, Result};

const HERMITIAN_TOL: f64 = 1e-12;

/// A state in the `2j+1`-dimensional spin space, basis ordered `m = j, j−1, …, −j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState(DVector<Complex64>);

/// A `(2j+1)×(2j+1)` matrix acting on [`SpinState`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator(DMatrix<Complex64>);

/// Cartesian spin components for a fixed `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOps {
    pub j: f64,
    pub x: SpinOperator,
    pub y: SpinOperator,
    pub z: SpinOperator,
}

impl SpinState {
    /// Normalized copy of `components`.
    pub fn new(components: Vec<Complex64>) -> Result<Self> {
        let v = DVector::from_vec(components);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuantumError::ZeroNorm);
        }
        Ok(Self(v / Complex64::new(norm, 0.0)))
    }

    pub fn from_real(components: &[f64]) -> Result<Self> {
        Self::new(components.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Basis state `|j, m⟩` with `m = j − index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &DVector<Complex64> {
        &self.0
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SpinState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(QuantumError::DimensionMismatch {
                op: self.dim(),
                state: other.dim(),
            });
        }
        Ok(self.0.dotc(&other.0))
    }
}

impl SpinOperator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        assert!(m.is_square(), "spin operators are square");
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn is_hermitian(&self) -> bool {
        (&self.0 - self.0.adjoint()).camax() <= HERMITIAN_TOL
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    pub fn apply(&self, s: &SpinState) -> Result<SpinState> {
        self.check(s)?;
        Ok(SpinState(&self.0 * &s.0))
    }

    /// `⟨f|A|i⟩`.
    pub fn matrix_element(&self, f: &SpinState, i: &SpinState) -> Result<Complex64> {
        self.check(f)?;
        self.check(i)?;
        Ok(f.0.dotc(&(&self.0 * &i.0)))
    }

    pub fn pow(&self, n: u32) -> Self {
        Self(self.0.pow(n))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &SpinOperator) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Eigenvalues in ascending order (Hermitian operators only).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Normalized eigenvector for `eigenvalue` (Hermitian operators only).
    pub fn eigenstate(&self, eigenvalue: f64) -> Result<SpinState> {
        let eig = self.0.clone().symmetric_eigen();
        let (idx, gap) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &e)| (k, (e - eigenvalue).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(QuantumError::NotAnEigenvalue(eigenvalue))?;
        if gap > 1e-9 {
            return Err(QuantumError::NotAnEigenvalue(eigenvalue));
        }
        SpinState::new(eig.eigenvectors.column(idx).iter().copied().collect())
    }

    fn check(&self, s: &SpinState) -> Result<()> {
        if self.dim() == s.dim() {
            Ok(())
        } else {
            Err(QuantumError::DimensionMismatch {
                op: self.dim(),
                state: s.dim(),
            })
        }
    }
}

impl Add for &SpinOperator {
    type Output = SpinOperator;
    fn add(self, rhs: &SpinOperator) -> SpinOperator {
        SpinOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &SpinOperator {
    type Output = SpinOperator;
    fn sub(self, rhs: &SpinOperator) -> SpinOperator {
        SpinOperator(&self.0 - &rhs.0)
    }
}

impl Mul for &SpinOperator {
    type Output = SpinOperator;
    fn mul(self, rhs: &SpinOperator) -> SpinOperator {
        SpinOperator(&self.0 * &rhs.0)
    }
}

impl Mul<f64> for &SpinOperator {
    type Output = SpinOperator;
    fn mul(self, rhs: f64) -> SpinOperator {
        SpinOperator(&self.0 * Complex64::new(rhs, 0.0))
    }
}

impl Mul<f64> for SpinOperator {
    type Output = SpinOperator;
    fn mul(self, rhs: f64) -> SpinOperator {
        &self * rhs
    }
}

/// `S_x, S_y, S_z` for spin `j` from the ladder operators
/// `S₊|j,m⟩ = √(j(j+1) − m(m+1))·|j,m+1⟩`, with ħ = 1.
pub fn spin_ops(j: f64) -> Result<SpinOps> {
    let two_j = 2.0 * j;
    if !(two_j >= 1.0) || two_j.fract() != 0.0 || two_j > 1e6 {
        return Err(QuantumError::InvalidSpin(j));
    }
    let dim = two_j as usize + 1;
    let m = |k: usize| j - k as f64;
    let c = |re: f64| Complex64::new(re, 0.0);

    let mut plus = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 1..dim {
        // row k−1 holds m+1 for the column with quantum number m = m(k)
        let mk = m(k);
        plus[(k - 1, k)] = c((j * (j + 1.0) - mk * (mk + 1.0)).sqrt());
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus) * c(0.5);
    let y = (&plus - &minus) * Complex64::new(0.0, -0.5);
    let z = DMatrix::from_diagonal(&DVector::from_fn(dim, |k, _| c(m(k))));
    Ok(SpinOps {
        j,
        x: SpinOperator(x),
        y: SpinOperator(y),
        z: SpinOperator(z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn max_diff(a: &SpinOperator, b: &SpinOperator) -> f64 {
        (a.matrix() - b.matrix()).camax()
    }

    #[test]
    fn spin_half_matrices() {
        let s = spin_ops(0.5).unwrap();
        let z = s.z.matrix();
        assert_eq!(z[(0, 0)].re, 0.5);
        assert_eq!(z[(1, 1)].re, -0.5);
        assert_eq!(s.x.matrix()[(0, 1)].re, 0.5);
        assert_eq!(s.y.matrix()[(0, 1)].im, -0.5);
    }

    #[test]
    fn spin_one_sz() {
        let s = spin_ops(1.0).unwrap();
        let diag: Vec<f64> = s.z.matrix().diagonal().iter().map(|c| c.re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn invalid_spin() {
        for j in [0.0, -0.5, 0.3, f64::NAN, f64::INFINITY] {
            assert!(spin_ops(j).is_err(), "j = {j}");
        }
    }

    #[test]
    fn tilted_operator_eigenvalues() {
        // Oracle: the characteristic polynomial of a traceless Hermitian 2×2,
        // λ² = −det, solved directly.
        let s = spin_ops(0.5).unwrap();
        let a = (&s.z + &s.x) * std::f64::consts::FRAC_1_SQRT_2;
        let m = a.matrix();
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let lambda = (-det.re).sqrt();
        assert_abs_diff_eq!(lambda, 0.5, epsilon = 1e-15);
        let ev = a.eigenvalues();
        assert_abs_diff_eq!(ev[0], -lambda, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], lambda, epsilon = 1e-12);
    }

    #[test]
    fn eigenstates_satisfy_the_eigen_equation() {
        let s = spin_ops(1.5).unwrap();
        for m in [1.5, 0.5, -0.5, -1.5] {
            let v = s.x.eigenstate(m).unwrap();
            let av = s.x.apply(&v).unwrap();
            let diff = (av.components() - v.components() * Complex64::new(m, 0.0)).camax();
            assert!(diff < 1e-12);
        }
        assert_eq!(s.x.eigenstate(0.7), Err(QuantumError::NotAnEigenvalue(0.7)));
    }

    #[test]
    fn dimension_mismatch() {
        let s = spin_ops(1.0).unwrap();
        let v = SpinState::basis(2, 0);
        assert!(matches!(
            s.z.apply(&v),
            Err(QuantumError::DimensionMismatch { op: 3, state: 2 })
        ));
    }

    proptest! {
        #[test]
        fn angular_momentum_algebra(two_j in 1usize..=4) {
            let j = two_j as f64 / 2.0;
            let s = spin_ops(j).unwrap();
            let i = Complex64::new(0.0, 1.0);
            for (a, b, c) in [(&s.x, &s.y, &s.z), (&s.y, &s.z, &s.x), (&s.z, &s.x, &s.y)] {
                prop_assert!(a.is_hermitian());
                prop_assert!(max_diff(&a.commutator(b), &c.scaled(i)) < 1e-12);
            }
            // S² = j(j+1)·1
            let s2 = &(&(&s.x * &s.x) + &(&s.y * &s.y)) + &(&s.z * &s.z);
            let expected = &SpinOperator::identity(two_j + 1) * (j * (j + 1.0));
            prop_assert!(max_diff(&s2, &expected) < 1e-12);
            let spectrum: Vec<f64> = (0..=two_j).map(|k| -j + k as f64).collect();
            for op in [&s.x, &s.y, &s.z] {
                for (e, m) in op.eigenvalues().iter().zip(&spectrum) {
                    prop_assert!((e - m).abs() < 1e-12);
                }
            }
        }
    }
}
