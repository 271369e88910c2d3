//! Dense complex linear algebra for small multi-qubit Hilbert spaces.
//!
//! Index convention: qubit 1 is the leftmost tensor factor and the most
//! significant bit of a computational-basis index.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for structural predicates (Hermitian, unit trace, unitary, PSD).
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// Tolerance for pure arithmetic identities.
pub const ARITH_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from rows of real-or-complex entries. Panics on ragged input;
    /// intended for literals.
    pub fn from_rows<T: Into<Complex64> + Copy>(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix literal");
            data.extend(row.iter().map(|&x| x.into()));
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Kronecker product with `self` as the most significant index block.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![ZERO; rows * cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.rows {
                    let out_row = (i * other.rows + j) * cols;
                    for l in 0..other.cols {
                        data[out_row + k * other.cols + l] = a * other[(j, l)];
                    }
                }
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn trace(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!("trace of a {}x{} matrix", self.rows, self.cols)));
        }
        Ok((0..self.rows).map(|i| self[(i, i)]).sum())
    }

    /// `tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix) -> Result<Complex64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "tr[AB] with A {}x{} and B {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = ZERO;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * other[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Traces out every subsystem not listed in `keep`. `dims` gives the
    /// subsystem dimensions, most significant first.
    pub fn partial_trace(&self, keep: &[usize], dims: &[usize]) -> Result<ComplexMatrix> {
        let total: usize = dims.iter().product();
        if !self.is_square() || total != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims {dims:?} do not match a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
            return Err(Error::DimensionMismatch(format!("kept subsystem {bad} out of range")));
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        let keep_dim: usize = keep_sorted.iter().map(|&k| dims[k]).product();

        // Split every full index into (kept index, traced index).
        let mut split = Vec::with_capacity(total);
        for full in 0..total {
            let mut rem = full;
            let mut digits = vec![0usize; dims.len()];
            for (pos, &d) in dims.iter().enumerate().rev() {
                digits[pos] = rem % d;
                rem /= d;
            }
            let (mut kept, mut traced) = (0usize, 0usize);
            for (pos, &d) in dims.iter().enumerate() {
                if keep_sorted.binary_search(&pos).is_ok() {
                    kept = kept * d + digits[pos];
                } else {
                    traced = traced * d + digits[pos];
                }
            }
            split.push((kept, traced));
        }
        let traced_dim = total / keep_dim;
        let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
        for (full, &(kept, traced)) in split.iter().enumerate() {
            groups[traced].push((full, kept));
        }

        let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
        for group in &groups {
            for &(fi, ki) in group {
                for &(fj, kj) in group {
                    out[(ki, kj)] += self[(fi, fj)];
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &ComplexMatrix, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn unitarity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let product = self.dagger().matmul(self).expect("square");
        product.max_abs_diff(&ComplexMatrix::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// Positive semidefiniteness via the Hermitian eigensolver.
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        eigh(self).map(|e| e.values.iter().all(|&v| v >= -tol)).unwrap_or(false)
    }

    /// Frobenius norm of the off-diagonal part.
    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    acc += self[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to a {}-vector",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let amps = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v.amplitudes[j]).sum())
            .collect();
        Ok(StateVector { amplitudes: amps })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Computational-basis state `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= ARITH_TOL
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self { amplitudes: self.amplitudes.iter().map(|z| z / n).collect() }
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        StateVector { amplitudes }
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conj(&self) -> StateVector {
        StateVector { amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect() }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|self⟩⟨self|`.
    pub fn density(&self) -> ComplexMatrix {
        let d = self.dim();
        ComplexMatrix::from_fn(d, d, |i, j| self.amplitudes[i] * self.amplitudes[j].conj())
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// `Re tr[rho · obs]` for a density matrix and a Hermitian observable.
pub fn hermitian_expectation(rho: &ComplexMatrix, obs: &ComplexMatrix) -> Result<f64> {
    let rho_err = rho.hermiticity_error();
    if rho_err > STRUCTURAL_TOL {
        return Err(Error::NotHermitian(rho_err));
    }
    let obs_err = obs.hermiticity_error();
    if obs_err > STRUCTURAL_TOL {
        return Err(Error::NotHermitian(obs_err));
    }
    let tr = rho.trace()?;
    if (tr - ONE).norm() > STRUCTURAL_TOL {
        return Err(Error::InvalidArgument(format!("density matrix has trace {tr}")));
    }
    let value = rho.trace_product(obs)?;
    if value.im.abs() > STRUCTURAL_TOL {
        return Err(Error::ImaginaryResidue(value.im.abs()));
    }
    Ok(value.re)
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues in descending
/// order, eigenvectors as the matching columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// Reassembles `V diag(values) V†` using the supplied eigenvalues.
    pub fn reassemble(&self, values: &[f64]) -> ComplexMatrix {
        let n = self.vectors.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in values.iter().enumerate() {
            if lambda == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * lambda;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi diagonalization. Intended for matrices up to 64x64.
pub fn eigh(m: &ComplexMatrix) -> Result<Eigh> {
    let err = m.hermiticity_error();
    if err > STRUCTURAL_TOL {
        return Err(Error::NotHermitian(err));
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if a.off_diagonal_norm() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let mag = g.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = g / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Real Jacobi rotation on the phase-aligned 2x2 block.
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J restricted to (p, q): [[c, s], [-s·conj(u), c·conj(u)]]
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;

                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * jpp + aiq * jqp;
                    a[(i, q)] = aip * jpq + aiq * jqq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = jpp.conj() * apj + jqp.conj() * aqj;
                    a[(q, j)] = jpq.conj() * apj + jqq.conj() * aqj;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * jpp + viq * jqp;
                    v[(i, q)] = vip * jpq + viq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(Eigh { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    fn arb_matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim)
            .prop_map(move |v| ComplexMatrix::from_vec(dim, dim, v.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap())
    }

    fn arb_density(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        arb_matrix(dim).prop_map(|g| {
            let m = &g * &g.dagger();
            let tr = m.trace().unwrap();
            m.scale(ONE / tr)
        })
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert!(i2.kron(&i2).approx_eq(&ComplexMatrix::identity(4), 0.0));
    }

    #[test]
    fn kron_x_z_matches_index_loop() {
        let (a, b) = (pauli_x(), pauli_z());
        let k = a.kron(&b);
        // index-loop oracle
        for i in 0..2 {
            for j in 0..2 {
                for kk in 0..2 {
                    for l in 0..2 {
                        assert_eq!(k[(2 * i + j, 2 * kk + l)], a[(i, kk)] * b[(j, l)]);
                    }
                }
            }
        }
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 2)] = ONE;
        expected[(1, 3)] = -ONE;
        expected[(2, 0)] = ONE;
        expected[(3, 1)] = -ONE;
        assert_eq!(k, expected);
    }

    #[test]
    fn trace_of_diag_kron() {
        let a = ComplexMatrix::diag(&[ONE, c(2.0, 0.0)]);
        let b = ComplexMatrix::diag(&[c(3.0, 0.0), c(4.0, 0.0)]);
        let t = a.kron(&b).trace().unwrap();
        assert!((t - c(21.0, 0.0)).norm() < ARITH_TOL);
    }

    #[test]
    fn partial_trace_of_maximally_mixed_pair() {
        let half = ComplexMatrix::identity(2).scale(c(0.5, 0.0));
        let rho = half.kron(&half);
        let reduced = rho.partial_trace(&[0], &[2, 2]).unwrap();
        assert!(reduced.approx_eq(&half, ARITH_TOL));
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(m.partial_trace(&[0], &[2, 3]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(m.partial_trace(&[2], &[2, 2]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn matmul_shape_error() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::DimensionMismatch(_))));
        assert!(ComplexMatrix::zeros(2, 3).trace().is_err());
    }

    #[test]
    fn expectation_examples() {
        let zero = StateVector::basis(2, 0).density();
        assert!((hermitian_expectation(&zero, &pauli_z()).unwrap() - 1.0).abs() < ARITH_TOL);

        let mixed = ComplexMatrix::identity(2).scale(c(0.5, 0.0));
        assert!(hermitian_expectation(&mixed, &pauli_x()).unwrap().abs() < ARITH_TOL);

        // |φ+⟩ = (|00⟩ + |11⟩)/√2; ⟨YY⟩ by direct 4x4 contraction.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let rho = bell.density();
        let yy = pauli_y().kron(&pauli_y());
        let mut oracle = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                oracle += rho[(i, j)] * yy[(j, i)];
            }
        }
        assert!((oracle.re + 1.0).abs() < ARITH_TOL);
        let value = hermitian_expectation(&rho, &yy).unwrap();
        assert!((value + 1.0).abs() < ARITH_TOL);
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let rho = StateVector::basis(2, 0).density();
        let mut obs = pauli_x();
        obs[(0, 1)] = c(2.0, 0.0);
        assert!(matches!(hermitian_expectation(&rho, &obs), Err(Error::NotHermitian(_))));
        let mut bad = rho.clone();
        bad[(0, 1)] = ONE;
        assert!(matches!(hermitian_expectation(&bad, &pauli_z()), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigh_on_pauli_y() {
        let e = eigh(&pauli_y()).unwrap();
        assert!((e.values[0] - 1.0).abs() < ARITH_TOL);
        assert!((e.values[1] + 1.0).abs() < ARITH_TOL);
        assert!(e.reassemble(&e.values).approx_eq(&pauli_y(), ARITH_TOL));
    }

    proptest! {
        #[test]
        fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(2), cc in arb_matrix(2)) {
            let left = a.kron(&b).kron(&cc);
            let right = a.kron(&b.kron(&cc));
            prop_assert!(left.approx_eq(&right, ARITH_TOL));
        }

        #[test]
        fn kron_trace_is_multiplicative(a in arb_matrix(2), b in arb_matrix(2)) {
            let t = a.kron(&b).trace().unwrap();
            let expected = a.trace().unwrap() * b.trace().unwrap();
            prop_assert!((t - expected).norm() < ARITH_TOL);
        }

        #[test]
        fn partial_trace_of_product(a in arb_matrix(2), b in arb_matrix(4)) {
            let reduced = a.kron(&b).partial_trace(&[0], &[2, 2, 2]).unwrap();
            let expected = a.scale(b.trace().unwrap());
            prop_assert!(reduced.approx_eq(&expected, ARITH_TOL));
        }

        #[test]
        fn dagger_is_involution(a in arb_matrix(3)) {
            prop_assert_eq!(a.dagger().dagger(), a);
        }

        #[test]
        fn expectation_is_linear(rho in arb_density(4), h1 in arb_matrix(4), h2 in arb_matrix(4), t in -2.0f64..2.0) {
            let herm = |m: &ComplexMatrix| (m + &m.dagger()).scale(c(0.5, 0.0));
            let (o1, o2) = (herm(&h1), herm(&h2));
            let combo = &o1 + &o2.scale(c(t, 0.0));
            let lhs = hermitian_expectation(&rho, &combo).unwrap();
            let rhs = hermitian_expectation(&rho, &o1).unwrap() + t * hermitian_expectation(&rho, &o2).unwrap();
            prop_assert!((lhs - rhs).abs() < ARITH_TOL);
        }

        #[test]
        fn eigh_reconstructs(h in arb_matrix(8)) {
            let m = (&h + &h.dagger()).scale(c(0.5, 0.0));
            let e = eigh(&m).unwrap();
            prop_assert!(e.reassemble(&e.values).approx_eq(&m, 1e-10));
            let vv = &e.vectors.dagger() * &e.vectors;
            prop_assert!(vv.approx_eq(&ComplexMatrix::identity(8), 1e-10));
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
