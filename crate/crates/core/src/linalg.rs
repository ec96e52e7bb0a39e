//! Small dense linear algebra over an abstract field.
//!
//! The same elimination code runs over [`Rational`] (exact answers) and `f64`
//! (fast screening inside the exhaustive searches).

use std::fmt::Debug;

use crate::rational::Rational;

/// Field operations needed by the elimination routines.
pub trait Scalar: Clone + PartialEq + Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    /// Rough size, used for pivot choice and tolerances.
    fn magnitude(&self) -> f64;
    /// Zero for exact types; `|x| <= 1e-9 * scale` for floats.
    fn is_negligible(&self, scale: f64) -> bool;
    fn is_exact_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    #[inline]
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    #[inline]
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    #[inline]
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    #[inline]
    fn is_negligible(&self, scale: f64) -> bool {
        self.abs() <= 1e-9 * scale.max(1.0)
    }
    #[inline]
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }
    fn is_negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
    fn is_positive(&self) -> bool {
        Rational::is_positive(self)
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: F) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn mul_matrix(&self, other: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::<F>::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_exact_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j).add(&a.mul(other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix<F> {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(F::zero(), |acc, (a, b)| acc.add(&a.mul(b)))).collect()
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

/// Quadratic forms `c' M⁻ c` for a symmetric positive semidefinite `M`.
///
/// `a` holds `M` row-major (`n × n`) and is destroyed. `rhs` holds one right-hand side per
/// `n`-length chunk and is destroyed too. `out[k]` is `None` when the k-th vector is not in
/// the column space of `M`; otherwise it is the (g-inverse independent) quadratic form.
///
/// Symmetric pivoting on the largest remaining diagonal: for a PSD matrix a zero
/// diagonal forces a zero row, so the elimination stops once every remaining diagonal
/// entry vanishes, and consistency reduces to the leftover right-hand side being zero.
pub fn psd_quadratic_forms_in_place<F: Scalar>(
    a: &mut [F],
    n: usize,
    rhs: &mut [F],
    out: &mut [Option<F>],
    pivoted: &mut [bool],
) {
    let k = out.len();
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(rhs.len(), n * k);
    let scale = (0..n).map(|i| a[i * n + i].magnitude()).fold(0.0, f64::max);
    pivoted[..n].fill(false);
    out.fill(Some(F::zero()));

    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if pivoted[i] {
                continue;
            }
            let d = &a[i * n + i];
            if d.is_negligible(scale) {
                continue;
            }
            let m = d.magnitude();
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((i, m));
            }
        }
        let Some((p, _)) = best else { break };
        pivoted[p] = true;
        let pivot = a[p * n + p].clone();

        for (r, total) in out.iter_mut().enumerate() {
            let bp = &rhs[r * n + p];
            if !bp.is_exact_zero() {
                let t = total.take().unwrap_or_else(F::zero);
                *total = Some(t.add(&bp.mul(bp).div(&pivot)));
            }
        }
        for i in 0..n {
            if pivoted[i] {
                continue;
            }
            let f = a[i * n + p].div(&pivot);
            if f.is_exact_zero() {
                continue;
            }
            for r in 0..k {
                let bp = rhs[r * n + p].clone();
                if !bp.is_exact_zero() {
                    rhs[r * n + i] = rhs[r * n + i].sub(&f.mul(&bp));
                }
            }
            for j in 0..n {
                if pivoted[j] {
                    continue;
                }
                let v = a[i * n + j].sub(&f.mul(&a[p * n + j]));
                a[i * n + j] = v;
            }
        }
    }

    let rhs_scale = scale.max(1.0);
    for (r, slot) in out.iter_mut().enumerate() {
        let consistent = (0..n).filter(|&i| !pivoted[i]).all(|i| rhs[r * n + i].is_negligible(rhs_scale));
        if !consistent {
            *slot = None;
        }
    }
}

/// Allocating wrapper around [`psd_quadratic_forms_in_place`].
pub fn psd_quadratic_forms<F: Scalar>(m: &Matrix<F>, vectors: &[Vec<F>]) -> Vec<Option<F>> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.data.clone();
    let mut rhs: Vec<F> = vectors
        .iter()
        .flat_map(|v| {
            assert_eq!(v.len(), n);
            v.iter().cloned()
        })
        .collect();
    let mut out = vec![None; vectors.len()];
    let mut pivoted = vec![false; n];
    psd_quadratic_forms_in_place(&mut a, n, &mut rhs, &mut out, &mut pivoted);
    out
}

/// True when the symmetric matrix admits an LDL' factorization with every pivot positive.
pub fn is_positive_definite<F: Scalar>(m: &Matrix<F>) -> bool {
    if !m.is_symmetric() {
        return false;
    }
    let n = m.rows;
    let scale = (0..n).map(|i| m.get(i, i).magnitude()).fold(0.0, f64::max);
    let mut a = m.data.clone();
    for p in 0..n {
        let pivot = a[p * n + p].clone();
        if !pivot.is_positive() || pivot.is_negligible(scale) {
            return false;
        }
        for i in p + 1..n {
            let f = a[i * n + p].div(&pivot);
            for j in p + 1..n {
                a[i * n + j] = a[i * n + j].sub(&f.mul(&a[p * n + j]));
            }
        }
    }
    true
}

/// Inverse by Gauss-Jordan elimination with partial pivoting, or `None` if singular.
pub fn invert<F: Scalar>(m: &Matrix<F>) -> Option<Matrix<F>> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let scale = m.data.iter().map(Scalar::magnitude).fold(0.0, f64::max);
    let mut a = m.data.clone();
    let mut inv = Matrix::<F>::identity(n).data;
    for col in 0..n {
        let (p, _) = (col..n)
            .map(|r| (r, a[r * n + col].magnitude()))
            .filter(|(r, _)| !a[r * n + col].is_negligible(scale))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if p != col {
            for j in 0..n {
                a.swap(p * n + j, col * n + j);
                inv.swap(p * n + j, col * n + j);
            }
        }
        let pivot = a[col * n + col].clone();
        for j in 0..n {
            a[col * n + j] = a[col * n + j].div(&pivot);
            inv[col * n + j] = inv[col * n + j].div(&pivot);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col].clone();
            if f.is_exact_zero() {
                continue;
            }
            for j in 0..n {
                a[r * n + j] = a[r * n + j].sub(&f.mul(&a[col * n + j]));
                inv[r * n + j] = inv[r * n + j].sub(&f.mul(&inv[col * n + j]));
            }
        }
    }
    Some(Matrix { rows: n, cols: n, data: inv })
}
