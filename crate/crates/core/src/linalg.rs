//! Dense complex matrix primitives.
//!
//! Everything downstream works with `N×N` matrices of [`Complex64`] stored as
//! nalgebra [`DMatrix`]. Hermitian and skew-Hermitian structure is carried by
//! the [`Hermitian`] and [`SkewHermitian`] newtypes, which validate on
//! construction with a relative tolerance of `1e-10 · max(1, ‖M‖_F)`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance used for Hermiticity and skewness checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

/// Builds a complex matrix from real row slices.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Elementwise complex conjugate (no transpose).
pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

pub fn max_imag(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

pub(crate) fn structure_tol(m: &CMatrix) -> f64 {
    STRUCTURE_TOL * frobenius(m).max(1.0)
}

pub(crate) fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

pub(crate) fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), actual: b.nrows() });
    }
    Ok(())
}

/// `‖U†U − I‖_F`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    frobenius(&(u.adjoint() * u - identity(n)))
}

/// A Hermitian matrix, `M = M†` within tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::named(m, "matrix")
    }

    /// Like [`Hermitian::new`], naming the matrix in the error message.
    pub fn named(m: CMatrix, what: &str) -> Result<Self> {
        check_square(&m)?;
        let deviation = frobenius(&(&m - m.adjoint()));
        if deviation > structure_tol(&m) {
            return Err(Error::NotHermitian { what: what.to_string(), deviation });
        }
        Ok(Self::hermitize(m))
    }

    /// Projects onto the Hermitian part `(M + M†)/2` without validation.
    pub fn hermitize(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        Hermitian(h)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(from_real_rows(rows))
    }

    pub fn diag(values: &[f64]) -> Self {
        Hermitian(diag_real(values))
    }

    pub fn identity(n: usize) -> Self {
        Hermitian(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// `i·H`.
    pub fn times_i(&self) -> SkewHermitian {
        SkewHermitian(self.0.map(|z| z * I))
    }
}

impl AsRef<CMatrix> for Hermitian {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// A skew-Hermitian matrix, `M = −M†` within tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewHermitian(CMatrix);

impl SkewHermitian {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        let deviation = frobenius(&(&m + m.adjoint()));
        if deviation > structure_tol(&m) {
            return Err(Error::NotSkewHermitian(deviation));
        }
        Ok(Self::skew_part(m))
    }

    /// Projects onto `(M − M†)/2` without validation.
    pub fn skew_part(m: CMatrix) -> Self {
        let s = (&m - m.adjoint()).scale(0.5);
        SkewHermitian(s)
    }

    pub fn zeros(n: usize) -> Self {
        SkewHermitian(zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// `i·X`, which is Hermitian.
    pub fn times_i(&self) -> Hermitian {
        Hermitian(self.0.map(|z| z * I))
    }

    pub fn scale(&self, s: f64) -> Self {
        SkewHermitian(self.0.scale(s))
    }
}

impl AsRef<CMatrix> for SkewHermitian {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_same_dim(a, b)?;
    Ok(a * b - b * a)
}

/// Hilbert–Schmidt inner product `tr(A†B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
    check_same_dim(a, b)?;
    Ok(hs_inner_unchecked(a, b))
}

#[inline]
pub(crate) fn hs_inner_unchecked(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    frobenius(a)
}

/// `H − (tr H / N)·I`.
pub fn traceless_part(h: &Hermitian) -> Hermitian {
    let n = h.dim();
    let shift = trace(h.matrix()).re / n as f64;
    let mut m = h.matrix().clone();
    for k in 0..n {
        m[(k, k)] -= c(shift, 0.0);
    }
    Hermitian(m)
}

/// Spectral decomposition `H = V·diag(values)·V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    /// `V·diag(f(λ))·V†`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

const EIGEN_MAX_ITER: usize = 10_000;
const TIE_TOL: f64 = 1e-12;

/// Eigenvalues ascending; each eigenvector's first non-negligible component is
/// made real-positive, and ties are ordered lexicographically by eigenvector.
pub fn hermitian_eigensystem(h: &Hermitian) -> Result<Eigensystem> {
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("Hermitian eigensolver produced non-finite values".into()));
    }

    let mut columns: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|j| {
            let mut v: Vec<Complex64> = eig.eigenvectors.column(j).iter().copied().collect();
            fix_phase(&mut v);
            (eig.eigenvalues[j], v)
        })
        .collect();

    columns.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = columns.iter().map(|c| c.0.abs()).fold(1.0, f64::max);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && columns[end].0 - columns[end - 1].0 <= TIE_TOL * scale {
            end += 1;
        }
        columns[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
        start = end;
    }

    let values = columns.iter().map(|c| c.0).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| columns[j].1[i]);
    Ok(Eigensystem { values, vectors })
}

fn fix_phase(v: &mut [Complex64]) {
    let largest = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(pivot) = v.iter().find(|z| z.norm() > 1e-12 * largest.max(f64::MIN_POSITIVE)) {
        let phase = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// `exp(X)` for skew-Hermitian `X`, computed from the eigendecomposition of `iX`.
pub fn expm_skew(x: &SkewHermitian) -> Result<CMatrix> {
    Ok(SkewExp::new(x)?.exp())
}

/// Eigendecomposition of a skew-Hermitian `X = V·diag(−iλ)·V†`, from which both
/// `exp(X)` and its directional derivatives follow in closed form.
#[derive(Clone, Debug)]
pub struct SkewExp {
    eig: Eigensystem,
    /// Divided differences of `exp` at the eigenvalues of `X`.
    divided: CMatrix,
}

impl SkewExp {
    pub fn new(x: &SkewHermitian) -> Result<Self> {
        let eig = hermitian_eigensystem(&x.times_i())?;
        let lam = &eig.values;
        let n = lam.len();
        let divided = CMatrix::from_fn(n, n, |a, b| {
            let half_sum = 0.5 * (lam[a] + lam[b]);
            let half_diff = 0.5 * (lam[a] - lam[b]);
            Complex64::from_polar(sinc(half_diff), -half_sum)
        });
        Ok(SkewExp { eig, divided })
    }

    pub fn exp(&self) -> CMatrix {
        self.eig.apply(|lambda| Complex64::from_polar(1.0, -lambda))
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eig
    }

    /// `V†·M·V`.
    pub fn rotate_in(&self, m: &CMatrix) -> CMatrix {
        self.eig.vectors.adjoint() * m * &self.eig.vectors
    }

    /// Directional derivative `d/dt exp(X + tE)` at `t = 0`.
    pub fn derivative(&self, e: &CMatrix) -> CMatrix {
        let rotated = self.rotate_in(e).component_mul(&self.divided);
        &self.eig.vectors * rotated * self.eig.vectors.adjoint()
    }

    /// `tr(L · d/dt exp(X + tE))` given `left_rotated = V†·L·V`.
    pub fn derivative_trace(&self, left_rotated: &CMatrix, e: &CMatrix) -> Complex64 {
        let e_rot = self.rotate_in(e);
        let n = e_rot.nrows();
        let mut acc = c(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                acc += left_rotated[(b, a)] * self.divided[(a, b)] * e_rot[(a, b)];
            }
        }
        acc
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;

    pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    pub fn random_skew<R: Rng>(rng: &mut R, n: usize) -> SkewHermitian {
        SkewHermitian::skew_part(random_matrix(rng, n))
    }

    pub fn pauli_x() -> CMatrix {
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn pauli_z() -> CMatrix {
        diag_real(&[1.0, -1.0])
    }

    pub fn times_i(m: &CMatrix) -> CMatrix {
        m.map(|z| z * I)
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn three_level_drift() -> CMatrix {
        diag_real(&[-1.0, 0.0, 1.0])
    }

    fn three_level_control() -> CMatrix {
        from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]])
    }

    #[test]
    fn commutator_of_matrix_with_itself_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 4);
        assert_eq!(frobenius(&commutator(&a, &a).unwrap()), 0.0);
    }

    #[test]
    fn pauli_commutator() {
        let ix = times_i(&pauli_x());
        let iy = times_i(&pauli_y());
        let comm = commutator(&ix, &iy).unwrap();
        // [iσx, iσy] = −[σx, σy] = −2iσz
        let expected = times_i(&pauli_z()).scale(-2.0);
        assert_abs_diff_eq!(frobenius(&(&comm - expected)), 0.0, epsilon = 1e-15);
        assert!(SkewHermitian::new(comm).is_ok());
    }

    #[test]
    fn three_level_generator_commutator() {
        // Hand multiplication: [iH0', iH1] = −[H0', H1]; [H0', H1]_jk = (e_j − e_k)·H1_jk
        // with e = (−1, 0, 1) gives rows (0,−1,0), (1,0,−1), (0,1,0).
        let h0 = times_i(&three_level_drift());
        let h1 = times_i(&three_level_control());
        let comm = commutator(&h0, &h1).unwrap();
        let expected = from_real_rows(&[&[0.0, 1.0, 0.0], &[-1.0, 0.0, 1.0], &[0.0, -1.0, 0.0]]);
        assert_abs_diff_eq!(frobenius(&(&comm - &expected)), 0.0, epsilon = 1e-15);
        assert!(comm.diagonal().iter().all(|z| z.norm() == 0.0));
        assert!(SkewHermitian::new(comm).is_ok());
    }

    #[test]
    fn commutator_dimension_mismatch() {
        assert!(matches!(
            commutator(&identity(2), &identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(hs_inner(&identity(2), &identity(3)).is_err());
    }

    #[test]
    fn hs_inner_examples() {
        assert_eq!(hs_inner(&identity(3), &identity(3)).unwrap(), c(3.0, 0.0));
        let z = times_i(&pauli_z());
        let x = times_i(&pauli_x());
        assert_eq!(hs_inner(&z, &x).unwrap(), c(0.0, 0.0));
        let h1 = times_i(&three_level_control());
        assert_abs_diff_eq!(hs_inner(&h1, &h1).unwrap().re, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn traceless_part_examples() {
        let h = Hermitian::diag(&[0.0, 1.0, 2.0]);
        let t = traceless_part(&h);
        assert_abs_diff_eq!(frobenius(&(t.matrix() - three_level_drift())), 0.0, epsilon = 1e-15);
        let again = traceless_part(&t);
        assert_eq!(again, t);

        let rho = Hermitian::diag(&[0.35, 0.30, 0.20, 0.15]);
        let t = traceless_part(&rho);
        let expected = diag_real(&[0.10, 0.05, -0.05, -0.10]);
        assert_abs_diff_eq!(frobenius(&(t.matrix() - expected)), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace(t.matrix()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn expm_examples() {
        let zero = SkewHermitian::zeros(3);
        assert_abs_diff_eq!(frobenius(&(expm_skew(&zero).unwrap() - identity(3))), 0.0, epsilon = 1e-15);

        let x = SkewHermitian::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.0, PI),
            c(0.0, -PI),
        ])))
        .unwrap();
        let e = expm_skew(&x).unwrap();
        assert_abs_diff_eq!(frobenius(&(e + identity(2))), 0.0, epsilon = 1e-14);

        // exp(−iH0' t) at t = π/2
        let h0 = Hermitian::diag(&[-1.0, 0.0, 1.0]);
        let x = h0.times_i().scale(-PI / 2.0);
        let e = expm_skew(&x).unwrap();
        let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.0, 1.0),
            c(1.0, 0.0),
            c(0.0, -1.0),
        ]));
        assert_abs_diff_eq!(frobenius(&(e - expected)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eigensystem_examples() {
        let d = Hermitian::diag(&[3.0, -1.0, 2.0]);
        let eig = hermitian_eigensystem(&d).unwrap();
        assert_eq!(eig.values.len(), 3);
        for (v, e) in eig.values.iter().zip([-1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-14);
        }
        // permutation eigenvectors, phase fixed real-positive
        let expected = from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_abs_diff_eq!(frobenius(&(&eig.vectors - expected)), 0.0, epsilon = 1e-14);

        let rho0 = Hermitian::diag(&[0.35, 0.30, 0.20, 0.15]);
        let eig = hermitian_eigensystem(&rho0).unwrap();
        for (v, e) in eig.values.iter().zip([0.15, 0.20, 0.30, 0.35]) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-14);
        }

        let eig = hermitian_eigensystem(&Hermitian::new(pauli_x()).unwrap()).unwrap();
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_eigenvalues_are_ordered_deterministically() {
        let h = Hermitian::diag(&[1.0, 1.0, 0.0]);
        let a = hermitian_eigensystem(&h).unwrap();
        let b = hermitian_eigensystem(&h).unwrap();
        assert_eq!(a.vectors, b.vectors);
        assert_abs_diff_eq!(a.values[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn structure_validation_rejects_bad_input() {
        let m = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(Hermitian::new(m.clone()), Err(Error::NotHermitian { .. })));
        assert!(matches!(SkewHermitian::new(m), Err(Error::NotSkewHermitian(_))));
        let nan = from_real_rows(&[&[f64::NAN, 0.0], &[0.0, 0.0]]);
        assert!(matches!(Hermitian::new(nan), Err(Error::NonFinite)));
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(Hermitian::new(rect), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn exp_derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3, 5] {
            let x = random_skew(&mut rng, n);
            let e = random_skew(&mut rng, n);
            let d = SkewExp::new(&x).unwrap().derivative(e.matrix());
            let h = 1e-5;
            let plus = expm_skew(&SkewHermitian::skew_part(x.matrix() + e.matrix().scale(h))).unwrap();
            let minus = expm_skew(&SkewHermitian::skew_part(x.matrix() - e.matrix().scale(h))).unwrap();
            let fd = (plus - minus).scale(0.5 / h);
            assert!(frobenius(&(d - fd)) < 1e-8);
        }
    }

    #[test]
    fn exp_derivative_handles_degenerate_spectrum() {
        let x = SkewHermitian::zeros(3);
        let e = from_real_rows(&[&[0.0, 1.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        let d = SkewExp::new(&x).unwrap().derivative(&e);
        assert_abs_diff_eq!(frobenius(&(d - e)), 0.0, epsilon = 1e-14);
    }
}
