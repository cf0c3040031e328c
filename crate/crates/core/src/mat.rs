//! Dense complex matrix layer.
//!
//! Thin wrappers over LAPACK (via `ndarray-linalg`) plus the handful of
//! helpers the rest of the crate leans on: Hermitian eigensolves with
//! validated input, rank-revealing null spaces, the unitary exponential
//! `e^{i·s}`, Kronecker products, and seeded random matrices.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Norm, SVD, UPLO};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

/// Dense complex matrix, the working currency of the crate.
pub type CMat = Array2<C64>;

pub fn czeros(rows: usize, cols: usize) -> CMat {
    Array2::zeros((rows, cols))
}

pub fn eye(n: usize) -> CMat {
    Array2::eye(n)
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.norm_l2()
}

/// Hilbert-Schmidt inner product `Tr(a†·b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

/// Kronecker product with the row-major convention
/// `(a ⊗ b)[i·p + s, j·q + t] = a[i,j] · b[s,t]` for `b` of shape `p×q`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = czeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.assign(&b.mapv(|z| aij * z));
        }
    }
    out
}

/// Relative deviation from Hermitian symmetry, `‖a − a†‖_F / max(1, ‖a‖_F)`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let diff = a - &dagger(a);
    fro_norm(&diff) / f64::max(1.0, fro_norm(a))
}

fn ensure_hermitian(a: &CMat, rtol: f64) -> Result<()> {
    let defect = hermitian_defect(a);
    if defect > rtol {
        return Err(Error::NotHermitian {
            asymmetry: defect,
            tolerance: rtol,
        });
    }
    Ok(())
}

fn ensure_square(a: &CMat) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {r}×{c}"
        )));
    }
    if r == 0 {
        return Err(Error::EmptyInput("zero-dimensional matrix"));
    }
    Ok(r)
}

/// Eigendecomposition of a Hermitian matrix: `a = W·diag(λ)·W†` with real
/// `λ` in ascending order and orthonormal eigenvector columns `W`.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Array1<f64>,
    pub vectors: CMat,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Largest eigenvalue magnitude, i.e. the operator norm of the source.
    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| f64::max(m, v.abs()))
    }

    pub fn reconstruct(&self) -> CMat {
        let scaled = scale_columns(&self.vectors, |j| C64::new(self.values[j], 0.0));
        scaled.dot(&dagger(&self.vectors))
    }
}

fn scale_columns(m: &CMat, f: impl Fn(usize) -> C64) -> CMat {
    let mut out = m.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let s = f(j);
        col.mapv_inplace(|z| z * s);
    }
    out
}

/// Hermitian eigendecomposition. Validates symmetry within
/// [`tol::HERMITIAN_INPUT`] relative tolerance, then symmetrizes before the
/// LAPACK call so the result is exact for the nearest Hermitian matrix.
pub fn herm_eig(a: &CMat) -> Result<HermEig> {
    ensure_square(a)?;
    ensure_hermitian(a, tol::HERMITIAN_INPUT)?;
    let h = (a + &dagger(a)).mapv(|z| 0.5 * z);
    let (values, vectors) = h.eigh(UPLO::Lower)?;
    // Depending on the memory layout handed to LAPACK, the backend may solve
    // the transposed (conjugate) problem; pick the orientation that actually
    // satisfies A·W = W·diag(λ).
    let pick = |w: &CMat| -> f64 {
        let aw = h.dot(w);
        let wl = scale_columns(w, |j| C64::new(values[j], 0.0));
        fro_norm(&(aw - wl))
    };
    let direct = pick(&vectors);
    let conjugated = vectors.mapv(|z| z.conj());
    let flipped = pick(&conjugated);
    let (vectors, residual) = if flipped < direct {
        (conjugated, flipped)
    } else {
        (vectors, direct)
    };
    let scale = f64::max(1.0, fro_norm(&h));
    if residual > 1e-10 * scale {
        return Err(Error::NumericalFailure(format!(
            "eigendecomposition residual {residual:.3e} exceeds {:.3e}",
            1e-10 * scale
        )));
    }
    Ok(HermEig { values, vectors })
}

/// Unitary exponential `e^{i·s}` of a Hermitian matrix.
pub fn herm_expm(s: &CMat) -> Result<CMat> {
    let eig = herm_eig(s)?;
    let phases = scale_columns(&eig.vectors, |j| {
        let lam = eig.values[j];
        C64::new(lam.cos(), lam.sin())
    });
    Ok(phases.dot(&dagger(&eig.vectors)))
}

/// Orthonormal basis of `{x : a·x = 0}` as matrix columns, with singular
/// values at or below `τ_null = factor · max(rows, cols) · σ_max` treated as
/// zero. Returns a matrix with zero columns when the null space is trivial.
pub fn nullspace(a: &CMat) -> Result<CMat> {
    nullspace_with(a, tol::NULLSPACE_FACTOR)
}

pub fn nullspace_with(a: &CMat, factor: f64) -> Result<CMat> {
    let (rows, cols) = a.dim();
    if cols == 0 {
        return Ok(czeros(0, 0));
    }
    if rows == 0 {
        return Ok(eye(cols));
    }
    // Very tall systems: the Gram matrix route costs O(rows·cols²) instead of
    // the SVD's O(rows²·cols) and keeps the same threshold semantics since
    // eigenvalues of a†a are squared singular values.
    if rows >= 4 * cols && rows > 64 {
        let g = dagger(a).dot(a);
        let eig = herm_eig(&g)?;
        let sig_max = eig.values[cols - 1].max(0.0).sqrt();
        if sig_max == 0.0 {
            return Ok(eye(cols));
        }
        let tau = factor * (rows.max(cols) as f64) * sig_max;
        let k = eig
            .values
            .iter()
            .take_while(|&&l| l.max(0.0).sqrt() <= tau)
            .count();
        return Ok(eig.vectors.slice(ndarray::s![.., ..k]).to_owned());
    }
    let (_, sigmas, vt) = a.svd(false, true)?;
    let vt = vt.expect("requested right singular vectors");
    let sig_max = if sigmas.is_empty() { 0.0 } else { sigmas[0] };
    if sig_max == 0.0 {
        return Ok(eye(cols));
    }
    let tau = factor * (rows.max(cols) as f64) * sig_max;
    let rank = sigmas.iter().take_while(|&&s| s > tau).count();
    // Rows of vt beyond the rank span the kernel; conjugate into columns.
    let mut out = czeros(cols, cols - rank);
    for (i, row) in vt.rows().into_iter().enumerate().skip(rank) {
        for (r, z) in row.iter().enumerate() {
            out[[r, i - rank]] = z.conj();
        }
    }
    Ok(out)
}

/// Random Hermitian matrix with entries of order one (uniform real diagonal,
/// uniform complex upper triangle mirrored down).
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
    let mut m = czeros(n, n);
    for i in 0..n {
        m[[i, i]] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in (i + 1)..n {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
        }
    }
    m
}

/// Haar-ish random unitary: QR of a square matrix with uniform complex
/// entries. Deterministic for a given generator state.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Result<CMat> {
    use ndarray_linalg::QR;
    let mut m = czeros(n, n);
    for z in m.iter_mut() {
        *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let (q, r) = m.qr()?;
    // Fix the column phases so the factorization is unique (R diagonal > 0).
    Ok(scale_columns(&q, |j| {
        let d = r[[j, j]];
        if d.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            d / d.norm()
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> CMat {
        ndarray::array![
            [C64::new(0., 0.), C64::new(1., 0.)],
            [C64::new(1., 0.), C64::new(0., 0.)]
        ]
    }

    /// Scaled Taylor series for e^{i·s}, an oracle independent of LAPACK.
    fn expm_taylor(s: &CMat) -> CMat {
        let n = s.nrows();
        let norm = fro_norm(s);
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let scaled = s.mapv(|z| C64::new(0.0, 1.0) * z / C64::new(2f64.powi(squarings as i32), 0.0));
        let mut term = eye(n);
        let mut sum = eye(n);
        for k in 1..=24 {
            term = term.dot(&scaled).mapv(|z| z / C64::new(k as f64, 0.0));
            sum = sum + &term;
        }
        for _ in 0..squarings {
            sum = sum.dot(&sum);
        }
        sum
    }

    #[test]
    fn herm_eig_pauli_x() {
        let eig = herm_eig(&pauli_x()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
        assert!(fro_norm(&(eig.reconstruct() - pauli_x())) < 1e-12);
    }

    #[test]
    fn herm_eig_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 7, 16, 40] {
            let a = random_hermitian(n, &mut rng);
            let eig = herm_eig(&a).unwrap();
            let scale = f64::max(1.0, fro_norm(&a));
            let res = fro_norm(&(eig.reconstruct() - &a));
            assert!(res <= 1e-10 * scale, "n={n} residual {res:.3e} scale {scale:.3e}");
            let gram = dagger(&eig.vectors).dot(&eig.vectors);
            assert!(fro_norm(&(gram - eye(n))) <= 1e-10 * n as f64);
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1], "eigenvalues must ascend");
            }
        }
    }

    #[test]
    fn herm_eig_rejects_asymmetric() {
        let mut a = pauli_x();
        a[[0, 1]] = C64::new(1.0, 0.5);
        match herm_eig(&a) {
            Err(Error::NotHermitian { .. }) => {}
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn herm_eig_rejects_non_square() {
        let a = czeros(2, 3);
        assert!(matches!(herm_eig(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = pauli_x();
        let got = herm_expm(&x).unwrap();
        // e^{iX} = cos(1)·I + i·sin(1)·X
        let want = eye(2).mapv(|z| z * C64::new(1f64.cos(), 0.0))
            + x.mapv(|z| z * C64::new(0.0, 1f64.sin()));
        assert!(fro_norm(&(got.clone() - want)) < 1e-14);
        assert!(fro_norm(&(got - expm_taylor(&x))) < 1e-12);

        for n in [3usize, 5, 12] {
            let s = random_hermitian(n, &mut rng);
            let u = herm_expm(&s).unwrap();
            assert!(fro_norm(&(u.clone() - expm_taylor(&s))) <= 1e-10 * n as f64);
            let gram = dagger(&u).dot(&u);
            assert!(fro_norm(&(gram - eye(n))) <= 1e-10 * n as f64);
            let inv = herm_expm(&s.mapv(|z| -z)).unwrap();
            assert!(fro_norm(&(u.dot(&inv) - eye(n))) <= 1e-10 * n as f64);
        }
    }

    #[test]
    fn nullspace_known_rank_one() {
        let a = ndarray::array![
            [C64::new(1., 0.), C64::new(0., 0.)],
            [C64::new(0., 0.), C64::new(0., 0.)]
        ];
        let n = nullspace(&a).unwrap();
        assert_eq!(n.dim(), (2, 1));
        assert!((n[[1, 0]].norm() - 1.0).abs() < 1e-14);
        assert!(n[[0, 0]].norm() < 1e-14);
    }

    #[test]
    fn nullspace_random_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for (rows, cols, rank) in [(6usize, 9usize, 4usize), (10, 7, 3), (5, 5, 2)] {
            let mut b = czeros(rows, rank);
            let mut c = czeros(rank, cols);
            for z in b.iter_mut().chain(c.iter_mut()) {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let a = b.dot(&c);
            let n = nullspace(&a).unwrap();
            assert_eq!(n.ncols(), cols - rank);
            assert!(fro_norm(&a.dot(&n)) <= 1e-8 * fro_norm(&a));
            let gram = dagger(&n).dot(&n);
            assert!(fro_norm(&(gram - eye(cols - rank))) <= 1e-10);
        }
    }

    #[test]
    fn nullspace_tall_gram_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (rows, cols, rank) = (520usize, 12usize, 5usize);
        let mut b = czeros(rows, rank);
        let mut c = czeros(rank, cols);
        for z in b.iter_mut().chain(c.iter_mut()) {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let a = b.dot(&c);
        let n = nullspace(&a).unwrap();
        assert_eq!(n.ncols(), cols - rank);
        assert!(fro_norm(&a.dot(&n)) <= 1e-8 * fro_norm(&a));
        let gram = dagger(&n).dot(&n);
        assert!(fro_norm(&(gram - eye(cols - rank))) <= 1e-10);
    }

    #[test]
    fn nullspace_extremes() {
        assert_eq!(nullspace(&czeros(3, 3)).unwrap().ncols(), 3);
        let full = eye(4);
        assert_eq!(nullspace(&full).unwrap().ncols(), 0);
    }

    #[test]
    fn kron_hand_values() {
        let a = ndarray::array![
            [C64::new(1., 0.), C64::new(2., 0.)],
            [C64::new(0., 0.), C64::new(1., 0.)]
        ];
        let b = pauli_x();
        let k = kron(&a, &b);
        assert_eq!(k.dim(), (4, 4));
        assert_eq!(k[[0, 1]], C64::new(1., 0.));
        assert_eq!(k[[0, 3]], C64::new(2., 0.));
        assert_eq!(k[[1, 2]], C64::new(2., 0.));
        assert_eq!(k[[2, 3]], C64::new(1., 0.));
        assert_eq!(k[[2, 0]], C64::new(0., 0.));
        // Mixed-product identity on random inputs.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_hermitian(2, &mut rng);
        let q = random_hermitian(3, &mut rng);
        let r = random_hermitian(2, &mut rng);
        let s = random_hermitian(3, &mut rng);
        let lhs = kron(&p, &q).dot(&kron(&r, &s));
        let rhs = kron(&p.dot(&r), &q.dot(&s));
        assert!(fro_norm(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary_and_deterministic() {
        let u1 = random_unitary(6, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let u2 = random_unitary(6, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(u1, u2);
        assert!(fro_norm(&(dagger(&u1).dot(&u1) - eye(6))) <= 1e-10 * 6.0);
    }

    #[test]
    fn hs_inner_is_trace_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(4, &mut rng);
        let b = random_hermitian(4, &mut rng);
        let direct = dagger(&a).dot(&b).diag().sum();
        assert!((hs_inner(&a, &b) - direct).norm() < 1e-12);
    }
}
