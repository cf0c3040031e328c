//! Matrix *-algebras presented by Hermitian generating sets.
//!
//! A channel's Kraus operators are first replaced by Hermitian images
//! (`a + a†` and `i(a − a†)`), which generate the same algebra. From such a
//! set this module draws seeded generic elements, computes an orthonormal
//! basis of the commutant `{B : [B, A_k] = 0 ∀k}`, and provides a
//! brute-force closure oracle for the algebra's dimension.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, s};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::{self, C64, CMat};
use crate::seed::sub_seed;
use crate::tol;

/// Sampling depth for [`GeneratorSet::random_element`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleDepth {
    /// Random real combination of the generators.
    Linear,
    /// Adds symmetrized quadratic words; reaches generic elements when the
    /// linear span of the generators is a proper subspace of the algebra.
    Quadratic,
}

/// Hermitian generating set of a matrix *-algebra.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    dim: usize,
    gens: Vec<CMat>,
    label: String,
}

impl GeneratorSet {
    /// Wraps an already-Hermitian list of generators.
    pub fn new(gens: Vec<CMat>, label: impl Into<String>) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::EmptyInput("generator set"));
        }
        let dim = gens[0].nrows();
        for (k, g) in gens.iter().enumerate() {
            if g.dim() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "generator {k} is {}×{}, expected {dim}×{dim}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            let defect = mat::hermitian_defect(g);
            if defect > tol::HERMITIAN_INPUT {
                return Err(Error::NotHermitian {
                    asymmetry: defect,
                    tolerance: tol::HERMITIAN_INPUT,
                });
            }
        }
        Ok(Self {
            dim,
            gens,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn gens(&self) -> &[CMat] {
        &self.gens
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Seeded random Hermitian element of the algebra: a uniform-[−1,1]
    /// combination of the generators, plus symmetrized quadratic words at
    /// [`SampleDepth::Quadratic`]. Bit-identical for equal seeds.
    pub fn random_element(&self, seed: u64, depth: SampleDepth) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = mat::czeros(self.dim, self.dim);
        for g in &self.gens {
            let alpha = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            a.scaled_add(alpha, g);
        }
        if depth == SampleDepth::Quadratic {
            for j in 0..self.gens.len() {
                for l in j..self.gens.len() {
                    let beta = C64::new(0.5 * rng.gen_range(-1.0..1.0), 0.0);
                    let jl = self.gens[j].dot(&self.gens[l]);
                    let lj = self.gens[l].dot(&self.gens[j]);
                    a.scaled_add(beta, &(jl + lj));
                }
            }
        }
        a
    }
}

/// Builds a [`GeneratorSet`] from arbitrary square matrices. Non-Hermitian
/// inputs contribute the pair `a + a†`, `i(a − a†)`; Hermitian inputs pass
/// through; near-zero images are dropped; the identity is appended when it
/// is not already in the real span, so the generated algebra always
/// contains it.
pub fn hermitianize(raw: &[CMat], label: impl Into<String>) -> Result<GeneratorSet> {
    if raw.is_empty() {
        return Err(Error::EmptyInput("matrix list"));
    }
    let n = raw[0].nrows();
    for (k, a) in raw.iter().enumerate() {
        if a.dim() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "matrix {k} is {}×{}, expected {n}×{n}",
                a.nrows(),
                a.ncols()
            )));
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("zero-dimensional matrices"));
    }
    let drop_below = tol::ZERO_DROP * n as f64;
    let mut gens: Vec<CMat> = Vec::new();
    for a in raw {
        if mat::hermitian_defect(a) <= tol::HERMITIAN_INPUT {
            if mat::fro_norm(a) > drop_below {
                gens.push(a.clone());
            }
            continue;
        }
        let adj = mat::dagger(a);
        let re = a + &adj;
        let im = (a - &adj).mapv(|z| C64::new(0.0, 1.0) * z);
        for g in [re, im] {
            if mat::fro_norm(&g) > drop_below {
                gens.push(g);
            }
        }
    }
    if !real_span_contains(&gens, &mat::eye(n)) {
        gens.push(mat::eye(n));
    }
    GeneratorSet::new(gens, label)
}

/// True when `target` lies in the real span of the Hermitian matrices.
fn real_span_contains(gens: &[CMat], target: &CMat) -> bool {
    let mut v = herm_to_rvec(target);
    let norm0 = rvec_norm(&v.view());
    if norm0 == 0.0 {
        return true;
    }
    let mut basis: Vec<Array1<f64>> = Vec::new();
    for g in gens {
        let mut w = herm_to_rvec(g);
        for b in &basis {
            let c = w.dot(b);
            w.scaled_add(-c, b);
        }
        let norm = rvec_norm(&w.view());
        if norm > tol::SPAN_RESIDUAL {
            basis.push(w.mapv(|x| x / norm));
        }
    }
    for _ in 0..2 {
        for b in &basis {
            let c = v.dot(b);
            v.scaled_add(-c, b);
        }
    }
    rvec_norm(&v.view()) <= tol::SPAN_RESIDUAL * norm0
}

fn rvec_norm(v: &ArrayView1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Isometric real coordinates of a Hermitian matrix: the diagonal, then
/// `√2·Re` and `√2·Im` of each strict upper entry. Euclidean norm equals the
/// Frobenius norm, so inner products transfer exactly.
pub(crate) fn herm_to_rvec(m: &CMat) -> Array1<f64> {
    let n = m.nrows();
    let mut v = Array1::zeros(n * n);
    for i in 0..n {
        v[i] = m[[i, i]].re;
    }
    let mut idx = n;
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            v[idx] = r2 * m[[i, j]].re;
            v[idx + 1] = r2 * m[[i, j]].im;
            idx += 2;
        }
    }
    v
}

pub(crate) fn rvec_to_herm(v: &ArrayView1<f64>, n: usize) -> CMat {
    let mut m = mat::czeros(n, n);
    for i in 0..n {
        m[[i, i]] = C64::new(v[i], 0.0);
    }
    let mut idx = n;
    let inv_r2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(inv_r2 * v[idx], inv_r2 * v[idx + 1]);
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
            idx += 2;
        }
    }
    m
}

/// Orthonormal Hermitian basis of the commutant, under the Hilbert-Schmidt
/// inner product.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    dim: usize,
    basis: Vec<CMat>,
}

impl CommutantBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    pub fn into_basis(self) -> Vec<CMat> {
        self.basis
    }

    /// The commutant is itself a *-algebra; reuse the basis as generators.
    pub fn to_generator_set(&self, label: impl Into<String>) -> Result<GeneratorSet> {
        GeneratorSet::new(self.basis.clone(), label)
    }
}

const COMMUTANT_DRAW_SEED: u64 = 0x0C0A_11E5;

/// Computes the joint null space of `B ↦ [B, A_k]` over all generators and
/// returns it as an orthonormal Hermitian basis.
///
/// Rather than stacking dense n²×n² vectorized commutation maps, the solve
/// is reduced first: any `B` commuting with a Hermitian element `A` of the
/// algebra is block diagonal in `A`'s eigen-clusters, so the remaining
/// constraints act on the much smaller block parameters. The reduction is
/// exact for any cleanly clustered `A` drawn from the algebra (a non-generic
/// draw only leaves surplus parameters, never removes solutions); the dense
/// formulation is retained in the test suite as an oracle.
pub fn commutant_basis(gs: &GeneratorSet) -> Result<CommutantBasis> {
    let mut last = None;
    for attempt in 0..3u64 {
        let a = gs.random_element(sub_seed(COMMUTANT_DRAW_SEED, attempt), SampleDepth::Linear);
        match commutant_from_element(gs, &a) {
            Ok(basis) => return Ok(basis),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or(Error::NumericalFailure(
        "commutant computation failed".into(),
    )))
}

fn commutant_from_element(gs: &GeneratorSet, a: &CMat) -> Result<CommutantBasis> {
    let n = gs.dim();
    let eig = mat::herm_eig(a)?;
    let tau = tol::EIG_CLUSTER_FACTOR * f64::max(1.0, eig.spectral_norm()) * n as f64;
    // Consecutive-gap partition of the spectrum; offsets[j]..offsets[j+1] is
    // cluster j in the eigenvector column order.
    let mut offsets = vec![0usize];
    for i in 1..n {
        if eig.values[i] - eig.values[i - 1] > tau {
            offsets.push(i);
        }
    }
    offsets.push(n);
    let sizes: Vec<usize> = offsets.windows(2).map(|w| w[1] - w[0]).collect();
    let param_offsets: Vec<usize> = sizes
        .iter()
        .scan(0usize, |acc, &k| {
            let o = *acc;
            *acc += k * k;
            Some(o)
        })
        .collect();
    let total_params: usize = sizes.iter().map(|k| k * k).sum();

    // Reduce each generator's constraint block by its own SVD (replacing
    // M_h with Σ_h·Vt_h keeps the stacked singular values exact), then take
    // the null space of the concatenation. Avoiding the normal matrix
    // matters: squaring the spectrum would push true null directions into
    // the eigensolver's noise floor.
    let v = &eig.vectors;
    let vd = mat::dagger(v);
    let mut reduced: Vec<Array2<f64>> = Vec::with_capacity(gs.len());
    let mut total_rows = 0usize;
    for h in gs.gens() {
        let w = vd.dot(h).dot(v);
        let rows = constraint_rows(&w, &offsets, &sizes, &param_offsets, total_params);
        total_rows += rows.nrows();
        reduced.push(svd_row_compress(&rows)?);
    }
    let null_vecs = joint_real_nullspace(&reduced, total_rows, total_params)?;

    let mut basis = Vec::with_capacity(null_vecs.len());
    for p in &null_vecs {
        let mut block = mat::czeros(n, n);
        for (j, &k) in sizes.iter().enumerate() {
            let seg = p.slice(s![param_offsets[j]..param_offsets[j] + k * k]);
            let bj = rvec_to_herm(&seg, k);
            block
                .slice_mut(s![offsets[j]..offsets[j + 1], offsets[j]..offsets[j + 1]])
                .assign(&bj);
        }
        let b = v.dot(&block).dot(&vd);
        basis.push(b.mapv(|z| 0.5 * z) + &mat::dagger(&b).mapv(|z| 0.5 * z));
    }

    // Final Gram-Schmidt sweep; the parameterization is isometric so this
    // normally changes nothing, but it enforces the advertised invariants.
    let mut ortho: Vec<CMat> = Vec::with_capacity(basis.len());
    for mut b in basis {
        for o in &ortho {
            let c = mat::hs_inner(o, &b);
            b.scaled_add(-c, o);
        }
        let norm = mat::fro_norm(&b);
        if norm > 1e-6 {
            ortho.push(b.mapv(|z| z / C64::new(norm, 0.0)));
        }
    }

    for b in &ortho {
        for h in gs.gens() {
            let res = mat::fro_norm(&mat::commutator(b, h));
            if res > tol::VERIFY_RESIDUAL * mat::fro_norm(h) {
                return Err(Error::NumericalFailure(format!(
                    "commutant candidate fails commutation check: residual {res:.3e}"
                )));
            }
        }
    }

    Ok(CommutantBasis {
        dim: n,
        basis: ortho,
    })
}

/// Rank-preserving row compression: `Σ·Vᵀ` from the SVD spans the same row
/// space with the same singular values.
fn svd_row_compress(m: &Array2<f64>) -> Result<Array2<f64>> {
    use ndarray_linalg::SVD;
    let (_, sig, vt) = m.svd(false, true)?;
    let mut out = vt.expect("right singular vectors requested");
    for (r, mut row) in out.rows_mut().into_iter().enumerate() {
        let f = if r < sig.len() { sig[r] } else { 0.0 };
        row.mapv_inplace(|x| x * f);
    }
    Ok(out)
}

/// Orthonormal null vectors of the (virtually) stacked constraint blocks,
/// thresholded at `τ_null = factor · max(total_rows, params) · σ_max`.
fn joint_real_nullspace(
    blocks: &[Array2<f64>],
    total_rows: usize,
    params: usize,
) -> Result<Vec<Array1<f64>>> {
    use ndarray_linalg::SVD;
    let stacked_rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut stacked = Array2::zeros((stacked_rows, params));
    let mut at = 0;
    for b in blocks {
        stacked.slice_mut(s![at..at + b.nrows(), ..]).assign(b);
        at += b.nrows();
    }
    let (_, sig, vt) = stacked.svd(false, true)?;
    let vt = vt.expect("right singular vectors requested");
    let sig_max = sig.first().copied().unwrap_or(0.0);
    if sig_max == 0.0 {
        return Ok((0..params).map(|r| vt.row(r).to_owned()).collect());
    }
    let tau = tol::NULLSPACE_FACTOR * (total_rows.max(params) as f64) * sig_max;
    let rank = sig.iter().take_while(|&&x| x > tau).count();
    Ok((rank..params).map(|r| vt.row(r).to_owned()).collect())
}

/// Real rows of the constraints `B_j·W_{jl} − W_{jl}·B_l = 0` for all
/// cluster pairs `j ≤ l`, expressed over the Hermitian block parameters.
fn constraint_rows(
    w: &CMat,
    offsets: &[usize],
    sizes: &[usize],
    param_offsets: &[usize],
    total_params: usize,
) -> Array2<f64> {
    let clusters = sizes.len();
    let pair_rows: usize = (0..clusters)
        .flat_map(|j| (j..clusters).map(move |l| sizes[j] * sizes[l]))
        .sum();
    let mut m = Array2::zeros((2 * pair_rows, total_params));
    let mut row = 0usize;
    for j in 0..clusters {
        for l in j..clusters {
            let (kj, kl) = (sizes[j], sizes[l]);
            let wjl = w.slice(s![
                offsets[j]..offsets[j] + kj,
                offsets[l]..offsets[l] + kl
            ]);
            for r in 0..kj {
                for c in 0..kl {
                    for t in 0..kj {
                        add_block_entry(&mut m, row, param_offsets[j], kj, r, t, wjl[[t, c]]);
                    }
                    for t in 0..kl {
                        add_block_entry(&mut m, row, param_offsets[l], kl, t, c, -wjl[[r, t]]);
                    }
                    row += 2;
                }
            }
        }
    }
    m
}

/// Adds `coeff · B[a,b]` of a k×k Hermitian parameter block to constraint
/// row pair (`row` = real part, `row+1` = imaginary part). Parameters are
/// ordered diagonal-first, then (√2-scaled) real/imaginary pairs of the
/// strict upper triangle, matching `herm_to_rvec`.
#[inline]
fn add_block_entry(m: &mut Array2<f64>, row: usize, off: usize, k: usize, a: usize, b: usize, coeff: C64) {
    let inv_r2 = std::f64::consts::FRAC_1_SQRT_2;
    if a == b {
        m[[row, off + a]] += coeff.re;
        m[[row + 1, off + a]] += coeff.im;
        return;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    // index of pair (lo, hi) in row-major upper-triangle order
    let pair = lo * k - lo * (lo + 1) / 2 + (hi - lo - 1);
    let x = off + k + 2 * pair;
    let y = x + 1;
    if a < b {
        // B[a,b] = (x + i·y)/√2
        m[[row, x]] += inv_r2 * coeff.re;
        m[[row + 1, x]] += inv_r2 * coeff.im;
        m[[row, y]] -= inv_r2 * coeff.im;
        m[[row + 1, y]] += inv_r2 * coeff.re;
    } else {
        // B[a,b] = (x − i·y)/√2
        m[[row, x]] += inv_r2 * coeff.re;
        m[[row + 1, x]] += inv_r2 * coeff.im;
        m[[row, y]] += inv_r2 * coeff.im;
        m[[row + 1, y]] -= inv_r2 * coeff.re;
    }
}

/// Real dimension of the algebra's Hermitian part (equal to the complex
/// dimension of the algebra), computed by closing the span of the
/// generators under `(G,H) ↦ (GH+HG)/2` and `(G,H) ↦ i(GH−HG)/2`.
pub fn algebra_dimension(gs: &GeneratorSet, max_rounds: usize) -> Result<usize> {
    let n = gs.dim();
    let nn = n * n;
    let mut span = SpanBasis::new(nn);
    let mut mats: Vec<CMat> = Vec::new();
    for g in gs.gens() {
        if span.try_insert(herm_to_rvec(g)) {
            mats.push(rvec_to_herm(&span.last_row(), n));
        }
    }
    let mut frontier_start = 0usize;
    for _ in 0..max_rounds {
        let before = mats.len();
        let mut new_mats: Vec<CMat> = Vec::new();
        for l in frontier_start..before {
            for j in 0..=l {
                let jl = mats[j].dot(&mats[l]);
                let lj = mats[l].dot(&mats[j]);
                let sym = (&jl + &lj).mapv(|z| 0.5 * z);
                let anti = (&jl - &lj).mapv(|z| C64::new(0.0, 0.5) * z);
                for cand in [sym, anti] {
                    if span.try_insert(herm_to_rvec(&cand)) {
                        new_mats.push(rvec_to_herm(&span.last_row(), n));
                    }
                }
            }
        }
        if new_mats.is_empty() {
            return Ok(mats.len());
        }
        frontier_start = before;
        mats.extend(new_mats);
    }
    Err(Error::NoConvergence {
        rounds: max_rounds,
        dim: mats.len(),
    })
}

/// Growing orthonormal row basis with batched projection.
struct SpanBasis {
    cols: usize,
    rows: Vec<f64>,
    count: usize,
}

impl SpanBasis {
    fn new(cols: usize) -> Self {
        Self {
            cols,
            rows: Vec::new(),
            count: 0,
        }
    }

    fn view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.count, self.cols), &self.rows).expect("basis shape")
    }

    fn last_row(&self) -> ArrayView1<'_, f64> {
        let start = (self.count - 1) * self.cols;
        ArrayView1::from(&self.rows[start..start + self.cols])
    }

    /// Projects the candidate onto the orthogonal complement of the span;
    /// inserts and returns true when a significant component remains.
    fn try_insert(&mut self, cand: Array1<f64>) -> bool {
        let norm0 = rvec_norm(&cand.view());
        if norm0 <= 1e-14 * self.cols as f64 {
            return false;
        }
        let mut v = cand.mapv(|x| x / norm0);
        if self.count > 0 {
            let basis = self.view();
            for _ in 0..2 {
                let coeffs = basis.dot(&v);
                v = v - basis.t().dot(&coeffs);
            }
        }
        let res = rvec_norm(&v.view());
        if res <= tol::SPAN_RESIDUAL {
            return false;
        }
        v.mapv_inplace(|x| x / res);
        self.rows.extend(v.iter());
        self.count += 1;
        true
    }
}
