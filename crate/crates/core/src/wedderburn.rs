//! Two-step simultaneous block diagonalization of a matrix *-algebra.
//!
//! Step 1 eigendecomposes a generic Hermitian element, groups eigenspaces by
//! multiplicity, and splits each group into simple components by testing
//! whether a second generic element couples two eigenspaces. Step 2 aligns
//! the bases of the eigenspaces within a component by chained local
//! unitaries, so that every algebra element becomes block diagonal with the
//! pattern `M_{n_i} ⊗ I_{m_i}` in one global unitary `U`.
//!
//! The same `U` exhibits the commutant in the transposed pattern
//! `I_{n_i} ⊗ M_{m_i}`; decomposing the commutant's generating set instead
//! of the algebra's therefore yields a structure tagged [`Side::Commutant`],
//! with component labels native to the commutant.

use ndarray::s;

use crate::algebra::{commutant_basis, CommutantBasis, GeneratorSet, SampleDepth};
use crate::error::{Error, Result};
use crate::mat::{self, C64, CMat, HermEig};
use crate::seed::sub_seed;
use crate::tol;

/// Which algebra the structure's block labels describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Components label the generated algebra: blocks `M_{n_i} ⊗ I_{m_i}`.
    Algebra,
    /// Components label the commutant of the original generators; the
    /// original generators then show the pattern `I_{n_i} ⊗ M_{m_i}`.
    Commutant,
}

/// One eigenvalue cluster of the generic element: eigenvalue, multiplicity,
/// and an orthonormal basis of the eigenspace as matrix columns.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub basis: CMat,
}

/// Clusters sorted by non-decreasing multiplicity (ties by eigenvalue),
/// partitioned into groups of equal multiplicity.
#[derive(Debug, Clone)]
pub struct EigenClusters {
    pub dim: usize,
    pub clusters: Vec<EigenCluster>,
    pub groups: Vec<MultiplicityGroup>,
}

#[derive(Debug, Clone)]
pub struct MultiplicityGroup {
    pub multiplicity: usize,
    pub members: Vec<usize>,
}

/// One simple component: `block_size` (n_i) clusters of shared
/// `multiplicity` (m_i), occupying `block_size·multiplicity` columns of `U`
/// starting at `offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleComponent {
    pub block_size: usize,
    pub multiplicity: usize,
    pub member_clusters: Vec<usize>,
    pub offset: usize,
}

impl SimpleComponent {
    pub fn dim(&self) -> usize {
        self.block_size * self.multiplicity
    }
}

/// The decomposition result: a unitary and the component structure it
/// exhibits.
#[derive(Debug, Clone)]
pub struct WedderburnStructure {
    pub unitary: CMat,
    pub components: Vec<SimpleComponent>,
    pub side: Side,
}

impl WedderburnStructure {
    pub fn dim(&self) -> usize {
        self.unitary.nrows()
    }

    /// `(n_i, m_i)` pairs as a sorted multiset, for structure comparisons.
    pub fn shape_multiset(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self
            .components
            .iter()
            .map(|c| (c.block_size, c.multiplicity))
            .collect();
        v.sort_unstable();
        v
    }

    /// Dimension of the protected (logical) tensor factor of component `i`:
    /// the identity factor the generators act trivially on.
    pub fn protected_dim(&self, i: usize) -> usize {
        let c = &self.components[i];
        match self.side {
            Side::Algebra => c.multiplicity,
            Side::Commutant => c.block_size,
        }
    }

    /// Dimension of the noisy factor of component `i`.
    pub fn noisy_dim(&self, i: usize) -> usize {
        let c = &self.components[i];
        match self.side {
            Side::Algebra => c.block_size,
            Side::Commutant => c.multiplicity,
        }
    }
}

/// Thresholds for clustering, block coupling, and the final residual gate.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// `τ_eig = eig_factor · max(1, ‖A‖₂) · n`
    pub eig_factor: f64,
    /// Relative probe-block coupling threshold `τ_blk`.
    pub block: f64,
    /// Residual above which a decomposition attempt is rejected.
    pub verify: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eig_factor: tol::EIG_CLUSTER_FACTOR,
            block: tol::BLOCK_COUPLING,
            verify: tol::VERIFY_RESIDUAL,
        }
    }
}

/// A verified decomposition along with the generic elements that produced
/// it, for downstream certificates.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub structure: WedderburnStructure,
    /// Worst relative off-structure residual over all generators.
    pub residual: f64,
    /// The generic element whose eigenvectors seeded Step 1.
    pub generic: CMat,
    /// The probe element used for refinement and Step 2.
    pub probe: CMat,
    pub attempts: u32,
    pub depth: SampleDepth,
}

/// Partitions an ascending spectrum into clusters separated by gaps larger
/// than `tau`, returning per-cluster eigenvector bases (re-orthonormalized)
/// sorted by non-decreasing multiplicity.
pub fn cluster_eigenvalues(eig: &HermEig, tau: f64) -> Result<EigenClusters> {
    let n = eig.dim();
    if n == 0 {
        return Err(Error::EmptyInput("spectrum"));
    }
    let mut starts = vec![0usize];
    for i in 1..n {
        if eig.values[i] - eig.values[i - 1] > tau {
            starts.push(i);
        }
    }
    starts.push(n);

    // A wide cluster bordered by a barely-passing gap means the gap
    // statistics cannot separate the spectrum reliably at this tolerance.
    for w in starts.windows(2) {
        let (s, e) = (w[0], w[1]);
        let spread = eig.values[e - 1] - eig.values[s];
        if spread > 10.0 * tau {
            let gap_before = if s > 0 {
                eig.values[s] - eig.values[s - 1]
            } else {
                f64::INFINITY
            };
            let gap_after = if e < n {
                eig.values[e] - eig.values[e - 1]
            } else {
                f64::INFINITY
            };
            let gap = gap_before.min(gap_after);
            if gap < 10.0 * tau {
                return Err(Error::AmbiguousClustering {
                    gap,
                    tolerance: tau,
                });
            }
        }
    }

    let mut clusters: Vec<EigenCluster> = starts
        .windows(2)
        .map(|w| {
            let (s, e) = (w[0], w[1]);
            let cols = eig.vectors.slice(s![.., s..e]).to_owned();
            let basis = reorthonormalize(&cols);
            let eigenvalue = eig.values.slice(s![s..e]).mean().expect("nonempty");
            EigenCluster {
                eigenvalue,
                multiplicity: e - s,
                basis,
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        (a.multiplicity, a.eigenvalue)
            .partial_cmp(&(b.multiplicity, b.eigenvalue))
            .expect("finite eigenvalues")
    });

    let mut groups: Vec<MultiplicityGroup> = Vec::new();
    for (idx, c) in clusters.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if g.multiplicity == c.multiplicity => g.members.push(idx),
            _ => groups.push(MultiplicityGroup {
                multiplicity: c.multiplicity,
                members: vec![idx],
            }),
        }
    }

    Ok(EigenClusters {
        dim: n,
        clusters,
        groups,
    })
}

/// Modified Gram-Schmidt on columns. The eigensolver already returns
/// orthonormal columns; this guards against accumulated drift only.
fn reorthonormalize(cols: &CMat) -> CMat {
    let mut q = cols.clone();
    let k = q.ncols();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).to_owned();
                let c: C64 = qi.iter().zip(q.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
                let mut col = q.column_mut(j);
                for (x, y) in col.iter_mut().zip(qi.iter()) {
                    *x -= c * y;
                }
            }
        }
        let norm: f64 = q.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut col = q.column_mut(j);
        col.mapv_inplace(|z| z / C64::new(norm, 0.0));
    }
    q
}

/// Splits each multiplicity group into simple components: two clusters
/// belong together exactly when some probe element couples them with a
/// block of relative norm above `tau_blk`. Components are ordered by
/// ascending `(n_i, m_i, smallest member eigenvalue)` and assigned offsets.
pub fn refine_components(
    clusters: &EigenClusters,
    probes: &[CMat],
    tau_blk: f64,
) -> Vec<SimpleComponent> {
    let thresholds: Vec<f64> = probes.iter().map(|p| tau_blk * mat::fro_norm(p)).collect();
    let mut parent: Vec<usize> = (0..clusters.clusters.len()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in &clusters.groups {
        for (a, &j) in g.members.iter().enumerate() {
            for &l in g.members.iter().skip(a + 1) {
                let vj = &clusters.clusters[j].basis;
                let vl = &clusters.clusters[l].basis;
                let coupled = probes.iter().zip(&thresholds).any(|(p, &thr)| {
                    let block = mat::dagger(vj).dot(p).dot(vl);
                    mat::fro_norm(&block) > thr
                });
                if coupled {
                    let (rj, rl) = (find(&mut parent, j), find(&mut parent, l));
                    parent[rj] = rl;
                }
            }
        }
    }

    let mut roots: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for j in 0..clusters.clusters.len() {
        let r = find(&mut parent, j);
        roots.entry(r).or_default().push(j);
    }
    let mut comps: Vec<SimpleComponent> = roots
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            SimpleComponent {
                block_size: members.len(),
                multiplicity: clusters.clusters[members[0]].multiplicity,
                member_clusters: members,
                offset: 0,
            }
        })
        .collect();
    comps.sort_by(|a, b| {
        let ka = (
            a.block_size,
            a.multiplicity,
            clusters.clusters[a.member_clusters[0]].eigenvalue,
        );
        let kb = (
            b.block_size,
            b.multiplicity,
            clusters.clusters[b.member_clusters[0]].eigenvalue,
        );
        ka.partial_cmp(&kb).expect("finite eigenvalues")
    });
    let mut offset = 0;
    for c in &mut comps {
        c.offset = offset;
        offset += c.dim();
    }
    comps
}

/// Step 2: per-cluster local unitaries `Q_j` (one m_i×m_i matrix per member
/// cluster, in member order) aligning the eigenspace bases so every probe
/// sub-block becomes a scalar matrix.
///
/// The first member gets `Q = I`; the rest are chained along a
/// maximum-weight spanning tree of the nonzero-block graph via
/// `Q_child = normalize(block† · Q_parent)`, the adjoint standing in for the
/// inverse since each block is a scalar multiple of a unitary.
pub fn build_local_unitary(
    clusters: &EigenClusters,
    component: &SimpleComponent,
    abar: &CMat,
    tau_blk: f64,
) -> Result<Vec<CMat>> {
    let m = component.multiplicity;
    let k = component.block_size;
    if m == 1 {
        return Ok(vec![mat::eye(1); k]);
    }
    if k == 1 {
        return Ok(vec![mat::eye(m)]);
    }
    let members = &component.member_clusters;
    let threshold = tau_blk * mat::fro_norm(abar);
    let bases: Vec<&CMat> = members.iter().map(|&j| &clusters.clusters[j].basis).collect();
    let mut blocks: Vec<Vec<Option<CMat>>> = vec![vec![None; k]; k];
    let mut weights = vec![vec![0.0f64; k]; k];
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let blk = mat::dagger(bases[a]).dot(abar).dot(bases[b]);
            weights[a][b] = mat::fro_norm(&blk);
            blocks[a][b] = Some(blk);
        }
    }

    let mut qs: Vec<Option<CMat>> = vec![None; k];
    qs[0] = Some(mat::eye(m));
    let mut visited = vec![false; k];
    visited[0] = true;
    for _ in 1..k {
        let mut best: Option<(f64, usize, usize)> = None;
        for u in 0..k {
            if !visited[u] {
                continue;
            }
            for v in 0..k {
                if visited[v] {
                    continue;
                }
                if best.map_or(true, |(w, _, _)| weights[u][v] > w) {
                    best = Some((weights[u][v], u, v));
                }
            }
        }
        let (w, u, v) = best.expect("unvisited cluster remains");
        if w <= threshold {
            return Err(Error::DisconnectedBlockGraph {
                component: component.offset,
                detail: format!("strongest remaining block {w:.3e} at threshold {threshold:.3e}"),
            });
        }
        let block = blocks[u][v].as_ref().expect("off-diagonal block");
        let qu = qs[u].as_ref().expect("visited cluster has Q");
        let qhat = mat::dagger(block).dot(qu);
        let first_row_norm: f64 = qhat.row(0).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if first_row_norm <= threshold {
            return Err(Error::DisconnectedBlockGraph {
                component: component.offset,
                detail: "vanishing first row in local unitary chain".into(),
            });
        }
        let q = qhat.mapv(|z| z / C64::new(first_row_norm, 0.0));
        // All row norms must agree after normalization; a spread flags a
        // probe block that is not scalar-times-unitary (non-generic draw).
        for r in 0..m {
            let rn: f64 = q.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (rn - 1.0).abs() > tol::ROW_NORM_AGREEMENT {
                return Err(Error::DisconnectedBlockGraph {
                    component: component.offset,
                    detail: format!("row norm {rn:.6} deviates from 1 (non-generic probe)"),
                });
            }
        }
        let gram_dev = mat::fro_norm(&(mat::dagger(&q).dot(&q) - mat::eye(m)));
        if gram_dev > 1e-8 * m as f64 {
            return Err(Error::DisconnectedBlockGraph {
                component: component.offset,
                detail: format!("local unitary fails unitarity by {gram_dev:.3e}"),
            });
        }
        qs[v] = Some(q);
        visited[v] = true;
    }
    Ok(qs.into_iter().map(|q| q.expect("spanning tree complete")).collect())
}

/// Full pipeline: sample two generic elements plus one extra probe, run
/// Step 1 and Step 2, assemble `U`, and accept only if [`verify_structure`]
/// passes. Retries with fresh sub-seeds, escalating the sampling depth, and
/// reports the best failing residual if every attempt is rejected.
pub fn decompose(gs: &GeneratorSet, seed: u64, cfg: &Tolerances) -> Result<Decomposition> {
    const RETRIES_PER_DEPTH: u64 = 4;
    let mut best_residual = f64::INFINITY;
    let mut attempts = 0u32;
    for (round, depth) in (0..2 * RETRIES_PER_DEPTH).map(|r| {
        let depth = if r < RETRIES_PER_DEPTH {
            SampleDepth::Linear
        } else {
            SampleDepth::Quadratic
        };
        (r, depth)
    }) {
        attempts += 1;
        let a = gs.random_element(sub_seed(seed, 3 * round), depth);
        let abar = gs.random_element(sub_seed(seed, 3 * round + 1), depth);
        let extra = gs.random_element(sub_seed(seed, 3 * round + 2), depth);
        match attempt_decompose(gs, &a, &abar, &extra, cfg) {
            Ok((structure, residual)) if residual <= cfg.verify => {
                return Ok(Decomposition {
                    structure,
                    residual,
                    generic: a,
                    probe: abar,
                    attempts,
                    depth,
                });
            }
            Ok((_, residual)) => best_residual = best_residual.min(residual),
            Err(Error::AmbiguousClustering { .. }) | Err(Error::DisconnectedBlockGraph { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::DecompositionUnverified {
        attempts,
        residual: best_residual,
    })
}

fn attempt_decompose(
    gs: &GeneratorSet,
    a: &CMat,
    abar: &CMat,
    extra: &CMat,
    cfg: &Tolerances,
) -> Result<(WedderburnStructure, f64)> {
    let n = gs.dim();
    let eig = mat::herm_eig(a)?;
    let tau_eig = cfg.eig_factor * f64::max(1.0, eig.spectral_norm()) * n as f64;
    let clusters = cluster_eigenvalues(&eig, tau_eig)?;
    let probes = [abar.clone(), extra.clone()];
    let components = refine_components(&clusters, &probes, cfg.block);

    let mut unitary = mat::czeros(n, n);
    for comp in &components {
        let qs = build_local_unitary(&clusters, comp, abar, cfg.block)?;
        let m = comp.multiplicity;
        for (pos, &cl) in comp.member_clusters.iter().enumerate() {
            let aligned = clusters.clusters[cl].basis.dot(&qs[pos]);
            let start = comp.offset + pos * m;
            unitary
                .slice_mut(s![.., start..start + m])
                .assign(&aligned);
        }
    }
    let structure = WedderburnStructure {
        unitary,
        components,
        side: Side::Algebra,
    };
    let residual = verify_structure(gs, &structure);
    Ok((structure, residual))
}

/// Decomposes the commutant of `gs` and re-verifies the resulting unitary
/// against the original generators, which must exhibit the transposed block
/// pattern in the same basis. Component labels are native to the commutant.
pub fn decompose_commutant(
    gs: &GeneratorSet,
    seed: u64,
    cfg: &Tolerances,
) -> Result<(Decomposition, CommutantBasis)> {
    let cb = commutant_basis(gs)?;
    let cgs = cb.to_generator_set(format!("{} commutant", gs.label()))?;
    let mut dec = decompose(&cgs, seed, cfg)?;
    dec.structure.side = Side::Commutant;
    let dual_residual = verify_structure(gs, &dec.structure);
    if dual_residual > cfg.verify {
        return Err(Error::DecompositionUnverified {
            attempts: dec.attempts,
            residual: dual_residual,
        });
    }
    dec.residual = dec.residual.max(dual_residual);
    Ok((dec, cb))
}

/// Worst relative off-structure residual of `U†·H·U` over the generators:
/// the part of each transformed generator outside the claimed block pattern
/// (`M ⊗ I` per component for [`Side::Algebra`], `I ⊗ M` for
/// [`Side::Commutant`]), normalized by `max(1, ‖H‖_F)`.
pub fn verify_structure(gs: &GeneratorSet, ws: &WedderburnStructure) -> f64 {
    let u = &ws.unitary;
    let ud = mat::dagger(u);
    let mut worst = 0.0f64;
    for h in gs.gens() {
        let t = ud.dot(h).dot(u);
        let p = project_structure(&t, ws);
        let residual = mat::fro_norm(&(&t - &p)) / f64::max(1.0, mat::fro_norm(h));
        worst = worst.max(residual);
    }
    worst
}

/// Orthogonal projection onto the structure space claimed by `ws`.
fn project_structure(t: &CMat, ws: &WedderburnStructure) -> CMat {
    let n = t.nrows();
    let mut p = mat::czeros(n, n);
    for comp in &ws.components {
        let o = comp.offset;
        let (k, m) = (comp.block_size, comp.multiplicity);
        match ws.side {
            Side::Algebra => {
                // span{M ⊗ I_m}: average the m diagonal positions of each
                // (a, b) cluster pair, then retensor with the identity.
                for a in 0..k {
                    for b in 0..k {
                        let mut acc = C64::new(0.0, 0.0);
                        for s in 0..m {
                            acc += t[[o + a * m + s, o + b * m + s]];
                        }
                        acc /= m as f64;
                        for s in 0..m {
                            p[[o + a * m + s, o + b * m + s]] = acc;
                        }
                    }
                }
            }
            Side::Commutant => {
                // span{I_k ⊗ M}: average the k diagonal blocks.
                for s in 0..m {
                    for tt in 0..m {
                        let mut acc = C64::new(0.0, 0.0);
                        for a in 0..k {
                            acc += t[[o + a * m + s, o + a * m + tt]];
                        }
                        acc /= k as f64;
                        for a in 0..k {
                            p[[o + a * m + s, o + a * m + tt]] = acc;
                        }
                    }
                }
            }
        }
    }
    p
}

/// The m_i×m_i sub-blocks of a probe element within one component after the
/// change of basis, with their scalar coefficients.
#[derive(Debug, Clone)]
pub struct BlockTable {
    pub block_size: usize,
    pub multiplicity: usize,
    /// Row-major `block_size × block_size` grid of m×m sub-blocks.
    pub blocks: Vec<CMat>,
    /// `Tr(block)/m` per sub-block: the scalar the block should equal times
    /// the identity.
    pub coefficients: Vec<C64>,
}

impl BlockTable {
    /// Extracts the sub-block table of `U†·abar·U` for component `i`.
    pub fn from_structure(ws: &WedderburnStructure, i: usize, abar: &CMat) -> Self {
        let comp = &ws.components[i];
        let (k, m) = (comp.block_size, comp.multiplicity);
        let o = comp.offset;
        let t = mat::dagger(&ws.unitary).dot(abar).dot(&ws.unitary);
        let mut blocks = Vec::with_capacity(k * k);
        let mut coefficients = Vec::with_capacity(k * k);
        for a in 0..k {
            for b in 0..k {
                let blk = t
                    .slice(s![o + a * m..o + (a + 1) * m, o + b * m..o + (b + 1) * m])
                    .to_owned();
                let trace: C64 = blk.diag().sum();
                coefficients.push(trace / m as f64);
                blocks.push(blk);
            }
        }
        Self {
            block_size: k,
            multiplicity: m,
            blocks,
            coefficients,
        }
    }

    /// Largest Frobenius deviation of any sub-block from its scalar part.
    pub fn max_scalar_deviation(&self) -> f64 {
        let m = self.multiplicity;
        self.blocks
            .iter()
            .zip(&self.coefficients)
            .map(|(blk, &c)| {
                let scalar = mat::eye(m).mapv(|z| z * c);
                mat::fro_norm(&(blk - &scalar))
            })
            .fold(0.0, f64::max)
    }
}
