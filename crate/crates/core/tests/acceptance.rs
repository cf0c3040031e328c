//! Acceptance suite: one test per release criterion. Each prints a single
//! PASS line with the measured quantities (visible under `--nocapture`);
//! a failed assertion reports the violation instead.

use std::time::{Duration, Instant};

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wdfs_core::adfs::{
    adfs_search, grad_J, objective_J, warm_start_unitary, AdfsProblem, OptimizerConfig,
    SearchPlan, UnitaryPoint, WarmStartSpec,
};
use wdfs_core::algebra::{algebra_dimension, commutant_basis, hermitianize, GeneratorSet};
use wdfs_core::channels::{
    collective_noise, encode, perturbed_collective, spin_multiplicities, DensityMatrix,
};
use wdfs_core::mat::{self, dagger, fro_norm, random_unitary, C64};
use wdfs_core::seed::sub_seed;
use wdfs_core::wedderburn::{decompose, BlockTable, Decomposition, Tolerances};

fn collective_generators(n_q: usize) -> GeneratorSet {
    let ch = collective_noise(n_q).expect("within qubit cap");
    hermitianize(ch.kraus(), format!("collective-{n_q}")).expect("valid Kraus set")
}

fn decompose_collective(n_q: usize, seed: u64) -> Decomposition {
    decompose(&collective_generators(n_q), seed, &Tolerances::default())
        .expect("collective decomposition succeeds")
}

fn assert_runtime(elapsed: Duration, budget: Duration, what: &str) {
    assert!(
        elapsed <= budget,
        "{what} took {elapsed:.2?}, budget {budget:.2?}"
    );
}

#[test]
fn criterion_1_three_qubit_structure() {
    let start = Instant::now();
    let dec = decompose_collective(3, 0);
    let elapsed = start.elapsed();

    let shape = dec.structure.shape_multiset();
    assert_eq!(shape, vec![(2, 2), (4, 1)], "component multiset");
    assert!(
        dec.residual <= 1e-8,
        "residual {:.3e} exceeds 1e-8",
        dec.residual
    );
    assert_runtime(elapsed, Duration::from_secs(1), "3-qubit decomposition");
    println!(
        "criterion 1: PASS  components {{(2,2),(4,1)}}, residual {:.3e}, {elapsed:.2?}",
        dec.residual
    );
}

#[test]
fn criterion_2_four_qubit_structure_and_commutant() {
    let start = Instant::now();
    let gs = collective_generators(4);
    let dec = decompose(&gs, 0, &Tolerances::default()).expect("4-qubit decomposition");
    let cb = commutant_basis(&gs).expect("commutant basis");
    let elapsed = start.elapsed();

    assert_eq!(
        dec.structure.shape_multiset(),
        vec![(1, 2), (3, 3), (5, 1)],
        "component multiset"
    );
    assert_eq!(cb.count(), 14, "commutant dimension");
    assert_runtime(elapsed, Duration::from_secs(2), "4-qubit structure + commutant");
    println!(
        "criterion 2: PASS  components {{(1,2),(3,3),(5,1)}}, commutant dim 14, {elapsed:.2?}"
    );
}

#[test]
fn criterion_3_oracle_sweep() {
    let start = Instant::now();
    let mut summary = Vec::new();
    for n_q in 2..=6 {
        let gs = collective_generators(n_q);
        let dec = decompose(&gs, 0, &Tolerances::default()).expect("decomposition");
        let shape = dec.structure.shape_multiset();
        assert_eq!(
            shape,
            spin_multiplicities(n_q),
            "angular-momentum oracle at n_q = {n_q}"
        );

        let sum_nm: usize = shape.iter().map(|&(n, m)| n * m).sum();
        assert_eq!(sum_nm, 1 << n_q, "Σ n·m at n_q = {n_q}");

        let dim_algebra: usize = shape.iter().map(|&(n, _)| n * n).sum();
        assert_eq!(
            algebra_dimension(&gs, 32).expect("span saturates"),
            dim_algebra,
            "Σ n² vs generated span at n_q = {n_q}"
        );

        let dim_commutant: usize = shape.iter().map(|&(_, m)| m * m).sum();
        assert_eq!(
            commutant_basis(&gs).expect("commutant basis").count(),
            dim_commutant,
            "Σ m² vs commutant basis at n_q = {n_q}"
        );
        summary.push(format!("{n_q}:{shape:?}"));
    }
    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(60), "oracle sweep");
    println!(
        "criterion 3: PASS  oracle + counting identities for n_q = 2..6 ({}), {elapsed:.2?}",
        summary.join(" ")
    );
}

#[test]
fn criterion_4_generic_element_pattern() {
    let mut worst_dev = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for n_q in [3, 4] {
        let dec = decompose_collective(n_q, 0);
        let ws = &dec.structure;
        let t = dagger(&ws.unitary).dot(&dec.generic).dot(&ws.unitary);
        let n = ws.dim();

        // Cluster values: mean of each group of m_i repeated diagonal
        // entries; the pattern matrix repeats them back.
        let mut pattern = mat::czeros(n, n);
        let mut values = Vec::new();
        for comp in &ws.components {
            let m = comp.multiplicity;
            for j in 0..comp.block_size {
                let o = comp.offset + j * m;
                let mean =
                    (0..m).map(|s| t[[o + s, o + s]]).sum::<C64>() / C64::new(m as f64, 0.0);
                for s in 0..m {
                    pattern[[o + s, o + s]] = mean;
                }
                values.push(mean.re);
            }
        }
        let dev = t
            .iter()
            .zip(pattern.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst_dev = worst_dev.max(dev);
        assert!(
            dev <= 1e-8,
            "deviation {dev:.3e} from the ⊕(D⊗I) pattern at n_q = {n_q}"
        );

        // Distinct per cluster, shared nowhere (within or across
        // components).
        for a in 0..values.len() {
            for b in a + 1..values.len() {
                let gap = (values[a] - values[b]).abs();
                min_gap = min_gap.min(gap);
                assert!(
                    gap > 1e-8,
                    "eigenvalues {:.6} and {:.6} coincide at n_q = {n_q}",
                    values[a],
                    values[b]
                );
            }
        }
    }
    println!(
        "criterion 4: PASS  diagonal-pattern deviation ≤ {worst_dev:.3e}, eigenvalue gaps ≥ {min_gap:.3e}"
    );
}

#[test]
fn criterion_5_probe_blocks_scalar() {
    let mut components_checked = 0usize;
    let mut worst_scalar = 0.0f64;
    let mut worst_unitary = 0.0f64;
    for n_q in 3..=6 {
        for seed in 0..20 {
            let dec = decompose_collective(n_q, seed);
            let ws = &dec.structure;
            let probe_scale = f64::max(1.0, fro_norm(&dec.probe));
            for (i, comp) in ws.components.iter().enumerate() {
                if comp.block_size < 2 || comp.multiplicity < 2 {
                    continue;
                }
                components_checked += 1;
                let table = BlockTable::from_structure(ws, i, &dec.probe);
                let dev = table.max_scalar_deviation() / probe_scale;
                worst_scalar = worst_scalar.max(dev);
                assert!(
                    dev <= 1e-8,
                    "non-scalar probe block ({dev:.3e}) at n_q = {n_q}, seed {seed}, component {i}"
                );

                let m = comp.multiplicity;
                for j in 0..comp.block_size {
                    let o = comp.offset + j * m;
                    let w = ws.unitary.slice(ndarray::s![.., o..o + m]).to_owned();
                    let gram_dev = fro_norm(&(dagger(&w).dot(&w) - mat::eye(m)));
                    worst_unitary = worst_unitary.max(gram_dev);
                    assert!(
                        gram_dev <= 1e-8,
                        "cluster basis not unitary ({gram_dev:.3e}) at n_q = {n_q}, seed {seed}"
                    );
                }
            }
        }
    }
    assert!(components_checked > 0, "certificate never exercised");
    println!(
        "criterion 5: PASS  {components_checked} component instances, scalar deviation ≤ {worst_scalar:.3e}, basis orthonormality ≤ {worst_unitary:.3e}"
    );
}

#[test]
fn criterion_6_dfs_fixed_points() {
    let mut worst = 0.0f64;
    for (n_q, shape) in [(3usize, (2usize, 2usize)), (4, (3, 3))] {
        let ch = collective_noise(n_q).unwrap();
        let dec = decompose_collective(n_q, 0);
        let idx = dec
            .structure
            .components
            .iter()
            .position(|c| (c.block_size, c.multiplicity) == shape)
            .expect("expected component present");
        let logical = dec.structure.protected_dim(idx);
        for s in 0..20 {
            let rho_bar = DensityMatrix::random(logical, sub_seed(600 + n_q as u64, s));
            let rho = encode(&dec.structure, idx, &rho_bar).expect("encode");
            let evolved = ch.apply(&rho).expect("apply");
            let drift = fro_norm(&(evolved.mat() - rho.mat()));
            worst = worst.max(drift);
            assert!(
                drift <= 1e-10,
                "encoded state moved by {drift:.3e} at n_q = {n_q}, state {s}"
            );
        }
    }
    println!("criterion 6: PASS  40 encoded states fixed within {worst:.3e}");
}

#[test]
fn criterion_7_adfs_properties() {
    let start = Instant::now();
    let reference = decompose_collective(3, 11);
    let comp = reference
        .structure
        .components
        .iter()
        .position(|c| c.multiplicity == 2)
        .expect("(2,2) component");

    // (b) J(U₀) scales quadratically in the perturbation strength.
    let u0 = warm_start_unitary(&reference.structure, comp).unwrap();
    let grid = [0.025, 0.05, 0.1];
    let js: Vec<f64> = grid
        .iter()
        .map(|&eps| {
            let ch = perturbed_collective(3, eps, 77).unwrap();
            let problem = AdfsProblem::from_component(ch, &reference.structure, comp).unwrap();
            objective_J(&problem, &u0).unwrap()
        })
        .collect();
    let mut ratios = Vec::new();
    for w in 0..2 {
        let ratio = js[w + 1] / js[w];
        assert!(
            (2.5..=6.0).contains(&ratio),
            "J({})/J({}) = {ratio:.3} outside [2.5, 6]",
            grid[w + 1],
            grid[w]
        );
        ratios.push(ratio);
    }

    // (a) Warm start dominates 6 random restarts at ε = 0.1.
    let ch = perturbed_collective(3, 0.1, 77).unwrap();
    let problem = AdfsProblem::from_component(ch, &reference.structure, comp).unwrap();
    let plan = SearchPlan {
        warm_start: Some(WarmStartSpec {
            reference: &reference.structure,
            component: comp,
        }),
        random_restarts: 6,
    };
    let cfg = OptimizerConfig {
        seed: 31,
        ..OptimizerConfig::default()
    };
    let outcome = adfs_search(&problem, &plan, &cfg).unwrap();
    let warm = outcome.rows.last().unwrap();
    for row in &outcome.rows[..6] {
        assert!(
            warm.j_min <= row.j_min + 1e-6,
            "warm start {:.6e} beaten by random restart {:.6e}",
            warm.j_min,
            row.j_min
        );
    }

    // (c) Every accepted step strictly decreases J, in every run.
    for result in &outcome.results {
        for w in result.trace.windows(2) {
            assert!(w[1] < w[0], "non-decreasing optimizer trace");
        }
    }

    let elapsed = start.elapsed();
    assert_runtime(elapsed, Duration::from_secs(300), "ADFS property suite");
    println!(
        "criterion 7: PASS  warm J_min {:.3e} ≤ 6 restarts (min {:.3e}), ε-scaling ratios {:.2}/{:.2}, strict traces, {elapsed:.2?}",
        warm.j_min,
        outcome.rows[..6]
            .iter()
            .map(|r| r.j_min)
            .fold(f64::INFINITY, f64::min),
        ratios[0],
        ratios[1]
    );
}

#[test]
fn criterion_8_seed_robustness() {
    for (n_q, expected) in [
        (3usize, vec![(2usize, 2usize), (4, 1)]),
        (4, vec![(1, 2), (3, 3), (5, 1)]),
    ] {
        let gs = collective_generators(n_q);
        for seed in 0..100 {
            let dec = decompose(&gs, seed, &Tolerances::default())
                .unwrap_or_else(|e| panic!("seed {seed} failed at n_q = {n_q}: {e}"));
            assert_eq!(
                dec.structure.shape_multiset(),
                expected,
                "structure drifted at n_q = {n_q}, seed {seed}"
            );
        }
    }
    println!("criterion 8: PASS  identical structure in 100/100 runs for n_q = 3 and 4");
}

#[test]
fn criterion_9_gradient_checks() {
    let ch = perturbed_collective(3, 0.1, 77).unwrap();
    let problem = AdfsProblem::new(ch, 2, 2).unwrap();
    let n = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for point_idx in 0..20 {
        let point = UnitaryPoint::new(random_unitary(n, &mut rng).unwrap()).unwrap();
        let g = grad_J(&problem, &point, 1e-6).unwrap();
        let mut v: Array1<f64> = Array1::zeros(n * n);
        for x in v.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let norm = v.dot(&v).sqrt();
        v.mapv_inplace(|x| x / norm);

        let delta = 1e-5;
        let shifted = |sign: f64| {
            let mut p = point.clone();
            p.theta = &p.theta + &(&v * (sign * delta));
            let u = p.unitary().unwrap();
            objective_J(&problem, &u).unwrap()
        };
        let probe = (shifted(1.0) - shifted(-1.0)) / (2.0 * delta);
        let predicted = g.dot(&v);
        let rel = (predicted - probe).abs() / probe.abs().max(1e-12);
        worst = worst.max(rel);
        assert!(
            rel <= 1e-4,
            "directional derivative off by {rel:.3e} at point {point_idx}"
        );
    }
    println!("criterion 9: PASS  20 directional probes agree within {worst:.3e} relative");
}
