//! Statistical checks of the Monte Carlo estimators against exact values
//! and structural properties.

use quadsense::detection::estimate_pd;
use quadsense::entropy::{exact_mi_quadruplet_poisson, mutual_information, quadruplet_mi_limit};
use quadsense::model::N_ROWS;
use quadsense::schemes::allocation_for;
use quadsense::{ChannelKind, ModelParams, Scheme, SeededRng, TimeAllocation};

fn poisson(p: f64) -> ModelParams {
    ModelParams::new(p, 2.0, 20.0).unwrap()
}

fn gaussian(p: f64) -> ModelParams {
    ModelParams::new(p, 5.0, 10.0).unwrap()
}

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn quadruplet_mc_agrees_with_exact_sum() {
    let mut agree = 0;
    let mut cells = 0;
    for &t in &[0.1, 0.5, 1.0, 2.0] {
        for &p in &[0.2, 0.5, 0.8] {
            let params = poisson(p);
            let alloc = allocation_for(&Scheme::Quadruplet, t).unwrap();
            let mc = mutual_information(ChannelKind::Poisson, &alloc, &params, 100_000, &SeededRng::new(1000 + cells))
                .unwrap();
            let exact = exact_mi_quadruplet_poisson(&params, t);
            cells += 1;
            if (mc.value - exact).abs() <= 3.0 * mc.stderr {
                agree += 1;
            }
        }
    }
    assert!(agree >= 11, "{agree}/12 cells agree");
}

#[test]
fn mi_within_information_bounds() {
    let rng = SeededRng::new(5);
    for &p in &[0.2, 0.5, 0.9] {
        let params = poisson(p);
        let hx = params.input_entropy_bits();
        for scheme in [Scheme::Singlets, Scheme::Pairs, Scheme::Triplets, Scheme::Quadruplet] {
            for &t in &[0.05, 1.0, 20.0] {
                let alloc = allocation_for(&scheme, t).unwrap();
                let mi = mutual_information(ChannelKind::Poisson, &alloc, &params, 20_000, &rng).unwrap();
                assert!(mi.value >= -3.0 * mi.stderr, "{scheme:?} T={t} p={p}: {mi:?}");
                assert!(mi.value <= hx + 3.0 * mi.stderr, "{scheme:?} T={t} p={p}: {mi:?}");
                if scheme == Scheme::Quadruplet {
                    assert!(mi.value <= quadruplet_mi_limit(&params) + 3.0 * mi.stderr);
                }
            }
        }
    }
}

#[test]
fn large_budget_singlets_approach_input_entropy() {
    let params = poisson(0.5);
    let alloc = allocation_for(&Scheme::Singlets, 100.0).unwrap();
    let mi = mutual_information(ChannelKind::Poisson, &alloc, &params, 20_000, &SeededRng::new(6)).unwrap();
    assert!(mi.value > 3.9 && mi.value <= 4.0 + 3.0 * mi.stderr, "{mi:?}");
}

#[test]
fn relabeling_targets_leaves_mi_unchanged() {
    let mut t = [0.0; N_ROWS];
    t[..4].copy_from_slice(&[0.05, 0.1, 0.2, 0.3]);
    t[4..10].copy_from_slice(&[0.02, 0.04, 0.06, 0.08, 0.1, 0.12]);
    t[10..14].copy_from_slice(&[0.03, 0.07, 0.11, 0.15]);
    t[14] = 0.1;
    // targets 0 and 3 exchanged: rows 01<->13, 02<->23, 012<->123 follow
    let mut swapped = t;
    for (i, j) in [(0, 3), (4, 8), (5, 9), (10, 13)] {
        swapped.swap(i, j);
    }
    let params = poisson(0.3);
    let rng = SeededRng::new(7);
    let a = mutual_information(ChannelKind::Poisson, &TimeAllocation::new(t).unwrap(), &params, 50_000, &rng).unwrap();
    let b = mutual_information(ChannelKind::Poisson, &TimeAllocation::new(swapped).unwrap(), &params, 50_000, &rng)
        .unwrap();
    assert_eq!(a.n_samples, b.n_samples);
    assert!((a.value - b.value).abs() < 3.0 * a.combined_stderr(&b), "{a:?} vs {b:?}");
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let alloc = TimeAllocation::new(std::array::from_fn(|i| 0.03 * (i + 1) as f64)).unwrap();
    let run = |workers: usize| {
        pool(workers).install(|| {
            let rng = SeededRng::new(99);
            (
                mutual_information(ChannelKind::Poisson, &alloc, &poisson(0.4), 30_000, &rng).unwrap(),
                mutual_information(ChannelKind::Gaussian, &alloc, &gaussian(0.4), 30_000, &rng).unwrap(),
                estimate_pd(ChannelKind::Gaussian, &alloc, &gaussian(0.4), 30_000, &rng).unwrap(),
            )
        })
    };
    let one = run(1);
    for w in [2, 4, 8] {
        assert_eq!(run(w), one);
    }
}

#[test]
fn pd_respects_prior_floor() {
    let rng = SeededRng::new(8);
    for &p in &[0.2, 0.5, 0.7] {
        let params = gaussian(p);
        let floor = (0..16)
            .map(|h| quadsense::model::hypothesis_prior(quadsense::Hypothesis::new(h).unwrap(), &params))
            .fold(0.0, f64::max);
        for scheme in [Scheme::Singlets, Scheme::Triplets, Scheme::Quadruplet] {
            let alloc = allocation_for(&scheme, 0.2).unwrap();
            let pd = estimate_pd(ChannelKind::Gaussian, &alloc, &params, 20_000, &rng).unwrap();
            assert!((0.0..=1.0).contains(&pd.value));
            assert!(pd.value >= floor - 3.0 * pd.stderr, "{scheme:?} p={p}: {pd:?}");
        }
    }
}
