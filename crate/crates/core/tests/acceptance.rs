//! Acceptance criteria. Each test prints one `[criterion N] PASS|FAIL` line
//! and then asserts. Run with `--nocapture` to see the verdict lines.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::time::{Duration, Instant};

use common::{brute_nd, ie_hypervolume, mc_hypervolume, report, sign_test_p, sorted, v};
use mofql::env::Outcome;
use mofql::fql::{scalar_bellman_value, QTable};
use mofql::fuzzy::FiringStrengths;
use mofql::harness::demo::{brute_force_front, pareto_demo};
use mofql::harness::sweep::run_sweep;
use mofql::harness::train::{cmd_train, EPISODES_FILE, STORE_FILE};
use mofql::harness::{evaluate_greedy, evaluate_random, train, DemoShape, RunConfig, SweepGrid};
use mofql::learner::{LearnerParams, MoqStore};
use mofql::pareto::{
    hypervolume3, nd_filter, normalize_and_select, set_oplus, vec_oplus_set, NdSet, ObjectiveVector,
    Ray, RaySpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table_matrix() -> Vec<ObjectiveVector> {
    vec![
        v(12.0, 3.0, 2.0),
        v(9.0, 7.0, 5.0),
        v(3.0, 13.0, 2.0),
        v(6.0, 9.0, 8.0),
        v(4.0, 4.0, 10.0),
        v(1.0, 1.0, 14.0),
    ]
}

#[test]
fn criterion_01_selection_table() {
    let rows = table_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let start = Instant::now();
    let hvs: Vec<f64> = rows
        .iter()
        .map(|r| hypervolume3(&NdSet::singleton(*r)).unwrap())
        .collect();
    let sel = normalize_and_select(&hvs, 1.0, &mut rng).unwrap();
    let elapsed = start.elapsed();

    let norm = [0.0672, 0.2941, 0.0728, 0.4034, 0.1494, 0.0131];
    let prob = [0.1494, 0.1875, 0.1503, 0.2091, 0.1622, 0.1415];
    let hv_ok = hvs == [72.0, 315.0, 78.0, 432.0, 160.0, 14.0];
    let norm_err = (0..6).map(|i| (sel.normalized[i] - norm[i]).abs()).fold(0.0, f64::max);
    let prob_err = (0..6).map(|i| (sel.probabilities[i] - prob[i]).abs()).fold(0.0, f64::max);
    let argmax = (0..6).fold(0, |b, i| if sel.probabilities[i] > sel.probabilities[b] { i } else { b });
    let pass = hv_ok
        && norm_err <= 5e-5
        && prob_err <= 5e-5
        && argmax == 3
        && elapsed < Duration::from_millis(1);
    report(
        1,
        "hypervolume selection table",
        pass,
        &format!(
            "hv={hvs:?} max|dnorm|={norm_err:.2e} max|dprob|={prob_err:.2e} argmax=a{} time={elapsed:?}",
            argmax + 1
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_set_addition_examples() {
    let u = [v(2.0, 3.0, 1.0), v(3.0, 5.0, 2.0), v(2.0, 2.0, 1.0)];
    let vec_case = vec_oplus_set(v(1.0, 2.0, 4.0), &u).unwrap();
    let vec_ok = vec_case == [v(3.0, 5.0, 5.0), v(4.0, 7.0, 6.0), v(3.0, 4.0, 5.0)];

    let left = [v(12.0, 2.0, 3.0), v(9.0, 7.0, 5.0)];
    let right = [v(3.0, 13.0, 2.0), v(6.0, 9.0, 8.0), v(4.0, 4.0, 10.0)];
    let matrix = set_oplus(&left, &right).unwrap();
    let matrix_ok = matrix
        == [
            v(15.0, 15.0, 5.0),
            v(18.0, 11.0, 11.0),
            v(16.0, 6.0, 13.0),
            v(12.0, 20.0, 7.0),
            v(15.0, 16.0, 13.0),
            v(13.0, 11.0, 15.0),
        ];
    let pass = vec_ok && matrix_ok;
    report(
        2,
        "set addition examples",
        pass,
        &format!("vector case {vec_ok}, 2x3 + 3x3 case {matrix_ok} ({} rows)", matrix.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_03_bellman_examples() {
    let nd = nd_filter(&[v(4.8, 3.6, 2.6), v(5.4, 3.8, 5.8), v(7.2, 3.4, 6.0)]).unwrap();
    let nd_ok = nd.rows() == [v(5.4, 3.8, 5.8), v(7.2, 3.4, 6.0)];
    // rewards back-solved from the stated successor values
    let value = scalar_bellman_value(&[(3.0, 2.0), (1.0, 6.0), (2.0, 2.0)], 0.8).unwrap();
    let scalar_ok = (value - 5.8).abs() <= 1e-12;
    let pass = nd_ok && scalar_ok;
    report(
        3,
        "non-dominated and scalar Bellman examples",
        pass,
        &format!("nd rows {:?}, V*(s1)={value}", nd.rows().len()),
    );
    assert!(pass);
}

#[test]
fn criterion_04_nd_filter_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    let mut filter_time = Duration::ZERO;
    for case in 0..1000 {
        let n = rng.gen_range(1..=500);
        let lattice = case % 3 == 0;
        let points: Vec<ObjectiveVector> = (0..n)
            .map(|_| {
                if lattice {
                    v(
                        rng.gen_range(0..8) as f64,
                        rng.gen_range(0..8) as f64,
                        rng.gen_range(0..8) as f64,
                    )
                } else {
                    v(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }
            })
            .collect();
        let start = Instant::now();
        let ours = nd_filter(&points).unwrap();
        filter_time += start.elapsed();
        if sorted(ours.rows().to_vec()) != sorted(brute_nd(&points)) {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0 && filter_time < Duration::from_secs(5);
    report(
        4,
        "non-dominated filter vs quadratic oracle",
        pass,
        &format!("1000 clouds, {mismatches} mismatches, filter time {filter_time:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_hypervolume_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mc_rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst_ie = 0.0f64;
    let mut worst_mc = 0.0f64;
    for _ in 0..500 {
        let k = rng.gen_range(1..=5);
        let raw: Vec<ObjectiveVector> = (0..k)
            .map(|_| v(rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)))
            .collect();
        let set = nd_filter(&raw).unwrap();
        let ours = hypervolume3(&set).unwrap();
        let ie = ie_hypervolume(set.rows(), set.reference());
        worst_ie = worst_ie.max((ours - ie).abs() / ie);
        let mc = mc_hypervolume(set.rows(), set.reference(), 1_000_000, &mut mc_rng);
        worst_mc = worst_mc.max((ours - mc).abs() / ours);
    }
    let pass = worst_ie <= 1e-9 && worst_mc <= 0.02;
    report(
        5,
        "hypervolume vs inclusion-exclusion and Monte-Carlo",
        pass,
        &format!("500 sets, max rel err IE={worst_ie:.2e} MC={worst_mc:.4}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_front_demo() {
    let mut lines = Vec::new();
    let mut pass = true;
    for shape in DemoShape::ALL {
        let start = Instant::now();
        let demo = pareto_demo(shape, 500, 6);
        let elapsed = start.elapsed();
        let ok = match &demo {
            Ok(d) => {
                let oracle = brute_force_front(&d.points);
                let mutual = d.front.iter().all(|&i| {
                    d.front.iter().all(|&j| !d.points[i].dominates(&d.points[j]))
                });
                d.front == oracle && mutual && elapsed < Duration::from_secs(1)
            }
            Err(_) => false,
        };
        pass &= ok;
        let size = demo.map(|d| d.front.len()).unwrap_or(0);
        lines.push(format!("{shape}: {size} front points in {elapsed:?}"));
    }
    report(6, "synthetic front extraction", pass, &lines.join("; "));
    assert!(pass);
}

#[test]
fn criterion_07_scalar_equivalence() {
    let (alpha, gamma) = (0.05, 0.9);
    let ray = vec![Ray::new(0.3, 0.7).unwrap()];
    let params = LearnerParams {
        alpha,
        gamma,
        tau: 1.0,
        prune_limit: None,
    };
    let mut store = MoqStore::new(1, 2, ray, params).unwrap();
    let init = mofql::learner::INITIAL_Q.evade;
    let mut table = QTable::filled(1, 2, alpha, gamma, 1.0, init).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let phi = FiringStrengths::single(0);
    let mut worst = 0.0f64;
    let mut singleton = true;
    for _ in 0..10_000 {
        let a = rng.gen_range(0..2);
        let r: f64 = rng.gen_range(-1.0..2.0);
        let terminal = rng.gen_bool(0.05);
        store
            .train_step(&phi, &[a], ObjectiveVector::splat(r), &phi, terminal)
            .unwrap();
        table
            .td_update(&phi, &[a], r, (!terminal).then_some(&phi))
            .unwrap();
        for act in 0..2 {
            let rows = store.qset(0, act).rows();
            singleton &= rows.len() == 1;
            let q = table.get(0, act);
            for c in rows[0].to_array() {
                worst = worst.max((c - q).abs());
            }
        }
    }
    let pass = singleton && worst <= 1e-9;
    report(
        7,
        "scalar equivalence on the one-rule toy problem",
        pass,
        &format!("10^4 steps, max |dQ| = {worst:.2e}, singleton sets {singleton}"),
    );
    assert!(pass);
}

fn trend_base() -> RunConfig {
    RunConfig {
        episodes: 200,
        trajectory_every: 0,
        ..Default::default()
    }
}

const TREND_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Paired one-sided sign test over seeds: `hi` beats `lo`.
fn paired_sign(hi: &[f64], lo: &[f64]) -> (usize, f64) {
    let wins = hi.iter().zip(lo).filter(|(h, l)| h > l).count();
    (wins, sign_test_p(wins, hi.len()))
}

#[test]
fn criterion_08_09_sweep_trends_and_scaling() {
    let base = trend_base();
    let rays = run_sweep(
        &base,
        &SweepGrid {
            ray_counts: vec![5, 50],
            taus: vec![2.0],
            gammas: vec![0.9],
            seeds: TREND_SEEDS.to_vec(),
        },
    )
    .unwrap();
    let discount = run_sweep(
        &base,
        &SweepGrid {
            ray_counts: vec![5],
            taus: vec![2.0],
            gammas: vec![0.1, 0.9],
            seeds: TREND_SEEDS.to_vec(),
        },
    )
    .unwrap();
    let (h5, h50) = (&rays[0], &rays[1]);
    let (g01, g09) = (&discount[0], &discount[1]);

    let (h_wins, h_p) = paired_sign(&h50.final_hypervolumes, &h5.final_hypervolumes);
    let (g_wins, g_p) = paired_sign(&g09.final_hypervolumes, &g01.final_hypervolumes);
    let trend = h50.mean_final_hypervolume() > h5.mean_final_hypervolume()
        && g09.mean_final_hypervolume() > g01.mean_final_hypervolume()
        && h_p < 0.05
        && g_p < 0.05;
    report(
        8,
        "hypervolume trends over ray count and discount",
        trend,
        &format!(
            "H=50 {:.3} vs H=5 {:.3} ({h_wins}/5 wins, p={h_p:.4}); gamma 0.9 {:.3} vs 0.1 {:.3} ({g_wins}/5 wins, p={g_p:.4})",
            h50.mean_final_hypervolume(),
            h5.mean_final_hypervolume(),
            g09.mean_final_hypervolume(),
            g01.mean_final_hypervolume(),
        ),
    );

    let ratio = h50.mean_episode_time_ms() / h5.mean_episode_time_ms();
    let scaling = ratio >= 5.0;
    report(
        9,
        "per-episode time grows with ray count",
        scaling,
        &format!(
            "H=50 {:.2} ms vs H=5 {:.2} ms per episode, ratio {ratio:.1}",
            h50.mean_episode_time_ms(),
            h5.mean_episode_time_ms()
        ),
    );
    assert!(trend && scaling);
}

#[test]
fn criterion_10_policy_beats_random_steering() {
    let config = RunConfig {
        trajectory_every: 0,
        ..Default::default()
    };
    let trained = train(&config).unwrap();
    // evaluation starts are jittered so the 100 episodes differ; both
    // policies see the same start sequence
    let mut eval_cfg = config.clone();
    eval_cfg.seed = 1000;
    eval_cfg.env.start_jitter = 0.5;
    let ray = Ray::new(FRAC_PI_4, FRAC_PI_2).unwrap();
    let greedy = evaluate_greedy(&trained.store, &eval_cfg, ray, 100).unwrap();
    let random = evaluate_random(&eval_cfg, 100).unwrap();
    let (g, r) = (greedy.rate(Outcome::Reached), random.rate(Outcome::Reached));
    let pass = g > r;
    let tally = |s: &mofql::harness::EvalSummary| {
        [Outcome::Reached, Outcome::Captured, Outcome::Collided, Outcome::Timeout]
            .iter()
            .map(|o| format!("{o}={}", s.count(*o)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    report(
        10,
        "greedy policy reaches the target more often than random steering",
        pass,
        &format!("greedy [{}] vs random [{}]", tally(&greedy), tally(&random)),
    );
    assert!(pass);
}

#[test]
fn criterion_11_determinism() {
    let config = RunConfig {
        episodes: 5,
        seed: 11,
        ..Default::default()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_train(&config, a.path()).unwrap();
    cmd_train(&config, b.path()).unwrap();
    let same = |f: &str| std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap();
    let (episodes, store) = (same(EPISODES_FILE), same(STORE_FILE));
    let pass = episodes && store;
    report(
        11,
        "byte-identical artifacts for identical config and seed",
        pass,
        &format!("episodes.csv identical {episodes}, store identical {store}"),
    );
    assert!(pass);
}

#[test]
fn count_mode_rays_are_supported_in_sweeps() {
    // guards the sweep path used above: count-mode ray specs build stores
    let cfg = mofql::harness::sweep::cell_config(&trend_base(), 50, 2.0, 0.9, 0);
    assert_eq!(cfg.rays, RaySpec::Count(50));
    assert_eq!(cfg.ray_list().unwrap().len(), 50);
}
