use adastop::io::{decode_state, encode_state};
use adastop::rng::{rng_for, InterimStream};
use adastop::sim::{estimate_fwe_and_power, AgentSpec};
use adastop::step_down::step_down_test;
use adastop::stats::pair_statistic;
use adastop::two_agent::{TwoAgentDecision, TwoAgentTest};
use adastop::{
    AdaStop, Comparison, DistributionSpec, PermutationPool, PoolMode, ScenarioConfig, SignClass, Status, TestConfig,
};
use proptest::prelude::*;
use rand::Rng;

fn scores(n: usize, rng: &mut impl Rng, mean: f64) -> Vec<f64> {
    (0..n).map(|_| mean + rng.random::<f64>()).collect()
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("A{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn two_agent_procedure_matches_engine(
        n in 2usize..7,
        k in 1usize..6,
        m in prop_oneof![Just(40usize), Just(500), Just(10_000)],
        gap in 0.0f64..0.6,
        seed in 0u64..10_000,
    ) {
        let config = TestConfig::new(n, k).with_seed(seed).with_permutations(m);
        let mut engine = AdaStop::new(config.clone(), labels(2)).unwrap();
        let mut direct = TwoAgentTest::new(config).unwrap();
        let mut rng = rng_for(seed, &[7]);
        let mut decision = None;
        for _ in 0..k {
            let (a, b) = (scores(n, &mut rng, gap), scores(n, &mut rng, 0.0));
            decision = direct.step(&a, &b).unwrap();
            engine.interim_step(vec![Some(a), Some(b)]).unwrap();
            if decision.is_some() {
                break;
            }
        }
        prop_assert!(engine.is_stopped());
        let rejects: Vec<f64> = engine.ledger().entries.iter().map(|e| e.reject).collect();
        prop_assert_eq!(direct.boundaries(), &rejects[..]);
        match (decision.unwrap(), engine.graph().status(0)) {
            (TwoAgentDecision::Reject { interim, first_larger }, Status::Rejected { larger, interim: i }) => {
                prop_assert_eq!(interim, i);
                prop_assert_eq!(first_larger, larger == 0);
            }
            (TwoAgentDecision::Accept, Status::Accepted { interim, .. }) => prop_assert_eq!(interim, k),
            (d, s) => prop_assert!(false, "{d:?} vs {s:?}"),
        }
    }

    #[test]
    fn one_interim_engine_is_the_step_down_test(
        agents in 2usize..6,
        n in 2usize..6,
        m in prop_oneof![Just(30usize), Just(300)],
        seed in 0u64..10_000,
    ) {
        let config = TestConfig::new(n, 1).with_seed(seed).with_permutations(m);
        let mut test = AdaStop::new(config, labels(agents)).unwrap();
        let mut rng = rng_for(seed, &[11]);
        let batch = (0..agents).map(|a| Some(scores(n, &mut rng, 0.3 * a as f64))).collect();
        test.interim_step(batch).unwrap();
        let comparisons: Vec<Comparison> = test.graph().comparisons().to_vec();
        let rejected = step_down_test(test.store(), &comparisons, test.pool(), 0.05).unwrap();
        prop_assert_eq!(rejected, test.outcome().rejected());
    }
}

/// Relabelling 8 distinct scores 4 + 4 in all 70 ways: only the two most
/// extreme splits are rejected at level 0.05, a rate of exactly 2/70.
#[test]
fn exact_level_over_all_relabellings() {
    let values = [0.3, 1.7, 2.2, 4.1, 5.9, 6.05, 8.4, 9.95];
    let mut rejected = 0;
    let mut total = 0;
    for mask in 0u32..256 {
        if mask.count_ones() != 4 {
            continue;
        }
        let (a, b): (Vec<f64>, Vec<f64>) = {
            let (x, y): (Vec<_>, Vec<_>) = (0..8).partition(|&i| mask >> i & 1 == 1);
            (x.iter().map(|&i| values[i]).collect(), y.iter().map(|&i| values[i]).collect())
        };
        let mut t = AdaStop::new(TestConfig::new(4, 1), labels(2)).unwrap();
        t.interim_step(vec![Some(a), Some(b)]).unwrap();
        assert_eq!(t.pool().mode(), PoolMode::Exact);
        assert_eq!(t.pool().len(), 35);
        total += 1;
        rejected += usize::from(t.outcome().rejected()[0]);
    }
    assert_eq!(total, 70);
    assert_eq!(rejected, 2);
}

/// Tail frequencies of an exact and a Monte Carlo pool on the same data
/// agree within binomial error.
#[test]
fn monte_carlo_pool_tracks_the_exact_pool() {
    let n = 6;
    let mut rng = rng_for(3, &[1]);
    let a = scores(n, &mut rng, 0.2);
    let b = scores(n, &mut rng, 0.0);
    let mut store = adastop::EvaluationStore::new(labels(2), n, 1).unwrap();
    store.push(vec![Some(a), Some(b)]).unwrap();
    let c = Comparison::new(0, 1);

    let mut exact = PermutationPool::new(n, 1_000, 1 << 20).unwrap();
    exact.extend(&InterimStream::new(5, 1)).unwrap();
    assert_eq!(exact.mode(), PoolMode::Exact);
    let m = 20_000;
    let mut mc = PermutationPool::new(n, m, 100).unwrap();
    mc.extend(&InterimStream::new(5, 1)).unwrap();
    assert_eq!(mc.mode(), PoolMode::MonteCarlo);
    assert_eq!(mc.len(), m);

    let law = |pool: &PermutationPool| -> Vec<f64> { pool.sequences().map(|s| pair_statistic(&store, c, &s).unwrap()).collect() };
    let (le, lm) = (law(&exact), law(&mc));
    for t in [0.2, 0.5, 1.0, 1.5] {
        let pe = le.iter().filter(|&&v| v > t).count() as f64 / le.len() as f64;
        let pm = lm.iter().filter(|&&v| v > t).count() as f64 / m as f64;
        let se = (pe * (1.0 - pe) / m as f64).sqrt();
        assert!((pe - pm).abs() <= 4.0 * se + 1e-12, "t={t}: exact {pe} vs mc {pm}");
    }
}

#[test]
fn random_classes_are_uniform() {
    let draws = 100_000;
    let mut rng = rng_for(42, &[3]);
    let classes: Vec<SignClass> = adastop::perm::enumerate_classes(2, 100).unwrap();
    assert_eq!(classes.len(), 3);
    let mut counts = [0usize; 3];
    for _ in 0..draws {
        let c = SignClass::random(2, &mut rng).canonical();
        counts[classes.iter().position(|x| *x == c).unwrap()] += 1;
    }
    let tol = 5.0 * (2.0 / 9.0 / draws as f64).sqrt();
    for c in counts {
        assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < tol, "{counts:?}");
    }
}

#[test]
fn monte_carlo_is_independent_of_thread_count() {
    let agents = vec![
        AgentSpec::new("A", DistributionSpec::normal(0.0, 1.0)),
        AgentSpec::new("B", DistributionSpec::normal(0.5, 1.0)),
        AgentSpec::new("C", DistributionSpec::normal_mixture(0.0, 0.5, 1.0, 0.5)),
    ];
    let config = ScenarioConfig::new(agents, TestConfig::new(4, 3).with_permutations(300).with_seed(9), 40);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_fwe_and_power(&config).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
}

fn resume_batches(agents: usize, n: usize, k: usize) -> Vec<Vec<Vec<f64>>> {
    let mut rng = rng_for(17, &[2]);
    (0..k)
        .map(|_| (0..agents).map(|a| scores(n, &mut rng, 0.15 * a as f64)).collect())
        .collect()
}

fn feed(test: &mut AdaStop, batch: &[Vec<f64>]) {
    let needed = test.needed_agents();
    let b = batch.iter().zip(needed).map(|(s, n)| n.then(|| s.clone())).collect();
    test.interim_step(b).unwrap();
}

#[test]
fn resumed_test_matches_uninterrupted_run() {
    for (m, beta) in [(10_000, 0.0), (200, 0.01), (50, 0.0)] {
        let config = TestConfig::new(5, 4).with_permutations(m).with_beta(beta).with_seed(m as u64);
        let data = resume_batches(4, 5, 4);
        let mut straight = AdaStop::new(config.clone(), labels(4)).unwrap();
        let mut resumed = AdaStop::new(config, labels(4)).unwrap();
        for batch in &data[..2] {
            feed(&mut straight, batch);
            feed(&mut resumed, batch);
        }
        let text = encode_state(&resumed.to_state()).unwrap();
        let mut resumed = AdaStop::from_state(&decode_state(&text).unwrap()).unwrap();
        assert_eq!(encode_state(&resumed.to_state()).unwrap(), text);
        for batch in &data[2..] {
            if straight.is_stopped() {
                break;
            }
            feed(&mut straight, batch);
            feed(&mut resumed, batch);
        }
        assert_eq!(straight.to_state(), resumed.to_state());
        assert_eq!(straight.outcome(), resumed.outcome());
    }
}
