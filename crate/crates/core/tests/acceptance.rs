//! One pass/fail line per acceptance criterion. Run with
//! `cargo test -p adastop --test acceptance -- --nocapture`.

use std::path::Path;

use adastop::boundary::{allocate_budget, reject_boundary};
use adastop::io::{decode_state, encode_state};
use adastop::rng::{rng_for, InterimStream};
use adastop::sim::asymptotic::linear_grid;
use adastop::sim::scenario::read_populations;
use adastop::sim::{
    estimate_fwe_and_power, load_scenario, power_table, randomization_cdf_check, scaled_first_boundary, tau,
    AgentSpec, PowerTableConfig, Scenario, SweepPoint,
};
use adastop::stats::{max_statistic, pair_statistic};
use adastop::step_down::step_down_test;
use adastop::two_agent::{TwoAgentDecision, TwoAgentTest};
use adastop::{
    AdaStop, Comparison, DistributionSpec, EvaluationStore, PermutationPool, PoolMode, ScenarioConfig, Status,
    TestConfig,
};
use rand::Rng;

struct Line {
    id: &'static str,
    pass: Option<bool>,
    detail: String,
}

fn se(p: f64, m: usize) -> f64 {
    (p * (1.0 - p) / m as f64).sqrt()
}

fn sweep(file: &str, replications: usize) -> Vec<SweepPoint> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(file);
    match load_scenario(&path).unwrap() {
        Scenario::Sweep(mut points) => {
            for p in &mut points {
                p.config.replications = replications;
            }
            points
        }
        Scenario::PowerTable(_) => panic!("{file} is not a sweep"),
    }
}

fn exact_level() -> Line {
    let m = 20_000;
    let agents = vec![
        AgentSpec::new("A", DistributionSpec::normal(0.0, 1.0)),
        AgentSpec::new("B", DistributionSpec::normal(0.0, 1.0)),
    ];
    let config = ScenarioConfig::new(agents, TestConfig::new(4, 1).with_seed(101), m);
    let rate = estimate_fwe_and_power(&config).unwrap().comparisons[0].rate;
    let target = 1.0 / 35.0;
    let tol = 3.0 * se(target, m);
    Line {
        id: "1 exact level N=4 K=1",
        pass: Some((rate - target).abs() <= tol),
        detail: format!("rate {rate:.4}, target {target:.4} ± {tol:.4} (M={m})"),
    }
}

fn case1() -> Line {
    let mut worst: f64 = 0.0;
    let mut rates = Vec::new();
    for point in sweep("case1.toml", 2000) {
        let rate = estimate_fwe_and_power(&point.config).unwrap().comparisons[0].rate;
        rates.push(format!("{}:{rate:.4}", point.delta.unwrap()));
        worst = worst.max(rate);
    }
    Line {
        id: "2 case 1 mean-level error",
        pass: Some(worst <= 0.11),
        detail: format!("max {worst:.4} <= 0.11; by delta {} (M=2000)", rates.join(" ")),
    }
}

fn case2() -> Line {
    let m = 2000;
    let mut null = None;
    let mut power = None;
    for point in sweep("case2.toml", m) {
        let d = point.delta.unwrap();
        if d == 0.0 || d == 0.8 {
            let rate = estimate_fwe_and_power(&point.config).unwrap().comparisons[0].rate;
            if d == 0.0 {
                null = Some(rate);
            } else {
                power = Some(rate);
            }
        }
    }
    let (null, power) = (null.unwrap(), power.unwrap());
    let cap = 0.05 + 3.0 * se(0.05, m);
    Line {
        id: "3 case 2 power and level",
        pass: Some(power >= 0.9 && null <= cap),
        detail: format!("delta=0.8 rate {power:.4} >= 0.9; delta=0 rate {null:.4} <= {cap:.4} (M={m})"),
    }
}

fn case3() -> Line {
    let points = sweep("case3.toml", 2000);
    let report = estimate_fwe_and_power(&points[0].config).unwrap();
    let dist = report.fwe_distribution.unwrap().rate;
    let mean = report.fwe_mean.unwrap().rate;
    Line {
        id: "4 case 3 ten agents, early accept",
        pass: Some((0.005..=0.035).contains(&dist) && (0.03..=0.065).contains(&mean)),
        detail: format!("distribution FWE {dist:.4} in [0.005, 0.035]; mean FWE {mean:.4} in [0.03, 0.065] (M=2000)"),
    }
}

fn strong_fwe() -> Line {
    let m = 5000;
    let points = sweep("strong_fwe.toml", m);
    let config = &points[0].config;
    let report = estimate_fwe_and_power(config).unwrap();
    let fwe = report.fwe_distribution.as_ref().unwrap();
    let truth = config.true_hypotheses().unwrap();
    let false_power = report
        .comparisons
        .iter()
        .zip(&truth)
        .filter(|(_, &t)| !t)
        .map(|(c, _)| c.rate)
        .fold(1.0, f64::min);
    let cap = 0.05 + 3.0 * se(0.05, m);
    Line {
        id: "5 strong FWE, two separated pairs",
        pass: Some(fwe.rate <= cap),
        detail: format!(
            "FWE {:.4} <= {cap:.4} over {} true hypotheses; min power on false ones {false_power:.4} (M={m})",
            fwe.rate, fwe.hypotheses
        ),
    }
}

fn asymptotics() -> Line {
    let p = DistributionSpec::normal(0.0, 1.0);
    let mut b: Vec<f64> = (0..50)
        .map(|s| scaled_first_boundary(&p, &p, 500, 0.05, 10_000, 1000 + s).unwrap())
        .collect();
    b.sort_by(f64::total_cmp);
    let median = 0.5 * (b[24] + b[25]);
    let target = 2f64.sqrt() * 1.959964;
    let rel = (median - target).abs() / target;
    let grid = linear_grid(-3.0 * tau(&p, &p).unwrap(), 3.0 * tau(&p, &p).unwrap(), 121);
    let d5 = randomization_cdf_check(&p, &p, 5, &grid, 20_000, 7).unwrap().distance;
    let d200 = randomization_cdf_check(&p, &p, 200, &grid, 20_000, 7).unwrap().distance;
    Line {
        id: "6 asymptotic boundary and CDF",
        pass: Some(rel <= 0.07 && d200 <= 0.05 && d200 < d5),
        detail: format!(
            "median B/sqrt(N) at N=500 {median:.4} vs {target:.4} ({:.1}% off, <= 7%); sup distance N=200 {d200:.4} <= 0.05, N=5 {d5:.4}",
            100.0 * rel
        ),
    }
}

fn supplied_populations() -> Line {
    let id = "7 power on supplied populations (optional)";
    let Some(path) = std::env::var_os("ADASTOP_POWER_POPULATIONS") else {
        return Line {
            id,
            pass: None,
            detail: "ADASTOP_POWER_POPULATIONS not set".into(),
        };
    };
    let (labels, populations) = read_populations(Path::new(&path)).unwrap();
    let config = PowerTableConfig {
        labels,
        populations,
        group_sizes: vec![4],
        interims: vec![5],
        alpha: 0.05,
        permutations: 10_000,
        replications: 1000,
        seed: 1,
    };
    let cell = &power_table(&config).unwrap()[0];
    Line {
        id,
        pass: Some((cell.power - 0.82).abs() <= 0.06 && (cell.mean_seeds - 12.08).abs() <= 1.5),
        detail: format!(
            "power {:.3} vs 0.82 ± 0.06; mean seeds {:.2} vs 12.08 ± 1.5 (M=1000)",
            cell.power, cell.mean_seeds
        ),
    }
}

fn scores(n: usize, rng: &mut impl Rng, mean: f64) -> Vec<f64> {
    (0..n).map(|_| mean + rng.random::<f64>()).collect()
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("A{i}")).collect()
}

fn feed(test: &mut AdaStop, batch: &[Vec<f64>]) {
    let needed = test.needed_agents();
    let b = batch.iter().zip(needed).map(|(s, n)| n.then(|| s.clone())).collect();
    test.interim_step(b).unwrap();
}

fn two_agent_matches(seed: u64) -> bool {
    let (n, k) = (3 + seed as usize % 4, 1 + seed as usize % 5);
    let config = TestConfig::new(n, k).with_seed(seed).with_permutations([50, 500, 10_000][seed as usize % 3]);
    let mut engine = AdaStop::new(config.clone(), labels(2)).unwrap();
    let mut direct = TwoAgentTest::new(config).unwrap();
    let mut rng = rng_for(seed, &[1]);
    let mut decision = None;
    while decision.is_none() {
        let (a, b) = (scores(n, &mut rng, 0.3), scores(n, &mut rng, 0.0));
        decision = direct.step(&a, &b).unwrap();
        engine.interim_step(vec![Some(a), Some(b)]).unwrap();
    }
    let rejects: Vec<f64> = engine.ledger().entries.iter().map(|e| e.reject).collect();
    let same = match (decision.unwrap(), engine.graph().status(0)) {
        (TwoAgentDecision::Reject { interim, first_larger }, Status::Rejected { larger, interim: i }) => {
            interim == i && first_larger == (larger == 0)
        }
        (TwoAgentDecision::Accept, Status::Accepted { .. }) => true,
        _ => false,
    };
    same && engine.is_stopped() && direct.boundaries() == &rejects[..]
}

fn step_down_matches(seed: u64) -> bool {
    let (agents, n) = (2 + seed as usize % 4, 2 + seed as usize % 5);
    let config = TestConfig::new(n, 1).with_seed(seed).with_permutations(300);
    let mut test = AdaStop::new(config, labels(agents)).unwrap();
    let mut rng = rng_for(seed, &[2]);
    let batch: Vec<Vec<f64>> = (0..agents).map(|a| scores(n, &mut rng, 0.3 * a as f64)).collect();
    feed(&mut test, &batch);
    let comparisons = test.graph().comparisons().to_vec();
    step_down_test(test.store(), &comparisons, test.pool(), 0.05).unwrap() == test.outcome().rejected()
}

fn exact_matches_monte_carlo() -> bool {
    let n = 6;
    let mut rng = rng_for(3, &[3]);
    let mut store = EvaluationStore::new(labels(2), n, 1).unwrap();
    store.push(vec![Some(scores(n, &mut rng, 0.2)), Some(scores(n, &mut rng, 0.0))]).unwrap();
    let c = Comparison::new(0, 1);
    let law = |requested: usize, cap: u64| {
        let mut pool = PermutationPool::new(n, requested, cap).unwrap();
        pool.extend(&InterimStream::new(5, 1)).unwrap();
        let v: Vec<f64> = pool.sequences().map(|s| pair_statistic(&store, c, &s).unwrap()).collect();
        (pool.mode(), v)
    };
    let (me, exact) = law(1000, 1 << 20);
    let (mm, mc) = law(20_000, 100);
    let tail = |v: &[f64], t: f64| v.iter().filter(|&&x| x > t).count() as f64 / v.len() as f64;
    me == PoolMode::Exact
        && mm == PoolMode::MonteCarlo
        && [0.2, 0.5, 1.0, 1.5].iter().all(|&t| {
            let pe = tail(&exact, t);
            (pe - tail(&mc, t)).abs() <= 4.0 * se(pe, mc.len()) + 1e-12
        })
}

fn parallel_deterministic() -> bool {
    let agents = vec![
        AgentSpec::new("A", DistributionSpec::normal(0.0, 1.0)),
        AgentSpec::new("B", DistributionSpec::normal(0.5, 1.0)),
        AgentSpec::new("C", DistributionSpec::normal(0.5, 1.0)),
    ];
    let config = ScenarioConfig::new(agents, TestConfig::new(4, 3).with_permutations(300).with_seed(9), 60);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_fwe_and_power(&config).unwrap())
    };
    run(1) == run(4)
}

fn affine_invariant(seed: u64) -> bool {
    let config = TestConfig::new(4, 3).with_seed(seed).with_permutations(300).with_beta(0.01);
    let mut rng = rng_for(seed, &[4]);
    let data: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|_| (0..3).map(|a| (0..4).map(|_| f64::from(rng.random_range(-100..100) + 30 * a)).collect()).collect())
        .collect();
    let run = |f: &dyn Fn(f64) -> f64| {
        let mut t = AdaStop::new(config.clone(), labels(3)).unwrap();
        for b in &data {
            if t.is_stopped() {
                break;
            }
            let mapped: Vec<Vec<f64>> = b.iter().map(|s| s.iter().map(|&x| f(x)).collect()).collect();
            feed(&mut t, &mapped);
        }
        t.graph().statuses().to_vec()
    };
    run(&|x| x) == run(&|x| 4.0 * x - 7.0) && run(&|x| x) == run(&|x| 0.25 * x + 3.0)
}

fn boundary_monotone(seed: u64) -> bool {
    let mut rng = rng_for(seed, &[5]);
    let mut t = AdaStop::new(TestConfig::new(4, 1).with_seed(seed).with_permutations(200), labels(4)).unwrap();
    let batch: Vec<Vec<f64>> = (0..4).map(|a| scores(4, &mut rng, 0.2 * a as f64)).collect();
    feed(&mut t, &batch);
    let all = t.graph().comparisons().to_vec();
    let budget = allocate_budget(1, 0.1, 1, t.pool().len(), 0.0);
    let bound = |set: &[Comparison]| {
        let law: Vec<f64> = t.pool().sequences().map(|s| max_statistic(t.store(), set, &s).unwrap()).collect();
        reject_boundary(&law, budget)
    };
    let full = bound(&all);
    (0..all.len()).all(|drop| {
        let mut sub = all.clone();
        sub.remove(drop);
        bound(&sub) <= full
    })
}

fn state_round_trip(seed: u64) -> bool {
    let config = TestConfig::new(5, 4).with_seed(seed).with_permutations(200).with_beta(0.01);
    let mut rng = rng_for(seed, &[6]);
    let data: Vec<Vec<Vec<f64>>> = (0..4).map(|_| (0..4).map(|a| scores(5, &mut rng, 0.15 * a as f64)).collect()).collect();
    let mut straight = AdaStop::new(config.clone(), labels(4)).unwrap();
    let mut resumed = AdaStop::new(config, labels(4)).unwrap();
    for b in &data[..2] {
        feed(&mut straight, b);
        feed(&mut resumed, b);
    }
    let text = encode_state(&resumed.to_state()).unwrap();
    let mut resumed = AdaStop::from_state(&decode_state(&text).unwrap()).unwrap();
    for b in &data[2..] {
        if straight.is_stopped() {
            break;
        }
        feed(&mut straight, b);
        feed(&mut resumed, b);
    }
    straight.to_state() == resumed.to_state()
}

fn equivalences() -> Line {
    let checks: [(&str, bool); 7] = [
        ("two-agent", (0..30).all(two_agent_matches)),
        ("step-down", (0..30).all(step_down_matches)),
        ("exact-vs-mc", exact_matches_monte_carlo()),
        ("parallel", parallel_deterministic()),
        ("affine", (0..20).all(affine_invariant)),
        ("monotone", (0..20).all(boundary_monotone)),
        ("state", (0..10).all(state_round_trip)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    Line {
        id: "8 equivalence properties",
        pass: Some(failed.is_empty()),
        detail: if failed.is_empty() {
            checks.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

#[test]
fn acceptance() {
    let criteria: [fn() -> Line; 8] = [
        exact_level,
        case1,
        case2,
        case3,
        strong_fwe,
        asymptotics,
        supplied_populations,
        equivalences,
    ];
    let mut failed = Vec::new();
    for criterion in criteria {
        let line = criterion();
        let tag = match line.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        println!("{tag}  {}: {}", line.id, line.detail);
        if line.pass == Some(false) {
            failed.push(line.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
