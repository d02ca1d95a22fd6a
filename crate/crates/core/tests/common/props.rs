//! Property suites, runnable from ordinary tests and from the acceptance report.

use std::f64::consts::PI;

use atg_core::eval::model_error;
use atg_core::learner::{intrinsic_reward, value_update, ActionSet, Learner, LearnerConfig, LhsGrid, Method};
use atg_core::linalg::Matrix;
use atg_core::model::{ActionKind, AtgModel, Experience};
use atg_core::sim::{SimConfig, SimWorld};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const NODES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

pub struct Suite {
    pub name: &'static str,
    pub cases: u32,
    pub run: fn(u32) -> Result<(), String>,
}

/// 10⁴ generated cases in total.
pub const SUITES: [Suite; 6] = [
    Suite { name: "LHS stratification", cases: 2000, run: lhs_latin },
    Suite { name: "reward bounds", cases: 2000, run: reward_bounds },
    Suite { name: "Q bound", cases: 1500, run: q_bound },
    Suite { name: "model_error range and identity", cases: 2000, run: model_error_range },
    Suite { name: "serialization round-trip", cases: 1500, run: round_trip },
    Suite { name: "seed determinism", cases: 1000, run: determinism },
];

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn stratum(x: f64, (lo, hi): (f64, f64), n: usize) -> usize {
    (((x - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)
}

fn rho_strategy(kind: ActionKind) -> BoxedStrategy<Vec<f64>> {
    let ranges: Vec<_> = kind.bounds().iter().map(|&(lo, hi)| lo..=hi).collect();
    ranges.boxed()
}

fn experience(kinds: Vec<ActionKind>) -> impl Strategy<Value = Experience<f64>> {
    (proptest::sample::select(kinds), 0..NODES.len(), 0..NODES.len()).prop_flat_map(|(kind, s, d)| {
        rho_strategy(kind).prop_map(move |rho| Experience {
            s: NODES[s].into(),
            kind,
            rho,
            s_prime: NODES[d].into(),
        })
    })
}

fn experiences(kinds: &[ActionKind], len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Experience<f64>>> {
    prop::collection::vec(experience(kinds.to_vec()), len)
}

fn empty_model() -> AtgModel<f64> {
    let mut m = AtgModel::new(1e-6);
    for n in NODES {
        m.get_or_create_node(n, &[]).unwrap();
    }
    m
}

fn model_from(exps: &[Experience<f64>]) -> AtgModel<f64> {
    let mut m = empty_model();
    for e in exps {
        m.record_experience(e).unwrap();
    }
    m
}

fn replay(model: &mut AtgModel<f64>, edge: &atg_core::Edge) {
    for rho in &edge.samples {
        model
            .record_experience(&Experience {
                s: edge.src.clone(),
                kind: edge.kind,
                rho: rho.clone(),
                s_prime: edge.dst.clone(),
            })
            .unwrap();
    }
}

/// Every cycle of a grid uses each stratum exactly once along every dimension.
pub fn lhs_latin(cases: u32) -> Result<(), String> {
    let strategy = (
        prop_oneof![Just(ActionKind::Orbit), Just(ActionKind::Grasp)],
        1usize..24,
        any::<u64>(),
        1usize..4,
    );
    check(cases, strategy, |(kind, strata, seed, cycles)| {
        let mut g = LhsGrid::new(kind, strata, seed).unwrap();
        prop_assert_eq!(g.cycle_len(), strata);
        for c in 0..cycles {
            let draws: Vec<Vec<f64>> = (0..strata).map(|_| g.draw()).collect();
            prop_assert_eq!(g.cycles_completed(), c as u64 + 1);
            for (d, &(lo, hi)) in kind.bounds().iter().enumerate() {
                prop_assert!(draws.iter().all(|x| x[d] >= lo && x[d] <= hi));
                let mut seen: Vec<usize> = draws.iter().map(|x| stratum(x[d], (lo, hi), strata)).collect();
                seen.sort_unstable();
                prop_assert_eq!(seen, (0..strata).collect::<Vec<_>>());
            }
        }
        Ok(())
    })
}

pub fn reward_bounds(cases: u32) -> Result<(), String> {
    let strategy = (experiences(&ActionKind::ALL, 1..30), 0.01f64..5.0, 0.1f64..100.0);
    check(cases, strategy, |(exps, r_max, wide_var)| {
        let config = LearnerConfig {
            r_max,
            wide_var,
            ..LearnerConfig::default()
        };
        let mut m = empty_model();
        for e in &exps {
            let r = intrinsic_reward(&m.record_experience(e).unwrap(), &config);
            prop_assert!((0.0..=r_max).contains(&r), "reward {}", r);
        }
        Ok(())
    })
}

pub fn q_bound(cases: u32) -> Result<(), String> {
    let strategy = (
        experiences(&ActionKind::ALL, 1..40),
        0.01f64..=1.0,
        0.0f64..0.99,
        0.01f64..3.0,
    );
    check(cases, strategy, |(exps, alpha, gamma, r_max)| {
        let config = LearnerConfig {
            alpha,
            gamma,
            r_max,
            ..LearnerConfig::default()
        };
        let bound = config.q_bound();
        let mut m = empty_model();
        for e in &exps {
            let out = m.record_experience(e).unwrap();
            let r = intrinsic_reward(&out, &config);
            value_update(&mut m, &out.edge, r, &config).unwrap();
            for edge in m.edges() {
                prop_assert!(edge.q >= 0.0 && edge.q <= bound, "q {} bound {}", edge.q, bound);
            }
        }
        Ok(())
    })
}

/// Range, identity and monotonicity under adding a correct edge.
pub fn model_error_range(cases: u32) -> Result<(), String> {
    let orbit = [ActionKind::Orbit];
    let strategy = (
        experiences(&orbit, 1..40),
        experiences(&orbit, 0..40),
        prop::collection::vec(any::<bool>(), 40),
    );
    check(cases, strategy, |(truth, learned, keep)| {
        let truth = model_from(&truth);
        prop_assert_eq!(model_error(&truth, &truth).unwrap(), 0.0);
        let e = model_error(&model_from(&learned), &truth).unwrap();
        prop_assert!((0.0..=PI).contains(&e), "error {}", e);

        let true_edges: Vec<_> = truth.edges().cloned().collect();
        let (kept, missing): (Vec<_>, Vec<_>) = true_edges.iter().zip(&keep).partition(|(_, k)| **k);
        let mut partial = empty_model();
        for (edge, _) in &kept {
            replay(&mut partial, edge);
        }
        let before = model_error(&partial, &truth).unwrap();
        prop_assert!((0.0..=PI).contains(&before));
        if let Some((edge, _)) = missing.first() {
            replay(&mut partial, edge);
            prop_assert!(model_error(&partial, &truth).unwrap() <= before + 1e-12);
        }
        Ok(())
    })
}

pub fn round_trip(cases: u32) -> Result<(), String> {
    let strategy = (
        experiences(&ActionKind::ALL, 0..25),
        prop::collection::vec((0usize..4, prop::array::uniform3(-1.0f64..1.0), 0.0f64..1.0), 0..4),
        prop::collection::vec(0.0f64..1.25, 25),
    );
    check(cases, strategy, |(exps, feats, qs)| {
        let mut m = AtgModel::new(1e-6);
        let mut ids = Vec::new();
        for (tag, pos, var) in &feats {
            let cov = Matrix::from_diagonal(&[*var, var / 2.0, var / 3.0]);
            ids.push(m.upsert_feature("ARtag", &tag.to_string(), *pos, cov));
        }
        ids.sort_unstable();
        ids.dedup();
        for (i, n) in NODES.iter().enumerate() {
            let own: Vec<usize> = ids.iter().copied().filter(|id| id % 3 == i % 3).collect();
            m.get_or_create_node(n, &own).unwrap();
        }
        for e in &exps {
            m.record_experience(e).unwrap();
        }
        let keys: Vec<_> = m.edges().map(|e| e.key()).collect();
        for (k, q) in keys.iter().zip(&qs) {
            m.set_q(k, *q).unwrap();
        }
        let text = m.to_document_with_header(&["seed: 1".to_string()]).unwrap();
        prop_assert_eq!(AtgModel::from_document(&text).unwrap(), m);
        Ok(())
    })
}

pub fn determinism(cases: u32) -> Result<(), String> {
    check(cases, (any::<u64>(), any::<bool>(), any::<bool>()), |(seed, extended, baseline)| {
        let actions = if extended { ActionSet::OrbitGrasp } else { ActionSet::Orbit };
        let method = if baseline { Method::Baseline } else { Method::Proposed };
        let config = LearnerConfig {
            seed,
            actions,
            max_actions: 30,
            ..LearnerConfig::default()
        };
        let sim = SimConfig {
            seed,
            ..SimConfig::default()
        };
        let run = || {
            let world = SimWorld::new(sim.clone(), seed).unwrap();
            Learner::new(world, config.clone(), method).unwrap().run().unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(&a.log, &b.log);
        prop_assert_eq!(a.model, b.model);
        Ok(())
    })
}
