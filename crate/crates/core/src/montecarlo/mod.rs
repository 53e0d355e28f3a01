//! Verification oracles: exact enumeration of every SRSWOR sample and seeded
//! Monte Carlo replication.
//!
//! Replicate `r` of a run with seed `s` draws from a ChaCha20 stream keyed by
//! `s` with stream id `r`, so every replicate is reproducible on its own and
//! results do not depend on scheduling. Replicates are aggregated in index
//! order with compensated summation.

mod synthetic;

pub use synthetic::{generate_population, AuxiliaryShape, GeneratedPopulation, SyntheticSpec};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::population::{
    compute_population_params, sample_stats_unchecked, Design, PopulationFrame, PopulationParams,
};
use crate::theory;

/// Identifies the random stream construction in reports.
pub const GENERATOR: &str = "ChaCha20 (rand_chacha 0.9), key = seed, stream = replicate index";

/// Largest number of subsets [`enumerate_exact`] will visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

const CHUNK: usize = 4096;

/// The random stream of one replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Draws `n` distinct unit indices uniformly from `0..N`.
pub fn draw_srswor<R: Rng + ?Sized>(
    frame: &PopulationFrame,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let population = frame.len();
    if n < 2 || n > population {
        return Err(Error::InvalidDesign { n, population });
    }
    Ok(rand::seq::index::sample(rng, population, n).into_vec())
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    count: u64,
    failures: u64,
    value: CompensatedSum,
    sq_err: CompensatedSum,
    sq_err2: CompensatedSum,
}

impl Accumulator {
    fn push(&mut self, outcome: Option<f64>, truth: f64) {
        match outcome {
            Some(v) => {
                let e2 = (v - truth) * (v - truth);
                self.count += 1;
                self.value.add(v);
                self.sq_err.add(e2);
                self.sq_err2.add(e2 * e2);
            }
            None => self.failures += 1,
        }
    }
}

/// Empirical behaviour of one estimator over all replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSimulation {
    pub label: String,
    pub config: EstimatorConfig,
    pub successes: u64,
    /// Replicates where an estimator precondition failed (e.g. `xbar <= 0`).
    pub failures: u64,
    pub mean: Option<f64>,
    pub bias: Option<f64>,
    pub mse: Option<f64>,
    /// Standard error of the empirical MSE; zero for exact enumeration.
    pub mse_std_error: Option<f64>,
    pub theoretical_mse: Option<f64>,
    /// Empirical over first-order theoretical MSE.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub exact: bool,
    pub generator: Option<String>,
    pub seed: Option<u64>,
    pub replicates: u64,
    pub design: Design,
    pub true_proportion: f64,
    pub estimators: Vec<EstimatorSimulation>,
}

impl SimulationReport {
    pub fn estimator(&self, label: &str) -> Option<&EstimatorSimulation> {
        self.estimators.iter().find(|e| e.label == label)
    }
}

fn prepare(
    frame: &PopulationFrame,
    n: usize,
    configs: &[EstimatorConfig],
) -> Result<(PopulationParams, Design, Vec<EstimatorConfig>)> {
    let pop = compute_population_params(frame)?;
    let design = Design::new(n, frame.len())?;
    let resolved = configs
        .iter()
        .map(|c| c.resolve(&pop, design.f))
        .collect::<Result<Vec<_>>>()?;
    Ok((pop, design, resolved))
}

fn evaluate_all(
    frame: &PopulationFrame,
    pop: &PopulationParams,
    configs: &[EstimatorConfig],
    indices: &[usize],
) -> Vec<Option<f64>> {
    let s = sample_stats_unchecked(frame, indices);
    configs.iter().map(|c| c.evaluate(&s, pop).ok()).collect()
}

fn finish(
    exact: bool,
    accs: &[Accumulator],
    configs: &[EstimatorConfig],
    resolved: &[EstimatorConfig],
    pop: &PopulationParams,
    design: &Design,
) -> Vec<EstimatorSimulation> {
    accs.iter()
        .zip(configs.iter().zip(resolved))
        .map(|(acc, (original, cfg))| {
            let theoretical_mse = theory::theory_for(pop, design.f, cfg).ok().map(|t| t.mse);
            let (mean, bias, mse, se) = if acc.count > 0 {
                let k = acc.count as f64;
                let mean = acc.value.value() / k;
                let mse = acc.sq_err.value() / k;
                let se = if exact {
                    0.0
                } else if acc.count > 1 {
                    let second = acc.sq_err2.value() / k;
                    ((second - mse * mse).max(0.0) * k / (k - 1.0) / k).sqrt()
                } else {
                    f64::NAN
                };
                (
                    Some(mean),
                    Some(mean - pop.proportion),
                    Some(mse),
                    se.is_finite().then_some(se),
                )
            } else {
                (None, None, None, None)
            };
            EstimatorSimulation {
                label: original.label(),
                config: *cfg,
                successes: acc.count,
                failures: acc.failures,
                mean,
                bias,
                mse,
                mse_std_error: se,
                theoretical_mse,
                ratio: mse
                    .zip(theoretical_mse)
                    .and_then(|(e, t)| (t > 0.0).then(|| e / t)),
            }
        })
        .collect()
}

/// `binomial(n, k)` saturating at `u128::MAX`.
fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exact design expectations by visiting every `n`-subset once.
pub fn enumerate_exact(
    frame: &PopulationFrame,
    n: usize,
    configs: &[EstimatorConfig],
) -> Result<SimulationReport> {
    let (pop, design, resolved) = prepare(frame, n, configs)?;
    let subsets = binomial(frame.len(), n);
    if subsets > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            subsets,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut accs = vec![Accumulator::default(); configs.len()];
    for indices in (0..frame.len()).combinations(n) {
        let out = evaluate_all(frame, &pop, &resolved, &indices);
        for (acc, v) in accs.iter_mut().zip(out) {
            acc.push(v, pop.proportion);
        }
    }
    Ok(SimulationReport {
        exact: true,
        generator: None,
        seed: None,
        replicates: subsets as u64,
        design,
        true_proportion: pop.proportion,
        estimators: finish(true, &accs, configs, &resolved, &pop, &design),
    })
}

/// Monte Carlo on the global thread pool.
pub fn run_experiment(
    frame: &PopulationFrame,
    n: usize,
    configs: &[EstimatorConfig],
    replicates: u64,
    seed: u64,
) -> Result<SimulationReport> {
    run_replicates(frame, n, configs, replicates, seed)
}

/// Monte Carlo on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    frame: &PopulationFrame,
    n: usize,
    configs: &[EstimatorConfig],
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<SimulationReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_replicates(frame, n, configs, replicates, seed))
}

fn run_replicates(
    frame: &PopulationFrame,
    n: usize,
    configs: &[EstimatorConfig],
    replicates: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if replicates < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 replicates, got {replicates}"
        )));
    }
    let (pop, design, resolved) = prepare(frame, n, configs)?;
    let mut accs = vec![Accumulator::default(); configs.len()];

    let mut start = 0u64;
    while start < replicates {
        let end = (start + CHUNK as u64).min(replicates);
        let outcomes: Vec<Vec<Option<f64>>> = (start..end)
            .into_par_iter()
            .map(|r| {
                let mut rng = replicate_rng(seed, r);
                let indices = rand::seq::index::sample(&mut rng, frame.len(), n).into_vec();
                evaluate_all(frame, &pop, &resolved, &indices)
            })
            .collect();
        for row in outcomes {
            for (acc, v) in accs.iter_mut().zip(row) {
                acc.push(v, pop.proportion);
            }
        }
        start = end;
    }

    Ok(SimulationReport {
        exact: false,
        generator: Some(GENERATOR.to_string()),
        seed: Some(seed),
        replicates,
        design,
        true_proportion: pop.proportion,
        estimators: finish(false, &accs, configs, &resolved, &pop, &design),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{T1Config, TbConfig};

    fn six() -> PopulationFrame {
        PopulationFrame::new(vec![1, 0, 1, 1, 0, 0], vec![5.0, 2.0, 6.5, 4.0, 1.5, 3.0]).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(40, 11), 2_311_801_440);
        assert_eq!(binomial(5, 5), 1);
    }

    #[test]
    fn census_draw_is_full_set() {
        let f = six();
        let mut rng = replicate_rng(7, 0);
        let mut idx = draw_srswor(&f, 6, &mut rng).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
        assert!(draw_srswor(&f, 7, &mut rng).is_err());
        assert!(draw_srswor(&f, 1, &mut rng).is_err());
    }

    #[test]
    fn draws_are_uniform_over_pairs() {
        // chi-square goodness of fit over the 6 pairs of a 4-unit frame
        let f = PopulationFrame::new(vec![1, 0, 1, 0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut counts = [0u64; 6];
        let slot = |a: usize, b: usize| match (a.min(b), a.max(b)) {
            (0, 1) => 0,
            (0, 2) => 1,
            (0, 3) => 2,
            (1, 2) => 3,
            (1, 3) => 4,
            _ => 5,
        };
        let draws = 60_000u64;
        for r in 0..draws {
            let mut rng = replicate_rng(2024, r);
            let idx = draw_srswor(&f, 2, &mut rng).unwrap();
            counts[slot(idx[0], idx[1])] += 1;
        }
        let expected = draws as f64 / 6.0;
        let sigma = (draws as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        let mut chi2 = 0.0;
        for c in counts {
            // 4 sigma per cell: six cells at 3 sigma would trip ~1.6% of seeds
            assert!((c as f64 - expected).abs() < 4.0 * sigma, "{counts:?}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // 5 degrees of freedom, 99.9th percentile
        assert!(chi2 < 20.52, "{chi2}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let f = six();
        let a: Vec<Vec<usize>> = (0..20)
            .map(|r| draw_srswor(&f, 3, &mut replicate_rng(9, r)).unwrap())
            .collect();
        let b: Vec<Vec<usize>> = (0..20)
            .rev()
            .map(|r| draw_srswor(&f, 3, &mut replicate_rng(9, r)).unwrap())
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_moments_of_p() {
        let f = six();
        let r = enumerate_exact(&f, 2, &[EstimatorConfig::Usual]).unwrap();
        assert_eq!(r.replicates, 15);
        let e = &r.estimators[0];
        let big_p = 0.5;
        assert!((e.mean.unwrap() - big_p).abs() < 1e-12);
        let var = (0.5 - 1.0 / 6.0) * 6.0 * big_p * (1.0 - big_p) / 5.0;
        assert!((e.mse.unwrap() - var).abs() <= 1e-12 * var);
        assert_eq!(e.mse_std_error, Some(0.0));
        // the closed form is exact for p
        assert!((e.ratio.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_limit() {
        let x: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
        let phi: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let f = PopulationFrame::new(phi, x).unwrap();
        assert!(matches!(
            enumerate_exact(&f, 11, &[EstimatorConfig::Usual]),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn census_experiment_has_zero_mse() {
        let f = six();
        let cfgs = [
            EstimatorConfig::Usual,
            EstimatorConfig::RegressionTb(TbConfig::default()),
            EstimatorConfig::T1(T1Config::default()),
        ];
        let r = run_experiment(&f, 6, &cfgs, 200, 1).unwrap();
        assert_eq!(r.estimators[0].mse, Some(0.0));
        for e in &r.estimators {
            assert!(e.mse.unwrap() < 1e-24, "{}", e.label);
            assert_eq!(e.successes, 200);
        }
    }

    #[test]
    fn monte_carlo_matches_enumeration() {
        let f = six();
        let cfgs = [EstimatorConfig::Usual, EstimatorConfig::RatioTa];
        let exact = enumerate_exact(&f, 2, &cfgs).unwrap();
        let mc = run_experiment(&f, 2, &cfgs, 200_000, 11).unwrap();
        for (a, b) in exact.estimators.iter().zip(&mc.estimators) {
            let diff = (a.mse.unwrap() - b.mse.unwrap()).abs();
            assert!(diff < 3.0 * b.mse_std_error.unwrap(), "{}: {diff}", a.label);
        }
    }

    #[test]
    fn worker_count_does_not_change_report() {
        let f = six();
        let cfgs = [EstimatorConfig::Usual, EstimatorConfig::RatioTa];
        let one = run_experiment_with_workers(&f, 3, &cfgs, 10_000, 5, 1).unwrap();
        let many = run_experiment_with_workers(&f, 3, &cfgs, 10_000, 5, 4).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn failures_are_counted() {
        // x values straddle zero so some samples have xbar <= 0
        let f = PopulationFrame::new(vec![1, 0, 1, 0, 1, 0], vec![-3.0, 1.0, 2.0, -1.0, 4.0, 0.5])
            .unwrap();
        let cfgs = [EstimatorConfig::T1(T1Config {
            alpha: 1.0.into(),
            beta: 0.0.into(),
        })];
        let r = enumerate_exact(&f, 2, &cfgs).unwrap();
        let e = &r.estimators[0];
        assert!(e.failures > 0);
        assert_eq!(e.failures + e.successes, 15);
    }

    #[test]
    fn too_few_replicates() {
        assert!(run_experiment(&six(), 2, &[EstimatorConfig::Usual], 99, 0).is_err());
    }
}
