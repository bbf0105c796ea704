//! Downstream kNN evaluation and timing sweeps.

use std::collections::BTreeMap;
use std::time::Duration;

use arss_core::{select_exemplars, Matrix, Method, PhaseTimes, RrssPath, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::StdClock;
use crate::dataio::{inject_noise, split_candidates, LabeledDataset, NoiseSpec};
use crate::error::{Error, Result};
use crate::manifest::HostInfo;
use crate::synth::gaussian_matrix;

pub const DEFAULT_KNN_K: usize = 3;

/// Majority vote of the `k` nearest training columns under Euclidean
/// distance. Equal distances prefer the lower training index; tied votes
/// prefer the smaller label.
pub fn knn_predict(train_x: &Matrix, train_labels: &[i32], query_x: &Matrix, k: usize) -> Result<Vec<i32>> {
    let n = train_x.cols();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if train_labels.len() != n {
        return Err(Error::LabelMismatch { expected: n, found: train_labels.len() });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidCount { count: k, available: n });
    }
    if query_x.cols() > 0 && query_x.rows() != train_x.rows() {
        return Err(arss_core::Error::DimensionMismatch { expected: train_x.rows(), found: query_x.rows() }.into());
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut dist = vec![0.0; n];
    let mut out = Vec::with_capacity(query_x.cols());
    for q in 0..query_x.cols() {
        let query = query_x.col(q);
        for (j, d) in dist.iter_mut().enumerate() {
            *d = train_x.col(j).iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
        }
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        let mut votes: BTreeMap<i32, usize> = BTreeMap::new();
        for &j in &order[..k] {
            *votes.entry(train_labels[j]).or_default() += 1;
        }
        let mut best = (i32::MIN, 0);
        for (&label, &count) in &votes {
            if count > best.1 {
                best = (label, count);
            }
        }
        out.push(best.0);
    }
    Ok(out)
}

pub fn accuracy(predicted: &[i32], truth: &[i32]) -> f64 {
    if predicted.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / predicted.len() as f64
}

/// Phase times in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseMillis {
    pub e_step: f64,
    pub a_step: f64,
    pub multiplier_step: f64,
    pub reweight: f64,
    pub total: f64,
}

impl From<&PhaseTimes> for PhaseMillis {
    fn from(t: &PhaseTimes) -> Self {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        Self {
            e_step: ms(t.e_step),
            a_step: ms(t.a_step),
            multiplier_step: ms(t.multiplier_step),
            reweight: ms(t.reweight),
            total: ms(t.total),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    pub n: usize,
    pub l: usize,
    pub k: Option<usize>,
    pub repeat: usize,
    pub seed: u64,
    /// Iterations requested for every cell of the sweep.
    pub iteration_budget: usize,
    pub iterations: usize,
    /// `None` when the cell was skipped after an earlier cell timed out.
    pub wall_time_ms: Option<PhaseMillis>,
    /// The cell exceeded the timeout (its time is a lower bound) or was
    /// skipped because a smaller cell did.
    pub censored: bool,
    pub exclusive_timing: bool,
    pub host: HostInfo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub method: String,
    pub sizes: Vec<usize>,
    pub feature_dim: usize,
    pub gamma: f64,
    pub p: f64,
    pub repeats: usize,
    pub iters: usize,
    pub seed: u64,
    pub timeout: Option<Duration>,
    pub exclusive_timing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub records: Vec<BenchRecord>,
    /// Least-squares slope of log(median total time) against log N over the
    /// uncensored sizes; `None` with fewer than two of them.
    pub exponent: Option<f64>,
}

/// Builds a solver method whose stopping tests never fire, so it runs
/// exactly `iters` iterations.
pub fn budget_method(name: &str, gamma: f64, p: f64, iters: usize) -> Option<Method> {
    let method = match name {
        "arss" => {
            let mut c = SolverConfig::new(gamma, p);
            c.max_iters = iters;
            c.feas_tol = 0.0;
            c.step_tol = 0.0;
            c.deterministic = true;
            Method::Arss(c)
        }
        "rrss-authorial" | "rrss-accelerated" => {
            let path = if name == "rrss-authorial" { RrssPath::Authorial } else { RrssPath::Accelerated };
            let mut c = arss_core::RrssConfig::new(gamma, path);
            c.max_outer_iters = iters;
            c.obj_tol = 0.0;
            Method::Rrss(c)
        }
        "random" => Method::Random,
        _ => return None,
    };
    Some(method)
}

/// Synthetic bench input for one size; identical for every repeat.
pub fn bench_data(seed: u64, l: usize, n: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    gaussian_matrix(&mut rng, l, n)
}

fn time_cell(x: &Matrix, method: &Method, exclusive: bool) -> Result<(PhaseTimes, usize)> {
    let run = || -> Result<(PhaseTimes, usize)> {
        let clock = StdClock::new();
        let report = select_exemplars(x, 1, method, 0, &clock)?;
        let times = report.outcome.as_ref().map(|o| o.timing).unwrap_or_else(|| {
            let mut t = PhaseTimes::default();
            t.total = arss_core::Clock::now(&clock);
            t
        });
        Ok((times, report.outcome.map_or(0, |o| o.iterations)))
    };
    if exclusive {
        // one dedicated thread per cell, never overlapping another
        std::thread::scope(|s| s.spawn(run).join().expect("timing thread panicked"))
    } else {
        run()
    }
}

pub fn bench_scaling(cfg: &BenchConfig) -> Result<BenchSummary> {
    if cfg.sizes.len() < 3 || cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCount { count: cfg.sizes.len(), available: 3 });
    }
    if cfg.repeats == 0 {
        return Err(Error::InvalidCount { count: 0, available: 1 });
    }
    let method = budget_method(&cfg.method, cfg.gamma, cfg.p, cfg.iters)
        .ok_or(arss_core::Error::InvalidConfig("unknown method"))?;
    let host = HostInfo::current();
    let mut records = Vec::new();
    let mut medians = Vec::new();
    let mut timed_out = false;
    for &n in &cfg.sizes {
        let x = bench_data(cfg.seed, cfg.feature_dim, n);
        let mut totals = Vec::new();
        for repeat in 0..cfg.repeats {
            let mut rec = BenchRecord {
                method: cfg.method.clone(),
                n,
                l: cfg.feature_dim,
                k: None,
                repeat,
                seed: cfg.seed,
                iteration_budget: cfg.iters,
                iterations: 0,
                wall_time_ms: None,
                censored: timed_out,
                exclusive_timing: cfg.exclusive_timing,
                host: host.clone(),
            };
            if !timed_out {
                let (times, iterations) = time_cell(&x, &method, cfg.exclusive_timing)?;
                rec.iterations = iterations;
                rec.wall_time_ms = Some(PhaseMillis::from(&times));
                if cfg.timeout.is_some_and(|cap| times.total > cap) {
                    rec.censored = true;
                    timed_out = true;
                } else {
                    totals.push(times.total.as_secs_f64());
                }
            }
            records.push(rec);
        }
        if totals.len() == cfg.repeats {
            medians.push((n, median(&mut totals)));
        }
    }
    let exponent = (medians.len() >= 2).then(|| {
        let pts: Vec<(f64, f64)> = medians.iter().map(|&(n, t)| ((n as f64).ln(), t.ln())).collect();
        fit_slope(&pts)
    });
    Ok(BenchSummary { records, exponent })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub method: String,
    pub k_values: Vec<usize>,
    pub mean: Vec<f64>,
    /// Population standard deviation over seeds.
    pub std: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub candidate_count: usize,
    pub seeds: Vec<u64>,
    /// Corruption applied to the candidates; its seed is replaced by each
    /// run's seed.
    pub noise: Option<NoiseSpec>,
    pub knn_k: usize,
}

/// Accuracy of kNN trained on the top-K selected candidates, per K.
///
/// The selection runs once per seed; each K uses the first K entries of the
/// same ranking. The kNN neighbour count is capped at K.
pub fn accuracy_vs_k(dataset: &LabeledDataset, method: &Method, k_list: &[usize], cfg: &EvalConfig) -> Result<AccuracyCurve> {
    if dataset.labels.is_none() {
        return Err(Error::MissingLabels);
    }
    let k_max = k_list.iter().copied().max().ok_or(Error::InvalidCount { count: 0, available: 1 })?;
    if k_max > cfg.candidate_count || k_list.contains(&0) {
        return Err(Error::InvalidCount { count: k_max, available: cfg.candidate_count });
    }
    if cfg.knn_k == 0 {
        return Err(Error::InvalidCount { count: 0, available: 1 });
    }
    let mut per_k: Vec<Vec<f64>> = vec![Vec::new(); k_list.len()];
    for &seed in &cfg.seeds {
        let (mut cand, test) = split_candidates(dataset, cfg.candidate_count, seed)?;
        if test.n_samples() == 0 {
            return Err(Error::InvalidCount { count: cfg.candidate_count, available: dataset.n_samples() - 1 });
        }
        if let Some(spec) = &cfg.noise {
            cand = inject_noise(&cand, &NoiseSpec { seed, ..spec.clone() })?;
        }
        let report = select_exemplars(&cand.x, k_max, method, seed, &arss_core::NoClock)?;
        let cand_labels = cand.labels.as_ref().expect("split keeps labels");
        let test_labels = test.labels.as_ref().expect("split keeps labels");
        for (slot, &k) in k_list.iter().enumerate() {
            let mut chosen = report.ranking.order[..k].to_vec();
            chosen.sort_unstable();
            let train = cand.select_columns(&chosen);
            let train_labels: Vec<i32> = chosen.iter().map(|&j| cand_labels[j]).collect();
            let pred = knn_predict(&train.x, &train_labels, &test.x, cfg.knn_k.min(k))?;
            per_k[slot].push(accuracy(&pred, test_labels));
        }
    }
    let (mean, std) = per_k
        .iter()
        .map(|accs| {
            let m = accs.iter().sum::<f64>() / accs.len().max(1) as f64;
            let var = accs.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / accs.len().max(1) as f64;
            (m, var.sqrt())
        })
        .unzip();
    Ok(AccuracyCurve {
        method: method.name().into(),
        k_values: k_list.to_vec(),
        mean,
        std,
        seeds: cfg.seeds.clone(),
    })
}

/// Fraction of `outliers` among the first `k` entries of `order`.
pub fn outlier_rate(order: &[usize], k: usize, outliers: &[usize]) -> f64 {
    let hits = order[..k].iter().filter(|j| outliers.binary_search(j).is_ok()).count();
    hits as f64 / k as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_single_point() {
        let train = Matrix::from_rows(&[&[0.0]]);
        let q = Matrix::from_rows(&[&[5.0, -3.0, 0.0]]);
        assert_eq!(knn_predict(&train, &[7], &q, 1).unwrap(), vec![7, 7, 7]);
    }

    #[test]
    fn knn_exact_match() {
        let train = Matrix::from_rows(&[&[0.0, 1.0, 2.0]]);
        let q = Matrix::from_rows(&[&[1.0]]);
        assert_eq!(knn_predict(&train, &[4, 5, 6], &q, 1).unwrap(), vec![5]);
    }

    #[test]
    fn knn_tie_rules() {
        // query at 0 is equidistant from -1 (index 0) and 1 (index 1)
        let train = Matrix::from_rows(&[&[-1.0, 1.0, 5.0]]);
        let q = Matrix::from_rows(&[&[0.0]]);
        assert_eq!(knn_predict(&train, &[9, 2, 2], &q, 1).unwrap(), vec![9]);
        // two votes split one each: smaller label wins
        assert_eq!(knn_predict(&train, &[9, 2, 2], &q, 2).unwrap(), vec![2]);
        assert_eq!(knn_predict(&train, &[3, 8, 8], &q, 2).unwrap(), vec![3]);
    }

    #[test]
    fn knn_errors() {
        let q = Matrix::from_rows(&[&[0.0]]);
        assert!(matches!(knn_predict(&Matrix::zeros(1, 0), &[], &q, 1), Err(Error::EmptyTrainingSet)));
        let train = Matrix::from_rows(&[&[0.0, 1.0]]);
        assert!(knn_predict(&train, &[0, 1], &q, 3).is_err());
        assert!(knn_predict(&train, &[0, 1], &q, 0).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [100.0f64, 200.0, 400.0].iter().map(|&n| (n.ln(), (3.0 * n.powi(2)).ln())).collect();
        assert!((fit_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bench_data_is_fixed_per_size() {
        assert_eq!(bench_data(3, 4, 50), bench_data(3, 4, 50));
        assert_ne!(bench_data(3, 4, 50).col(0), bench_data(3, 4, 60).col(0));
    }

    #[test]
    fn outlier_rate_counts_prefix() {
        assert_eq!(outlier_rate(&[4, 1, 2, 0], 2, &[1, 3]), 0.5);
        assert_eq!(outlier_rate(&[4, 1, 2, 0], 1, &[1, 3]), 0.0);
    }
}
