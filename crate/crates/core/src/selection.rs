//! Ranking coefficient rows into exemplars or features.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arss::{arss_solve_with, SolverConfig};
use crate::clock::Clock;
use crate::error::Error;
use crate::numkit::Matrix;
use crate::outcome::SolveOutcome;
use crate::rrss::{rrss_solve_with, RrssConfig, RrssPath};

/// Rows of a coefficient matrix ordered by representativeness.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedSelection {
    /// Score per row.
    pub scores: Vec<f64>,
    /// All row indices, best first.
    pub order: Vec<usize>,
    pub k: usize,
    /// `order[..k]`.
    pub selected: Vec<usize>,
}

impl RankedSelection {
    /// Keeps the ranking but selects the first `k` entries.
    pub fn truncate(&self, k: usize) -> Result<RankedSelection, Error> {
        let n = self.order.len();
        if k == 0 || k > n {
            return Err(Error::InvalidK { k, n });
        }
        Ok(RankedSelection {
            scores: self.scores.clone(),
            order: self.order.clone(),
            k,
            selected: self.order[..k].to_vec(),
        })
    }
}

/// Scores each row by `Σ_m |A_nm|` and sorts descending, ties by ascending
/// index. Selects all rows.
pub fn rank_rows(a: &Matrix) -> RankedSelection {
    let mut scores = alloc::vec![0.0; a.rows()];
    for j in 0..a.cols() {
        for (s, v) in scores.iter_mut().zip(a.col(j)) {
            *s += v.abs();
        }
    }
    let mut order: Vec<usize> = (0..a.rows()).collect();
    // stable sort keeps ascending index among equal scores
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    let k = order.len();
    RankedSelection { selected: order.clone(), scores, order, k }
}

/// Selection strategy with its configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Arss(SolverConfig),
    Rrss(RrssConfig),
    /// Uniform sampling without replacement, seeded.
    Random,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Arss(_) => "arss",
            Method::Rrss(c) => match c.path {
                RrssPath::Authorial => "rrss-authorial",
                RrssPath::Accelerated => "rrss-accelerated",
            },
            Method::Random => "random",
        }
    }
}

/// What a selection run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionReport {
    pub method: &'static str,
    pub ranking: RankedSelection,
    /// Solver output; `None` for random selection.
    pub outcome: Option<SolveOutcome>,
}

impl SelectionReport {
    pub fn selected(&self) -> &[usize] {
        &self.ranking.selected
    }
}

/// Selects `k` representative samples (columns of `x`).
///
/// For [`Method::Random`] the ranking is a seeded random permutation, with
/// scores decreasing linearly along it. Solver methods ignore `seed`.
pub fn select_exemplars(
    x: &Matrix,
    k: usize,
    method: &Method,
    seed: u64,
    clock: &dyn Clock,
) -> Result<SelectionReport, Error> {
    let n = x.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let (ranking, outcome) = match method {
        Method::Random => (random_ranking(n, seed), None),
        Method::Arss(cfg) => {
            let out = arss_solve_with(x, cfg, None, clock)?;
            (rank_rows(&out.a), Some(out))
        }
        Method::Rrss(cfg) => {
            let out = rrss_solve_with(x, cfg, clock)?;
            (rank_rows(&out.a), Some(out))
        }
    };
    Ok(SelectionReport { method: method.name(), ranking: ranking.truncate(k)?, outcome })
}

/// Selects `k` representative features (rows of `x`) by running the same
/// pipeline on `xᵀ`.
pub fn select_features(
    x: &Matrix,
    k: usize,
    method: &Method,
    seed: u64,
    clock: &dyn Clock,
) -> Result<SelectionReport, Error> {
    select_exemplars(&x.transpose(), k, method, seed, clock)
}

fn random_ranking(n: usize, seed: u64) -> RankedSelection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut scores = alloc::vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        scores[i] = (n - pos) as f64 / n as f64;
    }
    RankedSelection { selected: order.clone(), scores, order, k: n }
}
