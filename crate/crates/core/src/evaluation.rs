//! Scoring of endpoints: coverage, KL criterion, Bradley bounds, the exact
//! interval oracle and distance metrics.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::dgp::DgpSpec;
use crate::error::{Error, Failure, Result};
use crate::functionals::{quantile_sorted, std_dev, Functional};
use crate::rng::{domain, RngStream};

/// Kullback–Leibler divergence in bits between Bernoulli(`p`) and
/// Bernoulli(`pi`), with `0·log 0 = 0`.
pub fn kl_coverage(p: f64, pi: f64) -> Result<f64> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::invalid(format!("nominal level {pi} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("coverage {p} outside [0, 1]")));
    }
    Ok(kl_unchecked(p, pi))
}

fn kl_unchecked(p: f64, pi: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).log2() };
    (term(p, pi) + term(1.0 - p, 1.0 - pi)).max(0.0)
}

/// Coverages below and above `pi` whose divergence from `pi` equals `level`.
pub fn kl_bounds(pi: f64, level: f64) -> Result<(f64, f64)> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::invalid(format!("nominal level {pi} outside (0, 1)")));
    }
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::invalid(format!("divergence level {level} must be positive")));
    }
    let low = kl_root(pi, level, 0.0);
    let high = kl_root(pi, level, 1.0);
    match (low, high) {
        (Some(l), Some(h)) => Ok((l, h)),
        _ => Err(Error::invalid(format!("divergence level {level} is not reached inside (0, 1) for nominal {pi}"))),
    }
}

/// Bisection for the root of `kl(p) = level` between `pi` and `edge`.
fn kl_root(pi: f64, level: f64, edge: f64) -> Option<f64> {
    if kl_unchecked(edge, pi) <= level {
        return None;
    }
    let (mut inside, mut outside) = (pi, edge);
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if kl_unchecked(mid, pi) < level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Some(0.5 * (inside + outside))
}

/// Bradley's robustness band `π ± min(π, 1−π)/k`; not capped to `[0, 1]`.
pub fn bradley_bounds(pi: f64, k: f64) -> Result<(f64, f64)> {
    if k.is_nan() || k <= 0.0 {
        return Err(Error::invalid(format!("Bradley factor {k} must be positive")));
    }
    let half = pi.min(1.0 - pi) / k;
    Ok((pi - half, pi + half))
}

/// Named KL tolerance: a multiple of `KL(0.945, 0.95)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Stringent,
    Intermediate,
    Liberal,
    VeryLiberal,
}

impl Threshold {
    pub const ALL: [Threshold; 4] =
        [Threshold::Stringent, Threshold::Intermediate, Threshold::Liberal, Threshold::VeryLiberal];

    pub fn multiplier(self) -> f64 {
        match self {
            Threshold::Stringent => 1.0,
            Threshold::Intermediate => 5.0,
            Threshold::Liberal => 25.0,
            Threshold::VeryLiberal => 125.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Threshold::Stringent => "stringent",
            Threshold::Intermediate => "intermediate",
            Threshold::Liberal => "liberal",
            Threshold::VeryLiberal => "very_liberal",
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Threshold::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown threshold `{s}`")))
    }
}

/// Divergence tolerances in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSet {
    kl0: f64,
}

impl Default for ThresholdSet {
    fn default() -> Self {
        ThresholdSet { kl0: kl_unchecked(0.945, 0.95) }
    }
}

impl ThresholdSet {
    /// The base tolerance `KL(0.945, 0.95)`.
    pub fn base(&self) -> f64 {
        self.kl0
    }

    pub fn level(&self, t: Threshold) -> f64 {
        t.multiplier() * self.kl0
    }

    /// Whether coverage `p` at nominal `pi` is within tolerance `t`.
    pub fn meets(&self, p: f64, pi: f64, t: Threshold) -> Result<bool> {
        let level = self.level(t);
        // the 0.945 boundary reproduces kl0 up to rounding of the log terms
        Ok(kl_coverage(p, pi)? <= level * (1.0 + 1e-12))
    }
}

/// Empirical coverage of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageScore {
    pub p: f64,
    pub pi: f64,
    pub n_rep_effective: usize,
    pub mc_se: f64,
}

impl CoverageScore {
    pub fn new(covered: usize, n_rep_effective: usize, pi: f64) -> Result<Self> {
        if n_rep_effective == 0 {
            return Err(Error::invalid("coverage over zero replications"));
        }
        if covered > n_rep_effective {
            return Err(Error::invalid("more covered than scored replications"));
        }
        let p = covered as f64 / n_rep_effective as f64;
        Ok(CoverageScore { p, pi, n_rep_effective, mc_se: (p * (1.0 - p) / n_rep_effective as f64).sqrt() })
    }

    pub fn kl(&self) -> Result<f64> {
        kl_coverage(self.p, self.pi)
    }
}

/// Monte Carlo sampling distribution of `θ̂ − θ` for one (dgp, functional, n).
#[derive(Debug, Clone)]
pub struct ExactOracle {
    /// Deviations in draw order, for batch error estimates.
    draws: Vec<f64>,
    sorted: Vec<f64>,
}

/// Draws used by the exact oracle.
pub const ORACLE_DRAWS: usize = 100_000;

const ORACLE_BATCHES: usize = 20;

impl ExactOracle {
    /// Simulates `draws` fresh samples of size `n`. Sample `i` uses
    /// `stream.derive(i)`. Draws on which the functional is undefined are
    /// skipped; the oracle fails when more than half are.
    pub fn compute(dgp: DgpSpec, f: Functional, n: usize, draws: usize, stream: &RngStream) -> Result<Self> {
        if !dgp.supports(f) {
            return Err(Error::invalid(format!("{} is not defined for {}", f.as_str(), dgp.as_str())));
        }
        if draws < ORACLE_BATCHES {
            return Err(Error::invalid(format!("oracle needs at least {ORACLE_BATCHES} draws")));
        }
        let theta = dgp.true_parameter(f)?;
        let results: Vec<Option<f64>> = (0..draws)
            .into_par_iter()
            .with_min_len(256)
            .map(|i| -> Result<Option<f64>> {
                let s = dgp.draw_sample(n, &stream.derive(i as u64))?;
                match f.evaluate(&s) {
                    Ok(v) => Ok(Some(v - theta)),
                    Err(Error::Failure(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        let draws_ok: Vec<f64> = results.into_iter().flatten().collect();
        if draws_ok.len() * 2 < draws {
            return Err(Failure::OracleFailure.into());
        }
        let mut sorted = draws_ok.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(ExactOracle { draws: draws_ok, sorted })
    }

    /// `q_{1−α}(D)`: the amount subtracted from an observed estimate.
    pub fn offset(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(quantile_sorted(&self.sorted, 1.0 - alpha))
    }

    /// Exact endpoint `θ̂_obs − q_{1−α}(D)`.
    pub fn endpoint(&self, theta_hat: f64, alpha: f64) -> Result<f64> {
        Ok(theta_hat - self.offset(alpha)?)
    }

    /// Monte Carlo standard error of [`offset`](Self::offset) from
    /// quantiles of contiguous batches of draws.
    pub fn offset_se(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        let size = self.draws.len() / ORACLE_BATCHES;
        let q: Vec<f64> = self
            .draws
            .chunks_exact(size)
            .take(ORACLE_BATCHES)
            .map(|c| {
                let mut b = c.to_vec();
                b.sort_unstable_by(f64::total_cmp);
                quantile_sorted(&b, 1.0 - alpha)
            })
            .collect();
        Ok(std_dev(&q) / (ORACLE_BATCHES as f64).sqrt())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")))
    }
}

type OracleKey = (DgpSpec, Functional, usize);
type OracleSlot = Arc<OnceLock<Result<Arc<ExactOracle>, Failure>>>;

/// Oracles computed once per (dgp, functional, n) and shared.
#[derive(Debug)]
pub struct OracleCache {
    root: RngStream,
    draws: usize,
    entries: Mutex<HashMap<OracleKey, OracleSlot>>,
}

impl OracleCache {
    /// Oracle streams are derived from `seed` under their own domain.
    pub fn new(seed: u64, draws: usize) -> Self {
        OracleCache { root: RngStream::new(seed).derive(domain::ORACLE), draws, entries: Mutex::new(HashMap::new()) }
    }

    pub fn get(&self, dgp: DgpSpec, f: Functional, n: usize) -> Result<Arc<ExactOracle>> {
        if !dgp.supports(f) {
            return Err(Error::invalid(format!("{} is not defined for {}", f.as_str(), dgp.as_str())));
        }
        let slot = {
            let mut map = self.entries.lock().expect("oracle cache poisoned");
            map.entry((dgp, f, n)).or_default().clone()
        };
        let label = format!("{}/{}/{}", dgp.as_str(), f.as_str(), n);
        let entry = slot.get_or_init(|| {
            ExactOracle::compute(dgp, f, n, self.draws, &self.root.derive_str(&label))
                .map(Arc::new)
                .map_err(|e| e.failure().unwrap_or(Failure::OracleFailure))
        });
        entry.clone().map_err(Error::from)
    }
}

/// Outcome of one non-failed endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationScore {
    pub covered: bool,
    pub abs_dist: Option<f64>,
}

/// Coverage is inclusive: `θ ≤ endpoint`.
pub fn score_replication(endpoint: f64, theta_true: f64, exact: Option<f64>) -> ReplicationScore {
    ReplicationScore { covered: theta_true <= endpoint, abs_dist: exact.map(|e| (endpoint - e).abs()) }
}

/// Mean absolute distance in units of two standard deviations of the exact
/// endpoints.
pub fn normalize_distance(mean_abs_dist: f64, exact_endpoint_sd: f64) -> Result<f64> {
    if !(exact_endpoint_sd > 0.0 && exact_endpoint_sd.is_finite()) {
        return Err(Error::invalid("exact endpoints have no spread"));
    }
    Ok(mean_abs_dist / (2.0 * exact_endpoint_sd))
}

/// Two-sided interval `(lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn covers(&self, theta: f64) -> bool {
        self.lower < theta && theta <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Combines the endpoints at `α` and `1 − α`; either side failing or the two
/// crossing fails the interval.
pub fn two_sided(lower: Result<f64, Failure>, upper: Result<f64, Failure>) -> Result<Interval, Failure> {
    let (lower, upper) = (lower?, upper?);
    if upper < lower {
        return Err(Failure::CrossedEndpoints);
    }
    Ok(Interval { lower, upper })
}
