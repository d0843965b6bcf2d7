//! Two-level resampling: studentized (bootstrap-t) and double bootstrap.

use rayon::prelude::*;

use super::{check_alpha, count_below, TieRule};
use crate::dgp::Sample;
use crate::error::{Error, Failure, Result};
use crate::functionals::{quantile_sorted, std_dev, Functional, Scratch};
use crate::rng::{fill_indices, RngStream, StreamRng};

/// Resamples larger than this many index tuples are refused in exhaustive mode.
const MAX_EXHAUSTIVE_TUPLES: usize = 5_000;

/// Which resamples a nested procedure visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResamplePlan {
    /// `outer` random resamples, each with `inner` random inner resamples.
    Random { outer: usize, inner: usize },
    /// Every one of the `nⁿ` index tuples at both levels, equally weighted.
    Exhaustive,
}

impl ResamplePlan {
    fn validate(self, n: usize, min_inner: usize) -> Result<()> {
        match self {
            ResamplePlan::Random { outer, inner } => {
                if outer == 0 || inner < min_inner {
                    return Err(Error::invalid(format!("need at least 1 outer and {min_inner} inner resamples")));
                }
            }
            ResamplePlan::Exhaustive => {
                if tuple_count(n).is_none_or(|c| c > MAX_EXHAUSTIVE_TUPLES) {
                    return Err(Error::invalid(format!("exhaustive resampling of n = {n} is infeasible")));
                }
            }
        }
        Ok(())
    }

    fn outer_count(self, n: usize) -> usize {
        match self {
            ResamplePlan::Random { outer, .. } => outer,
            ResamplePlan::Exhaustive => tuple_count(n).unwrap(),
        }
    }
}

fn tuple_count(n: usize) -> Option<usize> {
    n.checked_pow(n as u32)
}

/// Writes the `k`-th index tuple in lexicographic order (first position most
/// significant).
fn tuple_at(mut k: usize, n: usize, out: &mut [u32]) {
    for slot in out.iter_mut().rev() {
        *slot = (k % n) as u32;
        k /= n;
    }
}

/// Source of resample index vectors for one outer resample.
enum IndexSource {
    Random(StreamRng),
    Exhaustive(usize),
}

impl IndexSource {
    fn next(&mut self, n: usize, out: &mut [u32]) {
        match self {
            IndexSource::Random(rng) => fill_indices(rng, n as u32, out),
            IndexSource::Exhaustive(k) => {
                tuple_at(*k, n, out);
                *k += 1;
            }
        }
    }
}

/// Per outer resample: its estimate and the inner estimates drawn from it.
struct OuterResult {
    estimate: Option<f64>,
    inner: Vec<f64>,
}

/// Runs the two-level loop, calling `summarise` on each outer resample's
/// inner estimates. Outer resample `b` uses `stream.derive(b)` for both its
/// own indices and all of its inner indices.
fn nested_loop<T, F>(
    s: &Sample,
    f: Functional,
    plan: ResamplePlan,
    stream: &RngStream,
    summarise: F,
) -> Vec<(Option<f64>, Option<T>)>
where
    T: Send,
    F: Fn(&OuterResult) -> Option<T> + Sync,
{
    let n = s.len();
    let outer = plan.outer_count(n);
    (0..outer)
        .into_par_iter()
        .with_min_len(8)
        .map_init(
            || (Scratch::default(), vec![0u32; n], Vec::new()),
            |(scratch, idx, inner_buf), b| {
                let (mut outer_src, inner_count) = match plan {
                    ResamplePlan::Random { inner, .. } => (IndexSource::Random(stream.derive(b as u64).rng()), inner),
                    ResamplePlan::Exhaustive => (IndexSource::Exhaustive(b), outer),
                };
                outer_src.next(n, idx);
                let resample = s.gather(idx);
                let estimate = f.eval_indexed(s, idx, scratch).ok();
                let mut inner_src = match outer_src {
                    IndexSource::Random(rng) => IndexSource::Random(rng),
                    IndexSource::Exhaustive(_) => IndexSource::Exhaustive(0),
                };
                let mut inner: Vec<f64> = std::mem::take(inner_buf);
                inner.clear();
                for _ in 0..inner_count {
                    inner_src.next(n, idx);
                    if let Ok(v) = f.eval_indexed(&resample, idx, scratch) {
                        inner.push(v);
                    }
                }
                let result = OuterResult { estimate, inner };
                let summary = summarise(&result);
                *inner_buf = result.inner;
                (result.estimate, summary)
            },
        )
        .collect()
}

/// Bootstrap-t pivots for one sample.
#[derive(Debug, Clone)]
pub struct Studentized {
    pub(super) theta_hat: f64,
    pub(super) sigma_hat: f64,
    pub(super) pivots: Vec<f64>,
    pub(super) dropped: usize,
}

impl Studentized {
    /// Outer resamples give `θ̂*_b`; each one's inner resamples give the
    /// scale `σ̂*_b` of the pivot `T*_b = (θ̂*_b − θ̂)/σ̂*_b`. Outer resamples
    /// with zero or undefined inner scale are dropped and counted.
    pub fn compute(s: &Sample, f: Functional, plan: ResamplePlan, stream: &RngStream) -> Result<Self> {
        plan.validate(s.len(), 2)?;
        let theta_hat = f.evaluate(s)?;
        let rows = nested_loop(s, f, plan, stream, |r| (r.inner.len() >= 2).then(|| std_dev(&r.inner)));
        let mut outer = Vec::with_capacity(rows.len());
        let mut pivots = Vec::with_capacity(rows.len());
        let mut dropped = 0;
        for (est, scale) in rows {
            let Some(est) = est else {
                dropped += 1;
                continue;
            };
            outer.push(est);
            match scale {
                Some(sd) if sd > 0.0 => pivots.push((est - theta_hat) / sd),
                _ => dropped += 1,
            }
        }
        if outer.len() < 2 || pivots.len() < 2 {
            return Err(Failure::TooFewValidResamples.into());
        }
        let sigma_hat = std_dev(&outer);
        if sigma_hat == 0.0 {
            return Err(Failure::ZeroVariance.into());
        }
        pivots.sort_unstable_by(f64::total_cmp);
        Ok(Studentized { theta_hat, sigma_hat, pivots, dropped })
    }

    /// `θ̂ − σ̂·T*_{1−α}`.
    pub fn endpoint(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(self.theta_hat - self.sigma_hat * quantile_sorted(&self.pivots, 1.0 - alpha))
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat
    }

    /// Outer resamples excluded from the pivot pool.
    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

pub fn bt_endpoint(
    s: &Sample,
    f: Functional,
    b_outer: usize,
    b_inner: usize,
    alpha: f64,
    stream: &RngStream,
) -> Result<f64> {
    check_alpha(alpha)?;
    Studentized::compute(s, f, ResamplePlan::Random { outer: b_outer, inner: b_inner }, stream)?.endpoint(alpha)
}

/// Double (iterated percentile) bootstrap calibration for one sample.
#[derive(Debug, Clone)]
pub struct DoubleBootstrap {
    outer: Vec<f64>,
    biases: Vec<f64>,
}

impl DoubleBootstrap {
    /// For each outer resample, the bias fraction is the share of its inner
    /// estimates below the plug-in estimate of the original sample.
    pub fn compute(
        s: &Sample,
        f: Functional,
        plan: ResamplePlan,
        stream: &RngStream,
        tie_rule: TieRule,
    ) -> Result<Self> {
        plan.validate(s.len(), 1)?;
        let theta_hat = f.evaluate(s)?;
        let tie_weight = match tie_rule {
            TieRule::Strict => 0.0,
            TieRule::Midrank => 0.5,
        };
        let rows = nested_loop(s, f, plan, stream, |r| {
            if r.inner.is_empty() {
                return None;
            }
            let (below, ties) = count_below(&r.inner, theta_hat);
            Some((below as f64 + tie_weight * ties as f64) / r.inner.len() as f64)
        });
        let mut outer = Vec::with_capacity(rows.len());
        let mut biases = Vec::with_capacity(rows.len());
        for (est, bias) in rows {
            if let Some(est) = est {
                outer.push(est);
                if let Some(b) = bias {
                    biases.push(b);
                }
            }
        }
        if outer.len() < 2 || biases.is_empty() {
            return Err(Failure::TooFewValidResamples.into());
        }
        outer.sort_unstable_by(f64::total_cmp);
        biases.sort_unstable_by(f64::total_cmp);
        Ok(DoubleBootstrap { outer, biases })
    }

    /// Calibrated level: the `alpha` quantile of the inner bias fractions,
    /// clamped to `[1/(B+1), B/(B+1)]`.
    pub fn adjusted_level(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let b = self.outer.len() as f64;
        Ok(quantile_sorted(&self.biases, alpha).clamp(1.0 / (b + 1.0), b / (b + 1.0)))
    }

    pub fn endpoint(&self, alpha: f64) -> Result<f64> {
        let level = self.adjusted_level(alpha)?;
        Ok(quantile_sorted(&self.outer, level))
    }

    pub fn outer_estimates(&self) -> &[f64] {
        &self.outer
    }

    pub fn bias_fractions(&self) -> &[f64] {
        &self.biases
    }
}

pub fn db_endpoint(
    s: &Sample,
    f: Functional,
    b_outer: usize,
    b_inner: usize,
    alpha: f64,
    stream: &RngStream,
) -> Result<f64> {
    check_alpha(alpha)?;
    DoubleBootstrap::compute(s, f, ResamplePlan::Random { outer: b_outer, inner: b_inner }, stream, TieRule::default())?
        .endpoint(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuples_enumerate_lexicographically() {
        let mut t = [0u32; 3];
        tuple_at(0, 3, &mut t);
        assert_eq!(t, [0, 0, 0]);
        tuple_at(1, 3, &mut t);
        assert_eq!(t, [0, 0, 1]);
        tuple_at(26, 3, &mut t);
        assert_eq!(t, [2, 2, 2]);
    }

    #[test]
    fn exhaustive_limits() {
        assert!(ResamplePlan::Exhaustive.validate(5, 1).is_ok());
        assert!(ResamplePlan::Exhaustive.validate(6, 1).is_err());
        assert!(ResamplePlan::Random { outer: 10, inner: 1 }.validate(100, 2).is_err());
    }
}
