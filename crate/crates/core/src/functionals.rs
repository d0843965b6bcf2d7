//! Statistical functionals and the median-unbiased quantile estimator.

use std::fmt;
use std::str::FromStr;

use crate::dgp::Sample;
use crate::error::{Error, Failure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Functional {
    Mean,
    Median,
    Std,
    Q05,
    Q95,
    Corr,
}

impl Functional {
    pub const ALL: [Functional; 6] =
        [Functional::Mean, Functional::Median, Functional::Std, Functional::Q05, Functional::Q95, Functional::Corr];

    pub fn as_str(self) -> &'static str {
        match self {
            Functional::Mean => "mean",
            Functional::Median => "median",
            Functional::Std => "std",
            Functional::Q05 => "q05",
            Functional::Q95 => "q95",
            Functional::Corr => "corr",
        }
    }

    /// Column label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Functional::Mean => "mean",
            Functional::Median => "Q(0.5)",
            Functional::Std => "std",
            Functional::Q05 => "Q(0.05)",
            Functional::Q95 => "Q(0.95)",
            Functional::Corr => "corr",
        }
    }

    pub fn is_bivariate(self) -> bool {
        matches!(self, Functional::Corr)
    }

    /// Probability level for quantile functionals.
    pub fn quantile_level(self) -> Option<f64> {
        match self {
            Functional::Median => Some(0.5),
            Functional::Q05 => Some(0.05),
            Functional::Q95 => Some(0.95),
            _ => None,
        }
    }

    fn min_n(self) -> usize {
        match self {
            Functional::Std | Functional::Corr => 2,
            _ => 1,
        }
    }

    /// Plug-in estimate of the functional on `s`.
    pub fn evaluate(self, s: &Sample) -> Result<f64> {
        self.check_arity(s)?;
        if s.len() < self.min_n() {
            return Err(Error::invalid(format!(
                "{} needs at least {} observations, got {}",
                self.as_str(),
                self.min_n(),
                s.len()
            )));
        }
        let mut scratch = Scratch::default();
        match s {
            Sample::Univariate(v) => {
                scratch.xs.extend_from_slice(v);
                self.eval_values(&mut scratch.xs).map_err(Error::from)
            }
            Sample::Bivariate(rows) => {
                scratch.xs.extend(rows.iter().map(|r| r[0]));
                scratch.ys.extend(rows.iter().map(|r| r[1]));
                pearson(&scratch.xs, &scratch.ys).map_err(Error::from)
            }
        }
    }

    pub(crate) fn check_arity(self, s: &Sample) -> Result<()> {
        if self.is_bivariate() != s.is_bivariate() {
            return Err(Error::invalid(format!(
                "functional {} is not defined on a {} sample",
                self.as_str(),
                if s.is_bivariate() { "bivariate" } else { "univariate" }
            )));
        }
        Ok(())
    }

    /// Evaluates the functional on the rows of `s` selected by `idx`.
    ///
    /// Arity and minimum size are assumed to have been checked on `s`.
    pub(crate) fn eval_indexed(self, s: &Sample, idx: &[u32], scratch: &mut Scratch) -> Result<f64, Failure> {
        scratch.xs.clear();
        match s {
            Sample::Univariate(v) if self == Functional::Mean => {
                Ok(lane_sum(idx, |i| v[i as usize]) / idx.len() as f64)
            }
            Sample::Univariate(v) => {
                scratch.xs.extend(idx.iter().map(|&i| v[i as usize]));
                self.eval_values(&mut scratch.xs)
            }
            Sample::Bivariate(rows) => {
                scratch.ys.clear();
                for &i in idx {
                    let r = rows[i as usize];
                    scratch.xs.push(r[0]);
                    scratch.ys.push(r[1]);
                }
                pearson(&scratch.xs, &scratch.ys)
            }
        }
    }

    /// Univariate evaluation; may reorder `values`.
    fn eval_values(self, values: &mut [f64]) -> Result<f64, Failure> {
        match self {
            Functional::Mean => Ok(mean(values)),
            Functional::Std => Ok(std_dev(values)),
            Functional::Median | Functional::Q05 | Functional::Q95 => {
                let p = self.quantile_level().unwrap();
                values.sort_unstable_by(f64::total_cmp);
                Ok(quantile_sorted(values, p))
            }
            Functional::Corr => Err(Failure::DegenerateEstimate),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Functional::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown functional `{s}`")))
    }
}

/// Reusable buffers for repeated functional evaluation.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Sum over four interleaved accumulators, which breaks the add latency
/// chain. The tail is added in order, so short inputs sum left to right.
#[inline]
fn lane_sum<T: Copy>(items: &[T], value: impl Fn(T) -> f64) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut chunks = items.chunks_exact(4);
    for c in &mut chunks {
        acc[0] += value(c[0]);
        acc[1] += value(c[1]);
        acc[2] += value(c[2]);
        acc[3] += value(c[3]);
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for &x in chunks.remainder() {
        total += value(x);
    }
    total
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    lane_sum(values, |x| x) / values.len() as f64
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Sample standard deviation with the `n − 1` denominator (two-pass).
///
/// Exactly zero for constant input. Returns NaN for fewer than two values.
pub(crate) fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    if all_equal(values) {
        return 0.0;
    }
    let m = mean(values);
    let ss = lane_sum(values, |x| (x - m) * (x - m));
    (ss / (n - 1) as f64).sqrt()
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, Failure> {
    if all_equal(xs) || all_equal(ys) {
        return Err(Failure::DegenerateEstimate);
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Failure::DegenerateEstimate);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Hyndman–Fan type 8 quantile of ascending `sorted` at probability `p`.
///
/// `h = (n + 1/3)·p + 1/3`, clamped to `[1, n]`, then linear interpolation
/// between the neighbouring order statistics.
pub fn quantile_mu(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid("quantile of an empty vector"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile level {p} outside (0, 1)")));
    }
    Ok(quantile_sorted(sorted, p))
}

/// Unchecked type 8 quantile; `p` may be any value, it is clamped through `h`.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    type8_at(sorted.len(), p, |k| sorted[k])
}

/// Type 8 quantile at `p` of the reflection `2·centre − x` of ascending
/// `sorted`. On a distribution symmetric about `centre` this is bitwise the
/// quantile of the distribution itself.
pub(crate) fn quantile_reflected(sorted: &[f64], centre: f64, p: f64) -> f64 {
    let n = sorted.len();
    type8_at(n, p, |k| 2.0 * centre - sorted[n - 1 - k])
}

fn type8_at(n: usize, p: f64, at: impl Fn(usize) -> f64) -> f64 {
    let h = ((n as f64 + 1.0 / 3.0) * p + 1.0 / 3.0).clamp(1.0, n as f64);
    let lo = h.floor();
    let i = lo as usize - 1;
    let frac = h - lo;
    if i + 1 >= n || frac == 0.0 {
        return at(i);
    }
    let (a, b) = (at(i), at(i + 1));
    a + frac * (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uni(v: &[f64]) -> Sample {
        Sample::univariate(v.to_vec()).unwrap()
    }

    #[test]
    fn plug_in_examples() {
        assert_eq!(Functional::Mean.evaluate(&uni(&[1.0, 2.0, 3.0])).unwrap(), 2.0);
        assert_eq!(Functional::Std.evaluate(&uni(&[2.0, 4.0, 6.0])).unwrap(), 2.0);
        assert_eq!(Functional::Median.evaluate(&uni(&[3.0, 1.0, 2.0])).unwrap(), 2.0);
        assert_eq!(Functional::Std.evaluate(&uni(&[0.1; 5])).unwrap(), 0.0);
    }

    #[test]
    fn corr_of_identical_rows_fails() {
        let s = Sample::bivariate(vec![[1.0, 2.0]; 4]).unwrap();
        let err = Functional::Corr.evaluate(&s).unwrap_err();
        assert_eq!(err.failure(), Some(Failure::DegenerateEstimate));
    }

    #[test]
    fn corr_of_linear_rows() {
        let s = Sample::bivariate(vec![[1.0, 3.0], [2.0, 5.0], [3.0, 7.0]]).unwrap();
        assert!((Functional::Corr.evaluate(&s).unwrap() - 1.0).abs() < 1e-15);
        let s = Sample::bivariate(vec![[1.0, 3.0], [2.0, 1.0], [3.0, -1.0]]).unwrap();
        assert!((Functional::Corr.evaluate(&s).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn arity_and_size_are_checked() {
        assert!(matches!(Functional::Corr.evaluate(&uni(&[1.0, 2.0])), Err(Error::InvalidArgument(_))));
        let s = Sample::bivariate(vec![[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(Functional::Mean.evaluate(&s), Err(Error::InvalidArgument(_))));
        assert!(matches!(Functional::Std.evaluate(&uni(&[1.0])), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quantile_examples() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_mu(&v, 0.5).unwrap(), 2.5);
        // h = (4 + 1/3)·0.25 + 1/3 = 17/12
        assert!((quantile_mu(&v, 0.25).unwrap() - 17.0 / 12.0).abs() < 1e-15);
        for p in [0.01, 0.3, 0.99] {
            assert_eq!(quantile_mu(&[7.0], p).unwrap(), 7.0);
        }
        assert_eq!(quantile_mu(&v, 0.001).unwrap(), 1.0);
        assert_eq!(quantile_mu(&v, 0.999).unwrap(), 4.0);
    }

    #[test]
    fn quantile_rejects_bad_input() {
        assert!(quantile_mu(&[], 0.5).is_err());
        assert!(quantile_mu(&[1.0], 0.0).is_err());
        assert!(quantile_mu(&[1.0], 1.0).is_err());
    }

    #[test]
    fn names_round_trip() {
        for f in Functional::ALL {
            assert_eq!(f.as_str().parse::<Functional>().unwrap(), f);
        }
        assert!("q50".parse::<Functional>().is_err());
    }

    fn two_pass_reference(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mut m = 0.0;
        for x in v {
            m += x;
        }
        m /= n;
        let mut ss = 0.0;
        for x in v {
            ss += (x - m).powi(2);
        }
        (m, (ss / (n - 1.0)).sqrt())
    }

    proptest! {
        #[test]
        fn quantile_is_monotone(mut v in prop::collection::vec(-1e3f64..1e3, 1..40),
                                p1 in 0.001f64..0.999, p2 in 0.001f64..0.999) {
            v.sort_by(f64::total_cmp);
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(quantile_mu(&v, lo).unwrap() <= quantile_mu(&v, hi).unwrap());
        }

        #[test]
        fn quantile_is_location_scale_equivariant(mut v in prop::collection::vec(-1e3f64..1e3, 1..40),
                                                  p in 0.001f64..0.999,
                                                  a in 0.01f64..100.0, b in -1e3f64..1e3) {
            v.sort_by(f64::total_cmp);
            let w: Vec<f64> = v.iter().map(|x| a * x + b).collect();
            let lhs = quantile_mu(&w, p).unwrap();
            let rhs = a * quantile_mu(&v, p).unwrap() + b;
            let scale = 1.0 + a * 1e3 + b.abs();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn mean_and_std_match_two_pass(v in prop::collection::vec(-1e3f64..1e3, 2..60)) {
            let s = Sample::univariate(v.clone()).unwrap();
            let (m_ref, sd_ref) = two_pass_reference(&v);
            let m = Functional::Mean.evaluate(&s).unwrap();
            let sd = Functional::Std.evaluate(&s).unwrap();
            prop_assert!((m - m_ref).abs() <= 1e-12 * m_ref.abs().max(1.0));
            prop_assert!((sd - sd_ref).abs() <= 1e-12 * sd_ref.abs().max(1e-300));
        }
    }
}
