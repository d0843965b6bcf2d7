//! Classical one-sided intervals used as comparison baselines.
//!
//! Every endpoint is the upper limit of `(−∞, e]` at level `alpha`; values of
//! `alpha` below one half give the matching lower bounds.

use std::fmt;
use std::str::FromStr;

use crate::dgp::Sample;
use crate::error::{Error, Failure, Result};
use crate::functionals::{mean, quantile_sorted, std_dev, Functional};
use crate::special::{beta_ppf, beta_reg, binom_cdf, chi2_ppf, norm_cdf, norm_ppf, t_ppf};

/// Largest sample size for which the exact signed-rank distribution is used.
const WILCOXON_EXACT_MAX_N: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    TTest,
    ClopperPearson,
    AgrestiCoull,
    Wilcoxon,
    ChiSq,
    Fisher,
    QPar,
    QNonpar,
    MaritzJarrett,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 9] = [
        BaselineKind::TTest,
        BaselineKind::ClopperPearson,
        BaselineKind::AgrestiCoull,
        BaselineKind::Wilcoxon,
        BaselineKind::ChiSq,
        BaselineKind::Fisher,
        BaselineKind::QPar,
        BaselineKind::QNonpar,
        BaselineKind::MaritzJarrett,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::TTest => "t_test",
            BaselineKind::ClopperPearson => "cp",
            BaselineKind::AgrestiCoull => "ac",
            BaselineKind::Wilcoxon => "wilcoxon",
            BaselineKind::ChiSq => "chi_sq",
            BaselineKind::Fisher => "fisher",
            BaselineKind::QPar => "q_par",
            BaselineKind::QNonpar => "q_nonpar",
            BaselineKind::MaritzJarrett => "mj",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::TTest => "t-test",
            BaselineKind::ClopperPearson => "c-p",
            BaselineKind::AgrestiCoull => "a-c",
            BaselineKind::Wilcoxon => "wilcoxon",
            BaselineKind::ChiSq => "chi-sq",
            BaselineKind::Fisher => "fisher",
            BaselineKind::QPar => "q-par",
            BaselineKind::QNonpar => "q-nonpar",
            BaselineKind::MaritzJarrett => "m-j",
        }
    }

    /// Whether the method is defined for functional `f`.
    pub fn applies_to(self, f: Functional) -> bool {
        use Functional::*;
        match self {
            BaselineKind::TTest | BaselineKind::ClopperPearson | BaselineKind::AgrestiCoull => f == Mean,
            BaselineKind::Wilcoxon => f == Median,
            BaselineKind::ChiSq => f == Std,
            BaselineKind::Fisher => f == Corr,
            BaselineKind::QPar | BaselineKind::QNonpar | BaselineKind::MaritzJarrett => {
                matches!(f, Median | Q05 | Q95)
            }
        }
    }

    /// Methods that need 0/1 data.
    pub fn needs_binary(self) -> bool {
        matches!(self, BaselineKind::ClopperPearson | BaselineKind::AgrestiCoull)
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown baseline method `{s}`")))
    }
}

/// A baseline method bound to the functional it estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BaselineMethod {
    kind: BaselineKind,
    functional: Functional,
}

impl BaselineMethod {
    pub fn new(kind: BaselineKind, functional: Functional) -> Result<Self> {
        if !kind.applies_to(functional) {
            return Err(Error::invalid(format!("{} does not estimate {}", kind.as_str(), functional.as_str())));
        }
        Ok(BaselineMethod { kind, functional })
    }

    pub fn kind(self) -> BaselineKind {
        self.kind
    }

    pub fn functional(self) -> Functional {
        self.functional
    }
}

/// One-shot endpoint; see [`BaselineFit`] to reuse work across levels.
pub fn baseline_endpoint(m: BaselineMethod, s: &Sample, alpha: f64) -> Result<f64> {
    BaselineFit::new(m, s)?.endpoint(alpha)
}

/// Level-independent summary of a sample for one baseline method.
#[derive(Debug, Clone)]
pub struct BaselineFit {
    method: BaselineMethod,
    state: FitState,
}

#[derive(Debug, Clone)]
enum FitState {
    Moments { n: usize, mean: f64, sd: f64 },
    Binary { n: usize, successes: usize },
    Wilcoxon { walsh: Vec<f64>, null: SignedRankNull },
    Corr { n: usize, r: f64 },
    Sorted(Vec<f64>),
    MaritzJarrett { estimate: f64, se: Result<f64, Failure> },
}

impl BaselineFit {
    pub fn new(method: BaselineMethod, s: &Sample) -> Result<Self> {
        let f = method.functional;
        f.check_arity(s)?;
        let state = match method.kind {
            BaselineKind::Fisher => {
                let n = s.len();
                if n < 2 {
                    return Err(Error::invalid("correlation needs at least 2 observations"));
                }
                // NaN marks an undefined correlation
                let r = match Functional::Corr.evaluate(s) {
                    Ok(r) => r,
                    Err(Error::Failure(_)) => f64::NAN,
                    Err(e) => return Err(e),
                };
                FitState::Corr { n, r }
            }
            kind => {
                let v = s.values().expect("arity checked");
                match kind {
                    BaselineKind::TTest | BaselineKind::ChiSq | BaselineKind::QPar => {
                        if v.len() < 2 {
                            return Err(Error::invalid(format!("{} needs at least 2 observations", kind.as_str())));
                        }
                        FitState::Moments { n: v.len(), mean: mean(v), sd: std_dev(v) }
                    }
                    BaselineKind::ClopperPearson | BaselineKind::AgrestiCoull => {
                        if v.iter().any(|&x| x != 0.0 && x != 1.0) {
                            return Err(Error::invalid(format!("{} needs 0/1 data", kind.as_str())));
                        }
                        let successes = v.iter().filter(|&&x| x == 1.0).count();
                        FitState::Binary { n: v.len(), successes }
                    }
                    BaselineKind::Wilcoxon => {
                        FitState::Wilcoxon { walsh: walsh_averages(v), null: SignedRankNull::new(v.len()) }
                    }
                    BaselineKind::QNonpar => FitState::Sorted(sorted(v)),
                    BaselineKind::MaritzJarrett => {
                        let p = f.quantile_level().expect("quantile functional");
                        let x = sorted(v);
                        FitState::MaritzJarrett { estimate: quantile_sorted(&x, p), se: maritz_jarrett_se(&x, p) }
                    }
                    BaselineKind::Fisher => unreachable!(),
                }
            }
        };
        Ok(BaselineFit { method, state })
    }

    pub fn method(&self) -> BaselineMethod {
        self.method
    }

    pub fn endpoint(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
        }
        let p = self.method.functional.quantile_level();
        match (&self.state, self.method.kind) {
            (&FitState::Moments { n, mean, sd }, BaselineKind::TTest) => Ok(t_test(n, mean, sd, alpha)),
            (&FitState::Moments { n, sd, .. }, BaselineKind::ChiSq) => Ok(chi_sq(n, sd, alpha)),
            (&FitState::Moments { n, mean, sd }, BaselineKind::QPar) => {
                Ok(q_par(n, mean, sd, p.expect("quantile functional"), alpha))
            }
            (&FitState::Binary { n, successes }, BaselineKind::ClopperPearson) => {
                Ok(clopper_pearson(successes, n, alpha))
            }
            (&FitState::Binary { n, successes }, BaselineKind::AgrestiCoull) => Ok(agresti_coull(successes, n, alpha)),
            (FitState::Wilcoxon { walsh, null }, _) => Ok(walsh[null.order_index(alpha) - 1]),
            (&FitState::Corr { n, r }, _) => Ok(fisher(n, r, alpha)?),
            (FitState::Sorted(x), _) => Ok(q_nonpar(x, p.expect("quantile functional"), alpha)?),
            (&FitState::MaritzJarrett { estimate, se }, _) => Ok(estimate + norm_ppf(alpha) * se?),
            _ => unreachable!("fit state matches its method"),
        }
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut x = v.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    x
}

/// `x̄ + t_{α,n−1}·s/√n`.
pub fn t_test(n: usize, mean: f64, sd: f64, alpha: f64) -> f64 {
    mean + t_ppf(alpha, (n - 1) as f64) * sd / (n as f64).sqrt()
}

/// Upper bound for a standard deviation, `√((n−1)s²/χ²_{1−α,n−1})`.
pub fn chi_sq(n: usize, sd: f64, alpha: f64) -> f64 {
    let df = (n - 1) as f64;
    (df * sd * sd / chi2_ppf(1.0 - alpha, df)).sqrt()
}

/// Normal-theory quantile bound `x̄ + z_p·s + z_α·s·√(1/n + z_p²/(2(n−1)))`.
pub fn q_par(n: usize, mean: f64, sd: f64, p: f64, alpha: f64) -> f64 {
    let zp = norm_ppf(p);
    let nf = n as f64;
    mean + zp * sd + norm_ppf(alpha) * sd * (1.0 / nf + zp * zp / (2.0 * (nf - 1.0))).sqrt()
}

/// Exact binomial bound for a proportion with `x` successes in `n` trials.
pub fn clopper_pearson(x: usize, n: usize, alpha: f64) -> f64 {
    let (xf, nf) = (x as f64, n as f64);
    if alpha >= 0.5 {
        if x == n {
            1.0
        } else {
            beta_ppf(alpha, xf + 1.0, nf - xf)
        }
    } else if x == 0 {
        0.0
    } else {
        beta_ppf(alpha, xf, nf - xf + 1.0)
    }
}

/// Adjusted Wald bound with `z = z_α` pseudo-counts.
pub fn agresti_coull(x: usize, n: usize, alpha: f64) -> f64 {
    let z = norm_ppf(alpha);
    let z2 = z * z;
    let n_adj = n as f64 + z2;
    let p = (x as f64 + z2 / 2.0) / n_adj;
    p + z * (p * (1.0 - p) / n_adj).sqrt()
}

/// `tanh(atanh(r) + z_α/√(n−3))`.
pub fn fisher(n: usize, r: f64, alpha: f64) -> Result<f64, Failure> {
    if n <= 3 {
        return Err(Failure::TooFewObservations);
    }
    if r.is_nan() {
        return Err(Failure::DegenerateEstimate);
    }
    Ok((r.atanh() + norm_ppf(alpha) / ((n - 3) as f64).sqrt()).tanh())
}

/// Order statistic `x_(r)` with the smallest `r` such that
/// `P(Binomial(n, p) ≤ r − 1) ≥ α`.
pub fn q_nonpar(sorted: &[f64], p: f64, alpha: f64) -> Result<f64, Failure> {
    let n = sorted.len();
    (1..=n)
        .find(|&r| binom_cdf(r as i64 - 1, n as u64, p) >= alpha)
        .map(|r| sorted[r - 1])
        .ok_or(Failure::NoOrderStatistic)
}

/// Maritz–Jarrett standard error of the `p` quantile of ascending `sorted`.
pub fn maritz_jarrett_se(sorted: &[f64], p: f64) -> Result<f64, Failure> {
    let n = sorted.len();
    let a = (n as f64 + 1.0) * p;
    let b = (n as f64 + 1.0) * (1.0 - p);
    if a < 1.0 || b < 1.0 {
        return Err(Failure::DegenerateWeights);
    }
    let (mut c1, mut c2) = (0.0, 0.0);
    let mut prev = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cur = beta_reg(a, b, (i + 1) as f64 / n as f64);
        let w = cur - prev;
        prev = cur;
        c1 += w * x;
        c2 += w * x * x;
    }
    let var = c2 - c1 * c1;
    if !var.is_finite() {
        return Err(Failure::DegenerateWeights);
    }
    Ok(var.max(0.0).sqrt())
}

/// Sorted pairwise means `(x_i + x_j)/2`, `i ≤ j`.
pub fn walsh_averages(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut w = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            w.push((v[i] + v[j]) / 2.0);
        }
    }
    w.sort_unstable_by(f64::total_cmp);
    w
}

/// Null distribution of the signed-rank statistic for `n` observations.
#[derive(Debug, Clone)]
pub struct SignedRankNull {
    n: usize,
    /// `cdf[t] = P(T ≤ t)` when computed exactly.
    cdf: Option<Vec<f64>>,
}

impl SignedRankNull {
    pub fn new(n: usize) -> Self {
        let cdf = (n <= WILCOXON_EXACT_MAX_N).then(|| {
            let m = n * (n + 1) / 2;
            let mut counts = vec![0.0f64; m + 1];
            counts[0] = 1.0;
            for k in 1..=n {
                let top = k * (k + 1) / 2;
                for t in (k..=top).rev() {
                    counts[t] += counts[t - k];
                }
            }
            let total = 2f64.powi(n as i32);
            let mut acc = 0.0;
            counts
                .iter()
                .map(|c| {
                    acc += c;
                    (acc / total).min(1.0)
                })
                .collect()
        });
        SignedRankNull { n, cdf }
    }

    fn max_stat(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    /// `P(T ≤ t)`.
    pub fn cdf(&self, t: i64) -> f64 {
        let m = self.max_stat() as i64;
        if t < 0 {
            return 0.0;
        }
        if t >= m {
            return 1.0;
        }
        match &self.cdf {
            Some(c) => c[t as usize],
            None => {
                let nf = self.n as f64;
                let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();
                norm_cdf((t as f64 + 0.5 - m as f64 / 2.0) / sd)
            }
        }
    }

    /// Smallest `k` in `1..=M` with `P(T ≤ k − 1) ≥ level`.
    fn upper_index(&self, level: f64) -> usize {
        let m = self.max_stat();
        let (mut lo, mut hi) = (1usize, m);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cdf(mid as i64 - 1) >= level {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// 1-based index into the sorted Walsh averages of the level-`alpha`
    /// endpoint. Lower bounds mirror the upper bound at `1 − α`.
    pub fn order_index(&self, alpha: f64) -> usize {
        if alpha >= 0.5 {
            self.upper_index(alpha)
        } else {
            self.max_stat() + 1 - self.upper_index(1.0 - alpha)
        }
    }
}
