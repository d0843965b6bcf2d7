//! Data-generating processes of the simulation grid and their true
//! functional values.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::rng::RngStream;
use crate::special::{beta_ppf, norm_ppf};

/// One of the nine fixed-parameter distributions of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DgpSpec {
    /// N(0, 1)
    Normal,
    /// Exp(λ = 1)
    Exponential,
    /// U(0, 1)
    Uniform,
    /// Beta(10, 2)
    Beta10_2,
    /// LogNormal(μ = 0, σ = 1)
    LogNormal,
    /// Laplace(μ = 0, b = 1)
    Laplace,
    /// Bernoulli(0.5)
    Bernoulli05,
    /// Bernoulli(0.9)
    Bernoulli09,
    /// Bivariate normal, mean (1, 1), covariance [[2, 0.5], [0.5, 1]]
    BivariateNormal,
}

const BVN_MEAN: [f64; 2] = [1.0, 1.0];
const BVN_COV: [[f64; 2]; 2] = [[2.0, 0.5], [0.5, 1.0]];

impl DgpSpec {
    pub const ALL: [DgpSpec; 9] = [
        DgpSpec::Normal,
        DgpSpec::Exponential,
        DgpSpec::Uniform,
        DgpSpec::Beta10_2,
        DgpSpec::LogNormal,
        DgpSpec::Laplace,
        DgpSpec::Bernoulli05,
        DgpSpec::Bernoulli09,
        DgpSpec::BivariateNormal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DgpSpec::Normal => "normal",
            DgpSpec::Exponential => "exponential",
            DgpSpec::Uniform => "uniform",
            DgpSpec::Beta10_2 => "beta_10_2",
            DgpSpec::LogNormal => "lognormal",
            DgpSpec::Laplace => "laplace",
            DgpSpec::Bernoulli05 => "bernoulli_0.5",
            DgpSpec::Bernoulli09 => "bernoulli_0.9",
            DgpSpec::BivariateNormal => "bvn",
        }
    }

    pub fn is_bivariate(self) -> bool {
        matches!(self, DgpSpec::BivariateNormal)
    }

    pub fn is_bernoulli(self) -> bool {
        matches!(self, DgpSpec::Bernoulli05 | DgpSpec::Bernoulli09)
    }

    /// Grid legality: correlation only with the bivariate normal, Bernoulli
    /// only with the mean.
    pub fn supports(self, f: Functional) -> bool {
        if self.is_bivariate() || f == Functional::Corr {
            return self.is_bivariate() && f == Functional::Corr;
        }
        !self.is_bernoulli() || f == Functional::Mean
    }

    fn check_pair(self, f: Functional) -> Result<()> {
        if self.supports(f) {
            Ok(())
        } else {
            Err(Error::invalid(format!("functional {} is not paired with dgp {}", f.as_str(), self.as_str())))
        }
    }

    /// Draws a sample of size `n`; identical streams give identical samples.
    pub fn draw_sample(self, n: usize, stream: &RngStream) -> Result<Sample> {
        if n == 0 {
            return Err(Error::invalid("sample size must be positive"));
        }
        let mut rng = stream.rng();
        if self.is_bivariate() {
            let l11 = BVN_COV[0][0].sqrt();
            let l21 = BVN_COV[1][0] / l11;
            let l22 = (BVN_COV[1][1] - l21 * l21).sqrt();
            let rows = (0..n)
                .map(|_| {
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    [BVN_MEAN[0] + l11 * z1, BVN_MEAN[1] + l21 * z1 + l22 * z2]
                })
                .collect();
            return Ok(Sample::Bivariate(rows));
        }
        let values = match self {
            DgpSpec::Normal => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
            DgpSpec::Exponential => (0..n).map(|_| Exp1.sample(&mut rng)).collect(),
            DgpSpec::Uniform => (0..n).map(|_| rng.random::<f64>()).collect(),
            DgpSpec::Beta10_2 => {
                let ga = Gamma::new(10.0, 1.0).expect("valid shape");
                let gb = Gamma::new(2.0, 1.0).expect("valid shape");
                (0..n)
                    .map(|_| {
                        let x: f64 = ga.sample(&mut rng);
                        let y: f64 = gb.sample(&mut rng);
                        x / (x + y)
                    })
                    .collect()
            }
            DgpSpec::LogNormal => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z.exp()
                })
                .collect(),
            DgpSpec::Laplace => (0..n).map(|_| laplace_inverse_cdf(open_unit(&mut rng))).collect(),
            DgpSpec::Bernoulli05 => (0..n).map(|_| bernoulli(&mut rng, 0.5)).collect(),
            DgpSpec::Bernoulli09 => (0..n).map(|_| bernoulli(&mut rng, 0.9)).collect(),
            DgpSpec::BivariateNormal => unreachable!(),
        };
        Ok(Sample::Univariate(values))
    }

    /// Population value of `f` under this distribution.
    pub fn true_parameter(self, f: Functional) -> Result<f64> {
        self.check_pair(f)?;
        let value = match f {
            Functional::Mean => self.mean(),
            Functional::Std => self.variance().sqrt(),
            Functional::Corr => BVN_COV[0][1] / (BVN_COV[0][0] * BVN_COV[1][1]).sqrt(),
            Functional::Median | Functional::Q05 | Functional::Q95 => self.quantile(f.quantile_level().unwrap()),
        };
        Ok(value)
    }

    fn mean(self) -> f64 {
        match self {
            DgpSpec::Normal | DgpSpec::Laplace => 0.0,
            DgpSpec::Exponential => 1.0,
            DgpSpec::Uniform => 0.5,
            DgpSpec::Beta10_2 => 10.0 / 12.0,
            DgpSpec::LogNormal => 0.5f64.exp(),
            DgpSpec::Bernoulli05 => 0.5,
            DgpSpec::Bernoulli09 => 0.9,
            DgpSpec::BivariateNormal => BVN_MEAN[0],
        }
    }

    fn variance(self) -> f64 {
        match self {
            DgpSpec::Normal | DgpSpec::Exponential => 1.0,
            DgpSpec::Uniform => 1.0 / 12.0,
            DgpSpec::Beta10_2 => 20.0 / (144.0 * 13.0),
            DgpSpec::LogNormal => (E - 1.0) * E,
            DgpSpec::Laplace => 2.0,
            DgpSpec::Bernoulli05 => 0.25,
            DgpSpec::Bernoulli09 => 0.09,
            DgpSpec::BivariateNormal => BVN_COV[0][0],
        }
    }

    fn quantile(self, p: f64) -> f64 {
        match self {
            DgpSpec::Normal => norm_ppf(p),
            DgpSpec::Exponential => -(1.0 - p).ln(),
            DgpSpec::Uniform => p,
            DgpSpec::Beta10_2 => beta_ppf(p, 10.0, 2.0),
            DgpSpec::LogNormal => norm_ppf(p).exp(),
            DgpSpec::Laplace => laplace_inverse_cdf(p - 0.5),
            // never reached through true_parameter: Bernoulli/bvn only pair with mean/corr
            DgpSpec::Bernoulli05 | DgpSpec::Bernoulli09 | DgpSpec::BivariateNormal => f64::NAN,
        }
    }
}

/// Laplace(0, 1) inverse CDF parameterised by `u = F − 1/2 ∈ (−1/2, 1/2)`.
fn laplace_inverse_cdf(u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Uniform on the open interval (−1/2, 1/2).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        if u > -0.5 {
            return u;
        }
    }
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

impl fmt::Display for DgpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DgpSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DgpSpec::ALL.into_iter().find(|d| d.as_str() == s).ok_or_else(|| Error::invalid(format!("unknown dgp `{s}`")))
    }
}

/// An observed dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Univariate(Vec<f64>),
    Bivariate(Vec<[f64; 2]>),
}

impl Sample {
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample contains non-finite values"));
        }
        Ok(Sample::Univariate(values))
    }

    pub fn bivariate(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("empty sample"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample contains non-finite values"));
        }
        Ok(Sample::Bivariate(rows))
    }

    pub fn len(&self) -> usize {
        match self {
            Sample::Univariate(v) => v.len(),
            Sample::Bivariate(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_bivariate(&self) -> bool {
        matches!(self, Sample::Bivariate(_))
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Sample::Univariate(v) => Some(v),
            Sample::Bivariate(_) => None,
        }
    }

    /// True when every observation (row) is identical.
    pub fn is_constant(&self) -> bool {
        match self {
            Sample::Univariate(v) => v.windows(2).all(|w| w[0] == w[1]),
            Sample::Bivariate(r) => r.windows(2).all(|w| w[0] == w[1]),
        }
    }

    /// The resample of rows selected by `idx`.
    pub fn gather(&self, idx: &[u32]) -> Sample {
        match self {
            Sample::Univariate(v) => Sample::Univariate(idx.iter().map(|&i| v[i as usize]).collect()),
            Sample::Bivariate(r) => Sample::Bivariate(idx.iter().map(|&i| r[i as usize]).collect()),
        }
    }

    /// Applies `x → a·x + c` to every value (both coordinates when bivariate).
    pub fn affine(&self, a: f64, c: f64) -> Sample {
        match self {
            Sample::Univariate(v) => Sample::Univariate(v.iter().map(|x| a * x + c).collect()),
            Sample::Bivariate(r) => Sample::Bivariate(r.iter().map(|[x, y]| [a * x + c, a * y + c]).collect()),
        }
    }
}
