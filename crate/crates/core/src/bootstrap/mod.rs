//! Non-parametric resampling and the bootstrap endpoint methods.
//!
//! Every endpoint is the upper limit of a one-sided interval `(−∞, e]` whose
//! intended coverage is `alpha`.

mod nested;

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dgp::Sample;
use crate::error::{Error, Failure, Result};
use crate::functionals::{quantile_reflected, quantile_sorted, std_dev, Functional, Scratch};
use crate::rng::{fill_indices, RngStream};
use crate::special::{norm_cdf, norm_ppf};

pub use nested::{bt_endpoint, db_endpoint, DoubleBootstrap, ResamplePlan, Studentized};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BootstrapMethod {
    Percentile,
    Standard,
    Basic,
    Smoothed,
    BiasCorrected,
    Bca,
    Studentized,
    Double,
}

impl BootstrapMethod {
    pub const ALL: [BootstrapMethod; 8] = [
        BootstrapMethod::Percentile,
        BootstrapMethod::Standard,
        BootstrapMethod::Basic,
        BootstrapMethod::Smoothed,
        BootstrapMethod::BiasCorrected,
        BootstrapMethod::Bca,
        BootstrapMethod::Studentized,
        BootstrapMethod::Double,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BootstrapMethod::Percentile => "pb",
            BootstrapMethod::Standard => "bn",
            BootstrapMethod::Basic => "bb",
            BootstrapMethod::Smoothed => "sb",
            BootstrapMethod::BiasCorrected => "bc",
            BootstrapMethod::Bca => "bca",
            BootstrapMethod::Studentized => "bt",
            BootstrapMethod::Double => "db",
        }
    }

    /// Display label as used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            BootstrapMethod::Percentile => "PB",
            BootstrapMethod::Standard => "B-n",
            BootstrapMethod::Basic => "BB",
            BootstrapMethod::Smoothed => "SB",
            BootstrapMethod::BiasCorrected => "BC",
            BootstrapMethod::Bca => "BCa",
            BootstrapMethod::Studentized => "B-t",
            BootstrapMethod::Double => "DB",
        }
    }

    /// Methods that read the shared single-level bootstrap distribution.
    pub fn uses_shared_distribution(self) -> bool {
        !matches!(self, BootstrapMethod::Studentized | BootstrapMethod::Double)
    }
}

impl fmt::Display for BootstrapMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BootstrapMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BootstrapMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown bootstrap method `{s}`")))
    }
}

/// How estimates equal to the plug-in value count in a bias fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// Only strictly smaller estimates count.
    Strict,
    /// Ties count one half.
    #[default]
    Midrank,
}

impl FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(TieRule::Strict),
            "midrank" => Ok(TieRule::Midrank),
            _ => Err(Error::invalid(format!("unknown tie rule `{s}`"))),
        }
    }
}

/// Sorted bootstrap estimates of a functional plus the plug-in estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDistribution {
    estimates: Vec<f64>,
    b_requested: usize,
    theta_hat: f64,
}

impl BootstrapDistribution {
    /// Builds a distribution from raw (unsorted) estimates.
    pub fn new(mut estimates: Vec<f64>, b_requested: usize, theta_hat: f64) -> Result<Self> {
        if !theta_hat.is_finite() {
            return Err(Error::invalid("plug-in estimate must be finite"));
        }
        if estimates.len() > b_requested {
            return Err(Error::invalid("more estimates than requested resamples"));
        }
        if estimates.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("bootstrap estimates must be finite"));
        }
        estimates.sort_unstable_by(f64::total_cmp);
        Ok(BootstrapDistribution { estimates, b_requested, theta_hat })
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn b_requested(&self) -> usize {
        self.b_requested
    }

    pub fn b_valid(&self) -> usize {
        self.estimates.len()
    }

    /// Number of resamples lost to a degenerate functional.
    pub fn b_degenerate(&self) -> usize {
        self.b_requested - self.estimates.len()
    }

    pub fn theta_hat(&self) -> f64 {
        self.theta_hat
    }

    /// Standard deviation of the estimates (`B − 1` denominator).
    pub fn std_dev(&self) -> Result<f64> {
        self.require(2)?;
        Ok(std_dev(&self.estimates))
    }

    fn require(&self, min: usize) -> Result<()> {
        if self.estimates.len() < min {
            Err(Failure::TooFewValidResamples.into())
        } else {
            Ok(())
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// Draws `b` with-replacement resamples of the rows of `s` and evaluates `f`
/// on each. Resample `i` uses the sub-stream `stream.derive(i)`.
pub fn resample(s: &Sample, b: usize, f: Functional, stream: &RngStream) -> Result<BootstrapDistribution> {
    if b == 0 {
        return Err(Error::invalid("number of resamples must be positive"));
    }
    let theta_hat = f.evaluate(s)?;
    let estimates = draw_estimates(s, b, f, stream);
    if estimates.is_empty() {
        return Err(Failure::TooFewValidResamples.into());
    }
    BootstrapDistribution::new(estimates, b, theta_hat)
}

/// Estimates of `f` on `b` resamples; degenerate resamples are dropped.
pub(crate) fn draw_estimates(s: &Sample, b: usize, f: Functional, stream: &RngStream) -> Vec<f64> {
    let n = s.len();
    (0..b)
        .into_par_iter()
        .with_min_len(64)
        .map_init(
            || (Scratch::default(), vec![0u32; n]),
            |(scratch, idx), i| {
                let mut rng = stream.derive(i as u64).rng();
                fill_indices(&mut rng, n as u32, idx);
                f.eval_indexed(s, idx, scratch).ok()
            },
        )
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Percentile method: the `alpha` quantile of the bootstrap distribution.
pub fn pb_endpoint(d: &BootstrapDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    d.require(1)?;
    Ok(quantile_sorted(&d.estimates, alpha))
}

/// Standard (normal) method: `θ̂ + σ̂·z_α`.
pub fn bn_endpoint(theta_hat: f64, sigma_hat: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(sigma_hat >= 0.0 && sigma_hat.is_finite()) || !theta_hat.is_finite() {
        return Err(Error::invalid("standard method needs finite θ̂ and σ̂ ≥ 0"));
    }
    Ok(theta_hat + sigma_hat * norm_ppf(alpha))
}

/// Basic (reverse percentile) method: `2θ̂ − θ̂*_{1−α}`, evaluated as the
/// `alpha` quantile of the reflected estimates `2θ̂ − θ̂*`.
pub fn bb_endpoint(d: &BootstrapDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    d.require(1)?;
    Ok(quantile_reflected(&d.estimates, d.theta_hat, alpha))
}

/// Kernel bandwidth `0.9·min(σ̂, IQR/1.34)` measured on the estimates.
pub fn sb_bandwidth(d: &BootstrapDistribution) -> Result<f64> {
    let sigma = d.std_dev()?;
    let iqr = quantile_sorted(&d.estimates, 0.75) - quantile_sorted(&d.estimates, 0.25);
    Ok(0.9 * sigma.min(iqr / 1.34))
}

/// Bootstrap estimates jittered with normal noise of width [`sb_bandwidth`],
/// sorted ascending.
pub fn smooth(d: &BootstrapDistribution, stream: &RngStream) -> Result<Vec<f64>> {
    let h = sb_bandwidth(d)?;
    if h == 0.0 {
        return Ok(d.estimates.clone());
    }
    let mut rng = stream.rng();
    let mut out: Vec<f64> = d
        .estimates
        .iter()
        .map(|e| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            e + h * eps
        })
        .collect();
    out.sort_unstable_by(f64::total_cmp);
    Ok(out)
}

/// Smoothed bootstrap: `alpha` quantile of the smoothed distribution.
pub fn sb_endpoint(d: &BootstrapDistribution, alpha: f64, stream: &RngStream) -> Result<f64> {
    check_alpha(alpha)?;
    let smoothed = smooth(d, stream)?;
    Ok(quantile_sorted(&smoothed, alpha))
}

/// Share of estimates below `theta_hat`, counting ties per `rule`.
pub fn bias_fraction(estimates: &[f64], theta_hat: f64, rule: TieRule) -> f64 {
    let (below, ties) = count_below(estimates, theta_hat);
    let ties_weight = match rule {
        TieRule::Strict => 0.0,
        TieRule::Midrank => 0.5,
    };
    (below as f64 + ties_weight * ties as f64) / estimates.len() as f64
}

pub(crate) fn count_below(estimates: &[f64], theta: f64) -> (usize, usize) {
    let mut below = 0;
    let mut ties = 0;
    for &e in estimates {
        if e < theta {
            below += 1;
        } else if e == theta {
            ties += 1;
        }
    }
    (below, ties)
}

fn bias_z(bias: f64) -> Result<f64> {
    if !(bias > 0.0 && bias < 1.0) {
        return Err(Failure::BiasFractionBoundary.into());
    }
    Ok(norm_ppf(bias))
}

/// Bias-corrected percentile level `Φ(2·Φ⁻¹(b̂) + z_α)`.
pub fn bc_level(bias: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let z0 = bias_z(bias)?;
    if z0 == 0.0 {
        return Ok(alpha);
    }
    Ok(norm_cdf(2.0 * z0 + norm_ppf(alpha)))
}

/// Bias-corrected method for a given bias fraction.
pub fn bc_endpoint(d: &BootstrapDistribution, bias: f64, alpha: f64) -> Result<f64> {
    let level = bc_level(bias, alpha)?;
    d.require(1)?;
    Ok(quantile_sorted(&d.estimates, level))
}

/// BCa level `Φ(z₀ + (z₀ + z_α)/(1 − a·(z₀ + z_α)))` with `z₀ = Φ⁻¹(b̂)`.
pub fn bca_level(bias: f64, accel: f64, alpha: f64) -> Result<f64> {
    if accel == 0.0 {
        return bc_level(bias, alpha);
    }
    check_alpha(alpha)?;
    let z0 = bias_z(bias)?;
    let w = z0 + norm_ppf(alpha);
    let denom = 1.0 - accel * w;
    if denom == 0.0 {
        return Err(Failure::ZeroDenominator.into());
    }
    Ok(norm_cdf(z0 + w / denom))
}

/// Bias-corrected and accelerated method.
pub fn bca_endpoint(d: &BootstrapDistribution, bias: f64, accel: f64, alpha: f64) -> Result<f64> {
    let level = bca_level(bias, accel, alpha)?;
    d.require(1)?;
    Ok(quantile_sorted(&d.estimates, level))
}

/// Leave-one-out jackknife estimate of the BCa acceleration constant.
pub fn jackknife_acceleration(s: &Sample, f: Functional) -> Result<f64> {
    f.check_arity(s)?;
    let n = s.len();
    if n < 3 {
        return Err(Error::invalid("jackknife acceleration needs at least 3 observations"));
    }
    let mut scratch = Scratch::default();
    let mut idx: Vec<u32> = Vec::with_capacity(n - 1);
    let mut loo = Vec::with_capacity(n);
    for i in 0..n as u32 {
        idx.clear();
        idx.extend((0..n as u32).filter(|&j| j != i));
        loo.push(f.eval_indexed(s, &idx, &mut scratch)?);
    }
    if loo.windows(2).all(|w| w[0] == w[1]) {
        return Err(Failure::ZeroVariance.into());
    }
    let mean = loo.iter().sum::<f64>() / n as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for v in &loo {
        let d = mean - v;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 == 0.0 {
        return Err(Failure::ZeroVariance.into());
    }
    Ok(s3 / (6.0 * s2.powf(1.5)))
}

#[cfg(test)]
mod tests;
