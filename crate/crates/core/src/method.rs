//! Method identifiers and per-replication evaluation with shared work.

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use crate::baselines::{BaselineFit, BaselineKind, BaselineMethod};
use crate::bootstrap::{
    bb_endpoint, bc_endpoint, bca_endpoint, bias_fraction, bn_endpoint, jackknife_acceleration, pb_endpoint, resample,
    smooth, BootstrapDistribution, BootstrapMethod, DoubleBootstrap, ResamplePlan, Studentized, TieRule,
};
use crate::dgp::{DgpSpec, Sample};
use crate::error::{Error, Failure, Result};
use crate::functionals::{quantile_sorted, Functional};
use crate::rng::{domain, RngStream};

/// Any method the harness can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Bootstrap(BootstrapMethod),
    Baseline(BaselineKind),
}

impl MethodId {
    pub fn all() -> impl Iterator<Item = MethodId> {
        BootstrapMethod::ALL
            .into_iter()
            .map(MethodId::Bootstrap)
            .chain(BaselineKind::ALL.into_iter().map(MethodId::Baseline))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Bootstrap(m) => m.as_str(),
            MethodId::Baseline(k) => k.as_str(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MethodId::Bootstrap(m) => m.label(),
            MethodId::Baseline(k) => k.label(),
        }
    }

    /// Whether the method runs on cells of this DGP and functional.
    pub fn applies(self, dgp: DgpSpec, f: Functional) -> bool {
        match self {
            MethodId::Bootstrap(_) => dgp.supports(f),
            MethodId::Baseline(k) => dgp.supports(f) && k.applies_to(f) && (!k.needs_binary() || dgp.is_bernoulli()),
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::all().find(|m| m.as_str() == s).ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// Resampling budgets shared by all bootstrap methods of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleSettings {
    /// Single-level resamples, also the outer count of nested methods.
    pub b: usize,
    /// Inner resamples per outer resample for the double bootstrap.
    pub b_inner: usize,
    /// Inner resamples per outer resample for the studentized bootstrap.
    pub b_inner_bt: usize,
    pub tie_rule: TieRule,
}

impl Default for ResampleSettings {
    fn default() -> Self {
        ResampleSettings { b: 1000, b_inner: 1000, b_inner_bt: 50, tie_rule: TieRule::default() }
    }
}

impl ResampleSettings {
    pub fn validate(&self) -> Result<()> {
        if self.b < 2 {
            return Err(Error::invalid("need at least 2 resamples"));
        }
        if self.b_inner < 1 {
            return Err(Error::invalid("double bootstrap needs at least 1 inner resample"));
        }
        if self.b_inner_bt < 2 {
            return Err(Error::invalid("studentized bootstrap needs at least 2 inner resamples"));
        }
        Ok(())
    }
}

/// Cached outcome; non-failure errors keep their message.
#[derive(Debug, Clone)]
enum Cached {
    Failure(Failure),
    Invalid(String),
}

impl From<Error> for Cached {
    fn from(e: Error) -> Self {
        match e {
            Error::Failure(f) => Cached::Failure(f),
            other => Cached::Invalid(other.to_string()),
        }
    }
}

impl From<Cached> for Error {
    fn from(c: Cached) -> Self {
        match c {
            Cached::Failure(f) => Error::Failure(f),
            Cached::Invalid(msg) => Error::InvalidArgument(msg),
        }
    }
}

type Slot<T> = OnceCell<std::result::Result<T, Cached>>;

fn fetch<T: Clone>(slot: &Slot<T>, compute: impl FnOnce() -> Result<T>) -> Result<T> {
    slot.get_or_init(|| compute().map_err(Cached::from)).clone().map_err(Error::from)
}

/// Evaluates methods on one sample, computing each shared ingredient (the
/// bootstrap distribution, smoothing, acceleration, nested resampling) at
/// most once.
pub struct ReplicationContext<'a> {
    sample: &'a Sample,
    functional: Functional,
    settings: ResampleSettings,
    stream: RngStream,
    distribution: Slot<BootstrapDistribution>,
    smoothed: Slot<Vec<f64>>,
    acceleration: Slot<f64>,
    studentized: Slot<Studentized>,
    double: Slot<DoubleBootstrap>,
    baselines: [Slot<BaselineFit>; BaselineKind::ALL.len()],
}

impl<'a> ReplicationContext<'a> {
    /// `stream` is the replication's own stream; each ingredient uses a
    /// separate domain under it.
    pub fn new(sample: &'a Sample, functional: Functional, settings: ResampleSettings, stream: RngStream) -> Self {
        ReplicationContext {
            sample,
            functional,
            settings,
            stream,
            distribution: OnceCell::new(),
            smoothed: OnceCell::new(),
            acceleration: OnceCell::new(),
            studentized: OnceCell::new(),
            double: OnceCell::new(),
            baselines: Default::default(),
        }
    }

    pub fn distribution(&self) -> Result<BootstrapDistribution> {
        fetch(&self.distribution, || {
            resample(self.sample, self.settings.b, self.functional, &self.stream.derive(domain::BOOTSTRAP))
        })
    }

    fn smoothed(&self) -> Result<Vec<f64>> {
        fetch(&self.smoothed, || smooth(&self.distribution()?, &self.stream.derive(domain::SMOOTH)))
    }

    fn acceleration(&self) -> Result<f64> {
        fetch(&self.acceleration, || jackknife_acceleration(self.sample, self.functional))
    }

    fn studentized(&self) -> Result<Studentized> {
        fetch(&self.studentized, || {
            let plan = ResamplePlan::Random { outer: self.settings.b, inner: self.settings.b_inner_bt };
            Studentized::compute(self.sample, self.functional, plan, &self.stream.derive(domain::STUDENTIZED))
        })
    }

    fn double(&self) -> Result<DoubleBootstrap> {
        fetch(&self.double, || {
            let plan = ResamplePlan::Random { outer: self.settings.b, inner: self.settings.b_inner };
            DoubleBootstrap::compute(
                self.sample,
                self.functional,
                plan,
                &self.stream.derive(domain::DOUBLE),
                self.settings.tie_rule,
            )
        })
    }

    fn baseline(&self, kind: BaselineKind) -> Result<BaselineFit> {
        let i = BaselineKind::ALL.iter().position(|&k| k == kind).expect("listed kind");
        fetch(&self.baselines[i], || BaselineFit::new(BaselineMethod::new(kind, self.functional)?, self.sample))
    }

    /// Upper endpoint of the one-sided interval at level `alpha`.
    pub fn endpoint(&self, method: MethodId, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
        }
        let rule = self.settings.tie_rule;
        match method {
            MethodId::Bootstrap(m) => match m {
                BootstrapMethod::Percentile => pb_endpoint(&self.distribution()?, alpha),
                BootstrapMethod::Standard => {
                    let d = self.distribution()?;
                    bn_endpoint(d.theta_hat(), d.std_dev()?, alpha)
                }
                BootstrapMethod::Basic => bb_endpoint(&self.distribution()?, alpha),
                BootstrapMethod::Smoothed => Ok(quantile_sorted(&self.smoothed()?, alpha)),
                BootstrapMethod::BiasCorrected => {
                    let d = self.distribution()?;
                    bc_endpoint(&d, bias_fraction(d.estimates(), d.theta_hat(), rule), alpha)
                }
                BootstrapMethod::Bca => {
                    let d = self.distribution()?;
                    let bias = bias_fraction(d.estimates(), d.theta_hat(), rule);
                    bca_endpoint(&d, bias, self.acceleration()?, alpha)
                }
                BootstrapMethod::Studentized => self.studentized()?.endpoint(alpha),
                BootstrapMethod::Double => self.double()?.endpoint(alpha),
            },
            MethodId::Baseline(k) => self.baseline(k)?.endpoint(alpha),
        }
    }
}
