//! Replication loop and per-cell aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{CellSpec, ExperimentPlan};
use crate::error::{split_failure, Error, Failure, Result};
use crate::evaluation::{
    kl_coverage, normalize_distance, score_replication, two_sided, CoverageScore, ExactOracle, OracleCache,
};
use crate::functionals::std_dev;
use crate::method::{MethodId, ReplicationContext};
use crate::rng::{domain, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::One => "one",
            Side::Two => "two",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(Side::One),
            "two" => Ok(Side::Two),
            _ => Err(Error::invalid(format!("unknown side `{s}`"))),
        }
    }
}

/// What happened to one method at one level in one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Bernoulli sample with all values equal.
    Removed,
    Failed(Failure),
    Scored {
        /// Lower endpoint, for two-sided intervals.
        lower: Option<f64>,
        upper: f64,
        covered: bool,
        abs_dist: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationRecord {
    pub method: MethodId,
    /// Nominal coverage: the one-sided level, or `1 − 2α` for the interval
    /// built from levels `α` and `1 − α`.
    pub alpha: f64,
    pub side: Side,
    pub replication: usize,
    pub outcome: Outcome,
    /// Exact endpoint for this replication when the oracle is on; for
    /// intervals, the exact upper endpoint.
    pub exact: Option<f64>,
}

/// All records of one cell, ordered by replication, method, side, level.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub cell: CellSpec,
    pub n_rep: usize,
    pub b: usize,
    pub records: Vec<ReplicationRecord>,
}

/// Interval levels formed from the configured one-sided levels.
pub fn two_sided_pairs(alphas: &[f64]) -> Vec<(f64, f64)> {
    alphas
        .iter()
        .filter(|&&a| a < 0.5)
        .filter_map(|&a| alphas.iter().find(|&&b| (a + b - 1.0).abs() < 1e-12).map(|&b| (a, b)))
        .collect()
}

fn nominal_two_sided(lo: f64) -> f64 {
    // keep e.g. 1 − 2·0.025 identical to the literal 0.95
    ((1.0 - 2.0 * lo) * 1e12).round() / 1e12
}

/// Stream of replication `r` of `cell` under run seed `seed`.
pub fn replication_stream(seed: u64, cell: &CellSpec, r: usize) -> RngStream {
    RngStream::new(seed).derive(domain::CELL).derive_str(&cell.label()).derive(r as u64)
}

/// Runs every replication of one cell. Replications run in parallel and are
/// collected in index order, so the records do not depend on scheduling.
pub fn run_cell(cell: &CellSpec, plan: &ExperimentPlan, oracles: Option<&OracleCache>) -> Result<CellRun> {
    if !cell.dgp.supports(cell.functional) {
        return Err(Error::invalid(format!("illegal cell {}", cell.label())));
    }
    if plan.n_rep == 0 {
        return Err(Error::invalid("n_rep must be at least 1"));
    }
    plan.settings.validate()?;
    let theta = cell.dgp.true_parameter(cell.functional)?;
    let oracle = match oracles {
        Some(cache) => Some(cache.get(cell.dgp, cell.functional, cell.n)?),
        None => None,
    };
    let methods: Vec<MethodId> =
        plan.methods.iter().copied().filter(|m| m.applies(cell.dgp, cell.functional)).collect();
    let pairs = two_sided_pairs(&plan.alphas);

    let per_rep: Vec<Vec<ReplicationRecord>> = (0..plan.n_rep)
        .into_par_iter()
        .map(|r| replicate(cell, plan, r, theta, oracle.as_deref(), &methods, &pairs))
        .collect::<Result<_>>()?;
    Ok(CellRun { cell: *cell, n_rep: plan.n_rep, b: plan.settings.b, records: per_rep.into_iter().flatten().collect() })
}

fn replicate(
    cell: &CellSpec,
    plan: &ExperimentPlan,
    r: usize,
    theta: f64,
    oracle: Option<&ExactOracle>,
    methods: &[MethodId],
    pairs: &[(f64, f64)],
) -> Result<Vec<ReplicationRecord>> {
    let stream = replication_stream(plan.seed, cell, r);
    let sample = cell.dgp.draw_sample(cell.n, &stream.derive(domain::SAMPLE))?;
    let mut out = Vec::with_capacity(methods.len() * (plan.alphas.len() + pairs.len()));
    let record =
        |method, alpha, side, outcome, exact| ReplicationRecord { method, alpha, side, replication: r, outcome, exact };
    if cell.dgp.is_bernoulli() && sample.is_constant() {
        for &m in methods {
            for &a in &plan.alphas {
                out.push(record(m, a, Side::One, Outcome::Removed, None));
            }
            for &(lo, _) in pairs {
                out.push(record(m, nominal_two_sided(lo), Side::Two, Outcome::Removed, None));
            }
        }
        return Ok(out);
    }

    let theta_hat = split_failure(cell.functional.evaluate(&sample))?.ok();
    let exact_at = |alpha: f64| -> Result<Option<f64>> {
        match (oracle, theta_hat) {
            (Some(o), Some(t)) => Ok(Some(o.endpoint(t, alpha)?)),
            _ => Ok(None),
        }
    };
    let ctx = ReplicationContext::new(&sample, cell.functional, plan.settings, stream);
    for &m in methods {
        let mut one_sided = Vec::with_capacity(plan.alphas.len());
        for &a in &plan.alphas {
            let ep = split_failure(ctx.endpoint(m, a))?;
            one_sided.push(ep);
            let exact = exact_at(a)?;
            let outcome = match ep {
                Err(f) => Outcome::Failed(f),
                Ok(e) => {
                    let s = score_replication(e, theta, exact);
                    Outcome::Scored { lower: None, upper: e, covered: s.covered, abs_dist: s.abs_dist }
                }
            };
            out.push(record(m, a, Side::One, outcome, exact));
        }
        for &(lo, hi) in pairs {
            let at = |a: f64| one_sided[plan.alphas.iter().position(|&x| x == a).expect("configured level")];
            let (ex_lo, ex_hi) = (exact_at(lo)?, exact_at(hi)?);
            let outcome = match two_sided(at(lo), at(hi)) {
                Err(f) => Outcome::Failed(f),
                Ok(iv) => Outcome::Scored {
                    lower: Some(iv.lower),
                    upper: iv.upper,
                    covered: iv.covers(theta),
                    abs_dist: ex_lo.zip(ex_hi).map(|(l, h)| 0.5 * ((iv.lower - l).abs() + (iv.upper - h).abs())),
                },
            };
            // both exact ends shift with the estimate, so their spread is the same
            out.push(record(m, nominal_two_sided(lo), Side::Two, outcome, ex_hi));
        }
    }
    Ok(out)
}

/// Key of one output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowKey {
    pub cell: CellSpec,
    pub alpha: f64,
    pub side: Side,
    pub method: MethodId,
}

/// Summary of one (cell, level, side, method).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRecord {
    pub key: RowKey,
    pub b: usize,
    pub n_rep: usize,
    /// Empirical coverage over scored replications; `None` if none scored.
    pub coverage: Option<f64>,
    pub coverage_se: Option<f64>,
    pub kl: Option<f64>,
    pub dist_norm: Option<f64>,
    /// Failed share of non-removed replications; `None` if all removed.
    pub fail_rate: Option<f64>,
    pub removed_rate: f64,
}

impl AggregateRecord {
    /// Whether the method produced no interval at all in this cell.
    pub fn is_empty(&self) -> bool {
        self.coverage.is_none()
    }
}

#[derive(Default)]
struct Tally {
    scored: usize,
    covered: usize,
    failed: usize,
    removed: usize,
    dist_sum: f64,
    dist_count: usize,
    exact: Vec<f64>,
}

/// Folds a cell's records into one row per (method, side, level). Rows come
/// out ordered by method, side and level.
pub fn aggregate(run: &CellRun) -> Result<Vec<AggregateRecord>> {
    let mut groups: BTreeMap<(MethodId, Side, u64), (f64, Tally)> = BTreeMap::new();
    for rec in &run.records {
        let key = (rec.method, rec.side, rec.alpha.to_bits());
        let (_, t) = groups.entry(key).or_insert_with(|| (rec.alpha, Tally::default()));
        if let Some(e) = rec.exact {
            t.exact.push(e);
        }
        match rec.outcome {
            Outcome::Removed => t.removed += 1,
            Outcome::Failed(_) => t.failed += 1,
            Outcome::Scored { covered, abs_dist, .. } => {
                t.scored += 1;
                t.covered += covered as usize;
                if let Some(d) = abs_dist {
                    t.dist_sum += d;
                    t.dist_count += 1;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((method, side, _), (alpha, t)) in groups {
        let total = t.scored + t.failed + t.removed;
        if total != run.n_rep {
            return Err(Error::invalid(format!(
                "cell {} {} α={alpha}: {total} records for {} replications",
                run.cell.label(),
                method,
                run.n_rep
            )));
        }
        let cov = (t.scored > 0).then(|| CoverageScore::new(t.covered, t.scored, alpha)).transpose()?;
        let kl = cov.map(|c| kl_coverage(c.p, alpha)).transpose()?;
        let spread = if t.exact.len() >= 2 { std_dev(&t.exact) } else { 0.0 };
        let dist_norm = (t.dist_count > 0 && spread > 0.0)
            .then(|| normalize_distance(t.dist_sum / t.dist_count as f64, spread))
            .transpose()?;
        let live = total - t.removed;
        out.push(AggregateRecord {
            key: RowKey { cell: run.cell, alpha, side, method },
            b: run.b,
            n_rep: run.n_rep,
            coverage: cov.map(|c| c.p),
            coverage_se: cov.map(|c| c.mc_se),
            kl,
            dist_norm,
            fail_rate: (live > 0).then(|| t.failed as f64 / live as f64),
            removed_rate: t.removed as f64 / total as f64,
        });
    }
    Ok(out)
}

/// Runs every cell of a plan and returns the aggregates in output order.
/// `progress` is called after each cell.
pub fn run_plan(plan: &ExperimentPlan, mut progress: impl FnMut(usize, &CellSpec)) -> Result<Vec<AggregateRecord>> {
    let oracles = plan.exact.then(|| OracleCache::new(plan.seed, plan.oracle_draws));
    let mut all = Vec::new();
    for (i, cell) in plan.cells.iter().enumerate() {
        let run = run_cell(cell, plan, oracles.as_ref())?;
        all.extend(aggregate(&run)?);
        progress(i, cell);
    }
    super::output::sort_rows(&mut all);
    Ok(all)
}
