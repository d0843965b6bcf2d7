//! Threshold checks, pairwise outperformance and plain-text summary tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::run::{AggregateRecord, Side};
use crate::dgp::DgpSpec;
use crate::error::{Error, Result};
use crate::evaluation::{Threshold, ThresholdSet};
use crate::functionals::Functional;
use crate::method::MethodId;

/// Whether the cell's coverage meets tolerance `t`. A cell without any
/// interval never does.
pub fn meets_threshold(agg: &AggregateRecord, set: &ThresholdSet, t: Threshold) -> bool {
    match agg.kl {
        Some(kl) => kl <= set.level(t) * (1.0 + 1e-12),
        None => false,
    }
}

/// Whether `a` is an order of magnitude better than `b` on one cell, given
/// that `b` misses tolerance `t`; a method without intervals loses to any
/// method with them.
pub fn outperforms(a: &AggregateRecord, b: &AggregateRecord, set: &ThresholdSet, t: Threshold) -> bool {
    match (a.kl, b.kl) {
        (Some(_), None) => true,
        (None, _) => false,
        (Some(ka), Some(kb)) => !meets_threshold(b, set, t) && ka <= kb / 5.0,
    }
}

type CellLevel = (DgpSpec, Functional, usize, u64, Side);

fn cell_level(a: &AggregateRecord) -> CellLevel {
    let k = a.key;
    (k.cell.dgp, k.cell.functional, k.cell.n, k.alpha.to_bits(), k.side)
}

/// Verdict for one cell of a pairwise comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub a: AggregateRecord,
    pub b: AggregateRecord,
    pub a_beats_b: bool,
    pub b_beats_a: bool,
}

/// Compares two methods over the same cells. Each slice holds the rows of a
/// single method; the two must cover identical (cell, level, side) keys.
pub fn compare_methods(
    a: &[AggregateRecord],
    b: &[AggregateRecord],
    set: &ThresholdSet,
    t: Threshold,
) -> Result<Vec<Verdict>> {
    let index = |rows: &[AggregateRecord]| -> Result<BTreeMap<CellLevel, AggregateRecord>> {
        let mut m = BTreeMap::new();
        for r in rows {
            if m.insert(cell_level(r), *r).is_some() {
                return Err(Error::invalid("duplicate cell in comparison input"));
            }
        }
        Ok(m)
    };
    let (ia, ib) = (index(a)?, index(b)?);
    if ia.keys().ne(ib.keys()) {
        return Err(Error::invalid("methods were not evaluated on identical cells"));
    }
    Ok(ia
        .into_iter()
        .zip(ib.into_values())
        .map(|((_, ra), rb)| Verdict {
            a: ra,
            b: rb,
            a_beats_b: outperforms(&ra, &rb, set, t),
            b_beats_a: outperforms(&rb, &ra, set, t),
        })
        .collect())
}

/// Per (n, functional): how often each `others` method beats `reference`,
/// and how often `reference` beats any of them. Only cells where both
/// methods were run are compared.
pub fn outperformance_table(
    rows: &[AggregateRecord],
    reference: MethodId,
    others: &[MethodId],
    side: Side,
    set: &ThresholdSet,
    t: Threshold,
) -> Result<String> {
    let of = |m: MethodId| -> Vec<AggregateRecord> {
        rows.iter().filter(|r| r.key.method == m && r.key.side == side).copied().collect()
    };
    let base = of(reference);
    if base.is_empty() {
        return Err(Error::invalid(format!("no {side}-sided rows for {reference}")));
    }
    let mut beats_ref: BTreeMap<(usize, Functional), BTreeMap<&str, usize>> = BTreeMap::new();
    let mut ref_beats: BTreeMap<(usize, Functional), usize> = BTreeMap::new();
    for &m in others {
        let theirs = of(m);
        let keys: BTreeSet<CellLevel> = theirs.iter().map(cell_level).collect();
        let mine: Vec<AggregateRecord> = base.iter().filter(|r| keys.contains(&cell_level(r))).copied().collect();
        for v in compare_methods(&mine, &theirs, set, t)? {
            let group = (v.a.key.cell.n, v.a.key.cell.functional);
            if v.b_beats_a {
                *beats_ref.entry(group).or_default().entry(m.label()).or_default() += 1;
            }
            if v.a_beats_b {
                *ref_beats.entry(group).or_default() += 1;
            }
        }
    }
    let groups: BTreeSet<(usize, Functional)> = beats_ref.keys().chain(ref_beats.keys()).copied().collect();
    let mut out = String::new();
    let head_other = format!("other >> {}", reference.label());
    let head_ref = format!("{} >> other", reference.label());
    writeln!(out, "{:>4}  {:<10}  {:<60}  {}", "n", "functional", head_other, head_ref).unwrap();
    for g in groups {
        let left = beats_ref
            .get(&g)
            .map(|m| m.iter().map(|(name, c)| format!("{name} ({c})")).collect::<Vec<_>>().join("; "))
            .unwrap_or_default();
        let right = ref_beats.get(&g).map(|c| format!("{} ({c})", reference.label())).unwrap_or_default();
        writeln!(out, "{:>4}  {:<10}  {:<60}  {}", g.0, g.1.label(), left, right).unwrap();
    }
    Ok(out)
}

/// Quantity summarised by [`summary_table`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    /// Mean KL divergence of coverage from nominal.
    Kl,
    /// Share of cells that miss the tolerance.
    Threshold(Threshold),
    /// Mean normalised distance from the exact endpoint.
    Distance,
}

/// Table with one row per method and columns `all`, each sample size and
/// each functional; rows are ordered by the `all` column.
pub fn summary_table(rows: &[AggregateRecord], metric: Metric, side: Side) -> Result<String> {
    let set = ThresholdSet::default();
    let selected: Vec<&AggregateRecord> = rows.iter().filter(|r| r.key.side == side).collect();
    if selected.is_empty() {
        return Err(Error::invalid(format!("no {side}-sided rows")));
    }
    let value = |r: &AggregateRecord| -> Option<f64> {
        match metric {
            Metric::Kl => r.kl,
            Metric::Distance => r.dist_norm,
            Metric::Threshold(t) => Some(if meets_threshold(r, &set, t) { 0.0 } else { 1.0 }),
        }
    };
    let ns: BTreeSet<usize> = selected.iter().map(|r| r.key.cell.n).collect();
    let fs: BTreeSet<&str> = selected.iter().map(|r| r.key.cell.functional.label()).collect();
    let methods: BTreeSet<MethodId> = selected.iter().map(|r| r.key.method).collect();

    let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    let mut table: Vec<(MethodId, Vec<Option<f64>>)> = methods
        .into_iter()
        .map(|m| {
            let mine: Vec<&&AggregateRecord> = selected.iter().filter(|r| r.key.method == m).collect();
            let collect = |keep: &dyn Fn(&AggregateRecord) -> bool| {
                mean(mine.iter().filter(|r| keep(r)).filter_map(|r| value(r)).collect())
            };
            let mut cols = vec![collect(&|_| true)];
            cols.extend(ns.iter().map(|&n| collect(&|r| r.key.cell.n == n)));
            cols.extend(fs.iter().map(|&f| collect(&|r| r.key.cell.functional.label() == f)));
            (m, cols)
        })
        .collect();
    table.sort_by(|a, b| {
        let key = |v: &Option<f64>| v.unwrap_or(f64::INFINITY);
        key(&a.1[0]).total_cmp(&key(&b.1[0])).then(a.0.cmp(&b.0))
    });

    let decimals = if matches!(metric, Metric::Threshold(_)) { 2 } else { 3 };
    let mut out = String::new();
    write!(out, "{:<10}{:>8}", "", "all").unwrap();
    for n in &ns {
        write!(out, "{n:>8}").unwrap();
    }
    for f in &fs {
        write!(out, "{f:>9}").unwrap();
    }
    out.push('\n');
    for (m, cols) in table {
        write!(out, "{:<10}", m.label()).unwrap();
        for (i, c) in cols.iter().enumerate() {
            let width = if i <= ns.len() { 8 } else { 9 };
            match c {
                Some(v) => write!(out, "{v:>width$.decimals$}").unwrap(),
                None => write!(out, "{:>width$}", "-").unwrap(),
            }
        }
        out.push('\n');
    }
    Ok(out)
}
