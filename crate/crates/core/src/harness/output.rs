//! Results CSV.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::CellSpec;
use super::run::{AggregateRecord, RowKey};
use crate::error::{Error, Result};

pub const COLUMNS: [&str; 14] = [
    "dgp",
    "functional",
    "n",
    "alpha",
    "side",
    "method",
    "B",
    "n_rep",
    "coverage",
    "coverage_se",
    "kl",
    "dist_norm",
    "fail_rate",
    "removed_rate",
];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    dgp: String,
    functional: String,
    n: usize,
    alpha: f64,
    side: String,
    method: String,
    #[serde(rename = "B")]
    b: usize,
    n_rep: usize,
    coverage: Option<f64>,
    coverage_se: Option<f64>,
    kl: Option<f64>,
    dist_norm: Option<f64>,
    fail_rate: Option<f64>,
    removed_rate: f64,
}

impl From<&AggregateRecord> for Row {
    fn from(a: &AggregateRecord) -> Self {
        Row {
            dgp: a.key.cell.dgp.as_str().into(),
            functional: a.key.cell.functional.as_str().into(),
            n: a.key.cell.n,
            alpha: a.key.alpha,
            side: a.key.side.as_str().into(),
            method: a.key.method.as_str().into(),
            b: a.b,
            n_rep: a.n_rep,
            coverage: a.coverage,
            coverage_se: a.coverage_se,
            kl: a.kl,
            dist_norm: a.dist_norm,
            fail_rate: a.fail_rate,
            removed_rate: a.removed_rate,
        }
    }
}

impl TryFrom<Row> for AggregateRecord {
    type Error = Error;

    fn try_from(r: Row) -> Result<Self> {
        Ok(AggregateRecord {
            key: RowKey {
                cell: CellSpec { dgp: r.dgp.parse()?, functional: r.functional.parse()?, n: r.n },
                alpha: r.alpha,
                side: r.side.parse()?,
                method: r.method.parse()?,
            },
            b: r.b,
            n_rep: r.n_rep,
            coverage: r.coverage,
            coverage_se: r.coverage_se,
            kl: r.kl,
            dist_norm: r.dist_norm,
            fail_rate: r.fail_rate,
            removed_rate: r.removed_rate,
        })
    }
}

fn key_order(a: &RowKey, b: &RowKey) -> Ordering {
    a.cell
        .dgp
        .as_str()
        .cmp(b.cell.dgp.as_str())
        .then_with(|| a.cell.functional.as_str().cmp(b.cell.functional.as_str()))
        .then_with(|| a.cell.n.cmp(&b.cell.n))
        .then_with(|| a.alpha.total_cmp(&b.alpha))
        .then_with(|| a.side.cmp(&b.side))
        .then_with(|| a.method.as_str().cmp(b.method.as_str()))
}

/// Sorts rows lexicographically on (dgp, functional, n, alpha, side, method).
pub fn sort_rows(rows: &mut [AggregateRecord]) {
    rows.sort_by(|a, b| key_order(&a.key, &b.key));
}

/// Writes rows in key order; an empty slice gives a header-only file.
pub fn write_results<W: Write>(rows: &[AggregateRecord], out: W) -> Result<()> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let csv_err = |source| Error::Csv { path: "<output>".into(), source };
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in &sorted {
        w.serialize(Row::from(r)).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<output>".into(), source })
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<AggregateRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let csv_err = |source| Error::Csv { path: "<input>".into(), source };
    let headers = rd.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(COLUMNS) {
        return Err(Error::invalid(format!("unexpected header: {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    rd.deserialize::<Row>().map(|r| r.map_err(csv_err).and_then(AggregateRecord::try_from)).collect()
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Csv { source, .. } => Error::Csv { path: path.to_owned(), source },
        Error::Io { source, .. } => Error::Io { path: path.to_owned(), source },
        other => other,
    }
}

pub fn emit_results(rows: &[AggregateRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    write_results(rows, std::io::BufWriter::new(file)).map_err(|e| with_path(e, path))
}

pub fn load_results(path: &Path) -> Result<Vec<AggregateRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    read_results(std::io::BufReader::new(file)).map_err(|e| with_path(e, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::BootstrapMethod;
    use crate::dgp::DgpSpec;
    use crate::functionals::Functional;
    use crate::harness::run::Side;
    use crate::method::MethodId;
    use proptest::prelude::*;

    fn record(coverage: Option<f64>, kl: Option<f64>, dist: Option<f64>, removed: f64) -> AggregateRecord {
        AggregateRecord {
            key: RowKey {
                cell: CellSpec { dgp: DgpSpec::LogNormal, functional: Functional::Std, n: 64 },
                alpha: 0.975,
                side: Side::One,
                method: MethodId::Bootstrap(BootstrapMethod::Bca),
            },
            b: 1000,
            n_rep: 10_000,
            coverage,
            coverage_se: coverage.map(|p| (p * (1.0 - p) / 1e4).sqrt()),
            kl,
            dist_norm: dist,
            fail_rate: Some(0.0),
            removed_rate: removed,
        }
    }

    #[test]
    fn empty_set_is_header_only() {
        let mut buf = Vec::new();
        write_results(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", COLUMNS.join(",")));
    }

    #[test]
    fn missing_values_are_empty_fields() {
        let mut buf = Vec::new();
        write_results(&[record(None, None, None, 0.25)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "lognormal,std,64,0.975,one,bca,1000,10000,,,,,0.0,0.25");
        assert_eq!(read_results(text.as_bytes()).unwrap(), vec![record(None, None, None, 0.25)]);
    }

    #[test]
    fn rows_sorted_by_key() {
        let mut a = record(Some(0.9), Some(0.1), None, 0.0);
        let mut b = a;
        b.key.cell.n = 8;
        a.key.method = MethodId::Bootstrap(BootstrapMethod::Double);
        let mut buf = Vec::new();
        write_results(&[a, b, record(Some(0.9), Some(0.1), None, 0.0)], &mut buf).unwrap();
        let rows = read_results(buf.as_slice()).unwrap();
        assert_eq!(rows[0].key.cell.n, 8);
        assert_eq!(rows[1].key.method.as_str(), "bca");
        assert_eq!(rows[2].key.method.as_str(), "db");
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(p in 0.0f64..=1.0, kl in 0.0f64..10.0, d in prop::option::of(0.0f64..5.0), rm in 0.0f64..1.0) {
            let rec = record(Some(p), Some(kl), d, rm);
            let mut buf = Vec::new();
            write_results(&[rec], &mut buf).unwrap();
            prop_assert_eq!(read_results(buf.as_slice()).unwrap(), vec![rec]);
        }
    }
}
