//! CSV / JSONL persistence of sweep records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::sim::SweepRecord;

pub const CSV_HEADER: [&str; 14] = [
    "k", "n", "eta", "omega", "m", "gamma", "trials", "seed", "mc_estimate", "ci_low", "ci_high",
    "lower", "upper", "exact",
];

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}, line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}, record {record}: {reason}")]
    Schema {
        path: PathBuf,
        record: usize,
        reason: String,
    },
    #[error("unknown output format `{0}` (expected csv or jsonl)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = PersistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(PersistError::UnknownFormat(other.to_string())),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Jsonl => "jsonl",
        }
    }
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros dropped.
/// Always parses back to the identical `f64`.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        strip_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa.to_string()), exp.abs())
    }
}

fn strip_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g17).unwrap_or_default()
}

fn csv_fields(r: &SweepRecord) -> [String; 14] {
    [
        r.k.to_string(),
        r.n.to_string(),
        fmt_g17(r.eta),
        r.omega.clone(),
        r.m.to_string(),
        fmt_g17(r.gamma),
        r.trials.to_string(),
        r.seed.to_string(),
        fmt_g17(r.mc_estimate),
        fmt_g17(r.ci_low),
        fmt_g17(r.ci_high),
        opt(r.lower),
        opt(r.upper),
        opt(r.exact),
    ]
}

/// Serializes records to a writer in the given format.
pub fn write_records<W: Write>(
    records: &[SweepRecord],
    format: Format,
    out: W,
) -> Result<(), PersistError> {
    let stdout_path = || PathBuf::from("<stream>");
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)
                .map_err(|source| PersistError::Csv { path: stdout_path(), source })?;
            for r in records {
                w.write_record(csv_fields(r))
                    .map_err(|source| PersistError::Csv { path: stdout_path(), source })?;
            }
            w.flush()
                .map_err(|source| PersistError::Io { path: stdout_path(), source })?;
        }
        Format::Jsonl => {
            let mut w = out;
            for (i, r) in records.iter().enumerate() {
                let line = serde_json::to_string(r).map_err(|source| PersistError::Json {
                    path: stdout_path(),
                    line: i + 1,
                    source,
                })?;
                writeln!(w, "{line}").map_err(|source| PersistError::Io { path: stdout_path(), source })?;
            }
            w.flush()
                .map_err(|source| PersistError::Io { path: stdout_path(), source })?;
        }
    }
    Ok(())
}

/// Writes records to `path`; an empty list yields a header-only CSV.
pub fn persist(records: &[SweepRecord], path: &Path, format: Format) -> Result<(), PersistError> {
    let file = File::create(path).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_records(records, format, BufWriter::new(file)).map_err(|e| e.with_path(path))
}

/// Reads back records written by [`persist`].
pub fn load(path: &Path, format: Format) -> Result<Vec<SweepRecord>, PersistError> {
    let file = File::open(path).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        Format::Csv => load_csv(file, path),
        Format::Jsonl => BufReader::new(file)
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|(i, line)| {
                let line = line.map_err(|source| PersistError::Io { path: path.to_path_buf(), source })?;
                serde_json::from_str(&line).map_err(|source| PersistError::Json {
                    path: path.to_path_buf(),
                    line: i + 1,
                    source,
                })
            })
            .collect(),
    }
}

fn load_csv(file: File, path: &Path) -> Result<Vec<SweepRecord>, PersistError> {
    let csv_err = |source| PersistError::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(PersistError::Schema {
            path: path.to_path_buf(),
            record: 0,
            reason: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let schema = |reason: String| PersistError::Schema {
            path: path.to_path_buf(),
            record: i + 1,
            reason,
        };
        let field = |j: usize| row.get(j).unwrap_or("");
        fn num<T: FromStr>(s: &str, name: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} `{s}`"))
        }
        let optf = |j: usize| -> Result<Option<f64>, String> {
            match field(j) {
                "" => Ok(None),
                s => num(s, CSV_HEADER[j]).map(Some),
            }
        };
        let rec = (|| -> Result<SweepRecord, String> {
            Ok(SweepRecord {
                k: num(field(0), "k")?,
                n: num(field(1), "n")?,
                eta: num(field(2), "eta")?,
                omega: field(3).to_string(),
                m: num(field(4), "m")?,
                gamma: num(field(5), "gamma")?,
                trials: num(field(6), "trials")?,
                seed: num(field(7), "seed")?,
                mc_estimate: num(field(8), "mc_estimate")?,
                ci_low: num(field(9), "ci_low")?,
                ci_high: num(field(10), "ci_high")?,
                lower: optf(11)?,
                upper: optf(12)?,
                exact: optf(13)?,
            })
        })()
        .map_err(schema)?;
        out.push(rec);
    }
    Ok(out)
}

impl PersistError {
    fn with_path(self, p: &Path) -> Self {
        let path = p.to_path_buf();
        match self {
            Self::Io { source, .. } => Self::Io { path, source },
            Self::Csv { source, .. } => Self::Csv { path, source },
            Self::Json { line, source, .. } => Self::Json { path, line, source },
            Self::Schema { record, reason, .. } => Self::Schema { path, record, reason },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(m: usize, exact: Option<f64>) -> SweepRecord {
        SweepRecord {
            k: 20,
            n: 21,
            eta: 0.7,
            omega: "robust(0.04,0.01)".into(),
            m,
            gamma: m as f64 / 20.0,
            trials: 100_000,
            seed: 42,
            mc_estimate: 0.1 + 0.2,
            ci_low: 1.0 / 3.0,
            ci_high: 2.0f64.sqrt() / 2.0,
            lower: Some(-0.0),
            upper: Some(1e-300),
            exact,
        }
    }

    #[test]
    fn g17_matches_c_printf() {
        assert_eq!(fmt_g17(0.7), "0.69999999999999996");
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(1.05), "1.05");
        assert_eq!(fmt_g17(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(fmt_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(fmt_g17(1e20), "1e+20");
        assert_eq!(fmt_g17(0.0001), "0.0001");
        assert_eq!(fmt_g17(123456.0), "123456");
    }

    #[test]
    fn empty_list_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        persist(&[], &p, Format::Csv).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
        assert!(load(&p, Format::Csv).unwrap().is_empty());
    }

    #[test]
    fn round_trips_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![record(20, None), record(21, Some(0.123_456_789_012_345_68))];
        for f in [Format::Csv, Format::Jsonl] {
            let p = dir.path().join(format!("r.{}", f.extension()));
            persist(&recs, &p, f).unwrap();
            assert_eq!(load(&p, f).unwrap(), recs);
        }
        let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert!(text.contains("\"robust(0.04,0.01)\""));
        assert!(text.lines().nth(1).unwrap().ends_with(",-0,1e-300,"));
    }

    #[test]
    fn errors_name_the_path() {
        let p = Path::new("/nonexistent-dir/x.csv");
        let e = persist(&[], p, Format::Csv).unwrap_err();
        assert!(e.to_string().contains("/nonexistent-dir/x.csv"));
        let e = load(p, Format::Jsonl).unwrap_err();
        assert!(e.to_string().contains("/nonexistent-dir/x.csv"));
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(load(&p, Format::Csv), Err(PersistError::Schema { .. })));
        assert!("xml".parse::<Format>().is_err());
    }

    proptest! {
        #[test]
        fn g17_parses_back_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = fmt_g17(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }

        #[test]
        fn csv_round_trip(mc in 0.0f64..=1.0, lo in 0.0f64..1.0, ex in proptest::option::of(0.0f64..=1.0)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("p.csv");
            let mut r = record(33, ex);
            r.mc_estimate = mc;
            r.lower = Some(lo);
            persist(std::slice::from_ref(&r), &p, Format::Csv).unwrap();
            prop_assert_eq!(load(&p, Format::Csv).unwrap(), vec![r]);
        }
    }
}
