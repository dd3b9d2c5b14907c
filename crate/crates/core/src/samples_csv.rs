//! Sample CSV files.
//!
//! ```text
//! # mode=compound
//! # seed=42
//! index,atom_index,n_minus,m,n_plus,s_n_minus,a,s_n_plus,b,b_took_upper
//! 0,3,1,4,4,0.8170...,...
//! ```
//!
//! Leading `# key=value` lines echo the run configuration. Exact runs write
//! values as decimals when the denominator is a power of two and as `p/q`
//! otherwise (`values=exact`); float runs write 17 significant digits
//! (`values=float`).

use std::io::{Read, Write};

use crate::coupling::{CouplingSample, SampleSet, Simulation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Rational;

pub const HEADER: [&str; 10] = [
    "index",
    "atom_index",
    "n_minus",
    "m",
    "n_plus",
    "s_n_minus",
    "a",
    "s_n_plus",
    "b",
    "b_took_upper",
];

pub fn write_sample_set<T: Scalar, W: Write>(set: &SampleSet<T>, mut out: W) -> Result<()> {
    let kind = if T::EXACT { "exact" } else { "float" };
    writeln!(out, "# values={kind}")?;
    for (k, v) in &set.echo {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for (i, s) in set.samples.iter().enumerate() {
        w.write_record([
            i.to_string(),
            s.atom_index.to_string(),
            s.n_minus.to_string(),
            s.m.to_string(),
            s.n_plus.to_string(),
            s.s_n_minus.to_csv_text(),
            s.a.to_csv_text(),
            s.s_n_plus.to_csv_text(),
            s.b.to_csv_text(),
            s.b_took_upper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_simulation<W: Write>(sim: &Simulation, out: W) -> Result<()> {
    match sim {
        Simulation::Exact(s) => write_sample_set(s, out),
        Simulation::Float(s) => write_sample_set(s, out),
    }
}

fn field<V: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: usize) -> Result<V> {
    record
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("row {line}: bad {} field", HEADER[i])))
}

fn value<T: Scalar>(record: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let text = record
        .get(i)
        .ok_or_else(|| Error::Parse(format!("row {line}: missing {}", HEADER[i])))?;
    T::parse_text(text).map_err(|e| Error::Parse(format!("row {line}: {}: {e}", HEADER[i])))
}

/// Read a sample file, parsing values as `T`.
///
/// Rows must match the header exactly and be numbered consecutively; when the
/// echo records `n`, the row count must match it.
pub fn read_sample_set<T: Scalar, R: Read>(mut input: R) -> Result<SampleSet<T>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut echo = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else { break };
        body_start += line.len();
        let rest = rest.trim();
        if let Some((k, v)) = rest.split_once('=') {
            echo.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    echo.retain(|(k, _)| k != "values");

    let mut reader = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let index: usize = field(&record, 0, line)?;
        if index != line {
            return Err(Error::Parse(format!("row {line} has index {index}")));
        }
        let took_upper: String = field(&record, 9, line)?;
        let b_took_upper = match took_upper.as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(Error::Parse(format!("row {line}: bad b_took_upper"))),
        };
        samples.push(CouplingSample {
            atom_index: field(&record, 1, line)?,
            n_minus: field(&record, 2, line)?,
            m: field(&record, 3, line)?,
            n_plus: field(&record, 4, line)?,
            s_n_minus: value(&record, 5, line)?,
            a: value(&record, 6, line)?,
            s_n_plus: value(&record, 7, line)?,
            b: value(&record, 8, line)?,
            b_took_upper,
        });
    }
    let set = SampleSet { echo, samples };
    if let Some(n) = set.echo_value("n") {
        let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad n={n} in header")))?;
        if n != set.samples.len() {
            return Err(Error::Parse(format!("expected {n} rows, found {}", set.samples.len())));
        }
    }
    Ok(set)
}

/// Read either kind of sample file, keeping exact values when the file has them.
pub fn read_simulation<R: Read>(mut input: R) -> Result<Simulation> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    if text.starts_with("# values=exact") {
        Ok(Simulation::Exact(read_sample_set::<Rational, _>(text.as_bytes())?))
    } else {
        Ok(Simulation::Float(read_sample_set::<f64, _>(text.as_bytes())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(a: Rational) -> CouplingSample<Rational> {
        CouplingSample {
            atom_index: 0,
            n_minus: 0,
            m: 1,
            n_plus: 2,
            s_n_minus: Rational::from_integer(0.into()),
            a: a.clone(),
            s_n_plus: a.clone() * Rational::from_integer(3.into()),
            b: a,
            b_took_upper: false,
        }
    }

    #[test]
    fn exact_round_trip() {
        let set = SampleSet {
            echo: vec![("mode".into(), "compound".into()), ("n".into(), "2".into())],
            samples: vec![sample(Rational::new(7.into(), 2.into())), sample(Rational::new(1.into(), 3.into()))],
        };
        let mut buf = Vec::new();
        write_sample_set(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# values=exact\n# mode=compound\n# n=2\nindex,atom_index,"));
        assert!(text.contains(",3.5,"));
        assert!(text.contains(",1/3,"));
        assert_eq!(read_simulation(buf.as_slice()).unwrap(), Simulation::Exact(set));
    }

    #[test]
    fn truncated_or_malformed_files_are_rejected() {
        let set = SampleSet {
            echo: vec![("n".into(), "2".into())],
            samples: vec![sample(Rational::from_integer(1.into())), sample(Rational::from_integer(2.into()))],
        };
        let mut buf = Vec::new();
        write_sample_set(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let dropped_row = text.trim_end().rsplit_once('\n').unwrap().0.to_string();
        assert!(read_simulation(dropped_row.as_bytes()).is_err());

        let cut_mid_row = &text[..text.len() - 8];
        assert!(read_simulation(cut_mid_row.as_bytes()).is_err());

        let wrong_header = text.replace("b_took_upper", "flag");
        assert!(read_simulation(wrong_header.as_bytes()).is_err());
    }
}
