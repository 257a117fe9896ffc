//! CSV tables exchanged by the command-line front end.
//!
//! Dialect: comma-separated, header row, LF line endings, never quoted.
//! Reals are written with 17 significant digits so every `f64` survives a
//! round trip.

use crate::labeling::ClassMatrix;
use crate::{Error, Result};

/// 17 significant digits, fixed notation for moderate magnitudes and
/// scientific otherwise. Zero is written as `0`.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-5..16).contains(&exp) {
        format!("{x:.prec$}", prec = (16 - exp) as usize)
    } else {
        sci
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer cannot fail");
    String::from_utf8(bytes).expect("fields are ASCII")
}

/// Renders a table from a header and string rows.
pub fn write_table<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer();
    w.write_record(header)
        .expect("in-memory writer cannot fail");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .expect("in-memory writer cannot fail");
    }
    finish(w)
}

/// Parses a table, checking the header, and returns the data rows with
/// their 1-based line numbers.
pub fn read_table(text: &str, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| parse_err(1, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

fn parse_err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

fn field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e: T::Err| Error::Parse {
        line,
        msg: format!("`{s}`: {e}"),
    })
}

/// Rows must carry consecutive indices starting from 0.
fn check_index(line: usize, expected: usize, found: usize) -> Result<()> {
    if found != expected {
        return Err(Error::Parse {
            line,
            msg: format!("expected row index {expected}, found {found}"),
        });
    }
    Ok(())
}

pub const SCORES_HEADER: [&str; 2] = ["row_index", "score"];

pub fn write_scores(scores: &[f64]) -> String {
    write_table(
        &SCORES_HEADER,
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| [i.to_string(), format_f64(s)]),
    )
}

pub fn read_scores(text: &str) -> Result<Vec<f64>> {
    read_table(text, &SCORES_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, (line, row))| {
            check_index(*line, i, field(*line, &row[0])?)?;
            field(*line, &row[1])
        })
        .collect()
}

pub const INDEX_HEADER: [&str; 1] = ["index"];

pub fn write_indices(indices: &[usize]) -> String {
    write_table(&INDEX_HEADER, indices.iter().map(|i| [i.to_string()]))
}

pub fn read_indices(text: &str) -> Result<Vec<usize>> {
    read_table(text, &INDEX_HEADER)?
        .iter()
        .map(|(line, row)| field(*line, &row[0]))
        .collect()
}

pub const LABELS_HEADER: [&str; 2] = ["index", "label"];

/// `index` is the reference row the label belongs to.
pub fn write_labels(indices: &[usize], labels: &[u32]) -> String {
    assert_eq!(indices.len(), labels.len());
    write_table(
        &LABELS_HEADER,
        indices
            .iter()
            .zip(labels)
            .map(|(i, l)| [i.to_string(), l.to_string()]),
    )
}

pub fn read_labels(text: &str) -> Result<(Vec<usize>, Vec<u32>)> {
    let mut indices = Vec::new();
    let mut labels = Vec::new();
    for (line, row) in read_table(text, &LABELS_HEADER)? {
        indices.push(field(line, &row[0])?);
        labels.push(field(line, &row[1])?);
    }
    Ok((indices, labels))
}

pub const WEIGHTS_HEADER: [&str; 2] = ["index", "weight"];

pub fn write_weights(indices: &[usize], weights: &[f64]) -> String {
    assert_eq!(indices.len(), weights.len());
    write_table(
        &WEIGHTS_HEADER,
        indices
            .iter()
            .zip(weights)
            .map(|(i, &w)| [i.to_string(), format_f64(w)]),
    )
}

pub fn read_weights(text: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    for (line, row) in read_table(text, &WEIGHTS_HEADER)? {
        indices.push(field(line, &row[0])?);
        weights.push(field(line, &row[1])?);
    }
    Ok((indices, weights))
}

/// `class,c0,c1,...`: one row per hard class.
pub fn write_class_matrix(m: &ClassMatrix) -> String {
    let mut header = vec!["class".to_string()];
    header.extend((0..m.k()).map(|c| format!("c{c}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(
        &header,
        m.rows().enumerate().map(|(c, row)| {
            std::iter::once(c.to_string()).chain(row.iter().map(|&v| format_f64(v)))
        }),
    )
}

pub fn read_class_matrix(text: &str) -> Result<ClassMatrix> {
    let k = text
        .lines()
        .next()
        .map_or(0, |h| h.split(',').count().saturating_sub(1));
    let mut header = vec!["class".to_string()];
    header.extend((0..k).map(|c| format!("c{c}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = read_table(text, &header)?;
    if rows.len() != k {
        return Err(Error::ShapeMismatch {
            expected: k,
            found: rows.len(),
        });
    }
    let mut values = Vec::with_capacity(k * k);
    for (c, (line, row)) in rows.iter().enumerate() {
        check_index(*line, c, field(*line, &row[0])?)?;
        for v in &row[1..] {
            values.push(field(*line, v)?);
        }
    }
    ClassMatrix::new(k, values)
}

pub const PAIRS_HEADER: [&str; 2] = ["a_index", "b_index"];

pub fn write_pairs(pairs: &[(usize, usize)]) -> String {
    write_table(
        &PAIRS_HEADER,
        pairs.iter().map(|(a, b)| [a.to_string(), b.to_string()]),
    )
}

pub fn read_pairs(text: &str) -> Result<Vec<(usize, usize)>> {
    read_table(text, &PAIRS_HEADER)?
        .iter()
        .map(|(line, row)| Ok((field(*line, &row[0])?, field(*line, &row[1])?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_rendering() {
        assert_eq!(format_f64(0.0), "0");
        assert_eq!(format_f64(-(4f64).ln()), "-1.3862943611198906");
        assert_eq!(format_f64(0.5), "0.50000000000000000");
        assert_eq!(format_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_f64(2.5e20), "2.5000000000000000e20");
        for x in [
            0.1,
            1.0 / 3.0,
            -123456.789,
            f64::from_bits(1e16f64.to_bits() - 1),
            1e-5,
            3e-300,
            f64::MAX,
        ] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x, "{x}");
        }
    }

    #[test]
    fn scores_round_trip() {
        let s = vec![0.25, -1.0 / 7.0, 1e300, 0.0];
        let text = write_scores(&s);
        assert!(text.starts_with("row_index,score\n0,0.25"));
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(read_scores(&text).unwrap(), s);
    }

    #[test]
    fn matrix_and_pairs_round_trip() {
        let m = ClassMatrix::new(2, vec![0.75, 0.25, 0.1, 0.9]).unwrap();
        let text = write_class_matrix(&m);
        assert!(text.starts_with("class,c0,c1\n"));
        assert_eq!(read_class_matrix(&text).unwrap(), m);
        let pairs = vec![(0, 3), (7, 1)];
        assert_eq!(read_pairs(&write_pairs(&pairs)).unwrap(), pairs);
    }

    #[test]
    fn bad_input_reports_line() {
        assert!(matches!(
            read_indices("idx\n1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_indices("index\n1\nx\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_scores("row_index,score\n1,0.5\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        let (idx, labels) = read_labels("index,label\n4,2\n9,0\n").unwrap();
        assert_eq!((idx, labels), (vec![4, 9], vec![2, 0]));
    }
}
