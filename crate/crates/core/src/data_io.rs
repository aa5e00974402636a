//! LIBSVM parsing, feature lifting and trace CSV serialization.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ippp::{SelectOption, SolveTrace, TraceRecord};
use crate::model::Vector;
use crate::problems::Dataset;

/// Column header of the trace CSV.
pub const TRACE_HEADER: &str = "k,gamma,beta,eps_hat,objective,S,F,C,inner_steps,cum_steps,wall_ms";

/// C-style `%.12g`: 12 significant digits, trailing zeros removed,
/// exponent form outside `[1e-4, 1e12)`.
pub fn format_g(v: f64) -> String {
    format_g_prec(v, 12)
}

pub fn format_g_prec(v: f64, prec: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let prec = prec.max(1);
    let sci = format!("{:.*e}", prec - 1, v);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= prec as i32 {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (prec as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One LIBSVM example.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub label: i64,
    /// 1-based indices, strictly increasing.
    pub entries: Vec<(usize, f64)>,
}

impl SparseRow {
    pub fn max_index(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0)
    }

    pub fn densify(&self, dim: usize) -> Vector {
        let mut v = Vector::zeros(dim);
        for &(i, x) in &self.entries {
            if i <= dim {
                v[i - 1] = x;
            }
        }
        v
    }

    /// Canonical text form: `label idx:val ...` with single spaces.
    pub fn to_line(&self) -> String {
        let mut s = self.label.to_string();
        for (i, v) in &self.entries {
            s.push(' ');
            s.push_str(&format!("{i}:{v}"));
        }
        s
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses one non-empty, comment-stripped line.
pub fn parse_libsvm_line(text: &str, line: usize) -> Result<SparseRow> {
    let mut toks = text.split_whitespace();
    let label_tok = toks.next().ok_or_else(|| parse_err(line, "missing label"))?;
    let label: i64 = match label_tok.parse::<i64>() {
        Ok(l) => l,
        Err(_) => match label_tok.parse::<f64>() {
            Ok(f) if f.is_finite() && f.fract() == 0.0 && f.abs() < 9.0e15 => f as i64,
            Ok(_) => return Err(parse_err(line, format!("non-integer label '{label_tok}'"))),
            Err(_) => return Err(parse_err(line, format!("non-numeric label '{label_tok}'"))),
        },
    };
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for tok in toks {
        let (i, v) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(line, format!("expected index:value, found '{tok}'")))?;
        let idx: i64 = i
            .parse()
            .map_err(|_| parse_err(line, format!("non-numeric index '{i}'")))?;
        if idx <= 0 {
            return Err(parse_err(line, format!("index must be positive, found {idx}")));
        }
        let val: f64 = v
            .parse()
            .map_err(|_| parse_err(line, format!("non-numeric value '{v}'")))?;
        if !val.is_finite() {
            return Err(parse_err(line, format!("non-finite value '{v}'")));
        }
        let idx = idx as usize;
        if let Some(&(prev, _)) = entries.last() {
            if idx <= prev {
                return Err(parse_err(line, format!("non-increasing index {idx} after {prev}")));
            }
        }
        entries.push((idx, val));
    }
    Ok(SparseRow { label, entries })
}

/// All rows of a LIBSVM stream; blank lines and `#` comments are skipped.
pub fn parse_libsvm_rows(reader: impl BufRead) -> Result<Vec<SparseRow>> {
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| parse_err(n + 1, format!("read failure: {e}")))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        rows.push(parse_libsvm_line(body, n + 1)?);
    }
    Ok(rows)
}

/// Groups rows by label (ascending) into a dense dataset whose dimension is
/// the largest index seen. Returns the dataset and that index.
pub fn parse_libsvm(reader: impl BufRead) -> Result<(Dataset, usize)> {
    let rows = parse_libsvm_rows(reader)?;
    if rows.is_empty() {
        return Err(parse_err(0, "no examples"));
    }
    let dim = rows.iter().map(SparseRow::max_index).max().unwrap_or(0);
    let mut labels: Vec<i64> = rows.iter().map(|r| r.label).collect();
    labels.sort_unstable();
    labels.dedup();
    let mut classes = vec![Vec::new(); labels.len()];
    for r in &rows {
        let k = labels.binary_search(&r.label).expect("label collected above");
        classes[k].push(r.densify(dim));
    }
    Ok((Dataset::with_labels(classes, labels, dim)?, dim))
}

pub fn read_libsvm_file(path: &Path) -> Result<(Dataset, usize)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(BufReader::new(f))
}

/// Appends a constant coordinate `c` to every point.
pub fn lift_features(data: &Dataset, c: f64) -> Result<Dataset> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config(format!("lifting constant must be positive, got {c}")));
    }
    let d = data.dim();
    let classes = data
        .classes()
        .iter()
        .map(|cls| {
            cls.iter()
                .map(|p| Vector::from_fn(d + 1, |i, _| if i < d { p[i] } else { c }))
                .collect()
        })
        .collect();
    Dataset::with_labels(classes, data.labels().to_vec(), d + 1)
}

/// Divides every feature by its largest absolute value over the dataset
/// (features that are identically zero are left alone).
pub fn scale_max_abs(data: &Dataset) -> Result<Dataset> {
    let d = data.dim();
    let mut m = vec![0.0f64; d];
    for p in data.classes().iter().flatten() {
        for i in 0..d {
            m[i] = m[i].max(p[i].abs());
        }
    }
    let classes = data
        .classes()
        .iter()
        .map(|cls| {
            cls.iter()
                .map(|p| Vector::from_fn(d, |i, _| if m[i] > 0.0 { p[i] / m[i] } else { p[i] }))
                .collect()
        })
        .collect();
    Dataset::with_labels(classes, data.labels().to_vec(), d)
}

fn record_line(r: &TraceRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.k,
        format_g(r.gamma),
        format_g(r.beta),
        format_g(r.eps_hat),
        format_g(r.objective),
        format_g(r.s),
        format_g(r.f),
        format_g(r.c),
        r.inner_steps,
        r.cum_steps,
        format_g(r.wall_ms)
    )
}

/// Serializes the trace: header, one row per outer iteration, then
/// `# R_K=<index> option=<I|II>` (`R_K=none` for an empty trace).
pub fn write_trace(trace: &SolveTrace, mut sink: impl Write) -> std::io::Result<()> {
    sink.write_all(TRACE_HEADER.as_bytes())?;
    sink.write_all(b"\n")?;
    for r in &trace.records {
        sink.write_all(record_line(r).as_bytes())?;
        sink.write_all(b"\n")?;
    }
    let r = trace.r_index.map_or_else(|| "none".to_string(), |i| i.to_string());
    writeln!(sink, "# R_K={r} option={}", trace.option.label())?;
    sink.flush()
}

pub fn write_trace_file(trace: &SolveTrace, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(trace, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn trace_to_string(trace: &SolveTrace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Parses the output of [`write_trace`].
pub fn read_trace(reader: impl BufRead) -> Result<SolveTrace> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty trace")),
    };
    if header != TRACE_HEADER {
        return Err(parse_err(1, format!("unexpected header '{header}'")));
    }
    let mut records = Vec::new();
    let mut trailer = None;
    for (n, line) in lines {
        let line = line.map_err(|e| parse_err(n + 1, e.to_string()))?;
        if let Some(rest) = line.strip_prefix('#') {
            trailer = Some((n + 1, rest.trim().to_string()));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(parse_err(n + 1, format!("expected 11 fields, found {}", f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse::<f64>()
                .map_err(|_| parse_err(n + 1, format!("bad number '{}'", f[i])))
        };
        let int = |i: usize| -> Result<u64> {
            f[i].parse::<u64>()
                .map_err(|_| parse_err(n + 1, format!("bad integer '{}'", f[i])))
        };
        records.push(TraceRecord {
            k: int(0)? as usize,
            gamma: num(1)?,
            beta: num(2)?,
            eps_hat: num(3)?,
            objective: num(4)?,
            s: num(5)?,
            f: num(6)?,
            c: num(7)?,
            inner_steps: int(8)?,
            cum_steps: int(9)?,
            wall_ms: num(10)?,
        });
    }
    let (ln, t) = trailer.ok_or_else(|| parse_err(0, "missing trailer line"))?;
    let mut r_index = None;
    let mut option = None;
    for part in t.split_whitespace() {
        match part.split_once('=') {
            Some(("R_K", "none")) => r_index = None,
            Some(("R_K", v)) => {
                r_index = Some(v.parse().map_err(|_| parse_err(ln, format!("bad R_K '{v}'")))?);
            }
            Some(("option", "I")) => option = Some(SelectOption::I),
            Some(("option", "II")) => option = Some(SelectOption::II),
            _ => return Err(parse_err(ln, format!("unexpected trailer field '{part}'"))),
        }
    }
    Ok(SolveTrace {
        records,
        r_index,
        option: option.ok_or_else(|| parse_err(ln, "trailer lacks option"))?,
    })
}

pub fn read_trace_file(path: &Path) -> Result<SolveTrace> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn format_g_matches_c_printf() {
        let cases: [(f64, &str); 12] = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (-2.25, "-2.25"),
            (1.0 / 3.0, "0.333333333333"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1e-4, "0.0001"),
            (1.5e-5, "1.5e-05"),
            (6.02214076e23, "6.02214076e+23"),
            (1e100, "1e+100"),
            (0.1 + 0.2, "0.3"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g(v), s, "{v:e}");
        }
        assert_eq!(format_g(f64::INFINITY), "inf");
        assert_eq!(format_g(f64::NAN), "nan");
    }

    #[test]
    fn parse_examples() {
        let (ds, d) = parse_libsvm("3 1:0.5 4:-1.2\n".as_bytes()).unwrap();
        assert_eq!(d, 4);
        assert_eq!(ds.labels(), &[3]);
        assert_eq!(ds.classes()[0][0], dvector![0.5, 0.0, 0.0, -1.2]);
        let (ds, d) = parse_libsvm("1\n".as_bytes()).unwrap();
        assert_eq!(d, 0);
        assert_eq!(ds.classes()[0].len(), 1);
        match parse_libsvm("2 3:1 2:1".as_bytes()) {
            Err(Error::Parse { line: 1, message }) => assert!(message.contains("non-increasing index")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_inputs_report_their_line() {
        let table: [(&str, usize, &str); 8] = [
            ("x 1:2", 1, "non-numeric label"),
            ("1.5 1:2", 1, "non-integer label"),
            ("1 1:2\n2 0:1", 2, "index must be positive"),
            ("1 -3:1", 1, "index must be positive"),
            ("1 1:abc", 1, "non-numeric value"),
            ("1 2:1 2:3", 1, "non-increasing index"),
            ("# c\n\n1 a:1", 3, "non-numeric index"),
            ("1 1:1\n1 12", 2, "expected index:value"),
        ];
        for (text, line, msg) in table {
            match parse_libsvm(text.as_bytes()) {
                Err(Error::Parse { line: l, message }) => {
                    assert_eq!(l, line, "{text}");
                    assert!(message.contains(msg), "{text}: {message}");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn classes_sorted_and_comments_skipped() {
        let text = "# header\n2 1:1\n-1 2:3 # trailing\n\n2 1:2 3:1\n";
        let (ds, d) = parse_libsvm(text.as_bytes()).unwrap();
        assert_eq!(d, 3);
        assert_eq!(ds.labels(), &[-1, 2]);
        assert_eq!(ds.classes()[1].len(), 2);
        assert_eq!(ds.classes()[0][0], dvector![0.0, 3.0, 0.0]);
    }

    #[test]
    fn rows_round_trip() {
        let text = "1 2:0.25 7:-3\n4 1:1e-7\n0\n";
        let rows = parse_libsvm_rows(text.as_bytes()).unwrap();
        let again: String = rows.iter().map(|r| r.to_line() + "\n").collect();
        assert_eq!(parse_libsvm_rows(again.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn lifting_examples() {
        let ds = Dataset::new(vec![vec![dvector![1.0, 2.0]], vec![dvector![0.0, 0.0]]]).unwrap();
        let l = lift_features(&ds, 1.0).unwrap();
        assert_eq!(l.classes()[0][0], dvector![1.0, 2.0, 1.0]);
        let l = lift_features(&ds, 0.5).unwrap();
        assert_eq!(l.classes()[1][0], dvector![0.0, 0.0, 0.5]);
        let ll = lift_features(&lift_features(&ds, 1.0).unwrap(), 2.0).unwrap();
        assert_eq!(ll.dim(), 4);
        assert_eq!(ll.classes()[0][0], dvector![1.0, 2.0, 1.0, 2.0]);
        assert!(lift_features(&ds, 0.0).is_err());
    }

    #[test]
    fn lifted_nonnegative_data_has_positive_inner_products() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vector> = (0..20).map(|_| Vector::from_fn(3, |_, _| rng.random_range(0.0..2.0))).collect();
        let ds = Dataset::new(vec![pts[..10].to_vec(), pts[10..].to_vec()]).unwrap();
        let l = lift_features(&ds, 1.0).unwrap();
        let all: Vec<&Vector> = l.classes().iter().flatten().collect();
        for a in &all {
            for b in &all {
                assert!(a.dot(b) >= 1.0);
            }
        }
    }

    fn record(k: usize) -> TraceRecord {
        TraceRecord {
            k,
            gamma: 0.1,
            beta: 1000.0 / 3.0,
            eps_hat: 1e-7,
            objective: -0.123456789012345,
            s: 2.5e-9,
            f: 0.0,
            c: 3.0,
            inner_steps: 17,
            cum_steps: 170 + k as u64,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn empty_trace_is_header_and_trailer() {
        let t = SolveTrace {
            records: vec![],
            r_index: None,
            option: SelectOption::II,
        };
        assert_eq!(trace_to_string(&t), format!("{TRACE_HEADER}\n# R_K=none option=II\n"));
        assert_eq!(read_trace(trace_to_string(&t).as_bytes()).unwrap(), t);
    }

    #[test]
    fn trace_round_trips_to_twelve_digits() {
        let t = SolveTrace {
            records: vec![record(0), record(1)],
            r_index: Some(1),
            option: SelectOption::I,
        };
        let s = trace_to_string(&t);
        assert!(s.starts_with("k,gamma,beta,eps_hat,objective,S,F,C,inner_steps,cum_steps,wall_ms\n"));
        assert!(s.ends_with("# R_K=1 option=I\n"));
        let back = read_trace(s.as_bytes()).unwrap();
        assert_eq!(back.r_index, Some(1));
        for (a, b) in back.records.iter().zip(&t.records) {
            for (x, y) in [(a.beta, b.beta), (a.objective, b.objective), (a.s, b.s)] {
                assert_eq!(format_g(x), format_g(y));
            }
            assert_eq!((a.k, a.inner_steps, a.cum_steps), (b.k, b.inner_steps, b.cum_steps));
        }
        assert_eq!(trace_to_string(&back), s);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(read_trace("k,gamma\n# R_K=0 option=I\n".as_bytes()).is_err());
    }
}
