//! Text formats shared by the CLI: matrix CSV, observation-stream CSV and
//! per-run / curve tables.
//!
//! Numbers are written with 17 significant digits so every value reads back
//! bit-for-bit.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sim::{CurveRow, RunRecord};

/// Round-trip-safe scientific formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, message: message.into() }
}

fn parse_num(line: usize, field: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| syntax(line, format!("invalid number `{}`", field.trim())))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Reads a dense matrix: either a plain numeric grid (one row per line) or a
/// `m,n,value` header followed by 1-based triplets.
pub fn read_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = content_lines(text).peekable();
    let Some(&(first_no, first)) = lines.peek() else {
        return Err(syntax(1, "empty matrix file"));
    };
    let header: Vec<&str> = first.split(',').map(str::trim).collect();
    if header == ["m", "n", "value"] {
        lines.next();
        let mut entries = Vec::new();
        let (mut rows, mut cols) = (0, 0);
        for (n, line) in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(syntax(n, format!("expected 3 fields, found {}", f.len())));
            }
            let idx = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| syntax(n, format!("invalid index `{}`", s.trim())))
            };
            let (i, j) = (idx(f[0])?, idx(f[1])?);
            rows = rows.max(i);
            cols = cols.max(j);
            entries.push((i - 1, j - 1, parse_num(n, f[2])?));
        }
        if entries.is_empty() {
            return Err(syntax(first_no, "triplet file has no entries"));
        }
        let mut m = DMatrix::zeros(rows, cols);
        for (i, j, v) in entries {
            m[(i, j)] = v;
        }
        return Ok(m);
    }
    let mut data = Vec::new();
    let mut width = None;
    for (n, line) in lines {
        let row: Vec<f64> = line.split(',').map(|f| parse_num(n, f)).collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(syntax(n, format!("row has {} fields, expected {w}", row.len())));
            }
            _ => {}
        }
        data.push(row);
    }
    let cols = width.unwrap_or(0);
    Ok(DMatrix::from_fn(data.len(), cols, |i, j| data[i][j]))
}

/// Plain numeric grid, one row per line.
pub fn write_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Reads `t,x_1,…,x_M` rows (an optional non-numeric header line is
/// skipped) and returns the observation vectors.
pub fn read_stream_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    let mut width = None;
    for (k, (n, line)) in content_lines(text).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if k == 0 && fields[0].trim().parse::<f64>().is_err() {
            continue;
        }
        if fields.len() < 2 {
            return Err(syntax(n, "a stream row needs a time index and at least one value"));
        }
        parse_num(n, fields[0])?;
        let row: Vec<f64> = fields[1..].iter().map(|f| parse_num(n, f)).collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(syntax(n, format!("row has {} values, expected {w}", row.len())));
            }
            _ => {}
        }
        out.push(row);
    }
    Ok(out)
}

/// Writes observations as `t,x_1,…,x_M` with `t` starting at 1.
pub fn write_stream_csv(rows: &[Vec<f64>]) -> String {
    let m = rows.first().map_or(0, Vec::len);
    let mut s = String::from("t");
    for i in 1..=m {
        let _ = write!(s, ",x_{i}");
    }
    s.push('\n');
    for (t, row) in rows.iter().enumerate() {
        let _ = write!(s, "{}", t + 1);
        for v in row {
            let _ = write!(s, ",{}", fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

pub const RUNS_HEADER: &str = "run,stop_time,overshoot,censored";

pub fn write_runs_csv(records: &[RunRecord]) -> String {
    let mut s = format!("{RUNS_HEADER}\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{}", r.run, r.stop_time, opt(r.overshoot), r.censored);
    }
    s
}

pub fn read_runs_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, l)) if l == RUNS_HEADER => {}
        Some((n, _)) => return Err(syntax(n, format!("expected header `{RUNS_HEADER}`"))),
        None => return Ok(Vec::new()),
    }
    lines
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(syntax(n, format!("expected 4 fields, found {}", f.len())));
            }
            Ok(RunRecord {
                run: f[0].parse().map_err(|_| syntax(n, "invalid run index"))?,
                stop_time: f[1].parse().map_err(|_| syntax(n, "invalid stop time"))?,
                overshoot: if f[2].is_empty() { None } else { Some(parse_num(n, f[2])?) },
                censored: f[3].parse().map_err(|_| syntax(n, "censored must be true or false"))?,
            })
        })
        .collect()
}

pub const CURVES_HEADER: &str =
    "h,arl,arl_std_error,arl_censored_fraction,edd,edd_std_error,edd_censored_fraction,overshoot_ratio";

pub fn write_curves_csv(rows: &[CurveRow]) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.h),
            fmt_f64(r.arl),
            fmt_f64(r.arl_std_error),
            fmt_f64(r.arl_censored_fraction),
            opt(r.edd),
            opt(r.edd_std_error),
            opt(r.edd_censored_fraction),
            opt(r.overshoot_ratio),
        );
    }
    s
}

pub fn read_curves_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, l)) if l == CURVES_HEADER => {}
        Some((n, _)) => return Err(syntax(n, "unexpected curves header")),
        None => return Ok(Vec::new()),
    }
    lines
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(syntax(n, format!("expected 8 fields, found {}", f.len())));
            }
            let o = |s: &str| if s.is_empty() { Ok(None) } else { parse_num(n, s).map(Some) };
            Ok(CurveRow {
                h: parse_num(n, f[0])?,
                arl: parse_num(n, f[1])?,
                arl_std_error: parse_num(n, f[2])?,
                arl_censored_fraction: parse_num(n, f[3])?,
                edd: o(f[4])?,
                edd_std_error: o(f[5])?,
                edd_censored_fraction: o(f[6])?,
                overshoot_ratio: o(f[7])?,
            })
        })
        .collect()
}
