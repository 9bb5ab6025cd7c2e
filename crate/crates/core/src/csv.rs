//! Time-series CSV export.
//!
//! Every value is written with 17 significant digits in scientific notation,
//! which round-trips any finite `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{DsgError, Result};
use crate::sim::{Column, Sample, TimeSeries};

pub const HEADER: &str = "t,delta_1,freq,P_E,Q_E,V_mag,I_d,sign,S";

/// Render a series as CSV text (header plus one LF-terminated row per sample).
pub fn to_csv_string(series: &TimeSeries) -> String {
    let mut out = Vec::with_capacity(64 + series.len() * Column::ALL.len() * 24);
    write_rows(&mut out, series).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("CSV output is ASCII")
}

fn write_rows(w: &mut impl Write, series: &TimeSeries) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for s in series.samples() {
        for (i, c) in Column::ALL.iter().enumerate() {
            if i > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{:.16e}", c.of(s))?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_timeseries(series: &TimeSeries, path: &Path) -> Result<()> {
    let io = |source| DsgError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_rows(&mut w, series).map_err(io)?;
    w.flush().map_err(io)
}

/// Read a file produced by [`write_timeseries`]. The CSV does not carry the
/// base frequency, so the caller supplies it.
pub fn read_timeseries(path: &Path, f_base: f64) -> Result<TimeSeries> {
    let io = |source| DsgError::Io {
        path: path.to_path_buf(),
        source,
    };
    let bad = |line: usize, message: String| DsgError::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut series = TimeSeries::with_capacity(0, f_base);
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if n == 0 {
            if line != HEADER {
                return Err(bad(1, format!("expected header `{HEADER}`, got `{line}`")));
            }
            continue;
        }
        let mut row = [0.0; 9];
        let mut fields = line.split(',');
        for (slot, c) in row.iter_mut().zip(Column::ALL) {
            let field = fields
                .next()
                .ok_or_else(|| bad(n + 1, format!("missing column `{}`", c.name())))?;
            *slot = field
                .parse()
                .map_err(|_| bad(n + 1, format!("column `{}`: not a number: `{field}`", c.name())))?;
        }
        if fields.next().is_some() {
            return Err(bad(n + 1, "too many columns".to_string()));
        }
        let [t, delta_1, freq, p_e, q_e, v_mag, i_d, sign, s] = row;
        series.push(Sample {
            t,
            delta_1,
            freq,
            p_e,
            q_e,
            v_mag,
            i_d,
            sign,
            s,
        });
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize) -> TimeSeries {
        let mut ts = TimeSeries::with_capacity(n, 50.0);
        for k in 0..n {
            let x = k as f64;
            ts.push(Sample {
                t: x * 1e-4,
                delta_1: 0.1 + x / 3.0,
                freq: 50.0 - x * 1e-7,
                p_e: 0.8,
                q_e: -0.2,
                v_mag: 1.0 / 3.0,
                i_d: 1.05,
                sign: (k % 2) as f64,
                s: -0.0,
            });
        }
        ts
    }

    #[test]
    fn header_and_line_count() {
        let text = to_csv_string(&series(3));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next(), Some(HEADER));
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
        assert_eq!(to_csv_string(&series(0)), format!("{HEADER}\n"));
    }

    #[test]
    fn seventeen_significant_digits() {
        let text = to_csv_string(&series(2));
        let field = text.lines().nth(2).unwrap().split(',').nth(5).unwrap();
        let mantissa = field.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17, "{field}");
    }
}
