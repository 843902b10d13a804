//! Kernel snapshot CSV: a `# grid h=<h> n=<n>` line, then `n` rows of `n`
//! comma-separated `re+imj` entries. Floats use the shortest round-trip form,
//! so reading a snapshot back is bit-exact.

use std::io::{BufRead, Write};

use ndarray::Array2;
use num_complex::Complex64;

use super::{Grid, KernelOperator};
use crate::error::{Error, Result};

pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:e}{}{:e}j", z.re, sign, z.im.abs())
}

pub fn parse_complex(s: &str) -> Option<Complex64> {
    let body = s.trim().strip_suffix('j')?;
    let bytes = body.as_bytes();
    let split =
        (1..bytes.len()).rev().find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].parse().ok()?;
    Some(Complex64::new(re, im))
}

pub fn write_snapshot<W: Write>(omega: &KernelOperator, mut out: W) -> Result<()> {
    let g = omega.grid();
    writeln!(out, "# grid h={} n={}", g.h(), g.n())?;
    for row in omega.k().rows() {
        let line: Vec<String> = row.iter().map(|z| format_complex(*z)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<KernelOperator> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::Snapshot { line: 1, msg: "empty file".into() })??;
    let grid =
        parse_header(&header).ok_or_else(|| Error::Snapshot { line: 1, msg: format!("bad header `{header}`") })??;
    let n = grid.n();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        let line = lines.next().ok_or(Error::Snapshot { line: i + 2, msg: "missing row".into() })??;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n {
            return Err(Error::Snapshot { line: i + 2, msg: format!("expected {n} entries, found {}", fields.len()) });
        }
        for (j, f) in fields.iter().enumerate() {
            k[[i, j]] =
                parse_complex(f).ok_or_else(|| Error::Snapshot { line: i + 2, msg: format!("bad entry `{f}`") })?;
        }
    }
    KernelOperator::new(grid, k)
}

fn parse_header(line: &str) -> Option<Result<Grid>> {
    let rest = line.strip_prefix("# grid ")?;
    let mut h = None;
    let mut n = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("h=") {
            h = v.parse::<f64>().ok();
        } else if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse::<usize>().ok();
        }
    }
    Some(Grid::new(h?, n?))
}
