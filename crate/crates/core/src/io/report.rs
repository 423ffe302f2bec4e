//! CSV tables written by the command-line runs. Every table has a header
//! row and a trailing `seed` column; reals carry 12 significant digits.

use crate::entropy::{OrbitCounts, ShadowEstimate};
use crate::flow::{FrequencyReport, RegressionResult};
use crate::saddle::{FlatCylinder, SaddleConnection};
use std::path::Path;

/// `%.12g`-style rendering.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let fixed = format!("{:.*}", (11 - exp).max(0) as usize, x);
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        let mut header = header.to_vec();
        header.push("seed");
        Table { header, rows: vec![] }
    }

    pub fn push(&mut self, seed: u64, mut row: Vec<String>) {
        row.push(seed.to_string());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn saddles_table(list: &[SaddleConnection], seed: u64) -> Table {
    let mut t = Table::new(&["start_id", "end_id", "hol_x", "hol_y", "length"]);
    for c in list {
        t.push(seed, vec![c.start.to_string(), c.end.to_string(), fmt_real(c.holonomy.x), fmt_real(c.holonomy.y), fmt_real(c.length)]);
    }
    t
}

pub fn cylinders_table(list: &[FlatCylinder], seed: u64) -> Table {
    let mut t = Table::new(&["circumference", "height", "modulus", "dir_x", "dir_y", "bottom", "top"]);
    let ids = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
    for c in list {
        t.push(
            seed,
            vec![
                fmt_real(c.circumference),
                fmt_real(c.height),
                fmt_real(c.height / c.circumference),
                fmt_real(c.direction.x),
                fmt_real(c.direction.y),
                ids(&c.bottom),
                ids(&c.top),
            ],
        );
    }
    t
}

pub fn counts_table(c: &OrbitCounts, seed: u64) -> Table {
    let mut t = Table::new(&["R", "N"]);
    for (r, n) in c.radii.iter().zip(&c.counts) {
        t.push(seed, vec![fmt_real(*r), fmt_real(*n)]);
    }
    t
}

pub fn shadows_table(list: &[ShadowEstimate], seed: u64) -> Table {
    let mut t = Table::new(&["sing_id", "dist", "nu_hat", "r_hat"]);
    for e in list {
        t.push(seed, vec![e.cone.to_string(), fmt_real(e.dist), fmt_real(e.nu_hat), fmt_real(e.r_hat)]);
    }
    t
}

pub fn freq_table(r: &FrequencyReport, seed: u64) -> Table {
    let mut t = Table::new(&["arc_id", "l", "l_ext", "passes", "total_len", "lambda_hat", "ci_half"]);
    for a in &r.arcs {
        t.push(
            seed,
            vec![
                a.arc_id.to_string(),
                fmt_real(a.length),
                fmt_real(a.ext_length),
                a.passes.to_string(),
                fmt_real(a.total_length),
                fmt_real(a.lambda_hat),
                fmt_real(a.ci_half),
            ],
        );
    }
    t
}

pub fn regression_table(g: &RegressionResult, seed: u64) -> Table {
    let mut t = Table::new(&["slope", "intercept", "r2", "n_arcs"]);
    t.push(seed, vec![fmt_real(g.slope), fmt_real(g.intercept), fmt_real(g.r2), g.n_arcs.to_string()]);
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(2f64.sqrt()), "1.41421356237");
        assert_eq!(fmt_real(-0.5), "-0.5");
        assert_eq!(fmt_real(1e-5), "1e-05");
        assert_eq!(fmt_real(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_real(0.000123456789012345), "0.000123456789012");
        assert_eq!(fmt_real(999999999999.5), "1e+12");
    }
}
