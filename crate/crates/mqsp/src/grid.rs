//! Transition-probability grids over the torus, exported as CSV or PGM.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::protocol::{eval_unitary, ProtocolSpec};

/// Smallest accepted grid size.
pub const MIN_GRID: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size must be at least {MIN_GRID}, got {0}")]
    TooSmall(usize),
    #[error("malformed grid CSV: {0}")]
    Parse(String),
}

/// `|P(θa, θb)|²` on `θ_i = −π + 2πi/N`, stored row-major with rows indexed by `θb`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridExport {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridExport {
    pub fn thetas_for(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| -PI + 2.0 * PI * i as f64 / n as f64)
            .collect()
    }

    pub fn from_protocol(spec: &ProtocolSpec, n: usize) -> Result<Self, GridError> {
        if n < MIN_GRID {
            return Err(GridError::TooSmall(n));
        }
        let thetas = Self::thetas_for(n);
        let values = thetas
            .par_iter()
            .flat_map_iter(|&tb| {
                thetas
                    .iter()
                    .map(move |&ta| eval_unitary(spec, ta, tb)[(0, 0)].norm_sqr())
            })
            .collect();
        Ok(Self { thetas, values })
    }

    pub fn size(&self) -> usize {
        self.thetas.len()
    }

    /// Value at column `ia` (θa) and row `ib` (θb).
    pub fn at(&self, ia: usize, ib: usize) -> f64 {
        self.values[ib * self.size() + ia]
    }

    /// Header row of θa values, then one row per θb led by its angle.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_b\\theta_a");
        for t in &self.thetas {
            write!(out, ",{t:.11e}").expect("write to string");
        }
        out.push('\n');
        for (ib, tb) in self.thetas.iter().enumerate() {
            write!(out, "{tb:.11e}").expect("write to string");
            for ia in 0..self.size() {
                write!(out, ",{:.11e}", self.at(ia, ib)).expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, GridError> {
        let bad = |m: &str| GridError::Parse(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(s));
        let thetas = header
            .split(',')
            .skip(1)
            .map(parse)
            .collect::<Result<Vec<_>, _>>()?;
        let mut values = Vec::with_capacity(thetas.len() * thetas.len());
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let row = line
                .split(',')
                .skip(1)
                .map(parse)
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != thetas.len() {
                return Err(bad("ragged row"));
            }
            values.extend(row);
        }
        if values.len() != thetas.len() * thetas.len() {
            return Err(bad("row count does not match header"));
        }
        Ok(Self { thetas, values })
    }

    /// Binary greyscale image, `θb` increasing downward, values clamped to `[0, 1]`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let n = self.size();
        let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
        out.extend(
            self.values
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_pgm_size() {
        let spec = ProtocolSpec::from_bits(&[0, 1], vec![0.2, -0.1, 0.4]).unwrap();
        let g = GridExport::from_protocol(&spec, 16).unwrap();
        let back = GridExport::from_csv(&g.to_csv()).unwrap();
        assert_eq!(back.size(), 16);
        for (x, y) in g.values.iter().zip(&back.values) {
            assert!((x - y).abs() <= 1e-11 * x.abs().max(1e-300) + 1e-300);
        }
        let pgm = g.to_pgm();
        assert!(pgm.starts_with(b"P5\n16 16\n255\n"));
        assert_eq!(pgm.len(), b"P5\n16 16\n255\n".len() + 256);
    }

    #[test]
    fn small_grid_rejected() {
        let spec = ProtocolSpec::from_bits(&[1], vec![0.0, 0.0]).unwrap();
        assert_eq!(
            GridExport::from_protocol(&spec, 8),
            Err(GridError::TooSmall(8))
        );
    }

    #[test]
    fn values_are_probabilities() {
        let spec = ProtocolSpec::from_bits(&[1, 0, 1], vec![0.3, 1.0, -2.0, 0.5]).unwrap();
        let g = GridExport::from_protocol(&spec, 32).unwrap();
        assert!(g.values.iter().all(|&v| (0.0..=1.0 + 1e-10).contains(&v)));
    }
}
