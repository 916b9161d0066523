//! Dense square matrices indexed by 1-based node ids.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A `d × d` real matrix stored row-major.
///
/// `get(row, col)` and `set(row, col, _)` take 1-based node ids, matching
/// the node labelling of [`crate::Dag`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    d: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(d: usize) -> Self {
        Self { d, data: vec![0.0; d * d] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 1..=d {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from a row-major buffer of length `d * d`.
    pub fn from_row_major(d: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == d * d).then_some(Self { d, data })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    fn offset(&self, row: usize, col: usize) -> usize {
        debug_assert!(row >= 1 && row <= self.d && col >= 1 && col <= self.d);
        (row - 1) * self.d + (col - 1)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[self.offset(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let k = self.offset(row, col);
        self.data[k] = value;
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { d: self.d, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Largest absolute entrywise difference; `None` on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.d != other.d {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// CSV rendering: one row per line, 17 significant digits, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 1..=self.d {
            let row: Vec<String> = (1..=self.d).map(|c| format_f64(self.get(r, c))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 1..=self.d {
            for c in 1..=self.d {
                if c > 1 {
                    write!(f, " ")?;
                }
                write!(f, "{:>10.6}", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Decimal floating point with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_access() {
        let mut m = SquareMatrix::zeros(3);
        m.set(1, 3, 2.5);
        assert_eq!(m.get(1, 3), 2.5);
        assert_eq!(m.as_row_major()[2], 2.5);
    }

    #[test]
    fn format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 123456.789] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn rejects_wrong_buffer() {
        assert!(SquareMatrix::from_row_major(2, vec![0.0; 3]).is_none());
    }
}
