//! Truth tables of single-output Boolean functions with at most six inputs.
//!
//! Row `b` of a table holds the output on the assignment where variable
//! `x_i` takes the value `(b >> i) & 1`. With this convention the projection
//! onto `x_0` is `0xaa..aa` and the single-minterm function that is true only
//! on the all-zero input is `0x..01`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported variable count; a table then fills one `u64`.
pub const MAX_VARS: usize = 6;

/// Projection masks of `x_0 .. x_5` over 64 rows.
const VAR_MASKS: [u64; MAX_VARS] = [
    0xaaaa_aaaa_aaaa_aaaa,
    0xcccc_cccc_cccc_cccc,
    0xf0f0_f0f0_f0f0_f0f0,
    0xff00_ff00_ff00_ff00,
    0xffff_0000_ffff_0000,
    0xffff_ffff_0000_0000,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TruthTableError {
    #[error("variable count {0} outside 1..=6")]
    BadArity(usize),
    #[error("malformed hex literal {0:?}")]
    MalformedHex(String),
    #[error("value {value:#x} does not fit in {rows} rows")]
    ValueTooWide { value: u128, rows: usize },
    #[error("arity mismatch: {left} vs {right} variables")]
    ArityMismatch { left: usize, right: usize },
    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("assignment value {values:#b} does not fit in {n} variables")]
    AssignmentTooWide { values: u64, n: usize },
}

/// Bit mask with the low `2^n` bits set.
#[inline]
pub fn row_mask(n: usize) -> u64 {
    if n >= MAX_VARS {
        u64::MAX
    } else {
        (1u64 << (1usize << n)) - 1
    }
}

/// Projection mask of variable `var` restricted to `n` inputs.
#[inline]
pub fn var_mask(var: usize, n: usize) -> u64 {
    VAR_MASKS[var] & row_mask(n)
}

/// A Boolean function of `n` variables stored as its `2^n`-bit truth table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "TableRepr", try_from = "TableRepr")]
pub struct TruthTable {
    n: u8,
    bits: u64,
}

impl TruthTable {
    /// Builds a table, rejecting patterns wider than `2^n` bits.
    pub fn new(n: usize, bits: u64) -> Result<Self, TruthTableError> {
        check_arity(n)?;
        if bits & !row_mask(n) != 0 {
            return Err(TruthTableError::ValueTooWide {
                value: bits as u128,
                rows: 1 << n,
            });
        }
        Ok(Self { n: n as u8, bits })
    }

    /// Builds a table, silently dropping bits above row `2^n - 1`.
    pub fn from_masked(n: usize, bits: u64) -> Result<Self, TruthTableError> {
        check_arity(n)?;
        Ok(Self {
            n: n as u8,
            bits: bits & row_mask(n),
        })
    }

    pub fn zero(n: usize) -> Result<Self, TruthTableError> {
        Self::new(n, 0)
    }

    pub fn one(n: usize) -> Result<Self, TruthTableError> {
        check_arity(n)?;
        Ok(Self {
            n: n as u8,
            bits: row_mask(n),
        })
    }

    /// The projection `x_var`.
    pub fn var(n: usize, var: usize) -> Result<Self, TruthTableError> {
        check_arity(n)?;
        if var >= n {
            return Err(TruthTableError::RowOutOfRange { index: var, rows: n });
        }
        Ok(Self {
            n: n as u8,
            bits: var_mask(var, n),
        })
    }

    /// Parses `0x`-prefixed or bare hexadecimal text.
    pub fn parse_hex(text: &str, n: usize) -> Result<Self, TruthTableError> {
        check_arity(n)?;
        let trimmed = text.trim();
        let digits = trimmed
            .strip_prefix("0x")
            .or_else(|| trimmed.strip_prefix("0X"))
            .unwrap_or(trimmed);
        let digits = digits.replace('_', "");
        if digits.is_empty() || digits.len() > 32 {
            return Err(TruthTableError::MalformedHex(text.to_string()));
        }
        let value = u128::from_str_radix(&digits, 16)
            .map_err(|_| TruthTableError::MalformedHex(text.to_string()))?;
        if value > row_mask(n) as u128 {
            return Err(TruthTableError::ValueTooWide {
                value,
                rows: 1 << n,
            });
        }
        Ok(Self {
            n: n as u8,
            bits: value as u64,
        })
    }

    /// Lowercase, `0x`-prefixed, zero-padded to `max(1, 2^n / 4)` digits.
    pub fn to_hex(&self) -> String {
        let width = ((1usize << self.n) / 4).max(1);
        format!("0x{:0width$x}", self.bits, width = width)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn rows(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn bit(&self, row: usize) -> bool {
        (self.bits >> row) & 1 == 1
    }

    pub fn eval(&self, a: Assignment) -> Result<bool, TruthTableError> {
        if a.n() != self.n() {
            return Err(TruthTableError::ArityMismatch {
                left: self.n(),
                right: a.n(),
            });
        }
        Ok(self.bit(a.values() as usize))
    }

    /// Returns the table that differs from `self` exactly at `index`.
    pub fn flip_bit(&self, index: usize) -> Result<Self, TruthTableError> {
        if index >= self.rows() {
            return Err(TruthTableError::RowOutOfRange {
                index,
                rows: self.rows(),
            });
        }
        Ok(Self {
            n: self.n,
            bits: self.bits ^ (1u64 << index),
        })
    }

    /// Number of rows on which the two tables disagree.
    pub fn hamming(&self, other: &Self) -> Result<u32, TruthTableError> {
        if self.n != other.n {
            return Err(TruthTableError::ArityMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        Ok((self.bits ^ other.bits).count_ones())
    }

    /// Rows where the two tables disagree, ascending.
    pub fn diff_rows(&self, other: &Self) -> Result<Vec<usize>, TruthTableError> {
        self.hamming(other)?;
        let mut diff = self.bits ^ other.bits;
        let mut rows = Vec::with_capacity(diff.count_ones() as usize);
        while diff != 0 {
            rows.push(diff.trailing_zeros() as usize);
            diff &= diff - 1;
        }
        Ok(rows)
    }

    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            bits: !self.bits & row_mask(self.n()),
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_constant(&self) -> bool {
        self.bits == 0 || self.bits == row_mask(self.n())
    }

    /// If the function is `x_i` or `!x_i`, returns `(i, complemented)`.
    pub fn as_literal(&self) -> Option<(usize, bool)> {
        let mask = row_mask(self.n());
        (0..self.n()).find_map(|i| {
            let v = var_mask(i, self.n());
            if self.bits == v {
                Some((i, false))
            } else if self.bits == !v & mask {
                Some((i, true))
            } else {
                None
            }
        })
    }

    /// Iterates over all `2^(2^n)` tables of `n` variables. Only sensible for `n <= 4`.
    pub fn all(n: usize) -> Result<impl Iterator<Item = TruthTable>, TruthTableError> {
        check_arity(n)?;
        let count: u64 = if n >= MAX_VARS { u64::MAX } else { 1u64 << (1 << n) };
        Ok((0..count).map(move |bits| TruthTable { n: n as u8, bits }))
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable({}, n={})", self.to_hex(), self.n)
    }
}

fn check_arity(n: usize) -> Result<(), TruthTableError> {
    if (1..=MAX_VARS).contains(&n) {
        Ok(())
    } else {
        Err(TruthTableError::BadArity(n))
    }
}

/// A point of `{0,1}^n`; bit `i` of `values` is the value of `x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    n: u8,
    values: u64,
}

impl Assignment {
    pub fn new(n: usize, values: u64) -> Result<Self, TruthTableError> {
        check_arity(n)?;
        if n < 64 && values >> n != 0 {
            return Err(TruthTableError::AssignmentTooWide { values, n });
        }
        Ok(Self {
            n: n as u8,
            values,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn values(&self) -> u64 {
        self.values
    }

    #[inline]
    pub fn get(&self, var: usize) -> bool {
        (self.values >> var) & 1 == 1
    }

    /// The truth-table row this assignment selects.
    #[inline]
    pub fn row(&self) -> usize {
        self.values as usize
    }
}

/// Serialized form: `{"n": 4, "hex": "0x0180"}`.
#[derive(Serialize, Deserialize)]
struct TableRepr {
    n: usize,
    hex: String,
}

impl From<TruthTable> for TableRepr {
    fn from(t: TruthTable) -> Self {
        TableRepr {
            n: t.n(),
            hex: t.to_hex(),
        }
    }
}

impl TryFrom<TableRepr> for TruthTable {
    type Error = TruthTableError;

    fn try_from(r: TableRepr) -> Result<Self, Self::Error> {
        TruthTable::parse_hex(&r.hex, r.n)
    }
}

/// `"n:hex"` round-trips through [`FromStr`].
impl FromStr for TruthTable {
    type Err = TruthTableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, hex) = s
            .split_once(':')
            .ok_or_else(|| TruthTableError::MalformedHex(s.to_string()))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| TruthTableError::MalformedHex(s.to_string()))?;
        TruthTable::parse_hex(hex, n)
    }
}
