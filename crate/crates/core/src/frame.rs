//! Lattice geometry, QPSK grids and the OQAM staggering map.
//!
//! A frame carries `K` subcarriers and `M` complex slots, i.e. `N = M*K`
//! samples. Under OQAM every complex symbol is split into two real symbols
//! that live on a `K x 2M` real grid. Column `2m` holds `Re d[k][m]` and
//! column `(2m - 1) mod 2M` holds `Im d[k][m]`, so the imaginary part of
//! slot 0 wraps to the last column. This is the index shift that makes the
//! phase-term form and the staggered form of the WCP-COQAM transmit signal
//! coincide sample for sample.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{mismatch, Error, Result};

/// Frame lattice: `K` subcarriers, `M` slots, cyclic prefix length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameParams {
    subcarriers: usize,
    slots: usize,
    cp_len: usize,
}

impl FrameParams {
    pub fn new(subcarriers: usize, slots: usize, cp_len: usize) -> Result<Self> {
        if !subcarriers.is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!(
                "K must be even, got {subcarriers}"
            )));
        }
        if subcarriers < 4 {
            return Err(Error::InvalidLattice(format!(
                "K must be at least 4, got {subcarriers}"
            )));
        }
        if slots < 2 {
            return Err(Error::InvalidLattice(format!(
                "M must be at least 2, got {slots}"
            )));
        }
        let n = subcarriers * slots;
        if cp_len >= n {
            return Err(Error::InvalidLattice(format!(
                "cyclic prefix {cp_len} must be shorter than the frame body {n}"
            )));
        }
        Ok(FrameParams {
            subcarriers,
            slots,
            cp_len,
        })
    }

    /// `K`.
    pub fn k(&self) -> usize {
        self.subcarriers
    }

    /// `M`.
    pub fn m(&self) -> usize {
        self.slots
    }

    /// Samples per frame body, `M*K`.
    pub fn n(&self) -> usize {
        self.subcarriers * self.slots
    }

    /// Half-symbol offset `K/2`.
    pub fn half(&self) -> usize {
        self.subcarriers / 2
    }

    /// Phase offset `K/2 - 1`.
    pub fn alpha(&self) -> f64 {
        (self.subcarriers / 2) as f64 - 1.0
    }

    /// Delay parameter `M*K - 1`.
    pub fn delay(&self) -> f64 {
        self.n() as f64 - 1.0
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn with_cp_len(&self, cp_len: usize) -> Result<Self> {
        FrameParams::new(self.subcarriers, self.slots, cp_len)
    }

    /// Subcarrier modulation `g_k[n] = exp(j 2 pi k (n - alpha/2) / K)`.
    ///
    /// The exponent is `j pi (2kn - k(K/2 - 1)) / K`; the integer numerator is
    /// reduced modulo `2K` before conversion so large indices lose no phase
    /// precision.
    pub fn carrier(&self, k: i64, n: i64) -> Complex64 {
        let kk = self.subcarriers as i64;
        let alpha = kk / 2 - 1;
        let num = (2 * k * n - k * alpha).rem_euclid(2 * kk);
        Complex64::from_polar(1.0, PI * num as f64 / kk as f64)
    }
}

/// Which half of a complex symbol a real-grid column carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Real,
    Imag,
}

/// Role of real-grid column `col`: the part it carries and the complex slot it
/// belongs to.
pub fn column_role(col: usize, slots: usize) -> (Part, usize) {
    if col.is_multiple_of(2) {
        (Part::Real, col / 2)
    } else {
        (Part::Imag, col.div_ceil(2) % slots)
    }
}

/// Column holding `Im d[k][slot]`.
pub fn imag_column(slot: usize, slots: usize) -> usize {
    (2 * slot + 2 * slots - 1) % (2 * slots)
}

/// Column holding `Re d[k][slot]`.
pub fn real_column(slot: usize) -> usize {
    2 * slot
}

/// The OQAM phase term `exp(j pi k (M - 1/2)) * M(m)` with `M(m) = 1` for even
/// `m` and `j` for odd `m`.
pub fn phase_term(k: usize, m: usize, slots: usize) -> Complex64 {
    // exp(j pi k (M - 1/2)) = exp(j pi/2 * k (2M - 1)), reduced modulo 4
    let quarter_turns = (k * (2 * slots - 1)) % 4;
    let base = match quarter_turns {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    if m.is_multiple_of(2) {
        base
    } else {
        base * Complex64::i()
    }
}

/// Complex symbol grid indexed `(subcarrier, slot)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QamGrid {
    subcarriers: usize,
    slots: usize,
    symbols: Vec<Complex64>,
}

impl QamGrid {
    pub fn zeros(subcarriers: usize, slots: usize) -> Self {
        QamGrid {
            subcarriers,
            slots,
            symbols: vec![Complex64::new(0.0, 0.0); subcarriers * slots],
        }
    }

    pub fn from_vec(subcarriers: usize, slots: usize, symbols: Vec<Complex64>) -> Result<Self> {
        if symbols.len() != subcarriers * slots {
            return Err(mismatch(subcarriers * slots, symbols.len()));
        }
        Ok(QamGrid {
            subcarriers,
            slots,
            symbols,
        })
    }

    /// Uniform random QPSK symbols `(+-1 +- j)/sqrt(2)`.
    pub fn random_qpsk<R: Rng + ?Sized>(params: &FrameParams, rng: &mut R) -> Self {
        let symbols = (0..params.n())
            .map(|_| {
                let bits: u8 = rng.random_range(0..4);
                qpsk_symbol(bits)
            })
            .collect();
        QamGrid {
            subcarriers: params.k(),
            slots: params.m(),
            symbols,
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn get(&self, k: usize, m: usize) -> Complex64 {
        self.symbols[k * self.slots + m]
    }

    pub fn set(&mut self, k: usize, m: usize, value: Complex64) {
        self.symbols[k * self.slots + m] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn check_dims(&self, params: &FrameParams) -> Result<()> {
        if self.subcarriers != params.k() || self.slots != params.m() {
            return Err(mismatch(
                format!("{}x{}", params.k(), params.m()),
                format!("{}x{}", self.subcarriers, self.slots),
            ));
        }
        Ok(())
    }

    /// CSV text: one row per subcarrier, entries formatted `re+imj`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 0..self.subcarriers {
            let row: Vec<String> = (0..self.slots)
                .map(|m| format_complex(self.get(k, m)))
                .collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = csv_rows(text);
        let slots = rows.first().map(Vec::len).unwrap_or(0);
        let mut symbols = Vec::new();
        for row in &rows {
            if row.len() != slots {
                return Err(Error::Parse("ragged grid rows".into()));
            }
            for cell in row {
                symbols.push(parse_complex(cell)?);
            }
        }
        QamGrid::from_vec(rows.len(), slots, symbols)
    }
}

/// Real OQAM symbol grid indexed `(subcarrier, column)` with `2M` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    subcarriers: usize,
    columns: usize,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn zeros(subcarriers: usize, columns: usize) -> Self {
        RealGrid {
            subcarriers,
            columns,
            values: vec![0.0; subcarriers * columns],
        }
    }

    pub fn from_vec(subcarriers: usize, columns: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != subcarriers * columns {
            return Err(mismatch(subcarriers * columns, values.len()));
        }
        Ok(RealGrid {
            subcarriers,
            columns,
            values,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn get(&self, k: usize, col: usize) -> f64 {
        self.values[k * self.columns + col]
    }

    pub fn set(&mut self, k: usize, col: usize, value: f64) {
        self.values[k * self.columns + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn check_dims(&self, params: &FrameParams) -> Result<()> {
        if self.subcarriers != params.k() || self.columns != 2 * params.m() {
            return Err(mismatch(
                format!("{}x{}", params.k(), 2 * params.m()),
                format!("{}x{}", self.subcarriers, self.columns),
            ));
        }
        Ok(())
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &RealGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 0..self.subcarriers {
            let row: Vec<String> = (0..self.columns)
                .map(|c| format!("{}", self.get(k, c)))
                .collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = csv_rows(text);
        let columns = rows.first().map(Vec::len).unwrap_or(0);
        let mut values = Vec::new();
        for row in &rows {
            if row.len() != columns {
                return Err(Error::Parse("ragged grid rows".into()));
            }
            for cell in row {
                values.push(
                    cell.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{cell:?}: {e}")))?,
                );
            }
        }
        RealGrid::from_vec(rows.len(), columns, values)
    }
}

/// Split a complex grid into its staggered real form.
pub fn stagger(grid: &QamGrid, params: &FrameParams) -> Result<RealGrid> {
    grid.check_dims(params)?;
    let slots = params.m();
    let mut out = RealGrid::zeros(params.k(), 2 * slots);
    for k in 0..params.k() {
        for m in 0..slots {
            let d = grid.get(k, m);
            out.set(k, real_column(m), d.re);
            out.set(k, imag_column(m, slots), d.im);
        }
    }
    Ok(out)
}

/// Inverse of [`stagger`].
pub fn destagger(rg: &RealGrid, params: &FrameParams) -> Result<QamGrid> {
    rg.check_dims(params)?;
    let slots = params.m();
    let mut out = QamGrid::zeros(params.k(), slots);
    for k in 0..params.k() {
        for m in 0..slots {
            out.set(
                k,
                m,
                Complex64::new(rg.get(k, real_column(m)), rg.get(k, imag_column(m, slots))),
            );
        }
    }
    Ok(out)
}

/// Gray-mapped unit-energy QPSK point for two bits.
pub fn qpsk_symbol(bits: u8) -> Complex64 {
    let re = if bits & 1 == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    let im = if bits & 2 == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    Complex64::new(re, im)
}

/// Nearest QPSK point (quadrant decision).
pub fn qpsk_decide(z: Complex64) -> Complex64 {
    Complex64::new(FRAC_1_SQRT_2.copysign(z.re), FRAC_1_SQRT_2.copysign(z.im))
}

pub(crate) fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}j", z.re, sign, z.im.abs())
}

pub(crate) fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("malformed complex value {text:?}"));
    let body = text.trim().strip_suffix('j').ok_or_else(bad)?;
    let bytes = body.as_bytes();
    // Split at the last sign that is not a leading sign or an exponent sign.
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im_abs: f64 = body[split + 1..].parse().map_err(|_| bad())?;
    let im = if bytes[split] == b'-' {
        -im_abs
    } else {
        im_abs
    };
    Ok(Complex64::new(re, im))
}

fn csv_rows(text: &str) -> Vec<Vec<&str>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(str::trim).collect())
        .collect()
}
