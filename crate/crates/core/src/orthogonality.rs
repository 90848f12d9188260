//! Numerical checks of the OQAM-OFDM and WCP-COQAM orthogonality conditions.
//!
//! Each family has four conditions indexed by a slot shift `m` and a
//! subcarrier difference `v`:
//!
//! | cond | OQAM-OFDM (linear, zero padded)                          | WCP-COQAM (circular mod N)                        | target |
//! |------|----------------------------------------------------------|---------------------------------------------------|--------|
//! | 1    | `Re{p[n-mK] g_v[n]} * p~[n] at 0`                        | `sum Re{p[(n-mK)] g_v[n] p[n]}`                   | `d[m]d[v]` |
//! | 2    | `Im{j p[n+K/2-mK] g_v[n]} * p~[n-K/2] at 0`              | `sum Re{p[(n+K/2-mK)] g_v[n] p[(n+K/2)]}`         | `d[m]d[v]` |
//! | 3    | `Re{j p[n+K/2-mK] g_v[n]} * p~[n] at 0`                  | `sum Re{j p[(n+K/2-mK)] g_v[n] p[n]}`             | 0 |
//! | 4    | `Im{p[n-mK] g_v[n]} * p~[n-K/2] at 0`                    | `sum Re{p[(n-mK)] g_v[n] j p[(n+K/2)]}`           | 0 |
//!
//! with `g_v[n] = exp(j 2 pi v (n - alpha/2) / K)` and `p~[n] = p*[-n]`.
//! For the circular family the delta in `m` is taken modulo `M`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::frame::{column_role, FrameParams, Part};
use crate::pulse::Pulse;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    OqamOfdm,
    WcpCoqam,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::OqamOfdm => "oqam-ofdm",
            Family::WcpCoqam => "wcp-coqam",
        }
    }
}

/// Residuals of the four conditions of one family over `(m, v)`.
#[derive(Debug, Clone)]
pub struct OrthReport {
    pub family: Family,
    /// Tested slot shifts, in storage order.
    pub shifts: Vec<i64>,
    pub subcarriers: usize,
    /// Achieved left-hand sides, indexed `[cond][shift index][v]`.
    values: Vec<f64>,
    residuals: Vec<f64>,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl OrthReport {
    fn index(&self, cond: usize, m: i64, v: usize) -> usize {
        let mi = self
            .shifts
            .iter()
            .position(|&s| s == m)
            .unwrap_or_else(|| panic!("shift {m} not covered by this report"));
        (cond * self.shifts.len() + mi) * self.subcarriers + v
    }

    /// Left-hand side of condition `cond` (0-based) at `(m, v)`.
    pub fn value(&self, cond: usize, m: i64, v: usize) -> f64 {
        self.values[self.index(cond, m, v)]
    }

    /// `|value - target|` of condition `cond` (0-based) at `(m, v)`.
    pub fn residual(&self, cond: usize, m: i64, v: usize) -> f64 {
        self.residuals[self.index(cond, m, v)]
    }

    /// `(condition, m, v, residual)` rows, condition numbered from 1.
    pub fn rows(&self) -> impl Iterator<Item = (usize, i64, usize, f64)> + '_ {
        let (nm, k) = (self.shifts.len(), self.subcarriers);
        self.residuals.iter().enumerate().map(move |(i, &r)| {
            let v = i % k;
            let mi = (i / k) % nm;
            let cond = i / (k * nm);
            (cond + 1, self.shifts[mi], v, r)
        })
    }

    /// The (condition, m, v) with the largest residual.
    pub fn worst(&self) -> (usize, i64, usize, f64) {
        self.rows().fold((0, 0, 0, f64::NEG_INFINITY), |best, row| {
            if row.3 > best.3 {
                row
            } else {
                best
            }
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# family={}\ncondition,m,v,residual\n", self.family.name());
        for (cond, m, v, r) in self.rows() {
            writeln!(out, "{cond},{m},{v},{r:e}").unwrap();
        }
        writeln!(
            out,
            "# max_residual={:e},tol={:e},pass={}",
            self.max_residual, self.tol, self.pass
        )
        .unwrap();
        out
    }
}

/// `g_v[u]` for `u < K`; `g_v[n]` depends on `n` only modulo `K`.
fn carrier_table(params: &FrameParams) -> Vec<Vec<Complex64>> {
    let k = params.k() as i64;
    (0..k)
        .map(|v| (0..k).map(|u| params.carrier(v, u)).collect())
        .collect()
}

#[inline]
fn g(table: &[Complex64], n: i64) -> Complex64 {
    table[n.rem_euclid(table.len() as i64) as usize]
}

fn build_report(
    family: Family,
    params: &FrameParams,
    shifts: Vec<i64>,
    tol: f64,
    eval: impl Fn(i64, usize) -> [f64; 4] + Sync,
    target_hit: impl Fn(i64, usize) -> bool + Sync,
) -> OrthReport {
    let k = params.k();
    let per_shift: Vec<Vec<[f64; 4]>> = shifts
        .par_iter()
        .map(|&m| (0..k).map(|v| eval(m, v)).collect())
        .collect();
    let nm = shifts.len();
    let mut values = vec![0.0; 4 * nm * k];
    let mut residuals = vec![0.0; 4 * nm * k];
    for (mi, row) in per_shift.iter().enumerate() {
        for (v, conds) in row.iter().enumerate() {
            let delta = if target_hit(shifts[mi], v) { 1.0 } else { 0.0 };
            let targets = [delta, delta, 0.0, 0.0];
            for c in 0..4 {
                let i = (c * nm + mi) * k + v;
                values[i] = conds[c];
                residuals[i] = (conds[c] - targets[c]).abs();
            }
        }
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    OrthReport {
        family,
        shifts,
        subcarriers: k,
        values,
        residuals,
        max_residual,
        tol,
        pass: max_residual <= tol,
    }
}

/// Linear-convolution conditions for OQAM-OFDM over `|m| <= M`, `v < K`.
pub fn check_oqam_ofdm(p: &Pulse, params: &FrameParams, tol: f64) -> Result<OrthReport> {
    p.check_len(params)?;
    let table = carrier_table(params);
    let (k, n_len, h) = (params.k() as i64, params.n() as i64, params.half() as i64);
    let j = Complex64::i();
    let eval = |m: i64, v: usize| {
        let gv = &table[v];
        let (mut c1, mut c2, mut c3, mut c4) = (0.0, 0.0, 0.0, 0.0);
        // conditions 1 and 3 pair with p[n]
        for n in 0..n_len {
            let rx = p.linear(n);
            let a = p.linear(n - m * k) * g(gv, n);
            let b = j * p.linear(n + h - m * k) * g(gv, n);
            c1 += a.re * rx;
            c3 += b.re * rx;
        }
        // conditions 2 and 4 pair with p[n + K/2]
        for n in -h..n_len - h {
            let rx = p.linear(n + h);
            let a = j * p.linear(n + h - m * k) * g(gv, n);
            let b = p.linear(n - m * k) * g(gv, n);
            c2 += a.im * rx;
            c4 += b.im * rx;
        }
        [c1, c2, c3, c4]
    };
    let slots = params.m() as i64;
    Ok(build_report(
        Family::OqamOfdm,
        params,
        (-slots..=slots).collect(),
        tol,
        eval,
        |m, v| m == 0 && v == 0,
    ))
}

/// Circular-sum conditions for WCP-COQAM over `m < M`, `v < K`.
pub fn check_wcp_coqam(p: &Pulse, params: &FrameParams, tol: f64) -> Result<OrthReport> {
    p.check_len(params)?;
    let table = carrier_table(params);
    let (k, n_len, h) = (params.k() as i64, params.n() as i64, params.half() as i64);
    let slots = params.m() as i64;
    let j = Complex64::i();
    let eval = |m: i64, v: usize| {
        let gv = &table[v];
        let (mut c1, mut c2, mut c3, mut c4) = (0.0, 0.0, 0.0, 0.0);
        for n in 0..n_len {
            let gn = g(gv, n);
            let p0 = p.circular(n);
            let ph = p.circular(n + h);
            let shifted = p.circular(n - m * k);
            let shifted_h = p.circular(n + h - m * k);
            c1 += (shifted * gn * p0).re;
            c2 += (shifted_h * gn * ph).re;
            c3 += (j * shifted_h * gn * p0).re;
            c4 += (shifted * gn * j * ph).re;
        }
        [c1, c2, c3, c4]
    };
    Ok(build_report(
        Family::WcpCoqam,
        params,
        (0..slots).collect(),
        tol,
        eval,
        move |m, v| m.rem_euclid(slots) == 0 && v == 0,
    ))
}

/// Half-symbol offsets admitted by [`s_beta_gamma`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offset {
    Zero,
    Half,
}

impl Offset {
    fn samples(self, params: &FrameParams) -> i64 {
        match self {
            Offset::Zero => 0,
            Offset::Half => params.half() as i64,
        }
    }
}

/// Circular cross-ambiguity sum
/// `s[m][v] = sum_n p[(n - mK + beta)_N] g_v[n] p*[(n + gamma)_N]`.
pub fn s_beta_gamma(
    p: &Pulse,
    m: i64,
    v: usize,
    beta: Offset,
    gamma: Offset,
    params: &FrameParams,
) -> Result<Complex64> {
    p.check_len(params)?;
    let row: Vec<Complex64> = (0..params.k() as i64)
        .map(|u| params.carrier(v as i64, u))
        .collect();
    Ok(s_circular(
        p,
        m,
        &row,
        beta.samples(params),
        gamma.samples(params),
        params,
    ))
}

fn s_circular(
    p: &Pulse,
    m: i64,
    row: &[Complex64],
    b: i64,
    c: i64,
    params: &FrameParams,
) -> Complex64 {
    let k = params.k() as i64;
    (0..params.n() as i64)
        .map(|n| p.circular(n - m * k + b) * g(row, n) * p.circular(n + c))
        .sum()
}

/// Two-term linear re-expression of `s[m][v]`:
/// `p[n+(M-m)K+beta] g_v[n] * p~[n-gamma] at 0 + p[n-mK+beta] g_v[n] * p~[n-gamma] at 0`.
fn s_linear_form(
    p: &Pulse,
    m: i64,
    row: &[Complex64],
    beta: i64,
    gamma: i64,
    params: &FrameParams,
) -> Complex64 {
    let (k, slots, n_len) = (params.k() as i64, params.m() as i64, params.n() as i64);
    // (x * p~[. - gamma])[0] = sum_n x[n] p*[n + gamma]
    (-gamma..n_len - gamma)
        .map(|n| {
            let gn = g(row, n);
            let wrapped = p.linear(n + (slots - m) * k + beta);
            let direct = p.linear(n - m * k + beta);
            (wrapped + direct) * gn * p.linear(n + gamma)
        })
        .sum()
}

/// Largest `|s[m][v] - linear form|` over every `(m, beta, gamma, v)` in the
/// ranges where the decomposition applies: `m in 1..=M` for
/// `(beta, gamma) in {(0,0), (K/2,K/2), (K/2,0)}` and `m in 0..M` for
/// `(0, K/2)`. Holds for any pulse.
pub fn verify_circular_linear_identity(p: &Pulse, params: &FrameParams) -> Result<f64> {
    p.check_len(params)?;
    let slots = params.m() as i64;
    let cases = [
        (Offset::Zero, Offset::Zero, 1..=slots),
        (Offset::Half, Offset::Half, 1..=slots),
        (Offset::Half, Offset::Zero, 1..=slots),
        (Offset::Zero, Offset::Half, 0..=slots - 1),
    ];
    let jobs: Vec<(Offset, Offset, i64, usize)> = cases
        .iter()
        .flat_map(|(b, c, ms)| {
            ms.clone()
                .flat_map(move |m| (0..params.k()).map(move |v| (*b, *c, m, v)))
        })
        .collect();
    let table = carrier_table(params);
    let worst = jobs
        .par_iter()
        .map(|&(b, c, m, v)| {
            let (bs, cs) = (b.samples(params), c.samples(params));
            let circ = s_circular(p, m, &table[v], bs, cs, params);
            let lin = s_linear_form(p, m, &table[v], bs, cs, params);
            (circ - lin).norm()
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Real Gram matrix `G[a][b] = Re <f_a, f_b>` of the `2MK` WCP-COQAM basis
/// functions, built directly from the staggered transmit model. Basis index
/// `a = k * 2M + column`, matching [`crate::frame::RealGrid`] layout.
pub fn gram_oracle(p: &Pulse, params: &FrameParams) -> Result<DMatrix<f64>> {
    p.check_len(params)?;
    let (k, slots, n_len, h) = (
        params.k(),
        params.m(),
        params.n() as i64,
        params.half() as i64,
    );
    let cols = 2 * slots;
    let basis: Vec<Vec<Complex64>> = (0..k * cols)
        .map(|a| {
            let (sub, col) = (a / cols, a % cols);
            let (part, slot) = column_role(col, slots);
            let shift = slot as i64 * k as i64;
            (0..n_len)
                .map(|n| {
                    let gk = params.carrier(sub as i64, n);
                    match part {
                        Part::Real => gk * p.circular(n - shift),
                        Part::Imag => Complex64::i() * gk * p.circular(n + h - shift),
                    }
                })
                .collect()
        })
        .collect();
    let dim = basis.len();
    let mut gram = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let ip: f64 = basis[a]
                .iter()
                .zip(&basis[b])
                .map(|(x, y)| (x * y.conj()).re)
                .sum();
            gram[(a, b)] = ip;
            gram[(b, a)] = ip;
        }
    }
    Ok(gram)
}

/// Which circular condition governs Gram entry `(a, b)`: returns the 0-based
/// condition, the slot shift `m` and the subcarrier distance `v`. Entries
/// match the checker values up to sign.
pub fn gram_entry_condition(a: usize, b: usize, params: &FrameParams) -> (usize, i64, usize) {
    let cols = 2 * params.m();
    let (ka, kb) = (a / cols, b / cols);
    let (pa, sa) = column_role(a % cols, params.m());
    let (pb, sb) = column_role(b % cols, params.m());
    let cond = match (pa, pb) {
        (Part::Real, Part::Real) => 0,
        (Part::Imag, Part::Imag) => 1,
        (Part::Imag, Part::Real) => 2,
        (Part::Real, Part::Imag) => 3,
    };
    let m = (sa as i64 - sb as i64).rem_euclid(params.m() as i64);
    (cond, m, ka.abs_diff(kb))
}
