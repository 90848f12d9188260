//! Discrete Zak transform and Zak-domain OQAM pulse orthogonalization.
//!
//! The transform uses time period `K` and `M` modulation points:
//!
//! ```text
//! Z[u][v] = sum_{l=0}^{M-1} x[u + l K] exp(-j 2 pi v l / M)
//! ```
//!
//! i.e. an `M`-point DFT along each polyphase component. Orthogonalization
//! runs in two stages:
//!
//! 1. [`zak_orthogonalize`] rescales every Zak coefficient by
//!    `sqrt(2 / S[u][v])` with `S[u][v] = |Z[u][v]|^2 + |Z[u+K/2][v]|^2`.
//!    The result satisfies the circular (WCP-COQAM) conditions exactly.
//! 2. [`refine_linear`] closes the gap to the linear (OQAM-OFDM) conditions.
//!    Those require each polyphase pair `(u, u+K/2)` to be power
//!    complementary at every frequency, not only at the `M` Zak samples, so
//!    each pair is projected onto that set by Gauss-Newton. The
//!    `u <-> K-1-u` mirror symmetry is kept. The starting point is already
//!    exact on the Zak grid, so the correction is small and converges
//!    quadratically.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{mismatch, Error, Result};
use crate::frame::FrameParams;
use crate::pulse::{normalize_energy, Pulse};

/// Relative floor on `min S / max S`.
pub const SINGULAR_RATIO: f64 = 1e-12;
/// Largest imaginary energy fraction tolerated before projecting onto the reals.
pub const IMAG_ENERGY_TOL: f64 = 1e-10;
/// Relative symmetry tolerance for inputs to the orthogonalizer.
pub const SYMMETRY_TOL: f64 = 1e-9;

const MAX_NEWTON_ITERS: usize = 60;

/// Zak-domain coefficients `Z[u][v]`, `u < K`, `v < M`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ZakMatrix {
    subcarriers: usize,
    slots: usize,
    coeffs: Vec<Complex64>,
}

impl ZakMatrix {
    pub fn from_vec(subcarriers: usize, slots: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != subcarriers * slots {
            return Err(mismatch(subcarriers * slots, coeffs.len()));
        }
        Ok(ZakMatrix {
            subcarriers,
            slots,
            coeffs,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.coeffs[u * self.slots + v]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `sum |Z|^2 / M`, equal to the signal energy.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(Complex64::norm_sqr).sum::<f64>() / self.slots as f64
    }
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

pub fn dzt(x: &[Complex64], params: &FrameParams) -> Result<ZakMatrix> {
    if x.len() != params.n() {
        return Err(mismatch(params.n(), x.len()));
    }
    let (k, m) = (params.k(), params.m());
    let fft = plan(m, false);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); k * m];
    for (u, row) in coeffs.chunks_exact_mut(m).enumerate() {
        for (l, c) in row.iter_mut().enumerate() {
            *c = x[u + l * k];
        }
        fft.process(row);
    }
    Ok(ZakMatrix {
        subcarriers: k,
        slots: m,
        coeffs,
    })
}

pub fn idzt(z: &ZakMatrix) -> Vec<Complex64> {
    let (k, m) = (z.subcarriers, z.slots);
    let fft = plan(m, true);
    let scale = 1.0 / m as f64;
    let mut x = vec![Complex64::new(0.0, 0.0); k * m];
    let mut row = vec![Complex64::new(0.0, 0.0); m];
    for u in 0..k {
        row.copy_from_slice(&z.coeffs[u * m..(u + 1) * m]);
        fft.process(&mut row);
        for (l, c) in row.iter().enumerate() {
            x[u + l * k] = c * scale;
        }
    }
    x
}

fn check_symmetric(p: &Pulse) -> Result<()> {
    let peak = p.taps().iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let deviation = p.symmetry_deviation();
    if deviation > SYMMETRY_TOL * peak {
        return Err(Error::AsymmetricPulse { deviation });
    }
    Ok(())
}

/// Zak-domain rescaling stage only. Output is unit energy and satisfies the
/// circular orthogonality conditions.
pub fn zak_orthogonalize(p: &Pulse, params: &FrameParams) -> Result<Pulse> {
    p.check_len(params)?;
    check_symmetric(p)?;
    let (k, m, half) = (params.k(), params.m(), params.half());
    let signal: Vec<Complex64> = p.taps().iter().map(|&t| Complex64::new(t, 0.0)).collect();
    let z = dzt(&signal, params)?;

    let power: Vec<f64> = (0..k)
        .flat_map(|u| (0..m).map(move |v| (u, v)))
        .map(|(u, v)| z.get(u, v).norm_sqr() + z.get((u + half) % k, v).norm_sqr())
        .collect();
    let max = power.iter().copied().fold(0.0, f64::max);
    let min = power.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    if min < SINGULAR_RATIO * max {
        return Err(Error::SingularZak { ratio: min / max });
    }

    let scaled: Vec<Complex64> = z
        .coeffs
        .iter()
        .zip(&power)
        .map(|(c, s)| c * (2.0 / s).sqrt())
        .collect();
    let q = idzt(&ZakMatrix::from_vec(k, m, scaled)?);

    let total: f64 = q.iter().map(Complex64::norm_sqr).sum();
    let imag: f64 = q.iter().map(|c| c.im * c.im).sum();
    if imag > IMAG_ENERGY_TOL * total {
        return Err(Error::NonRealResult {
            fraction: imag / total,
        });
    }
    normalize_energy(&p.with_taps(q.iter().map(|c| c.re).collect(), true))
}

/// `r[lag] = sum_l a[l] a[l + lag]` for `lag < a.len()`.
fn autocorr(a: &[f64]) -> Vec<f64> {
    (0..a.len())
        .map(|lag| a.iter().zip(&a[lag..]).map(|(x, y)| x * y).sum())
        .collect()
}

/// Jacobian of [`autocorr`] with respect to `a`.
fn autocorr_jacobian(a: &[f64]) -> DMatrix<f64> {
    let len = a.len();
    DMatrix::from_fn(len, len, |lag, i| {
        let fwd = if i + lag < len { a[i + lag] } else { 0.0 };
        let back = if i >= lag { a[i - lag] } else { 0.0 };
        fwd + back
    })
}

/// Polyphase pair being refined: either two independent components, or a
/// component whose partner is its own time reversal (possible when `K/2` is
/// odd).
enum PairShape {
    Free,
    SelfMirror,
}

fn pair_residual(x: &[f64], slots: usize, shape: &PairShape, target: f64) -> Vec<f64> {
    let mut f = match shape {
        PairShape::Free => {
            let ra = autocorr(&x[..slots]);
            let rb = autocorr(&x[slots..]);
            ra.iter().zip(&rb).map(|(a, b)| a + b).collect::<Vec<_>>()
        }
        PairShape::SelfMirror => autocorr(x).iter().map(|r| 2.0 * r).collect(),
    };
    f[0] -= target;
    f
}

fn pair_jacobian(x: &[f64], slots: usize, shape: &PairShape) -> DMatrix<f64> {
    match shape {
        PairShape::Free => {
            let ja = autocorr_jacobian(&x[..slots]);
            let jb = autocorr_jacobian(&x[slots..]);
            let mut j = DMatrix::zeros(slots, 2 * slots);
            j.view_mut((0, 0), (slots, slots)).copy_from(&ja);
            j.view_mut((0, slots), (slots, slots)).copy_from(&jb);
            j
        }
        PairShape::SelfMirror => autocorr_jacobian(x) * 2.0,
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Damped Gauss-Newton with minimum-norm steps. Returns the final residual.
fn solve_pair(x: &mut [f64], slots: usize, shape: &PairShape, target: f64) -> f64 {
    let stop = 4.0 * f64::EPSILON * target;
    let mut norm = inf_norm(&pair_residual(x, slots, shape, target));
    for _ in 0..MAX_NEWTON_ITERS {
        if norm <= stop {
            break;
        }
        let f = DVector::from_vec(pair_residual(x, slots, shape, target));
        let jac = pair_jacobian(x, slots, shape);
        let step = match jac.svd(true, true).solve(&f, 1e-14 * target) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let trial_norm = inf_norm(&pair_residual(&trial, slots, shape, target));
            if trial_norm < norm {
                x.copy_from_slice(&trial);
                norm = trial_norm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    norm
}

/// Project a unit-energy pulse that is even-symmetric about `(N-1)/2` onto
/// pulses whose polyphase pairs `(u, u+K/2)` are power complementary. Such
/// pulses satisfy the linear OQAM-OFDM orthogonality conditions.
pub fn refine_linear(p: &Pulse, params: &FrameParams) -> Result<Pulse> {
    p.check_len(params)?;
    check_symmetric(p)?;
    let p = normalize_energy(p)?;
    let (k, m, half) = (params.k(), params.m(), params.half());
    let target = 2.0 / k as f64;
    // poly[u][l] = p[u + l K]
    let mut poly: Vec<Vec<f64>> = (0..k)
        .map(|u| (0..m).map(|l| p.taps()[u + l * k]).collect())
        .collect();

    let mut worst = 0.0f64;
    for u in 0..half {
        let mirror = half - 1 - u;
        if mirror < u {
            continue;
        }
        let residual = if mirror == u {
            let mut x = poly[u].clone();
            let r = solve_pair(&mut x, m, &PairShape::SelfMirror, target);
            poly[u + half] = x.iter().rev().copied().collect();
            poly[u] = x;
            r
        } else {
            let mut x: Vec<f64> = poly[u].iter().chain(&poly[u + half]).copied().collect();
            let r = solve_pair(&mut x, m, &PairShape::Free, target);
            poly[u] = x[..m].to_vec();
            poly[u + half] = x[m..].to_vec();
            poly[mirror] = poly[u + half].iter().rev().copied().collect();
            poly[mirror + half] = poly[u].iter().rev().copied().collect();
            r
        };
        worst = worst.max(residual);
    }
    if worst > 1e-12 * target {
        return Err(Error::RefinementFailed { residual: worst });
    }

    let mut taps = vec![0.0; params.n()];
    for (u, comp) in poly.iter().enumerate() {
        for (l, &v) in comp.iter().enumerate() {
            taps[u + l * k] = v;
        }
    }
    normalize_energy(&p.with_taps(taps, true))
}

/// Full OQAM orthogonalization: Zak-domain rescaling followed by the linear
/// refinement. The result passes both the OQAM-OFDM and the WCP-COQAM
/// conditions.
pub fn orthogonalize_oqam(p: &Pulse, params: &FrameParams) -> Result<Pulse> {
    refine_linear(&zak_orthogonalize(p, params)?, params)
}
