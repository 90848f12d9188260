//! Transmit synthesizers, cyclic prefix handling and matched-filter receivers.
//!
//! All WCP-COQAM synthesis uses the shared column map from [`crate::frame`],
//! so transmitter and receiver agree on which real column carries which part
//! of which slot.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{mismatch, Error, Result};
use crate::frame::{imag_column, phase_term, real_column, FrameParams, QamGrid, RealGrid};
use crate::pulse::Pulse;

/// Complex baseband samples. `start` is the time index of `samples[0]`; it is
/// negative for waveforms carrying a cyclic prefix or an OQAM-OFDM lead-in.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub start: i64,
}

impl Waveform {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Waveform { samples, start: 0 }
    }

    pub fn zeros(len: usize) -> Self {
        Waveform::new(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample at absolute time `n`, zero outside the stored span.
    pub fn at(&self, n: i64) -> Complex64 {
        let i = n - self.start;
        if i >= 0 && (i as usize) < self.samples.len() {
            self.samples[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn max_abs_diff(&self, other: &Waveform) -> f64 {
        let lo = self.start.min(other.start);
        let hi = (self.start + self.len() as i64).max(other.start + other.len() as i64);
        (lo..hi)
            .map(|n| (self.at(n) - other.at(n)).norm())
            .fold(0.0, f64::max)
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(Complex64::norm_sqr).sum::<f64>() / self.len() as f64
    }

    /// CSV with columns `n,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re,im\n");
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(out, "{},{},{}", self.start + i as i64, s.re, s.im).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        let mut start = None;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') || line == "n,re,im" {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(Error::Parse(format!("expected n,re,im in {line:?}")));
            }
            let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("{line:?}: {e}"));
            let n: i64 = cells[0].parse().map_err(|e| bad(&e))?;
            let re: f64 = cells[1].parse().map_err(|e| bad(&e))?;
            let im: f64 = cells[2].parse().map_err(|e| bad(&e))?;
            let first = *start.get_or_insert(n);
            if n != first + samples.len() as i64 {
                return Err(Error::Parse(format!("non-consecutive sample index {n}")));
            }
            samples.push(Complex64::new(re, im));
        }
        Ok(Waveform {
            samples,
            start: start.unwrap_or(0),
        })
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        }
    })
}

/// Per-slot subcarrier sums `y_m[u] = sum_k d[k][m] g_k[u]`, `u < K`, for the
/// real and imaginary halves of the staggered grid. `g_k[n]` has period `K`
/// in `n`, so one inverse FFT per slot covers the whole frame.
fn slot_carriers(
    rg: &RealGrid,
    params: &FrameParams,
) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let (k, slots) = (params.k(), params.m());
    let ifft = fft_plan(k, true);
    let phase: Vec<Complex64> = (0..k as i64).map(|sub| params.carrier(sub, 0)).collect();
    let run = |col: usize| {
        let mut buf: Vec<Complex64> = (0..k).map(|sub| phase[sub] * rg.get(sub, col)).collect();
        ifft.process(&mut buf);
        buf
    };
    let real = (0..slots).map(|m| run(real_column(m))).collect();
    let imag = (0..slots).map(|m| run(imag_column(m, slots))).collect();
    (real, imag)
}

/// OQAM-OFDM transmit signal with the slot sums truncated to the frame and
/// linear (zero-padded) pulse shifts. The returned waveform spans the full
/// support, `n = -K/2 .. (M-1)K + N - 1`.
pub fn synth_oqam_ofdm(rg: &RealGrid, p: &Pulse, params: &FrameParams) -> Result<Waveform> {
    rg.check_dims(params)?;
    p.check_len(params)?;
    let (k, h, n_len) = (params.k() as i64, params.half() as i64, params.n() as i64);
    let (yr, yi) = slot_carriers(rg, params);
    let start = -h;
    let end = (params.m() as i64 - 1) * k + n_len;
    let j = Complex64::i();
    let samples = (start..end)
        .map(|n| {
            let u = n.rem_euclid(k) as usize;
            (0..params.m())
                .map(|m| {
                    let shift = m as i64 * k;
                    yr[m][u] * p.linear(n - shift) + j * yi[m][u] * p.linear(n + h - shift)
                })
                .sum()
        })
        .collect();
    Ok(Waveform { samples, start })
}

/// WCP-COQAM transmit signal in staggered form:
/// `sum_k sum_m [dR g_k[n] p[(n - mK)_N] + j dI g_k[n] p[(n + K/2 - mK)_N]]`.
pub fn synth_wcp_staggered(rg: &RealGrid, p: &Pulse, params: &FrameParams) -> Result<Waveform> {
    rg.check_dims(params)?;
    p.check_len(params)?;
    let (k, h) = (params.k() as i64, params.half() as i64);
    let (yr, yi) = slot_carriers(rg, params);
    let j = Complex64::i();
    let samples = (0..params.n() as i64)
        .map(|n| {
            let u = n.rem_euclid(k) as usize;
            (0..params.m())
                .map(|m| {
                    let shift = m as i64 * k;
                    yr[m][u] * p.circular(n - shift) + j * yi[m][u] * p.circular(n + h - shift)
                })
                .sum()
        })
        .collect();
    Ok(Waveform::new(samples))
}

/// WCP-COQAM transmit signal in phase-term form:
/// `sum_k sum_{m<2M} d~[k][m] p[(n - mK/2)_N] exp(j 2 pi k (n - D/2) / K) phi[k][m]`.
pub fn synth_wcp_phase(rg: &RealGrid, p: &Pulse, params: &FrameParams) -> Result<Waveform> {
    synth_wcp_phase_with(rg, p, params, phase_term)
}

/// [`synth_wcp_phase`] with a caller-supplied phase term `phi(k, m, M)`.
pub fn synth_wcp_phase_with(
    rg: &RealGrid,
    p: &Pulse,
    params: &FrameParams,
    phi: impl Fn(usize, usize, usize) -> Complex64,
) -> Result<Waveform> {
    rg.check_dims(params)?;
    p.check_len(params)?;
    let (k, slots) = (params.k(), params.m());
    let kk = k as i64;
    let delay = params.n() as i64 - 1;
    let ifft = fft_plan(k, true);
    // exp(-j pi k D / K) with the integer numerator reduced modulo 2K
    let delay_phase: Vec<Complex64> = (0..kk)
        .map(|sub| {
            let num = (-sub * delay).rem_euclid(2 * kk);
            Complex64::from_polar(1.0, PI * num as f64 / kk as f64)
        })
        .collect();
    let mut samples = vec![Complex64::new(0.0, 0.0); params.n()];
    for col in 0..2 * slots {
        let mut y: Vec<Complex64> = (0..k)
            .map(|sub| rg.get(sub, col) * phi(sub, col, slots) * delay_phase[sub])
            .collect();
        ifft.process(&mut y);
        let shift = (col * k / 2) as i64;
        for (n, s) in samples.iter_mut().enumerate() {
            *s += y[n % k] * p.circular(n as i64 - shift);
        }
    }
    Ok(Waveform::new(samples))
}

/// Prepend the last `cp_len` samples.
pub fn add_cp(w: &Waveform, params: &FrameParams) -> Result<Waveform> {
    if w.len() != params.n() {
        return Err(mismatch(params.n(), w.len()));
    }
    let cp = params.cp_len();
    let mut samples = Vec::with_capacity(w.len() + cp);
    samples.extend_from_slice(&w.samples[w.len() - cp..]);
    samples.extend_from_slice(&w.samples);
    Ok(Waveform {
        samples,
        start: w.start - cp as i64,
    })
}

/// Drop the first `cp_len` samples.
pub fn remove_cp(w: &Waveform, params: &FrameParams) -> Result<Waveform> {
    let cp = params.cp_len();
    if w.len() != params.n() + cp {
        return Err(mismatch(params.n() + cp, w.len()));
    }
    Ok(Waveform {
        samples: w.samples[cp..].to_vec(),
        start: w.start + cp as i64,
    })
}

/// Matched-filter demodulation of a CP-free WCP-COQAM frame: the real part of
/// the correlation with every staggered basis function.
pub fn mf_receive_wcp(w: &Waveform, p: &Pulse, params: &FrameParams) -> Result<RealGrid> {
    if w.len() != params.n() {
        return Err(mismatch(params.n(), w.len()));
    }
    p.check_len(params)?;
    let (k, h) = (params.k() as i64, params.half() as i64);
    let base = w.start;
    let fold = |shift: i64| -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); k as usize];
        for (i, s) in w.samples.iter().enumerate() {
            let n = base + i as i64;
            acc[n.rem_euclid(k) as usize] += s * p.circular(n + shift);
        }
        acc
    };
    Ok(demodulate_folds(
        params,
        |m| fold(-(m as i64) * k),
        |m| fold(h - m as i64 * k),
    ))
}

/// Matched-filter demodulation of an OQAM-OFDM frame produced by
/// [`synth_oqam_ofdm`] (linear pulse shifts).
pub fn mf_receive_oqam_ofdm(w: &Waveform, p: &Pulse, params: &FrameParams) -> Result<RealGrid> {
    p.check_len(params)?;
    let (k, h) = (params.k() as i64, params.half() as i64);
    let fold = |shift: i64| -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); k as usize];
        for (i, s) in w.samples.iter().enumerate() {
            let n = w.start + i as i64;
            acc[n.rem_euclid(k) as usize] += s * p.linear(n + shift);
        }
        acc
    };
    Ok(demodulate_folds(
        params,
        |m| fold(-(m as i64) * k),
        |m| fold(h - m as i64 * k),
    ))
}

/// Finish the correlator: `F[u] = sum_{n = u mod K} w[n] p[n + shift]` is
/// turned into `sum_u conj(g_k[u]) F[u]` for every subcarrier with a forward
/// FFT, then the OQAM real/imaginary part is taken.
fn demodulate_folds(
    params: &FrameParams,
    real_fold: impl Fn(usize) -> Vec<Complex64>,
    imag_fold: impl Fn(usize) -> Vec<Complex64>,
) -> RealGrid {
    let (k, slots) = (params.k(), params.m());
    let fft = fft_plan(k, false);
    let phase: Vec<Complex64> = (0..k as i64)
        .map(|sub| params.carrier(sub, 0).conj())
        .collect();
    let mut out = RealGrid::zeros(k, 2 * slots);
    for m in 0..slots {
        let mut re = real_fold(m);
        fft.process(&mut re);
        let mut im = imag_fold(m);
        fft.process(&mut im);
        for sub in 0..k {
            out.set(sub, real_column(m), (re[sub] * phase[sub]).re);
            // conj(j) = -j, and Re{-j z} = Im{z}
            out.set(sub, imag_column(m, slots), (im[sub] * phase[sub]).im);
        }
    }
    out
}

/// Plain OFDM reference: every slot is a `K`-point unit-energy inverse DFT of
/// its symbols, and one cyclic prefix of `cp_len` samples precedes the frame.
pub fn ofdm_baseline_tx(grid: &QamGrid, params: &FrameParams) -> Result<Waveform> {
    grid.check_dims(params)?;
    let k = params.k();
    let ifft = fft_plan(k, true);
    let scale = 1.0 / (k as f64).sqrt();
    let mut body = Vec::with_capacity(params.n());
    for m in 0..params.m() {
        let mut buf: Vec<Complex64> = (0..k).map(|sub| grid.get(sub, m) * scale).collect();
        ifft.process(&mut buf);
        body.extend(buf);
    }
    add_cp(&Waveform::new(body), params)
}

pub fn ofdm_baseline_rx(w: &Waveform, params: &FrameParams) -> Result<QamGrid> {
    let body = remove_cp(w, params)?;
    let k = params.k();
    let fft = fft_plan(k, false);
    let scale = 1.0 / (k as f64).sqrt();
    let mut grid = QamGrid::zeros(k, params.m());
    for (m, chunk) in body.samples.chunks_exact(k).enumerate() {
        let mut buf = chunk.to_vec();
        fft.process(&mut buf);
        for (sub, v) in buf.iter().enumerate() {
            grid.set(sub, m, v * scale);
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{stagger, QamGrid};
    use crate::pulse::{gen_gaussian, gen_raised_cosine};
    use crate::zak::orthogonalize_oqam;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lattice(k: usize, m: usize) -> FrameParams {
        FrameParams::new(k, m, 0).unwrap()
    }

    fn random_real_grid(params: &FrameParams, rng: &mut ChaCha8Rng) -> RealGrid {
        let values = (0..params.k() * 2 * params.m())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        RealGrid::from_vec(params.k(), 2 * params.m(), values).unwrap()
    }

    fn cis(x: f64) -> Complex64 {
        Complex64::from_polar(1.0, x)
    }

    /// Four nested loops over (n, k, m, part) straight from the OQAM-OFDM
    /// transmit model.
    fn oqam_ofdm_oracle(rg: &RealGrid, p: &Pulse, params: &FrameParams) -> Waveform {
        let (k, m, h) = (params.k() as i64, params.m() as i64, params.half() as i64);
        let alpha = params.alpha();
        let qam = crate::frame::destagger(rg, params).unwrap();
        let start = -h;
        let end = (m - 1) * k + params.n() as i64;
        let mut samples = Vec::new();
        for n in start..end {
            let mut acc = Complex64::new(0.0, 0.0);
            for sub in 0..k {
                let g = cis(2.0 * PI * sub as f64 * (n as f64 - alpha / 2.0) / k as f64);
                for slot in 0..m {
                    let d = qam.get(sub as usize, slot as usize);
                    acc += g * d.re * p.linear(n - slot * k);
                    acc += g * Complex64::i() * d.im * p.linear(n + h - slot * k);
                }
            }
            samples.push(acc);
        }
        Waveform { samples, start }
    }

    fn wcp_phase_oracle(rg: &RealGrid, p: &Pulse, params: &FrameParams) -> Waveform {
        let (k, m, n_len) = (params.k(), params.m(), params.n());
        let d = params.delay();
        let samples = (0..n_len)
            .map(|n| {
                let mut acc = Complex64::new(0.0, 0.0);
                for sub in 0..k {
                    for col in 0..2 * m {
                        let shifted = p.taps()[(n + n_len - col * k / 2) % n_len];
                        let phi = cis(PI * sub as f64 * (m as f64 - 0.5))
                            * if col % 2 == 0 {
                                Complex64::new(1.0, 0.0)
                            } else {
                                Complex64::i()
                            };
                        let g = cis(2.0 * PI * sub as f64 * (n as f64 - d / 2.0) / k as f64);
                        acc += rg.get(sub, col) * shifted * g * phi;
                    }
                }
                acc
            })
            .collect();
        Waveform::new(samples)
    }

    fn wcp_staggered_oracle(rg: &RealGrid, p: &Pulse, params: &FrameParams) -> Waveform {
        let (k, m, n_len, h) = (params.k(), params.m(), params.n(), params.half());
        let alpha = params.alpha();
        let qam = crate::frame::destagger(rg, params).unwrap();
        let samples = (0..n_len)
            .map(|n| {
                let mut acc = Complex64::new(0.0, 0.0);
                for sub in 0..k {
                    let g = cis(2.0 * PI * sub as f64 * (n as f64 - alpha / 2.0) / k as f64);
                    for slot in 0..m {
                        let d = qam.get(sub, slot);
                        acc += d.re * g * p.taps()[(n + n_len - slot * k) % n_len];
                        acc += Complex64::i()
                            * d.im
                            * g
                            * p.taps()[(n + n_len + h - slot * k) % n_len];
                    }
                }
                acc
            })
            .collect();
        Waveform::new(samples)
    }

    #[test]
    fn zero_grid_gives_zero_waveforms() {
        let params = lattice(4, 2);
        let p = gen_gaussian(&params, 0.5).unwrap();
        let zero = RealGrid::zeros(4, 4);
        for w in [
            synth_oqam_ofdm(&zero, &p, &params).unwrap(),
            synth_wcp_staggered(&zero, &p, &params).unwrap(),
            synth_wcp_phase(&zero, &p, &params).unwrap(),
        ] {
            assert!(w.samples.iter().all(|s| s.norm() == 0.0));
        }
        let rx = mf_receive_wcp(&Waveform::zeros(8), &p, &params).unwrap();
        assert!(rx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oqam_ofdm_single_real_symbol_is_the_pulse() {
        let params = lattice(4, 2);
        let p = gen_raised_cosine(&params, 0.3).unwrap();
        let mut rg = RealGrid::zeros(4, 4);
        rg.set(0, 0, 1.0);
        let w = synth_oqam_ofdm(&rg, &p, &params).unwrap();
        assert_eq!(w.start, -2);
        assert_eq!(w.len(), 2 * 8 - 2);
        for n in w.start..w.start + w.len() as i64 {
            assert!((w.at(n) - Complex64::new(p.linear(n), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn synthesizers_match_brute_force() {
        let params = lattice(4, 2);
        let p = gen_raised_cosine(&params, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let rg = random_real_grid(&params, &mut rng);
            let oq = synth_oqam_ofdm(&rg, &p, &params).unwrap();
            assert!(oq.max_abs_diff(&oqam_ofdm_oracle(&rg, &p, &params)) < 1e-13);
            let ph = synth_wcp_phase(&rg, &p, &params).unwrap();
            assert!(ph.max_abs_diff(&wcp_phase_oracle(&rg, &p, &params)) < 1e-13);
            let st = synth_wcp_staggered(&rg, &p, &params).unwrap();
            assert!(st.max_abs_diff(&wcp_staggered_oracle(&rg, &p, &params)) < 1e-13);
        }
    }

    #[test]
    fn phase_and_staggered_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (k, m) in [(4, 2), (8, 4), (6, 3)] {
            let params = lattice(k, m);
            let p = gen_gaussian(&params, 0.4).unwrap();
            for _ in 0..20 {
                let rg = random_real_grid(&params, &mut rng);
                let a = synth_wcp_phase(&rg, &p, &params).unwrap();
                let b = synth_wcp_staggered(&rg, &p, &params).unwrap();
                assert!(a.max_abs_diff(&b) <= 1e-12);
            }
        }
    }

    #[test]
    fn corrupted_phase_breaks_equivalence() {
        let params = lattice(8, 4);
        let p = gen_gaussian(&params, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rg = random_real_grid(&params, &mut rng);
        let bad = synth_wcp_phase_with(&rg, &p, &params, |k, m, slots| {
            phase_term(k, m, slots) * cis(0.1 * k as f64)
        })
        .unwrap();
        let good = synth_wcp_staggered(&rg, &p, &params).unwrap();
        assert!(bad.max_abs_diff(&good) > 1e-3);
    }

    #[test]
    fn synthesis_is_linear() {
        let params = lattice(8, 3);
        let p = gen_gaussian(&params, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (g1, g2) = (
            random_real_grid(&params, &mut rng),
            random_real_grid(&params, &mut rng),
        );
        let (a, b) = (0.7, -1.3);
        let combo = RealGrid::from_vec(
            8,
            6,
            g1.as_slice()
                .iter()
                .zip(g2.as_slice())
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        let lhs = synth_wcp_staggered(&combo, &p, &params).unwrap();
        let (w1, w2) = (
            synth_wcp_staggered(&g1, &p, &params).unwrap(),
            synth_wcp_staggered(&g2, &p, &params).unwrap(),
        );
        let rhs = Waveform::new(
            w1.samples
                .iter()
                .zip(&w2.samples)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        );
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn cp_round_trip() {
        let params = FrameParams::new(4, 2, 4).unwrap();
        let ramp = Waveform::new((0..8).map(|i| Complex64::new(i as f64, 0.0)).collect());
        let with = add_cp(&ramp, &params).unwrap();
        assert_eq!(with.len(), 12);
        assert_eq!(&with.samples[..4], &ramp.samples[4..]);
        assert_eq!(remove_cp(&with, &params).unwrap(), ramp);

        let none = lattice(4, 2);
        assert_eq!(add_cp(&ramp, &none).unwrap(), ramp);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = FrameParams::new(8, 4, 7).unwrap();
        let w = Waveform::new(
            (0..32)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        assert_eq!(
            remove_cp(&add_cp(&w, &params).unwrap(), &params).unwrap(),
            w
        );
        assert!(remove_cp(&w, &params).is_err());
    }

    #[test]
    fn loopback_with_orthogonal_pulse() {
        let params = lattice(16, 4);
        let p = orthogonalize_oqam(&gen_gaussian(&params, 0.3).unwrap(), &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let rg = random_real_grid(&params, &mut rng);
            let w = synth_wcp_staggered(&rg, &p, &params).unwrap();
            assert!(mf_receive_wcp(&w, &p, &params).unwrap().max_abs_diff(&rg) < 1e-10);
            let w = synth_oqam_ofdm(&rg, &p, &params).unwrap();
            assert!(
                mf_receive_oqam_ofdm(&w, &p, &params)
                    .unwrap()
                    .max_abs_diff(&rg)
                    < 1e-10
            );
        }
    }

    #[test]
    fn loopback_with_raw_rc_shows_interference() {
        let params = lattice(16, 4);
        let p = gen_raised_cosine(&params, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let qam = QamGrid::random_qpsk(&params, &mut rng);
        let rg = stagger(&qam, &params).unwrap();
        let w = synth_wcp_staggered(&rg, &p, &params).unwrap();
        assert!(mf_receive_wcp(&w, &p, &params).unwrap().max_abs_diff(&rg) > 0.01);
    }

    #[test]
    fn ofdm_baseline() {
        let params = FrameParams::new(8, 3, 2).unwrap();
        let zero = ofdm_baseline_tx(&QamGrid::zeros(8, 3), &params).unwrap();
        assert!(zero.samples.iter().all(|s| s.norm() == 0.0));

        let mut single = QamGrid::zeros(8, 3);
        single.set(3, 1, Complex64::new(1.0, 0.0));
        let w = ofdm_baseline_tx(&single, &params).unwrap();
        let body = remove_cp(&w, &params).unwrap();
        for n in 0..8 {
            let want = cis(2.0 * PI * 3.0 * n as f64 / 8.0) / 8f64.sqrt();
            assert!((body.samples[8 + n] - want).norm() < 1e-14);
            assert!(body.samples[n].norm() < 1e-14);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = QamGrid::random_qpsk(&params, &mut rng);
        let back = ofdm_baseline_rx(&ofdm_baseline_tx(&g, &params).unwrap(), &params).unwrap();
        for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transmit_power_is_two_for_unit_variance_real_symbols() {
        let params = lattice(16, 4);
        let p = orthogonalize_oqam(&gen_gaussian(&params, 0.3).unwrap(), &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut total = 0.0;
        let frames = 1000;
        for _ in 0..frames {
            let values = (0..16 * 8)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            let rg = RealGrid::from_vec(16, 8, values).unwrap();
            total += synth_wcp_staggered(&rg, &p, &params).unwrap().mean_power();
        }
        let mean = total / frames as f64;
        assert!((mean - 2.0).abs() < 0.1, "mean power {mean}");
    }

    #[test]
    fn waveform_csv_round_trip() {
        let w = Waveform {
            samples: vec![Complex64::new(0.1, -2.0), Complex64::new(1e-300, 3.5)],
            start: -1,
        };
        let csv = w.to_csv();
        assert!(csv.starts_with("n,re,im\n-1,"));
        assert_eq!(Waveform::from_csv(&csv).unwrap(), w);
    }
}
