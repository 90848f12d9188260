//! AWGN channel, theoretical QPSK reference and the Monte-Carlo SER/FER sweep.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::frame::{destagger, qpsk_decide, stagger, FrameParams, QamGrid};
use crate::modem::{
    add_cp, mf_receive_wcp, ofdm_baseline_rx, ofdm_baseline_tx, remove_cp, synth_wcp_staggered,
    Waveform,
};
use crate::pulse::{gen_gaussian, gen_raised_cosine, gen_rectangular, Generator, Pulse};
use crate::zak::orthogonalize_oqam;

/// Name recorded in sweep metadata.
pub const RNG_NAME: &str =
    "ChaCha8Rng(seed_from_u64(seed), stream = snr_index << 40 | frame_index)";

/// Add circularly-symmetric complex Gaussian noise. `symbol_energy` is the
/// energy of one complex data symbol on a unit-energy basis function, so the
/// per-sample variance `sigma^2 = Es / 10^(es_n0_db/10)` gives the nominal
/// Es/N0 at the matched-filter output.
pub fn awgn<R: Rng + ?Sized>(
    w: &Waveform,
    es_n0_db: f64,
    symbol_energy: f64,
    rng: &mut R,
) -> Waveform {
    let sigma2 = noise_variance(es_n0_db, symbol_energy);
    let scale = (sigma2 / 2.0).sqrt();
    let samples = w
        .samples
        .iter()
        .map(|s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(re, im) * scale
        })
        .collect();
    Waveform {
        samples,
        start: w.start,
    }
}

pub fn noise_variance(es_n0_db: f64, symbol_energy: f64) -> f64 {
    symbol_energy / 10f64.powf(es_n0_db / 10.0)
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Gray-coded QPSK symbol error rate `2Q(sqrt(g)) - Q(sqrt(g))^2`.
pub fn theoretical_qpsk_ser(es_n0_db: f64) -> f64 {
    let q = q_function(10f64.powf(es_n0_db / 10.0).sqrt());
    2.0 * q - q * q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    Ofdm,
    WcpCoqam,
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Ofdm => "ofdm",
            System::WcpCoqam => "wcp-coqam",
        })
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ofdm" => Ok(System::Ofdm),
            "wcp-coqam" => Ok(System::WcpCoqam),
            other => Err(Error::Parse(format!("unknown system {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum PulseSpec {
    Generated {
        generator: Generator,
        param: f64,
        orthogonalize: bool,
    },
    Loaded(Pulse),
}

impl PulseSpec {
    pub fn build(&self, params: &FrameParams) -> Result<Pulse> {
        match self {
            PulseSpec::Loaded(p) => {
                p.check_len(params)?;
                Ok(p.clone())
            }
            PulseSpec::Generated {
                generator,
                param,
                orthogonalize,
            } => {
                let raw = match generator {
                    Generator::Gaussian => gen_gaussian(params, *param)?,
                    Generator::RaisedCosine => gen_raised_cosine(params, *param)?,
                    Generator::Rectangular => gen_rectangular(params),
                    Generator::Custom(name) => {
                        return Err(Error::InvalidParameter(format!(
                            "cannot generate pulse {name:?}"
                        )))
                    }
                };
                if *orthogonalize {
                    orthogonalize_oqam(&raw, params)
                } else {
                    Ok(raw)
                }
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            PulseSpec::Generated {
                generator,
                param,
                orthogonalize,
            } => format!("{generator} param={param} orthogonalized={orthogonalize}"),
            PulseSpec::Loaded(p) => {
                let m = p.meta();
                format!(
                    "loaded {} param={} orthogonalized={}",
                    m.generator, m.param, m.orthogonalized
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: FrameParams,
    pub system: System,
    /// Ignored by the OFDM baseline.
    pub pulse: PulseSpec,
    pub snr_db: Vec<f64>,
    pub target_frame_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(params: FrameParams, system: System, pulse: PulseSpec, snr_db: Vec<f64>) -> Self {
        SimConfig {
            params,
            system,
            pulse,
            snr_db,
            target_frame_errors: 100,
            max_frames: 1_000_000,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::InvalidParameter("empty SNR grid".into()));
        }
        if let Some(bad) = self.snr_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite SNR {bad}")));
        }
        if self.target_frame_errors == 0 {
            return Err(Error::InvalidParameter(
                "target frame errors must be at least 1".into(),
            ));
        }
        if self.max_frames == 0 {
            return Err(Error::InvalidParameter(
                "max frames must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `start, start + step, ...` up to and including `stop` (with a small slack
/// for accumulated rounding). Empty when the range is empty or `step <= 0`.
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Vec::new();
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + i as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerRecord {
    pub es_n0_db: f64,
    pub frames: u64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub frame_errors: u64,
    pub ser: f64,
    pub fer: f64,
    /// Stopped by the frame budget before reaching the target error count.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub metadata: Vec<(String, String)>,
    pub records: Vec<SerRecord>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            writeln!(out, "# {key}={value}").unwrap();
        }
        let capped: Vec<String> = self
            .records
            .iter()
            .filter(|r| r.capped)
            .map(|r| r.es_n0_db.to_string())
            .collect();
        writeln!(out, "# capped={}", capped.join(";")).unwrap();
        out.push_str("es_n0_db,frames,symbols,symbol_errors,frame_errors,ser,fer\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.es_n0_db, r.frames, r.symbols, r.symbol_errors, r.frame_errors, r.ser, r.fer
            )
            .unwrap();
        }
        out
    }
}

fn frame_rng(seed: u64, snr_index: usize, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) | frame);
    rng
}

/// One transmitted frame; returns the number of symbol errors.
fn run_frame(
    params: &FrameParams,
    system: System,
    pulse: Option<&Pulse>,
    es_n0_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<u64> {
    let tx = QamGrid::random_qpsk(params, rng);
    let rx = match (system, pulse) {
        (System::Ofdm, _) => {
            let w = ofdm_baseline_tx(&tx, params)?;
            ofdm_baseline_rx(&awgn(&w, es_n0_db, 1.0, rng), params)?
        }
        (System::WcpCoqam, Some(p)) => {
            let w = add_cp(
                &synth_wcp_staggered(&stagger(&tx, params)?, p, params)?,
                params,
            )?;
            let r = remove_cp(&awgn(&w, es_n0_db, 1.0, rng), params)?;
            destagger(&mf_receive_wcp(&r, p, params)?, params)?
        }
        (System::WcpCoqam, None) => unreachable!("pulse is built before the sweep"),
    };
    Ok(tx
        .as_slice()
        .iter()
        .zip(rx.as_slice())
        .filter(|(a, b)| qpsk_decide(**b) != **a)
        .count() as u64)
}

/// Monte-Carlo SER/FER sweep. Frames are drawn in parallel batches from
/// per-frame RNG streams and accumulated in frame order, so the result does
/// not depend on the thread count.
pub fn run_ser(cfg: &SimConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let params = &cfg.params;
    let pulse = match cfg.system {
        System::Ofdm => None,
        System::WcpCoqam => Some(cfg.pulse.build(params)?),
    };
    let per_frame = params.n() as u64;
    let mut records = Vec::with_capacity(cfg.snr_db.len());
    for (idx, &snr) in cfg.snr_db.iter().enumerate() {
        let (mut frames, mut symbol_errors, mut frame_errors) = (0u64, 0u64, 0u64);
        let mut batch = 32u64;
        'point: while frames < cfg.max_frames && frame_errors < cfg.target_frame_errors {
            let end = (frames + batch).min(cfg.max_frames);
            let counts = (frames..end)
                .into_par_iter()
                .map(|f| {
                    let mut rng = frame_rng(cfg.seed, idx, f);
                    run_frame(params, cfg.system, pulse.as_ref(), snr, &mut rng)
                })
                .collect::<Result<Vec<u64>>>()?;
            for errors in counts {
                frames += 1;
                symbol_errors += errors;
                frame_errors += u64::from(errors > 0);
                if frame_errors >= cfg.target_frame_errors {
                    break 'point;
                }
            }
            batch = (batch * 2).min(4096);
        }
        let symbols = frames * per_frame;
        records.push(SerRecord {
            es_n0_db: snr,
            frames,
            symbols,
            symbol_errors,
            frame_errors,
            ser: symbol_errors as f64 / symbols as f64,
            fer: frame_errors as f64 / frames as f64,
            capped: frame_errors < cfg.target_frame_errors,
        });
    }
    let metadata = vec![
        ("system".to_string(), cfg.system.to_string()),
        (
            "pulse".to_string(),
            match cfg.system {
                System::Ofdm => "none".to_string(),
                System::WcpCoqam => cfg.pulse.describe(),
            },
        ),
        ("K".to_string(), params.k().to_string()),
        ("M".to_string(), params.m().to_string()),
        ("cp_len".to_string(), params.cp_len().to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("rng".to_string(), RNG_NAME.to_string()),
        (
            "target_frame_errors".to_string(),
            cfg.target_frame_errors.to_string(),
        ),
        ("max_frames".to_string(), cfg.max_frames.to_string()),
    ];
    Ok(SweepResult { metadata, records })
}

/// Welch estimate with a Hann window and 50% overlap, averaged over every
/// segment of every waveform and normalized to unit sum. Waveforms shorter
/// than `nfft` contribute one zero-padded segment. A signal with no energy is
/// an error unless `allow_zero`, in which case an all-zero vector is returned.
pub fn psd_estimate(waveforms: &[Waveform], nfft: usize, allow_zero: bool) -> Result<Vec<f64>> {
    if nfft == 0 || !nfft.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "nfft {nfft} is not a power of two"
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let window: Vec<f64> = (0..nfft)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nfft as f64).cos())
        .collect();
    let hop = (nfft / 2).max(1);
    let mut psd = vec![0.0; nfft];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for w in waveforms {
        let mut offset = 0;
        loop {
            for (i, b) in buf.iter_mut().enumerate() {
                let s = w.samples.get(offset + i).copied().unwrap_or_default();
                *b = s * window[i];
            }
            fft.process(&mut buf);
            for (acc, b) in psd.iter_mut().zip(&buf) {
                *acc += b.norm_sqr();
            }
            offset += hop;
            if offset + nfft > w.len() {
                break;
            }
        }
    }
    let total: f64 = psd.iter().sum();
    if total == 0.0 || !total.is_finite() {
        return if allow_zero && total == 0.0 {
            Ok(psd)
        } else {
            Err(Error::ZeroEnergy)
        };
    }
    Ok(psd.into_iter().map(|v| v / total).collect())
}
