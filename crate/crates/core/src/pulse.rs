//! Prototype filters of length `N = M*K`.
//!
//! Shaped pulses are even-symmetric about the half-sample point `(N-1)/2`.
//! With the phase offset `alpha = K/2 - 1` used by the subcarrier modulation,
//! that is the symmetry under which the Zak-domain orthogonalizer produces a
//! real pulse satisfying both families of orthogonality conditions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{mismatch, Error, Result};
use crate::frame::FrameParams;

/// Generator that produced a pulse.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Gaussian,
    RaisedCosine,
    Rectangular,
    Custom(String),
}

impl Generator {
    fn base_name(&self) -> &str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::RaisedCosine => "rc",
            Generator::Rectangular => "rect",
            Generator::Custom(name) => name,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.base_name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussian" => Generator::Gaussian,
            "rc" => Generator::RaisedCosine,
            "rect" => Generator::Rectangular,
            "" => return Err(Error::Parse("empty generator name".into())),
            other => Generator::Custom(other.to_string()),
        })
    }
}

/// Provenance of a pulse: generator, its shape parameter (beta or roll-off,
/// zero for the rectangle) and whether it went through the orthogonalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseMeta {
    pub generator: Generator,
    pub param: f64,
    pub orthogonalized: bool,
}

impl PulseMeta {
    /// Name used in pulse files, e.g. `gaussian` or `dzt-gaussian`.
    pub fn file_name(&self) -> String {
        if self.orthogonalized {
            format!("dzt-{}", self.generator)
        } else {
            self.generator.to_string()
        }
    }

    fn from_file_name(name: &str, param: f64) -> Result<Self> {
        let (orthogonalized, base) = match name.strip_prefix("dzt-") {
            Some(rest) => (true, rest),
            None => (false, name),
        };
        Ok(PulseMeta {
            generator: base.parse()?,
            param,
            orthogonalized,
        })
    }
}

/// Real prototype filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    taps: Vec<f64>,
    meta: PulseMeta,
}

impl Pulse {
    pub fn new(taps: Vec<f64>, meta: PulseMeta) -> Result<Self> {
        if let Some(bad) = taps.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite tap {bad}")));
        }
        Ok(Pulse { taps, meta })
    }

    /// Pulse with `Custom("custom")` provenance.
    pub fn from_taps(taps: Vec<f64>) -> Result<Self> {
        Pulse::new(
            taps,
            PulseMeta {
                generator: Generator::Custom("custom".into()),
                param: 0.0,
                orthogonalized: false,
            },
        )
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn meta(&self) -> &PulseMeta {
        &self.meta
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// Zero-padded access `p[i]` for any integer `i`.
    #[inline]
    pub fn linear(&self, i: i64) -> f64 {
        if i >= 0 && (i as usize) < self.taps.len() {
            self.taps[i as usize]
        } else {
            0.0
        }
    }

    /// Circular access `p[(i) mod N]`.
    #[inline]
    pub fn circular(&self, i: i64) -> f64 {
        self.taps[i.rem_euclid(self.taps.len() as i64) as usize]
    }

    pub fn check_len(&self, params: &FrameParams) -> Result<()> {
        if self.taps.len() != params.n() {
            return Err(mismatch(
                format!("pulse of length {}", params.n()),
                format!("length {}", self.taps.len()),
            ));
        }
        Ok(())
    }

    /// Largest `|p[n] - p[N-1-n]|`.
    pub fn symmetry_deviation(&self) -> f64 {
        self.taps
            .iter()
            .zip(self.taps.iter().rev())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn with_taps(&self, taps: Vec<f64>, orthogonalized: bool) -> Pulse {
        Pulse {
            taps,
            meta: PulseMeta {
                orthogonalized,
                ..self.meta.clone()
            },
        }
    }

    /// Serialize in the plain-text pulse format.
    pub fn to_text(&self, params: &FrameParams) -> String {
        let mut out = format!(
            "# pulse K={} M={} gen={} param={}\n",
            params.k(),
            params.m(),
            self.meta.file_name(),
            self.meta.param
        );
        for t in &self.taps {
            out.push_str(&format!("{t:?}\n"));
        }
        out
    }

    /// Parse the plain-text pulse format, returning the lattice `(K, M)` from
    /// the header together with the pulse.
    pub fn from_text(text: &str) -> Result<(usize, usize, Pulse)> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty pulse file".into()))?;
        let fields = header
            .strip_prefix("# pulse ")
            .ok_or_else(|| Error::Parse(format!("bad pulse header {header:?}")))?;
        let (mut k, mut m, mut gen, mut param) = (None, None, None, None);
        for field in fields.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field {field:?}")))?;
            let num_err = |e: &dyn fmt::Display| Error::Parse(format!("{key}={value}: {e}"));
            match key {
                "K" => k = Some(value.parse::<usize>().map_err(|e| num_err(&e))?),
                "M" => m = Some(value.parse::<usize>().map_err(|e| num_err(&e))?),
                "gen" => gen = Some(value.to_string()),
                "param" => param = Some(value.parse::<f64>().map_err(|e| num_err(&e))?),
                _ => return Err(Error::Parse(format!("unknown header key {key:?}"))),
            }
        }
        let missing = |what: &str| Error::Parse(format!("pulse header lacks {what}"));
        let k = k.ok_or_else(|| missing("K"))?;
        let m = m.ok_or_else(|| missing("M"))?;
        let meta = PulseMeta::from_file_name(
            &gen.ok_or_else(|| missing("gen"))?,
            param.ok_or_else(|| missing("param"))?,
        )?;
        let taps = lines
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("tap {l:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if taps.len() != k * m {
            return Err(mismatch(k * m, taps.len()));
        }
        Ok((k, m, Pulse::new(taps, meta)?))
    }
}

fn center(params: &FrameParams) -> f64 {
    (params.n() as f64 - 1.0) / 2.0
}

/// Sampled Gaussian `exp(-pi^2 (n - c)^2 / (beta^2 N^2))`, `c = (N-1)/2`,
/// scaled to unit energy.
pub fn gen_gaussian(params: &FrameParams, beta: f64) -> Result<Pulse> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gaussian beta must be positive, got {beta}"
        )));
    }
    let n_total = params.n() as f64;
    let c = center(params);
    let scale = PI * PI / (beta * beta * n_total * n_total);
    let taps = (0..params.n())
        .map(|n| {
            let d = n as f64 - c;
            (-scale * d * d).exp()
        })
        .collect();
    normalize_energy(&Pulse::new(
        taps,
        PulseMeta {
            generator: Generator::Gaussian,
            param: beta,
            orthogonalized: false,
        },
    )?)
}

/// Raised-cosine impulse response at time `t` measured in symbol periods.
///
/// `sinc(t) cos(pi r t) / (1 - (2 r t)^2)`, with the removable singularity at
/// `|t| = 1/(2r)` replaced by its limit `pi/4 sinc(1/(2r))`.
pub fn raised_cosine_kernel(t: f64, rolloff: f64) -> f64 {
    let denom = 1.0 - (2.0 * rolloff * t).powi(2);
    if rolloff > 0.0 && denom.abs() < 1e-10 {
        PI / 4.0 * sinc(1.0 / (2.0 * rolloff))
    } else {
        sinc(t) * (PI * rolloff * t).cos() / denom
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Raised-cosine pulse with symbol period `K` samples, truncated to `N`
/// samples around `(N-1)/2`, scaled to unit energy.
pub fn gen_raised_cosine(params: &FrameParams, rolloff: f64) -> Result<Pulse> {
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(Error::InvalidParameter(format!(
            "raised-cosine roll-off must lie in [0, 1], got {rolloff}"
        )));
    }
    let c = center(params);
    let period = params.k() as f64;
    let taps = (0..params.n())
        .map(|n| raised_cosine_kernel((n as f64 - c) / period, rolloff))
        .collect();
    normalize_energy(&Pulse::new(
        taps,
        PulseMeta {
            generator: Generator::RaisedCosine,
            param: rolloff,
            orthogonalized: false,
        },
    )?)
}

/// OFDM rectangle: `1/sqrt(K)` on the first `K` taps, zero elsewhere.
pub fn gen_rectangular(params: &FrameParams) -> Pulse {
    let height = 1.0 / (params.k() as f64).sqrt();
    let mut taps = vec![0.0; params.n()];
    taps[..params.k()].fill(height);
    Pulse {
        taps,
        meta: PulseMeta {
            generator: Generator::Rectangular,
            param: 0.0,
            orthogonalized: false,
        },
    }
}

pub fn normalize_energy(p: &Pulse) -> Result<Pulse> {
    let energy = p.energy();
    if energy <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let scale = energy.sqrt().recip();
    Ok(Pulse {
        taps: p.taps.iter().map(|t| t * scale).collect(),
        meta: p.meta.clone(),
    })
}
