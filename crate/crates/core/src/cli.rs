//! Command-line front end. Exit codes: 0 success, 1 verification failure or
//! runtime error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{run_ser, snr_grid, PulseSpec, SimConfig, System};
use crate::error::{Error, Result};
use crate::frame::{phase_term, stagger, FrameParams, QamGrid};
use crate::modem::{synth_wcp_phase_with, synth_wcp_staggered};
use crate::orthogonality::{
    check_oqam_ofdm, check_wcp_coqam, verify_circular_linear_identity, OrthReport,
};
use crate::pulse::{gen_gaussian, gen_raised_cosine, gen_rectangular, Generator, Pulse};
use crate::zak::orthogonalize_oqam;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const EQUIVALENCE_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(
    name = "coqam",
    version,
    about = "OQAM-OFDM / WCP-COQAM pulse design, verification and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a prototype pulse and write it in the pulse file format.
    DesignPulse(DesignArgs),
    /// Evaluate the orthogonality conditions of a pulse file.
    Check(CheckArgs),
    /// Monte-Carlo SER/FER sweep over AWGN.
    Simulate(SimulateArgs),
    /// Check waveform equivalence, the circular/linear identity and the
    /// OQAM-OFDM to WCP-COQAM implication on several lattices.
    #[command(alias = "verify-paper")]
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenArg {
    Gaussian,
    Rc,
    Rect,
}

impl From<GenArg> for Generator {
    fn from(g: GenArg) -> Self {
        match g {
            GenArg::Gaussian => Generator::Gaussian,
            GenArg::Rc => Generator::RaisedCosine,
            GenArg::Rect => Generator::Rectangular,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ShapeArgs {
    #[arg(long = "gen", value_enum, default_value = "gaussian")]
    pub generator: GenArg,
    /// Gaussian width parameter.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Raised-cosine roll-off.
    #[arg(long, default_value_t = 0.3)]
    pub rolloff: f64,
    #[arg(long)]
    pub orthogonalize: bool,
}

impl ShapeArgs {
    fn spec(&self) -> PulseSpec {
        let param = match self.generator {
            GenArg::Gaussian => self.beta,
            GenArg::Rc => self.rolloff,
            GenArg::Rect => 0.0,
        };
        PulseSpec::Generated {
            generator: self.generator.into(),
            param,
            orthogonalize: self.orthogonalize,
        }
    }
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long = "M")]
    pub m: usize,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    OqamOfdm,
    WcpCoqam,
    Both,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub pulse: PathBuf,
    /// Must match the pulse file header when given.
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long, default_value_t = crate::orthogonality::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub family: FamilyArg,
    /// Residual CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SystemArg {
    Ofdm,
    WcpCoqam,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "wcp-coqam")]
    pub system: SystemArg,
    /// Pulse file; overrides the generator flags.
    #[arg(long)]
    pub pulse: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long = "K", default_value_t = 128)]
    pub k: usize,
    #[arg(long = "M", default_value_t = 9)]
    pub m: usize,
    #[arg(long, default_value_t = 32)]
    pub cp_len: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub snr_start: f64,
    #[arg(long, default_value_t = 12.0, allow_negative_numbers = true)]
    pub snr_stop: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub snr_step: f64,
    #[arg(long, default_value_t = 100)]
    pub target_frame_errors: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_frames: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Check only this lattice instead of the defaults (4,2), (8,4), (128,9).
    #[arg(long = "K", requires = "m")]
    pub k: Option<usize>,
    #[arg(long = "M", requires = "k")]
    pub m: Option<usize>,
    /// Random frames per lattice for the waveform equivalence test.
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    /// Random pulses per lattice for the identity test.
    #[arg(long, default_value_t = 50)]
    pub pulses: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Perturb the phase term of the phase-form synthesizer.
    #[arg(long, hide = true)]
    pub corrupt_phase: bool,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::DesignPulse(a) => design_pulse(a, out),
        Command::Check(a) => check(a, out, err),
        Command::Simulate(a) => simulate(a, out),
        Command::Verify(a) => verify_lattices(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Io(_)
                | Error::Parse(_)
                | Error::InvalidLattice(_)
                | Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. } => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

/// Honour `COQAM_THREADS` by sizing the global rayon pool once.
fn configure_threads() {
    if let Some(n) = std::env::var("COQAM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn design_pulse(a: &DesignArgs, out: &mut dyn Write) -> Result<i32> {
    let params = FrameParams::new(a.k, a.m, 0)?;
    let pulse = a.shape.spec().build(&params)?;
    emit(&pulse.to_text(&params), a.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn load_pulse(path: &Path) -> Result<(FrameParams, Pulse)> {
    let text = fs::read_to_string(path)?;
    let (k, m, pulse) = Pulse::from_text(&text)?;
    Ok((FrameParams::new(k, m, 0)?, pulse))
}

fn check(a: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (params, pulse) = load_pulse(&a.pulse)?;
    if a.k.is_some_and(|k| k != params.k()) || a.m.is_some_and(|m| m != params.m()) {
        return Err(Error::InvalidParameter(format!(
            "pulse file is for K={} M={}",
            params.k(),
            params.m()
        )));
    }
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {} must be positive",
            a.tol
        )));
    }
    let mut reports: Vec<OrthReport> = Vec::new();
    if a.family != FamilyArg::WcpCoqam {
        reports.push(check_oqam_ofdm(&pulse, &params, a.tol)?);
    }
    if a.family != FamilyArg::OqamOfdm {
        reports.push(check_wcp_coqam(&pulse, &params, a.tol)?);
    }
    let csv: String = reports.iter().map(OrthReport::to_csv).collect();
    emit(&csv, a.out.as_deref(), out)?;
    for r in &reports {
        let (cond, m, v, res) = r.worst();
        writeln!(
            err,
            "{}: max residual {res:.3e} (condition {cond}, m={m}, v={v}) {}",
            r.family.name(),
            if r.pass { "pass" } else { "FAIL" }
        )?;
    }
    Ok(if reports.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let snr = snr_grid(a.snr_start, a.snr_stop, a.snr_step);
    if snr.is_empty() {
        return Err(Error::InvalidParameter("SNR grid is empty".into()));
    }
    let (params, pulse) = match &a.pulse {
        Some(path) => {
            let (params, pulse) = load_pulse(path)?;
            (params.with_cp_len(a.cp_len)?, PulseSpec::Loaded(pulse))
        }
        None => (FrameParams::new(a.k, a.m, a.cp_len)?, a.shape.spec()),
    };
    let system = match a.system {
        SystemArg::Ofdm => System::Ofdm,
        SystemArg::WcpCoqam => System::WcpCoqam,
    };
    let mut cfg = SimConfig::new(params, system, pulse, snr);
    cfg.target_frame_errors = a.target_frame_errors;
    cfg.max_frames = a.max_frames;
    cfg.seed = a.seed;
    let result = run_ser(&cfg)?;
    emit(&result.to_csv(), a.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

/// Outcome of the three checks on one lattice.
#[derive(Debug, Clone)]
pub struct LatticeVerdict {
    pub k: usize,
    pub m: usize,
    pub equivalence: f64,
    pub identity: f64,
    pub implication_tested: usize,
    pub implication_violations: usize,
}

impl LatticeVerdict {
    pub fn pass(&self) -> bool {
        self.equivalence <= EQUIVALENCE_TOL
            && self.identity <= IDENTITY_TOL
            && self.implication_violations == 0
    }
}

fn random_real_grid(params: &FrameParams, rng: &mut ChaCha8Rng) -> Result<crate::frame::RealGrid> {
    stagger(&QamGrid::random_qpsk(params, rng), params)
}

/// Run the three structural checks on one lattice.
pub fn verify_lattice(
    params: &FrameParams,
    frames: usize,
    pulses: usize,
    seed: u64,
    corrupt_phase: bool,
) -> Result<LatticeVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = gen_gaussian(params, 0.25)?;
    let phi = |k: usize, m: usize, slots: usize| {
        let base = phase_term(k, m, slots);
        if corrupt_phase {
            base * Complex64::from_polar(1.0, 0.05 * (k + 1) as f64)
        } else {
            base
        }
    };
    let mut equivalence: f64 = 0.0;
    for _ in 0..frames {
        let rg = random_real_grid(params, &mut rng)?;
        let a = synth_wcp_phase_with(&rg, &reference, params, phi)?;
        let b = synth_wcp_staggered(&rg, &reference, params)?;
        equivalence = equivalence.max(a.max_abs_diff(&b));
    }

    let mut shaped = vec![
        gen_gaussian(params, 0.1)?,
        gen_raised_cosine(params, 0.3)?,
        gen_rectangular(params),
    ];
    let mut identity: f64 = 0.0;
    for _ in 0..pulses {
        let taps = (0..params.n())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        identity = identity.max(verify_circular_linear_identity(
            &Pulse::from_taps(taps)?,
            params,
        )?);
    }
    for p in &shaped {
        identity = identity.max(verify_circular_linear_identity(p, params)?);
    }

    for raw in [
        gen_gaussian(params, 0.1)?,
        gen_raised_cosine(params, 0.3)?,
        gen_gaussian(params, 0.3)?,
    ] {
        if let Ok(p) = orthogonalize_oqam(&raw, params) {
            shaped.push(p);
        }
    }
    let tol = crate::orthogonality::DEFAULT_TOL;
    let mut implication_tested = 0;
    let mut implication_violations = 0;
    for p in &shaped {
        if check_oqam_ofdm(p, params, tol)?.pass {
            implication_tested += 1;
            if !check_wcp_coqam(p, params, tol)?.pass {
                implication_violations += 1;
            }
        }
    }
    Ok(LatticeVerdict {
        k: params.k(),
        m: params.m(),
        equivalence,
        identity,
        implication_tested,
        implication_violations,
    })
}

fn verify_lattices(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let lattices = match (a.k, a.m) {
        (Some(k), Some(m)) => vec![(k, m)],
        _ => vec![(4, 2), (8, 4), (128, 9)],
    };
    writeln!(
        out,
        "K,M,equivalence,identity,implication_tested,implication_violations,pass"
    )?;
    let mut all = true;
    for (k, m) in lattices {
        let params = FrameParams::new(k, m, 0)?;
        let v = verify_lattice(&params, a.frames, a.pulses, a.seed, a.corrupt_phase)?;
        all &= v.pass();
        writeln!(
            out,
            "{},{},{:.3e},{:.3e},{},{},{}",
            v.k,
            v.m,
            v.equivalence,
            v.identity,
            v.implication_tested,
            v.implication_violations,
            v.pass()
        )?;
    }
    Ok(if all { EXIT_OK } else { EXIT_FAIL })
}
