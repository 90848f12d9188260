//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use coqam::channel::{
    run_ser, snr_grid, theoretical_qpsk_ser, PulseSpec, SimConfig, SweepResult, System,
};
use coqam::modem::{add_cp, mf_receive_wcp, remove_cp, synth_wcp_phase, synth_wcp_staggered};
use coqam::orthogonality::{gram_entry_condition, gram_oracle, verify_circular_linear_identity};
use coqam::pulse::{gen_gaussian, gen_raised_cosine, normalize_energy};
use coqam::{
    check_oqam_ofdm, check_wcp_coqam, dzt, idzt, orthogonalize_oqam, stagger, FrameParams,
    Generator, Pulse, QamGrid, RealGrid,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn lattice(k: usize, m: usize) -> FrameParams {
    FrameParams::new(k, m, 0).unwrap()
}

fn section_iv_pulses(params: &FrameParams) -> (Pulse, Pulse) {
    let g = orthogonalize_oqam(&gen_gaussian(params, 0.1).unwrap(), params).unwrap();
    let rc = orthogonalize_oqam(&gen_raised_cosine(params, 0.3).unwrap(), params).unwrap();
    (g, rc)
}

fn random_pulse(params: &FrameParams, rng: &mut ChaCha8Rng) -> Pulse {
    let taps = (0..params.n())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    normalize_energy(&Pulse::from_taps(taps).unwrap()).unwrap()
}

fn random_real_grid(params: &FrameParams, rng: &mut ChaCha8Rng) -> RealGrid {
    let values = (0..params.k() * 2 * params.m())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    RealGrid::from_vec(params.k(), 2 * params.m(), values).unwrap()
}

fn orthogonalization() -> Outcome {
    let params = lattice(128, 9);
    let (g, rc) = section_iv_pulses(&params);
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, p) in [("dzt-gaussian", &g), ("dzt-rc", &rc)] {
        let lin = check_oqam_ofdm(p, &params, 1e-10).unwrap().max_residual;
        let circ = check_wcp_coqam(p, &params, 1e-10).unwrap().max_residual;
        worst = worst.max(lin).max(circ);
        detail.push(format!("{name} oqam-ofdm {lin:.2e} wcp-coqam {circ:.2e}"));
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: detail.join(", "),
    }
}

fn equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for (k, m) in [(4, 2), (8, 4), (128, 9)] {
        let params = lattice(k, m);
        let pulses = [
            gen_gaussian(&params, 0.1).unwrap(),
            random_pulse(&params, &mut rng),
        ];
        for frame in 0..100 {
            let p = &pulses[frame % 2];
            let rg = random_real_grid(&params, &mut rng);
            let a = synth_wcp_phase(&rg, p, &params).unwrap();
            let b = synth_wcp_staggered(&rg, p, &params).unwrap();
            worst = worst.max(a.max_abs_diff(&b));
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max sample difference {worst:.2e}"),
    }
}

fn identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for (k, m) in [(4, 2), (8, 3)] {
        let params = lattice(k, m);
        for _ in 0..50 {
            let p = random_pulse(&params, &mut rng);
            worst = worst.max(verify_circular_linear_identity(&p, &params).unwrap());
        }
    }
    let params = lattice(128, 9);
    let (g, rc) = section_iv_pulses(&params);
    for p in [
        g,
        rc,
        gen_gaussian(&params, 0.1).unwrap(),
        gen_raised_cosine(&params, 0.3).unwrap(),
    ] {
        worst = worst.max(verify_circular_linear_identity(&p, &params).unwrap());
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("max identity residual {worst:.2e}"),
    }
}

fn gram_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for (k, m) in [(4, 2), (8, 4)] {
        let params = lattice(k, m);
        for _ in 0..20 {
            let p = random_pulse(&params, &mut rng);
            let report = check_wcp_coqam(&p, &params, 1e-10).unwrap();
            let g = gram_oracle(&p, &params).unwrap();
            for a in 0..g.nrows() {
                for b in 0..g.ncols() {
                    let (cond, shift, v) = gram_entry_condition(a, b, &params);
                    let target = if a == b { 1.0 } else { 0.0 };
                    let diff = ((g[(a, b)] - target).abs() - report.residual(cond, shift, v)).abs();
                    worst = worst.max(diff);
                }
            }
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max |gram - checker| {worst:.2e}"),
    }
}

fn sweep(
    params: &FrameParams,
    system: System,
    generator: Generator,
    param: f64,
    orthogonalize: bool,
) -> SweepResult {
    let pulse = PulseSpec::Generated {
        generator,
        param,
        orthogonalize,
    };
    let mut cfg = SimConfig::new(*params, system, pulse, snr_grid(0.0, 12.0, 2.0));
    cfg.seed = 2024;
    run_ser(&cfg).unwrap()
}

fn ser_curves() -> (Outcome, Vec<String>) {
    let params = FrameParams::new(128, 9, 32).unwrap();
    let ofdm = sweep(&params, System::Ofdm, Generator::Gaussian, 0.1, false);
    let dzt_g = sweep(&params, System::WcpCoqam, Generator::Gaussian, 0.1, true);
    let dzt_rc = sweep(
        &params,
        System::WcpCoqam,
        Generator::RaisedCosine,
        0.3,
        true,
    );
    let raw_rc = sweep(
        &params,
        System::WcpCoqam,
        Generator::RaisedCosine,
        0.3,
        false,
    );

    let mut lines = Vec::new();
    let mut theory_ok = true;
    let mut match_ok = true;
    for (i, o) in ofdm.records.iter().enumerate() {
        let p = theoretical_qpsk_ser(o.es_n0_db);
        let sigma = (p * (1.0 - p) / o.symbols as f64).sqrt();
        let z_theory = (o.ser - p) / sigma;
        theory_ok &= z_theory.abs() <= 3.0;
        let mut row = format!(
            "    {:>4} dB  theory {p:.3e}  ofdm {:.3e} (z {z_theory:+.2})",
            o.es_n0_db, o.ser
        );
        for (name, r) in [
            ("dzt-gaussian", &dzt_g.records[i]),
            ("dzt-rc", &dzt_rc.records[i]),
        ] {
            let pooled =
                (o.symbol_errors + r.symbol_errors) as f64 / (o.symbols + r.symbols) as f64;
            let sigma =
                (pooled * (1.0 - pooled) * (1.0 / o.symbols as f64 + 1.0 / r.symbols as f64))
                    .sqrt();
            let z = (r.ser - o.ser) / sigma;
            match_ok &= z.abs() <= 3.0;
            row.push_str(&format!("  {name} {:.3e} (z {z:+.2})", r.ser));
        }
        row.push_str(&format!("  raw-rc {:.3e}", raw_rc.records[i].ser));
        lines.push(row);
    }

    let n = raw_rc.records.len();
    let mut loss_ok = true;
    let mut ratios = Vec::new();
    for i in n - 2..n {
        let raw = raw_rc.records[i].ser;
        let (g, rc) = (&dzt_g.records[i], &dzt_rc.records[i]);
        let orth = (g.symbol_errors + rc.symbol_errors) as f64 / (g.symbols + rc.symbols) as f64;
        let ratio = raw / orth;
        loss_ok &= ratio >= 3.0;
        ratios.push(format!("{} dB {ratio:.2}x", raw_rc.records[i].es_n0_db));
    }
    let verdict = |ok: bool| if ok { "ok" } else { "FAIL" };
    lines.push(format!(
        "    (a) ofdm vs theory {}  (b) orthogonal chains vs ofdm {}  (c) raw rc loss {} [{}]",
        verdict(theory_ok),
        verdict(match_ok),
        verdict(loss_ok),
        ratios.join(", ")
    ));
    (
        Outcome {
            pass: theory_ok && match_ok && loss_ok,
            detail: format!(
                "(a) {} (b) {} (c) {}",
                verdict(theory_ok),
                verdict(match_ok),
                verdict(loss_ok)
            ),
        },
        lines,
    )
}

fn loopback() -> Outcome {
    let params = FrameParams::new(128, 9, 32).unwrap();
    let (g, rc) = section_iv_pulses(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for p in [&g, &rc] {
        for _ in 0..20 {
            let rg = stagger(&QamGrid::random_qpsk(&params, &mut rng), &params).unwrap();
            let w = add_cp(&synth_wcp_staggered(&rg, p, &params).unwrap(), &params).unwrap();
            let back = mf_receive_wcp(&remove_cp(&w, &params).unwrap(), p, &params).unwrap();
            worst = worst.max(back.max_abs_diff(&rg));
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("max |d_hat - d| {worst:.2e}"),
    }
}

fn integrity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lattices = [lattice(4, 2), lattice(8, 4), lattice(6, 3), lattice(128, 9)];
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let params = &lattices[i % lattices.len()];
        let x: Vec<Complex64> = (0..params.n())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let y = idzt(&dzt(&x, params).unwrap());
        let num = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }

    let params = FrameParams::new(16, 4, 4).unwrap();
    let pulse = PulseSpec::Generated {
        generator: Generator::RaisedCosine,
        param: 0.3,
        orthogonalize: true,
    };
    let mut cfg = SimConfig::new(params, System::WcpCoqam, pulse, vec![0.0, 4.0, 8.0]);
    cfg.seed = 77;
    let first = run_ser(&cfg).unwrap().to_csv();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let second = single.install(|| run_ser(&cfg)).unwrap().to_csv();
    let identical = first.as_bytes() == second.as_bytes();
    Outcome {
        pass: worst <= 1e-12 && identical,
        detail: format!("dzt round trip {worst:.2e} relative, reruns identical: {identical}"),
    }
}

fn report(id: &str, title: &str, budget: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = outcome.pass && in_time;
    println!(
        "criterion {id} {}: {title}: {} ({:.1} s{})",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        if in_time { "" } else { ", over budget" }
    );
    pass
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }

    let mut pass = true;
    pass &= report(
        "1",
        "orthogonalization at K=128 M=9",
        Duration::from_secs(30),
        orthogonalization,
    );
    pass &= report(
        "2",
        "phase/staggered synthesis equivalence",
        Duration::from_secs(10),
        equivalence,
    );
    pass &= report(
        "3",
        "circular/linear identity",
        Duration::from_secs(30),
        identity,
    );
    pass &= report(
        "4",
        "checker vs Gram oracle",
        Duration::from_secs(10),
        gram_agreement,
    );
    let mut curve_lines = Vec::new();
    pass &= report(
        "5",
        "SER curves K=128 M=9",
        Duration::from_secs(600),
        || {
            let (outcome, lines) = ser_curves();
            curve_lines = lines;
            outcome
        },
    );
    for line in &curve_lines {
        println!("{line}");
    }
    pass &= report("6", "noiseless loopback", Duration::from_secs(30), loopback);
    pass &= report(
        "7",
        "transform integrity and reproducibility",
        Duration::from_secs(30),
        integrity,
    );
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
