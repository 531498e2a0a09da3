//! Acceptance suite: one test per acceptance criterion, each printing a
//! single PASS/FAIL line (run with `-- --nocapture` to see them live).
//!
//! Run with the optimized test profile (the workspace default) or
//! `--release`; the stated runtime budgets assume an optimized build.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mixbank::frontend::{generate_signs, simulate, FrontEndParams, SignMatrix};
use mixbank::harness::{
    run_experiment, run_experiment_to_dir, trial_seed, ExperimentConfig, ExperimentResult,
};
use mixbank::model::{
    reference_grid, reference_model, synthesize, true_support, DenseGrid, MultibandSignal, Snr,
};
use mixbank::numerics::{dft, hermitian_eig, lstsq_apply, CMatrix, RMatrix};
use mixbank::recovery::{reconstruct, recover_support, somp, MmvProblem, RecoveryOptions};
use mixbank::spectral::{build_measurement_matrix, fourier_coeff, predict_stream_samples};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn verdict(criterion: u32, name: &str, pass: bool, detail: &str, elapsed_s: f64, budget_s: f64) {
    let within = elapsed_s < budget_s;
    println!(
        "criterion {criterion} ({name}): {} — {detail} [{elapsed_s:.1} s, budget {budget_s:.0} s]",
        if pass && within { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
    assert!(
        within,
        "criterion {criterion} exceeded its runtime budget: {elapsed_s:.1} s >= {budget_s:.0} s"
    );
}

/// Quadrature oracle for the waveform Fourier coefficients: the defining
/// integral `(1/T) \int_0^T p(t) e^{-j 2 pi n t / T} dt`, integrated chip by
/// chip with the waveform sampled mid-chip and composite Simpson (256
/// subintervals) on the exponential.
fn coeff_by_quadrature(signs: &SignMatrix, channel: usize, n: i64, t_period: f64) -> Complex64 {
    let m = signs.alternations();
    let chip = t_period / m as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let a = k as f64 * chip;
        let p = signs.waveform(channel, a + chip / 2.0, t_period);
        let subs = 256usize;
        let h = chip / subs as f64;
        let f = |t: f64| Complex64::from_polar(1.0, -TWO_PI * n as f64 * t / t_period);
        let mut s = f(a) + f(a + chip);
        for u in 1..subs {
            let w = if u % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + u as f64 * h);
        }
        total += p * s * (h / 3.0);
    }
    total / t_period
}

#[test]
fn criterion_1_fourier_coefficient_oracle() {
    let start = Instant::now();
    let signs = generate_signs(20, 51, 0xC1).unwrap();
    let t_period = 51.0 / 10e9;
    let mut worst = 0.0f64;
    for ch in 0..20 {
        for n in -25..=25i64 {
            let closed = fourier_coeff(&signs, ch, n);
            let quad = coeff_by_quadrature(&signs, ch, n, t_period);
            worst = worst.max((closed - quad).norm());
        }
    }
    verdict(
        1,
        "Fourier-coefficient oracle",
        worst < 1e-9,
        &format!("max |closed form - quadrature| = {worst:.3e} over 20 rows, |n| <= 25"),
        start.elapsed().as_secs_f64(),
        10.0,
    );
}

#[test]
fn criterion_2_matrix_identity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (mi, m_slices) in [5usize, 17, 51].into_iter().enumerate() {
        let signs = generate_signs(7, m_slices, 0xC2 + mi as u64).unwrap();
        let meas = build_measurement_matrix(&signs, 10e9).unwrap();
        for i in 0..7 {
            for col in 0..m_slices {
                let n = meas.harmonic(col);
                let lhs = meas.matrix[(i, col)] * meas.scalings[col];
                let rhs = fourier_coeff(&signs, i, n);
                worst = worst.max((lhs - rhs).norm());
            }
        }
    }
    verdict(
        2,
        "matrix identity pins the column shift",
        worst < 1e-12,
        &format!("max |(S F)_col d_n - c_n| = {worst:.3e} over M in {{5, 17, 51}}"),
        start.elapsed().as_secs_f64(),
        5.0,
    );
}

#[test]
fn criterion_3_front_end_matches_analysis() {
    let start = Instant::now();
    let fe = FrontEndParams::reference();
    let p = reference_model();
    let grid = reference_grid(&p);
    let signs = generate_signs(fe.channels, fe.alternations, 0xC3).unwrap();
    let t_period = fe.period();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3C3);

    let mut worst_tone = 0.0f64;
    let mut per_channel: Vec<f64> = Vec::new();
    for _ in 0..10 {
        let n_star = rng.gen_range(1..=25i64) * if rng.gen::<bool>() { 1 } else { -1 };
        let f0 = n_star as f64 / t_period;
        let dt = (grid.t_end - grid.t_start) / grid.n_points as f64;
        let x = DenseGrid {
            t_start: grid.t_start,
            t_end: grid.t_end,
            values: (0..grid.n_points)
                .map(|j| {
                    let t = grid.t_start + (j as f64 + 0.5) * dt;
                    (TWO_PI * f0 * t).cos()
                })
                .collect(),
        };
        let streams = simulate(&x, &signs, &fe).unwrap();
        let pred = predict_stream_samples(&x, &signs, &fe).unwrap();
        // with the ideal anti-alias filter the whole stream band is usable:
        // no transition-band bins to exclude
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..fe.channels {
            let sim_bins = dft(
                &(0..streams.len())
                    .map(|k| Complex64::new(streams.streams[i][k], 0.0))
                    .collect::<Vec<_>>(),
            );
            let pred_bins = dft(
                &(0..streams.len())
                    .map(|k| pred[(i, k)])
                    .collect::<Vec<_>>(),
            );
            let (mut ni, mut di) = (0.0, 0.0);
            for (a, b) in sim_bins.iter().zip(pred_bins.iter()) {
                ni += (a - b).norm_sqr();
                di += b.norm_sqr();
            }
            num += ni;
            den += di;
            per_channel.push((ni / di.max(f64::MIN_POSITIVE)).sqrt());
        }
        worst_tone = worst_tone.max((num / den).sqrt());
    }
    per_channel.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = per_channel[per_channel.len() / 2];
    verdict(
        3,
        "front-end matches the spectral prediction",
        worst_tone < 0.05,
        &format!(
            "worst per-tone relative l2 error {worst_tone:.4} over all 51 streams and 7 bins \
             (per-channel median {med:.4})"
        ),
        start.elapsed().as_secs_f64(),
        30.0,
    );
}

/// Residual of projecting `v` onto the span of the given columns, computed
/// from the normal equations with an explicit 1x1 or 2x2 Gram inverse, fully
/// independent of the library's least-squares path.
fn brute_projection_residual(a: &CMatrix, cols: &[usize], v: &CMatrix) -> f64 {
    let m = a.rows();
    let dot = |c1: usize, c2: usize| -> Complex64 {
        (0..m).map(|i| a[(i, c1)].conj() * a[(i, c2)]).sum()
    };
    let rhs =
        |c: usize, r: usize| -> Complex64 { (0..m).map(|i| a[(i, c)].conj() * v[(i, r)]).sum() };
    let mut resid = 0.0;
    for r in 0..v.cols() {
        let coef: Vec<Complex64> = match cols {
            [c] => vec![rhs(*c, r) / dot(*c, *c)],
            [c1, c2] => {
                let (g11, g12, g22) = (dot(*c1, *c1), dot(*c1, *c2), dot(*c2, *c2));
                let det = g11 * g22 - g12 * g12.conj();
                let (b1, b2) = (rhs(*c1, r), rhs(*c2, r));
                vec![(g22 * b1 - g12 * b2) / det, (g11 * b2 - g12.conj() * b1) / det]
            }
            _ => unreachable!("brute force handles supports of size 1 or 2"),
        };
        for i in 0..m {
            let fit: Complex64 = cols
                .iter()
                .zip(coef.iter())
                .map(|(&c, &z)| a[(i, c)] * z)
                .sum();
            resid += (v[(i, r)] - fit).norm_sqr();
        }
    }
    resid.sqrt()
}

#[test]
fn criterion_4_somp_against_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let gauss = |rng: &mut ChaCha8Rng| {
        let u: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
        let v: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
        Complex64::new(u, v) / 2f64.sqrt()
    };
    let mut hits = 0usize;
    let mut unique = 0usize;
    for _ in 0..100 {
        let a = CMatrix::from_fn(8, 16, |_, _| gauss(&mut rng));
        let mut planted = [rng.gen_range(0..16usize), rng.gen_range(0..16usize)];
        while planted[1] == planted[0] {
            planted[1] = rng.gen_range(0..16);
        }
        planted.sort_unstable();
        let u = CMatrix::from_fn(2, 3, |_, _| gauss(&mut rng));
        let v = a.select_columns(&planted).matmul(&u);
        let norm_v = v.frobenius_norm();

        let out = somp(&MmvProblem::new(a.clone(), v.clone(), 2));
        let mut sel = out.selection.clone();
        sel.sort_unstable();
        if sel == planted {
            hits += 1;
        }

        // exhaustive search over all 2-subsets plus all singletons
        let mut zero_residual: Vec<[usize; 2]> = Vec::new();
        for i in 0..16 {
            for j in (i + 1)..16 {
                if brute_projection_residual(&a, &[i, j], &v) < 1e-8 * norm_v {
                    zero_residual.push([i, j]);
                }
            }
        }
        let any_one_sparse =
            (0..16).any(|i| brute_projection_residual(&a, &[i], &v) < 1e-8 * norm_v);
        if zero_residual == vec![planted] && !any_one_sparse {
            unique += 1;
        }
    }
    verdict(
        4,
        "SOMP vs exhaustive search",
        hits >= 95 && unique == 100,
        &format!("SOMP recovered {hits}/100 planted supports; {unique}/100 confirmed unique-sparsest"),
        start.elapsed().as_secs_f64(),
        30.0,
    );
}

#[test]
fn criterion_5_noiseless_end_to_end() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let signs = generate_signs(
        cfg.channels,
        cfg.alternations,
        mixbank::harness::signs_seed(cfg.master_seed),
    )
    .unwrap();
    let meas = build_measurement_matrix(&signs, cfg.model.nyquist_rate).unwrap();
    let grid = cfg.grid();
    let fe = cfg.front_end(cfg.channels);
    let opts = RecoveryOptions {
        sparsity_budget: cfg.budget(),
        threshold: cfg.threshold,
    };

    let mut exact = 0usize;
    let mut worst_recon = 0.0f64;
    for trial in 0..100 {
        let ts = trial_seed(cfg.master_seed, cfg.channels, Snr::Noiseless, trial);
        let sig = MultibandSignal::draw(cfg.model.clone(), ts).unwrap();
        let x = synthesize(&sig, &grid).unwrap();
        let streams = simulate(&x, &signs, &fe).unwrap();
        let est = recover_support(&streams, &meas, &opts).unwrap();
        let truth = true_support(&sig, cfg.alternations).unwrap();
        if est.support == truth {
            exact += 1;
            let rec = reconstruct(&streams, &meas, &est.support, &grid).unwrap();
            let n = x.len();
            let (mut num, mut den) = (0.0, 0.0);
            for j in n / 4..3 * n / 4 {
                num += (rec.grid.values[j] - x.values[j]).powi(2);
                den += x.values[j].powi(2);
            }
            worst_recon = worst_recon.max((num / den).sqrt());
        }
    }

    // threshold sensitivity report (20 trials per setting, support rate only)
    for tau in [1e-1, 1e-2, 1e-3] {
        let mut ok = 0;
        for trial in 0..20 {
            let ts = trial_seed(cfg.master_seed, cfg.channels, Snr::Noiseless, trial);
            let sig = MultibandSignal::draw(cfg.model.clone(), ts).unwrap();
            let x = synthesize(&sig, &grid).unwrap();
            let streams = simulate(&x, &signs, &fe).unwrap();
            let est = recover_support(
                &streams,
                &meas,
                &RecoveryOptions {
                    sparsity_budget: cfg.budget(),
                    threshold: tau,
                },
            )
            .unwrap();
            if est.support == true_support(&sig, cfg.alternations).unwrap() {
                ok += 1;
            }
        }
        println!("criterion 5 note: threshold {tau:e} -> exact support {ok}/20");
    }

    verdict(
        5,
        "noiseless end-to-end recovery",
        exact >= 95 && worst_recon < 0.05,
        &format!(
            "exact support {exact}/100; worst central-half reconstruction error on successes \
             {worst_recon:.4}"
        ),
        start.elapsed().as_secs_f64(),
        300.0,
    );
}

fn grid_pct(result: &ExperimentResult, mbar: usize, snr: Snr) -> f64 {
    result.cell(mbar, snr).expect("cell present").exact_pct()
}

#[test]
fn criterion_6_recovery_trend() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let result = run_experiment(&cfg).unwrap();

    // print the whole grid for the record
    println!("criterion 6 grid (rows m-bar, cols SNR dB, exact %):");
    for &mbar in &cfg.channel_subsets {
        let row: Vec<String> = cfg
            .snr_list
            .iter()
            .map(|&snr| format!("{:5.1}", grid_pct(&result, mbar, snr)))
            .collect();
        println!("  m={mbar:2}: {}", row.join(" "));
    }

    let tol = 5.0 + 1e-9;
    let mut monotone = true;
    let mut worst_drop = 0.0f64;
    for &mbar in &cfg.channel_subsets {
        for w in cfg.snr_list.windows(2) {
            let drop = grid_pct(&result, mbar, w[0]) - grid_pct(&result, mbar, w[1]);
            worst_drop = worst_drop.max(drop);
            monotone &= drop <= tol;
        }
    }
    for &snr in &cfg.snr_list {
        for w in cfg.channel_subsets.windows(2) {
            let drop = grid_pct(&result, w[0], snr) - grid_pct(&result, w[1], snr);
            worst_drop = worst_drop.max(drop);
            monotone &= drop <= tol;
        }
    }
    let top = grid_pct(&result, 51, Snr::Db(25.0));
    let bottom = grid_pct(&result, 10, Snr::Db(5.0));
    verdict(
        6,
        "recovery-rate trend over the (channels, SNR) sweep",
        monotone && top >= 90.0 && bottom <= 20.0,
        &format!(
            "worst axis drop {worst_drop:.1} pp (tolerance 5); (m=51, 25 dB) = {top:.0}%; \
             (m=10, 5 dB) = {bottom:.0}%"
        ),
        start.elapsed().as_secs_f64(),
        1800.0,
    );
}

#[test]
fn criterion_7_numerics_kernels() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let mut worst_eig = 0.0f64;
    let mut worst_lstsq = 0.0f64;
    for trial in 0..200 {
        let n = 2 + trial % 50; // up to 51
        // symmetric PSD from outer products
        let mut q = RMatrix::zeros(n, n);
        for _ in 0..n + 2 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for i in 0..n {
                for j in 0..n {
                    q[(i, j)] += v[i] * v[j];
                }
            }
        }
        let eig = hermitian_eig(&q).unwrap();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut recon = 0.0;
                for k in 0..n {
                    recon += eig.values[k] * eig.vectors[(i, k)] * eig.vectors[(j, k)];
                }
                err += (recon - q[(i, j)]).powi(2);
            }
        }
        worst_eig = worst_eig.max(err.sqrt() / q.frobenius_norm());

        let rows = 2 + trial % 50;
        let cols = 1 + trial % rows.min(12);
        let a = CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let z = CMatrix::from_fn(cols, 2, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let y = a.matmul(&z);
        let x = lstsq_apply(&a, &y).unwrap();
        worst_lstsq = worst_lstsq.max(x.sub(&z).frobenius_norm() / z.frobenius_norm());
    }
    verdict(
        7,
        "numerics kernels",
        worst_eig < 1e-8 && worst_lstsq < 1e-9,
        &format!(
            "worst eig reconstruction residual {worst_eig:.3e}; worst planted least-squares \
             error {worst_lstsq:.3e} over 200 instances"
        ),
        start.elapsed().as_secs_f64(),
        30.0,
    );
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    // the smallest cell of the trend sweep, run twice with the same seed
    let cfg = ExperimentConfig {
        channel_subsets: vec![10],
        snr_list: vec![Snr::Db(5.0)],
        ..ExperimentConfig::default()
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_experiment_to_dir(&cfg, dir_a.path()).unwrap();
    run_experiment_to_dir(&cfg, dir_b.path()).unwrap();
    let mut identical = true;
    for file in ["trials.csv", "summary.csv", "manifest.txt"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        identical &= a == b;
    }
    verdict(
        8,
        "byte-identical reruns",
        identical,
        "trials.csv, summary.csv, manifest.txt identical across two runs",
        start.elapsed().as_secs_f64(),
        600.0,
    );
}
