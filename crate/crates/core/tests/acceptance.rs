//! Acceptance checks, one line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use nbreak_core::channel::{
    apply_to_state, classify, is_nb, is_ppt, nb_min_eigenvalue_with_noise, nb_threshold, random_channel, ChannelKind,
    ClassifyOptions, GaussianChannel,
};
use nbreak_core::duality::filter_to_nb;
use nbreak_core::eb::{eb_check, validate_certificate, EbOptions, EbStatus};
use nbreak_core::matrix::{max_abs_diff, RMatrix};
use nbreak_core::oracle::{
    char_fn, quasiprob_grid, random_fock_state, witness_search, FockState, OracleInput, WitnessOptions,
};
use nbreak_core::state::{gaussian_char_fn, is_classical_gaussian, random_gaussian_state, GaussianState};
use nbreak_core::symplectic::{
    euler_decompose, is_symplectic, orthogonality_residual, random_symplectic, spd_condition, williamson,
    SymplecticForm,
};

struct Outcome {
    pass: bool,
    detail: String,
    limit: Option<Duration>,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail, limit: None }
}

fn modes_for(seed: u64) -> usize {
    1 + (seed % 3) as usize
}

fn single_mode_thresholds() -> Outcome {
    let opts = ClassifyOptions::default();
    let mut checked = 0;
    let mut bad = Vec::new();
    for kappa in [0.3, 0.7, 1.0, 1.5] {
        for conj in [false, true] {
            let x = if conj {
                RMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[kappa, -kappa]))
            } else {
                RMatrix::identity(2, 2) * kappa
            };
            let boundary = 1.0 + kappa * kappa;
            let mut first_nb = None;
            for k in 0..=500 {
                let y = k as f64 / 100.0;
                let ch = GaussianChannel::new_unchecked(x.clone(), RMatrix::identity(2, 2) * y).unwrap();
                let report = match classify(&ch, &opts) {
                    Ok(r) => r,
                    Err(nbreak_core::Error::NotCompletelyPositive { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                checked += 1;
                let expect = y >= boundary - 1e-9;
                let near = (y - boundary).abs() < 0.01 - 1e-12;
                if report.flags.nb != expect && !near {
                    bad.push(format!("κ={kappa} conj={conj} y={y}"));
                }
                if report.flags.nb && first_nb.is_none() {
                    first_nb = Some(y);
                }
            }
            match first_nb {
                Some(y) if (y - boundary).abs() <= 0.01 + 1e-12 => {}
                other => bad.push(format!("κ={kappa} conj={conj}: first NB at {other:?}, expected {boundary}")),
            }
        }
    }
    let detail = format!("{checked} CP channels classified, {} mismatches {:?}", bad.len(), bad.first());
    Outcome { pass: bad.is_empty(), detail, limit: Some(Duration::from_secs(1)) }
}

fn nb_implies_eb() -> Outcome {
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..500u64 {
        let ch = random_channel(ChannelKind::Nb, modes_for(seed), seed, 0.5).unwrap().channel;
        let r = eb_check(&ch, &EbOptions::default()).unwrap();
        if r.status != EbStatus::Feasible {
            continue;
        }
        let cert = validate_certificate(&ch, r.certificate.as_ref().unwrap(), 1e-6).unwrap();
        let residual = cert.residual_sum.max(-cert.residual_cov).max(-cert.residual_noise).max(0.0);
        worst = worst.max(residual);
        if residual <= 1e-6 {
            ok += 1;
        }
    }
    Outcome {
        pass: ok == 500,
        detail: format!("{ok}/500 feasible with residuals ≤ 1e-6 (worst {worst:.2e})"),
        limit: Some(Duration::from_secs(30)),
    }
}

fn nb_implies_ppt() -> Outcome {
    let kinds = [ChannelKind::Nb, ChannelKind::Eb, ChannelKind::Cp];
    let mut collected = 0;
    let mut worst = f64::INFINITY;
    let mut seed = 0u64;
    while collected < 1000 {
        let kind = kinds[(seed % 3) as usize];
        let ch = random_channel(kind, modes_for(seed / 3), seed, 1.0).unwrap().channel;
        seed += 1;
        if is_nb(&ch, 1e-9).unwrap().margin < 1e-6 {
            continue;
        }
        collected += 1;
        worst = worst.min(is_ppt(&ch, 1e-9).unwrap().margin);
    }
    outcome(worst >= -1e-9, format!("1000 NB channels ({seed} drawn), min PPT margin {worst:.3e}"))
}

fn filter_round_trip() -> Outcome {
    let mut pass = 0;
    let mut worst_margin = f64::INFINITY;
    let mut worst_euler: f64 = 0.0;
    for seed in 0..500u64 {
        let g = random_channel(ChannelKind::Eb, modes_for(seed), seed, 0.5).unwrap();
        let f = filter_to_nb(&g.channel, g.certificate.as_ref().unwrap(), 1e-9).unwrap();
        let margin = is_nb(&f.filtered, 1e-9).unwrap().margin;
        let euler = max_abs_diff(&f.euler.reconstruct(), &f.s_filter);
        worst_margin = worst_margin.min(margin);
        worst_euler = worst_euler.max(euler);
        if margin >= -1e-8 && euler <= 1e-8 {
            pass += 1;
        }
    }
    outcome(
        pass == 500,
        format!("{pass}/500 filtered channels NB (min margin {worst_margin:.2e}), max Euler residual {worst_euler:.2e}"),
    )
}

fn decomposition_accuracy() -> Outcome {
    let mut w_res: f64 = 0.0;
    let mut w_symp: f64 = 0.0;
    let mut max_cond: f64 = 0.0;
    for seed in 0..200u64 {
        let n = 1 + (seed % 5) as usize;
        let v = random_gaussian_state(n, 4.0, 3.0, seed).unwrap().cov().clone();
        max_cond = max_cond.max(spd_condition(&v));
        let w = williamson(&v).unwrap();
        let normal = w.s_matrix.transpose() * &v * &w.s_matrix;
        w_res = w_res.max(max_abs_diff(&normal, &w.normal_form()));
        w_symp = w_symp.max(is_symplectic(&w.s_matrix, 1e-10).unwrap().1);
    }
    let mut e_res: f64 = 0.0;
    let mut e_symp: f64 = 0.0;
    for seed in 0..200u64 {
        let n = 1 + (seed % 5) as usize;
        let s = random_symplectic(n, 3.0, 10_000 + seed).unwrap();
        let e = euler_decompose(&s).unwrap();
        e_res = e_res.max(max_abs_diff(&e.reconstruct(), &s));
        for r in [&e.r1, &e.r2] {
            e_symp = e_symp.max(is_symplectic(r, 1e-10).unwrap().1).max(orthogonality_residual(r));
        }
    }
    outcome(
        w_res <= 1e-9 && e_res <= 1e-8 && w_symp <= 1e-10 && e_symp <= 1e-10 && max_cond <= 1e4,
        format!(
            "Williamson {w_res:.2e} (symplectic {w_symp:.2e}, max cond {max_cond:.0}), Euler {e_res:.2e} (factors {e_symp:.2e})"
        ),
    )
}

fn threshold_vs_bisection() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let ch = random_channel(ChannelKind::Cp, modes_for(seed), seed, 0.5).unwrap().channel;
        let t = nb_threshold(&ch, 1e-9).unwrap();
        let (mut lo, mut hi) = (0.0, 1.0);
        if nb_min_eigenvalue_with_noise(&ch, 0.0).unwrap() >= 0.0 {
            hi = 0.0;
        } else {
            while nb_min_eigenvalue_with_noise(&ch, hi).unwrap() < 0.0 {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if nb_min_eigenvalue_with_noise(&ch, mid).unwrap() >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-12 {
                    break;
                }
            }
        }
        worst = worst.max((t - hi).abs());
    }
    outcome(worst <= 1e-7, format!("200 CP channels, max |closed form - bisection| {worst:.2e}"))
}

fn single_mode_ppt_eb() -> Outcome {
    let scales = [0.02, 0.2, 1.0, 3.0];
    let (mut agree, mut undecided, mut ppt_count) = (0, 0, 0);
    for seed in 0..500u64 {
        let ch = random_channel(ChannelKind::Cp, 1, seed, scales[(seed % 4) as usize]).unwrap().channel;
        let ppt = is_ppt(&ch, 1e-8).unwrap().is_psd;
        ppt_count += ppt as usize;
        match eb_check(&ch, &EbOptions::default()).unwrap().status {
            EbStatus::Undecided => undecided += 1,
            s => agree += ((s == EbStatus::Feasible) == ppt) as usize,
        }
    }
    let decided = 500 - undecided;
    outcome(
        agree == decided && undecided == 0,
        format!("{agree}/{decided} decided agree, {undecided} undecided, {ppt_count} PPT / {} not", 500 - ppt_count),
    )
}

fn fock_witness_transition() -> Outcome {
    let input = [OracleInput::Fock(FockState::number(1, 40).unwrap())];
    let opts = WitnessOptions { s_schedule: vec![0.99], extent: 6.0, points: 256, ..Default::default() };
    let fires = |y: f64| witness_search(&GaussianChannel::isotropic(1, 1.0, y), &input, &opts).unwrap().is_some();
    let mut bad = Vec::new();
    for y in [1.5, 1.7, 1.9] {
        if !fires(y) {
            bad.push(format!("no witness at y={y}"));
        }
    }
    for y in [2.1, 2.5] {
        if fires(y) {
            bad.push(format!("witness at y={y}"));
        }
    }
    // Least y from which no witness fires, on a 0.01 grid.
    let ys: Vec<f64> = (150..=250).map(|k| k as f64 / 100.0).collect();
    let fired: Vec<bool> = ys.iter().map(|&y| fires(y)).collect();
    let transition = (0..ys.len()).find(|&i| fired[i..].iter().all(|f| !f)).map(|i| ys[i]);
    let in_range = transition.is_some_and(|t| (1.99 - 1e-12..=2.01 + 1e-12).contains(&t));
    if !in_range {
        bad.push(format!("transition {transition:?}"));
    }
    let threshold = nb_threshold(&GaussianChannel::identity(1), 1e-9).unwrap();
    Outcome {
        pass: bad.is_empty(),
        detail: format!("transition at y = {transition:?} (threshold {threshold}); {}", if bad.is_empty() { "all family points as expected".to_string() } else { bad.join(", ") }),
        limit: Some(Duration::from_secs(60)),
    }
}

fn gaussian_blind_spot() -> Outcome {
    let ch = GaussianChannel::isotropic(1, 1.0, 1.9);
    let mut classical = 0;
    let mut inputs = Vec::new();
    for seed in 0..100u64 {
        let mut st = random_gaussian_state(1, 4.0, 2.0, seed).unwrap();
        if seed % 2 == 1 {
            st = GaussianState::new(nalgebra::DVector::from_row_slice(&[0.5, -0.3]), st.cov().clone()).unwrap();
        }
        let out = apply_to_state(&ch, &st).unwrap();
        if is_classical_gaussian(out.cov(), 1e-9).unwrap().is_classical {
            classical += 1;
        }
        inputs.push(OracleInput::Gaussian(st));
    }
    let opts = WitnessOptions { s_schedule: vec![0.99], ..Default::default() };
    let gaussian_witness = witness_search(&ch, &inputs[..10], &opts).unwrap();
    let fock = witness_search(&ch, &[OracleInput::Fock(FockState::number(1, 40).unwrap())], &opts).unwrap();
    outcome(
        classical == 100 && gaussian_witness.is_none() && fock.is_some(),
        format!(
            "{classical}/100 Gaussian outputs classical, Gaussian grid witness: {}, Fock witness value {:?}",
            gaussian_witness.is_some(),
            fock.map(|w| w.value)
        ),
    )
}

fn convention_lock() -> Outcome {
    let vac = FockState::number(0, 40).unwrap();
    let g = GaussianState::vacuum(1);
    let mut worst: f64 = 0.0;
    for i in 0..=30 {
        for j in 0..=30 {
            let xi = [-3.0 + 0.2 * i as f64, -3.0 + 0.2 * j as f64];
            if xi[0] * xi[0] + xi[1] * xi[1] > 9.0 {
                continue;
            }
            let a = char_fn(&vac, xi, 0.0).unwrap();
            let b = gaussian_char_fn(&g, &xi, 0.0).unwrap();
            worst = worst.max((a - b).norm());
        }
    }
    let omega_ok = {
        let f = SymplecticForm::new(1).unwrap();
        let sq = f.matrix() * f.matrix();
        max_abs_diff(&sq, &(-DMatrix::identity(2, 2))) == 0.0
    };
    let mut q_min = f64::INFINITY;
    let mut grids = 1;
    let vac_grid = quasiprob_grid(&GaussianChannel::identity(1), &OracleInput::Fock(vac), -1.0, 6.0, 256).unwrap();
    q_min = q_min.min(vac_grid.min().0);
    for seed in 0..50u64 {
        let ch = random_channel(ChannelKind::Cp, 1, seed, 0.5).unwrap().channel;
        let input = OracleInput::Fock(random_fock_state(4, 40, seed).unwrap());
        match quasiprob_grid(&ch, &input, -1.0, 6.0, 256) {
            Ok(grid) => {
                grids += 1;
                q_min = q_min.min(grid.min().0);
            }
            Err(nbreak_core::Error::Range(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    let peak_ok = (vac_grid.max() - 1.0 / std::f64::consts::PI).abs() < 1e-6;
    outcome(
        worst <= 1e-10 && q_min >= -1e-9 && omega_ok && peak_ok && grids > 40,
        format!("max |χ_oracle - χ_gauss| {worst:.2e}, min Q over {grids} grids {q_min:.2e}, vacuum Q peak {:.6}", vac_grid.max()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("single-mode NB thresholds", single_mode_thresholds),
        ("NB implies EB", nb_implies_eb),
        ("NB implies PPT", nb_implies_ppt),
        ("EB to NB filter round trip", filter_round_trip),
        ("decomposition accuracy", decomposition_accuracy),
        ("threshold vs bisection", threshold_vs_bisection),
        ("single-mode PPT iff EB", single_mode_ppt_eb),
        ("Fock witness transition", fock_witness_transition),
        ("Gaussian-input blind spot", gaussian_blind_spot),
        ("convention lock", convention_lock),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = check();
        let elapsed = start.elapsed();
        if let Some(limit) = o.limit {
            if elapsed > limit {
                o.pass = false;
                o.detail.push_str(&format!("; over time limit {limit:?}"));
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}; {:.2?})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            elapsed
        );
    }
    println!("acceptance: {}/10 passed", 10 - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
