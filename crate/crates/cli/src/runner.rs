//! Subcommand execution: maps each experiment onto its library operation,
//! collects CSV rows in deterministic grid order, and folds invariant
//! breaches and per-point module errors into the violations list.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use qplab_core::cartan::{sample_trial, verify_cartan, TrialConfig};
use qplab_core::localization::{
    bad_set, bad_set_sigma_fit, calibrate_patch, eigen_decay, orbit_count, patch_check, pave,
    BadSet, LocalizationError,
};
use qplab_core::spectral::{
    avg_logdet_check, good_shift, green, ldt_scan, GreenResult, IndexWindow, SpectralError,
};
use qplab_core::sublevel::{
    linear_exponent_fit, lojasiewicz_fit, normalized_linear_measure, potential_deviation_measure,
};
use qplab_core::torus::{diophantine_check, orbit_point, TorusPoint};

use crate::config::RunConfig;
use crate::output::{fmt_f64, fmt_opt, RunOutcome};

pub fn run(config: &RunConfig) -> Result<RunOutcome, String> {
    match config.subcommand.as_str() {
        "dioph" => run_dioph(config),
        "green" => run_green(config),
        "shiftscan" => run_shiftscan(config),
        "ldt" => run_ldt(config),
        "avgdet" => run_avgdet(config),
        "cartan" => run_cartan(config),
        "sublevel" => run_sublevel(config),
        "pave" => run_pave(config),
        "patch" => run_patch(config),
        "badset" => run_badset(config),
        "orbit" => run_orbit(config),
        "localize" => run_localize(config),
        other => Err(format!("unknown subcommand `{other}`")),
    }
}

fn run_dioph(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let k_max = p.req_u64("k_max").map_err(|e| e.to_string())?;
    let report = diophantine_check(config.spec.freq(), k_max);
    let rows = vec![vec![
        k_max.to_string(),
        report.pass.to_string(),
        report
            .first_violation
            .map(|w| w.k.to_string())
            .unwrap_or_default(),
        report.worst.k.to_string(),
        fmt_f64(report.worst.ratio),
    ]];
    Ok(RunOutcome {
        header: vec!["k_max", "pass", "first_violation_k", "worst_k", "worst_ratio"],
        rows,
        scalars: json!({
            "pass": report.pass,
            "worst_k": report.worst.k,
            "worst_ratio": report.worst.ratio,
        }),
        violations: Vec::new(),
    })
}

fn green_row(x: f64, result: &GreenResult) -> Vec<String> {
    vec![
        fmt_f64(x),
        fmt_f64(result.logdet_bounded),
        result.det_sign.to_string(),
        fmt_f64(result.max_entry),
        fmt_opt(result.decay.map(|d| d.rate)),
        fmt_opt(result.decay.map(|d| d.offset)),
        fmt_opt(result.decay.map(|d| d.r2)),
    ]
}

const GREEN_HEADER: [&str; 7] = ["x", "logdet_b", "sign", "max_entry", "c_eff", "offset", "r2"];

fn run_green(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n = p.req_usize("n").map_err(|e| e.to_string())?;
    let energy = p.req_f64("e").map_err(|e| e.to_string())?;
    let x0 = p.opt_f64("x0").map_err(|e| e.to_string())?;
    let x_grid = p.opt_usize("x_grid").map_err(|e| e.to_string())?;
    let window = IndexWindow::from_size(0, n);
    let phases: Vec<f64> = match x_grid {
        Some(grid) => (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect(),
        None => vec![x0.unwrap_or(0.0)],
    };
    let results: Vec<(f64, Result<GreenResult, SpectralError>)> = phases
        .par_iter()
        .map(|&x| (x, green(&config.spec, TorusPoint::new(x), window, energy)))
        .collect();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (x, result) in &results {
        match result {
            Ok(g) => rows.push(green_row(*x, g)),
            Err(e) => violations.push(format!("green: x={}: {e}", fmt_f64(*x))),
        }
    }
    Ok(RunOutcome {
        header: GREEN_HEADER.to_vec(),
        rows,
        scalars: json!({ "n": n, "e": energy, "points": results.len() }),
        violations,
    })
}

fn run_shiftscan(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n = p.req_usize("n").map_err(|e| e.to_string())?;
    let energy = p.req_f64("e").map_err(|e| e.to_string())?;
    let grid = p.req_usize("x_grid").map_err(|e| e.to_string())?;
    let results: Vec<(f64, Result<(i64, GreenResult), SpectralError>)> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + 0.5) / grid as f64;
            (x, good_shift(&config.spec, TorusPoint::new(x), energy, n))
        })
        .collect();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (x, result) in &results {
        match result {
            Ok((m, g)) => {
                let mut row = green_row(*x, g);
                row.insert(1, m.to_string());
                rows.push(row);
            }
            Err(e) => violations.push(format!("shiftscan: x={}: {e}", fmt_f64(*x))),
        }
    }
    Ok(RunOutcome {
        header: vec!["x", "m", "logdet_b", "sign", "max_entry", "c_eff", "offset", "r2"],
        rows,
        scalars: json!({ "n": n, "e": energy, "points": grid }),
        violations,
    })
}

fn run_ldt(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n = p.req_usize("n").map_err(|e| e.to_string())?;
    let energy = p.req_f64("e").map_err(|e| e.to_string())?;
    let m_list = p.req_usize_list("m_list").map_err(|e| e.to_string())?;
    let grid = p.req_usize("x_grid").map_err(|e| e.to_string())?;
    let threshold = p.req_f64("threshold").map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut fractions = Vec::new();
    for &m in &m_list {
        let report = ldt_scan(&config.spec, energy, n, m, grid, threshold)
            .map_err(|e| format!("ldt: M={m}: {e}"))?;
        fractions.push(report.bad_fraction);
        rows.push(vec![
            m.to_string(),
            fmt_f64(threshold),
            fmt_f64(report.mean),
            fmt_f64(report.bad_fraction),
        ]);
    }
    Ok(RunOutcome {
        header: vec!["m", "threshold", "mean_u", "bad_fraction"],
        rows,
        scalars: json!({ "n": n, "e": energy, "x_grid": grid, "bad_fractions": fractions }),
        violations: Vec::new(),
    })
}

fn run_avgdet(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n = p.req_usize("n").map_err(|e| e.to_string())?;
    let grid = p.req_usize("x_grid").map_err(|e| e.to_string())?;
    let e_list = p.req_f64_list("e_list").map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for &energy in &e_list {
        let report = avg_logdet_check(&config.spec, energy, n, grid)
            .map_err(|e| format!("avgdet: E={energy}: {e}"))?;
        rows.push(vec![
            fmt_f64(energy),
            fmt_f64(report.lhs),
            fmt_f64(report.rhs),
            fmt_f64(report.margin),
            report.skipped.to_string(),
        ]);
    }
    Ok(RunOutcome {
        header: vec!["e", "lhs", "rhs", "margin", "skipped"],
        rows,
        scalars: json!({ "n": n, "x_grid": grid }),
        violations: Vec::new(),
    })
}

fn run_cartan(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let trials = p.req_usize("trials").map_err(|e| e.to_string())?;
    let grid = p.req_usize("grid").map_err(|e| e.to_string())?;
    let seed = p.req_u64("seed").map_err(|e| e.to_string())?;
    let mut trial_config = TrialConfig::default();
    if let Some(v) = p.opt_f64("r").map_err(|e| e.to_string())? {
        trial_config.outer_radius = v;
    }
    if let Some(v) = p.opt_f64("r2").map_err(|e| e.to_string())? {
        trial_config.inner_radius = v;
    }
    if let Some(v) = p.opt_f64("h").map_err(|e| e.to_string())? {
        trial_config.zero_disk_radius = v;
    }
    if let Some(v) = p.opt_f64("hp").map_err(|e| e.to_string())? {
        trial_config.pole_disk_radius = v;
    }
    if let Some(v) = p.opt_f64("delta").map_err(|e| e.to_string())? {
        trial_config.pole_floor = v;
    }
    if let Some(v) = p.opt_usize("max_zeros").map_err(|e| e.to_string())? {
        trial_config.max_zeros = v;
    }
    if let Some(v) = p.opt_usize("max_poles").map_err(|e| e.to_string())? {
        trial_config.max_poles = v;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut total_violations = 0usize;
    for trial in 0..trials {
        let (func, input) = sample_trial(&mut rng, &trial_config);
        let report = verify_cartan(|z| func.eval(z), &input, grid)
            .map_err(|e| format!("cartan: trial {trial}: {e}"))?;
        total_violations += report.violations;
        if report.violations > 0 {
            violations.push(format!(
                "cartan: trial {trial}: {} bound violations (worst margin {})",
                report.violations,
                fmt_f64(report.worst_margin)
            ));
        }
        rows.push(vec![
            trial.to_string(),
            input.zeros.len().to_string(),
            input.poles.len().to_string(),
            fmt_f64(input.log_max),
            fmt_f64(report.bound),
            report.checked.to_string(),
            report.skipped.to_string(),
            report.violations.to_string(),
            fmt_f64(report.worst_margin),
        ]);
    }
    Ok(RunOutcome {
        header: vec![
            "trial", "n_zeros", "n_poles", "log_max", "bound", "checked", "skipped",
            "violations", "worst_margin",
        ],
        rows,
        scalars: json!({ "trials": trials, "grid": grid, "seed": seed, "total_violations": total_violations }),
        violations,
    })
}

fn run_sublevel(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let level = p.req_f64("e").map_err(|e| e.to_string())?;
    let eps_list = p.req_f64_list("eps_list").map_err(|e| e.to_string())?;
    let depth = p.req_usize("depth").map_err(|e| e.to_string())? as u32;
    let normalized = p.opt_bool("normalized", false).map_err(|e| e.to_string())?;
    let potential = config.spec.potential();
    let mut rows = Vec::new();
    for &eps in &eps_list {
        let bracket = if normalized {
            normalized_linear_measure(potential, level, eps, depth)
        } else {
            potential_deviation_measure(potential, level, eps, depth)
        }
        .map_err(|e| format!("sublevel: eps={eps}: {e}"))?;
        rows.push(vec![
            fmt_f64(eps),
            fmt_f64(bracket.lower),
            fmt_f64(bracket.upper),
            depth.to_string(),
        ]);
    }
    let fit = if normalized {
        linear_exponent_fit(potential, level, &eps_list, depth)
    } else {
        lojasiewicz_fit(potential, level, &eps_list, depth)
    };
    let scalars = match fit {
        Ok(fit) => json!({
            "e": level,
            "normalized": normalized,
            "exponent": fit.exponent,
            "r2": fit.r2,
        }),
        Err(e) => json!({
            "e": level,
            "normalized": normalized,
            "fit_error": e.to_string(),
        }),
    };
    Ok(RunOutcome {
        header: vec!["eps", "lower", "upper", "depth"],
        rows,
        scalars,
        violations: Vec::new(),
    })
}

fn run_pave(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n = p.req_usize("n").map_err(|e| e.to_string())?;
    let m = p.req_usize("m").map_err(|e| e.to_string())?;
    match pave(IndexWindow::from_size(0, n), m) {
        Ok(paving) => {
            let rows = paving
                .children
                .iter()
                .enumerate()
                .map(|(i, c)| vec![i.to_string(), c.lo().to_string(), c.hi().to_string()])
                .collect();
            Ok(RunOutcome {
                header: vec!["child", "lo", "hi"],
                rows,
                scalars: json!({ "n": n, "m": m, "children": paving.children.len(), "covering_ok": true }),
                violations: Vec::new(),
            })
        }
        Err(e) => Ok(RunOutcome {
            header: vec!["child", "lo", "hi"],
            rows: Vec::new(),
            scalars: json!({ "n": n, "m": m, "covering_ok": false }),
            violations: vec![format!("pave: {e}")],
        }),
    }
}

fn run_patch(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n = p.req_usize("n").map_err(|e| e.to_string())?;
    let m = p.req_usize("m").map_err(|e| e.to_string())?;
    let energy = p.req_f64("e").map_err(|e| e.to_string())?;
    let x0 = p.req_f64("x0").map_err(|e| e.to_string())?;
    let use_good_shift = p.opt_bool("use_good_shift", true).map_err(|e| e.to_string())?;
    let c0_cfg = p.opt_f64("c0").map_err(|e| e.to_string())?;
    let slack_cfg = p.opt_f64("slack").map_err(|e| e.to_string())?;

    let spec = &config.spec;
    let base = TorusPoint::new(x0);
    let (shift, phase) = if use_good_shift {
        let (m_shift, _) = good_shift(spec, base, energy, n).map_err(|e| format!("patch: {e}"))?;
        (m_shift, orbit_point(base, spec.freq().omega(), m_shift))
    } else {
        (0, base)
    };
    let paving = pave(IndexWindow::from_size(0, n), m).map_err(|e| format!("patch: {e}"))?;
    let (c0, slack) = match (c0_cfg, slack_cfg) {
        (Some(c0), Some(slack)) => (c0, slack),
        _ => {
            let (auto_c0, auto_slack) =
                calibrate_patch(spec, phase, energy, &paving).map_err(|e| format!("patch: {e}"))?;
            (c0_cfg.unwrap_or(auto_c0), slack_cfg.unwrap_or(auto_slack))
        }
    };

    let mut violations = Vec::new();
    match patch_check(spec, phase, energy, &paving, c0, slack) {
        Ok(report) => {
            if !report.ceiling_ok {
                violations.push(format!(
                    "patch: parent max {} breaches the ceiling {}",
                    fmt_f64(report.parent_max),
                    fmt_f64(report.ceiling)
                ));
            }
            if !report.half_rate_ok {
                violations.push(format!(
                    "patch: half-rate conclusion fails with margin {}",
                    fmt_f64(report.half_rate_margin)
                ));
            }
            if report.resolvent_residual > 1e-8 {
                violations.push(format!(
                    "patch: resolvent identity residual {}",
                    fmt_f64(report.resolvent_residual)
                ));
            }
            let rows = report
                .children
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    vec![
                        i.to_string(),
                        c.window.lo().to_string(),
                        c.window.hi().to_string(),
                        fmt_f64(c.max_entry),
                        fmt_f64(c.hypothesis_margin),
                        fmt_opt(c.decay_rate),
                    ]
                })
                .collect();
            Ok(RunOutcome {
                header: vec!["child", "lo", "hi", "max_entry", "hypothesis_margin", "c_eff"],
                rows,
                scalars: json!({
                    "n": n, "m": m, "e": energy, "shift": shift,
                    "c0": c0, "slack": slack,
                    "parent_max": report.parent_max,
                    "ceiling": report.ceiling,
                    "ceiling_ok": report.ceiling_ok,
                    "half_rate_ok": report.half_rate_ok,
                    "half_rate_margin": report.half_rate_margin,
                    "resolvent_residual": report.resolvent_residual,
                }),
                violations,
            })
        }
        Err(LocalizationError::HypothesisFailed { child, row, col, margin }) => Ok(RunOutcome {
            header: vec!["child", "lo", "hi", "max_entry", "hypothesis_margin", "c_eff"],
            rows: Vec::new(),
            scalars: json!({ "n": n, "m": m, "e": energy, "c0": c0, "slack": slack, "hypothesis_ok": false }),
            violations: vec![format!(
                "patch: hypothesis fails on child {child} at ({row}, {col}) with margin {}",
                fmt_f64(margin)
            )],
        }),
        Err(e) => Err(format!("patch: {e}")),
    }
}

fn run_badset(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n_list = p.req_usize_list("n_list").map_err(|e| e.to_string())?;
    let grid = p.req_usize("grid").map_err(|e| e.to_string())?;
    let energy = p.req_f64("e").map_err(|e| e.to_string())?;
    let c0 = p.req_f64("c0").map_err(|e| e.to_string())?;
    let slack_rate = p.req_f64("slack_rate").map_err(|e| e.to_string())?;
    let mut ladder = Vec::new();
    let mut rows = Vec::new();
    for &n in &n_list {
        // the decay template offset scales with the window size
        let set = bad_set(&config.spec, energy, n, grid, c0, slack_rate * n as f64)
            .map_err(|e| format!("badset: {e}"))?;
        rows.push(vec![
            n.to_string(),
            grid.to_string(),
            set.flagged.iter().filter(|&&b| b).count().to_string(),
            fmt_f64(set.fraction),
        ]);
        ladder.push(set);
    }
    let sigma = bad_set_sigma_fit(&ladder);
    Ok(RunOutcome {
        header: vec!["n", "grid", "flagged", "fraction"],
        rows,
        scalars: match sigma {
            Some(fit) => json!({ "sigma": fit.sigma, "sigma_r2": fit.r2, "note": "sigma reported, not asserted" }),
            None => json!({ "note": "sigma fit needs fractions strictly inside (0,1)" }),
        },
        violations: Vec::new(),
    })
}

fn run_orbit(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n = p.req_usize("n").map_err(|e| e.to_string())?;
    let grid = p.req_usize("grid").map_err(|e| e.to_string())?;
    let x0 = p.req_f64("x0").map_err(|e| e.to_string())?;
    let n1 = p.req_usize("n1").map_err(|e| e.to_string())?;
    let delta = p.req_f64("delta").map_err(|e| e.to_string())?;
    let energy = p.req_f64("e").map_err(|e| e.to_string())?;
    let c0 = p.req_f64("c0").map_err(|e| e.to_string())?;
    let slack = p.req_f64("slack").map_err(|e| e.to_string())?;
    let set = bad_set(&config.spec, energy, n, grid, c0, slack)
        .map_err(|e| format!("orbit: {e}"))?;
    let count = orbit_count(&set, TorusPoint::new(x0), config.spec.freq(), n1, delta);
    let mut violations = Vec::new();
    if !count.sanity_ok {
        violations.push(format!(
            "orbit: count {} is not strictly below n1 {} (degenerate bad set)",
            count.count, count.steps
        ));
    }
    Ok(RunOutcome {
        header: vec!["n1", "count", "reference", "ratio", "sanity_ok"],
        rows: vec![vec![
            n1.to_string(),
            count.count.to_string(),
            fmt_f64(count.reference),
            fmt_f64(count.ratio),
            count.sanity_ok.to_string(),
        ]],
        scalars: json!({
            "n": n,
            "bad_fraction": set.fraction,
            "delta": delta,
            "note": "qualitative check: desk-scale N cannot satisfy the regime log B << log N << log(1/eta)",
        }),
        violations,
    })
}

fn run_localize(config: &RunConfig) -> Result<RunOutcome, String> {
    let mut p = config.experiment();
    let n = p.req_usize("n").map_err(|e| e.to_string())?;
    let x0 = p.req_f64("x0").map_err(|e| e.to_string())?;
    let stride = p.opt_usize("stride").map_err(|e| e.to_string())?;
    let e_lo = p.opt_f64("e_lo").map_err(|e| e.to_string())?;
    let e_hi = p.opt_f64("e_hi").map_err(|e| e.to_string())?;
    let window = match (e_lo, e_hi) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => return Err("localize: e_lo and e_hi must be given together".into()),
    };
    let report = eigen_decay(&config.spec, TorusPoint::new(x0), n, window, stride)
        .map_err(|e| format!("localize: {e}"))?;
    let rows = report
        .pairs
        .iter()
        .map(|pair| {
            vec![
                fmt_f64(pair.energy),
                pair.center.to_string(),
                fmt_f64(pair.decay_rate),
                fmt_f64(pair.decay_r2),
                fmt_f64(pair.residual),
            ]
        })
        .collect();
    let interior: Vec<_> = report.pairs.iter().filter(|p| p.interior).collect();
    let localized = interior
        .iter()
        .filter(|p| p.decay_r2 > 0.9 && p.decay_rate > 0.0)
        .count();
    let mean_rate = {
        let finite: Vec<f64> = interior
            .iter()
            .map(|p| p.decay_rate)
            .filter(|r| r.is_finite())
            .collect();
        if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        }
    };
    Ok(RunOutcome {
        header: vec!["E", "center", "decay_c", "decay_r2", "residual"],
        rows,
        scalars: json!({
            "n": n,
            "pairs": report.pairs.len(),
            "interior": interior.len(),
            "localized_interior": localized,
            "localized_fraction": if interior.is_empty() { 0.0 } else { localized as f64 / interior.len() as f64 },
            "mean_interior_decay_c": mean_rate,
            "nested_counts": report.nested_energies.iter().map(|(j, e)| json!([j, e.len()])).collect::<Vec<_>>(),
        }),
        violations: Vec::new(),
    })
}
