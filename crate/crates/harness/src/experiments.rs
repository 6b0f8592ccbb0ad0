//! The three experiments: conservation, increment identity and N-scan.

use std::f64::consts::PI;

use dnls_core::data::DataRecipe;
use dnls_core::energies::{self, CalibrationConfig};
use dnls_core::evolution::{evolve, evolve_with, Model, Solver, SolverConfig};
use dnls_core::spectral::ISymbol;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::HarnessError;
use crate::report::Report;

pub fn run(config: &ExperimentConfig, kind: ExperimentKind) -> Result<Report, HarnessError> {
    match kind {
        ExperimentKind::Conservation => run_conservation(config),
        ExperimentKind::Increment => run_increment_check(config),
        ExperimentKind::Nscan => run_n_scan(config),
    }
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, rms residual)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

fn symbol(config: &ExperimentConfig, n: f64) -> Result<ISymbol, HarnessError> {
    Ok(ISymbol::new(n, config.symbols.s)?)
}

/// Mass and energy drift of one model run at several step sizes, and the observed
/// convergence order of the energy drift.
pub fn run_conservation(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    let params = &config.conservation;
    let f0 = config.initial_field()?;
    let base = config.solver;
    let coarsest = params.dt_multiples.iter().cloned().fold(0.0, f64::max);
    if params.dt_multiples.len() < 2 || coarsest <= 0.0 {
        return Err(HarnessError::Config("conservation needs at least two positive dt multiples".into()));
    }
    // snapshots land on common times for every step size
    let interval = base.dt * base.sample_every as f64 * coarsest;
    let runs = params
        .dt_multiples
        .par_iter()
        .map(|&mult| {
            let dt = base.dt * mult;
            let cfg = SolverConfig { dt, sample_every: ((interval / dt).round() as usize).max(1), ..base };
            evolve(config.model, &cfg, &f0, None).map(|tr| (dt, tr))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new(
        ExperimentKind::Conservation,
        config,
        &["dt", "t", "mass", "energy", "mass_drift", "energy_drift"],
    );
    let mut mass_worst = 0.0f64;
    let (mut log_dt, mut log_drift) = (Vec::new(), Vec::new());
    for (dt, tr) in &runs {
        let (m0, e0) = (tr.diagnostics[0].mass, tr.diagnostics[0].energy);
        for (t, d) in tr.times.iter().zip(&tr.diagnostics) {
            let md = if m0 == 0.0 { (d.mass - m0).abs() } else { (d.mass - m0).abs() / m0 };
            report.push_row(vec![*dt, *t, d.mass, d.energy, md, (d.energy - e0).abs()]);
        }
        let (md, ed) = (tr.mass_drift(), tr.energy_drift());
        report.metric(format!("mass_drift[dt={dt}]"), md);
        report.metric(format!("energy_drift[dt={dt}]"), ed);
        mass_worst = mass_worst.max(md);
        log_dt.push(dt.ln());
        log_drift.push(ed.max(f64::MIN_POSITIVE).ln());
    }
    for w in runs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let order = (a.1.energy_drift() / b.1.energy_drift()).ln() / (a.0 / b.0).ln();
        report.metric(format!("energy_order[{}->{}]", a.0, b.0), order);
    }
    let (order, _, rms) = ols(&log_dt, &log_drift);
    report.metric("energy_order_fit", order);
    report.metric("energy_order_fit_residual", rms);
    report.criterion("relative_mass_drift", mass_worst, format!("< {:e}", params.mass_tolerance), mass_worst < params.mass_tolerance);
    let [lo, hi] = params.order_window;
    report.criterion("energy_drift_order", order, format!("in [{lo}, {hi}]"), (lo..=hi).contains(&order));
    Ok(report)
}

fn calibration(config: &ExperimentConfig, n: f64, seed: u64) -> Result<CalibrationConfig, HarnessError> {
    let s = match config.recipe() {
        DataRecipe::Rough { s, .. } => s,
        _ => 0.6,
    };
    Ok(CalibrationConfig {
        modes: config.grid.modes,
        length: config.grid.length,
        symbol: symbol(config, n)?,
        fields: config.increment.calibration_fields,
        seed,
        dt: config.solver.dt,
        data_s: s,
        norm: config.data.target_mass.map(f64::sqrt).unwrap_or(0.9 * (2.0 * PI).sqrt()),
        dealias_fraction: config.solver.dealias_fraction,
    })
}

/// Fits `C_2` on two disjoint sets of random fields and checks the increment identity
/// along a gauged trajectory.
pub fn run_increment_check(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    if config.model != Model::Gauged {
        return Err(HarnessError::Config("the increment check runs the gauged model".into()));
    }
    let params = &config.increment;
    let n = *config.symbols.thresholds.first().ok_or_else(|| HarnessError::Config("no threshold given".into()))?;
    let sym = symbol(config, n)?;
    let seed = config.seed.unwrap_or(match config.recipe() {
        DataRecipe::Rough { seed, .. } | DataRecipe::LowBand { seed, .. } => seed,
        _ => 0,
    });
    let seeds = [seed.wrapping_add(1), seed.wrapping_add(1 << 32)];
    let fits = seeds
        .par_iter()
        .map(|&s| Ok(energies::calibrate_c2(&calibration(config, n, s)?)?))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let (a, b) = (&fits[0], &fits[1]);

    let grid = config.grid()?;
    let solver = Solver::new(Model::Gauged, grid, config.solver.dealias_fraction)?;
    let traj = evolve_with(&solver, &config.solver, &config.initial_field()?, None)?;
    let samples = traj
        .snapshots
        .par_iter()
        .map(|f| energies::increment_sample(&solver, f, &sym, config.solver.dt))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new(
        ExperimentKind::Increment,
        config,
        &["t", "fd", "lambda6_re", "lambda6_im", "lambda8_re", "lambda8_im", "relative_residual"],
    );
    let mut worst = 0.0f64;
    for (t, s) in traj.times.iter().zip(&samples) {
        let l8 = a.c2 * s.lambda8_basis;
        let r = s.relative_residual(a.c2);
        worst = worst.max(r);
        report.push_row(vec![*t, s.fd.re, s.lambda6.re, s.lambda6.im, l8.re, l8.im, r]);
    }
    let spread = (a.c2 - b.c2).norm() / a.c2.norm();
    report.metric("c2_re", a.c2.re);
    report.metric("c2_im", a.c2.im);
    report.metric("c2_alt_re", b.c2.re);
    report.metric("c2_alt_im", b.c2.im);
    report.metric("calibration_residual", a.residual);
    report.metric("calibration_residual_alt", b.residual);
    report.metric("calibration_residual_without_m8", a.residual_without_m8);
    report.metric("mass_drift", traj.mass_drift());
    report.criterion("identity_residual", worst, format!("< {:e}", params.residual_tolerance), worst < params.residual_tolerance);
    report.criterion(
        "check_times",
        samples.len() as f64,
        format!(">= {}", params.check_times),
        samples.len() >= params.check_times,
    );
    report.criterion("c2_spread", spread, format!("< {:e}", params.c2_reproducibility), spread < params.c2_reproducibility);
    report.criterion(
        "m8_ablation",
        a.residual_without_m8,
        format!("> {:e}", a.residual),
        a.residual_without_m8 > a.residual,
    );
    Ok(report)
}

/// Sup-in-time drift of `E^1` and `E^2` along one trajectory for each threshold, and the
/// log-log slopes of both against `N`.
pub fn run_n_scan(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    let params = &config.nscan;
    let ns = &config.symbols.thresholds;
    let (lo, hi) = ns.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &n| (l.min(n), h.max(n)));
    let octaves = if ns.len() < 2 { 0.0 } else { (hi / lo).log2() };
    if octaves < params.min_octaves {
        return Err(HarnessError::InsufficientOctaves { octaves, required: params.min_octaves });
    }
    let grid = config.grid()?;
    let solver = Solver::new(config.model, grid, config.solver.dealias_fraction)?;
    let traj = evolve_with(&solver, &config.solver, &config.initial_field()?, None)?;
    let band = traj.band;

    let series = ns
        .par_iter()
        .map(|&n| {
            let sym = symbol(config, n)?;
            traj.snapshots
                .iter()
                .map(|f| Ok((energies::modified_energy_1(f, &sym), energies::modified_energy_2_in(f, &sym, band)?.value)))
                .collect::<Result<Vec<_>, HarnessError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new(ExperimentKind::Nscan, config, &["n", "t", "e1", "e2", "e1_drift", "e2_drift"]);
    let (mut x, mut y1, mut y2) = (Vec::new(), Vec::new(), Vec::new());
    for (&n, s) in ns.iter().zip(&series) {
        let (e10, e20) = s[0];
        let (mut d1, mut d2) = (0.0f64, 0.0f64);
        for (t, &(e1, e2)) in traj.times.iter().zip(s) {
            report.push_row(vec![n, *t, e1, e2, (e1 - e10).abs(), (e2 - e20).abs()]);
            d1 = d1.max((e1 - e10).abs());
            d2 = d2.max((e2 - e20).abs());
        }
        report.metric(format!("sup_drift_e1[N={n}]"), d1);
        report.metric(format!("sup_drift_e2[N={n}]"), d2);
        x.push(n.ln());
        y1.push(d1.max(f64::MIN_POSITIVE).ln());
        y2.push(d2.max(f64::MIN_POSITIVE).ln());
    }
    let (s1, _, r1) = ols(&x, &y1);
    let (s2, _, r2) = ols(&x, &y2);
    report.metric("slope_e1", s1);
    report.metric("slope_e1_residual", r1);
    report.metric("slope_e2", s2);
    report.metric("slope_e2_residual", r2);
    report.metric("mass_drift", traj.mass_drift());
    report.metric("energy_drift", traj.energy_drift());
    report.criterion(
        "slope_separation",
        s2 - s1,
        format!("<= -{}", params.separation),
        s2 <= s1 - params.separation,
    );
    report.criterion("slope_e2", s2, format!("<= {}", params.max_slope_e2), s2 <= params.max_slope_e2);
    Ok(report)
}
