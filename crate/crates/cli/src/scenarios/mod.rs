//! Built-in scenarios and the analysis steps they share.

mod cpdtc;
mod domain_wall;
mod heating;
mod higher_order;
mod mc_reference;
mod single;

pub use cpdtc::Cpdtc;
pub use domain_wall::DomainWall;
pub use heating::Heating;
pub use higher_order::HigherOrder;
pub use mc_reference::{critical_point, McReference};
pub use single::SingleVsEffective;

use anyhow::Result;

use prethermal_core::analysis::{
    detect_melt_time, equilibration_times, subharmonic_spectrum, EnsembleRecord, Equilibration,
    MeltReport, Reached, Spectrum,
};
use prethermal_core::stats::{boxcar, linear_fit, LinearFit};

use crate::config::ExperimentConfig;
use crate::output::{Cell, OutputDir, Summary};
use crate::pipeline::time_window;
use crate::scenario::Scenario;

pub fn all() -> Vec<Box<dyn Scenario>> {
    vec![
        Box::new(Cpdtc),
        Box::new(DomainWall),
        Box::new(Heating),
        Box::new(HigherOrder),
        Box::new(McReference),
        Box::new(SingleVsEffective),
    ]
}

/// Boxcar width in samples for a width in cycles.
pub(crate) fn smoothing_samples(cfg: &ExperimentConfig) -> usize {
    (cfg.analysis.smoothing_cycles / cfg.run.stride).max(1) as usize
}

pub(crate) fn melt(
    cfg: &ExperimentConfig,
    ens: &EnsembleRecord,
    epsilon_c: f64,
) -> Result<MeltReport> {
    Ok(detect_melt_time(
        &ens.times,
        &ens.energy_mean,
        epsilon_c,
        smoothing_samples(cfg),
        Some(&ens.toggled_mean),
    )?)
}

pub(crate) fn equilibration(cfg: &ExperimentConfig, ens: &EnsembleRecord) -> Option<Equilibration> {
    if ens.site_sz.is_empty() {
        return None;
    }
    equilibration_times(ens, &cfg.analysis.equilibration).ok()
}

pub(crate) fn horizon(ens: &EnsembleRecord) -> f64 {
    ens.times.last().copied().unwrap_or(0.0)
}

/// Plateau window in time units: explicit bounds win, otherwise it spans from a multiple of
/// the global equilibration time to a fraction of the melting time (or the horizon).
pub(crate) fn plateau_window(
    cfg: &ExperimentConfig,
    ens: &EnsembleRecord,
    eq: Option<&Equilibration>,
    tau_melt: Option<f64>,
) -> (f64, f64) {
    let a = &cfg.analysis;
    let h = horizon(ens);
    let start = a
        .plateau_start
        .unwrap_or_else(|| match eq.map(|e| e.tau_global) {
            Some(Reached::At { time }) => a.plateau_equilibration_factor * time,
            Some(Reached::NotBy { horizon }) => horizon,
            None => 0.0,
        });
    let end = a
        .plateau_end
        .unwrap_or_else(|| tau_melt.map_or(h, |t| (a.plateau_melt_fraction * t).min(h)));
    (start, end.min(h))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Spectrum of the lab-frame ensemble `S^z_avg` inside `[a, b]`. The window is trimmed to a
/// multiple of both the configured length and `period` samples, so a tone repeating every
/// `period` samples falls on a bin. Returns the spectrum and the number of samples used.
pub(crate) fn window_spectrum(
    cfg: &ExperimentConfig,
    ens: &EnsembleRecord,
    a: f64,
    b: f64,
    period: usize,
) -> Result<(Spectrum, usize)> {
    let r = time_window(&ens.times, a, b);
    let k = cfg.analysis.spectrum_multiple;
    let m = k / gcd(k, period.max(1)) * period.max(1);
    let len = (r.len() / m) * m;
    let sp = subharmonic_spectrum(&ens.sz_mean, r.start..r.start + len, cfg.run.stride)?;
    Ok((sp, len))
}

/// Samples per repetition of the kicked signal: `M` cycles, or one sample if the stride
/// does not divide `M`.
pub(crate) fn sample_period(cfg: &ExperimentConfig, kick: &prethermal_core::KickSpec) -> usize {
    let m = kick.m() as u64;
    if m % cfg.run.stride == 0 {
        (m / cfg.run.stride) as usize
    } else {
        1
    }
}

pub(crate) fn write_spectrum(out: &mut OutputDir, name: &str, sp: &Spectrum) -> Result<()> {
    let mut w = out.csv(name, &["frequency".into(), "amplitude".into()])?;
    for (f, a) in sp.frequencies.iter().zip(&sp.amplitudes) {
        w.row(&[Cell::Float(*f), Cell::Float(*a)])?;
    }
    w.finish()
}

pub(crate) fn spectrum_summary(row: &mut Summary, sp: &Spectrum, samples: usize, target: f64) {
    row.set("target_frequency", target);
    row.set("target_amplitude", sp.amplitude_at(target));
    row.set("noise_floor", sp.noise_floor());
    if let Some(p) = sp.dominant() {
        row.set("peak_frequency", p.frequency);
        row.set("peak_amplitude", p.amplitude);
    }
    if let Some(p) = sp.largest_other(target) {
        row.set("other_frequency", p.frequency);
        row.set("other_amplitude", p.amplitude);
    }
    row.set("window_samples", samples as i64);
}

pub(crate) fn reached_summary(row: &mut Summary, key: &str, r: Reached) {
    match r {
        Reached::At { time } => {
            row.set(key, time);
            row.set(&format!("{key}_reached"), true);
        }
        Reached::NotBy { horizon } => {
            row.set(key, horizon);
            row.set(&format!("{key}_reached"), false);
        }
    }
}

pub(crate) fn fit_summary(s: &mut Summary, prefix: &str, fit: &LinearFit) {
    s.set(&format!("{prefix}_slope"), fit.slope);
    s.set(&format!("{prefix}_intercept"), fit.intercept);
    s.set(&format!("{prefix}_r_squared"), fit.r_squared);
}

/// Exponential decay rate of `|order|`, fitted on the smoothed series from the start until it
/// first falls below `floor` times its initial value.
pub(crate) fn decay_rate(
    times: &[f64],
    order: &[f64],
    width: usize,
    floor: f64,
) -> Option<LinearFit> {
    let abs: Vec<f64> = order.iter().map(|v| v.abs()).collect();
    let smooth = boxcar(&abs, width);
    let m0 = *smooth.first()?;
    if !(m0 > 0.0) {
        return None;
    }
    let end = smooth
        .iter()
        .position(|v| *v < floor * m0)
        .unwrap_or(smooth.len());
    let (x, y): (Vec<f64>, Vec<f64>) = (0..end)
        .filter(|&k| smooth[k] > 0.0)
        .map(|k| (times[k], smooth[k].ln()))
        .unzip();
    if x.len() < 3 {
        return None;
    }
    let mut fit = linear_fit(&x, &y).ok()?;
    fit.slope = -fit.slope;
    Some(fit)
}

/// Whether the series keeps one sign over samples with `t <= until`.
pub(crate) fn sign_constant(times: &[f64], series: &[f64], until: f64) -> bool {
    let r = time_window(times, f64::NEG_INFINITY, until);
    let s = &series[r];
    s.iter().all(|v| *v > 0.0) || s.iter().all(|v| *v < 0.0)
}
