use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crystal::sample_thermal_state;
use super::dynamics::{
    max_stable_dt, run_with, EnsembleTrajectory, FlipProcess, LatticeDrive, RunSpec,
};
use super::TrapConfig;
use crate::constants::{BOLTZMANN, HBAR};
use crate::error::{domain, Result};
use crate::stats::{derive_seed, linear_fit, mean, std_error, variance, LinearFit};

/// Secular energy / (6 k_B): six classical modes at equipartition.
fn energy_to_temperature(e: f64) -> f64 {
    e / (6.0 * BOLTZMANN)
}

/// Time-averaged temperature over the last `window` seconds.
pub fn temperature_of(traj: &EnsembleTrajectory, window: f64) -> Result<f64> {
    window_mean(traj, window, |i| traj.energies[i])
}

/// Like [`temperature_of`], but counting the lattice energy and measuring
/// from the loaded minimum of the label held at each sample (`offsets[label]`,
/// as returned by `loaded_equilibrium`). This is the temperature read after
/// the lattice is ramped down adiabatically.
pub fn loaded_temperature(traj: &EnsembleTrajectory, offsets: &[f64], window: f64) -> Result<f64> {
    if let Some(l) = traj.labels.iter().flatten().find(|&&l| l >= offsets.len()) {
        return domain(format!("no loaded-minimum offset for label {l}"));
    }
    window_mean(traj, window, |i| {
        let off = traj.labels[i].map_or(0.0, |l| offsets[l]);
        traj.energies[i] + traj.lattice_energies[i] - off
    })
}

fn window_mean(
    traj: &EnsembleTrajectory,
    window: f64,
    energy: impl Fn(usize) -> f64,
) -> Result<f64> {
    let (Some(&t0), Some(&t1)) = (traj.times.first(), traj.times.last()) else {
        return domain("empty trajectory");
    };
    if window > t1 - t0 {
        return domain(format!(
            "window {window:e} s exceeds trajectory length {:e} s",
            t1 - t0
        ));
    }
    if window < 5.0 * traj.slowest_period * (1.0 - 1e-9) {
        return domain(format!(
            "window {window:e} s shorter than five motional periods ({:e} s)",
            5.0 * traj.slowest_period
        ));
    }
    let from = t1 - window;
    let e: Vec<f64> = (0..traj.len())
        .filter(|&i| traj.times[i] >= from)
        .map(energy)
        .collect();
    Ok(energy_to_temperature(mean(&e)))
}

/// Classical mean occupation k_B·T/(ħω).
pub fn mean_occupation(temperature: f64, omega: f64) -> f64 {
    BOLTZMANN * temperature / (HBAR * omega)
}

/// Monte Carlo settings for [`heating_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingRun {
    pub n_traj: usize,
    pub t_end: f64,
    /// Integration step; `None` picks 90% of the stability limit.
    pub dt: Option<f64>,
    /// Initial (laser-cooled) temperature, K.
    pub t_init: f64,
    /// Temperature readout windows spanning [0, t_end].
    pub n_windows: usize,
    /// Energy is sampled every this many steps inside each window.
    pub sample_every: usize,
    pub seed: u64,
}

impl Default for HeatingRun {
    fn default() -> Self {
        Self {
            n_traj: 50,
            t_end: 2e-3,
            dt: None,
            t_init: 1e-5,
            n_windows: 20,
            sample_every: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingEstimate {
    /// K/s.
    pub rate: f64,
    pub stderr: f64,
    pub n_traj: usize,
    /// Window centres, s.
    pub window_times: Vec<f64>,
    /// Ensemble-mean temperature per window, K.
    pub mean_temperature: Vec<f64>,
    /// Linear fit of `mean_temperature` against `window_times`.
    pub fit: LinearFit,
    pub per_trajectory: Vec<f64>,
    pub dt: f64,
}

/// Heating summary as exported to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingSummary {
    #[serde(rename = "rate_K_per_s")]
    pub rate_k_per_s: f64,
    pub stderr: f64,
    pub n_traj: usize,
    pub params_hash: String,
    pub seed: u64,
}

fn resolve_dt(trap: &TrapConfig, lattice: Option<&LatticeDrive>, dt: Option<f64>) -> Result<f64> {
    let limit = max_stable_dt(trap, lattice)?;
    Ok(dt.unwrap_or(0.9 * limit))
}

/// Windowed temperatures of one trajectory.
fn window_temperatures(
    trap: &TrapConfig,
    lattice: Option<&LatticeDrive>,
    flips: &FlipProcess,
    run: &HeatingRun,
    dt: f64,
    index: u64,
) -> Result<Vec<f64>> {
    let init = sample_thermal_state(trap, run.t_init, derive_seed(run.seed, 2 * index))?;
    let spec = RunSpec {
        t_end: run.t_end,
        dt,
        record_every: run.sample_every,
        seed: derive_seed(run.seed, 2 * index + 1),
    };
    let width = run.t_end / run.n_windows as f64;
    let mut sums = vec![0.0; run.n_windows];
    let mut counts = vec![0usize; run.n_windows];
    run_with(trap, lattice, flips, &init, &spec, |s| {
        let w = ((s.t / width) as usize).min(run.n_windows - 1);
        sums[w] += s.energy;
        counts[w] += 1;
    })?;
    Ok(sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| energy_to_temperature(s / c.max(1) as f64))
        .collect())
}

/// Least-squares heating rate of the ensemble-mean temperature; the standard
/// error comes from the scatter of per-trajectory slopes. Trajectories run in
/// parallel with per-index seeds and are reduced in index order.
pub fn heating_rate(
    trap: &TrapConfig,
    lattice: Option<&LatticeDrive>,
    flips: &FlipProcess,
    run: &HeatingRun,
) -> Result<HeatingEstimate> {
    if run.n_traj < 2 {
        return domain("heating rate needs at least two trajectories");
    }
    if run.n_windows < 2 || run.sample_every == 0 {
        return domain("heating rate needs at least two windows and a positive sampling stride");
    }
    let dt = resolve_dt(trap, lattice, run.dt)?;
    let per: Vec<Vec<f64>> = (0..run.n_traj as u64)
        .into_par_iter()
        .map(|i| window_temperatures(trap, lattice, flips, run, dt, i))
        .collect::<Result<_>>()?;
    let width = run.t_end / run.n_windows as f64;
    let times: Vec<f64> = (0..run.n_windows)
        .map(|w| (w as f64 + 0.5) * width)
        .collect();
    let slopes: Vec<f64> = per
        .iter()
        .map(|temps| linear_fit(&times, temps).map_or(0.0, |f| f.slope))
        .collect();
    let mean_t: Vec<f64> = (0..run.n_windows)
        .map(|w| per.iter().map(|p| p[w]).sum::<f64>() / run.n_traj as f64)
        .collect();
    let fit = linear_fit(&times, &mean_t).expect("at least two windows");
    Ok(HeatingEstimate {
        rate: fit.slope,
        stderr: std_error(&slopes),
        n_traj: run.n_traj,
        window_times: times,
        mean_temperature: mean_t,
        fit,
        per_trajectory: slopes,
        dt,
    })
}

/// Spread of the accumulated state-dependent impulse against the mean flip count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseScaling {
    pub times: Vec<f64>,
    pub mean_flips: Vec<f64>,
    /// Variance across trajectories, (kg·m/s)².
    pub variance: Vec<f64>,
    pub fit: LinearFit,
}

pub fn impulse_scaling(
    trap: &TrapConfig,
    lattice: &LatticeDrive,
    flips: &FlipProcess,
    run: &HeatingRun,
    n_checkpoints: usize,
) -> Result<ImpulseScaling> {
    if run.n_traj < 2 || n_checkpoints < 2 {
        return domain("impulse scaling needs at least two trajectories and two checkpoints");
    }
    let dt = resolve_dt(trap, Some(lattice), run.dt)?;
    let n_steps = (run.t_end / dt).round() as usize;
    let stride = (n_steps / n_checkpoints).max(1);
    let per: Vec<Vec<(f64, f64, f64)>> = (0..run.n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let init = sample_thermal_state(trap, run.t_init, derive_seed(run.seed, 2 * i))?;
            let spec = RunSpec {
                t_end: run.t_end,
                dt,
                record_every: stride,
                seed: derive_seed(run.seed, 2 * i + 1),
            };
            let mut out = Vec::new();
            run_with(trap, Some(lattice), flips, &init, &spec, |s| {
                out.push((s.t, s.impulse, s.flips as f64));
            })?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let n = per.iter().map(Vec::len).min().unwrap_or(0);
    let (mut times, mut mean_flips, mut var) = (Vec::new(), Vec::new(), Vec::new());
    for c in 1..n {
        let imp: Vec<f64> = per.iter().map(|p| p[c].1).collect();
        let fl: Vec<f64> = per.iter().map(|p| p[c].2).collect();
        times.push(per[0][c].0);
        mean_flips.push(mean(&fl));
        var.push(variance(&imp));
    }
    let Some(fit) = linear_fit(&mean_flips, &var) else {
        return domain("flip counts do not vary between checkpoints");
    };
    Ok(ImpulseScaling {
        times,
        mean_flips,
        variance: var,
        fit,
    })
}
