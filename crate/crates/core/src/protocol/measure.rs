use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MeasurementRecord, MoleculeRegister, Outcome, SubspaceQuery, Thermometer};
use crate::error::{config, Result};
use crate::optics::LatticeConfig;
use crate::trapdyn::{
    integrate, loaded_equilibrium, loaded_temperature, max_stable_dt, normal_modes,
    sample_thermal_state, FlipProcess, LatticeDrive, RunSpec, TrapConfig,
};

/// Durations of the modelled experimental steps, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceTiming {
    pub cool: f64,
    pub heat: f64,
    pub readout: f64,
    /// Slow, spectrally narrow swap pulse used in heralded preparation.
    pub swap: f64,
}

impl Default for SequenceTiming {
    fn default() -> Self {
        Self {
            cool: 1e-3,
            heat: 2e-3,
            readout: 1e-3,
            swap: 1e-3,
        }
    }
}

impl SequenceTiming {
    pub fn measurement(&self) -> f64 {
        self.cool + self.heat + self.readout
    }
}

/// Dynamics-backed readout: one classical trajectory per measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullModel {
    pub trap: TrapConfig,
    pub lattice: LatticeConfig,
    /// α_eff per state id, C·m²/V.
    pub alpha: Vec<f64>,
    /// Γ_flip, s⁻¹.
    pub flip_rate: f64,
    /// Temperature after cooling, K.
    pub t_init: f64,
    pub timing: SequenceTiming,
    /// Readout window in units of the slowest motional period.
    pub readout_periods: f64,
    /// Integration step; `None` uses 90% of the stability limit.
    pub dt: Option<f64>,
}

impl FullModel {
    pub fn new(trap: TrapConfig, lattice: LatticeConfig, alpha: Vec<f64>) -> Self {
        Self {
            trap,
            lattice,
            alpha,
            flip_rate: 2e6,
            t_init: 1e-5,
            timing: SequenceTiming::default(),
            readout_periods: 20.0,
            dt: None,
        }
    }

    /// Temperature at the end of the heating step for a molecule starting
    /// in `truth`, dithered across `q` if it lies inside. The lattice is
    /// taken to be ramped on before cooling and off before readout, both
    /// adiabatically.
    pub fn final_temperature(&self, truth: usize, q: &SubspaceQuery, seed: u64) -> Result<f64> {
        let alpha_of = |id: usize| -> Result<f64> {
            self.alpha
                .get(id)
                .copied()
                .ok_or_else(|| crate::Error::Config(format!("no polarizability for state {id}")))
        };
        let (alphas, flips) = if q.contains(truth) {
            let a = q
                .members
                .iter()
                .map(|&m| alpha_of(m))
                .collect::<Result<Vec<_>>>()?;
            let start = q.members.binary_search(&truth).expect("member");
            let flips = FlipProcess {
                rate: self.flip_rate,
                labels: (0..q.len()).collect(),
                initial: start,
            };
            (a, flips)
        } else {
            (vec![alpha_of(truth)?], FlipProcess::fixed(0))
        };
        let lattice = LatticeDrive::from_alphas(&self.lattice, &alphas)?;
        // cooled with the lattice on: thermal motion about the loaded minimum
        let bare = normal_modes(&self.trap)?.equilibrium;
        let loaded = (0..alphas.len())
            .map(|l| loaded_equilibrium(&self.trap, &lattice, l))
            .collect::<Result<Vec<_>>>()?;
        let offsets: Vec<f64> = loaded.iter().map(|(_, e)| *e).collect();
        let mut init = sample_thermal_state(&self.trap, self.t_init, seed)?;
        let start = &loaded[flips.labels[flips.initial]].0;
        for i in 0..2 {
            init.pos[i] += start[i] - bare[i];
        }
        let dt = match self.dt {
            Some(dt) => dt,
            None => 0.9 * max_stable_dt(&self.trap, Some(&lattice))?,
        };
        let spec = RunSpec {
            t_end: self.timing.heat,
            dt,
            record_every: 10,
            seed: seed ^ 0x5eed,
        };
        let traj = integrate(&self.trap, Some(&lattice), &flips, &init, &spec)?;
        loaded_temperature(&traj, &offsets, self.readout_periods * traj.slowest_period)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    /// Membership oracle plus classifier noise.
    Fast,
    Full(&'a FullModel),
}

/// Heats the crystal if the molecule lies in `q`, reads the temperature
/// and, when it was inside, leaves it in a uniformly random member.
pub fn measure_subspace(
    reg: &mut MoleculeRegister,
    q: &SubspaceQuery,
    th: &Thermometer,
    mode: Mode<'_>,
) -> Result<MeasurementRecord> {
    th.validate()?;
    if q.is_empty() {
        return config("empty subspace query");
    }
    let inside = q.contains(reg.truth);
    let (hot, temperature, elapsed) = match mode {
        Mode::Fast => (inside, None, SequenceTiming::default().measurement()),
        Mode::Full(model) => {
            let seed: u64 = reg.rng().random();
            let t = model.final_temperature(reg.truth, q, seed)?;
            (t > th.threshold_t, Some(t), model.timing.measurement())
        }
    };
    let noise_draw: f64 = reg.rng().random();
    let reported = if hot {
        noise_draw >= th.false_negative
    } else {
        noise_draw < th.false_positive
    };
    if inside {
        let k = reg.rng().random_range(0..q.len());
        reg.truth = q.members[k];
    }
    Ok(MeasurementRecord {
        query: q.members.clone(),
        outcome: Outcome::from_bool(reported),
        post_state: reg.truth,
        elapsed,
        noise_draw,
        temperature,
    })
}

/// Shared-crystal readout: heated if any molecule lies in `q`. Members
/// inside `q` are re-randomized within it; the outcome does not say which.
pub fn ensemble_measure<R: Rng>(
    regs: &mut [MoleculeRegister],
    q: &SubspaceQuery,
    th: &Thermometer,
    rng: &mut R,
) -> Result<Outcome> {
    th.validate()?;
    if regs.is_empty() {
        return config("ensemble readout needs at least one molecule");
    }
    let mut hot = false;
    for reg in regs.iter_mut() {
        if q.contains(reg.truth) {
            hot = true;
            let k = reg.rng().random_range(0..q.len());
            reg.truth = q.members[k];
        }
    }
    let u: f64 = rng.random();
    let reported = if hot {
        u >= th.false_negative
    } else {
        u < th.false_positive
    };
    Ok(Outcome::from_bool(reported))
}
