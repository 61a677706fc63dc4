use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::crystal::{forces, hessian, normal_modes, potential};
use super::{PhaseSpace, TrapConfig};
use crate::constants::BOLTZMANN;
use crate::error::{config, domain, Error, Result};
use crate::optics::{LatticeConfig, StatePotential};
use crate::pulses::poisson_times;

/// State-dependent lattice acting on the molecule along `direction`. The
/// lattice coordinate is measured from the molecule's equilibrium site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDrive {
    pub direction: Vector3<f64>,
    /// One potential per internal label.
    pub potentials: Vec<StatePotential>,
}

impl LatticeDrive {
    /// One potential per polarizability, all from the same beams.
    pub fn from_alphas(cfg: &LatticeConfig, alphas: &[f64]) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            direction: cfg.direction.normalize(),
            potentials: alphas
                .iter()
                .enumerate()
                .map(|(i, &a)| StatePotential::new(format!("label{i}"), a, cfg))
                .collect(),
        })
    }

    fn max_curvature(&self) -> f64 {
        self.potentials
            .iter()
            .map(|p| p.u0.abs() * p.k() * p.k())
            .fold(0.0, f64::max)
    }
}

/// Poisson-timed label changes. Each event moves the label to a uniformly
/// chosen other member of `labels`; with two labels this is a toggle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipProcess {
    /// Γ_flip, s⁻¹.
    pub rate: f64,
    /// Lattice label indices visited by the flips.
    pub labels: Vec<usize>,
    /// Index into `labels` of the label held before the first flip.
    pub initial: usize,
}

impl FlipProcess {
    pub fn pair(rate: f64, lo: usize, hi: usize) -> Self {
        Self {
            rate,
            labels: vec![lo, hi],
            initial: 0,
        }
    }

    /// Molecule parked in one label for the whole run.
    pub fn fixed(label: usize) -> Self {
        Self {
            rate: 0.0,
            labels: vec![label],
            initial: 0,
        }
    }

    pub fn validate(&self, n_labels: usize) -> Result<()> {
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return config(format!("flip rate must be non-negative, got {}", self.rate));
        }
        if self.labels.is_empty() || self.initial >= self.labels.len() {
            return config(
                "flip process needs a non-empty label list containing the initial label",
            );
        }
        let mut seen = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.labels.len() {
            return config("flip labels must be distinct");
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= n_labels) {
            return config(format!("flip label {l} has no lattice potential"));
        }
        Ok(())
    }

    /// Flip times (first at t = 0) and the label entered at each.
    fn realize(&self, t_end: f64, seed: u64) -> Result<(Vec<f64>, Vec<usize>)> {
        if self.labels.len() < 2 {
            return Ok((Vec::new(), Vec::new()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let times = poisson_times(self.rate, t_end, &mut rng)?;
        let n = self.labels.len();
        let mut cur = self.initial;
        let labels = times
            .iter()
            .map(|_| {
                let step = rng.random_range(1..n);
                cur = (cur + step) % n;
                self.labels[cur]
            })
            .collect();
        Ok((times, labels))
    }
}

/// Time grid and sampling for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub t_end: f64,
    pub dt: f64,
    /// Record one sample every this many steps (the final step is always recorded).
    pub record_every: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<[Vector3<f64>; 2]>,
    pub velocities: Vec<[Vector3<f64>; 2]>,
    /// Lattice label in force at each sample (`None` without a lattice label).
    pub labels: Vec<Option<usize>>,
    pub flip_times: Vec<f64>,
    /// Secular energy above the crystal minimum, lattice excluded, J.
    pub energies: Vec<f64>,
    /// Lattice energy of the molecule at each sample, J.
    pub lattice_energies: Vec<f64>,
    /// Accumulated impulse of the state-dependent lattice force (the force
    /// minus its mean over the labels the flips visit), kg·m/s.
    pub impulse: Vec<f64>,
    /// Number of flips that have occurred by each sample.
    pub flip_counts: Vec<usize>,
    /// Period of the slowest crystal mode, s.
    pub slowest_period: f64,
}

impl EnsembleTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Largest step allowed by the dt ≤ 1/(50·ω_max) rule, where ω_max combines
/// the fastest crystal mode with the steepest lattice curvature.
pub fn max_stable_dt(trap: &TrapConfig, lattice: Option<&LatticeDrive>) -> Result<f64> {
    let modes = normal_modes(trap)?;
    let extra = lattice.map_or(0.0, |l| l.max_curvature() / trap.molecule.mass);
    Ok(1.0 / (50.0 * (modes.max_frequency().powi(2) + extra).sqrt()))
}

/// Local minimum of trap + Coulomb + the static lattice potential of `label`
/// nearest the bare crystal, and its height above the bare minimum in the
/// secular-energy reference (J). This is where a molecule cooled with the
/// lattice on sits, and the zero of energy after an adiabatic ramp-down.
pub fn loaded_equilibrium(
    trap: &TrapConfig,
    lattice: &LatticeDrive,
    label: usize,
) -> Result<([Vector3<f64>; 2], f64)> {
    let pot = lattice
        .potentials
        .get(label)
        .ok_or_else(|| Error::Config(format!("no lattice potential for label {label}")))?;
    let eq = normal_modes(trap)?.equilibrium;
    let v_min = potential(trap, &eq);
    let n = lattice.direction.normalize();
    let k = trap.spring_constants();
    let s_of = |x: &[Vector3<f64>; 2]| n.dot(&(x[1] - eq[1]));
    let energy = |x: &[Vector3<f64>; 2]| potential(trap, x) - v_min + pot.energy(s_of(x));
    let grad = |x: &[Vector3<f64>; 2]| -> nalgebra::SVector<f64, 6> {
        let f = forces(trap, &k, x);
        let fm = f[1] + n * pot.force(s_of(x));
        -nalgebra::SVector::<f64, 6>::from_iterator(f[0].iter().chain(fm.iter()).copied())
    };
    let unpack = |v: &nalgebra::SVector<f64, 6>| -> [Vector3<f64>; 2] {
        [v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into()]
    };

    let scale = pot.u0.abs() * pot.k() + k[1].max() * (eq[0] - eq[1]).norm().max(pot.wavelength);
    let mut x = eq;
    let mut g = grad(&x);
    for _ in 0..200 {
        if g.norm() < 1e-10 * scale {
            break;
        }
        let mut h = hessian(trap, &x);
        let c = pot.curvature(s_of(&x));
        let mut block = h.fixed_view_mut::<3, 3>(3, 3);
        block += n * n.transpose() * c;
        // Newton where the Hessian is positive definite, steepest descent otherwise
        let dir = match h.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g / (k[1].max() + c.abs()),
        };
        let e0 = energy(&x);
        let mut step = 1.0;
        loop {
            let cand = unpack(
                &(nalgebra::SVector::<f64, 6>::from_iterator(
                    x[0].iter().chain(x[1].iter()).copied(),
                ) + dir * step),
            );
            if energy(&cand) <= e0 || step < 1e-12 {
                x = cand;
                break;
            }
            step *= 0.5;
        }
        g = grad(&x);
    }
    let residual = g.norm();
    if !(residual < 1e-8 * scale) {
        return Err(Error::NoConvergence {
            what: "loaded crystal equilibrium",
            residual,
        });
    }
    Ok((x, energy(&x)))
}

pub(super) struct Sample<'a> {
    pub t: f64,
    pub state: &'a PhaseSpace,
    pub label: Option<usize>,
    pub energy: f64,
    pub lattice_energy: f64,
    pub impulse: f64,
    pub flips: usize,
}

/// Velocity-Verlet core shared by [`integrate`] and the heating drivers.
/// Steps are split exactly at flip times; `observe` sees the initial state
/// and every `record_every`-th step.
pub(super) fn run_with<F: FnMut(&Sample)>(
    trap: &TrapConfig,
    lattice: Option<&LatticeDrive>,
    flips: &FlipProcess,
    initial: &PhaseSpace,
    spec: &RunSpec,
    mut observe: F,
) -> Result<(Vec<f64>, f64)> {
    if !(spec.t_end > 0.0) || !(spec.dt > 0.0) || spec.record_every == 0 {
        return domain("run needs positive t_end, dt and record_every");
    }
    let dt_max = max_stable_dt(trap, lattice)?;
    if spec.dt > dt_max * (1.0 + 1e-12) {
        return domain(format!(
            "time step {:e} s exceeds stability limit {dt_max:e} s",
            spec.dt
        ));
    }
    let n_labels = lattice.map_or(1, |l| l.potentials.len());
    flips.validate(n_labels)?;
    let modes = normal_modes(trap)?;
    let eq = modes.equilibrium;
    let v_min = potential(trap, &eq);
    let k = trap.spring_constants();
    let m = trap.masses();
    let (flip_times, flip_labels) = flips.realize(spec.t_end, spec.seed)?;

    let dir = lattice.map(|l| l.direction.normalize());
    let mut label = lattice.map(|_| flips.labels[flips.initial]);
    // (force, energy, force minus its mean over the visited labels)
    let lattice_force = |pos: &[Vector3<f64>; 2], label: Option<usize>| -> (f64, f64, f64) {
        match (lattice, dir, label) {
            (Some(l), Some(n), Some(i)) => {
                let s = n.dot(&(pos[1] - eq[1]));
                let p = &l.potentials[i];
                let f = p.force(s);
                let f_mean = flips
                    .labels
                    .iter()
                    .map(|&j| l.potentials[j].force(s))
                    .sum::<f64>()
                    / flips.labels.len() as f64;
                (f, p.energy(s), f - f_mean)
            }
            _ => (0.0, 0.0, 0.0),
        }
    };
    let accel = |pos: &[Vector3<f64>; 2], label: Option<usize>| -> ([Vector3<f64>; 2], f64) {
        let mut f = forces(trap, &k, pos);
        let (fl, _, fd) = lattice_force(pos, label);
        if let Some(n) = dir {
            f[1] += n * fl;
        }
        ([f[0] / m[0], f[1] / m[1]], fd)
    };
    let secular = |s: &PhaseSpace| -> f64 {
        0.5 * m[0] * s.vel[0].norm_squared()
            + 0.5 * m[1] * s.vel[1].norm_squared()
            + (potential(trap, &s.pos) - v_min)
    };

    let mut st = *initial;
    let (mut a, mut fl) = accel(&st.pos, label);
    let mut impulse = 0.0;
    let mut next_flip = 0usize;
    let n_steps = (spec.t_end / spec.dt).round().max(1.0) as usize;
    let e_limit = 1e6 * BOLTZMANN;

    let mut emit =
        |t: f64, st: &PhaseSpace, label: Option<usize>, impulse: f64, flips: usize| -> Result<()> {
            let energy = secular(st);
            if !energy.is_finite() || energy > e_limit {
                return Err(Error::Aborted {
                    time: t,
                    reason: format!("secular energy {energy:e} J out of range"),
                });
            }
            observe(&Sample {
                t,
                state: st,
                label,
                energy,
                lattice_energy: lattice_force(&st.pos, label).1,
                impulse,
                flips,
            });
            Ok(())
        };

    // a flip scheduled exactly at t = 0 takes effect before the first sample
    let mut t = 0.0;
    while next_flip < flip_times.len() && flip_times[next_flip] <= 0.0 {
        label = Some(flip_labels[next_flip]);
        next_flip += 1;
        (a, fl) = accel(&st.pos, label);
    }
    emit(0.0, &st, label, impulse, next_flip)?;

    for step in 1..=n_steps {
        let t_next = step as f64 * spec.dt;
        loop {
            let flip_here = next_flip < flip_times.len() && flip_times[next_flip] < t_next;
            let t_stop = if flip_here {
                flip_times[next_flip]
            } else {
                t_next
            };
            let h = t_stop - t;
            if h > 0.0 {
                for ((v, x), acc) in st.vel.iter_mut().zip(st.pos.iter_mut()).zip(&a) {
                    *v += acc * (0.5 * h);
                    *x += *v * h;
                }
                let f_old = fl;
                (a, fl) = accel(&st.pos, label);
                for (v, acc) in st.vel.iter_mut().zip(&a) {
                    *v += acc * (0.5 * h);
                }
                impulse += 0.5 * (f_old + fl) * h;
            }
            t = t_stop;
            if !flip_here {
                break;
            }
            label = Some(flip_labels[next_flip]);
            next_flip += 1;
            (a, fl) = accel(&st.pos, label);
        }
        if step % spec.record_every == 0 || step == n_steps {
            emit(t, &st, label, impulse, next_flip)?;
        }
    }
    Ok((flip_times, modes.longest_period()))
}

/// Integrates one trajectory and keeps every recorded sample.
pub fn integrate(
    trap: &TrapConfig,
    lattice: Option<&LatticeDrive>,
    flips: &FlipProcess,
    initial: &PhaseSpace,
    spec: &RunSpec,
) -> Result<EnsembleTrajectory> {
    let mut tr = EnsembleTrajectory {
        times: Vec::new(),
        positions: Vec::new(),
        velocities: Vec::new(),
        labels: Vec::new(),
        flip_times: Vec::new(),
        energies: Vec::new(),
        lattice_energies: Vec::new(),
        impulse: Vec::new(),
        flip_counts: Vec::new(),
        slowest_period: 0.0,
    };
    let (flip_times, period) = run_with(trap, lattice, flips, initial, spec, |s| {
        tr.times.push(s.t);
        tr.positions.push(s.state.pos);
        tr.velocities.push(s.state.vel);
        tr.labels.push(s.label);
        tr.energies.push(s.energy);
        tr.lattice_energies.push(s.lattice_energy);
        tr.impulse.push(s.impulse);
        tr.flip_counts.push(s.flips);
    })?;
    tr.flip_times = flip_times;
    tr.slowest_period = period;
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::super::sample_thermal_state;
    use super::*;

    fn lattice() -> LatticeDrive {
        LatticeDrive::from_alphas(&LatticeConfig::table1(), &[2.0e-39, 1.7e-39]).unwrap()
    }

    #[test]
    fn loaded_minimum_is_a_rest_point() {
        let trap = TrapConfig::table1(76.0);
        let lat = lattice();
        let (x, off) = loaded_equilibrium(&trap, &lat, 0).unwrap();
        let bare = normal_modes(&trap).unwrap().equilibrium;
        // the λ/8 offset puts the bare site on a slope, so loading lowers the energy
        assert!(off < 0.0);
        assert!((x[1] - bare[1]).norm() > 1e-9);
        let init = PhaseSpace {
            pos: x,
            vel: [Vector3::zeros(); 2],
        };
        let spec = RunSpec {
            t_end: 2e-5,
            dt: 1e-9,
            record_every: 100,
            seed: 0,
        };
        let tr = integrate(&trap, Some(&lat), &FlipProcess::fixed(0), &init, &spec).unwrap();
        for (e, u) in tr.energies.iter().zip(&tr.lattice_energies) {
            assert!((e + u - off).abs() < 1e-9 * off.abs());
        }

        let flat = LatticeDrive::from_alphas(&LatticeConfig::table1(), &[0.0]).unwrap();
        let (x0, off0) = loaded_equilibrium(&trap, &flat, 0).unwrap();
        assert_eq!(off0, 0.0);
        assert_eq!(x0, bare);
        assert!(loaded_equilibrium(&trap, &flat, 1).is_err());
    }

    #[test]
    fn flip_process_validation() {
        assert!(FlipProcess::pair(1e6, 0, 1).validate(2).is_ok());
        assert!(FlipProcess::pair(-1.0, 0, 1).validate(2).is_err());
        assert!(FlipProcess::pair(1e6, 0, 0).validate(2).is_err());
        assert!(FlipProcess::pair(1e6, 0, 2).validate(2).is_err());
        let mut f = FlipProcess::pair(1e6, 0, 1);
        f.initial = 2;
        assert!(f.validate(2).is_err());
    }

    #[test]
    fn labels_alternate_for_pairs() {
        let (times, labels) = FlipProcess::pair(2e6, 0, 1).realize(1e-5, 4).unwrap();
        assert_eq!(times[0], 0.0);
        assert_eq!(labels[0], 1);
        assert!(labels.windows(2).all(|w| w[0] != w[1]));
        let (t, l) = FlipProcess::fixed(0).realize(1e-5, 4).unwrap();
        assert!(t.is_empty() && l.is_empty());
    }

    #[test]
    fn coarse_step_rejected() {
        let trap = TrapConfig::table1(76.0);
        let init = sample_thermal_state(&trap, 1e-3, 1).unwrap();
        let spec = RunSpec {
            t_end: 1e-6,
            dt: 1e-7,
            record_every: 1,
            seed: 0,
        };
        assert!(integrate(&trap, None, &FlipProcess::fixed(0), &init, &spec).is_err());
    }

    #[test]
    fn trajectory_invariants() {
        let trap = TrapConfig::table1(76.0);
        let lat = lattice();
        let dt = max_stable_dt(&trap, Some(&lat)).unwrap();
        let init = sample_thermal_state(&trap, 1e-3, 1).unwrap();
        let spec = RunSpec {
            t_end: 2e-5,
            dt,
            record_every: 10,
            seed: 3,
        };
        let tr = integrate(
            &trap,
            Some(&lat),
            &FlipProcess::pair(2e6, 0, 1),
            &init,
            &spec,
        )
        .unwrap();
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        assert!(tr
            .flip_times
            .iter()
            .all(|&t| (0.0..=spec.t_end).contains(&t)));
        assert_eq!(tr.flip_counts[0], 1);
        assert_eq!(*tr.flip_counts.last().unwrap(), tr.flip_times.len());
        assert_eq!(tr.labels[0], Some(1));
        assert!((tr.times.last().unwrap() - spec.t_end).abs() < dt);
    }

    #[test]
    fn lattice_on_conserves_total_energy_without_flips() {
        let trap = TrapConfig::table1(76.0);
        let lat = lattice();
        let dt = max_stable_dt(&trap, Some(&lat)).unwrap() / 4.0;
        let init = sample_thermal_state(&trap, 1e-3, 2).unwrap();
        let spec = RunSpec {
            t_end: 5e-5,
            dt,
            record_every: 100,
            seed: 0,
        };
        let tr = integrate(&trap, Some(&lat), &FlipProcess::fixed(0), &init, &spec).unwrap();
        let tot: Vec<f64> = tr
            .energies
            .iter()
            .zip(&tr.lattice_energies)
            .map(|(a, b)| a + b)
            .collect();
        let spread = tot.iter().fold(f64::MIN, |a, &b| a.max(b))
            - tot.iter().fold(f64::MAX, |a, &b| a.min(b));
        assert!(spread < 1e-3 * tr.energies[0], "{spread:e}");
    }
}
