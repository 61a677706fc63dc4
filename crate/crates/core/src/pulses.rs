//! Internal-state dynamics under spatially uniform microwave or Raman drives,
//! in the rotating-wave approximation.
//!
//! Couplings enter the rotating-frame Hamiltonian (ħ = 1, rad/s) as
//! ½Ω e^{iφ}|i⟩⟨j| + h.c. while a field window is open; a field's detuning Δ
//! sits on the diagonal of its second state for the whole evolution, since
//! the frame rotates with the drive's local oscillator whether or not it is
//! gated on.

use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::constants::PLANCK;
use crate::error::{config, domain, Result};

type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveKind {
    Microwave,
    /// Effective two-level coupling driven by an amplitude-modulated laser.
    Raman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveField {
    /// State ids (i, j); the coupling is ½Ω e^{iφ}|i⟩⟨j| + h.c.
    pub pair: (usize, usize),
    /// Ω, rad/s.
    pub rabi: f64,
    /// Δ, rad/s.
    pub detuning: f64,
    pub phase: f64,
    /// (t_on, t_off) windows in seconds.
    pub windows: Vec<(f64, f64)>,
    pub kind: DriveKind,
}

impl DriveField {
    pub fn microwave(pair: (usize, usize), rabi: f64, windows: Vec<(f64, f64)>) -> Self {
        Self {
            pair,
            rabi,
            detuning: 0.0,
            phase: 0.0,
            windows,
            kind: DriveKind::Microwave,
        }
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    fn is_on(&self, t: f64) -> bool {
        self.windows.iter().any(|&(a, b)| t >= a && t < b)
    }
}

/// Pure internal state over a chosen subset of rotational state ids.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalState {
    pub ids: Vec<usize>,
    pub amps: Vec<C64>,
}

impl InternalState {
    /// All population in `ids[start]`.
    pub fn basis(ids: Vec<usize>, start: usize) -> Result<Self> {
        if start >= ids.len() {
            return domain(format!(
                "start index {start} outside basis of {}",
                ids.len()
            ));
        }
        let mut amps = vec![C64::new(0.0, 0.0); ids.len()];
        amps[start] = C64::new(1.0, 0.0);
        Ok(Self { ids, amps })
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub fn population(&self, id: usize) -> f64 {
        self.index_of(id).map_or(0.0, |i| self.amps[i].norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn validate_fields(state: &InternalState, fields: &[DriveField]) -> Result<Vec<(usize, usize)>> {
    let mut idx = Vec::with_capacity(fields.len());
    for (n, f) in fields.iter().enumerate() {
        let (Some(i), Some(j)) = (state.index_of(f.pair.0), state.index_of(f.pair.1)) else {
            return config(format!("field {n} couples a state outside the basis"));
        };
        if i == j {
            return config(format!("field {n} couples a state to itself"));
        }
        if !(f.rabi >= 0.0) || !f.detuning.is_finite() || !f.phase.is_finite() {
            return config(format!(
                "field {n} has invalid amplitude, detuning or phase"
            ));
        }
        let mut w = f.windows.clone();
        w.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (a, b) in &w {
            if !(a < b) {
                return config(format!("field {n} has an empty or reversed window"));
            }
        }
        if w.windows(2).any(|p| p[1].0 < p[0].1) {
            return config(format!("field {n} has overlapping windows"));
        }
        idx.push((i, j));
    }
    for a in 0..fields.len() {
        for b in a + 1..fields.len() {
            let same = {
                let (p, q) = (idx[a], idx[b]);
                p == q || p == (q.1, q.0)
            };
            if !same {
                continue;
            }
            let overlap = fields[a]
                .windows
                .iter()
                .any(|&(s0, e0)| fields[b].windows.iter().any(|&(s1, e1)| s0 < e1 && s1 < e0));
            if overlap {
                return config(format!(
                    "fields {a} and {b} drive the same pair at the same time"
                ));
            }
        }
    }
    Ok(idx)
}

fn hamiltonian(n: usize, fields: &[DriveField], idx: &[(usize, usize)], t: f64) -> DMatrix<C64> {
    let mut h = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (f, &(i, j)) in fields.iter().zip(idx) {
        h[(j, j)] += C64::new(f.detuning, 0.0);
        if f.is_on(t) {
            let c = C64::from_polar(0.5 * f.rabi, f.phase);
            h[(i, j)] += c;
            h[(j, i)] += c.conj();
        }
    }
    h
}

/// Eigen-decomposed constant Hamiltonian: exp(−iHτ)ψ = V e^{−iΛτ} V†ψ.
struct Propagator {
    vecs: DMatrix<C64>,
    vals: Vec<f64>,
}

impl Propagator {
    fn new(h: DMatrix<C64>) -> Self {
        let eig = h.symmetric_eigen();
        Self {
            vecs: eig.eigenvectors,
            vals: eig.eigenvalues.iter().copied().collect(),
        }
    }

    fn apply(&self, psi: &mut DVector<C64>, tau: f64) {
        let mut c = self.vecs.ad_mul(psi);
        for (ci, &l) in c.iter_mut().zip(&self.vals) {
            *ci *= C64::from_polar(1.0, -l * tau);
        }
        *psi = &self.vecs * c;
    }
}

fn breakpoints(fields: &[DriveField], t_end: f64) -> Vec<f64> {
    let mut b = vec![0.0, t_end];
    for f in fields {
        for &(a, e) in &f.windows {
            b.extend([a, e].into_iter().filter(|&x| x > 0.0 && x < t_end));
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

fn run(
    state: &InternalState,
    fields: &[DriveField],
    t_end: f64,
    sample_dt: Option<f64>,
) -> Result<Vec<(f64, InternalState)>> {
    if !(t_end >= 0.0) {
        return domain(format!("t_end must be non-negative, got {t_end}"));
    }
    let idx = validate_fields(state, fields)?;
    let n = state.ids.len();
    let mut psi = DVector::from_column_slice(&state.amps);
    let snap = |psi: &DVector<C64>| InternalState {
        ids: state.ids.clone(),
        amps: psi.iter().copied().collect(),
    };
    let mut out = vec![(0.0, snap(&psi))];
    let bps = breakpoints(fields, t_end);
    let mut t = 0.0;
    let mut next_sample = 1usize;
    for seg in bps.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let prop = Propagator::new(hamiltonian(n, fields, &idx, 0.5 * (a + b)));
        if let Some(dt) = sample_dt {
            loop {
                let ts = next_sample as f64 * dt;
                if ts > b || ts > t_end {
                    break;
                }
                prop.apply(&mut psi, ts - t);
                t = ts;
                out.push((t, snap(&psi)));
                next_sample += 1;
            }
        }
        if b > t {
            prop.apply(&mut psi, b - t);
            t = b;
        }
    }
    if out.last().map(|x| x.0) != Some(t_end) {
        out.push((t_end, snap(&psi)));
    }
    Ok(out)
}

/// Piecewise-constant propagation sampled every `dt` (plus the final time).
/// Requires dt ≤ 0.02·2π / max(Ω, |Δ|) over all fields.
pub fn evolve(
    state: &InternalState,
    fields: &[DriveField],
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, InternalState)>> {
    let fastest = fields
        .iter()
        .map(|f| f.rabi.max(f.detuning.abs()))
        .fold(0.0, f64::max);
    if !(dt > 0.0) || (fastest > 0.0 && dt > 0.02 * std::f64::consts::TAU / fastest) {
        return domain(format!(
            "time step {dt:e} s too coarse for the fastest rate {fastest:e} rad/s"
        ));
    }
    run(state, fields, t_end, Some(dt))
}

/// Final state only; exact for piecewise-constant fields with no step limit.
pub fn evolve_final(
    state: &InternalState,
    fields: &[DriveField],
    t_end: f64,
) -> Result<InternalState> {
    Ok(run(state, fields, t_end, None)?
        .pop()
        .expect("at least one sample")
        .1)
}

/// Ω_R = 2π·V·D/(d·h), in rad/s.
pub fn rabi_from_voltage(voltage: f64, dipole: f64, electrode_spacing: f64) -> f64 {
    std::f64::consts::TAU * voltage * dipole / (electrode_spacing * PLANCK)
}

/// Pseudorandom π-pulse train: one pulse at t = 0, then exponential gaps of
/// mean 1/rate until `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub pair: (usize, usize),
    pub rabi: f64,
    pub times: Vec<f64>,
}

impl PulseSchedule {
    /// π/Ω.
    pub fn pulse_duration(&self) -> f64 {
        std::f64::consts::PI / self.rabi
    }

    /// Drive windows for [`evolve`]; pulses that would overlap are merged.
    pub fn to_field(&self) -> DriveField {
        let d = self.pulse_duration();
        let mut windows: Vec<(f64, f64)> = Vec::new();
        for &t in &self.times {
            match windows.last_mut() {
                Some(w) if t <= w.1 => w.1 = t + d,
                _ => windows.push((t, t + d)),
            }
        }
        DriveField::microwave(self.pair, self.rabi, windows)
    }
}

/// Poisson arrival times on [0, t_end) starting with t = 0.
pub fn poisson_times<R: rand::Rng>(rate: f64, t_end: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(rate >= 0.0) {
        return domain(format!("flip rate must be non-negative, got {rate}"));
    }
    let mut times = vec![0.0];
    if rate == 0.0 {
        return Ok(times);
    }
    let exp = Exp::new(rate).map_err(|e| crate::Error::Domain(e.to_string()))?;
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t >= t_end {
            break;
        }
        times.push(t);
    }
    Ok(times)
}

pub fn pi_pulse_schedule(
    pair: (usize, usize),
    rabi: f64,
    rate: f64,
    t_end: f64,
    seed: u64,
) -> Result<PulseSchedule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(PulseSchedule {
        pair,
        rabi,
        times: poisson_times(rate, t_end, &mut rng)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Enantiomer {
    R,
    S,
}

/// Simultaneous three-field drive of a closed loop A↔B, A↔C, C↔B. Arrays
/// are ordered [AB, AC, CB]; each field is on from 0 to its duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiralSetup {
    /// State ids [A, B, C].
    pub states: [usize; 3],
    pub phases: [f64; 3],
    pub rabi: [f64; 3],
    pub durations: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiralResult {
    #[serde(rename = "P_B_R")]
    pub p_b_r: f64,
    #[serde(rename = "P_B_S")]
    pub p_b_s: f64,
    pub contrast: f64,
}

impl ChiralSetup {
    /// Equal Rabi frequencies on all three legs, common duration, phases
    /// (0, 0, `loop_phase`).
    pub fn symmetric(rabi: f64, loop_phase: f64, duration: f64) -> Self {
        Self {
            states: [0, 1, 2],
            phases: [0.0, 0.0, loop_phase],
            rabi: [rabi; 3],
            durations: [duration; 3],
        }
    }

    fn fields(&self, enantiomer: Enantiomer) -> [DriveField; 3] {
        let [a, b, c] = self.states;
        // the enantiomers differ in the sign of μ_a·μ_b·μ_c, carried here by the C↔B leg
        let flip = match enantiomer {
            Enantiomer::R => 0.0,
            Enantiomer::S => std::f64::consts::PI,
        };
        let mk = |k: usize, pair, extra: f64| {
            DriveField::microwave(pair, self.rabi[k], vec![(0.0, self.durations[k])])
                .with_phase(self.phases[k] + extra)
        };
        [mk(0, (a, b), 0.0), mk(1, (a, c), 0.0), mk(2, (c, b), flip)]
    }
}

/// Population transferred from A to B for one enantiomer.
pub fn chiral_transfer(setup: &ChiralSetup, enantiomer: Enantiomer) -> Result<f64> {
    let [a, b, c] = setup.states;
    if a == b || b == c || a == c {
        return config("chiral loop needs three distinct states");
    }
    let t_end = setup.durations.iter().copied().fold(0.0, f64::max);
    let fields: Vec<DriveField> = setup
        .fields(enantiomer)
        .into_iter()
        .filter(|f| f.windows[0].1 > 0.0)
        .collect();
    let psi0 = InternalState::basis(vec![a, b, c], 0)?;
    Ok(evolve_final(&psi0, &fields, t_end)?.population(b))
}

pub fn chiral_contrast(setup: &ChiralSetup) -> Result<ChiralResult> {
    let r = chiral_transfer(setup, Enantiomer::R)?;
    let s = chiral_transfer(setup, Enantiomer::S)?;
    Ok(ChiralResult {
        p_b_r: r,
        p_b_s: s,
        contrast: (r - s).abs(),
    })
}

/// Searches the loop phase and common duration of a symmetric three-field
/// drive for maximum enantiomer contrast: a coarse grid followed by
/// alternating golden-section refinement.
pub fn optimize_chiral(rabi: f64) -> Result<(ChiralSetup, ChiralResult)> {
    if !(rabi > 0.0) {
        return domain("Rabi frequency must be positive");
    }
    let tau_max = 4.0 * std::f64::consts::PI / rabi;
    let score = |phi: f64, tau: f64| -> f64 {
        chiral_contrast(&ChiralSetup::symmetric(rabi, phi, tau)).map_or(0.0, |r| r.contrast)
    };
    let (mut best_phi, mut best_tau, mut best) = (0.0, 0.0, -1.0);
    for i in 0..36 {
        let phi = std::f64::consts::TAU * i as f64 / 36.0;
        for k in 1..=80 {
            let tau = tau_max * k as f64 / 80.0;
            let s = score(phi, tau);
            if s > best {
                (best_phi, best_tau, best) = (phi, tau, s);
            }
        }
    }
    let mut dphi = std::f64::consts::TAU / 36.0;
    let mut dtau = tau_max / 80.0;
    for _ in 0..6 {
        best_phi = golden_max(|p| score(p, best_tau), best_phi - dphi, best_phi + dphi);
        best_tau = golden_max(|t| score(best_phi, t), best_tau - dtau, best_tau + dtau);
        dphi *= 0.5;
        dtau *= 0.5;
    }
    let setup = ChiralSetup::symmetric(rabi, best_phi, best_tau);
    let result = chiral_contrast(&setup)?;
    Ok((setup, result))
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{DEBYE, MHZ};
    use std::f64::consts::{PI, TAU};

    fn two_level() -> InternalState {
        InternalState::basis(vec![10, 11], 0).unwrap()
    }

    #[test]
    fn resonant_pi_pulse() {
        let om = TAU * 10.0 * MHZ;
        let f = DriveField::microwave((10, 11), om, vec![(0.0, PI / om)]);
        let traj = evolve(&two_level(), &[f], PI / om, 1e-10).unwrap();
        let end = &traj.last().unwrap().1;
        assert!((end.population(11) - 1.0).abs() < 1e-9);
        for (_, s) in &traj {
            assert!((s.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn detuned_max_transfer() {
        let om = 1e6;
        let delta = 0.7e6;
        let f = DriveField::microwave((10, 11), om, vec![(0.0, 1.0)]).with_detuning(delta);
        let gen = (om * om + delta * delta).sqrt();
        let t = PI / gen;
        let end = evolve_final(&two_level(), &[f], t).unwrap();
        let want = om * om / (om * om + delta * delta);
        assert!((end.population(11) - want).abs() < 1e-12);
    }

    #[test]
    fn conflicting_fields_rejected() {
        let a = DriveField::microwave((10, 11), 1e6, vec![(0.0, 2e-6)]);
        let b = DriveField::microwave((11, 10), 1e6, vec![(1e-6, 3e-6)]);
        assert!(evolve_final(&two_level(), &[a.clone(), b], 3e-6).is_err());
        let c = DriveField::microwave((10, 11), 1e6, vec![(0.0, 2e-6), (1e-6, 4e-6)]);
        assert!(evolve_final(&two_level(), &[c], 3e-6).is_err());
        let d = DriveField::microwave((10, 11), 1e6, vec![(2e-6, 1e-6)]);
        assert!(evolve_final(&two_level(), &[d], 3e-6).is_err());
        let e = DriveField::microwave((10, 12), 1e6, vec![(0.0, 1e-6)]);
        assert!(evolve_final(&two_level(), &[e], 3e-6).is_err());
        // back-to-back on the same pair is fine
        let f = DriveField::microwave((11, 10), 1e6, vec![(2e-6, 3e-6)]);
        assert!(evolve_final(&two_level(), &[a, f], 3e-6).is_ok());
    }

    #[test]
    fn coarse_step_rejected() {
        let f = DriveField::microwave((10, 11), 1e6, vec![(0.0, 1e-5)]);
        assert!(evolve(&two_level(), &[f], 1e-5, 1e-6).is_err());
    }

    #[test]
    fn rabi_from_table_values() {
        let om = rabi_from_voltage(0.3, 2.0 * DEBYE, 300e-6);
        assert!((om / TAU / (10.0 * MHZ) - 1.0).abs() < 0.05);
        assert_eq!(rabi_from_voltage(0.0, 2.0 * DEBYE, 300e-6), 0.0);
        let half = rabi_from_voltage(0.3, 2.0 * DEBYE, 600e-6);
        assert!((om / half - 2.0).abs() < 1e-12);
    }

    #[test]
    fn schedule_basics() {
        let s = pi_pulse_schedule((0, 1), 1e7, 0.0, 1e-3, 3).unwrap();
        assert_eq!(s.times, vec![0.0]);
        let a = pi_pulse_schedule((0, 1), 1e7, 2e6, 1e-4, 9).unwrap();
        let b = pi_pulse_schedule((0, 1), 1e7, 2e6, 1e-4, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.times.windows(2).all(|w| w[1] > w[0]));
        assert!(pi_pulse_schedule((0, 1), 1e7, -1.0, 1e-4, 9).is_err());
    }

    #[test]
    fn schedule_merges_overlapping_pulses() {
        let s = PulseSchedule {
            pair: (0, 1),
            rabi: PI,
            times: vec![0.0, 0.5, 3.0],
        };
        assert_eq!(s.to_field().windows, vec![(0.0, 1.5), (3.0, 4.0)]);
    }

    #[test]
    fn chiral_degenerate_ids() {
        let mut s = ChiralSetup::symmetric(1e6, PI / 2.0, 1e-6);
        s.states = [0, 0, 2];
        assert!(chiral_transfer(&s, Enantiomer::R).is_err());
    }

    #[test]
    fn chiral_single_path_has_no_handedness() {
        let mut s = ChiralSetup::symmetric(1e6, 0.3, 2.1e-6);
        s.rabi[2] = 0.0;
        let r = chiral_contrast(&s).unwrap();
        assert!(r.contrast < 1e-12);
    }

    #[test]
    fn optimizer_reaches_high_contrast() {
        let (setup, r) = optimize_chiral(TAU * 10.0 * MHZ).unwrap();
        assert!(r.contrast >= 0.99, "{r:?} {setup:?}");
    }
}
