//! Standing-wave optical lattice and the rotational-state-dependent potential
//! it imposes through the anisotropic polarizability.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Complex, Vector3};
use serde::{Deserialize, Serialize};

use crate::angular::{m_factor, reduced_k_part, TopState};
use crate::constants::{EPSILON_0, PLANCK, SPEED_OF_LIGHT};
use crate::error::{domain, Error, Result};
use crate::molspec::{build_hamiltonian_block, MolecularSpecies, RotationalState, StateLabel};

/// Two counter-propagating, linearly polarized beams forming a lattice along
/// `direction`. Lengths in metres, power in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub power_per_beam: f64,
    pub wavelength: f64,
    pub waist_radius: f64,
    /// Distance from a lattice intensity maximum to the molecule's trap site,
    /// measured along `direction`.
    pub offset_z0: f64,
    pub direction: Vector3<f64>,
    pub polarization: Vector3<f64>,
}

impl LatticeConfig {
    /// 1 W per beam at 1050 nm, 10 µm waist, λ/8 offset, propagating along
    /// (1,1,1)/√3 and polarized along (1,−1,0)/√2.
    pub fn table1() -> Self {
        let wavelength = 1050e-9;
        Self {
            power_per_beam: 1.0,
            wavelength,
            waist_radius: 10e-6,
            offset_z0: wavelength / 8.0,
            direction: Vector3::new(1.0, 1.0, 1.0).normalize(),
            polarization: Vector3::new(1.0, -1.0, 0.0).normalize(),
        }
    }

    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.wavelength > 0.0) {
            out.push(format!(
                "lattice wavelength must be positive (got {:e} m)",
                self.wavelength
            ));
        }
        if !(self.waist_radius > 0.0) {
            out.push(format!(
                "lattice waist must be positive (got {:e} m)",
                self.waist_radius
            ));
        }
        if !(self.power_per_beam >= 0.0) {
            out.push(format!(
                "lattice power must be non-negative (got {} W)",
                self.power_per_beam
            ));
        }
        if (self.direction.norm() - 1.0).abs() > 1e-12 {
            out.push("lattice direction must be a unit vector".into());
        }
        if (self.polarization.norm() - 1.0).abs() > 1e-12 {
            out.push("lattice polarization must be a unit vector".into());
        }
        if self.direction.dot(&self.polarization).abs() > 1e-12 {
            out.push("lattice polarization must be orthogonal to direction".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(d.join("; ")))
        }
    }
}

/// I₀ = 2P/(πw₀²).
pub fn peak_intensity(cfg: &LatticeConfig) -> f64 {
    2.0 * cfg.power_per_beam / (PI * cfg.waist_radius * cfg.waist_radius)
}

/// ⟨α_ZZ⟩ in a state quantized along lab Z.
fn alpha_zz(state: &RotationalState, species: &MolecularSpecies) -> f64 {
    let p = species.polarizability;
    let mean = p.mean();
    let w0 = (2.0 / 3.0) * (p.a - 0.5 * (p.b + p.c));
    let w2 = (p.b - p.c) / 6f64.sqrt();
    let weights = [
        (0, Complex::new(w0, 0.0)),
        (2, Complex::new(w2, 0.0)),
        (-2, Complex::new(w2, 0.0)),
    ];
    let top = TopState {
        j: state.j,
        m: state.m,
        coeffs: &state.eigvec,
    };
    let k_part = reduced_k_part(top, top, 2, &weights).re;
    mean + m_factor(state.j, state.m, 2, 0, state.j, state.m) * k_part
}

/// First-order effective polarizability Σ_g α_g⟨Φ²_{êg}⟩ of `state` along the
/// unit vector `axis`, given in the frame where the state's m is quantized
/// along z. Lattice-induced mixing between rotational states is ignored.
pub fn alpha_eff(
    state: &RotationalState,
    species: &MolecularSpecies,
    axis: &Vector3<f64>,
) -> Result<f64> {
    check_pairing(state, species)?;
    let n = axis.norm();
    if !(n > 0.0) {
        return domain("polarization axis must be nonzero");
    }
    let c = axis.z / n;
    let p2 = 0.5 * (3.0 * c * c - 1.0);
    let mean = species.mean_polarizability();
    Ok(mean + p2 * (alpha_zz(state, species) - mean))
}

fn check_pairing(state: &RotationalState, species: &MolecularSpecies) -> Result<()> {
    if state.eigvec.len() != (2 * state.j + 1) as usize || state.m.abs() > state.j {
        return domain(format!("state {} is malformed", state.label()));
    }
    let h = build_hamiltonian_block(species, state.j)?;
    let v = nalgebra::DVector::from_column_slice(&state.eigvec);
    let resid = (&h * &v - &v * state.energy).norm();
    if resid > 1e-6 * h.norm().max(1.0) {
        return domain(format!(
            "state {} is not an eigenstate of species {}",
            state.label(),
            species.name
        ));
    }
    Ok(())
}

/// Effective polarizabilities per state, with optional pinned values that
/// bypass the tensor computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolarizabilityModel {
    pub overrides: BTreeMap<StateLabel, f64>,
}

impl PolarizabilityModel {
    pub fn with_override(mut self, label: StateLabel, alpha: f64) -> Self {
        self.overrides.insert(label, alpha);
        self
    }

    /// α_eff along the lattice polarization, which is the quantization axis.
    pub fn alpha(&self, state: &RotationalState, species: &MolecularSpecies) -> Result<f64> {
        match self.overrides.get(&state.label()) {
            Some(&a) => Ok(a),
            None => alpha_eff(state, species, &Vector3::z()),
        }
    }
}

/// U(z) = U₀ cos(4π(z − z₀)/λ) along the lattice axis, with U₀ = α_eff I₀/(cε₀).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePotential {
    pub label: String,
    pub alpha_eff: f64,
    /// Depth in joules.
    pub u0: f64,
    pub wavelength: f64,
    pub offset: f64,
}

impl StatePotential {
    pub fn new(label: impl Into<String>, alpha_eff: f64, cfg: &LatticeConfig) -> Self {
        Self::from_intensity(
            label,
            alpha_eff,
            peak_intensity(cfg),
            cfg.wavelength,
            cfg.offset_z0,
        )
    }

    pub fn from_intensity(
        label: impl Into<String>,
        alpha_eff: f64,
        intensity: f64,
        wavelength: f64,
        offset: f64,
    ) -> Self {
        Self {
            label: label.into(),
            alpha_eff,
            u0: alpha_eff * intensity / (SPEED_OF_LIGHT * EPSILON_0),
            wavelength,
            offset,
        }
    }

    /// Depth U₀/h in Hz.
    pub fn u0_hz(&self) -> f64 {
        self.u0 / PLANCK
    }

    /// Wavenumber of the potential modulation, 4π/λ.
    pub fn k(&self) -> f64 {
        4.0 * PI / self.wavelength
    }

    pub fn energy(&self, z: f64) -> f64 {
        self.u0 * (self.k() * (z - self.offset)).cos()
    }

    /// −dU/dz.
    pub fn force(&self, z: f64) -> f64 {
        self.u0 * self.k() * (self.k() * (z - self.offset)).sin()
    }

    /// d²U/dz².
    pub fn curvature(&self, z: f64) -> f64 {
        -self.u0 * self.k() * self.k() * (self.k() * (z - self.offset)).cos()
    }

    /// `n` evenly spaced samples (z, U) over [z_lo, z_hi].
    pub fn sample(&self, z_lo: f64, z_hi: f64, n: usize) -> Vec<(f64, f64)> {
        let step = if n > 1 {
            (z_hi - z_lo) / (n - 1) as f64
        } else {
            0.0
        };
        (0..n)
            .map(|i| {
                let z = z_lo + step * i as f64;
                (z, self.energy(z))
            })
            .collect()
    }
}

pub fn potential_profile(
    state: &RotationalState,
    species: &MolecularSpecies,
    cfg: &LatticeConfig,
    model: &PolarizabilityModel,
) -> Result<StatePotential> {
    let a = model.alpha(state, species)?;
    Ok(StatePotential::new(state.label().to_string(), a, cfg))
}

/// ω_lattice = (16π²U₀/(λ²m))^{1/2} in rad/s.
pub fn lattice_secular_frequency(pot: &StatePotential, mass: f64) -> Result<f64> {
    if !(pot.u0 > 0.0) {
        return domain(format!(
            "lattice depth must be positive, got {:e} J",
            pot.u0
        ));
    }
    Ok((16.0 * PI * PI * pot.u0 / (pot.wavelength * pot.wavelength * mass)).sqrt())
}

/// Peak optical acceleration U₀·(4π/λ)/m.
pub fn max_acceleration(pot: &StatePotential, mass: f64) -> f64 {
    pot.u0.abs() * pot.k() / mass
}
