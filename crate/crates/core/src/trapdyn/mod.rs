//! Classical motion of a two-ion crystal (laser-coolable atom + molecule) in a
//! harmonic pseudopotential with Coulomb repulsion and a state-dependent
//! optical lattice acting on the molecule.

mod crystal;
mod dynamics;
mod heating;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::{AMU, ELEMENTARY_CHARGE};
use crate::error::{config, Result};

pub use crystal::{equilibrium_positions, normal_modes, sample_thermal_state, NormalModes};
pub use dynamics::{
    integrate, loaded_equilibrium, max_stable_dt, EnsembleTrajectory, FlipProcess, LatticeDrive,
    RunSpec,
};
pub use heating::{
    heating_rate, impulse_scaling, loaded_temperature, mean_occupation, temperature_of,
    HeatingEstimate, HeatingRun, HeatingSummary, ImpulseScaling,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ion {
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
}

impl Ion {
    pub fn singly_charged(mass_amu: f64) -> Self {
        Self {
            mass: mass_amu * AMU,
            charge: ELEMENTARY_CHARGE,
        }
    }
}

/// Which ion sits on the negative-z side of the crystal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrystalOrder {
    #[default]
    AtomFirst,
    MoleculeFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// (ωx, ωy, ωz) of the atomic ion, rad/s. The molecule's radial
    /// frequencies scale as m_atom/m_mol and its axial one as √(m_atom/m_mol).
    pub secular_freqs: Vector3<f64>,
    pub atom: Ion,
    pub molecule: Ion,
    #[serde(default)]
    pub order: CrystalOrder,
    /// Switch for the ion–ion repulsion; off gives two independent oscillators.
    #[serde(default = "yes")]
    pub coulomb: bool,
}

fn yes() -> bool {
    true
}

impl TrapConfig {
    /// 88 amu atom, 2π·(1, 1, 0.3) MHz, singly charged molecule of the given mass.
    pub fn table1(molecule_mass_amu: f64) -> Self {
        let w = std::f64::consts::TAU * 1e6;
        Self {
            secular_freqs: Vector3::new(w, w, 0.3 * w),
            atom: Ion::singly_charged(88.0),
            molecule: Ion::singly_charged(molecule_mass_amu),
            order: CrystalOrder::AtomFirst,
            coulomb: true,
        }
    }

    /// Same frequencies scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            secular_freqs: self.secular_freqs * factor,
            ..self.clone()
        }
    }

    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, w) in ["x", "y", "z"].iter().zip(self.secular_freqs.iter()) {
            if !(*w > 0.0) || !w.is_finite() {
                out.push(format!(
                    "secular frequency omega_{name} must be positive, got {w}"
                ));
            }
        }
        for (name, ion) in [("atom", &self.atom), ("molecule", &self.molecule)] {
            if !(ion.mass > 0.0) || !ion.mass.is_finite() {
                out.push(format!("{name} mass must be positive, got {}", ion.mass));
            }
            if (ion.charge / ELEMENTARY_CHARGE - 1.0).abs() > 1e-9 {
                out.push(format!("{name} charge must be +e, got {:e} C", ion.charge));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            config(d.join("; "))
        }
    }

    /// Pseudopotential spring constants (N/m) per axis for atom (0) and molecule (1).
    pub fn spring_constants(&self) -> [Vector3<f64>; 2] {
        let ma = self.atom.mass;
        let mm = self.molecule.mass;
        let w2 = self.secular_freqs.component_mul(&self.secular_freqs);
        let atom = w2 * ma;
        let mol = Vector3::new(w2.x * ma * ma / mm, w2.y * ma * ma / mm, w2.z * ma);
        [atom, mol]
    }

    pub fn masses(&self) -> [f64; 2] {
        [self.atom.mass, self.molecule.mass]
    }

    /// Single-ion secular frequencies of the molecule, rad/s.
    pub fn molecule_secular_freqs(&self) -> Vector3<f64> {
        let k = self.spring_constants()[1];
        k.map(|x| (x / self.molecule.mass).sqrt())
    }
}

/// Positions and velocities of atom (index 0) and molecule (index 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpace {
    pub pos: [Vector3<f64>; 2],
    pub vel: [Vector3<f64>; 2],
}
