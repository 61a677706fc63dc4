//! Rigid asymmetric-top rotational structure.
//!
//! Hamiltonian blocks are built in the |J, k⟩ symmetric-top basis with the
//! a inertial axis as the molecule-fixed quantization axis (Iʳ representation:
//! a = z, b = x, c = y).

mod hamiltonian;
mod levels;
mod thermal;
mod transitions;

pub use hamiltonian::build_hamiltonian_block;
pub use levels::{auto_j_max, solve_levels, LevelTable, Manifold, RotationalState, StateLabel};
pub use thermal::{rotational_temperature, thermal_populations, thermally_occupied};
pub use transitions::{
    allowed_transitions, export_grotrian, manifold_line_strength, Band, GrotrianDocument,
    GrotrianLevel, GrotrianTransition, Transition, TransitionCatalog,
};

use serde::{Deserialize, Serialize};

use crate::constants::{polarizability_from_a3, AMU, DEBYE, GHZ};
use crate::error::{Error, Result};

/// Principal inertial axes of the molecule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    A,
    B,
    C,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::A, Axis::B, Axis::C];
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::A => "a",
            Axis::B => "b",
            Axis::C => "c",
        })
    }
}

/// Per-axis values along the a, b, c principal axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AxisTriple {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::A => self.a,
            Axis::B => self.b,
            Axis::C => self.c,
        }
    }

    pub fn mean(&self) -> f64 {
        (self.a + self.b + self.c) / 3.0
    }

    pub fn min(&self) -> f64 {
        self.a.min(self.b).min(self.c)
    }

    pub fn max(&self) -> f64 {
        self.a.max(self.b).max(self.c)
    }
}

/// Upper sanity bound on any dipole component.
const MAX_DIPOLE: f64 = 100.0 * DEBYE;

/// A rigid molecular species. All quantities SI: mass in kg, rotational
/// constants in Hz, dipole components in C·m, polarizabilities in C·m²·V⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularSpecies {
    pub name: String,
    pub mass: f64,
    pub rot_constants: AxisTriple,
    pub dipole: AxisTriple,
    pub polarizability: AxisTriple,
}

impl MolecularSpecies {
    /// Builds a species, rejecting it if any invariant fails.
    pub fn new(
        name: impl Into<String>,
        mass: f64,
        rot_constants: AxisTriple,
        dipole: AxisTriple,
        polarizability: AxisTriple,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            mass,
            rot_constants,
            dipole,
            polarizability,
        };
        let diags = s.diagnostics();
        if diags.is_empty() {
            Ok(s)
        } else {
            Err(Error::Config(diags.join("; ")))
        }
    }

    /// Collects every invariant violation.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let AxisTriple { a, b, c } = self.rot_constants;
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            out.push("rotational constants must be finite".to_string());
        } else if !(a >= b && b >= c && c > 0.0) {
            out.push(format!(
                "rotational constants must satisfy A >= B >= C > 0 (got A={a:e}, B={b:e}, C={c:e} Hz)"
            ));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            out.push(format!("mass must be positive (got {:e} kg)", self.mass));
        }
        for axis in Axis::ALL {
            let mu = self.dipole.get(axis);
            if !mu.is_finite() || mu.abs() > MAX_DIPOLE {
                out.push(format!(
                    "dipole component mu_{axis} = {mu:e} C m exceeds 100 D"
                ));
            }
        }
        let p = self.polarizability;
        if !(p.a.is_finite() && p.b.is_finite() && p.c.is_finite()) || p.mean() <= 0.0 {
            out.push("mean polarizability must be positive".to_string());
        }
        out
    }

    pub fn mean_polarizability(&self) -> f64 {
        self.polarizability.mean()
    }

    /// Anisotropy s = (α_a − (α_b + α_c)/2)/ᾱ, which reduces to (α_∥ − α_⊥)/ᾱ
    /// for a linear rotor.
    pub fn anisotropy(&self) -> f64 {
        let p = self.polarizability;
        (p.a - 0.5 * (p.b + p.c)) / p.mean()
    }

    /// Polarizability tensor of a linear (or cylindrically symmetric) rotor
    /// with mean `mean` and anisotropy `s`: α_∥ along a, α_⊥ along b and c.
    pub fn linear_polarizability(mean: f64, s: f64) -> AxisTriple {
        let perp = mean * (1.0 - s / 3.0);
        let par = perp + s * mean;
        AxisTriple::new(par, perp, perp)
    }

    /// The generic 76 amu molecule: 2 D along a, ᾱ = 2e-39 C m² V⁻¹,
    /// anisotropy 0.5 with a cylindrically symmetric tensor.
    pub fn generic76() -> Self {
        Self {
            name: "generic76".into(),
            mass: 76.0 * AMU,
            rot_constants: AxisTriple::new(9.0 * GHZ, 3.0 * GHZ, 2.8 * GHZ),
            dipole: AxisTriple::new(2.0 * DEBYE, 0.0, 0.0),
            polarizability: Self::linear_polarizability(2e-39, 0.5),
        }
    }

    /// Asymmetric top with constants representative of 1,2-propanediol.
    pub fn propanediol_like() -> Self {
        Self {
            name: "propanediol-like".into(),
            mass: 76.0 * AMU,
            rot_constants: AxisTriple::new(8.5 * GHZ, 3.6 * GHZ, 2.8 * GHZ),
            dipole: AxisTriple::new(1.2 * DEBYE, 1.9 * DEBYE, 0.4 * DEBYE),
            polarizability: AxisTriple::new(
                polarizability_from_a3(8.2),
                polarizability_from_a3(6.6),
                polarizability_from_a3(5.2),
            ),
        }
    }

    /// Linear-rotor stand-in for carbon monoxide (B ≈ 57.6 GHz). The A
    /// constant is set far above any cutoff so only k = 0 survives.
    pub fn co_like() -> Self {
        Self {
            name: "CO-like".into(),
            mass: 28.0 * AMU,
            rot_constants: AxisTriple::new(1e5 * GHZ, 57.636 * GHZ, 57.636 * GHZ),
            dipole: AxisTriple::new(0.11 * DEBYE, 0.0, 0.0),
            polarizability: Self::linear_polarizability(polarizability_from_a3(1.95), 0.27),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        for s in [
            MolecularSpecies::generic76(),
            MolecularSpecies::propanediol_like(),
            MolecularSpecies::co_like(),
        ] {
            assert!(
                s.diagnostics().is_empty(),
                "{}: {:?}",
                s.name,
                s.diagnostics()
            );
        }
    }

    #[test]
    fn generic76_polarizability() {
        let s = MolecularSpecies::generic76();
        assert!((s.mean_polarizability() - 2e-39).abs() < 1e-52);
        assert!((s.anisotropy() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_misordered_constants() {
        let mut s = MolecularSpecies::generic76();
        s.rot_constants = AxisTriple::new(1.0, 2.0, 3.0);
        assert_eq!(s.diagnostics().len(), 1);
    }

    #[test]
    fn rejects_huge_dipole_and_bad_mass() {
        let mut s = MolecularSpecies::generic76();
        s.dipole.b = 200.0 * DEBYE;
        s.mass = -1.0;
        assert_eq!(s.diagnostics().len(), 2);
    }
}
