//! On-disk JSON schemas for species and trap/lattice files, with
//! validation that reports every violation rather than the first.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constants::{polarizability_from_a3, polarizability_to_a3, AMU, DEBYE, GHZ, MHZ};
use crate::error::{Error, Result};
use crate::molspec::{AxisTriple, MolecularSpecies, StateLabel};
use crate::optics::{LatticeConfig, PolarizabilityModel};
use crate::protocol::Thermometer;
use crate::trapdyn::{CrystalOrder, HeatingRun, Ion, TrapConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SpeciesFile {
    pub name: String,
    pub mass_amu: f64,
    pub A_GHz: f64,
    pub B_GHz: f64,
    pub C_GHz: f64,
    pub mu_a_D: f64,
    pub mu_b_D: f64,
    pub mu_c_D: f64,
    pub alpha_a_A3: f64,
    pub alpha_b_A3: f64,
    pub alpha_c_A3: f64,
}

impl SpeciesFile {
    pub fn from_species(s: &MolecularSpecies) -> Self {
        Self {
            name: s.name.clone(),
            mass_amu: s.mass / AMU,
            A_GHz: s.rot_constants.a / GHZ,
            B_GHz: s.rot_constants.b / GHZ,
            C_GHz: s.rot_constants.c / GHZ,
            mu_a_D: s.dipole.a / DEBYE,
            mu_b_D: s.dipole.b / DEBYE,
            mu_c_D: s.dipole.c / DEBYE,
            alpha_a_A3: polarizability_to_a3(s.polarizability.a),
            alpha_b_A3: polarizability_to_a3(s.polarizability.b),
            alpha_c_A3: polarizability_to_a3(s.polarizability.c),
        }
    }

    /// Unchecked conversion; see [`MolecularSpecies::diagnostics`].
    pub fn to_species(&self) -> MolecularSpecies {
        MolecularSpecies {
            name: self.name.clone(),
            mass: self.mass_amu * AMU,
            rot_constants: AxisTriple::new(self.A_GHz * GHZ, self.B_GHz * GHZ, self.C_GHz * GHZ),
            dipole: AxisTriple::new(
                self.mu_a_D * DEBYE,
                self.mu_b_D * DEBYE,
                self.mu_c_D * DEBYE,
            ),
            polarizability: AxisTriple::new(
                polarizability_from_a3(self.alpha_a_A3),
                polarizability_from_a3(self.alpha_b_A3),
                polarizability_from_a3(self.alpha_c_A3),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct TrapSection {
    pub omega_x_MHz: f64,
    pub omega_y_MHz: f64,
    pub omega_z_MHz: f64,
    pub atom_mass_amu: f64,
    #[serde(default)]
    pub crystal_order: CrystalOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct LatticeSection {
    pub power_W: f64,
    pub wavelength_nm: f64,
    pub waist_um: f64,
    pub offset_over_lambda: f64,
    pub direction: [f64; 3],
    pub polarization: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct DriveSection {
    pub voltage_mV: f64,
    pub electrode_spacing_um: f64,
    pub flip_rate_MHz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct HeatingSection {
    /// α_eff of the two dithered states, C·m²/V.
    pub alpha_pair: [f64; 2],
    /// α_eff of an undriven third state.
    pub alpha_fixed: f64,
    pub n_traj: usize,
    pub t_end_ms: f64,
    pub t_init_mK: f64,
    pub n_windows: usize,
    /// Integration step in ns; absent picks 90% of the stability limit.
    #[serde(default)]
    pub dt_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ThermometerSection {
    pub threshold_mK: f64,
    pub false_positive: f64,
    pub false_negative: f64,
}

/// Trap, lattice, drive and readout settings in one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapFile {
    pub trap: TrapSection,
    pub lattice: LatticeSection,
    pub drive: DriveSection,
    pub heating: HeatingSection,
    pub thermometer: ThermometerSection,
    /// α_eff overrides keyed by state label `J_KaKc,m`, C·m²/V.
    #[serde(default)]
    pub alpha_override: BTreeMap<String, f64>,
}

impl TrapFile {
    pub fn table1() -> Self {
        Self {
            trap: TrapSection {
                omega_x_MHz: 1.0,
                omega_y_MHz: 1.0,
                omega_z_MHz: 0.3,
                atom_mass_amu: 88.0,
                crystal_order: CrystalOrder::AtomFirst,
            },
            lattice: LatticeSection {
                power_W: 1.0,
                wavelength_nm: 1050.0,
                waist_um: 10.0,
                offset_over_lambda: 0.125,
                direction: [1.0, 1.0, 1.0],
                polarization: [1.0, -1.0, 0.0],
            },
            drive: DriveSection {
                voltage_mV: 300.0,
                electrode_spacing_um: 300.0,
                flip_rate_MHz: 2.0,
            },
            heating: HeatingSection {
                alpha_pair: [2.0e-39, 1.7e-39],
                alpha_fixed: 1.85e-39,
                n_traj: 50,
                t_end_ms: 2.0,
                t_init_mK: 0.01,
                n_windows: 20,
                dt_ns: None,
            },
            thermometer: ThermometerSection {
                threshold_mK: 0.1,
                false_positive: 0.02,
                false_negative: 0.02,
            },
            alpha_override: BTreeMap::from([
                ("0_00,0".into(), 2.0e-39),
                ("1_01,0".into(), 1.7e-39),
            ]),
        }
    }

    pub fn trap_config(&self, species: &MolecularSpecies) -> TrapConfig {
        let tau = std::f64::consts::TAU;
        TrapConfig {
            secular_freqs: Vector3::new(
                tau * self.trap.omega_x_MHz * MHZ,
                tau * self.trap.omega_y_MHz * MHZ,
                tau * self.trap.omega_z_MHz * MHZ,
            ),
            atom: Ion::singly_charged(self.trap.atom_mass_amu),
            molecule: Ion::singly_charged(species.mass / AMU),
            order: self.trap.crystal_order,
            coulomb: true,
        }
    }

    /// Direction and polarization are normalized; a zero vector stays zero
    /// and fails validation.
    pub fn lattice_config(&self) -> LatticeConfig {
        let unit = |v: [f64; 3]| {
            let v = Vector3::from(v);
            let n = v.norm();
            if n > 0.0 {
                v / n
            } else {
                v
            }
        };
        let l = &self.lattice;
        LatticeConfig {
            power_per_beam: l.power_W,
            wavelength: l.wavelength_nm * 1e-9,
            waist_radius: l.waist_um * 1e-6,
            offset_z0: l.offset_over_lambda * l.wavelength_nm * 1e-9,
            direction: unit(l.direction),
            polarization: unit(l.polarization),
        }
    }

    pub fn heating_run(&self, seed: u64) -> HeatingRun {
        let h = &self.heating;
        HeatingRun {
            n_traj: h.n_traj,
            t_end: h.t_end_ms * 1e-3,
            dt: h.dt_ns.map(|d| d * 1e-9),
            t_init: h.t_init_mK * 1e-3,
            n_windows: h.n_windows,
            seed,
            ..HeatingRun::default()
        }
    }

    pub fn thermometer(&self) -> Thermometer {
        Thermometer {
            threshold_t: self.thermometer.threshold_mK * 1e-3,
            false_positive: self.thermometer.false_positive,
            false_negative: self.thermometer.false_negative,
        }
    }

    /// Γ_flip in s⁻¹.
    pub fn flip_rate(&self) -> f64 {
        self.drive.flip_rate_MHz * MHZ
    }

    pub fn polarizability_model(&self) -> Result<PolarizabilityModel> {
        let mut m = PolarizabilityModel::default();
        for (k, &v) in &self.alpha_override {
            let label: StateLabel = k
                .parse()
                .map_err(|_| Error::Config(format!("alpha_override: bad state label {k:?}")))?;
            m = m.with_override(label, v);
        }
        Ok(m)
    }

    /// Semantic checks on an already-parsed file.
    pub fn diagnostics(&self, species: Option<&MolecularSpecies>) -> Vec<String> {
        let mut out = Vec::new();
        let t = &self.trap;
        for (k, v) in [
            ("omega_x_MHz", t.omega_x_MHz),
            ("omega_y_MHz", t.omega_y_MHz),
            ("omega_z_MHz", t.omega_z_MHz),
            ("atom_mass_amu", t.atom_mass_amu),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                out.push(format!("trap.{k}: must be positive, got {v}"));
            }
        }
        if t.omega_z_MHz >= t.omega_x_MHz.min(t.omega_y_MHz) {
            out.push(
                "trap.omega_z_MHz: must be below both radial frequencies for an axial crystal"
                    .into(),
            );
        }
        let l = &self.lattice;
        if !(l.wavelength_nm > 0.0) {
            out.push(format!(
                "lattice.wavelength_nm: must be positive, got {}",
                l.wavelength_nm
            ));
        }
        if !(l.waist_um > 0.0) {
            out.push(format!(
                "lattice.waist_um: must be positive, got {}",
                l.waist_um
            ));
        }
        if !(l.power_W >= 0.0) {
            out.push(format!(
                "lattice.power_W: must be non-negative, got {}",
                l.power_W
            ));
        }
        if !l.offset_over_lambda.is_finite() {
            out.push("lattice.offset_over_lambda: must be finite".into());
        }
        let d = Vector3::from(l.direction);
        let p = Vector3::from(l.polarization);
        if !(d.norm() > 0.0) {
            out.push("lattice.direction: must be a non-zero vector".into());
        }
        if !(p.norm() > 0.0) {
            out.push("lattice.polarization: must be a non-zero vector".into());
        }
        if d.norm() > 0.0 && p.norm() > 0.0 && (d.dot(&p) / (d.norm() * p.norm())).abs() > 1e-9 {
            out.push("lattice.polarization: must be orthogonal to lattice.direction".into());
        }
        let dr = &self.drive;
        if !(dr.voltage_mV >= 0.0) {
            out.push(format!(
                "drive.voltage_mV: must be non-negative, got {}",
                dr.voltage_mV
            ));
        }
        if !(dr.electrode_spacing_um > 0.0) {
            out.push(format!(
                "drive.electrode_spacing_um: must be positive, got {}",
                dr.electrode_spacing_um
            ));
        }
        if !(dr.flip_rate_MHz >= 0.0) {
            out.push(format!(
                "drive.flip_rate_MHz: must be non-negative, got {}",
                dr.flip_rate_MHz
            ));
        }
        let h = &self.heating;
        if h.n_traj < 2 {
            out.push(format!("heating.n_traj: need at least 2, got {}", h.n_traj));
        }
        if !(h.t_end_ms > 0.0) {
            out.push(format!(
                "heating.t_end_ms: must be positive, got {}",
                h.t_end_ms
            ));
        }
        if !(h.t_init_mK >= 0.0) {
            out.push(format!(
                "heating.t_init_mK: must be non-negative, got {}",
                h.t_init_mK
            ));
        }
        if h.n_windows < 2 {
            out.push(format!(
                "heating.n_windows: need at least 2, got {}",
                h.n_windows
            ));
        }
        if matches!(h.dt_ns, Some(x) if !(x > 0.0)) {
            out.push("heating.dt_ns: must be positive".into());
        }
        let th = &self.thermometer;
        if !(th.threshold_mK > 0.0) {
            out.push(format!(
                "thermometer.threshold_mK: must be positive, got {}",
                th.threshold_mK
            ));
        }
        for (k, v) in [
            ("false_positive", th.false_positive),
            ("false_negative", th.false_negative),
        ] {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("thermometer.{k}: must lie in [0, 1], got {v}"));
            }
        }
        for k in self.alpha_override.keys() {
            if k.parse::<StateLabel>().is_err() {
                out.push(format!("alpha_override: bad state label {k:?}"));
            }
        }
        if let Some(s) = species {
            if self.trap_config(s).diagnostics().is_empty() && out.is_empty() {
                if let Err(e) = crate::trapdyn::normal_modes(&self.trap_config(s)) {
                    out.push(format!("trap: {e}"));
                }
            }
        }
        out
    }
}

/// Parses each top-level section separately so that every schema error is
/// reported, prefixed with its section name. Unknown sections are reported
/// but do not stop the known ones from being parsed.
fn parse_sections<T: DeserializeOwned>(
    v: &Value,
    known: &[&str],
    errs: &mut Vec<String>,
) -> Option<T> {
    let Value::Object(map) = v else {
        errs.push("top level: expected a JSON object".into());
        return None;
    };
    let mut broken = false;
    for k in map.keys() {
        if !known.contains(&k.as_str()) {
            errs.push(format!("{k}: unknown section"));
        }
    }
    for k in known {
        if k != &"alpha_override" && !map.contains_key(*k) {
            errs.push(format!("{k}: missing section"));
            broken = true;
        }
    }
    let mut kept = serde_json::Map::new();
    for (k, sub) in map {
        if !known.contains(&k.as_str()) {
            continue;
        }
        let r = match k.as_str() {
            "trap" => check::<TrapSection>(sub),
            "lattice" => check::<LatticeSection>(sub),
            "drive" => check::<DriveSection>(sub),
            "heating" => check::<HeatingSection>(sub),
            "thermometer" => check::<ThermometerSection>(sub),
            _ => check::<BTreeMap<String, f64>>(sub),
        };
        if let Err(e) = r {
            errs.push(format!("{k}: {e}"));
            broken = true;
        }
        kept.insert(k.clone(), sub.clone());
    }
    if broken {
        return None;
    }
    serde_json::from_value(Value::Object(kept))
        .map_err(|e| errs.push(e.to_string()))
        .ok()
}

fn check<T: DeserializeOwned>(v: &Value) -> std::result::Result<(), serde_json::Error> {
    serde_json::from_value::<T>(v.clone()).map(|_| ())
}

const TRAP_SECTIONS: &[&str] = &[
    "trap",
    "lattice",
    "drive",
    "heating",
    "thermometer",
    "alpha_override",
];

/// Schema and semantic diagnostics for a trap file given as JSON.
pub fn validate_trap_value(
    v: &Value,
    species: Option<&MolecularSpecies>,
) -> (Option<TrapFile>, Vec<String>) {
    let mut errs = Vec::new();
    let parsed: Option<TrapFile> = parse_sections(v, TRAP_SECTIONS, &mut errs);
    if let Some(f) = &parsed {
        errs.extend(f.diagnostics(species));
    }
    (parsed, errs)
}

/// Schema and semantic diagnostics for a species file given as JSON.
pub fn validate_species_value(v: &Value) -> (Option<MolecularSpecies>, Vec<String>) {
    match serde_json::from_value::<SpeciesFile>(v.clone()) {
        Ok(f) => {
            let s = f.to_species();
            let d = s
                .diagnostics()
                .into_iter()
                .map(|m| format!("species: {m}"))
                .collect();
            (Some(s), d)
        }
        Err(e) => (None, vec![format!("species: {e}")]),
    }
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Sets a dotted key (e.g. `heating.n_traj`) in a JSON document. The value
/// is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let Value::Object(map) = cur else {
            return Err(Error::Config(format!(
                "override {key}: {p} is not inside an object"
            )));
        };
        if i + 1 == parts.len() {
            map.insert((*p).to_string(), value);
            return Ok(());
        }
        cur = map
            .entry((*p).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(Error::Config(format!("override {key}: empty key")))
}
