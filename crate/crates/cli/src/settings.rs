use serde::{Deserialize, Serialize};

/// Per-experiment knobs, read from the optional `experiment` section of the
/// trap file and overridable with `--set experiment.<key>=<value>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct Settings {
    /// Level-table energy cutoff.
    pub cutoff_K: f64,
    /// Internal temperature of the thermal prior.
    pub internal_T_K: f64,
    pub f_max_GHz: f64,
    /// Grotrian split and reachability threshold.
    pub split_GHz: f64,
    pub profile_points: usize,
    /// Potential-profile span along the lattice axis.
    pub profile_span_nm: f64,
    pub profile_states: usize,
    /// Monte Carlo repetitions for readout/search/prepare.
    pub runs: usize,
    /// `fast` or `full`.
    pub mode: String,
    pub n_candidates: usize,
    pub repeats: usize,
    pub max_steps: usize,
    pub manifold_size: usize,
    pub max_rounds: usize,
    /// `rabi` or `ramsey`.
    pub scan_kind: String,
    pub pulse_us: f64,
    pub free_us: f64,
    pub scan_points: usize,
    pub scan_shots: usize,
    /// Length of the exported example trajectory.
    pub trajectory_us: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            cutoff_K: 10.0,
            internal_T_K: 10.0,
            f_max_GHz: 1000.0,
            split_GHz: 20.0,
            profile_points: 201,
            profile_span_nm: 1050.0,
            profile_states: 4,
            runs: 1000,
            mode: "fast".into(),
            n_candidates: 50,
            repeats: 1,
            max_steps: 64,
            manifold_size: 4,
            max_rounds: 1000,
            scan_kind: "rabi".into(),
            pulse_us: 100.0,
            free_us: 100.0,
            scan_points: 201,
            scan_shots: 0,
            trajectory_us: 100.0,
        }
    }
}
