use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{measure_subspace, Mode, MoleculeRegister, SubspaceQuery, Thermometer};
use crate::error::{config, Result};
use crate::molspec::TransitionCatalog;
use crate::pulses::{evolve_final, DriveField, InternalState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScanPulse {
    /// Single square pulse of Rabi frequency `rabi` (rad/s).
    Rabi {
        from: usize,
        to: usize,
        rabi: f64,
        duration: f64,
    },
    /// Two π/2 pulses separated by `t_free`.
    Ramsey {
        from: usize,
        to: usize,
        rabi: f64,
        t_free: f64,
    },
}

impl ScanPulse {
    fn pair(&self) -> (usize, usize) {
        match *self {
            ScanPulse::Rabi { from, to, .. } | ScanPulse::Ramsey { from, to, .. } => (from, to),
        }
    }

    /// Drive and total duration at detuning `delta` (rad/s).
    fn field(&self, delta: f64) -> (DriveField, f64) {
        match *self {
            ScanPulse::Rabi {
                from,
                to,
                rabi,
                duration,
            } => (
                DriveField::microwave((from, to), rabi, vec![(0.0, duration)]).with_detuning(delta),
                duration,
            ),
            ScanPulse::Ramsey {
                from,
                to,
                rabi,
                t_free,
            } => {
                let tp = PI / (2.0 * rabi);
                let w = vec![(0.0, tp), (tp + t_free, 2.0 * tp + t_free)];
                (
                    DriveField::microwave((from, to), rabi, w).with_detuning(delta),
                    2.0 * tp + t_free,
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// Hz
    pub detuning: f64,
    pub transfer_prob: f64,
}

/// Line response of a prepared molecule. With `shots == 0` the exact
/// transfer probability is reported; otherwise each point is the heated
/// fraction of `shots` single-state readouts of the destination, with the
/// molecule re-prepared in the source state after each shot.
pub fn spectroscopy_scan(
    reg: &mut MoleculeRegister,
    catalog: &TransitionCatalog,
    th: &Thermometer,
    pulse: &ScanPulse,
    detunings: &[f64],
    shots: usize,
) -> Result<Vec<ScanPoint>> {
    let (from, to) = pulse.pair();
    if reg.truth != from {
        return config(format!(
            "scan starts from state {from} but the molecule is not prepared there"
        ));
    }
    if catalog.between(from, to).is_none() {
        return config(format!("no allowed transition between {from} and {to}"));
    }
    let dest = SubspaceQuery::new([to], vec![])?;
    let psi0 = InternalState::basis(vec![from, to], 0)?;
    let mut out = Vec::with_capacity(detunings.len());
    for &d in detunings {
        let (field, t_end) = pulse.field(TAU * d);
        let p = evolve_final(&psi0, &[field], t_end)?.population(to);
        let prob = if shots == 0 {
            p
        } else {
            let mut hits = 0;
            for _ in 0..shots {
                let u: f64 = reg.rng().random();
                reg.truth = if u < p { to } else { from };
                hits += usize::from(
                    measure_subspace(reg, &dest, th, Mode::Fast)?
                        .outcome
                        .heated(),
                );
                reg.truth = from;
            }
            hits as f64 / shots as f64
        };
        out.push(ScanPoint {
            detuning: d,
            transfer_prob: prob,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molspec::{Axis, Transition};

    fn catalog() -> TransitionCatalog {
        TransitionCatalog {
            entries: vec![Transition {
                lower: 0,
                upper: 1,
                frequency: 5e9,
                line_strength: 1.0,
                kind: Axis::B,
            }],
        }
    }

    #[test]
    fn resonant_pi_pulse_transfers() {
        let mut r = MoleculeRegister::new(0, vec![0.5, 0.5], 2).unwrap();
        let om = TAU * 1e4;
        let pulse = ScanPulse::Rabi {
            from: 0,
            to: 1,
            rabi: om,
            duration: PI / om,
        };
        let th = Thermometer::noiseless();
        let pts = spectroscopy_scan(&mut r, &catalog(), &th, &pulse, &[0.0], 0).unwrap();
        assert!((pts[0].transfer_prob - 1.0).abs() < 1e-12);
        let shots = spectroscopy_scan(&mut r, &catalog(), &th, &pulse, &[0.0], 50).unwrap();
        assert_eq!(shots[0].transfer_prob, 1.0);
        assert_eq!(r.truth(), 0);
    }

    #[test]
    fn unprepared_or_forbidden_rejected() {
        let mut r = MoleculeRegister::new(1, vec![0.5, 0.5], 2).unwrap();
        let pulse = ScanPulse::Rabi {
            from: 0,
            to: 1,
            rabi: 1.0,
            duration: 1.0,
        };
        let th = Thermometer::noiseless();
        assert!(spectroscopy_scan(&mut r, &catalog(), &th, &pulse, &[0.0], 0).is_err());
        r.set_truth(0);
        let empty = TransitionCatalog::default();
        assert!(spectroscopy_scan(&mut r, &empty, &th, &pulse, &[0.0], 0).is_err());
    }
}
