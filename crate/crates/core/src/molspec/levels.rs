use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{build_hamiltonian_block, MolecularSpecies};
use crate::error::{domain, Error, Result};

/// Quantum numbers of one state |J_{KaKc}, m⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateLabel {
    pub j: i32,
    pub ka: i32,
    pub kc: i32,
    pub m: i32,
}

impl StateLabel {
    pub fn new(j: i32, ka: i32, kc: i32, m: i32) -> Self {
        Self { j, ka, kc, m }
    }
}

/// Formats as `J_KaKc` followed by `,m` (e.g. `1_01,0`); parsed back by
/// [`FromStr`], which also accepts `J_Ka_Kc_m`.
impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}{},{}", self.j, self.ka, self.kc, self.m)
    }
}

impl FromStr for StateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse state label {s:?}"));
        let nums: Vec<i32> = s
            .split(['_', ','])
            .map(|t| t.trim().parse::<i32>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match nums.as_slice() {
            [j, ka, kc, m] => Ok(Self::new(*j, *ka, *kc, *m)),
            // `J_KaKc,m` with single-digit Ka and Kc
            [j, kakc, m] if (0..100).contains(kakc) => Ok(Self::new(*j, kakc / 10, kakc % 10, *m)),
            _ => Err(bad()),
        }
    }
}

/// One m-resolved asymmetric-top eigenstate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationalState {
    pub id: usize,
    pub manifold: usize,
    pub j: i32,
    pub ka: i32,
    pub kc: i32,
    pub m: i32,
    /// Hz, relative to 0_00.
    pub energy: f64,
    /// Coefficients over k = −J..=J.
    pub eigvec: Vec<f64>,
}

impl RotationalState {
    pub fn label(&self) -> StateLabel {
        StateLabel::new(self.j, self.ka, self.kc, self.m)
    }
}

/// An m-degenerate J_{KaKc} level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifold {
    pub id: usize,
    pub j: i32,
    pub ka: i32,
    pub kc: i32,
    pub energy: f64,
    pub eigvec: Vec<f64>,
    /// State ids ordered by m = −J..=J.
    pub states: Vec<usize>,
}

/// All m-resolved states of a species up to an energy cutoff, sorted by energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTable {
    pub species: MolecularSpecies,
    pub states: Vec<RotationalState>,
    pub manifolds: Vec<Manifold>,
    pub max_energy_cutoff: f64,
}

impl LevelTable {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: usize) -> Option<&RotationalState> {
        self.states.get(id)
    }

    pub fn find(&self, label: StateLabel) -> Option<usize> {
        self.states.iter().position(|s| s.label() == label)
    }

    pub fn find_manifold(&self, j: i32, ka: i32, kc: i32) -> Option<&Manifold> {
        self.manifolds
            .iter()
            .find(|m| m.j == j && m.ka == ka && m.kc == kc)
    }
}

/// (Ka, Kc) for the `i`-th lowest eigenvalue within a J block.
fn label_for_rank(j: i32, i: i32) -> (i32, i32) {
    ((i + 1) / 2, j - i / 2)
}

/// Largest J whose lowest possible energy C·J(J+1) lies at or below `cutoff`.
pub fn auto_j_max(species: &MolecularSpecies, cutoff: f64) -> i32 {
    let c = species.rot_constants.c;
    let mut j = 0;
    while c * ((j + 1) * (j + 2)) as f64 <= cutoff && j < 200 {
        j += 1;
    }
    j
}

/// Diagonalizes every J block up to `j_max` and keeps the states at or below
/// `cutoff` (Hz). Within each J, eigenvalues are sorted ascending and labelled
/// (Ka, Kc) = (0, J), (1, J), (1, J−1), …, (J, 0).
pub fn solve_levels(species: &MolecularSpecies, j_max: i32, cutoff: f64) -> Result<LevelTable> {
    if j_max < 0 {
        return domain(format!("J_max must be non-negative, got {j_max}"));
    }
    if !(cutoff >= 0.0) {
        return domain(format!("energy cutoff must be non-negative, got {cutoff}"));
    }
    let mut manifolds = Vec::new();
    for j in 0..=j_max {
        let h = build_hamiltonian_block(species, j)?;
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        for (rank, &col) in order.iter().enumerate() {
            let energy = eig.eigenvalues[col];
            if energy > cutoff {
                continue;
            }
            let mut v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            // fix the overall sign: largest |component| positive, first index on ties
            let pivot = v.iter().enumerate().fold(0, |best, (i, x)| {
                if x.abs() > v[best].abs() + 1e-12 {
                    i
                } else {
                    best
                }
            });
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            v.iter_mut().for_each(|x| *x *= sign / norm);
            let (ka, kc) = label_for_rank(j, rank as i32);
            manifolds.push(Manifold {
                id: 0,
                j,
                ka,
                kc,
                energy: if j == 0 { 0.0 } else { energy },
                eigvec: v,
                states: Vec::new(),
            });
        }
    }
    manifolds.sort_by(|x, y| {
        x.energy
            .total_cmp(&y.energy)
            .then((x.j, x.ka, x.kc).cmp(&(y.j, y.ka, y.kc)))
    });

    let mut states = Vec::new();
    for (mid, man) in manifolds.iter_mut().enumerate() {
        man.id = mid;
        for m in -man.j..=man.j {
            states.push(RotationalState {
                id: 0,
                manifold: mid,
                j: man.j,
                ka: man.ka,
                kc: man.kc,
                m,
                energy: man.energy,
                eigvec: man.eigvec.clone(),
            });
        }
    }
    // manifolds are already energy-sorted and m runs inside each, so this
    // ordering is energy-sorted with (J, Ka, Kc, m) tie-breaks
    for (id, s) in states.iter_mut().enumerate() {
        s.id = id;
        manifolds[s.manifold].states.push(id);
    }
    Ok(LevelTable {
        species: species.clone(),
        states,
        manifolds,
        max_energy_cutoff: cutoff,
    })
}
