use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Axis, LevelTable, Manifold, MolecularSpecies};
use crate::angular::{axis_weights, reduced_k_part, wigner_3j, TopState};
use crate::constants::GHZ;
use crate::error::{domain, Result};

/// Manifold line strengths below this are treated as symmetry zeros.
const STRENGTH_FLOOR: f64 = 1e-10;

/// One m-resolved electric-dipole transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub lower: usize,
    pub upper: usize,
    /// Hz, E_upper − E_lower.
    pub frequency: f64,
    /// Σ_p |⟨upper| Φ_{p g} |lower⟩|² over lab spherical components p.
    pub line_strength: f64,
    pub kind: Axis,
}

impl Transition {
    /// ΔJ ∈ {0, ±1} (not 0↔0) plus the a/b/c-type (Ka, Kc) parity rules.
    pub fn obeys_selection_rules(&self, table: &LevelTable) -> bool {
        let (lo, hi) = (&table.states[self.lower], &table.states[self.upper]);
        let dj = (hi.j - lo.j).abs();
        if dj > 1 || (lo.j == 0 && hi.j == 0) || (hi.m - lo.m).abs() > 1 {
            return false;
        }
        let dka = (hi.ka - lo.ka).rem_euclid(2);
        let dkc = (hi.kc - lo.kc).rem_euclid(2);
        match self.kind {
            Axis::A => dka == 0 && dkc == 1,
            Axis::B => dka == 1 && dkc == 1,
            Axis::C => dka == 1 && dkc == 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionCatalog {
    pub entries: Vec<Transition>,
}

impl TransitionCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Any entry connecting states `x` and `y`, in either direction.
    pub fn between(&self, x: usize, y: usize) -> Option<&Transition> {
        self.entries
            .iter()
            .find(|t| (t.lower == x && t.upper == y) || (t.lower == y && t.upper == x))
    }

    /// Marks every state reachable from `start` through entries with
    /// frequency ≤ `f_max`, treating transitions as undirected edges.
    pub fn reachable_from(&self, n_states: usize, start: usize, f_max: f64) -> Vec<bool> {
        let mut adj = vec![Vec::new(); n_states];
        for t in self.entries.iter().filter(|t| t.frequency <= f_max) {
            adj[t.lower].push(t.upper);
            adj[t.upper].push(t.lower);
        }
        let mut seen = vec![false; n_states];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

/// Direction-cosine line strength between two m-degenerate levels for a
/// dipole along `axis`, summed over m, m′ and lab components:
/// S = (2J+1)(2J′+1)|Σ c′ c (−1)^{k′} (J′ 1 J; −k′ q k) e_q|².
pub fn manifold_line_strength(lower: &Manifold, upper: &Manifold, axis: Axis) -> f64 {
    reduced_dipole(lower, upper, axis).1
}

/// Returns (|R|², manifold strength).
fn reduced_dipole(lower: &Manifold, upper: &Manifold, axis: Axis) -> (f64, f64) {
    if (upper.j - lower.j).abs() > 1 {
        return (0.0, 0.0);
    }
    let bra = TopState {
        j: upper.j,
        m: 0,
        coeffs: &upper.eigvec,
    };
    let ket = TopState {
        j: lower.j,
        m: 0,
        coeffs: &lower.eigvec,
    };
    let r2 = reduced_k_part(bra, ket, 1, &axis_weights(axis)).norm_sqr();
    let dim = ((2 * lower.j + 1) * (2 * upper.j + 1)) as f64;
    (r2, dim * r2)
}

/// Electric-dipole transitions between states of `table` with frequency in
/// `[f_min, f_max]` (and strictly positive). A component type is only listed
/// when the species has a nonzero dipole along that axis.
pub fn allowed_transitions(
    table: &LevelTable,
    species: &MolecularSpecies,
    f_min: f64,
    f_max: f64,
) -> Result<TransitionCatalog> {
    if !(f_min >= 0.0 && f_min < f_max) {
        return domain(format!("need 0 <= f_min < f_max, got [{f_min}, {f_max}]"));
    }
    let axes: Vec<Axis> = Axis::ALL
        .into_iter()
        .filter(|&g| species.dipole.get(g) != 0.0)
        .collect();
    let mut entries = Vec::new();
    for (i, lo) in table.manifolds.iter().enumerate() {
        for hi in &table.manifolds[i + 1..] {
            let f = hi.energy - lo.energy;
            if !(f > 0.0 && f >= f_min && f <= f_max) || (hi.j - lo.j).abs() > 1 {
                continue;
            }
            for &g in &axes {
                let (r2, s) = reduced_dipole(lo, hi, g);
                if s < STRENGTH_FLOOR {
                    continue;
                }
                let dim = ((2 * lo.j + 1) * (2 * hi.j + 1)) as f64;
                for (&lid, m) in lo.states.iter().zip(-lo.j..=lo.j) {
                    for (&uid, mp) in hi.states.iter().zip(-hi.j..=hi.j) {
                        let p = mp - m;
                        if p.abs() > 1 {
                            continue;
                        }
                        let w = wigner_3j(hi.j, 1, lo.j, -mp, p, m);
                        let sm = dim * w * w * r2;
                        if sm > STRENGTH_FLOOR * 1e-3 {
                            entries.push(Transition {
                                lower: lid,
                                upper: uid,
                                frequency: f,
                                line_strength: sm,
                                kind: g,
                            });
                        }
                    }
                }
            }
        }
    }
    entries.sort_by_key(|x| (x.lower, x.upper, x.kind));
    Ok(TransitionCatalog { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrotrianLevel {
    pub id: usize,
    #[serde(rename = "J")]
    pub j: i32,
    #[serde(rename = "Ka")]
    pub ka: i32,
    #[serde(rename = "Kc")]
    pub kc: i32,
    pub m: i32,
    #[serde(rename = "energy_GHz")]
    pub energy_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrotrianTransition {
    pub lo: usize,
    pub hi: usize,
    #[serde(rename = "freq_GHz")]
    pub freq_ghz: f64,
    pub strength: f64,
    #[serde(rename = "type")]
    pub kind: Axis,
    pub band: Band,
}

/// Level/transition diagram with transitions split at a frequency threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrotrianDocument {
    pub species: String,
    #[serde(rename = "split_GHz")]
    pub split_ghz: f64,
    pub levels: Vec<GrotrianLevel>,
    pub transitions: Vec<GrotrianTransition>,
}

impl GrotrianDocument {
    pub fn partition(&self, band: Band) -> impl Iterator<Item = &GrotrianTransition> {
        self.transitions.iter().filter(move |t| t.band == band)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

pub fn export_grotrian(
    table: &LevelTable,
    catalog: &TransitionCatalog,
    split_freq: f64,
) -> GrotrianDocument {
    GrotrianDocument {
        species: table.species.name.clone(),
        split_ghz: split_freq / GHZ,
        levels: table
            .states
            .iter()
            .map(|s| GrotrianLevel {
                id: s.id,
                j: s.j,
                ka: s.ka,
                kc: s.kc,
                m: s.m,
                energy_ghz: s.energy / GHZ,
            })
            .collect(),
        transitions: catalog
            .entries
            .iter()
            .map(|t| GrotrianTransition {
                lo: t.lower,
                hi: t.upper,
                freq_ghz: t.frequency / GHZ,
                strength: t.line_strength,
                kind: t.kind,
                band: if t.frequency < split_freq {
                    Band::Below
                } else {
                    Band::Above
                },
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{kelvin_to_hz, DEBYE};
    use crate::molspec::{solve_levels, AxisTriple, StateLabel};

    fn propanediol() -> (LevelTable, TransitionCatalog) {
        let s = MolecularSpecies::propanediol_like();
        let t = solve_levels(&s, 8, kelvin_to_hz(10.0)).unwrap();
        let c = allowed_transitions(&t, &s, 0.0, 1e13).unwrap();
        (t, c)
    }

    #[test]
    fn selection_rules_hold_for_every_entry() {
        let (t, c) = propanediol();
        assert!(!c.is_empty());
        for e in &c.entries {
            assert!(e.obeys_selection_rules(&t), "{e:?}");
            assert!(e.frequency > 0.0 && e.line_strength > 0.0);
            let de = t.states[e.upper].energy - t.states[e.lower].energy;
            assert!(((e.frequency - de) / de).abs() < 1e-9);
        }
        let kinds: std::collections::BTreeSet<_> = c.entries.iter().map(|e| e.kind).collect();
        assert_eq!(kinds.len(), 3);
    }

    #[test]
    fn j0_to_j1_types_match_parity() {
        let (t, c) = propanediol();
        let g = t.find(StateLabel::new(0, 0, 0, 0)).unwrap();
        for (label, kind) in [
            (StateLabel::new(1, 0, 1, 0), Axis::A),
            (StateLabel::new(1, 1, 1, 1), Axis::B),
            (StateLabel::new(1, 1, 0, 1), Axis::C),
        ] {
            let u = t.find(label).unwrap();
            let e = c.between(g, u).expect("transition present");
            assert_eq!(e.kind, kind, "{label}");
        }
    }

    #[test]
    fn a_only_species() {
        let mut s = MolecularSpecies::propanediol_like();
        s.dipole = AxisTriple::new(1.0 * DEBYE, 0.0, 0.0);
        let t = solve_levels(&s, 6, kelvin_to_hz(5.0)).unwrap();
        let c = allowed_transitions(&t, &s, 0.0, 1e13).unwrap();
        assert!(!c.is_empty());
        assert!(c.entries.iter().all(|e| e.kind == Axis::A));
    }

    #[test]
    fn bad_frequency_window() {
        let (t, _) = propanediol();
        assert!(allowed_transitions(&t, &t.species, 5.0, 5.0).is_err());
        assert!(allowed_transitions(&t, &t.species, -1.0, 5.0).is_err());
    }

    #[test]
    fn grotrian_partitions() {
        let (t, c) = propanediol();
        let doc = export_grotrian(&t, &c, 20.0 * GHZ);
        assert!(doc.partition(Band::Below).count() > 0);
        assert!(doc.partition(Band::Above).count() > 0);
        let empty = export_grotrian(&t, &TransitionCatalog::default(), 20.0 * GHZ);
        assert_eq!(empty.levels.len(), t.len());
        assert!(empty.transitions.is_empty());
    }

    #[test]
    fn grotrian_json_roundtrip() {
        let (t, c) = propanediol();
        let doc = export_grotrian(&t, &c, 20.0 * GHZ);
        let mut buf = Vec::new();
        doc.write_json(&mut buf).unwrap();
        let back = GrotrianDocument::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, doc);
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert!(v["levels"][0].get("energy_GHz").is_some());
        assert!(v["transitions"][0].get("freq_GHz").is_some());
        assert!(v["transitions"][0].get("type").is_some());
    }
}
