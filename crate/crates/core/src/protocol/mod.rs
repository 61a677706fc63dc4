//! Readout and preparation sequences built on state-selective heating:
//! subspace membership measurement, adaptive search, heralded preparation,
//! ensemble readout and spectroscopy scans.

mod measure;
mod scan;
mod search;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::molspec::{thermal_populations, LevelTable, TransitionCatalog};

pub use measure::{ensemble_measure, measure_subspace, FullModel, Mode, SequenceTiming};
pub use scan::{spectroscopy_scan, ScanPoint, ScanPulse};
pub use search::{binary_search_state, prepare_state, PrepareResult, SearchResult};

/// One trapped molecule with a hidden internal state.
#[derive(Debug, Clone)]
pub struct MoleculeRegister {
    truth: usize,
    pub prior: Vec<f64>,
    rng: ChaCha8Rng,
}

impl MoleculeRegister {
    pub fn new(truth: usize, prior: Vec<f64>, seed: u64) -> Result<Self> {
        if truth >= prior.len() {
            return config(format!(
                "state {truth} outside a prior over {} states",
                prior.len()
            ));
        }
        let total: f64 = prior.iter().sum();
        if prior.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return config(format!(
                "prior must be a probability vector, sums to {total}"
            ));
        }
        Ok(Self {
            truth,
            prior,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Boltzmann prior at `temperature`, truth drawn from it.
    pub fn thermal(table: &LevelTable, temperature: f64, seed: u64) -> Result<Self> {
        let prior = thermal_populations(table, temperature)?;
        let mut reg = Self::new(0, prior, seed)?;
        reg.truth = reg.draw_from_prior();
        Ok(reg)
    }

    fn draw_from_prior(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, p) in self.prior.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.prior.len() - 1
    }

    /// The hidden internal state; inspected only by tests and simulations.
    pub fn truth(&self) -> usize {
        self.truth
    }

    /// Moves the molecule to `state` (used by modelled coherent operations).
    pub fn set_truth(&mut self, state: usize) {
        self.truth = state;
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// A set of states mixed by a drive plan during a measurement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceQuery {
    /// Sorted, distinct state ids.
    pub members: Vec<usize>,
    /// State pairs driven by the dither fields.
    pub drive_plan: Vec<(usize, usize)>,
}

impl SubspaceQuery {
    pub fn new(
        members: impl IntoIterator<Item = usize>,
        drive_plan: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let members: Vec<usize> = members
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if members.is_empty() {
            return config("subspace query needs at least one member");
        }
        let q = Self {
            members,
            drive_plan,
        };
        for &(a, b) in &q.drive_plan {
            if !q.contains(a) || !q.contains(b) || a == b {
                return config(format!("drive pair ({a}, {b}) does not join two members"));
            }
        }
        if !q.is_connected() {
            return config("drive plan leaves some members unmixed");
        }
        Ok(q)
    }

    /// Members mixed along a chain of consecutive ids.
    pub fn chain(members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let m: Vec<usize> = members
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let plan = m.windows(2).map(|w| (w[0], w[1])).collect();
        Self::new(m, plan)
    }

    /// Drive plan restricted to allowed transitions below `f_max`: a BFS
    /// spanning tree of the catalog graph over the members.
    pub fn from_catalog(
        members: impl IntoIterator<Item = usize>,
        catalog: &TransitionCatalog,
        f_max: f64,
    ) -> Result<Self> {
        let m: BTreeSet<usize> = members.into_iter().collect();
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for t in catalog.entries.iter().filter(|t| t.frequency <= f_max) {
            if m.contains(&t.lower) && m.contains(&t.upper) {
                adj.entry(t.lower).or_default().push(t.upper);
                adj.entry(t.upper).or_default().push(t.lower);
            }
        }
        let mut plan = Vec::new();
        if let Some(&root) = m.iter().next() {
            let mut seen = BTreeSet::from([root]);
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &v in adj.get(&u).into_iter().flatten() {
                    if seen.insert(v) {
                        plan.push((u, v));
                        queue.push_back(v);
                    }
                }
            }
        }
        Self::new(m, plan)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn is_connected(&self) -> bool {
        let mut seen = BTreeSet::from([self.members[0]]);
        let mut grew = true;
        while grew {
            grew = false;
            for &(a, b) in &self.drive_plan {
                if seen.contains(&a) != seen.contains(&b) {
                    seen.insert(a);
                    seen.insert(b);
                    grew = true;
                }
            }
        }
        seen.len() == self.members.len()
    }
}

/// Temperature readout abstracted as a thresholded binary classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thermometer {
    /// K
    pub threshold_t: f64,
    pub false_positive: f64,
    pub false_negative: f64,
}

impl Default for Thermometer {
    fn default() -> Self {
        Self {
            threshold_t: 1e-4,
            false_positive: 0.02,
            false_negative: 0.02,
        }
    }
}

impl Thermometer {
    pub fn noiseless() -> Self {
        Self {
            false_positive: 0.0,
            false_negative: 0.0,
            ..Self::default()
        }
    }

    pub fn with_error(p: f64) -> Self {
        Self {
            false_positive: p,
            false_negative: p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("false_positive", self.false_positive),
            ("false_negative", self.false_negative),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return config(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.threshold_t > 0.0) {
            return config(format!(
                "threshold must be positive, got {}",
                self.threshold_t
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Heated,
    NotHeated,
}

impl Outcome {
    pub fn heated(self) -> bool {
        self == Outcome::Heated
    }

    fn from_bool(heated: bool) -> Self {
        if heated {
            Outcome::Heated
        } else {
            Outcome::NotHeated
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub query: Vec<usize>,
    pub outcome: Outcome,
    pub post_state: usize,
    /// Modelled duration of the sequence, s.
    pub elapsed: f64,
    /// Uniform draw compared against the classifier error rate.
    pub noise_draw: f64,
    /// Read-out temperature in `full` mode, K.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_checks() {
        assert!(MoleculeRegister::new(0, vec![0.5, 0.5], 1).is_ok());
        assert!(MoleculeRegister::new(2, vec![0.5, 0.5], 1).is_err());
        assert!(MoleculeRegister::new(0, vec![0.5, 0.6], 1).is_err());
        assert!(MoleculeRegister::new(0, vec![1.5, -0.5], 1).is_err());
    }

    #[test]
    fn query_connectivity() {
        assert!(SubspaceQuery::new([1, 2, 3], vec![(1, 2), (2, 3)]).is_ok());
        assert!(SubspaceQuery::new([1, 2, 3], vec![(1, 2)]).is_err());
        assert!(SubspaceQuery::new([1, 2], vec![(1, 5)]).is_err());
        assert!(SubspaceQuery::new(Vec::<usize>::new(), vec![]).is_err());
        let q = SubspaceQuery::new([4], vec![]).unwrap();
        assert!(q.contains(4) && !q.contains(3));
        let c = SubspaceQuery::chain([9, 3, 5]).unwrap();
        assert_eq!(c.members, vec![3, 5, 9]);
        assert_eq!(c.drive_plan, vec![(3, 5), (5, 9)]);
    }

    #[test]
    fn thermometer_ranges() {
        assert!(Thermometer::default().validate().is_ok());
        assert!(Thermometer::with_error(1.0).validate().is_ok());
        assert!(Thermometer::with_error(-0.1).validate().is_err());
        let t = Thermometer {
            threshold_t: 0.0,
            ..Default::default()
        };
        assert!(t.validate().is_err());
    }
}
