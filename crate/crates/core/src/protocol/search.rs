use serde::{Deserialize, Serialize};

use super::{
    measure_subspace, MeasurementRecord, Mode, MoleculeRegister, SubspaceQuery, Thermometer,
};
use crate::error::{config, Result};
use crate::molspec::TransitionCatalog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// The identified state, or `None` when `max_steps` ran out.
    pub found: Option<usize>,
    /// Surviving candidates at termination.
    pub candidates: Vec<usize>,
    pub records: Vec<MeasurementRecord>,
    /// Number of majority-voted membership decisions.
    pub determinations: usize,
}

/// Adaptive halving: query the first half of the candidate set, keep the
/// half consistent with the (majority-voted) outcome, stop at one candidate.
pub fn binary_search_state(
    reg: &mut MoleculeRegister,
    candidates: &[usize],
    th: &Thermometer,
    max_steps: usize,
    repeats: usize,
) -> Result<SearchResult> {
    if candidates.is_empty() {
        return config("binary search needs at least one candidate");
    }
    if repeats == 0 || repeats.is_multiple_of(2) {
        return config(format!(
            "majority vote needs an odd repeat count, got {repeats}"
        ));
    }
    let mut cand = candidates.to_vec();
    let mut records = Vec::new();
    let mut determinations = 0;
    while cand.len() > 1 {
        if determinations == max_steps {
            return Ok(SearchResult {
                found: None,
                candidates: cand,
                records,
                determinations,
            });
        }
        let half = cand.len().div_ceil(2);
        let q = SubspaceQuery::chain(cand[..half].iter().copied())?;
        let mut votes = 0;
        for _ in 0..repeats {
            let rec = measure_subspace(reg, &q, th, Mode::Fast)?;
            votes += usize::from(rec.outcome.heated());
            records.push(rec);
        }
        determinations += 1;
        if 2 * votes > repeats {
            cand.truncate(half);
        } else {
            cand.drain(..half);
        }
    }
    Ok(SearchResult {
        found: Some(cand[0]),
        candidates: cand,
        records,
        determinations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareResult {
    pub success: bool,
    pub rounds: usize,
    /// (A, B): the manifold member swapped with the target.
    pub bridge: (usize, usize),
    pub records: Vec<MeasurementRecord>,
}

/// Heralded transfer into `target` from `manifold`: confirm membership,
/// swap the bridge pair, re-measure; a cold outcome after a hot one heralds
/// the target.
pub fn prepare_state(
    reg: &mut MoleculeRegister,
    catalog: &TransitionCatalog,
    manifold: &SubspaceQuery,
    target: usize,
    th: &Thermometer,
    max_rounds: usize,
) -> Result<PrepareResult> {
    if manifold.contains(target) {
        return config(format!("target {target} lies inside the measured manifold"));
    }
    let Some(a) = manifold
        .members
        .iter()
        .copied()
        .find(|&a| catalog.between(a, target).is_some())
    else {
        return config(format!(
            "no allowed transition joins state {target} to the manifold"
        ));
    };
    let mut records = Vec::new();
    let mut confirmed = false;
    let mut rounds = 0;
    while rounds < max_rounds {
        rounds += 1;
        if !confirmed {
            let rec = measure_subspace(reg, manifold, th, Mode::Fast)?;
            confirmed = rec.outcome.heated();
            records.push(rec);
            if !confirmed {
                continue;
            }
        }
        // slow, resolved π pulse on the bridge
        if reg.truth == a {
            reg.truth = target;
        } else if reg.truth == target {
            reg.truth = a;
        }
        let rec = measure_subspace(reg, manifold, th, Mode::Fast)?;
        let hot = rec.outcome.heated();
        records.push(rec);
        if !hot {
            return Ok(PrepareResult {
                success: true,
                rounds,
                bridge: (a, target),
                records,
            });
        }
    }
    Ok(PrepareResult {
        success: false,
        rounds,
        bridge: (a, target),
        records,
    })
}
