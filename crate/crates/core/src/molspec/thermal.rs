use super::LevelTable;
use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{domain, Result};

/// Boltzmann populations p_i ∝ exp(−h·E_i / k_B·T) over the m-resolved states
/// of `table`, normalized to one.
pub fn thermal_populations(table: &LevelTable, temperature: f64) -> Result<Vec<f64>> {
    if table.is_empty() {
        return domain("level table is empty");
    }
    if !(temperature > 0.0) {
        return domain(format!("temperature must be positive, got {temperature}"));
    }
    let e_min = table
        .states
        .iter()
        .map(|s| s.energy)
        .fold(f64::INFINITY, f64::min);
    let beta = PLANCK / (BOLTZMANN * temperature);
    let mut p: Vec<f64> = table
        .states
        .iter()
        .map(|s| (-(s.energy - e_min) * beta).exp())
        .collect();
    // ascending-energy order keeps the sum well conditioned
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

/// The `n` most populated state ids at `temperature`, most populated first.
pub fn thermally_occupied(table: &LevelTable, temperature: f64, n: usize) -> Result<Vec<usize>> {
    let p = thermal_populations(table, temperature)?;
    let mut ids: Vec<usize> = (0..p.len()).collect();
    ids.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    ids.truncate(n);
    Ok(ids)
}

/// The "single rotational state" temperature 2hB/k_B.
pub fn rotational_temperature(b: f64) -> f64 {
    2.0 * PLANCK * b / BOLTZMANN
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{kelvin_to_hz, GHZ};
    use crate::molspec::{solve_levels, LevelTable, MolecularSpecies};

    fn table() -> LevelTable {
        let s = MolecularSpecies::propanediol_like();
        solve_levels(&s, 8, kelvin_to_hz(10.0)).unwrap()
    }

    #[test]
    fn sums_to_one_and_monotone() {
        let t = table();
        for temp in [0.1, 1.0, 10.0, 300.0] {
            let p = thermal_populations(&t, temp).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for w in t.states.windows(2) {
                if w[1].energy >= w[0].energy {
                    assert!(p[w[1].id] <= p[w[0].id]);
                }
            }
        }
    }

    #[test]
    fn zero_temperature_limit() {
        let t = table();
        let p = thermal_populations(&t, 1e-4).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_level_closed_form() {
        let mut t = table();
        t.states.truncate(2);
        t.states[1].energy = 5.0 * GHZ;
        let temp = PLANCK * 5.0 * GHZ / (BOLTZMANN * 2f64.ln());
        let p = thermal_populations(&t, temp).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotational_temperature_3ghz() {
        // 2·h·3 GHz / k_B = 0.2879 K, the ~300 mK quoted for B = 3 GHz
        let t = rotational_temperature(3.0 * GHZ);
        assert!((t - 0.287_954_584).abs() < 1e-8);
    }

    #[test]
    fn errors() {
        let t = table();
        assert!(thermal_populations(&t, 0.0).is_err());
        let mut e = t.clone();
        e.states.clear();
        assert!(thermal_populations(&e, 1.0).is_err());
    }
}
