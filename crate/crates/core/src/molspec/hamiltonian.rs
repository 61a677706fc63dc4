use nalgebra::DMatrix;

use super::MolecularSpecies;
use crate::error::{domain, Result};

/// Rigid-rotor Hamiltonian H = A·Ja² + B·Jb² + C·Jc² for one J, in Hz, over
/// the basis k = −J..=J (row index k + J).
///
/// Diagonal: A k² + ½(B + C)(J(J+1) − k²). The only off-diagonal couplings are
/// Δk = ±2 with amplitude ¼(B − C)·√((J∓k)(J±k+1)(J∓k−1)(J±k+2)).
pub fn build_hamiltonian_block(species: &MolecularSpecies, j: i32) -> Result<DMatrix<f64>> {
    if j < 0 {
        return domain(format!("J must be non-negative, got {j}"));
    }
    let (a, b, c) = (
        species.rot_constants.a,
        species.rot_constants.b,
        species.rot_constants.c,
    );
    let n = (2 * j + 1) as usize;
    let jj = (j * (j + 1)) as f64;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let k = i as i32 - j;
        let kf = k as f64;
        h[(i, i)] = a * kf * kf + 0.5 * (b + c) * (jj - kf * kf);
        if i + 2 < n {
            let k = k as i64;
            let j = j as i64;
            let prod = (j - k) * (j + k + 1) * (j - k - 1) * (j + k + 2);
            let v = 0.25 * (b - c) * (prod as f64).sqrt();
            h[(i, i + 2)] = v;
            h[(i + 2, i)] = v;
        }
    }
    Ok(h)
}
