use nalgebra::{SMatrix, SVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CrystalOrder, PhaseSpace, TrapConfig};
use crate::constants::{BOLTZMANN, COULOMB_K};
use crate::error::{config, domain, Error, Result};

type V6 = SVector<f64, 6>;
type M6 = SMatrix<f64, 6, 6>;

fn split(x: &V6) -> [Vector3<f64>; 2] {
    [x.fixed_rows::<3>(0).into(), x.fixed_rows::<3>(3).into()]
}

fn coulomb_strength(trap: &TrapConfig) -> f64 {
    if trap.coulomb {
        COULOMB_K * trap.atom.charge * trap.molecule.charge
    } else {
        0.0
    }
}

/// Trap + Coulomb potential energy, J.
pub(super) fn potential(trap: &TrapConfig, pos: &[Vector3<f64>; 2]) -> f64 {
    let k = trap.spring_constants();
    let mut v = 0.0;
    for i in 0..2 {
        v += 0.5 * k[i].dot(&pos[i].component_mul(&pos[i]));
    }
    let c = coulomb_strength(trap);
    if c != 0.0 {
        v += c / (pos[0] - pos[1]).norm();
    }
    v
}

/// Trap + Coulomb forces on atom and molecule.
pub(super) fn forces(
    trap: &TrapConfig,
    k: &[Vector3<f64>; 2],
    pos: &[Vector3<f64>; 2],
) -> [Vector3<f64>; 2] {
    let mut f = [-k[0].component_mul(&pos[0]), -k[1].component_mul(&pos[1])];
    let c = coulomb_strength(trap);
    if c != 0.0 {
        let r = pos[0] - pos[1];
        let r2 = r.norm_squared();
        let fc = r * (c / (r2 * r2.sqrt()));
        f[0] += fc;
        f[1] -= fc;
    }
    f
}

pub(super) fn hessian(trap: &TrapConfig, pos: &[Vector3<f64>; 2]) -> M6 {
    let k = trap.spring_constants();
    let mut h = M6::zeros();
    for i in 0..2 {
        for a in 0..3 {
            h[(3 * i + a, 3 * i + a)] = k[i][a];
        }
    }
    let c = coulomb_strength(trap);
    if c != 0.0 {
        let r = pos[0] - pos[1];
        let d = r.norm();
        let block = (r * r.transpose()) * (3.0 * c / d.powi(5))
            - nalgebra::Matrix3::identity() * (c / d.powi(3));
        for (i, j, s) in [(0, 0, 1.0), (1, 1, 1.0), (0, 1, -1.0), (1, 0, -1.0)] {
            let mut sub = h.fixed_view_mut::<3, 3>(3 * i, 3 * j);
            sub += block * s;
        }
    }
    h
}

/// Static crystal configuration: the two ions on the z axis in the chosen
/// order, refined by Newton iteration on the full 6-D force.
pub fn equilibrium_positions(trap: &TrapConfig) -> Result<[Vector3<f64>; 2]> {
    trap.validate()?;
    let w = trap.secular_freqs;
    if !(w.z < w.x && w.z < w.y) {
        return config(format!(
            "axial crystal needs omega_z below both radial frequencies, got {:?}",
            w.as_slice()
        ));
    }
    let c = coulomb_strength(trap);
    if c == 0.0 {
        return Ok([Vector3::zeros(); 2]);
    }
    let k = trap.spring_constants();
    let d = (c * (1.0 / k[0].z + 1.0 / k[1].z)).cbrt();
    let sign = match trap.order {
        CrystalOrder::AtomFirst => 1.0,
        CrystalOrder::MoleculeFirst => -1.0,
    };
    let mut x = V6::zeros();
    x[2] = -sign * c / (k[0].z * d * d);
    x[5] = sign * c / (k[1].z * d * d);

    let grad = |x: &V6| -> V6 {
        let f = forces(trap, &k, &split(x));
        -V6::from_iterator(f[0].iter().chain(f[1].iter()).copied())
    };
    let mut g = grad(&x);
    for _ in 0..50 {
        if g.norm() < 1e-24 {
            break;
        }
        let h = hessian(trap, &split(&x));
        let Some(step) = h.lu().solve(&g) else {
            break;
        };
        x -= step;
        g = grad(&x);
        if step.norm() < 1e-15 * d {
            break;
        }
    }
    let residual = g.norm();
    if !(residual < 1e-12) {
        return Err(Error::NoConvergence {
            what: "crystal equilibrium",
            residual,
        });
    }
    Ok(split(&x))
}

/// Harmonic modes about the equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes {
    /// Ascending angular frequencies, rad/s.
    pub frequencies: [f64; 6],
    /// Orthonormal mass-weighted eigenvectors as columns, ordered like
    /// `frequencies`; rows are (atom x, y, z, molecule x, y, z).
    pub vectors: M6,
    pub equilibrium: [Vector3<f64>; 2],
}

impl NormalModes {
    pub fn max_frequency(&self) -> f64 {
        self.frequencies[5]
    }

    /// Period of the slowest mode, s.
    pub fn longest_period(&self) -> f64 {
        std::f64::consts::TAU / self.frequencies[0]
    }
}

pub fn normal_modes(trap: &TrapConfig) -> Result<NormalModes> {
    let eq = equilibrium_positions(trap)?;
    let h = hessian(trap, &eq);
    let m = trap.masses();
    let inv_sqrt = V6::from_fn(|i, _| 1.0 / m[i / 3].sqrt());
    let hw = M6::from_fn(|i, j| h[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let eig = hw.symmetric_eigen();
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut frequencies = [0.0; 6];
    let mut vectors = M6::zeros();
    for (n, &i) in order.iter().enumerate() {
        let w2 = eig.eigenvalues[i];
        if !(w2 > 0.0) {
            return config(format!("unstable trap: mode with omega^2 = {w2:e}"));
        }
        frequencies[n] = w2.sqrt();
        vectors.set_column(n, &eig.eigenvectors.column(i));
    }
    Ok(NormalModes {
        frequencies,
        vectors,
        equilibrium: eq,
    })
}

/// Classical thermal state: each mode gets Gaussian coordinate and momentum
/// with ⟨E_mode⟩ = k_B·T.
pub fn sample_thermal_state(trap: &TrapConfig, temperature: f64, seed: u64) -> Result<PhaseSpace> {
    if !(temperature >= 0.0) {
        return domain(format!(
            "temperature must be non-negative, got {temperature}"
        ));
    }
    let modes = normal_modes(trap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kt = BOLTZMANN * temperature;
    let mut q = V6::zeros();
    let mut p = V6::zeros();
    for n in 0..6 {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        q[n] = a * kt.sqrt() / modes.frequencies[n];
        p[n] = b * kt.sqrt();
    }
    let m = trap.masses();
    let x = modes.vectors * q;
    let v = modes.vectors * p;
    let mut out = PhaseSpace {
        pos: modes.equilibrium,
        vel: [Vector3::zeros(); 2],
    };
    for i in 0..2 {
        let s = 1.0 / m[i].sqrt();
        out.pos[i] += Vector3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]) * s;
        out.vel[i] = Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]) * s;
    }
    Ok(out)
}

/// Energy in each normal mode of a phase-space point, J.
#[cfg(test)]
pub(super) fn mode_energies(trap: &TrapConfig, modes: &NormalModes, ps: &PhaseSpace) -> [f64; 6] {
    let m = trap.masses();
    let mut x = V6::zeros();
    let mut v = V6::zeros();
    for i in 0..2 {
        for a in 0..3 {
            x[3 * i + a] = (ps.pos[i][a] - modes.equilibrium[i][a]) * m[i].sqrt();
            v[3 * i + a] = ps.vel[i][a] * m[i].sqrt();
        }
    }
    let q = modes.vectors.transpose() * x;
    let p = modes.vectors.transpose() * v;
    std::array::from_fn(|n| 0.5 * p[n] * p[n] + 0.5 * (modes.frequencies[n] * q[n]).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn equal_mass() -> TrapConfig {
        TrapConfig::table1(88.0)
    }

    #[test]
    fn equal_mass_separation() {
        let t = equal_mass();
        let eq = equilibrium_positions(&t).unwrap();
        let d = eq[1].z - eq[0].z;
        let want = (2.0 * COULOMB_K * t.atom.charge.powi(2)
            / (t.atom.mass * t.secular_freqs.z.powi(2)))
        .cbrt();
        assert!((d / want - 1.0).abs() < 1e-12);
        assert!(eq[0].xy().norm() == 0.0 && eq[1].xy().norm() == 0.0);
        let k = t.spring_constants();
        let f = forces(&t, &k, &eq);
        assert!(f[0].norm() + f[1].norm() < 1e-12);
    }

    #[test]
    fn no_coulomb_sits_at_origin() {
        let mut t = TrapConfig::table1(76.0);
        t.coulomb = false;
        let eq = equilibrium_positions(&t).unwrap();
        assert_eq!(eq, [Vector3::zeros(); 2]);
        let modes = normal_modes(&t).unwrap();
        let wm = t.molecule_secular_freqs();
        let mut want: Vec<f64> = t.secular_freqs.iter().chain(wm.iter()).copied().collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in modes.frequencies.iter().zip(&want) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn swapped_order_mirrors() {
        let mut t = TrapConfig::table1(76.0);
        let a = equilibrium_positions(&t).unwrap();
        t.order = CrystalOrder::MoleculeFirst;
        let b = equilibrium_positions(&t).unwrap();
        for i in 0..2 {
            assert!((a[i].z + b[i].z).abs() < 1e-18);
        }
        assert!(a[0].z < a[1].z && b[0].z > b[1].z);
    }

    #[test]
    fn radial_crystal_rejected() {
        let mut t = TrapConfig::table1(76.0);
        t.secular_freqs.z = 2.0 * t.secular_freqs.x;
        assert!(equilibrium_positions(&t).is_err());
    }

    #[test]
    fn equal_mass_axial_modes() {
        let t = equal_mass();
        let modes = normal_modes(&t).unwrap();
        let wz = t.secular_freqs.z;
        assert!((modes.frequencies[0] / wz - 1.0).abs() < 1e-9);
        assert!((modes.frequencies[1] / (3f64.sqrt() * wz) - 1.0).abs() < 1e-9);
        // radial rocking modes: ω and √(ω² − ωz²)
        let wr = t.secular_freqs.x;
        let rock = (wr * wr - wz * wz).sqrt();
        assert!((modes.frequencies[2] / rock - 1.0).abs() < 1e-9);
        assert!((modes.frequencies[5] / wr - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mode_vectors_orthonormal() {
        let modes = normal_modes(&TrapConfig::table1(76.0)).unwrap();
        let g = modes.vectors.transpose() * modes.vectors;
        assert!((g - M6::identity()).amax() < 1e-10);
        assert!(modes.frequencies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn unstable_trap_rejected() {
        // a very light molecule softens its axial well below the crystal's needs
        let mut t = TrapConfig::table1(76.0);
        t.secular_freqs = Vector3::new(TAU * 1e6, TAU * 1e6, TAU * 0.95e6);
        t.molecule.mass *= 40.0;
        assert!(matches!(normal_modes(&t), Err(Error::Config(_))));
    }

    #[test]
    fn zero_temperature_is_equilibrium() {
        let t = TrapConfig::table1(76.0);
        let s = sample_thermal_state(&t, 0.0, 5).unwrap();
        assert_eq!(s.pos, equilibrium_positions(&t).unwrap());
        assert_eq!(s.vel, [Vector3::zeros(); 2]);
        assert!(sample_thermal_state(&t, -1.0, 5).is_err());
    }

    #[test]
    fn equipartition() {
        let t = TrapConfig::table1(76.0);
        let modes = normal_modes(&t).unwrap();
        let temp = 1e-3;
        let n = 10_000;
        let mut acc = [0.0; 6];
        for seed in 0..n {
            let s = sample_thermal_state(&t, temp, seed).unwrap();
            for (a, e) in acc.iter_mut().zip(mode_energies(&t, &modes, &s)) {
                *a += e;
            }
        }
        for a in acc {
            let ratio = a / n as f64 / (BOLTZMANN * temp);
            assert!((ratio - 1.0).abs() < 0.03, "{ratio}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let t = TrapConfig::table1(76.0);
        assert_eq!(
            sample_thermal_state(&t, 1e-3, 11).unwrap(),
            sample_thermal_state(&t, 1e-3, 11).unwrap()
        );
    }
}
