//! Wigner 3j symbols and rotation-matrix elements in the symmetric-top basis.
//!
//! Basis functions are |J k M⟩ = √((2J+1)/8π²) D^J*_{Mk}(φ,θ,χ), with `k` the
//! projection on the molecule-fixed a axis and `M` the projection on the lab
//! quantization axis. A lab-frame spherical tensor component of rank `r` is
//! T_p(lab) = Σ_q D^r*_{pq} T_q(mol).

use nalgebra::Complex;

/// ln(n!) for small non-negative n, accumulated exactly in f64.
fn ln_factorial(n: i64) -> f64 {
    debug_assert!(n >= 0);
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn triangle_ok(a: i64, b: i64, c: i64) -> bool {
    c >= (a - b).abs() && c <= a + b
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3) for integer arguments, via the Racah
/// formula.
pub fn wigner_3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    let (j1, j2, j3) = (j1 as i64, j2 as i64, j3 as i64);
    let (m1, m2, m3) = (m1 as i64, m2 as i64, m3 as i64);
    if j1 < 0 || j2 < 0 || j3 < 0 {
        return 0.0;
    }
    if m1 + m2 + m3 != 0 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if !triangle_ok(j1, j2, j3) {
        return 0.0;
    }
    let ln_delta =
        ln_factorial(j1 + j2 - j3) + ln_factorial(j1 - j2 + j3) + ln_factorial(-j1 + j2 + j3)
            - ln_factorial(j1 + j2 + j3 + 1);
    let ln_pref = 0.5
        * (ln_delta
            + ln_factorial(j1 + m1)
            + ln_factorial(j1 - m1)
            + ln_factorial(j2 + m2)
            + ln_factorial(j2 - m2)
            + ln_factorial(j3 + m3)
            + ln_factorial(j3 - m3));

    let t_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let t_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let ln_den = ln_factorial(t)
            + ln_factorial(j3 - j2 + t + m1)
            + ln_factorial(j3 - j1 + t - m2)
            + ln_factorial(j1 + j2 - j3 - t)
            + ln_factorial(j1 - t - m1)
            + ln_factorial(j2 - t + m2);
        let term = (ln_pref - ln_den).exp();
        sum += if t % 2 == 0 { term } else { -term };
    }
    if (j1 - j2 - m3) % 2 == 0 {
        sum
    } else {
        -sum
    }
}

fn parity(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Symmetric-top wavefunction: real coefficients over k = −J..J.
#[derive(Debug, Clone, Copy)]
pub struct TopState<'a> {
    pub j: i32,
    pub m: i32,
    pub coeffs: &'a [f64],
}

impl TopState<'_> {
    fn k_iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as i32 - self.j, c))
    }
}

/// The M-independent part of ⟨bra| Σ_q w_q D^r*_{pq} |ket⟩:
/// Σ_{k,k'} c'_{k'} c_k (−1)^{k'} Σ_q w_q (J' r J; −k' q k).
///
/// The full matrix element is
/// √((2J+1)(2J'+1)) (−1)^{M'} (J' r J; −M' p M) times this value.
pub fn reduced_k_part(
    bra: TopState<'_>,
    ket: TopState<'_>,
    rank: i32,
    weights: &[(i32, Complex<f64>)],
) -> Complex<f64> {
    let mut acc = Complex::new(0.0, 0.0);
    for (kp, cp) in bra.k_iter() {
        if cp == 0.0 {
            continue;
        }
        for (k, c) in ket.k_iter() {
            if c == 0.0 {
                continue;
            }
            for &(q, w) in weights {
                if kp != q + k {
                    continue;
                }
                let w3 = wigner_3j(bra.j, rank, ket.j, -kp, q, k);
                acc += w * (cp * c * parity(kp) * w3);
            }
        }
    }
    acc
}

/// M-dependent factor √((2J+1)(2J'+1)) (−1)^{M'} (J' r J; −M' p M).
pub fn m_factor(j_bra: i32, m_bra: i32, rank: i32, p: i32, j_ket: i32, m_ket: i32) -> f64 {
    let n = (((2 * j_bra + 1) * (2 * j_ket + 1)) as f64).sqrt();
    n * parity(m_bra) * wigner_3j(j_bra, rank, j_ket, -m_bra, p, m_ket)
}

/// Molecule-frame spherical components of the unit vectors along the a, b, c
/// inertial axes (a = z, b = x, c = y).
pub fn axis_weights(axis: crate::molspec::Axis) -> Vec<(i32, Complex<f64>)> {
    use crate::molspec::Axis;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match axis {
        Axis::A => vec![(0, Complex::new(1.0, 0.0))],
        Axis::B => vec![(1, Complex::new(-s, 0.0)), (-1, Complex::new(s, 0.0))],
        Axis::C => vec![(1, Complex::new(0.0, -s)), (-1, Complex::new(0.0, -s))],
    }
}
