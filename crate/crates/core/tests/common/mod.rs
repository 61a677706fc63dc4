//! Oracles shared by the integration tests, written independently of the
//! library's own angular-momentum code.
#![allow(dead_code)]

use polyion::molspec::{AxisTriple, MolecularSpecies};

fn ln_fact(n: i32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Racah's closed form for the Wigner 3j symbol.
pub fn threej(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 || j3 < (j1 - j2).abs() || j3 > j1 + j2 {
        return 0.0;
    }
    if m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    let tri = ln_fact(j1 + j2 - j3) + ln_fact(j1 - j2 + j3) + ln_fact(-j1 + j2 + j3)
        - ln_fact(j1 + j2 + j3 + 1);
    let pre = 0.5
        * (tri
            + ln_fact(j1 + m1)
            + ln_fact(j1 - m1)
            + ln_fact(j2 + m2)
            + ln_fact(j2 - m2)
            + ln_fact(j3 + m3)
            + ln_fact(j3 - m3));
    let lo = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let hi = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in lo..=hi {
        let d = ln_fact(k)
            + ln_fact(j1 + j2 - j3 - k)
            + ln_fact(j1 - m1 - k)
            + ln_fact(j2 + m2 - k)
            + ln_fact(j3 - j2 + m1 + k)
            + ln_fact(j3 - j1 - m2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (pre - d).exp();
    }
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    phase * sum
}

/// ⟨J m| cos²θ |J m⟩ for a linear rotor, summed over the 3j expansion of P₂.
pub fn cos2_bruteforce(j: i32, m: i32) -> f64 {
    let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let p2 = sign * (2 * j + 1) as f64 * threej(j, 2, j, 0, 0, 0) * threej(j, 2, j, -m, 0, m);
    (1.0 + 2.0 * p2) / 3.0
}

/// Hönl–London factor for a parallel (ΔK = 0) band of a symmetric top,
/// normalized so that the sum over m, m′ and lab components is returned.
pub fn honl_london(j: i32, k: i32, j_up: i32) -> f64 {
    let dj = j_up - j;
    let (j, k) = (j as f64, k as f64);
    match dj {
        1 => ((j + 1.0).powi(2) - k * k) / (j + 1.0),
        0 => k * k * (2.0 * j + 1.0) / (j * (j + 1.0)),
        _ => (j * j - k * k) / j,
    }
}

pub fn species(name: &str, a: f64, b: f64, c: f64, pol: AxisTriple) -> MolecularSpecies {
    MolecularSpecies::new(
        name,
        50.0 * polyion::constants::AMU,
        AxisTriple::new(a, b, c),
        AxisTriple::new(1e-30, 0.0, 0.0),
        pol,
    )
    .unwrap()
}
