use std::f64::consts::{PI, TAU};

use polyion::constants::BOLTZMANN;
use polyion::optics::LatticeConfig;
use polyion::pulses::{
    chiral_contrast, evolve_final, optimize_chiral, poisson_times, ChiralSetup, DriveField,
    InternalState,
};
use polyion::stats::mean;
use polyion::trapdyn::{
    heating_rate, normal_modes, FlipProcess, HeatingRun, LatticeDrive, TrapConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn transfer(rabi: f64, detuning: f64, windows: Vec<(f64, f64)>, t_end: f64) -> f64 {
    let f = DriveField::microwave((0, 1), rabi, windows).with_detuning(detuning);
    evolve_final(&InternalState::basis(vec![0, 1], 0).unwrap(), &[f], t_end)
        .unwrap()
        .population(1)
}

/// Detuning (Hz) at which `p` first drops to half its value at zero, by bisection.
fn half_point(p: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let target = 0.5 * p(0.0);
    let (mut a, mut b) = (0.0, hi);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if p(m) > target {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn detuned_rabi_matches_closed_form() {
    let rabi = TAU * 50e3;
    let t = 7.3e-6;
    for d in [0.0, 1e4, 3.3e5, -8e5] {
        let w2 = rabi * rabi + d * d;
        let want = rabi * rabi / w2 * (0.5 * w2.sqrt() * t).sin().powi(2);
        assert!((transfer(rabi, d, vec![(0.0, t)], t) - want).abs() < 1e-12);
    }
}

#[test]
fn pi_pulse_linewidth() {
    let t = 100e-6;
    let rabi = PI / t;
    let fwhm = 2.0 * half_point(|f| transfer(rabi, TAU * f, vec![(0.0, t)], t), 2.0 / t);
    let want = 0.799 / t;
    assert!(
        (fwhm - want).abs() < 0.05 * want,
        "fwhm {fwhm} Hz vs {want} Hz"
    );
}

#[test]
fn ramsey_fringe_period() {
    let t_free = 100e-6;
    let rabi = TAU * 2e6;
    let tp = PI / (2.0 * rabi);
    let p = |f: f64| {
        transfer(
            rabi,
            TAU * f,
            vec![(0.0, tp), (tp + t_free, 2.0 * tp + t_free)],
            2.0 * tp + t_free,
        )
    };
    // the first fringe maximum away from zero sits one period out
    let (mut a, mut b) = (0.5 / t_free, 1.5 / t_free);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if p(m1) < p(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let period = 0.5 * (a + b);
    assert!((period * t_free - 1.0).abs() < 0.01, "period {period} Hz");
    assert!(p(period) > 0.99);
}

#[test]
fn poisson_gaps_average_to_inverse_rate() {
    let rate = 2e6;
    let ts = poisson_times(rate, 0.05, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert!(ts.len() > 90_000);
    let gaps: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    let m = mean(&gaps);
    assert!((m * rate - 1.0).abs() < 0.01, "mean gap {m:e}");
}

#[test]
fn pi_shift_on_any_leg_swaps_enantiomers() {
    let (setup, res) = optimize_chiral(TAU * 10e6).unwrap();
    assert!(res.contrast >= 0.99);
    for leg in 0..3 {
        let mut s: ChiralSetup = setup.clone();
        s.phases[leg] += PI;
        let swapped = chiral_contrast(&s).unwrap();
        assert!((swapped.p_b_r - res.p_b_s).abs() < 1e-6, "leg {leg}");
        assert!((swapped.p_b_s - res.p_b_r).abs() < 1e-6, "leg {leg}");
    }
}

/// Linear-response heating of a telegraph force F(t) = ±F₀ acting along the
/// lattice axis: each mode absorbs w_k F₀² S(ω_k)/(2m) with the telegraph
/// spectrum S(ω) = 4Γ/(4Γ² + ω²).
fn telegraph_prediction(trap: &TrapConfig, cfg: &LatticeConfig, alpha: f64, rate: f64) -> f64 {
    let modes = normal_modes(trap).unwrap();
    let m_mol = trap.masses()[1];
    let k = 4.0 * PI / cfg.wavelength;
    let u0 = alpha * polyion::optics::peak_intensity(cfg)
        / (polyion::constants::SPEED_OF_LIGHT * polyion::constants::EPSILON_0);
    // the lattice is offset by λ/8 from the molecule, so the force is maximal there
    let f0 = u0 * k * (k * cfg.offset_z0).sin().abs();
    let n = cfg.direction.normalize();
    let mut de_dt = 0.0;
    for (i, &w) in modes.frequencies.iter().enumerate() {
        let u = modes.vectors.column(i);
        let proj = n.x * u[3] + n.y * u[4] + n.z * u[5];
        de_dt += proj * proj * f0 * f0 * 4.0 * rate / (4.0 * rate * rate + w * w) / (2.0 * m_mol);
    }
    de_dt / (6.0 * BOLTZMANN)
}

#[test]
fn zero_mean_telegraph_heating_matches_linear_response() {
    let trap = TrapConfig::table1(76.0);
    let cfg = LatticeConfig::table1();
    let a = 0.15e-39;
    let lattice = LatticeDrive::from_alphas(&cfg, &[a, -a]).unwrap();
    let run = HeatingRun {
        n_traj: 300,
        t_end: 1.5e-4,
        t_init: 1e-6,
        n_windows: 10,
        seed: 21,
        ..Default::default()
    };
    let est = heating_rate(&trap, Some(&lattice), &FlipProcess::pair(2e6, 0, 1), &run).unwrap();
    let want = telegraph_prediction(&trap, &cfg, a, 2e6);
    assert!(
        (est.rate - want).abs() < 0.1 * want,
        "simulated {:.4} ± {:.4} K/s, predicted {want:.4} K/s",
        est.rate,
        est.stderr
    );
}
