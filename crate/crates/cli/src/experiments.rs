use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use polyion::config::{
    apply_override, read_json, validate_species_value, validate_trap_value, TrapFile,
};
use polyion::constants::{kelvin_to_hz, BOLTZMANN, GHZ, MHZ, PLANCK};
use polyion::molspec::{
    allowed_transitions, auto_j_max, export_grotrian, solve_levels, thermal_populations,
    thermally_occupied, LevelTable, MolecularSpecies, StateLabel,
};
use polyion::optics::{
    lattice_secular_frequency, max_acceleration, peak_intensity, StatePotential,
};
use polyion::protocol::{
    binary_search_state, measure_subspace, prepare_state, spectroscopy_scan, FullModel,
    MeasurementRecord, Mode, MoleculeRegister, ScanPulse, SubspaceQuery,
};
use polyion::pulses::{optimize_chiral, rabi_from_voltage};
use polyion::stats::derive_seed;
use polyion::trapdyn::{
    heating_rate, integrate, max_stable_dt, sample_thermal_state, FlipProcess, LatticeDrive,
    RunSpec,
};

use crate::output::{num, Meta, Sink};
use crate::settings::Settings;
use crate::{Cli, Experiment, Failure};

struct Inputs {
    species: MolecularSpecies,
    file: TrapFile,
    settings: Settings,
    seed: u64,
}

fn schema(msg: impl Into<String>) -> Failure {
    Failure::Schema(vec![msg.into()])
}

fn settings_diagnostics(s: &Settings) -> Vec<String> {
    let mut d = Vec::new();
    if !matches!(s.mode.as_str(), "fast" | "full") {
        d.push(format!(
            "experiment.mode: expected fast or full, got {:?}",
            s.mode
        ));
    }
    if !matches!(s.scan_kind.as_str(), "rabi" | "ramsey") {
        d.push(format!(
            "experiment.scan_kind: expected rabi or ramsey, got {:?}",
            s.scan_kind
        ));
    }
    for (k, v) in [
        ("cutoff_K", s.cutoff_K),
        ("internal_T_K", s.internal_T_K),
        ("f_max_GHz", s.f_max_GHz),
        ("split_GHz", s.split_GHz),
        ("pulse_us", s.pulse_us),
        ("free_us", s.free_us),
        ("trajectory_us", s.trajectory_us),
        ("profile_span_nm", s.profile_span_nm),
    ] {
        if !(v > 0.0) {
            d.push(format!("experiment.{k}: must be positive, got {v}"));
        }
    }
    for (k, v) in [
        ("runs", s.runs),
        ("n_candidates", s.n_candidates),
        ("manifold_size", s.manifold_size),
        ("scan_points", s.scan_points),
        ("profile_points", s.profile_points),
    ] {
        if v == 0 {
            d.push(format!("experiment.{k}: must be at least 1"));
        }
    }
    if s.repeats.is_multiple_of(2) {
        d.push(format!(
            "experiment.repeats: must be odd, got {}",
            s.repeats
        ));
    }
    d
}

/// Loads, overrides and validates the inputs; returns them with the
/// canonical JSON used for hashing.
fn load(cli: &Cli) -> Result<(Inputs, Value), Failure> {
    let mut species_v =
        read_json(&cli.species).map_err(|e| schema(format!("{}: {e}", cli.species.display())))?;
    let mut trap_v =
        read_json(&cli.trap).map_err(|e| schema(format!("{}: {e}", cli.trap.display())))?;
    for o in &cli.overrides {
        let Some((k, v)) = o.split_once('=') else {
            return Err(schema(format!("override {o:?}: expected KEY=VALUE")));
        };
        match k.strip_prefix("species.") {
            Some(rest) => apply_override(&mut species_v, rest, v)?,
            None => apply_override(&mut trap_v, k, v)?,
        }
    }
    let exp_v = trap_v
        .as_object_mut()
        .and_then(|m| m.remove("experiment"))
        .unwrap_or_else(|| json!({}));
    let mut diags = Vec::new();
    let settings: Option<Settings> = serde_json::from_value(exp_v)
        .map_err(|e| diags.push(format!("experiment: {e}")))
        .ok();
    let (species, d) = validate_species_value(&species_v);
    diags.extend(d);
    let (file, d) = validate_trap_value(&trap_v, species.as_ref());
    diags.extend(d);
    if let Some(s) = &settings {
        diags.extend(settings_diagnostics(s));
    }
    match (species, file, settings) {
        (Some(species), Some(file), Some(settings)) if diags.is_empty() => {
            let canonical = json!({
                "species": species_v,
                "trap": trap_v,
                "experiment": settings,
                "run": cli.experiment.name(),
            });
            Ok((
                Inputs {
                    species,
                    file,
                    settings,
                    seed: cli.seed,
                },
                canonical,
            ))
        }
        _ => Err(Failure::Schema(diags)),
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let (inputs, canonical) = load(cli)?;
    if cli.check {
        println!("inputs valid");
        return Ok(());
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| schema(format!("{}: {e}", cli.out.display())))?;
    let sink = Sink {
        dir: cli.out.clone(),
        meta: Meta::new(&canonical, cli.seed),
    };
    match cli.experiment {
        Experiment::Levels => levels(&inputs, &sink),
        Experiment::Transitions => transitions(&inputs, &sink),
        Experiment::Alpha => alpha(&inputs, &sink),
        Experiment::Potential => potential(&inputs, &sink),
        Experiment::Heat => heat(&inputs, &sink),
        Experiment::Readout => readout(&inputs, &sink),
        Experiment::Search => search(&inputs, &sink),
        Experiment::Prepare => prepare(&inputs, &sink),
        Experiment::Chiral => chiral(&inputs, &sink),
        Experiment::Scan => scan(&inputs, &sink),
    }
}

fn level_table(inp: &Inputs) -> Result<LevelTable, Failure> {
    let cutoff = kelvin_to_hz(inp.settings.cutoff_K);
    Ok(solve_levels(
        &inp.species,
        auto_j_max(&inp.species, cutoff),
        cutoff,
    )?)
}

fn levels(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let table = level_table(inp)?;
    let j_max = table.states.iter().map(|s| s.j).max().unwrap_or(0);
    let doc = export_grotrian(&table, &Default::default(), 0.0);
    sink.json(
        "levels.json",
        &json!({
            "species": table.species.name,
            "cutoff_K": inp.settings.cutoff_K,
            "j_max": j_max,
            "n_states": table.len(),
            "n_manifolds": table.manifolds.len(),
            "levels": doc.levels,
        }),
    )?;
    println!(
        "{}: {} states in {} manifolds below {} K (J <= {j_max})",
        table.species.name,
        table.len(),
        table.manifolds.len(),
        inp.settings.cutoff_K
    );
    Ok(())
}

fn transitions(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let table = level_table(inp)?;
    let catalog = allowed_transitions(&table, &inp.species, 0.0, inp.settings.f_max_GHz * GHZ)?;
    let split = inp.settings.split_GHz * GHZ;
    let doc = export_grotrian(&table, &catalog, split);
    sink.json("grotrian.json", &doc)?;
    let reach = catalog.reachable_from(table.len(), 0, split);
    let n_reach = reach.iter().filter(|&&r| r).count();
    let below = catalog
        .entries
        .iter()
        .filter(|t| t.frequency <= split)
        .count();
    sink.json(
        "transitions_summary.json",
        &json!({
            "n_states": table.len(),
            "n_transitions": catalog.len(),
            "n_below_split": below,
            "split_GHz": inp.settings.split_GHz,
            "reachable_from_ground": n_reach,
            "all_reachable": n_reach == table.len(),
        }),
    )?;
    println!(
        "{} transitions ({} below {} GHz); {}/{} states reachable from the ground state",
        catalog.len(),
        below,
        inp.settings.split_GHz,
        n_reach,
        table.len()
    );
    Ok(())
}

fn alpha(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let table = level_table(inp)?;
    let model = inp.file.polarizability_model()?;
    let cfg = inp.file.lattice_config();
    let mut rows = Vec::with_capacity(table.len());
    for s in &table.states {
        let a = model.alpha(s, &inp.species)?;
        let u = StatePotential::new(s.label().to_string(), a, &cfg);
        rows.push(vec![
            s.id.to_string(),
            s.label().to_string(),
            num(a),
            num(polyion::constants::polarizability_to_a3(a)),
            num(u.u0_hz() / MHZ),
        ]);
    }
    let n = rows.len();
    sink.csv(
        "alpha.csv",
        &[
            "id",
            "label",
            "alpha_eff_C_m2_per_V",
            "alpha_eff_A3",
            "U0_over_h_MHz",
        ],
        rows,
    )?;
    println!("effective polarizabilities for {n} states written");
    Ok(())
}

fn potential(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let table = level_table(inp)?;
    let model = inp.file.polarizability_model()?;
    let cfg = inp.file.lattice_config();
    let s = &inp.settings;
    let half = 0.5 * s.profile_span_nm * 1e-9;
    let mut rows = Vec::new();
    for st in table.states.iter().take(s.profile_states) {
        let a = model.alpha(st, &inp.species)?;
        let p = StatePotential::new(st.label().to_string(), a, &cfg);
        for (z, u) in p.sample(-half, half, s.profile_points) {
            rows.push(vec![p.label.clone(), num(z * 1e9), num(u / PLANCK / MHZ)]);
        }
    }
    sink.csv("potential.csv", &["state", "z_nm", "U_over_h_MHz"], rows)?;

    let ground = StatePotential::new("pair0", inp.file.heating.alpha_pair[0], &cfg);
    let mu = inp
        .species
        .dipole
        .a
        .abs()
        .max(inp.species.dipole.b.abs())
        .max(inp.species.dipole.c.abs());
    let rabi = rabi_from_voltage(
        inp.file.drive.voltage_mV * 1e-3,
        mu,
        inp.file.drive.electrode_spacing_um * 1e-6,
    );
    let derived = json!({
        "I0_W_per_m2": peak_intensity(&cfg),
        "U0_over_h_MHz": ground.u0_hz() / MHZ,
        "omega_lattice_rad_per_s": lattice_secular_frequency(&ground, inp.species.mass)?,
        "rabi_over_2pi_MHz": rabi / std::f64::consts::TAU / MHZ,
        "max_acceleration_m_per_s2": max_acceleration(&ground, inp.species.mass),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&derived).unwrap_or_default()
    );
    sink.json("derived.json", &derived)
}

fn heat(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let trap = inp.file.trap_config(&inp.species);
    let cfg = inp.file.lattice_config();
    let h = &inp.file.heating;
    let lattice =
        LatticeDrive::from_alphas(&cfg, &[h.alpha_pair[0], h.alpha_pair[1], h.alpha_fixed])?;
    let run = inp.file.heating_run(inp.seed);
    let rate = inp.file.flip_rate();
    let driven = heating_rate(&trap, Some(&lattice), &FlipProcess::pair(rate, 0, 1), &run)?;
    let parked = heating_rate(&trap, Some(&lattice), &FlipProcess::fixed(2), &run)?;
    sink.json(
        "heat_summary.json",
        &json!({
            "rate_K_per_s": driven.rate,
            "stderr": driven.stderr,
            "n_traj": driven.n_traj,
            "params_hash": sink.meta.config_hash,
            "seed": inp.seed,
            "r_squared": driven.fit.r_squared,
            "fixed_state_rate_K_per_s": parked.rate,
            "fixed_state_stderr": parked.stderr,
            "dt_ns": driven.dt * 1e9,
            "t_end_ms": h.t_end_ms,
            "t_init_mK": h.t_init_mK,
        }),
    )?;
    let rows = driven
        .window_times
        .iter()
        .zip(&driven.mean_temperature)
        .zip(&parked.mean_temperature)
        .map(|((t, a), b)| vec![num(t * 1e3), num(a * 1e3), num(b * 1e3)]);
    sink.csv(
        "heat_curve.csv",
        &["t_ms", "T_driven_mK", "T_fixed_mK"],
        rows,
    )?;

    let init = sample_thermal_state(&trap, run.t_init, derive_seed(inp.seed, u64::MAX))?;
    let dt = match run.dt {
        Some(dt) => dt,
        None => 0.9 * max_stable_dt(&trap, Some(&lattice))?,
    };
    let spec = RunSpec {
        t_end: inp.settings.trajectory_us * 1e-6,
        dt,
        record_every: 20,
        seed: derive_seed(inp.seed, u64::MAX - 1),
    };
    let tr = integrate(
        &trap,
        Some(&lattice),
        &FlipProcess::pair(rate, 0, 1),
        &init,
        &spec,
    )?;
    let rows = (0..tr.len()).map(|i| {
        let p = tr.positions[i];
        let mut r = vec![num(tr.times[i] * 1e6)];
        r.extend(p.iter().flat_map(|v| v.iter().map(|x| num(x * 1e9))));
        r.push(tr.labels[i].map_or("-".into(), |l| l.to_string()));
        r.push(num(tr.energies[i] / BOLTZMANN * 1e3));
        r
    });
    sink.csv(
        "trajectory.csv",
        &[
            "t_us",
            "x1_nm",
            "y1_nm",
            "z1_nm",
            "x2_nm",
            "y2_nm",
            "z2_nm",
            "label",
            "E_total_mK",
        ],
        rows,
    )?;
    println!(
        "heating rate {:.4} ± {:.4} K/s over {} trajectories (fixed state: {:.2e} K/s)",
        driven.rate, driven.stderr, driven.n_traj, parked.rate
    );
    Ok(())
}

#[derive(Serialize)]
struct LogLine<'a> {
    run_id: usize,
    step: usize,
    query_ids: &'a [usize],
    outcome: polyion::protocol::Outcome,
    post_state: usize,
    t_model_ms: f64,
}

fn log_lines(runs: &[Vec<MeasurementRecord>]) -> Vec<LogLine<'_>> {
    let mut out = Vec::new();
    for (run_id, recs) in runs.iter().enumerate() {
        let mut t = 0.0;
        for (step, r) in recs.iter().enumerate() {
            t += r.elapsed;
            out.push(LogLine {
                run_id,
                step,
                query_ids: &r.query,
                outcome: r.outcome,
                post_state: r.post_state,
                t_model_ms: t * 1e3,
            });
        }
    }
    out
}

/// The ground state together with the m = 0 component of the lowest J = 1 level.
fn ground_pair(table: &LevelTable) -> Result<SubspaceQuery, Failure> {
    let first = table
        .manifolds
        .iter()
        .find(|m| m.j == 1)
        .ok_or_else(|| Failure::Numeric("no J = 1 level below the cutoff".into()))?;
    let one = table
        .find(StateLabel::new(1, first.ka, first.kc, 0))
        .ok_or_else(|| Failure::Numeric("missing m = 0 state".into()))?;
    Ok(SubspaceQuery::chain([0, one])?)
}

fn readout(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let table = level_table(inp)?;
    let q = ground_pair(&table)?;
    let th = inp.file.thermometer();
    let full = if inp.settings.mode == "full" {
        let model = inp.file.polarizability_model()?;
        let alpha = table
            .states
            .iter()
            .map(|s| model.alpha(s, &inp.species))
            .collect::<polyion::Result<Vec<_>>>()?;
        let mut m = FullModel::new(
            inp.file.trap_config(&inp.species),
            inp.file.lattice_config(),
            alpha,
        );
        m.flip_rate = inp.file.flip_rate();
        m.t_init = inp.file.heating.t_init_mK * 1e-3;
        m.timing.heat = inp.file.heating.t_end_ms * 1e-3;
        Some(m)
    } else {
        None
    };
    let runs: Vec<Vec<MeasurementRecord>> = (0..inp.settings.runs)
        .into_par_iter()
        .map(|i| {
            let mut reg = MoleculeRegister::thermal(
                &table,
                inp.settings.internal_T_K,
                derive_seed(inp.seed, i as u64),
            )?;
            let mode = full.as_ref().map_or(Mode::Fast, Mode::Full);
            Ok(vec![measure_subspace(&mut reg, &q, &th, mode)?])
        })
        .collect::<polyion::Result<_>>()?;
    sink.jsonl("readout.jsonl", &log_lines(&runs))?;
    let heated = runs.iter().filter(|r| r[0].outcome.heated()).count();
    let prior = thermal_populations(&table, inp.settings.internal_T_K)?;
    let p_q: f64 = q.members.iter().map(|&i| prior[i]).sum();
    sink.json(
        "readout_summary.json",
        &json!({
            "runs": runs.len(),
            "query_ids": q.members,
            "heated_fraction": heated as f64 / runs.len() as f64,
            "prior_mass_of_query": p_q,
            "mode": inp.settings.mode,
        }),
    )?;
    println!(
        "heated in {heated}/{} readouts (prior mass of query {p_q:.4})",
        runs.len()
    );
    Ok(())
}

fn candidate_prior(n: usize, cand: &[usize], full: &[f64]) -> Vec<f64> {
    let z: f64 = cand.iter().map(|&i| full[i]).sum();
    let mut p = vec![0.0; n];
    for &i in cand {
        p[i] = full[i] / z;
    }
    p
}

fn search(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let table = level_table(inp)?;
    let s = &inp.settings;
    let cand = thermally_occupied(&table, s.internal_T_K, s.n_candidates)?;
    let prior = candidate_prior(
        table.len(),
        &cand,
        &thermal_populations(&table, s.internal_T_K)?,
    );
    let th = inp.file.thermometer();
    let results: Vec<_> = (0..s.runs)
        .into_par_iter()
        .map(|i| {
            let mut reg = MoleculeRegister::new(0, prior.clone(), derive_seed(inp.seed, i as u64))?;
            let truth = draw(&prior, derive_seed(inp.seed ^ 0xabcd, i as u64));
            reg.set_truth(truth);
            let r = binary_search_state(&mut reg, &cand, &th, s.max_steps, s.repeats)?;
            let correct = r.found == Some(reg.truth());
            Ok((r, correct))
        })
        .collect::<polyion::Result<_>>()?;
    let records: Vec<Vec<MeasurementRecord>> =
        results.iter().map(|(r, _)| r.records.clone()).collect();
    sink.jsonl("search.jsonl", &log_lines(&records))?;
    let n = results.len() as f64;
    let correct = results.iter().filter(|(_, c)| *c).count();
    let dets: Vec<usize> = results.iter().map(|(r, _)| r.determinations).collect();
    let bound = 3 * (cand.len() as f64).log2().ceil() as usize;
    sink.json(
        "search_summary.json",
        &json!({
            "runs": results.len(),
            "n_candidates": cand.len(),
            "success_rate": correct as f64 / n,
            "mean_determinations": dets.iter().sum::<usize>() as f64 / n,
            "max_determinations": dets.iter().max(),
            "bound_3_ceil_log2_n": bound,
            "repeats": s.repeats,
        }),
    )?;
    println!(
        "identified the final state in {correct}/{} runs; at most {} determinations (bound {bound})",
        results.len(),
        dets.iter().max().unwrap_or(&0)
    );
    Ok(())
}

fn draw(p: &[f64], seed: u64) -> usize {
    use rand::{Rng, SeedableRng};
    let u: f64 = rand_chacha::ChaCha8Rng::seed_from_u64(seed).random();
    let mut acc = 0.0;
    for (i, x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

fn prepare(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let table = level_table(inp)?;
    let s = &inp.settings;
    let catalog = allowed_transitions(&table, &inp.species, 0.0, s.f_max_GHz * GHZ)?;
    let members = thermally_occupied(&table, s.internal_T_K, s.manifold_size)?;
    let manifold = SubspaceQuery::chain(members.iter().copied())?;
    let target = (0..table.len())
        .find(|&b| {
            !manifold.contains(b) && members.iter().any(|&a| catalog.between(a, b).is_some())
        })
        .ok_or_else(|| schema("no state outside the manifold has an allowed transition into it"))?;
    let prior = candidate_prior(
        table.len(),
        &members,
        &thermal_populations(&table, s.internal_T_K)?,
    );
    let th = inp.file.thermometer();
    let results: Vec<_> = (0..s.runs)
        .into_par_iter()
        .map(|i| {
            let mut reg = MoleculeRegister::new(0, prior.clone(), derive_seed(inp.seed, i as u64))?;
            reg.set_truth(draw(&prior, derive_seed(inp.seed ^ 0xabcd, i as u64)));
            let r = prepare_state(&mut reg, &catalog, &manifold, target, &th, s.max_rounds)?;
            let in_target = reg.truth() == target;
            Ok((r, in_target))
        })
        .collect::<polyion::Result<_>>()?;
    let records: Vec<Vec<MeasurementRecord>> =
        results.iter().map(|(r, _)| r.records.clone()).collect();
    sink.jsonl("prepare.jsonl", &log_lines(&records))?;
    let ok: Vec<&polyion::protocol::PrepareResult> = results
        .iter()
        .filter(|(r, _)| r.success)
        .map(|(r, _)| r)
        .collect();
    let mean_rounds = ok.iter().map(|r| r.rounds as f64).sum::<f64>() / ok.len().max(1) as f64;
    let truly = results.iter().filter(|(r, t)| r.success && *t).count();
    sink.json(
        "prepare_summary.json",
        &json!({
            "runs": results.len(),
            "manifold": manifold.members,
            "target": target,
            "target_label": table.states[target].label().to_string(),
            "bridge": results.first().map(|(r, _)| r.bridge),
            "success_rate": ok.len() as f64 / results.len() as f64,
            "heralds_correct": truly,
            "mean_rounds": mean_rounds,
            "geometric_prediction": manifold.len() as f64,
        }),
    )?;
    println!(
        "heralded {} of {} runs into {}; mean rounds {mean_rounds:.3} (geometric {})",
        ok.len(),
        results.len(),
        table.states[target].label(),
        manifold.len()
    );
    Ok(())
}

fn chiral(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let mu = inp.species.dipole;
    let d = mu.a.abs().max(mu.b.abs()).max(mu.c.abs());
    let rabi = rabi_from_voltage(
        inp.file.drive.voltage_mV * 1e-3,
        d,
        inp.file.drive.electrode_spacing_um * 1e-6,
    );
    let (setup, r) = optimize_chiral(rabi)?;
    sink.json(
        "chiral.json",
        &json!({
            "P_B_R": r.p_b_r,
            "P_B_S": r.p_b_s,
            "contrast": r.contrast,
            "rabi_over_2pi_MHz": rabi / std::f64::consts::TAU / MHZ,
            "phases_rad": setup.phases,
            "durations_us": setup.durations.map(|t| t * 1e6),
        }),
    )?;
    println!(
        "enantiomer contrast {:.6} (P_B: R {:.6}, S {:.6})",
        r.contrast, r.p_b_r, r.p_b_s
    );
    Ok(())
}

fn scan(inp: &Inputs, sink: &Sink) -> Result<(), Failure> {
    let table = level_table(inp)?;
    let s = &inp.settings;
    let catalog = allowed_transitions(&table, &inp.species, 0.0, s.f_max_GHz * GHZ)?;
    let line = catalog
        .entries
        .iter()
        .filter(|t| t.lower == 0 || t.upper == 0)
        .max_by(|a, b| a.line_strength.total_cmp(&b.line_strength))
        .ok_or_else(|| schema("the ground state has no allowed transition"))?;
    let to = if line.lower == 0 {
        line.upper
    } else {
        line.lower
    };
    let t_pulse = s.pulse_us * 1e-6;
    let rabi = PI / t_pulse;
    let (pulse, span) = if s.scan_kind == "rabi" {
        (
            ScanPulse::Rabi {
                from: 0,
                to,
                rabi,
                duration: t_pulse,
            },
            4.0 / t_pulse,
        )
    } else {
        let t_free = s.free_us * 1e-6;
        (
            ScanPulse::Ramsey {
                from: 0,
                to,
                rabi,
                t_free,
            },
            3.0 / t_free,
        )
    };
    let n = s.scan_points.max(2);
    let det: Vec<f64> = (0..n)
        .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
        .collect();
    let mut reg = MoleculeRegister::thermal(&table, s.internal_T_K, inp.seed)?;
    reg.set_truth(0);
    let pts = spectroscopy_scan(
        &mut reg,
        &catalog,
        &inp.file.thermometer(),
        &pulse,
        &det,
        s.scan_shots,
    )?;
    let rows = pts
        .iter()
        .map(|p| vec![num(p.detuning * 1e-3), num(p.transfer_prob)]);
    sink.csv("scan.csv", &["detuning_kHz", "transfer_prob"], rows)?;
    println!(
        "{} scan of {} -> {} at {:.6} GHz: {} points",
        s.scan_kind,
        table.states[0].label(),
        table.states[to].label(),
        line.frequency / GHZ,
        pts.len()
    );
    Ok(())
}
