//! Command dispatch: each command drives the core modules and emits its
//! result files through the [`OutputWriter`].

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;

use cgs_core::circuit::{
    build_capacitance_matrix, calibrate_fluxes, e_lj_from_inductance, fourier_cosine_coefficients,
    kinetic_energy, squid_harmonic_expansion, squid_harmonic_series, squid_potential_exact,
    symmetry_breaking_metric, CalibrationTarget, ChargeVector, SiteCapacitances, SquidParams, K_B,
};
use cgs_core::classical::{flip_path_energy, CouplingParams, PathSpec};
use cgs_core::hadamard::{
    enumerate_automorphism_pairs, enumerate_automorphism_pairs_full, flat_band_spectrum,
    is_hadamard, SignMatrix,
};
use cgs_core::lattice::LatticeGeometry;
use cgs_core::linalg::{group_eigenvalues, jacobi_eigen};
use cgs_core::loops::{
    config_from_pairing, count_z2_configs, crystal_pairing, factorization_check,
    loop_partition_function, mc_sample, McConfig,
};
use cgs_core::quantum::{
    build_effective_hamiltonian, check_conserved_plaquettes, exact_diagonalize,
    stabilizer_spectrum_oracle, wkb_flip_amplitude, wkb_scaling_probe, wxy_bias, wxy_hamiltonian,
    wxy_symmetry_operators, StabilizerModelParams, WkbParams,
};
use cgs_core::rng::CounterRng;

use crate::config::{Command, RunConfig};
use crate::output::{fmt_f64, OutputWriter};

pub fn run(config: &RunConfig, out: &mut OutputWriter, seed: u64) -> Result<()> {
    if let Some(geom) = config.geometry {
        let g = LatticeGeometry::build(geom.lx, geom.ly)?;
        out.write_json("geometry", &g.summary())?;
    }
    match config.command {
        Command::Symmetry => run_symmetry(config, out),
        Command::Classical => run_classical(config, out, seed),
        Command::Loops => run_loops(config, out, seed),
        Command::Mc => run_mc(config, out, seed),
        Command::Ed => run_ed(config, out),
        Command::Wxy => run_wxy(config, out),
        Command::Wkb => run_wkb(config, out),
        Command::Circuit => run_circuit(config, out, seed),
    }
}

fn geometry(config: &RunConfig) -> Result<LatticeGeometry> {
    let g = config.geometry.ok_or_else(|| anyhow!("geometry missing"))?;
    Ok(LatticeGeometry::build(g.lx, g.ly)?)
}

fn run_symmetry(config: &RunConfig, out: &mut OutputWriter) -> Result<()> {
    let params = config.symmetry.clone().unwrap_or_default();
    let w = match params.w {
        Some(entries) => SignMatrix::new(entries)?,
        None => SignMatrix::canonical(),
    };
    let pairs = out.time_task("enumerate_diagonal_r", || {
        Ok(enumerate_automorphism_pairs(&w)?)
    })?;
    let full = if params.full_monomial_r {
        Some(out.time_task("enumerate_full_monomial_r", || {
            Ok(enumerate_automorphism_pairs_full(&w)?)
        })?)
    } else {
        None
    };
    let bands = flat_band_spectrum::<f64>(&w);
    let doc = json!({
        "w": w,
        "is_hadamard": is_hadamard(&w),
        "flat_band_spectrum": bands
            .iter()
            .map(|&(e, m)| json!({"eigenvalue": e, "multiplicity": m}))
            .collect::<Vec<_>>(),
        "diagonal_r_pairs": pairs,
        "diagonal_r_count": pairs.len(),
        "full_monomial_count": full.as_ref().map(|f| f.len()),
        "full_monomial_pairs": full,
    });
    out.write_json("symmetry", &doc)?;
    Ok(())
}

fn run_classical(config: &RunConfig, out: &mut OutputWriter, seed: u64) -> Result<()> {
    let g = geometry(config)?;
    let p = config
        .classical
        .clone()
        .ok_or_else(|| anyhow!("classical params missing"))?;
    let coupling = CouplingParams::<f64>::unit();
    let pc = crystal_pairing(&g);
    let ground = config_from_pairing::<f64>(&g, &pc, &coupling.w, seed)?;
    out.write_json("ground_config", &ground.to_records(&g))?;

    // Defaults: plaquette (0,0) carries an elementary loop of the crystal,
    // plaquette (1,0) is surrounded by four of them.
    let (ax, ay) = p.plaquette_a.unwrap_or((0, 0));
    let (bx, by) = p.plaquette_b.unwrap_or((1, 0));
    let plaq_a = g.plaquette(ax, ay)?;
    let plaq_b = g.plaquette(bx, by)?;

    let mut summary = BTreeMap::new();
    for (name, plaq, path) in [
        ("type_a", plaq_a, PathSpec::TypeA),
        ("type_b", plaq_b, PathSpec::TypeB),
        ("naive", plaq_b, PathSpec::Naive),
    ] {
        let result = out.time_task(&format!("flip_path_{name}"), || {
            Ok(flip_path_energy(
                &ground, plaq, path, p.n_steps, &coupling, &g,
            )?)
        })?;
        let rows: Vec<String> = result
            .samples
            .iter()
            .map(|s| {
                format!(
                    "{},{},{},{}",
                    s.step,
                    fmt_f64(s.delta_theta),
                    fmt_f64(s.energy),
                    fmt_f64(s.energy_excursion)
                )
            })
            .collect();
        out.write_csv(
            &format!("path_{name}"),
            "step,delta_theta,energy,energy_excursion",
            &rows,
        )?;
        summary.insert(
            name.to_string(),
            json!({
                "plaquette": {"x": plaq.x, "y": plaq.y},
                "max_excursion": result.max_excursion,
                "final_deviation": result.final_deviation,
                "n_samples": result.samples.len(),
            }),
        );
    }
    let e0 = cgs_core::classical::josephson_energy(&ground, &coupling, &g)?;
    let doc = json!({
        "lattice": {"lx": g.lx(), "ly": g.ly()},
        "ground_energy_per_site": e0 / g.n_sites() as f64,
        "paths": summary,
    });
    out.write_json("classical_summary", &doc)?;
    Ok(())
}

fn run_loops(config: &RunConfig, out: &mut OutputWriter, seed: u64) -> Result<()> {
    let g = geometry(config)?;
    let p = config
        .loops
        .clone()
        .ok_or_else(|| anyhow!("loops params missing"))?;

    let mut partition_rows = Vec::new();
    let mut enumeration = None;
    for &lambda in &p.lambda {
        let e = out.time_task(&format!("enumerate_lambda_{lambda}"), || {
            Ok(loop_partition_function(&g, lambda, p.max_exemplars)?)
        })?;
        partition_rows.push(format!(
            "{},{}",
            fmt_f64(lambda),
            fmt_f64(e.partition_function)
        ));
        enumeration = Some(e);
    }
    let enumeration = enumeration.expect("validated non-empty lambda list");
    out.write_csv("loops_partition", "lambda,z", &partition_rows)?;

    let z2 = out.time_task("count_z2", || Ok(count_z2_configs(&g)?))?;
    let factorization = if p.factorization {
        let (pairings, taus, joint) = out.time_task("factorization", || {
            Ok(factorization_check::<f64>(&g, seed)?)
        })?;
        Some(
            json!({"pairing_coverings": pairings, "valid_tau": taus, "joint_ground_states": joint}),
        )
    } else {
        None
    };

    let doc = json!({
        "lattice": {"lx": g.lx(), "ly": g.ly()},
        "histogram": enumeration.histogram,
        "max_loops": enumeration.max_loops,
        "argmax_count": enumeration.argmax_count,
        "argmax_exemplars": enumeration.argmax_exemplars,
        "crystal_is_maximizer": enumeration
            .argmax_exemplars
            .iter()
            .any(|ex| ex.pairing == crystal_pairing(&g).pairing),
        "z2": z2,
        "factorization": factorization,
    });
    out.write_json("loops_enumeration", &doc)?;
    Ok(())
}

fn run_mc(config: &RunConfig, out: &mut OutputWriter, seed: u64) -> Result<()> {
    let g = geometry(config)?;
    let p = config
        .mc
        .clone()
        .ok_or_else(|| anyhow!("mc params missing"))?;
    let coupling = CouplingParams::<f64>::unit();

    let jobs: Vec<(f64, u64)> = p
        .k_eff
        .iter()
        .flat_map(|&k| (0..p.chains).map(move |c| (k, c)))
        .collect();

    let results: Vec<_> = out.time_task("mc_chains", || {
        jobs.par_iter()
            .map(|&(k_eff, chain)| {
                let mut cfg = McConfig::new(k_eff, p.mode, p.steps, seed);
                cfg.chain_id = chain;
                cfg.init = p.init;
                if let Some(b) = p.burn_in {
                    cfg.burn_in = b;
                }
                if let Some(m) = p.measure_every {
                    cfg.measure_every = m;
                }
                mc_sample(&g, &cfg, &coupling).map(|r| (k_eff, chain, r))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(anyhow::Error::from)
    })?;

    let summary_rows: Vec<String> = results
        .iter()
        .map(|(k, chain, r)| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                fmt_f64(*k),
                chain,
                p.steps,
                fmt_f64(r.stats.mean_loop_length),
                fmt_f64(r.stats.mean_loop_length_stderr),
                fmt_f64(r.stats.n_loops_mean),
                fmt_f64(r.diagnostics.acceptance_rate),
                fmt_f64(r.diagnostics.ambiguous_site_rate),
                fmt_f64(r.diagnostics.energy_mean / g.n_sites() as f64),
            )
        })
        .collect();
    out.write_csv(
        "mc_summary",
        "k_eff,chain,steps,mean_loop_length,mean_loop_length_stderr,n_loops_mean,acceptance,ambiguous_site_rate,energy_per_site",
        &summary_rows,
    )?;

    let mut corr_rows = Vec::new();
    for (k, chain, r) in &results {
        for bin in &r.stats.correlators {
            corr_rows.push(format!(
                "{},{},{},{},{},{}",
                fmt_f64(*k),
                chain,
                fmt_f64(bin.distance),
                fmt_f64(bin.mean),
                fmt_f64(bin.stderr),
                bin.n_pairs
            ));
        }
    }
    out.write_csv(
        "mc_correlators",
        "k_eff,chain,distance,mean,stderr,n_pairs",
        &corr_rows,
    )?;

    let diagnostics: Vec<_> = results
        .iter()
        .map(|(k, chain, r)| {
            json!({
                "k_eff": k,
                "chain": chain,
                "acceptance_rate": r.diagnostics.acceptance_rate,
                "final_step_width": r.diagnostics.final_step_width,
                "plaquette_moves": r.diagnostics.plaquette_moves,
                "n_measurements": r.diagnostics.n_measurements,
                "warnings": r.diagnostics.warnings,
                "length_histogram": r.stats.length_histogram,
            })
        })
        .collect();
    out.write_json("mc_diagnostics", &diagnostics)?;
    Ok(())
}

fn run_ed(config: &RunConfig, out: &mut OutputWriter) -> Result<()> {
    let g = geometry(config)?;
    let p = config
        .ed
        .clone()
        .ok_or_else(|| anyhow!("ed params missing"))?;
    let params = StabilizerModelParams {
        lambda_j: p.lambda_j,
        lambda_flip: p.lambda_flip.to_core(),
    };
    let h = out.time_task("build_hamiltonian", || {
        Ok(build_effective_hamiltonian(&g, &params)?)
    })?;
    let dim = h.dim();

    let oracle = out.time_task("spectrum_oracle", || {
        Ok(stabilizer_spectrum_oracle(&g, &params)?)
    })?;
    let mut oracle_expanded: Vec<f64> = Vec::with_capacity(dim);
    for &(e, d) in &oracle {
        oracle_expanded.extend(std::iter::repeat_n(e, d as usize));
    }

    let n_report = if dim <= 4096 { dim } else { p.n_low.min(dim) };
    let values = out.time_task("exact_diagonalize", || Ok(exact_diagonalize(&h, n_report)?))?;

    let max_deviation = values
        .iter()
        .zip(&oracle_expanded)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    let groups = group_eigenvalues(&values, 1e-8);
    let mut rows = Vec::with_capacity(values.len());
    let mut idx = 0usize;
    for &(e, m) in &groups {
        for _ in 0..m {
            rows.push(format!("{idx},{},{m}", fmt_f64(e)));
            idx += 1;
        }
    }
    out.write_csv("spectrum", "index,energy,degeneracy", &rows)?;

    let oracle_rows: Vec<String> = oracle
        .iter()
        .enumerate()
        .map(|(i, &(e, d))| format!("{i},{},{d}", fmt_f64(e)))
        .collect();
    out.write_csv("spectrum_oracle", "level,energy,degeneracy", &oracle_rows)?;

    let (gg, hg) = out.time_task("commutators", || Ok(check_conserved_plaquettes(&h, &g)?))?;
    let doc = json!({
        "dimension": dim,
        "n_reported": values.len(),
        "lambda_j": p.lambda_j,
        "max_ed_oracle_deviation": max_deviation,
        "ground_energy": values.first(),
        "ground_degeneracy": groups.first().map(|&(_, m)| m),
        "max_commutator_gg": gg,
        "max_commutator_hg": hg,
    });
    out.write_json("ed_check", &doc)?;

    if p.emit_operator {
        let op_rows: Vec<String> = h
            .terms()
            .map(|(x, z, c)| format!("{x},{z},{}", fmt_f64(c)))
            .collect();
        out.write_csv("operator", "x_mask,z_mask,coeff", &op_rows)?;
    }
    Ok(())
}

fn run_wxy(config: &RunConfig, out: &mut OutputWriter) -> Result<()> {
    let p = config
        .wxy
        .clone()
        .ok_or_else(|| anyhow!("wxy params missing"))?;
    let w = SignMatrix::canonical();
    let model = out.time_task("build_wxy", || Ok(wxy_hamiltonian(p.cluster, p.j, &w)?))?;
    let mut h = model.hamiltonian.clone();
    if p.bias_matter != 0.0 || p.bias_gauge != 0.0 {
        h = h.add(&wxy_bias(&model, p.bias_matter, p.bias_gauge));
    }

    let ops = wxy_symmetry_operators(p.cluster, &model, &w)?;
    let max_commutator = ops
        .iter()
        .map(|u| h.commutator(u).normalized_frobenius_norm())
        .fold(0.0f64, f64::max);
    let bias_ok = {
        let bias = wxy_bias(&model, 0.31, 0.57);
        ops.iter()
            .map(|u| bias.commutator(u).normalized_frobenius_norm())
            .fold(0.0f64, f64::max)
    };

    let dim = h.dim();
    let n_report = if dim <= 4096 { dim } else { p.n_low.min(dim) };
    let values = out.time_task("diagonalize_wxy", || Ok(exact_diagonalize(&h, n_report)?))?;
    let groups = group_eigenvalues(&values, 1e-8);
    let mut rows = Vec::with_capacity(values.len());
    let mut idx = 0usize;
    for &(e, m) in &groups {
        for _ in 0..m {
            rows.push(format!("{idx},{},{m}", fmt_f64(e)));
            idx += 1;
        }
    }
    out.write_csv("wxy_spectrum", "index,energy,degeneracy", &rows)?;

    let doc = json!({
        "cluster": p.cluster,
        "n_qubits": model.n_qubits,
        "dimension": dim,
        "n_symmetry_operators": ops.len(),
        "max_symmetry_commutator": max_commutator,
        "max_bias_commutator": bias_ok,
        "ground_energy": values.first(),
    });
    out.write_json("wxy_check", &doc)?;
    Ok(())
}

fn run_wkb(config: &RunConfig, out: &mut OutputWriter) -> Result<()> {
    let p = config
        .wkb
        .clone()
        .ok_or_else(|| anyhow!("wkb params missing"))?;
    let decades = (p.jc_to / p.jc_from).log10();
    let n_points = (decades * p.points_per_decade as f64).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n_points)
        .map(|i| p.jc_from * 10f64.powf(i as f64 * decades / (n_points - 1) as f64))
        .collect();
    let base = WkbParams {
        j: p.j,
        c: 1.0,
        k: p.k,
        big_k: p.big_k,
    };
    let amplitudes: Vec<f64> = grid
        .iter()
        .map(|&jc| {
            wkb_flip_amplitude(&WkbParams {
                c: jc / p.j,
                ..base
            })
        })
        .collect::<std::result::Result<_, _>>()?;
    let rows: Vec<String> = grid
        .iter()
        .zip(&amplitudes)
        .map(|(&jc, &a)| format!("{},{}", fmt_f64(jc), fmt_f64(a)))
        .collect();
    out.write_csv("wkb_amplitude", "jc,lambda_flip", &rows)?;

    let exponent = wkb_scaling_probe(&base, &grid, &amplitudes)?;
    let doc = json!({
        "j": p.j,
        "k": p.k,
        "K": p.big_k,
        "jc_from": p.jc_from,
        "jc_to": p.jc_to,
        "fitted_exponent": exponent,
        "expected_exponent": 0.25,
    });
    out.write_json("wkb_fit", &doc)?;
    Ok(())
}

#[derive(Serialize)]
struct CalibrationRow {
    junction: usize,
    sign: i8,
    j_actual: f64,
    phi_w: f64,
    phi_t: f64,
    residual: f64,
}

fn run_circuit(config: &RunConfig, out: &mut OutputWriter, seed: u64) -> Result<()> {
    let p = config
        .circuit
        .clone()
        .ok_or_else(|| anyhow!("circuit params missing"))?;

    // Harmonic expansion vs Fourier analysis of the exact potential.
    let mut expansion_rows = Vec::new();
    for &e_lj in &p.e_lj_grid {
        let sp = SquidParams::new(1.0, 1e-12f64.max(p.d_j * 1e-9), 0.0, 0.0, e_lj)?;
        let coeffs = squid_harmonic_expansion(&sp)?;
        let fourier = fourier_cosine_coefficients(|d| squid_potential_exact(d, &sp), 3, 512)?;
        let grid: Vec<f64> = (0..256)
            .map(|k| std::f64::consts::TAU * k as f64 / 256.0)
            .collect();
        let exact: Vec<f64> = grid
            .iter()
            .map(|&d| squid_potential_exact(d, &sp))
            .collect::<std::result::Result<_, _>>()?;
        let series: Vec<f64> = grid
            .iter()
            .map(|&d| squid_harmonic_series(d, &sp, &coeffs))
            .collect();
        let mean_e: f64 = exact.iter().sum::<f64>() / grid.len() as f64;
        let mean_s: f64 = series.iter().sum::<f64>() / grid.len() as f64;
        let residual = exact
            .iter()
            .zip(&series)
            .map(|(a, b)| ((a - mean_e) - (b - mean_s)).abs())
            .fold(0.0f64, f64::max);
        expansion_rows.push(format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(e_lj),
            fmt_f64(coeffs.c1),
            fmt_f64(coeffs.c_d),
            fmt_f64(coeffs.c2),
            fmt_f64(coeffs.c3),
            fmt_f64(fourier[1]),
            fmt_f64(fourier[2]),
            fmt_f64(fourier[3]),
            fmt_f64(residual)
        ));
    }
    out.write_csv(
        "circuit_expansion",
        "e_lj,c1,c_d,c2,c3,fourier_a1,fourier_a2,fourier_a3,max_residual",
        &expansion_rows,
    )?;

    // Flux calibration under seeded disorder.
    let w = SignMatrix::canonical();
    let mut rng = CounterRng::new(seed, 0xca11);
    let mut targets = BTreeMap::new();
    let mut actual = BTreeMap::new();
    for id in 0..p.calibration_junctions {
        let sign = w.get(id % 4, (id / 4) % 4) as i8;
        targets.insert(
            id,
            CalibrationTarget {
                sign,
                j_target: 1.0f64,
            },
        );
        actual.insert(id, 1.0 + rng.uniform_in(-p.disorder_rel, p.disorder_rel));
    }
    let solutions = out.time_task("calibration", || {
        Ok(calibrate_fluxes(&targets, &actual, p.d_j)?)
    })?;
    let max_residual = solutions
        .values()
        .map(|s| s.residual)
        .fold(0.0f64, f64::max);
    let rows: Vec<CalibrationRow> = solutions
        .iter()
        .map(|(&id, s)| CalibrationRow {
            junction: id,
            sign: targets[&id].sign,
            j_actual: actual[&id],
            phi_w: s.phi_w,
            phi_t: s.phi_t,
            residual: s.residual,
        })
        .collect();
    let doc = json!({
        "d_j": p.d_j,
        "disorder_rel": p.disorder_rel,
        "n_junctions": p.calibration_junctions,
        "max_residual": max_residual,
        "junctions": rows,
    });
    out.write_json("circuit_calibration", &doc)?;

    // Capacitance matrix and electrostatic symmetry metrics.
    let f = 1e-15;
    let caps = p.capacitances_ff;
    let sc = SiteCapacitances {
        c_j: caps[0] * f,
        c_m: caps[1] * f,
        c_g: caps[2] * f,
        c_m_par: caps[3] * f,
        c_m_par2: caps[4] * f,
        c_m_par3: caps[5] * f,
        c_g_par: caps[6] * f,
        c_g_par2: caps[7] * f,
        c_g_par3: caps[8] * f,
    };
    let cmat = build_capacitance_matrix(&sc)?;
    let matrix_rows: Vec<String> = cmat
        .rows()
        .map(|row| {
            row.iter()
                .map(|&v| fmt_f64(v))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    out.write_csv(
        "capacitance_matrix",
        "m1,m2,m3,m4,g1,g2,g3,g4",
        &matrix_rows,
    )?;

    let eig = jacobi_eigen(&cmat);
    let metric = symmetry_breaking_metric(&sc)?;
    let mut q = ChargeVector::zeros(8);
    q.q[0] = 1.0;
    let ke = kinetic_energy(&q, &cmat)?;
    let sample_e_lj = e_lj_from_inductance(10e-12f64, K_B);
    let doc = json!({
        "min_eigenvalue_farads": eig.values[0],
        "positive_definite": eig.values[0] > 0.0,
        "symmetry_breaking_metric": metric,
        "junction_dominant": sc.junction_dominant(),
        "unit_matter_charge_energy": {
            "joules": ke.joules,
            "kelvin": ke.kelvin,
            "condition_number": ke.condition,
        },
        "e_lj_formula_at_1K_10pH": sample_e_lj,
    });
    out.write_json("circuit_metrics", &doc)?;
    Ok(())
}
