//! The five pipeline commands: damage, anneal, sweep, fit, qmem-report.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv_header, json_with_meta, resolve_out, write_atomic};
use nvforge_core::defect::{anneal, charge_partition};
use nvforge_core::pl::{
    fit_lines, linewidth_at_fluence, paper_fig4_fluence_grid, power_sweep,
    predict_zpl_intensities, EmissionLine, Spectrum,
};
use nvforge_core::qmem::{build_report, report_provenance, EnsembleSpec};
use nvforge_core::transport::simulate_transport;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;

/// Output format of the tabular commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Sweep axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Fluence,
    Power,
}

/// A validated sweep request.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Result<Self, CliError> {
        if values.len() < 2 {
            return Err(CliError::usage("a sweep needs at least 2 points"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::usage("sweep values must be strictly increasing"));
        }
        Ok(SweepSpec { axis, values })
    }
}

/// `damage`: run the transport Monte Carlo, write the depth profile and a
/// summary.
pub fn cmd_damage(
    config: &RunConfig,
    out_flag: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let beam = config.beam.to_spec()?;
    let transport_cfg = config.transport_with_seed();
    let profile = simulate_transport(&beam, &config.target, &transport_cfg)?;

    let csv_path = resolve_out(out_flag, config, "profile.csv");
    match format {
        OutputFormat::Csv => {
            let mut text = csv_header(config);
            text.push_str("depth_um,vacancies_per_ion_per_um,ion_stop_fraction\n");
            let bin_um = profile.bin_width_m * 1e6;
            for (i, (v, s)) in profile
                .vacancies_per_ion_per_bin
                .iter()
                .zip(profile.ion_stop_per_bin.iter())
                .enumerate()
            {
                let depth_um = (i as f64 + 0.5) * bin_um;
                let _ = writeln!(text, "{},{},{}", depth_um, v / bin_um, s);
            }
            write_atomic(&csv_path, &text)?;
        }
        OutputFormat::Json => {
            write_atomic(&csv_path, &json_with_meta(&profile, config)?)?;
        }
    }

    let summary = json!({
        "ions_simulated": profile.ions_simulated,
        "range_mean_um": profile.range_mean_m * 1e6,
        "range_straggle_um": profile.range_straggle_m * 1e6,
        "vacancies_per_ion": profile.vacancies_per_ion(),
        "end_of_range_fraction_last_0_5um": profile.end_of_range_fraction(0.5e-6).ok(),
        "cap_layer_density_cm3": profile.cap_layer_density(beam.fluence_cm2, config.cap_thickness_m),
        "backscattered_fraction": profile.backscattered_fraction,
        "energy_audit_max_rel_error": profile.energy_audit_max_rel_error,
    });
    let summary_path = csv_path.with_extension("summary.json");
    write_atomic(&summary_path, &json_with_meta(&summary, config)?)?;

    println!(
        "damage: {} ions, range {:.3} um, {:.1} vacancies/ion -> {}",
        profile.ions_simulated,
        profile.range_mean_m * 1e6,
        profile.vacancies_per_ion(),
        csv_path.display()
    );
    Ok(())
}

/// `anneal`: map a vacancy/nitrogen pair through annealing and charge
/// equilibrium to a MaterialState record.
pub fn cmd_anneal(
    config: &RunConfig,
    vacancy_density_cm3: f64,
    nitrogen_density_cm3: Option<f64>,
    out_flag: Option<&Path>,
) -> Result<(), CliError> {
    if vacancy_density_cm3 < 0.0 {
        return Err(CliError::physics("vacancy density must be >= 0"));
    }
    let nitrogen = nitrogen_density_cm3.unwrap_or(config.nitrogen_density_cm3);
    if nitrogen < 0.0 {
        return Err(CliError::physics("nitrogen density must be >= 0"));
    }
    let state = charge_partition(&anneal(vacancy_density_cm3, nitrogen, &config.anneal), &config.charge)?;
    let path = resolve_out(out_flag, config, "state.json");
    write_atomic(&path, &json_with_meta(&state, config)?)?;
    println!(
        "anneal: NV- {:.4e} cm^-3, NV0 {:.4e} cm^-3, GR1 {:.4e} cm^-3 -> {}",
        state.nv_minus,
        state.nv_zero,
        state.gr1_density,
        path.display()
    );
    Ok(())
}

fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::usage(format!("bad sweep value '{t}': {e}")))
        })
        .collect()
}

fn parse_log_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage("log range must be lo:hi:n"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| CliError::usage(format!("bad lo: {e}")))?;
    let hi: f64 = parts[1].parse().map_err(|e| CliError::usage(format!("bad hi: {e}")))?;
    let n: usize = parts[2].parse().map_err(|e| CliError::usage(format!("bad n: {e}")))?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(CliError::usage("log range needs 0 < lo < hi and n >= 2"));
    }
    Ok((0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Build the sweep values from the mutually exclusive selectors.
pub fn sweep_values(
    axis: SweepAxis,
    values: Option<&str>,
    log_range: Option<&str>,
    preset: Option<&str>,
) -> Result<Vec<f64>, CliError> {
    let given = [values.is_some(), log_range.is_some(), preset.is_some()]
        .iter()
        .filter(|b| **b)
        .count();
    if given > 1 {
        return Err(CliError::usage("give at most one of --values, --log-range, --preset"));
    }
    if let Some(list) = values {
        return parse_values(list);
    }
    if let Some(spec) = log_range {
        return parse_log_range(spec);
    }
    if let Some(name) = preset {
        return match name {
            "paper-fig4" => Ok(paper_fig4_fluence_grid()),
            other => Err(CliError::usage(format!("unknown preset '{other}'"))),
        };
    }
    // defaults per axis
    Ok(match axis {
        SweepAxis::Fluence => paper_fig4_fluence_grid(),
        SweepAxis::Power => (1..=10).map(|i| 0.5 * i as f64).collect(),
    })
}

/// `sweep`: one row per axis value with the requested observables.
pub fn cmd_sweep(
    config: &RunConfig,
    spec: &SweepSpec,
    fixed_fluence_cm2: Option<f64>,
    out_flag: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let beam = config.beam.to_spec()?;
    let transport_cfg = config.transport_with_seed();
    let profile = simulate_transport(&beam, &config.target, &transport_cfg)?;
    let path = resolve_out(out_flag, config, "sweep.csv");

    match spec.axis {
        SweepAxis::Fluence => {
            let rows = predict_zpl_intensities(
                &spec.values,
                &profile,
                config.nitrogen_density_cm3,
                &config.anneal,
                &config.charge,
                &config.absorption,
            )?;
            let widths: Result<Vec<f64>, _> = spec
                .values
                .iter()
                .map(|&f| linewidth_at_fluence(f, &config.broadening))
                .collect();
            let widths = widths?;
            match format {
                OutputFormat::Csv => {
                    let mut text = csv_header(config);
                    text.push_str("fluence_cm2,i_nv_minus,i_nv_zero,i_gr1,fwhm_nv_minus_nm\n");
                    for (r, w) in rows.iter().zip(widths.iter()) {
                        let _ = writeln!(
                            text,
                            "{},{},{},{},{}",
                            r.fluence_cm2, r.i_nv_minus, r.i_nv_zero, r.i_gr1, w
                        );
                    }
                    write_atomic(&path, &text)?;
                }
                OutputFormat::Json => {
                    let payload = json!({"rows": rows, "fwhm_nv_minus_nm": widths});
                    write_atomic(&path, &json_with_meta(&payload, config)?)?;
                }
            }
        }
        SweepAxis::Power => {
            let fluence = fixed_fluence_cm2.unwrap_or(beam.fluence_cm2);
            let rows = power_sweep(
                &spec.values,
                &profile,
                fluence,
                config.cap_thickness_m,
                config.nitrogen_density_cm3,
                &config.anneal,
                &config.charge,
                &config.photoionization,
            )?;
            match format {
                OutputFormat::Csv => {
                    let mut text = csv_header(config);
                    text.push_str("power_mw,i_nv_minus,i_nv_zero,ratio_nv_zero_to_nv_minus\n");
                    for r in &rows {
                        let _ = writeln!(
                            text,
                            "{},{},{},{}",
                            r.power_mw, r.i_nv_minus, r.i_nv_zero, r.ratio_zero_to_minus
                        );
                    }
                    write_atomic(&path, &text)?;
                }
                OutputFormat::Json => {
                    write_atomic(&path, &json_with_meta(&rows, config)?)?;
                }
            }
        }
    }
    println!("sweep: {} points -> {}", spec.values.len(), path.display());
    Ok(())
}

/// Parse a two-column spectrum CSV (`wavelength_nm, counts`), reporting the
/// offending line number on malformed input.
pub fn read_spectrum_csv(path: &Path) -> Result<Spectrum, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read spectrum {}: {e}", path.display())))?;
    let mut wavelengths = Vec::new();
    let mut counts = Vec::new();
    let mut seen_data = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(w), Some(c)) = (fields.next(), fields.next()) else {
            return Err(CliError::io(format!(
                "{}: line {}: expected 'wavelength_nm,counts'",
                path.display(),
                lineno + 1
            )));
        };
        let parsed = w.trim().parse::<f64>().and_then(|w| Ok((w, c.trim().parse::<f64>()?)));
        match parsed {
            Ok((w, c)) => {
                wavelengths.push(w);
                counts.push(c);
                seen_data = true;
            }
            // one unparsable row before any data is the header
            Err(_) if !seen_data => continue,
            Err(e) => {
                return Err(CliError::io(format!(
                    "{}: line {}: bad number: {e}",
                    path.display(),
                    lineno + 1
                )));
            }
        }
    }
    Spectrum::new(wavelengths, counts).map_err(CliError::from)
}

/// `fit`: least-squares line refinement of a spectrum file.
pub fn cmd_fit(
    config: &RunConfig,
    spectrum_path: &Path,
    initial_path: &Path,
    out_flag: Option<&Path>,
) -> Result<(), CliError> {
    let spectrum = read_spectrum_csv(spectrum_path)?;
    let text = std::fs::read_to_string(initial_path)
        .map_err(|e| CliError::io(format!("cannot read guesses {}: {e}", initial_path.display())))?;
    let initial: Vec<EmissionLine> = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid guesses {}: {e}", initial_path.display())))?;

    let outcome = fit_lines(&spectrum, &initial)?;
    let path = resolve_out(out_flag, config, "fit.json");
    write_atomic(&path, &json_with_meta(&outcome, config)?)?;
    println!(
        "fit: {} lines, residual norm {:.4e}, converged: {} -> {}",
        outcome.lines.len(),
        outcome.residual_norm,
        outcome.converged,
        path.display()
    );
    if !outcome.converged {
        return Err(CliError::physics(
            "fit did not converge within the iteration cap (best-so-far written)",
        ));
    }
    Ok(())
}

/// Named ensemble scenarios for `qmem-report`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    /// 600 C anneal, 0.25% conversion: 1e17 cm^-3 NV over the 3 um cap.
    Baseline,
    /// 800 C anneal, 5% conversion: 2e18 cm^-3 NV (20x the baseline).
    HighConversion,
}

/// `qmem-report`: evaluate every memory figure of merit and emit the
/// annotated report.
pub fn cmd_qmem_report(
    config: &RunConfig,
    scenario: Option<Scenario>,
    out_flag: Option<&Path>,
) -> Result<(), CliError> {
    let ensemble = match scenario {
        Some(Scenario::Baseline) => EnsembleSpec::baseline_low_conversion(),
        Some(Scenario::HighConversion) => EnsembleSpec::high_conversion_800c(),
        None => config.ensemble.clone(),
    };
    let report = build_report(
        &config.lambda_system,
        &config.memory_design,
        &ensemble,
        config.gamma_interpretation,
    )?;

    let provenance: serde_json::Map<String, serde_json::Value> = report_provenance()
        .iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
        .collect();
    let payload = json!({
        "report": report,
        "ensemble": ensemble,
        "provenance": provenance,
    });
    let path = resolve_out(out_flag, config, "qmem_report.json");
    write_atomic(&path, &json_with_meta(&payload, config)?)?;

    let rows: Vec<(&str, String, &str)> = vec![
        ("surface_density_cm2", format!("{:.4e}", report.surface_density_cm2), "cm^-2"),
        ("dipole_cm", format!("{:.4e}", report.dipole_cm), "C m"),
        ("optical_depth", format!("{:.4e}", report.optical_depth), ""),
        ("cooperativity", format!("{:.4e}", report.cooperativity), ""),
        ("efficiency", format!("{:.4}", report.efficiency), ""),
        ("thermal_occupation_log10", format!("{:.2}", report.thermal_occupation_log10), ""),
        ("dephasing_time_s", format!("{:.4e}", report.dephasing_time_s), "s"),
        ("memory_quality", format!("{:.3}", report.memory_quality), ""),
        ("brewster_angle_deg", format!("{:.2}", report.brewster_angle_deg), "deg"),
        ("confocal_center_count", format!("{:.4e}", report.confocal_center_count), ""),
        (
            "control_power_w",
            report
                .control_power_w
                .map(|p| format!("{p:.4e}"))
                .unwrap_or_else(|| "n/a".into()),
            "W",
        ),
    ];
    println!("quantum memory report ({}):", report.gamma_interpretation);
    let formulas: std::collections::HashMap<&str, &str> =
        report_provenance().iter().copied().collect();
    for (name, value, unit) in rows {
        let formula = formulas.get(name).copied().unwrap_or("");
        println!("  {name:<28} {value:>12} {unit:<5} {formula}");
    }
    println!("-> {}", path.display());
    Ok(())
}
