//! The `simulate`, `invert` and `flags` commands.

use std::path::Path;

use boolmodel::boolsim::{estimate_densities, forward_densities, sample_realization, DensityTable};
use boolmodel::error::Error;
use boolmodel::flags::{flag_measure, mean_flag_measure, FlagMeasureEstimate};
use boolmodel::invert::{recover_2d_with, recover_3d_with, RecoveredModel};
use serde::Serialize;

use crate::config::{LoadedConfig, Pipeline};
use crate::output::Sink;
use crate::{Failure, Outcome};

/// Writes `densities.csv` and, for estimated tables, the particles of the
/// first `dump_realizations` replications as `realizations/rep{r}.jsonl`.
pub fn simulate(cfg: &LoadedConfig, sink: &Sink) -> Outcome<DensityTable> {
    let model = cfg.model()?;
    let tests = cfg.test_bodies()?;
    let table = match cfg.config.estimator.pipeline {
        Pipeline::Forward => forward_densities(&model, &tests)?,
        Pipeline::Estimate => {
            let window = cfg.window()?;
            let settings = cfg.estimator();
            let table = estimate_densities(&model, &window, &tests, &settings)?;
            for r in 0..cfg.config.estimator.dump_realizations.min(settings.reps) {
                let real = sample_realization(&model, &window, settings.seed, r as u64)?;
                let mut buf = Vec::new();
                let header = serde_json::json!({
                    "config_hash": sink.config_hash,
                    "seed": sink.seed,
                    "replication": r,
                    "window": real.window,
                    "sampling_window": real.sampling_window,
                });
                serde_json::to_writer(&mut buf, &header).map_err(|e| Failure::Input(e.to_string()))?;
                buf.push(b'\n');
                real.write_jsonl(&mut buf)?;
                sink.raw(&format!("realizations/rep{r}.jsonl"), &buf)?;
            }
            table
        }
    };
    sink.csv("densities.csv", |b| table.write_csv(b))?;
    Ok(table)
}

#[derive(Serialize)]
struct IllPosedReport<'a> {
    missing: &'a [usize],
    nullity: usize,
    condition: f64,
    partial: &'a Option<Vec<f64>>,
}

/// Reads a density table and writes `recovered.json`. An unidentifiable
/// system writes `ill_posed.json` and fails with the budget code.
pub fn invert(cfg: &LoadedConfig, densities: &Path, sink: &Sink) -> Outcome<RecoveredModel> {
    let file = std::fs::File::open(densities).map_err(|e| Failure::Input(format!("{}: {e}", densities.display())))?;
    let table = DensityTable::read_csv(file).map_err(|e| Failure::Input(format!("{}: {e}", densities.display())))?;
    let mut family = cfg
        .family()?
        .ok_or_else(|| Failure::Input("inversion needs the standard test body family (d = 2, 3)".into()))?;
    if let Some(roles) = &cfg.config.invert.roles {
        family = family.restricted(roles);
    }
    let settings = &cfg.config.invert.settings;
    let result = match cfg.config.dim {
        2 => recover_2d_with(&table, &family, settings),
        _ => recover_3d_with(&table, &family, settings),
    };
    let model = match result {
        Ok(m) => m,
        Err(Error::IllPosed {
            missing,
            nullity,
            condition,
            partial,
        }) => {
            let report = IllPosedReport {
                missing: &missing,
                nullity,
                condition,
                partial: &partial,
            };
            sink.json("ill_posed.json", "ill_posed", &report)?;
            return Err(Error::IllPosed {
                missing,
                nullity,
                condition,
                partial,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    sink.json("recovered.json", "model", &model)?;
    if let Some(g) = cfg.config.invert.expected_gamma {
        let rel = (model.gamma_hat - g).abs() / g.abs().max(f64::MIN_POSITIVE);
        let tol = cfg.config.invert.tolerance;
        if !(rel <= tol) {
            return Err(Failure::Check(format!(
                "recovered intensity {} differs from {g} by {rel:.3e} relative (tolerance {tol})",
                model.gamma_hat
            )));
        }
    }
    Ok(model)
}

#[derive(Serialize)]
struct FlagSummary {
    j: usize,
    dim: usize,
    samples: usize,
    atoms: usize,
    total_mass: f64,
    stderr: f64,
}

/// Writes `flags.csv` and `flags_summary.json`.
pub fn flags(cfg: &LoadedConfig, sink: &Sink) -> Outcome<FlagMeasureEstimate> {
    let model = cfg.model()?;
    let spec = &cfg.config.flags;
    let j = spec.j.unwrap_or(1);
    let seed = cfg.config.seed;
    let f = if spec.mean {
        mean_flag_measure(&model, j, spec.samples, seed)?
    } else {
        let (shape, _) = model.shapes().next().expect("models have a shape");
        flag_measure(shape, j, spec.samples, seed)?
    };
    sink.csv("flags.csv", |b| f.write_csv(b))?;
    let summary = FlagSummary {
        j,
        dim: f.dim,
        samples: f.samples,
        atoms: f.atoms.len(),
        total_mass: f.total_mass,
        stderr: f.stderr,
    };
    sink.json("flags_summary.json", "summary", &summary)?;
    Ok(f)
}
