//! Subcommand implementations. Each returns its artifact; writing files is
//! left to the caller.

use std::f64::consts::FRAC_PI_4;

use serde_json::{json, Value};

use fluxmet_core::dynamics::{
    controlled_omega_propagator, controlled_theta_propagator, free_theta_state,
};
use fluxmet_core::estimation::{mse_campaign, Strategy, Task};
use fluxmet_core::metrology::{
    qfi_fidelity_fd, qfi_omega_qec_closed, qfi_omega_unitary_controlled, qfi_sld_map,
    qfi_theta_free_closed, qfi_theta_qec_closed, qfi_theta_unitary_controlled,
};
use fluxmet_core::qec::{
    asymptotic_qfi, corrected_state_omega_rotating, corrected_state_theta_closed,
    expansion_superoperators, measure_qec_conditions,
};
use fluxmet_core::qmat::{bell_state, hermitian_eig, on_probe};
use fluxmet_core::{CMatrix, CVector, DensityMatrix, C64};

use crate::config::{config_hash, Campaign};
use crate::error::{CliError, Result};
use crate::model::ModelFile;
use crate::table::CurveTable;

/// True direction used for the θ curves.
pub const THETA_WORKING_POINT: f64 = FRAC_PI_4;
/// True rotation frequency used for the Ω curves.
pub const OMEGA_WORKING_POINT: f64 = 0.5;
/// Relative tolerance of the closed-form/numeric cross-check.
pub const CROSS_CHECK_TOL: f64 = 1e-3;
const CROSS_CHECK_SAMPLES: usize = 5;
const BURES_STEP: f64 = 1e-3;
const OMEGA_CONTROL_STEPS: usize = 2000;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub struct QfiSweep {
    pub b: f64,
    pub gamma: f64,
    pub t_max: f64,
    pub points: usize,
    pub offsets: Vec<f64>,
}

impl QfiSweep {
    fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(CliError::Input(format!(
                "t-max must be positive, got {}",
                self.t_max
            )));
        }
        if self.points < 2 {
            return Err(CliError::Input("points must be at least 2".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(CliError::Input(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !self.b.is_finite() || self.offsets.iter().any(|d| !d.is_finite()) {
            return Err(CliError::Input("B and offsets must be finite".into()));
        }
        Ok(())
    }

    fn times(&self) -> Vec<f64> {
        (0..self.points)
            .map(|i| self.t_max * i as f64 / (self.points - 1) as f64)
            .collect()
    }

    fn sample_times(&self) -> Vec<f64> {
        (1..=CROSS_CHECK_SAMPLES)
            .map(|k| self.t_max * k as f64 / CROSS_CHECK_SAMPLES as f64)
            .collect()
    }

    fn hash(&self, command: &str) -> String {
        config_hash(&format!("{command}|{:?}", self))
    }
}

fn cross_check(label: &str, t: f64, numeric: f64, closed: f64) -> Result<()> {
    let scale = closed.abs().max(1e-9);
    let relative = (numeric - closed).abs() / scale;
    if relative > CROSS_CHECK_TOL {
        return Err(CliError::CrossCheck(format!(
            "{label} at t = {t}: numeric {numeric:.10e} vs closed form {closed:.10e} (relative {relative:.2e})"
        )));
    }
    Ok(())
}

fn pure_probe_state(u: &CMatrix) -> DensityMatrix {
    DensityMatrix::pure(&on_probe(u).apply(&bell_state()))
}

/// QFI of a corrected family at offset `d` from its code: Bures route at
/// `d = 0`, where the state is pure and the SLD loses the dephasing term,
/// SLD otherwise.
fn numeric_qec_qfi<F>(family: F, x: f64, d: f64) -> Result<f64>
where
    F: Fn(f64) -> fluxmet_core::Result<DensityMatrix>,
{
    let r = if d == 0.0 {
        qfi_fidelity_fd(family, x, BURES_STEP)?
    } else {
        qfi_sld_map(family, x)?
    };
    Ok(r.value)
}

fn offset_label(prefix: &str, d: f64) -> String {
    format!("{prefix}_{d}")
}

pub fn qfi_theta(sweep: &QfiSweep) -> Result<CurveTable> {
    sweep.validate()?;
    let QfiSweep { b, gamma, .. } = *sweep;
    let th = THETA_WORKING_POINT;
    let mut columns = vec!["t".to_string(), "qfi_unitary".to_string()];
    columns.extend(
        sweep
            .offsets
            .iter()
            .map(|&d| offset_label("qfi_qec_dtheta", d)),
    );
    columns.push("qfi_free".into());
    let mut table = CurveTable::new(columns)
        .with_metadata("command", "qfi-theta")
        .with_metadata("config_hash", sweep.hash("qfi-theta"))
        .with_metadata("seed", "none")
        .with_metadata("version", VERSION)
        .with_metadata("B", b)
        .with_metadata("gamma", gamma)
        .with_metadata("theta", th);
    for t in sweep.times() {
        let mut row = vec![t, qfi_theta_unitary_controlled(b, t, 0.0).value];
        row.extend(
            sweep
                .offsets
                .iter()
                .map(|&d| qfi_theta_qec_closed(b, gamma, t, d).value),
        );
        row.push(qfi_theta_free_closed(b, gamma, t).value);
        table.push_row(row);
    }

    for t in sweep.sample_times() {
        let unitary = qfi_sld_map(
            |x| Ok(pure_probe_state(&controlled_theta_propagator(b, x, th, t))),
            th,
        )?;
        cross_check(
            "qfi_unitary",
            t,
            unitary.value,
            qfi_theta_unitary_controlled(b, t, 0.0).value,
        )?;
        for &d in &sweep.offsets {
            let numeric = numeric_qec_qfi(
                |x| Ok(corrected_state_theta_closed(b, gamma, x, th + d, t)),
                th,
                d,
            )?;
            cross_check(
                &offset_label("qfi_qec_dtheta", d),
                t,
                numeric,
                qfi_theta_qec_closed(b, gamma, t, d).value,
            )?;
        }
        let free = qfi_sld_map(|x| free_theta_state(b, gamma, t, x), th)?;
        cross_check(
            "qfi_free",
            t,
            free.value,
            qfi_theta_free_closed(b, gamma, t).value,
        )?;
    }
    Ok(table)
}

pub fn qfi_omega(sweep: &QfiSweep) -> Result<CurveTable> {
    sweep.validate()?;
    let QfiSweep { b, gamma, .. } = *sweep;
    let om = OMEGA_WORKING_POINT;
    let mut columns = vec!["t".to_string(), "qfi_unitary".to_string()];
    columns.extend(
        sweep
            .offsets
            .iter()
            .map(|&d| offset_label("qfi_qec_domega", d)),
    );
    let mut table = CurveTable::new(columns)
        .with_metadata("command", "qfi-omega")
        .with_metadata("config_hash", sweep.hash("qfi-omega"))
        .with_metadata("seed", "none")
        .with_metadata("version", VERSION)
        .with_metadata("B", b)
        .with_metadata("gamma", gamma)
        .with_metadata("omega", om);
    for t in sweep.times() {
        let mut row = vec![t, qfi_omega_unitary_controlled(b, t, 0.0).value];
        row.extend(
            sweep
                .offsets
                .iter()
                .map(|&d| qfi_omega_qec_closed(b, gamma, t, d).value),
        );
        table.push_row(row);
    }

    for t in sweep.sample_times() {
        let unitary = qfi_sld_map(
            |x| {
                Ok(pure_probe_state(&controlled_omega_propagator(
                    b,
                    x - om,
                    t,
                    OMEGA_CONTROL_STEPS,
                )))
            },
            om,
        )?;
        cross_check(
            "qfi_unitary",
            t,
            unitary.value,
            qfi_omega_unitary_controlled(b, t, 0.0).value,
        )?;
        for &d in &sweep.offsets {
            let numeric = numeric_qec_qfi(
                |x| Ok(corrected_state_omega_rotating(b, gamma, x, om + d, t)),
                om,
                d,
            )?;
            cross_check(
                &offset_label("qfi_qec_domega", d),
                t,
                numeric,
                qfi_omega_qec_closed(b, gamma, t, d).value,
            )?;
        }
    }
    Ok(table)
}

/// One table per strategy: `round, estimate_mean, mse, crb_line`.
pub fn adapt(task: Task, campaign: &Campaign) -> Result<Vec<(Strategy, CurveTable)>> {
    let task_name = match task {
        Task::Theta => "theta",
        Task::Omega => "omega",
    };
    let mut out = Vec::new();
    for &strategy in &campaign.strategies {
        let config = fluxmet_core::estimation::AdaptiveConfig {
            task,
            strategy,
            ..campaign.config.clone()
        };
        let result = mse_campaign(&config, campaign.repetitions)?;
        let mut table = CurveTable::new(
            ["round", "estimate_mean", "mse", "crb_line"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
        .with_metadata("command", "adapt")
        .with_metadata("task", task_name)
        .with_metadata("strategy", strategy.name())
        .with_metadata("config_hash", campaign.hash())
        .with_metadata("seed", config.seed)
        .with_metadata("version", VERSION)
        .with_metadata("repetitions", campaign.repetitions)
        .with_metadata("true_value", format!("{:.16e}", config.true_value));
        for (k, (mse, mean)) in result.mse.iter().zip(&result.estimate_mean).enumerate() {
            table.push_row(vec![k as f64, *mean, *mse, result.crb]);
        }
        out.push((strategy, table));
    }
    Ok(out)
}

pub fn parse_probe(spec: &str, c0: &CVector, c1: &CVector) -> Result<CVector> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = match spec {
        "plus" => (h, h),
        "minus" => (h, -h),
        "zero" => (1.0, 0.0),
        "one" => (0.0, 1.0),
        other => {
            return Err(CliError::Input(format!(
                "probe: unknown probe '{other}' (expected plus, minus, zero or one)"
            )));
        }
    };
    Ok(c0.scale(C64::new(a, 0.0)).add(&c1.scale(C64::new(b, 0.0))))
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMatrix) -> Value {
    let n = m.dim();
    Value::Array(
        (0..n)
            .map(|i| Value::Array((0..n).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

/// Runs the general engine on a model file and reports the derived
/// quantities. A violated error-correction condition is reported with every
/// residual.
pub fn general_qec(model: &ModelFile, probe: &str, t: f64, tol: f64) -> Result<Value> {
    if !(t >= 0.0) {
        return Err(CliError::Input(format!("t must be non-negative, got {t}")));
    }
    let (model, code) = model.build()?;
    let conditions = measure_qec_conditions(&model, &code)?;
    if conditions.violation(tol).is_some() {
        let mut table = String::from("term residual\n");
        for (k, r) in conditions.alpha_residuals.iter().enumerate() {
            table.push_str(&format!("alpha[{k}] {r:.6e}\n"));
        }
        for (k, row) in conditions.beta_residuals.iter().enumerate() {
            for (j, r) in row.iter().enumerate() {
                table.push_str(&format!("beta[{k},{j}] {r:.6e}\n"));
            }
        }
        return Err(CliError::Condition { table });
    }
    let report = expansion_superoperators(&model, &code, tol)?;
    let (c0, c1) = code.basis(0.0);
    let psi = parse_probe(probe, &c0, &c1)?;
    let qfi = asymptotic_qfi(&report, &psi, t)?;

    let h = &report.l1_generator;
    let basis = [&c0, &c1];
    let mut h_code = CMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            h_code[(i, j)] = basis[i].inner(&h.apply(basis[j]));
        }
    }
    let spectrum = hermitian_eig(&h_code)?.values;
    Ok(json!({
        "t": t,
        "probe": probe,
        "alpha": report.conditions.alpha.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
        "beta": report.conditions.beta.iter().map(|row| row.iter().map(|&z| complex_json(z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "d": report.d,
        "max_residual": report.conditions.max_residual(),
        "h_tilde_code": matrix_json(&h_code),
        "h_tilde_spectrum": spectrum,
        "variance": qfi.variance,
        "l2_expectation": qfi.l2_expectation,
        "qfi": qfi.fisher().value,
        "version": VERSION,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(offsets: Vec<f64>) -> QfiSweep {
        QfiSweep {
            b: 0.1,
            gamma: 0.05,
            t_max: 5.0,
            points: 11,
            offsets,
        }
    }

    #[test]
    fn theta_sweep_values() {
        let table = qfi_theta(&sweep(vec![0.0, 0.05, 0.1])).unwrap();
        let last = table.rows.last().unwrap();
        assert_eq!(table.columns.len(), 6);
        assert!((last[1] - 1.0).abs() < 1e-12);
        assert!((last[2] - 2.0).abs() < 1e-12);
        let empty = qfi_theta(&sweep(vec![])).unwrap();
        assert_eq!(empty.columns, vec!["t", "qfi_unitary", "qfi_free"]);
    }

    #[test]
    fn theta_noiseless_qec_is_scaled_unitary() {
        let s = QfiSweep {
            gamma: 0.0,
            ..sweep(vec![0.1])
        };
        let table = qfi_theta(&s).unwrap();
        for r in &table.rows {
            assert!((r[2] - r[1] * 0.1f64.cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_sweep_values() {
        let table = qfi_omega(&sweep(vec![0.0, 0.05, 0.1])).unwrap();
        let last = table.rows.last().unwrap();
        assert!((last[1] - 6.25).abs() < 1e-12);
        assert!((last[2] - 14.583_333_333_333_334).abs() < 1e-9);
        assert!(table.rows[0].iter().all(|&v| v == 0.0));
        for r in &table.rows[1..] {
            assert!(r[4] < r[2]);
        }
    }

    #[test]
    fn sweep_rejects_bad_input() {
        assert!(qfi_theta(&QfiSweep {
            t_max: 0.0,
            ..sweep(vec![])
        })
        .is_err());
        assert!(qfi_omega(&QfiSweep {
            points: 1,
            ..sweep(vec![])
        })
        .is_err());
    }

    #[test]
    fn general_engine_on_theta_example() {
        let model = ModelFile::theta_example(0.1, 0.05, 0.6).unwrap();
        let report = general_qec(&model, "plus", 5.0, 1e-9).unwrap();
        assert!((report["qfi"].as_f64().unwrap() - 2.0).abs() < 1e-10);
        let spectrum: Vec<f64> =
            serde_json::from_value(report["h_tilde_spectrum"].clone()).unwrap();
        assert!((spectrum[0] + 0.1).abs() < 1e-12 && (spectrum[1] - 0.1).abs() < 1e-12);
        let noiseless = ModelFile::theta_example(0.1, 0.0, 0.6).unwrap();
        let report = general_qec(&noiseless, "plus", 5.0, 1e-9).unwrap();
        assert!((report["qfi"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn wrong_code_reports_residuals() {
        let model = ModelFile::wrong_code_example(0.1, 0.05, FRAC_PI_4).unwrap();
        match general_qec(&model, "plus", 5.0, 1e-9) {
            Err(CliError::Condition { table }) => assert!(table.contains("alpha[0]")),
            other => panic!("expected a condition violation, got {other:?}"),
        }
    }
}
