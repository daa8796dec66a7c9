use gapkit_core::ulam::io::{write_density_csv, write_triplets};
use gapkit_core::ulam::ROW_DRIFT_TOLERANCE;
use serde_json::json;

use super::{Check, Command, OutputFile, Section};
use crate::pipeline::Pipeline;
use crate::CliError;

/// Largest accepted gap between the power-iteration and Cesàro densities.
pub const STATIONARY_DISCREPANCY: f64 = 1e-6;

/// The Ulam matrix and its stationary density.
pub struct UlamCommand;

impl Command for UlamCommand {
    fn name(&self) -> &'static str {
        "ulam"
    }

    fn about(&self) -> &'static str {
        "assemble the Ulam matrix and compute the stationary density"
    }

    fn run(&self, p: &mut Pipeline) -> Result<Section, CliError> {
        let u = p.ulam()?;
        let spectrum = p.spectrum()?;
        let st = &spectrum.stationary;
        let tol = p.config().spectrum.tolerance;

        let checks = vec![
            Check::at_most("row_drift", u.matrix.max_row_drift, ROW_DRIFT_TOLERANCE),
            Check {
                name: "stationary_converged".into(),
                value: st.residual,
                bound: tol,
                holds: st.converged,
            },
            Check::at_most(
                "stationary_discrepancy",
                st.discrepancy,
                STATIONARY_DISCREPANCY,
            ),
        ];
        let mut matrix = Vec::new();
        write_triplets(&u.matrix, &mut matrix)?;
        let mut density = Vec::new();
        write_density_csv(&st.density, &mut density)?;
        Ok(Section {
            checks,
            result: json!({
                "grid": u.grid.counts,
                "boxes": u.grid.total,
                "nnz": u.matrix.nnz(),
                "max_row_drift": u.matrix.max_row_drift,
                "row_sum_error": u.matrix.row_sum_error(),
                "stationary": {
                    "residual": st.residual,
                    "iterations": st.iterations,
                    "converged": st.converged,
                    "cesaro_rounds": st.cesaro_rounds,
                    "cesaro_residual": st.cesaro_residual,
                    "discrepancy": st.discrepancy,
                    "integral": st.density.integral(),
                    "min": st.density.values.iter().cloned().fold(f64::INFINITY, f64::min),
                },
            }),
            files: vec![
                OutputFile {
                    name: "matrix.txt".into(),
                    body: matrix,
                },
                OutputFile {
                    name: "hstar.csv".into(),
                    body: density,
                },
            ],
        })
    }
}
