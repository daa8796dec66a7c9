use gapkit_core::stats::EMBEDDING_TOLERANCE;
use serde_json::json;

use super::{csv_body, headers, num, Check, Command, OutputFile, Section};
use crate::pipeline::Pipeline;
use crate::CliError;

/// A seeded trajectory of the scalar recurrence.
pub struct SimulateCommand;

impl Command for SimulateCommand {
    fn name(&self) -> &'static str {
        "simulate"
    }

    fn about(&self) -> &'static str {
        "simulate the perturbed recurrence and write the trajectory"
    }

    fn run(&self, p: &mut Pipeline) -> Result<Section, CliError> {
        let traj = p.trajectory()?;
        let cfg = p.config();
        let model = p.model();
        let (k, l) = (model.k(), model.l());
        let burn_in = cfg.simulate.burn_in;

        let kept = &traj.x[burn_in..];
        let n = kept.len() as f64;
        let mean = kept.iter().sum::<f64>() / n;
        let variance = kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let sup = traj.x.iter().fold(0.0f64, |m, x| m.max(x.abs()));

        let checks = vec![
            Check::at_most(
                "embedding_error",
                traj.max_embedding_error,
                EMBEDDING_TOLERANCE,
            ),
            Check::at_most("range", sup, l),
        ];
        let mut files = Vec::new();
        if cfg.simulate.write_trajectory {
            let rows = traj
                .thetas
                .iter()
                .enumerate()
                .map(|(s, &theta)| vec![(s + k).to_string(), num(theta), num(traj.x[s + k])]);
            files.push(OutputFile {
                name: "trajectory.csv".into(),
                body: csv_body(&headers(&["n", "theta", "x"]), rows)?,
            });
        }
        Ok(Section {
            checks,
            result: json!({
                "steps": traj.steps(),
                "burn_in": burn_in,
                "stream": traj.stream,
                "boundary_hits": traj.boundary_hits,
                "max_embedding_error": traj.max_embedding_error,
                "mean": mean,
                "variance": variance,
            }),
            files,
        })
    }
}
