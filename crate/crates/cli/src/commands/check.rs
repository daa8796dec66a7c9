use gapkit_core::model::{boundary_separation, boundary_traces};
use serde_json::json;

use super::{csv_body, json, num, Check, Command, OutputFile, Section};
use crate::pipeline::Pipeline;
use crate::CliError;

/// Geometry, admissibility margins, boundary separation and the
/// Lasota–Yorke constants.
pub struct CheckCommand;

impl Command for CheckCommand {
    fn name(&self) -> &'static str {
        "check"
    }

    fn about(&self) -> &'static str {
        "geometry report, admissibility margins and Lasota-Yorke constants"
    }

    fn run(&self, p: &mut Pipeline) -> Result<Section, CliError> {
        let model = p.model();
        let g = &p.config().geometry;
        let (theta, sampling) = (g.boundary_theta, g.boundary_sampling);
        let geometry = &model.geometry;

        let mut checks: Vec<Check> = geometry
            .condition_margins
            .iter()
            .map(|m| Check {
                name: m.name.clone(),
                value: m.value,
                bound: m.bound,
                holds: m.holds,
            })
            .collect();

        let separation = boundary_separation(&model, theta, sampling)?;
        checks.push(Check {
            name: "boundary_separation".into(),
            value: separation.min_distance.unwrap_or(f64::MAX),
            bound: separation.lower_bound,
            holds: separation.ok,
        });

        let ly = p.lasota_yorke()?;
        let ly_json = match ly.as_ref() {
            Ok(c) => {
                checks.push(Check {
                    name: "lasota_yorke_eta".into(),
                    value: c.eta,
                    bound: 1.0,
                    holds: c.contracting(),
                });
                json(c)
            }
            Err(reason) => {
                checks.push(Check {
                    name: "lasota_yorke_eta".into(),
                    value: geometry.eta0_value,
                    bound: 1.0,
                    holds: false,
                });
                json!({ "error": reason })
            }
        };

        let k = model.k();
        let traces = boundary_traces(&model, theta, sampling)?;
        let mut header = vec!["j".to_string()];
        header.extend((1..=k).map(|i| format!("u{i}")));
        let rows = traces.iter().flat_map(|t| {
            t.points.iter().map(move |pt| {
                std::iter::once(t.j.to_string())
                    .chain(pt.iter().map(|&v| num(v)))
                    .collect::<Vec<_>>()
            })
        });
        let boundaries = csv_body(&header, rows)?;

        Ok(Section {
            checks,
            result: json!({
                "geometry": json(geometry),
                "boundary_separation": json(&separation),
                "lasota_yorke": ly_json,
            }),
            files: vec![OutputFile {
                name: "boundaries.csv".into(),
                body: boundaries,
            }],
        })
    }
}
