use gapkit_core::stats::{
    empirical_vs_stationary, marginal_density, skew_product_check, Marginal1D,
};
use serde_json::json;

use super::{csv_body, headers, num, Check, Command, OutputFile, Section};
use crate::pipeline::Pipeline;
use crate::CliError;

/// Law of `X` read from each slot of `h*`, compared across slots, against
/// the simulated histogram and through one step of the skew product.
pub struct MarginalsCommand;

fn marginal_csv(m: &Marginal1D) -> Result<Vec<u8>, CliError> {
    csv_body(
        &headers(&["t", "density"]),
        m.t.iter()
            .zip(&m.density)
            .map(|(&t, &d)| vec![num(t), num(d)]),
    )
}

impl Command for MarginalsCommand {
    fn name(&self) -> &'static str {
        "marginals"
    }

    fn about(&self) -> &'static str {
        "marginal densities of the scalar process and their consistency checks"
    }

    fn run(&self, p: &mut Pipeline) -> Result<Section, CliError> {
        let model = p.model();
        let spectrum = p.spectrum()?;
        let traj = p.trajectory()?;
        let cfg = p.config();
        let tol = cfg.marginals.tolerance;
        let h_star = &spectrum.stationary.density;
        let k = model.k();

        let marginals = (1..=k)
            .map(|j| marginal_density(h_star, &model, j))
            .collect::<Result<Vec<_>, _>>()?;
        let mut checks = Vec::new();
        let mut files = Vec::new();
        let mut table = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let d = marginals[i].l1_distance(&marginals[j])?;
                table.push(json!({ "i": i + 1, "j": j + 1, "l1": d }));
                checks.push(Check::at_most(
                    &format!("marginal_l1_{}_{}", i + 1, j + 1),
                    d,
                    tol,
                ));
            }
        }
        let cross_rows = table.iter().map(|r| {
            vec![
                r["i"].to_string(),
                r["j"].to_string(),
                num(r["l1"].as_f64().unwrap_or(f64::NAN)),
            ]
        });
        files.push(OutputFile {
            name: "marginal_l1.csv".into(),
            body: csv_body(&headers(&["i", "j", "l1"]), cross_rows)?,
        });
        for m in &marginals {
            files.push(OutputFile {
                name: format!("marginal_{}.csv", m.axis),
                body: marginal_csv(m)?,
            });
        }

        let empirical = empirical_vs_stationary(&traj, &marginals[0], cfg.simulate.burn_in)?;
        checks.push(Check::at_most("empirical_l1", empirical.l1, tol));
        let rows = marginals[0]
            .t
            .iter()
            .zip(&empirical.histogram.density)
            .zip(&marginals[0].density)
            .map(|((&t, &e), &s)| vec![num(t), num(e), num(s)]);
        files.push(OutputFile {
            name: "empirical.csv".into(),
            body: csv_body(&headers(&["t", "empirical", "stationary"]), rows)?,
        });

        let pushforward = if cfg.marginals.pushforward_samples > 0 {
            let s =
                skew_product_check(&model, h_star, cfg.marginals.pushforward_samples, cfg.seed)?;
            checks.push(Check::at_most("pushforward_l1", s.l1, tol));
            let mut header: Vec<String> = (1..=k).map(|i| format!("u{i}")).collect();
            header.extend(["hstar".to_string(), "pushforward".to_string()]);
            let rows = (0..h_star.grid.total).map(|b| {
                let mut row: Vec<String> = h_star.grid.center(b).into_iter().map(num).collect();
                row.push(num(h_star.values[b]));
                row.push(num(s.histogram.values[b]));
                row
            });
            files.push(OutputFile {
                name: "pushforward.csv".into(),
                body: csv_body(&header, rows)?,
            });
            json!({ "samples": s.samples, "l1": s.l1 })
        } else {
            serde_json::Value::Null
        };

        Ok(Section {
            checks,
            result: json!({
                "bins": marginals.iter().map(|m| m.bins()).collect::<Vec<_>>(),
                "integrals": marginals.iter().map(|m| m.integral()).collect::<Vec<_>>(),
                "cross_axis_l1": table,
                "empirical": { "samples": empirical.samples, "burn_in": empirical.burn_in, "l1": empirical.l1 },
                "pushforward": pushforward,
            }),
            files,
        })
    }
}
