use gapkit_core::expr::parse_expression;
use gapkit_core::stats::correlation_decay;
use serde_json::json;

use super::{csv_body, num, Check, Command, OutputFile, Section};
use crate::pipeline::Pipeline;
use crate::CliError;

/// Correlation decay of the configured test pairs under `μ`.
pub struct DecayCommand;

impl Command for DecayCommand {
    fn name(&self) -> &'static str {
        "decay"
    }

    fn about(&self) -> &'static str {
        "fit the exponential decay rate of correlations"
    }

    fn run(&self, p: &mut Pipeline) -> Result<Section, CliError> {
        let model = p.model();
        let (u, spectrum) = (p.ulam()?, p.spectrum()?);
        let cfg = p.config();
        let h_star = &spectrum.stationary.density;
        let k = model.k();
        let lambda2 = spectrum.subdominant_modulus;
        let bound = lambda2 + cfg.decay.rate_slack;

        // test functions are written over the process values x = Γu
        let sample = |text: &str| -> Result<Vec<f64>, CliError> {
            let e = parse_expression(text, k).map_err(|e| CliError::Config(e.to_string()))?;
            let mut x = vec![0.0; k];
            (0..u.grid.total)
                .map(|b| {
                    model.dilate(&u.grid.center(b), &mut x);
                    e.eval(&x).map_err(|e| CliError::Run(e.to_string()))
                })
                .collect()
        };

        let mut checks = Vec::new();
        let mut fits = Vec::new();
        let mut series = Vec::new();
        for (i, [f, h]) in cfg.decay.pairs.iter().enumerate() {
            let fit =
                correlation_decay(&u.matrix, h_star, &sample(f)?, &sample(h)?, cfg.decay.n_max)?;
            let name = format!("decay_rate_{}", i + 1);
            // no fit means the covariances hit the noise floor within two steps
            checks.push(match fit.lambda {
                Some(l) => Check::at_most(&name, l, bound),
                None => Check {
                    name,
                    value: 0.0,
                    bound,
                    holds: true,
                },
            });
            series.push(fit.covariances.clone());
            fits.push(json!({ "f": f, "h": h, "fit": fit }));
        }

        let mut header = vec!["n".to_string()];
        header.extend((1..=series.len()).map(|i| format!("cov_{i}")));
        let rows = (0..=cfg.decay.n_max).map(|n| {
            std::iter::once(n.to_string())
                .chain(series.iter().map(|s| num(s[n])))
                .collect::<Vec<_>>()
        });
        Ok(Section {
            checks,
            result: json!({ "subdominant_modulus": lambda2, "rate_bound": bound, "pairs": fits }),
            files: vec![OutputFile {
                name: "covariances.csv".into(),
                body: csv_body(&header, rows)?,
            }],
        })
    }
}
