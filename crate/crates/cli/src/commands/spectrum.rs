use serde_json::json;

use super::{json, Check, Command, Section};
use crate::pipeline::Pipeline;
use crate::CliError;

/// How far the Rayleigh quotient of `h*` may sit from one.
pub const LEADING_TOLERANCE: f64 = 1e-8;

/// Leading eigenvalue, `|λ₂|` and the gap.
pub struct SpectrumCommand;

impl Command for SpectrumCommand {
    fn name(&self) -> &'static str {
        "spectrum"
    }

    fn about(&self) -> &'static str {
        "leading eigenvalue, subdominant modulus and spectral gap of the Ulam matrix"
    }

    fn run(&self, p: &mut Pipeline) -> Result<Section, CliError> {
        let s = p.spectrum()?;
        let checks = vec![
            Check::at_most(
                "leading_eigenvalue",
                (s.leading_eigenvalue - 1.0).abs(),
                LEADING_TOLERANCE,
            ),
            Check {
                name: "gap_found".into(),
                value: s.gap,
                bound: 1e-6,
                holds: s.gap_found,
            },
        ];
        Ok(Section {
            checks,
            result: json!({
                "leading_eigenvalue": s.leading_eigenvalue,
                "subdominant_modulus": s.subdominant_modulus,
                "gap": s.gap,
                "gap_found": s.gap_found,
                "subdominant": json(&s.subdominant),
            }),
            files: Vec::new(),
        })
    }
}
