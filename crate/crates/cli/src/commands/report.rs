use serde_json::{Map, Value};

use super::{registry, Command, Section};
use crate::pipeline::Pipeline;
use crate::CliError;

/// Every other registered command in turn, merged into one document.
pub struct ReportCommand;

impl Command for ReportCommand {
    fn name(&self) -> &'static str {
        "report"
    }

    fn about(&self) -> &'static str {
        "run every command and write one summary with all plot data"
    }

    fn run(&self, p: &mut Pipeline) -> Result<Section, CliError> {
        let mut out = Section::default();
        let mut results = Map::new();
        for command in registry().iter().filter(|c| c.name() != self.name()) {
            let s = command.run(p)?;
            out.checks.extend(s.checks.into_iter().map(|mut c| {
                c.name = format!("{}.{}", command.name(), c.name);
                c
            }));
            out.files.extend(s.files);
            results.insert(command.name().to_string(), s.result);
        }
        out.result = Value::Object(results);
        Ok(out)
    }
}
