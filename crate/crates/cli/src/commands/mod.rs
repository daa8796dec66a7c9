//! Commands are trait objects held in a name-keyed registry; `report` runs
//! the others through the same registry.

mod check;
mod decay;
mod marginals;
mod report;
mod simulate;
mod spectrum;
mod ulam;

use std::sync::OnceLock;

use serde::Serialize;

use crate::pipeline::Pipeline;
use crate::CliError;

pub use check::CheckCommand;
pub use decay::DecayCommand;
pub use marginals::MarginalsCommand;
pub use report::ReportCommand;
pub use simulate::SimulateCommand;
pub use spectrum::SpectrumCommand;
pub use ulam::UlamCommand;

/// One embedded validity check: `holds` says whether `value` respects
/// `bound` in the sense the name describes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            holds: value <= bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            holds: value >= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub body: Vec<u8>,
}

/// What a command hands back for writing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Section {
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
    pub files: Vec<OutputFile>,
}

impl Section {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

pub trait Command: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, pipeline: &mut Pipeline) -> Result<Section, CliError>;
}

pub struct CommandRegistry {
    commands: Vec<Box<dyn Command>>,
}

impl CommandRegistry {
    pub fn empty() -> Self {
        Self {
            commands: Vec::new(),
        }
    }

    /// The seven built-in commands, in the order `report` runs them.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(CheckCommand));
        r.register(Box::new(SimulateCommand));
        r.register(Box::new(UlamCommand));
        r.register(Box::new(SpectrumCommand));
        r.register(Box::new(MarginalsCommand));
        r.register(Box::new(DecayCommand));
        r.register(Box::new(ReportCommand));
        r
    }

    /// Adds `command`, replacing any command of the same name in place.
    pub fn register(&mut self, command: Box<dyn Command>) {
        match self
            .commands
            .iter()
            .position(|c| c.name() == command.name())
        {
            Some(i) => self.commands[i] = command,
            None => self.commands.push(command),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.commands.iter().map(|c| c.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Command> {
        self.commands.iter().map(|c| c.as_ref())
    }

    pub fn get(&self, name: &str) -> Result<&dyn Command, CliError> {
        self.iter().find(|c| c.name() == name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown command `{name}`; expected one of: {}",
                self.names().join(", ")
            ))
        })
    }
}

pub fn registry() -> &'static CommandRegistry {
    static REGISTRY: OnceLock<CommandRegistry> = OnceLock::new();
    REGISTRY.get_or_init(CommandRegistry::with_builtins)
}

/// A CSV body: header row, then one row per record.
pub(crate) fn csv_body<I, R>(header: &[String], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub(crate) fn json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("result serializes")
}

/// Shortest scientific notation that reads back to the same `f64`.
pub(crate) fn num(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn headers(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Nop;

    impl Command for Nop {
        fn name(&self) -> &'static str {
            "check"
        }
        fn about(&self) -> &'static str {
            "does nothing"
        }
        fn run(&self, _: &mut Pipeline) -> Result<Section, CliError> {
            Ok(Section::default())
        }
    }

    #[test]
    fn builtins_and_replacement() {
        let mut r = CommandRegistry::with_builtins();
        assert_eq!(
            r.names(),
            [
                "check",
                "simulate",
                "ulam",
                "spectrum",
                "marginals",
                "decay",
                "report"
            ]
        );
        r.register(Box::new(Nop));
        assert_eq!(r.get("check").unwrap().about(), "does nothing");
        assert_eq!(r.names().len(), 7);
        let e = r.get("plot").err().unwrap();
        assert_eq!(e.exit_code(), crate::EXIT_USAGE);
    }

    #[test]
    fn csv_rows() {
        let body = csv_body(
            &headers(&["t", "density"]),
            vec![vec![num(0.5), num(1e-20)]],
        )
        .unwrap();
        assert_eq!(String::from_utf8(body).unwrap(), "t,density\n5e-1,1e-20\n");
    }
}
