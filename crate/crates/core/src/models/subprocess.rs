use std::process::Command;

use crate::trace::{TimedTrace, TIME_EPS};

use super::{Model, ModelError, SignalDomain};

/// External model run as `command... <input.csv> <output.csv>`. The program
/// reads the input trace and must write an output trace with the same time
/// stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct SubprocessModel {
    command: Vec<String>,
    inputs: Vec<SignalDomain>,
    outputs: Vec<String>,
}

impl SubprocessModel {
    pub fn new(command: Vec<String>, inputs: Vec<SignalDomain>, outputs: Vec<String>) -> Result<Self, ModelError> {
        if command.is_empty() {
            return Err(ModelError::BadParameter("empty command".into()));
        }
        if inputs.is_empty() || outputs.is_empty() {
            return Err(ModelError::BadParameter("model needs inputs and outputs".into()));
        }
        Ok(SubprocessModel {
            command,
            inputs,
            outputs,
        })
    }
}

impl Model for SubprocessModel {
    fn name(&self) -> &str {
        "subprocess"
    }

    fn inputs(&self) -> &[SignalDomain] {
        &self.inputs
    }

    fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn simulate(&self, input: &TimedTrace) -> Result<TimedTrace, ModelError> {
        let names: Vec<&str> = self.inputs.iter().map(|d| d.name.as_str()).collect();
        let u = input
            .project(&names)
            .ok_or_else(|| ModelError::MissingInput(names.join(",")))?;
        let dir = tempfile::tempdir()?;
        let in_path = dir.path().join("input.csv");
        let out_path = dir.path().join("output.csv");
        u.save(&in_path)?;
        let status = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg(&in_path)
            .arg(&out_path)
            .status()
            .map_err(|e| ModelError::Subprocess(format!("cannot run `{}`: {e}", self.command[0])))?;
        if !status.success() {
            return Err(ModelError::Subprocess(format!("`{}` exited with {status}", self.command[0])));
        }
        let y = TimedTrace::load(&out_path)?;
        let same_grid = y.len() == input.len()
            && y.times().iter().zip(input.times()).all(|(a, b)| (a - b).abs() <= TIME_EPS);
        if !same_grid {
            return Err(ModelError::Subprocess("output time stamps differ from input".into()));
        }
        let outs: Vec<&str> = self.outputs.iter().map(String::as_str).collect();
        y.project(&outs)
            .ok_or_else(|| ModelError::Subprocess(format!("output lacks one of {}", outs.join(","))))
    }
}
