//! Scenario files: what to check, on which model, with which budgets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::adversary_by_name;
use crate::models::lehmann_rabin::{lr_registry, scenario_ids, LehmannRabin};
use crate::predicate::PredicateRegistry;
use crate::rational::{serde_rational, Rational};
use crate::report::Semantics;
use crate::verify::TimeBoundStatement;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid scenario file {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid scenario file: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Only `lehmann-rabin` is available from the command line.
    pub family: String,
    pub n: usize,
}

/// Which states a statement's source set is instantiated with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StartFamily {
    /// Every reachable state in the source set (one per memo key).
    Reachable,
    /// Distinct source states met along random walks of up to `walk` steps
    /// from the initial state.
    Sampled { count: usize, walk: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Positions the game solver may expand per statement.
    pub nodes: usize,
    /// States a reachability exploration may visit.
    pub states: usize,
    /// Simulated runs are cut off after this many time units.
    pub round_cap: u64,
    /// Simulated runs are cut off after this many actions.
    pub max_steps: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            nodes: 50_000_000,
            states: 10_000_000,
            round_cap: 1000,
            max_steps: 1_000_000,
        }
    }
}

/// A cheap first pass over all starts, after which only the hardest `keep`
/// starts get the full trial budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pilot {
    pub trials: u64,
    pub keep: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub semantics: Semantics,
    #[serde(default)]
    pub seed: u64,
    /// Runs per start (deadline semantics).
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Adversaries simulated under deadline semantics.
    #[serde(default)]
    pub adversaries: Vec<String>,
    #[serde(default)]
    pub statements: Vec<TimeBoundStatement>,
    /// Registered progress scenarios to solve exactly.
    #[serde(default)]
    pub scenarios: Vec<String>,
    #[serde(default)]
    pub starts: Option<StartFamily>,
    #[serde(default)]
    pub pilot: Option<Pilot>,
    /// Deadline semantics: the worst estimated mean time to each target
    /// must not exceed this.
    #[serde(default, with = "option_rational", skip_serializing_if = "Option::is_none")]
    pub expected_time_bound: Option<Rational>,
    /// Also check the statement obtained by chaining `statements`.
    #[serde(default)]
    pub check_composed: bool,
    /// Round semantics: include the minimizing adversary's choices.
    #[serde(default)]
    pub record_policy: bool,
    #[serde(default)]
    pub budget: Budgets,
}

fn default_trials() -> u64 {
    1000
}

mod option_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => serde_rational::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "serde_rational")] Rational);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            FileError::Parse { source, .. } => FileError::Parse {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, FileError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|source| FileError::Parse {
            path: "<input>".into(),
            source,
        })?;
        Ok(file)
    }

    /// Starts used when the file does not say: every reachable state for
    /// exact solving, sampled states for simulation.
    pub fn start_family(&self) -> StartFamily {
        self.starts.clone().unwrap_or(match self.semantics {
            Semantics::Round => StartFamily::Reachable,
            Semantics::Deadline => StartFamily::Sampled { count: 64, walk: 60 },
        })
    }

    /// Checks that every name in the file resolves, and returns the model
    /// and its predicate registry.
    pub fn validate(&self) -> Result<(LehmannRabin, PredicateRegistry<crate::models::lehmann_rabin::LrState>), FileError> {
        if self.model.family != "lehmann-rabin" {
            return Err(FileError::Invalid(format!(
                "unknown model family {:?} (expected \"lehmann-rabin\")",
                self.model.family
            )));
        }
        let model = LehmannRabin::new(self.model.n).map_err(|e| FileError::Invalid(e.to_string()))?;
        let reg = lr_registry();
        for s in &self.statements {
            for set in [&s.source, &s.target] {
                reg.resolve(set).map_err(|e| FileError::Invalid(e.to_string()))?;
            }
            if !s.time.is_integer() || s.time < Rational::from_integer(0.into()) {
                return Err(FileError::Invalid(format!(
                    "time bound {} is not a whole number of rounds",
                    s.time
                )));
            }
        }
        let ids = scenario_ids();
        if let Some(bad) = self.scenarios.iter().find(|id| !ids.contains(&id.as_str())) {
            return Err(FileError::Invalid(format!("unknown scenario {bad:?}")));
        }
        if let Some(bad) = self
            .adversaries
            .iter()
            .find(|a| adversary_by_name(&model, a).is_none())
        {
            return Err(FileError::Invalid(format!("unknown adversary {bad:?}")));
        }
        if self.semantics == Semantics::Deadline && self.adversaries.is_empty() && !self.statements.is_empty() {
            return Err(FileError::Invalid("deadline semantics needs at least one adversary".into()));
        }
        if self.trials == 0 {
            return Err(FileError::Invalid("trials must be positive".into()));
        }
        Ok((model, reg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    const MINIMAL: &str = r#"{
        "name": "t",
        "model": {"family": "lehmann-rabin", "n": 3},
        "statements": [
            {"source": "P", "target": "C", "time": 1, "prob": "1/2", "schema": "unit-time"}
        ]
    }"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let f = ScenarioFile::parse(MINIMAL).unwrap();
        assert_eq!(f.semantics, Semantics::Round);
        assert_eq!(f.start_family(), StartFamily::Reachable);
        assert_eq!(f.statements[0].prob, rat(1, 2));
        assert_eq!(f.budget, Budgets::default());
        f.validate().unwrap();
    }

    #[test]
    fn unknown_names_are_rejected() {
        let bad = MINIMAL.replace("\"C\"", "\"Q\"");
        assert!(ScenarioFile::parse(&bad).unwrap().validate().is_err());
        let bad = MINIMAL.replace("lehmann-rabin", "philosophers");
        assert!(ScenarioFile::parse(&bad).unwrap().validate().is_err());
        let bad = MINIMAL.replace("\"time\": 1", "\"time\": \"1/2\"");
        assert!(ScenarioFile::parse(&bad).unwrap().validate().is_err());
        let bad = MINIMAL.replace("\"name\"", "\"nmae\"");
        assert!(ScenarioFile::parse(&bad).is_err());
    }
}
