//! The JSON problem file: samples, predicates, kernels, supervisions and
//! formulas for one experiment.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::grounding::{PredicateDecl, Sample, SampleSets, Supervision};
use crate::kernels::KernelSpec;

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{section}: {message}")]
    Invalid { section: String, message: String },
}

fn invalid(section: impl Into<String>, message: impl Into<String>) -> ProblemError {
    ProblemError::Invalid {
        section: section.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemOptions {
    pub bias: bool,
    /// Explicit grounding tuples per predicate.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub groundings: BTreeMap<String, Vec<Vec<String>>>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub domains: BTreeMap<String, Vec<Sample>>,
    #[serde(default)]
    pub kernels: BTreeMap<String, KernelSpec>,
    /// Kernel id for predicates without one; linear `x.y + 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_kernel: Option<String>,
    pub predicates: Vec<PredicateDecl>,
    #[serde(default)]
    pub supervisions: Vec<Supervision>,
    #[serde(default)]
    pub formulas: Vec<String>,
    #[serde(default)]
    pub options: ProblemOptions,
}

impl ProblemFile {
    pub fn from_json_str(text: &str) -> Result<Self, ProblemError> {
        let p: ProblemFile = serde_json::from_str(text).map_err(|e| ProblemError::Json {
            line: e.line(),
            column: e.column(),
            message: {
                let m = e.to_string();
                m.rsplit_once(" at line ").map_or(m.clone(), |(head, _)| head.to_string())
            },
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    /// Referential integrity across sections.
    pub fn validate(&self) -> Result<(), ProblemError> {
        for (id, k) in &self.kernels {
            k.validate().map_err(|e| invalid(format!("kernels.{id}"), e.to_string()))?;
        }
        if let Some(id) = &self.default_kernel {
            if !self.kernels.contains_key(id) {
                return Err(invalid("default_kernel", format!("unknown kernel `{id}`")));
            }
        }
        let mut names = BTreeSet::new();
        for (i, d) in self.predicates.iter().enumerate() {
            let section = format!("predicates[{i}]");
            if !names.insert(d.name.as_str()) {
                return Err(invalid(section, format!("duplicate predicate `{}`", d.name)));
            }
            if d.domains.is_empty() {
                return Err(invalid(section, format!("predicate `{}` has no argument domains", d.name)));
            }
            for dom in &d.domains {
                match self.domains.get(dom) {
                    None => return Err(invalid(section, format!("unknown domain `{dom}`"))),
                    Some(s) if s.is_empty() => return Err(invalid(section, format!("domain `{dom}` is empty"))),
                    _ => {}
                }
            }
            if let Some(k) = &d.kernel {
                if !self.kernels.contains_key(k) {
                    return Err(invalid(section, format!("unknown kernel `{k}`")));
                }
            }
        }
        for (i, s) in self.supervisions.iter().enumerate() {
            let section = format!("supervisions[{i}]");
            let decl = self
                .predicate(&s.predicate)
                .ok_or_else(|| invalid(&section, format!("unknown predicate `{}`", s.predicate)))?;
            self.check_tuple(&section, decl, &s.samples)?;
            if s.label != 1 && s.label != -1 {
                return Err(invalid(section, format!("label {} is not -1 or +1", s.label)));
            }
        }
        for (name, tuples) in &self.options.groundings {
            let section = format!("options.groundings.{name}");
            let decl = self
                .predicate(name)
                .ok_or_else(|| invalid(&section, format!("unknown predicate `{name}`")))?;
            for t in tuples {
                self.check_tuple(&section, decl, t)?;
            }
        }
        Ok(())
    }

    fn check_tuple(&self, section: &str, decl: &PredicateDecl, tuple: &[String]) -> Result<(), ProblemError> {
        if tuple.len() != decl.arity() {
            return Err(invalid(
                section,
                format!("`{}` takes {} sample(s), got {}", decl.name, decl.arity(), tuple.len()),
            ));
        }
        for (s, dom) in tuple.iter().zip(&decl.domains) {
            if !self.domains[dom].iter().any(|x| &x.name == s) {
                return Err(invalid(section, format!("sample `{s}` is not in domain `{dom}`")));
            }
        }
        Ok(())
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|d| d.name == name)
    }

    /// Kernel of a predicate, falling back to the default kernel.
    pub fn kernel_for(&self, decl: &PredicateDecl) -> KernelSpec {
        decl.kernel
            .as_ref()
            .or(self.default_kernel.as_ref())
            .and_then(|id| self.kernels.get(id))
            .cloned()
            .unwrap_or_default()
    }

    pub fn sample_sets(&self) -> SampleSets {
        SampleSets {
            domains: self.domains.clone(),
            groundings: self.options.groundings.clone(),
            supervisions: self.supervisions.clone(),
        }
    }
}
