//! Scenario trait and the name-keyed registry the `scenario` config field selects from.

use std::collections::BTreeMap;

use anyhow::{bail, Result};

use crate::config::ExperimentConfig;
use crate::output::{OutputDir, Summary};

/// What a scenario gets to work with.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub out: &'a mut OutputDir,
    pub pool: &'a rayon::ThreadPool,
    pub summary: Summary,
    pub quiet: bool,
}

impl Context<'_> {
    pub fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("[{}] {}", self.config.scenario, msg.as_ref());
        }
    }
}

pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Scenario-specific checks on top of schema validation.
    fn check(&self, _config: &ExperimentConfig) -> Result<()> {
        Ok(())
    }

    /// Runs the experiment, writing tables through `ctx.out` and fitted values into `ctx.summary`.
    fn run(&self, ctx: &mut Context<'_>) -> Result<()>;
}

#[derive(Default)]
pub struct Registry {
    entries: BTreeMap<&'static str, Box<dyn Scenario>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every scenario shipped with the crate.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        for s in crate::scenarios::all() {
            r.register(s).expect("builtin names are unique");
        }
        r
    }

    pub fn register(&mut self, scenario: Box<dyn Scenario>) -> Result<()> {
        let name = scenario.name();
        if self.entries.contains_key(name) {
            bail!("scenario {name} is already registered");
        }
        self.entries.insert(name, scenario);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scenario> {
        match self.entries.get(name) {
            Some(s) => Ok(s.as_ref()),
            None => bail!(
                "unknown scenario `{name}`; known: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Scenario> {
        self.entries.values().map(|s| s.as_ref())
    }
}
