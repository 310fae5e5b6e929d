//! Run configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::BenchConfig;
use crate::error::{Error, Result};
use crate::frs::{FrsFile, FrsGenConfig};
use crate::planner::PlannerConfig;
use crate::sim::{ScenarioConfig, SimConfig};

pub const THREADS_ENV: &str = "ZONOPLAN_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// FRS file; the bundled one is used when absent.
    pub frs: Option<PathBuf>,
    /// Overrides the FRS planning time and the planner budget together.
    pub t_plan: Option<f64>,
    pub threads: Option<usize>,
    pub frs_gen: FrsGenConfig,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
    pub scenario: ScenarioConfig,
    pub bench: BenchConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Loads the FRS and applies the planning-time override.
    pub fn resolve_frs(&mut self) -> Result<FrsFile> {
        let mut frs = match &self.frs {
            Some(path) => {
                if !path.is_file() {
                    return Err(Error::Config(format!(
                        "FRS file {} not found; create one with `zonoplan generate-frs --out {}`",
                        path.display(),
                        path.display()
                    )));
                }
                FrsFile::load(path).map_err(|e| Error::Config(format!("cannot load FRS {}: {e}", path.display())))?
            }
            None => FrsFile::builtin(),
        };
        if let Some(t) = self.t_plan {
            if !(t > 0.0 && t < frs.timing.t_m) {
                return Err(Error::Config(format!(
                    "t_plan {t} s must lie in (0, {}) s",
                    frs.timing.t_m
                )));
            }
            frs.timing.t_plan = t;
            self.planner.time_budget = t;
        }
        Ok(frs)
    }

    pub fn validate(&self, frs: &FrsFile) -> Result<()> {
        self.planner.validate()?;
        self.sim.validate(frs)?;
        self.scenario.validate()?;
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Thread count from the environment, falling back to the config.
    pub fn thread_count(&self) -> Result<Option<usize>> {
        match std::env::var(THREADS_ENV) {
            Ok(s) => match s.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{s}'"))),
            },
            Err(_) => Ok(self.threads),
        }
    }
}

/// Parses an inclusive seed range `a..b` (or a single seed).
pub fn parse_seed_range(s: &str) -> Result<std::ops::RangeInclusive<u64>> {
    let bad = || Error::Config(format!("seed range '{s}' must look like 0..49"));
    match s.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok(a..=b)
        }
        None => {
            let a: u64 = s.trim().parse().map_err(|_| bad())?;
            Ok(a..=a)
        }
    }
}
