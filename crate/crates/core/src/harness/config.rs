//! Scenario files.
//!
//! A scenario is a TOML document. Every field has a default, so an empty
//! file describes the fixed-schedule reference run:
//!
//! ```toml
//! label = "fixed-vae"
//! policy = "specon"          # or "ds"
//! seed = 42
//!
//! [cluster]
//! n_workers = 4
//! cpu_capacity = 16.0        # cores per worker
//! reserved_fraction = 0.2    # share held back for the system
//!
//! [workload]
//! n_jobs = 20
//! profiles = "single:vae"    # or "uniform"
//! total_iterations = 1000
//! base_iter_rate = 2.0       # iterations/s with the full demand granted
//! cpu_demand = 4.0
//! noise_sigma = 0.02
//! schedule = { kind = "fixed", interval = 50.0 }   # or { kind = "random", window = 300.0 }
//!
//! [monitor]
//! alpha = 0.01
//! interval = 30.0
//! read_delay = 0.0
//!
//! [scheduler]
//! w_pc = 2.0
//! w_wc = 1.5
//! w_cc = 1.0
//! heartbeat_delay = 0.0
//!
//! [overhead]
//! mean = 3.0
//! sd = 1.43
//! lo = 0.5
//! hi = 5.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{OverheadModel, SimParams};
use crate::error::{Error, Result};
use crate::model::{MonitorConfig, SchedulerConfig};
use crate::rng::RngStreams;
use crate::scheduler::Policy;
use crate::workload::{make_schedule, ProfileRule, ScheduleKind, SubmissionSchedule, WorkloadParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub n_workers: usize,
    pub cpu_capacity: f64,
    pub reserved_fraction: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { n_workers: 4, cpu_capacity: 16.0, reserved_fraction: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub n_jobs: usize,
    pub profiles: String,
    pub schedule: ScheduleKind,
    pub total_iterations: u64,
    pub base_iter_rate: f64,
    pub cpu_demand: f64,
    pub noise_sigma: f64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        let params = WorkloadParams::default();
        Self {
            n_jobs: 20,
            profiles: "single:vae".into(),
            schedule: ScheduleKind::Fixed { interval: 50.0 },
            total_iterations: params.total_iterations,
            base_iter_rate: params.base_iter_rate,
            cpu_demand: params.cpu_demand,
            noise_sigma: params.noise_sigma,
        }
    }
}

impl WorkloadConfig {
    pub fn params(&self) -> WorkloadParams {
        WorkloadParams {
            total_iterations: self.total_iterations,
            base_iter_rate: self.base_iter_rate,
            cpu_demand: self.cpu_demand,
            noise_sigma: self.noise_sigma,
        }
    }

    pub fn rule(&self) -> Result<ProfileRule> {
        self.profiles.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub label: String,
    pub policy: Policy,
    pub seed: u64,
    pub cluster: ClusterConfig,
    pub workload: WorkloadConfig,
    pub monitor: MonitorConfig,
    pub scheduler: SchedulerConfig,
    pub overhead: OverheadModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            label: "scenario".into(),
            policy: Policy::Specon,
            seed: 42,
            cluster: ClusterConfig::default(),
            workload: WorkloadConfig::default(),
            monitor: MonitorConfig::default(),
            scheduler: SchedulerConfig::default(),
            overhead: OverheadModel::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.workload.n_jobs == 0 {
            return Err(Error::Config("n_jobs must be positive".into()));
        }
        self.workload.rule().map_err(|e| Error::Config(e.to_string()))?;
        self.workload.params().validate()?;
        match self.workload.schedule {
            ScheduleKind::Fixed { interval } if !(interval >= 0.0 && interval.is_finite()) => {
                return Err(Error::Config("fixed schedule interval must be non-negative".into()))
            }
            ScheduleKind::Random { window } if !(window >= 0.0 && window.is_finite()) => {
                return Err(Error::Config("random schedule window must be non-negative".into()))
            }
            _ => {}
        }
        self.sim_params().validate()
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            n_workers: self.cluster.n_workers,
            cpu_capacity: self.cluster.cpu_capacity,
            reserved_fraction: self.cluster.reserved_fraction,
            monitor: self.monitor,
            scheduler: self.scheduler,
            overhead: self.overhead,
            policy: self.policy,
            seed: self.seed,
        }
    }

    pub fn schedule(&self) -> Result<SubmissionSchedule> {
        make_schedule(
            self.workload.schedule,
            self.workload.n_jobs,
            self.workload.rule()?,
            &self.workload.params(),
            &RngStreams::new(self.seed),
        )
    }

    pub fn with_policy(&self, policy: Policy) -> Self {
        Self { policy, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let config = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(config, ScenarioConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut config = ScenarioConfig::default();
        config.workload.schedule = ScheduleKind::Random { window: 300.0 };
        config.workload.profiles = "uniform".into();
        config.policy = Policy::Ds;
        assert_eq!(ScenarioConfig::from_toml(&config.to_toml()).unwrap(), config);
    }

    #[test]
    fn parses_nested_sections() {
        let text = r#"
            label = "mixed"
            policy = "ds"
            seed = 9
            [cluster]
            n_workers = 8
            [workload]
            profiles = "uniform"
            schedule = { kind = "random", window = 300.0 }
            [monitor]
            alpha = 0.05
            interval = 20
        "#;
        let config = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(config.cluster.n_workers, 8);
        assert_eq!(config.policy, Policy::Ds);
        assert_eq!(config.monitor.alpha, 0.05);
        assert_eq!(config.workload.schedule, ScheduleKind::Random { window: 300.0 });
        assert_eq!(config.scheduler, SchedulerConfig::default());
    }

    #[test]
    fn rejects_invalid_configs() {
        for text in [
            "[monitor]\ninterval = 0",
            "[monitor]\nalpha = -1",
            "[workload]\nn_jobs = 0",
            "[workload]\nprofiles = \"single:lstm\"",
            "[cluster]\nn_workers = 0",
            "[scheduler]\nw_pc = 1.0",
            "policy = \"fifo\"",
            "bogus = 1",
        ] {
            assert!(
                matches!(ScenarioConfig::from_toml(text), Err(Error::Config(_)) | Err(Error::NoWorkers)),
                "accepted: {text}"
            );
        }
    }
}
