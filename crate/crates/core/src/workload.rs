//! Synthetic training jobs: loss curves for the five model families and the
//! fixed / random submission schedules.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SimTime;
use crate::rng::{NoiseStream, RngStreams};

/// Fraction of the progress horizon over which the calibration target applies.
pub const CALIBRATION_HORIZON: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Vae,
    Gru,
    Birnn,
    Rnn,
    Dynrnn,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 5] = [
        ProfileKind::Vae,
        ProfileKind::Gru,
        ProfileKind::Birnn,
        ProfileKind::Rnn,
        ProfileKind::Dynrnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Vae => "vae",
            ProfileKind::Gru => "gru",
            ProfileKind::Birnn => "birnn",
            ProfileKind::Rnn => "rnn",
            ProfileKind::Dynrnn => "dynrnn",
        }
    }

    /// Share of the total loss reduction reached after the first 20% of
    /// iterations.
    pub fn early_reduction_target(self) -> f64 {
        match self {
            ProfileKind::Vae => 0.65,
            ProfileKind::Gru => 0.90,
            ProfileKind::Birnn => 0.98,
            ProfileKind::Rnn | ProfileKind::Dynrnn => 0.90,
        }
    }

    /// Initial and asymptotic loss, in the units of each model's loss function.
    fn loss_range(self) -> (f64, f64) {
        match self {
            ProfileKind::Vae => (550.0, 30.0),
            ProfileKind::Gru => (1.2, 0.08),
            ProfileKind::Birnn => (2.3, 0.12),
            ProfileKind::Rnn => (2.3, 0.18),
            ProfileKind::Dynrnn => (2.3, 0.15),
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProfileKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownProfile(s.to_string()))
    }
}

/// Training framework flavour. Only affects labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Platform {
    #[serde(rename = "P")]
    Pytorch,
    #[serde(rename = "T")]
    Tensorflow,
}

impl Platform {
    pub fn tag(self) -> &'static str {
        match self {
            Platform::Pytorch => "P",
            Platform::Tensorflow => "T",
        }
    }
}

/// Knobs shared by every generated profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadParams {
    pub total_iterations: u64,
    /// Iterations per second when the full CPU demand is granted.
    pub base_iter_rate: f64,
    pub cpu_demand: f64,
    pub noise_sigma: f64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self { total_iterations: 1000, base_iter_rate: 2.0, cpu_demand: 4.0, noise_sigma: 0.02 }
    }
}

impl WorkloadParams {
    pub fn validate(&self) -> Result<()> {
        if self.total_iterations == 0 {
            return Err(Error::Config("total_iterations must be positive".into()));
        }
        if !(self.base_iter_rate > 0.0) || !(self.cpu_demand > 0.0) {
            return Err(Error::Config("base_iter_rate and cpu_demand must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub kind: ProfileKind,
    pub l0: f64,
    pub l_inf: f64,
    /// Decay constant, in iterations.
    pub tau: f64,
    pub noise_sigma: f64,
    pub base_iter_rate: f64,
    pub cpu_demand: f64,
    pub total_iterations: u64,
}

/// Decay constant that puts `fraction` of the total reduction at 20% of
/// `total_iterations`.
pub fn tau_for_fraction(fraction: f64, total_iterations: u64) -> f64 {
    -CALIBRATION_HORIZON * total_iterations as f64 / (1.0 - fraction).ln()
}

/// Profile with default knobs, calibrated to the family's early-reduction target.
pub fn calibrate_profile(kind: ProfileKind, total_iterations: u64) -> ModelProfile {
    let params = WorkloadParams { total_iterations, ..WorkloadParams::default() };
    calibrate_with(kind, &params)
}

pub fn calibrate_with(kind: ProfileKind, params: &WorkloadParams) -> ModelProfile {
    let (l0, l_inf) = kind.loss_range();
    ModelProfile {
        kind,
        l0,
        l_inf,
        tau: tau_for_fraction(kind.early_reduction_target(), params.total_iterations),
        noise_sigma: params.noise_sigma,
        base_iter_rate: params.base_iter_rate,
        cpu_demand: params.cpu_demand,
        total_iterations: params.total_iterations,
    }
}

impl ModelProfile {
    pub fn without_noise(mut self) -> Self {
        self.noise_sigma = 0.0;
        self
    }

    /// Noise-free loss at (possibly fractional) iteration `k`.
    pub fn expected_loss(&self, k: f64) -> f64 {
        self.l_inf + (self.l0 - self.l_inf) * (-k / self.tau).exp()
    }

    /// Share of `l0 - l_inf` already removed at iteration `k`, noise off.
    pub fn reduction_fraction(&self, k: f64) -> f64 {
        (self.l0 - self.expected_loss(k)) / (self.l0 - self.l_inf)
    }

    /// Training time with the full CPU demand granted throughout.
    pub fn solo_time(&self) -> f64 {
        self.total_iterations as f64 / self.base_iter_rate
    }
}

/// Observed evaluation value after `k` iterations. Noise is multiplicative
/// and keyed by the whole iteration count, so repeated reads of the same
/// iteration agree.
pub fn loss_at(profile: &ModelProfile, k: f64, noise: &NoiseStream) -> Result<f64> {
    if !(0.0..=profile.total_iterations as f64).contains(&k) {
        return Err(Error::IterationOutOfRange { k, total: profile.total_iterations });
    }
    let mean = profile.expected_loss(k);
    if profile.noise_sigma == 0.0 {
        return Ok(mean);
    }
    let z = noise.standard_normal(k.floor() as u64);
    Ok((mean * (1.0 + profile.noise_sigma * z)).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleKind {
    Fixed { interval: f64 },
    Random { window: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileRule {
    Single(ProfileKind),
    /// Uniform over the five families and both platforms.
    Uniform,
}

impl FromStr for ProfileRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(ProfileRule::Uniform);
        }
        match s.split_once(':') {
            Some((rule, name)) if rule.trim().eq_ignore_ascii_case("single") => {
                Ok(ProfileRule::Single(name.parse()?))
            }
            _ => Err(Error::Config(format!(
                "profile rule `{s}` is neither `single:<name>` nor `uniform`"
            ))),
        }
    }
}

impl fmt::Display for ProfileRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileRule::Single(kind) => write!(f, "single:{kind}"),
            ProfileRule::Uniform => f.write_str("uniform"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobSpec {
    pub profile: ModelProfile,
    pub platform: Platform,
    pub offset: SimTime,
}

impl JobSpec {
    pub fn label(&self) -> String {
        format!("{}-{}", self.profile.kind, self.platform.tag())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubmissionSchedule {
    pub kind: ScheduleKind,
    /// Sorted by offset; position is the container id.
    pub jobs: Vec<JobSpec>,
}

/// Builds a submission schedule. Offsets and profile picks come from separate
/// streams of `streams`.
pub fn make_schedule(
    kind: ScheduleKind,
    n_jobs: usize,
    rule: ProfileRule,
    params: &WorkloadParams,
    streams: &RngStreams,
) -> Result<SubmissionSchedule> {
    if n_jobs == 0 {
        return Err(Error::Config("schedule needs at least one job".into()));
    }
    let mut offsets: Vec<f64> = match kind {
        ScheduleKind::Fixed { interval } => {
            if !(interval >= 0.0 && interval.is_finite()) {
                return Err(Error::Config(format!("bad fixed interval {interval}")));
            }
            (0..n_jobs).map(|k| k as f64 * interval).collect()
        }
        ScheduleKind::Random { window } => {
            if !(window >= 0.0 && window.is_finite()) {
                return Err(Error::Config(format!("bad random window {window}")));
            }
            let mut rng = streams.stream("schedule");
            (0..n_jobs).map(|_| rng.random_range(0.0..=window)).collect()
        }
    };
    offsets.sort_by(f64::total_cmp);

    let mut picks = streams.stream("profiles");
    let jobs = offsets
        .into_iter()
        .map(|offset| {
            let (kind, platform) = match rule {
                ProfileRule::Single(kind) => (kind, Platform::Tensorflow),
                ProfileRule::Uniform => {
                    let kind = ProfileKind::ALL[picks.random_range(0..ProfileKind::ALL.len())];
                    let platform =
                        if picks.random_bool(0.5) { Platform::Pytorch } else { Platform::Tensorflow };
                    (kind, platform)
                }
            };
            JobSpec { profile: calibrate_with(kind, params), platform, offset }
        })
        .collect();
    Ok(SubmissionSchedule { kind, jobs })
}
