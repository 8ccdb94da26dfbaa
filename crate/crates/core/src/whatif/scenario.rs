//! What-if scenario descriptions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::event_store::DeviceClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbrPolicy {
    /// Highest rung under the harmonic mean of recent throughput.
    Throughput,
    /// Rung chosen from the buffer level.
    Buffer,
    /// Throughput rule that climbs at most one rung per segment.
    Hybrid,
}

impl fmt::Display for AbrPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbrPolicy::Throughput => "throughput",
            AbrPolicy::Buffer => "buffer",
            AbrPolicy::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub bitrate_kbps: f64,
    pub resolution: String,
}

pub fn default_ladder() -> Vec<LadderRung> {
    [(400.0, "240p"), (800.0, "360p"), (1600.0, "480p"), (3200.0, "720p"), (6400.0, "1080p")]
        .into_iter()
        .map(|(b, r)| LadderRung { bitrate_kbps: b, resolution: r.into() })
        .collect()
}

/// Explicit users, or `random:k` drawn from the sensitivity database.
#[derive(Debug, Clone, PartialEq)]
pub enum Cohort {
    Users(Vec<String>),
    Random(usize),
}

impl Cohort {
    pub fn size(&self) -> usize {
        match self {
            Cohort::Users(u) => u.len(),
            Cohort::Random(k) => *k,
        }
    }
}

impl FromStr for Cohort {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix("random:")
            .and_then(|k| k.trim().parse::<usize>().ok())
            .map(Cohort::Random)
            .ok_or_else(|| Error::Invalid(format!("field `cohort`: expected a user list or \"random:<k>\", got \"{s}\"")))
    }
}

impl Serialize for Cohort {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cohort::Users(u) => u.serialize(s),
            Cohort::Random(k) => s.serialize_str(&format!("random:{k}")),
        }
    }
}

impl<'de> Deserialize<'de> for Cohort {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Users(Vec<String>),
            Spec(String),
        }
        match Raw::deserialize(d)? {
            Raw::Users(u) => Ok(Cohort::Users(u)),
            Raw::Spec(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn default_duration() -> f64 {
    600.0
}
fn default_sessions() -> usize {
    1
}
fn default_popularity() -> usize {
    100
}
fn default_device() -> DeviceClass {
    DeviceClass::Laptop
}
fn default_hour() -> u8 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfScenario {
    #[serde(default)]
    pub label: Option<String>,
    pub segment_size: f64,
    pub abr: AbrPolicy,
    pub trace: String,
    #[serde(default = "default_duration")]
    pub video_duration: f64,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<LadderRung>,
    #[serde(default = "default_sessions")]
    pub n_sessions: usize,
    pub cohort: Cohort,
    #[serde(default)]
    pub seed: u64,
    /// Sessions the simulated video is assumed to have in the corpus; feeds
    /// the popularity feature.
    #[serde(default = "default_popularity")]
    pub video_popularity: usize,
    #[serde(default = "default_device")]
    pub device_class: DeviceClass,
    /// UTC hour at which simulated sessions start.
    #[serde(default = "default_hour")]
    pub start_hour: u8,
}

impl WhatIfScenario {
    pub fn new(segment_size: f64, abr: AbrPolicy, trace: &str, cohort: Cohort, seed: u64) -> Self {
        Self {
            label: None,
            segment_size,
            abr,
            trace: trace.into(),
            video_duration: default_duration(),
            ladder: default_ladder(),
            n_sessions: default_sessions(),
            cohort,
            seed,
            video_popularity: default_popularity(),
            device_class: default_device(),
            start_hour: default_hour(),
        }
    }

    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("{}s {} {}", self.segment_size, self.abr, self.trace))
    }

    /// Simulated sessions this scenario asks for.
    pub fn session_count(&self) -> usize {
        self.n_sessions.saturating_mul(self.cohort.size())
    }

    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::Invalid(format!("field `{field}`: {msg}")));
        if self.segment_size != 1.0 && self.segment_size != 2.0 {
            return bad("segment_size", "must be 1 or 2 seconds");
        }
        if !(self.video_duration.is_finite() && self.video_duration >= self.segment_size && self.video_duration <= 14_400.0) {
            return bad("video_duration", "must be between one segment and 14400 seconds");
        }
        if self.ladder.is_empty() {
            return bad("ladder", "must have at least one rung");
        }
        if self.ladder.iter().any(|r| !(r.bitrate_kbps.is_finite() && r.bitrate_kbps > 0.0)) {
            return bad("ladder", "bitrates must be positive");
        }
        if self.ladder.windows(2).any(|w| w[1].bitrate_kbps <= w[0].bitrate_kbps) {
            return bad("ladder", "bitrates must be strictly increasing");
        }
        if self.n_sessions == 0 {
            return bad("n_sessions", "must be at least 1");
        }
        if self.cohort.size() == 0 {
            return bad("cohort", "must name at least one user");
        }
        if self.trace.is_empty() {
            return bad("trace", "must not be empty");
        }
        if self.start_hour > 23 {
            return bad("start_hour", "must be 0 to 23");
        }
        Ok(())
    }
}

/// A 17-row ABR comparison grid: segment size, the ABR family each named
/// algorithm is approximated by, and the trace.
pub fn abr_grid_scenarios(seed: u64) -> Vec<WhatIfScenario> {
    use AbrPolicy::*;
    let rows: [(f64, &str, AbrPolicy, &str); 17] = [
        (1.0, "L2A-like", Hybrid, "fcc-like"),
        (1.0, "L2A-like", Hybrid, "cascade-20"),
        (1.0, "L2A-like", Hybrid, "cascade-5"),
        (1.0, "L2A-like", Hybrid, "constant-16"),
        (1.0, "L2A-like", Hybrid, "lte-like"),
        (2.0, "Bola-like", Buffer, "fcc-like"),
        (2.0, "Bola-like", Buffer, "cascade-20"),
        (2.0, "L2A-like", Hybrid, "fcc-like"),
        (2.0, "L2A-like", Hybrid, "cascade-20"),
        (2.0, "L2A-like", Hybrid, "cascade-5"),
        (2.0, "L2A-like", Hybrid, "constant-16"),
        (2.0, "L2A-like", Hybrid, "constant-4"),
        (2.0, "L2A-like", Hybrid, "lte-like"),
        (2.0, "LoL+-like", Hybrid, "cascade-5"),
        (2.0, "LoL+-like", Hybrid, "lte-like"),
        (2.0, "Throughput", Throughput, "fcc-like"),
        (2.0, "Throughput", Throughput, "cascade-20"),
    ];
    rows.iter()
        .map(|&(seg, name, abr, trace)| WhatIfScenario {
            label: Some(format!("{seg}s {name} {trace}")),
            ..WhatIfScenario::new(seg, abr, trace, Cohort::Random(100), seed)
        })
        .collect()
}
