//! Cyclic step bandwidth traces and the bundled presets.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub duration_s: f64,
    pub bandwidth_kbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthTrace {
    pub name: String,
    pub steps: Vec<TraceStep>,
}

/// Relative half-width of the per-step bandwidth noise.
pub const JITTER: f64 = 0.1;

impl BandwidthTrace {
    pub fn new(name: impl Into<String>, steps: Vec<TraceStep>) -> Result<Self> {
        let name = name.into();
        if steps.is_empty() {
            return Err(Error::Invalid(format!("trace `{name}` has no steps")));
        }
        for (i, s) in steps.iter().enumerate() {
            if !(s.duration_s > 0.0 && s.duration_s.is_finite() && s.bandwidth_kbps > 0.0 && s.bandwidth_kbps.is_finite()) {
                return Err(Error::Invalid(format!("trace `{name}` step {}: duration and bandwidth must be positive", i + 1)));
            }
        }
        Ok(Self { name, steps })
    }

    pub fn from_csv<R: Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let name = name.into();
        let mut rdr = csv::Reader::from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header != ["duration_s", "bandwidth_kbps"] {
            return Err(Error::schema(format!("trace `{name}`: header must be duration_s,bandwidth_kbps")));
        }
        let steps = rdr.deserialize().collect::<std::result::Result<Vec<TraceStep>, _>>()?;
        Self::new(name, steps)
    }

    pub fn period(&self) -> f64 {
        self.steps.iter().map(|s| s.duration_s).sum()
    }

    /// Copy with every bandwidth multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let steps = self.steps.iter().map(|s| TraceStep { bandwidth_kbps: s.bandwidth_kbps * factor, ..*s }).collect();
        Self { name: self.name.clone(), steps }
    }

    /// Seconds needed to fetch `kbits` starting at time `t`. Bandwidth of each
    /// step occurrence (cycle, step) is scaled by a factor in
    /// `1 ± JITTER` that depends only on the seed and that pair.
    pub fn download_time(&self, t: f64, kbits: f64, seed: u64) -> f64 {
        let period = self.period();
        let mut need = kbits;
        let mut now = t;
        let mut cycle = (now / period).floor() as u64;
        let mut offset = now - cycle as f64 * period;
        let mut idx = 0;
        let mut step_start = 0.0;
        while idx < self.steps.len() - 1 && step_start + self.steps[idx].duration_s <= offset {
            step_start += self.steps[idx].duration_s;
            idx += 1;
        }
        loop {
            let step = self.steps[idx];
            let bw = step.bandwidth_kbps * jitter(seed, cycle, idx);
            let left = (step_start + step.duration_s - offset).max(0.0);
            if bw * left >= need {
                return now + need / bw - t;
            }
            need -= bw * left;
            now += left;
            offset += left;
            step_start += step.duration_s;
            idx += 1;
            if idx == self.steps.len() {
                idx = 0;
                cycle += 1;
                offset = 0.0;
                step_start = 0.0;
            }
        }
    }
}

fn jitter(seed: u64, cycle: u64, step: usize) -> f64 {
    let u = (rng::derive_seed(seed, &[0x6a69_7474, cycle, step as u64]) >> 11) as f64 / (1u64 << 53) as f64;
    1.0 + JITTER * (2.0 * u - 1.0)
}

const BUNDLED: [(&str, &str); 6] = [
    ("constant-4", include_str!("../../traces/constant-4.csv")),
    ("constant-16", include_str!("../../traces/constant-16.csv")),
    ("cascade-5", include_str!("../../traces/cascade-5.csv")),
    ("cascade-20", include_str!("../../traces/cascade-20.csv")),
    ("lte-like", include_str!("../../traces/lte-like.csv")),
    ("fcc-like", include_str!("../../traces/fcc-like.csv")),
];

/// Named traces available to scenarios.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLibrary {
    traces: BTreeMap<String, BandwidthTrace>,
}

impl TraceLibrary {
    pub fn bundled() -> Self {
        let mut lib = Self::default();
        for (name, body) in BUNDLED {
            lib.insert(BandwidthTrace::from_csv(name, body.as_bytes()).expect("bundled traces are valid"));
        }
        lib
    }

    pub fn insert(&mut self, trace: BandwidthTrace) {
        self.traces.insert(trace.name.clone(), trace);
    }

    pub fn get(&self, name: &str) -> Result<&BandwidthTrace> {
        self.traces.get(name).ok_or_else(|| Error::UnknownTrace(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.traces.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &BandwidthTrace> {
        self.traces.values()
    }

    /// Adds every `*.csv` in `dir`, named after the file stem.
    pub fn load_dir(&mut self, dir: &Path) -> Result<()> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        for p in paths {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            self.insert(BandwidthTrace::from_csv(name, std::fs::File::open(&p)?)?);
        }
        Ok(())
    }
}
