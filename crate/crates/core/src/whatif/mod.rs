//! Simulated playback under chosen streaming parameters, scored by the
//! unified engagement model.

pub mod scenario;
pub mod sim;
pub mod trace;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use scenario::{default_ladder, abr_grid_scenarios, AbrPolicy, Cohort, LadderRung, WhatIfScenario};
pub use sim::{simulate_session, SimOutput, SimStats, MAX_BUFFER, STARTUP_SEGMENTS};
pub use trace::{BandwidthTrace, TraceLibrary, TraceStep};

use crate::engagement_model::UnifiedModel;
use crate::error::{Error, Result};
use crate::learner::stats::{median, sample_std_dev};
use crate::pipeline::features::popularity_score;
use crate::pipeline::{compress, engineer_with_score, SessionRecord};
use crate::rng;
use crate::twin_registry::SensitivityDb;

pub const RESULT_SCHEMA: &str = "digitwise.whatif-result/1";

/// Users the scenario is run for, in slot order. `random:k` draws without
/// replacement when the database has at least `k` users and with
/// replacement otherwise; the draw depends only on the scenario seed.
pub fn resolve_cohort(scenario: &WhatIfScenario, db: &SensitivityDb) -> Result<Vec<String>> {
    match &scenario.cohort {
        Cohort::Users(users) => {
            let mut missing: Vec<String> = users.iter().filter(|u| db.get(u).is_none()).cloned().collect();
            missing.sort();
            missing.dedup();
            if missing.is_empty() {
                Ok(users.clone())
            } else {
                Err(Error::UnknownUsers(missing))
            }
        }
        Cohort::Random(k) => {
            let all: Vec<&str> = db.users().collect();
            if all.is_empty() {
                return Err(Error::Invalid("field `cohort`: the sensitivity database is empty".into()));
            }
            let mut r = rng::stream(scenario.seed, &[0x636f_686f]);
            let picks: Vec<usize> = if *k <= all.len() {
                index::sample(&mut r, all.len(), *k).into_vec()
            } else {
                (0..*k).map(|_| r.random_range(0..all.len())).collect()
            };
            Ok(picks.into_iter().map(|i| all[i].to_string()).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSession {
    pub user_id: String,
    pub output: SimOutput,
    pub record: SessionRecord,
}

/// Runs `n_sessions` per cohort slot. Slot `s`, session `j` uses seed
/// `derive(scenario.seed, [s, j])`, so scenarios with the same seed and
/// cohort are paired session by session.
pub fn simulate_scenario(scenario: &WhatIfScenario, traces: &TraceLibrary, cohort: &[String]) -> Result<Vec<SimulatedSession>> {
    scenario.validate()?;
    let trace = traces.get(&scenario.trace)?;
    let pop = popularity_score(scenario.video_popularity);
    let jobs: Vec<(usize, usize)> = (0..cohort.len()).flat_map(|s| (0..scenario.n_sessions).map(move |j| (s, j))).collect();
    jobs.par_iter()
        .map(|&(s, j)| {
            let user = &cohort[s];
            let session_id = format!("sim-{s}-{j}");
            let output = simulate_session(scenario, trace, user, &session_id, rng::derive_seed(scenario.seed, &[s as u64, j as u64]));
            let record = compress(&engineer_with_score(output.events.clone(), pop))
                .ok_or_else(|| Error::Invalid("simulated session could not be compressed".into()))?;
            Ok(SimulatedSession { user_id: user.clone(), output, record })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single prediction.
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Aggregates {
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Invalid("no predictions to aggregate".into()));
        }
        Ok(Self {
            n: xs.len(),
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            std: sample_std_dev(xs).unwrap_or(0.0),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            median: median(xs).expect("non-empty"),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub user_id: String,
    pub session_id: String,
    pub engagement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub mean_startup_delay: f64,
    pub mean_stall_time: f64,
    pub mean_stall_count: f64,
    pub mean_bitrate: f64,
    pub sessions_with_stalls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub label: String,
    pub scenario: WhatIfScenario,
    pub cohort: Vec<String>,
    pub predictions: Vec<Prediction>,
    pub aggregates: Aggregates,
    pub simulation: SimSummary,
}

/// `mean(from) - mean(to)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub from: usize,
    pub to: usize,
    pub from_label: String,
    pub to_label: String,
    pub mean_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResult {
    pub schema: String,
    pub scenarios: Vec<ScenarioResult>,
    pub deltas: Vec<Delta>,
}

pub fn run_scenario(
    scenario: &WhatIfScenario,
    model: &UnifiedModel,
    db: &SensitivityDb,
    traces: &TraceLibrary,
) -> Result<ScenarioResult> {
    scenario.validate()?;
    traces.get(&scenario.trace)?;
    let cohort = resolve_cohort(scenario, db)?;
    let sims = simulate_scenario(scenario, traces, &cohort)?;
    let records: Vec<SessionRecord> = sims.iter().map(|s| s.record.clone()).collect();
    let preds = model.predict_records(&records, db)?;
    let n = sims.len() as f64;
    let simulation = SimSummary {
        mean_startup_delay: sims.iter().map(|s| s.output.stats.startup_delay).sum::<f64>() / n,
        mean_stall_time: sims.iter().map(|s| s.output.stats.stall_time).sum::<f64>() / n,
        mean_stall_count: sims.iter().map(|s| s.output.stats.stall_count as f64).sum::<f64>() / n,
        mean_bitrate: sims.iter().map(|s| s.output.stats.mean_bitrate).sum::<f64>() / n,
        sessions_with_stalls: sims.iter().filter(|s| s.output.stats.stall_count > 0).count(),
    };
    Ok(ScenarioResult {
        label: scenario.display_label(),
        scenario: scenario.clone(),
        cohort,
        aggregates: Aggregates::of(&preds)?,
        predictions: sims
            .iter()
            .zip(&preds)
            .map(|(s, &p)| Prediction { user_id: s.user_id.clone(), session_id: s.record.session_id.clone(), engagement: p })
            .collect(),
        simulation,
    })
}

/// Scores every scenario and reports mean deltas for every ordered pair.
pub fn run_whatif(
    scenarios: &[WhatIfScenario],
    model: &UnifiedModel,
    db: &SensitivityDb,
    traces: &TraceLibrary,
) -> Result<WhatIfResult> {
    if scenarios.is_empty() {
        return Err(Error::Invalid("at least one scenario is required".into()));
    }
    let results = scenarios.iter().map(|s| run_scenario(s, model, db, traces)).collect::<Result<Vec<_>>>()?;
    let mut deltas = Vec::new();
    for (i, a) in results.iter().enumerate() {
        for (j, b) in results.iter().enumerate() {
            if i != j {
                deltas.push(Delta {
                    from: i,
                    to: j,
                    from_label: a.label.clone(),
                    to_label: b.label.clone(),
                    mean_delta: a.aggregates.mean - b.aggregates.mean,
                });
            }
        }
    }
    Ok(WhatIfResult { schema: RESULT_SCHEMA.into(), scenarios: results, deltas })
}

/// Fixed-width table: one row per scenario, five aggregate columns.
pub fn format_table(result: &WhatIfResult) -> String {
    let width = result.scenarios.iter().map(|s| s.label.len()).max().unwrap_or(8).max(8);
    let mut out = format!("{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}\n", "scenario", "mean", "std", "min", "median", "max");
    for s in &result.scenarios {
        let a = &s.aggregates;
        out.push_str(&format!(
            "{:<width$}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}\n",
            s.label, a.mean, a.std, a.min, a.median, a.max
        ));
    }
    out
}
