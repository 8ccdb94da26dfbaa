//! Cleaning rules R1..R11.
//!
//! Rules run in a fixed order and every removed session is attributed to the
//! first rule that rejects it. Passes repeat until nothing changes, so user
//! thresholds and per-video durations always describe the surviving corpus and
//! cleaning is idempotent.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::event_store::{EventType, RawEvent, SessionKey, Sessions};

/// Rule identifiers in evaluation order.
pub const RULES: [&str; 11] = ["R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10", "R11"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    /// R2: more sessions than this on one video marks a user as a bot.
    pub max_sessions_per_video: usize,
    /// R3
    pub min_user_sessions: usize,
    /// R4
    pub min_distinct_videos: usize,
    /// R8, seconds
    pub min_play_time: f64,
    /// R9, seconds
    pub max_wall_span: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            max_sessions_per_video: 100,
            min_user_sessions: 50,
            min_distinct_videos: 5,
            min_play_time: 10.0,
            max_wall_span: 24.0 * 3600.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub sessions_removed_by_rule: BTreeMap<String, usize>,
    pub users_removed_by_rule: BTreeMap<String, usize>,
    /// Repairs that did not remove anything: R1 counts sessions with at least
    /// one value nulled, R5 counts events whose duration was raised.
    pub repairs_by_rule: BTreeMap<String, usize>,
    pub rows_in: usize,
    pub rows_out: usize,
    pub sessions_in: usize,
    pub sessions_out: usize,
    pub passes: usize,
}

impl CleanReport {
    fn new() -> Self {
        let zeroed = || RULES.iter().map(|r| (r.to_string(), 0)).collect::<BTreeMap<_, _>>();
        Self {
            sessions_removed_by_rule: zeroed(),
            users_removed_by_rule: zeroed(),
            repairs_by_rule: zeroed(),
            ..Default::default()
        }
    }

    pub fn sessions_removed(&self) -> usize {
        self.sessions_removed_by_rule.values().sum()
    }
}

fn bump(map: &mut BTreeMap<String, usize>, rule: &str, by: usize) {
    *map.entry(rule.to_string()).or_default() += by;
}

/// R1: any non-finite optional number, non-positive bitrate or video duration
/// becomes null. Returns whether something changed.
fn standardize_nulls(events: &mut [RawEvent]) -> bool {
    fn fix(v: &mut Option<f64>, positive: bool) -> bool {
        match *v {
            Some(x) if !x.is_finite() || (positive && x <= 0.0) => {
                *v = None;
                true
            }
            _ => false,
        }
    }
    let mut changed = false;
    for e in events.iter_mut() {
        changed |= fix(&mut e.bitrate, true);
        changed |= fix(&mut e.video_duration, true);
        changed |= fix(&mut e.videotime_start, false);
        changed |= fix(&mut e.videotime_end, false);
        changed |= fix(&mut e.event_duration, false);
        if e.error_code.as_deref().is_some_and(|c| c.trim().is_empty()) {
            e.error_code = None;
            changed = true;
        }
    }
    changed
}

/// Seconds of playback: summed durations of play and heartbeat intervals.
pub fn play_time(events: &[RawEvent]) -> f64 {
    events
        .iter()
        .filter(|e| e.event_type.is_playback())
        .filter_map(|e| e.event_duration)
        .map(|d| d.max(0.0))
        .sum()
}

/// Wall-clock span in seconds, from the first event start to the last event end.
pub fn wall_span(events: &[RawEvent]) -> f64 {
    let start = events.iter().map(|e| e.client_time).min();
    let end = events
        .iter()
        .map(|e| e.client_time as f64 + e.event_duration.unwrap_or(0.0).max(0.0) * 1000.0)
        .fold(f64::NEG_INFINITY, f64::max);
    match start {
        Some(s) => (end - s as f64) / 1000.0,
        None => 0.0,
    }
}

/// First session-level rule (R6..R11) that rejects the session.
fn session_rule(events: &[RawEvent], cfg: &CleanConfig) -> Option<&'static str> {
    if events.iter().any(|e| e.event_type == EventType::Error || e.error_code.is_some()) {
        return Some("R6");
    }
    // A session without any playhead position cannot be labeled either.
    if events.iter().all(|e| e.videotime_end.is_none()) || events.iter().any(|e| e.videotime_end.is_some_and(|v| v < 0.0)) {
        return Some("R7");
    }
    if play_time(events) < cfg.min_play_time {
        return Some("R8");
    }
    if wall_span(events) > cfg.max_wall_span {
        return Some("R9");
    }
    if events.iter().any(|e| e.event_duration.is_some_and(|d| d < 0.0)) {
        return Some("R10");
    }
    let duration = events.iter().filter_map(|e| e.video_duration).fold(f64::NAN, f64::max);
    if duration.is_nan() || events.iter().any(|e| e.videotime_end.is_some_and(|v| v > duration)) {
        return Some("R11");
    }
    None
}

/// First user-level rule (R2..R4) that rejects a user, given their sessions.
fn user_rule<'a>(keys: impl Iterator<Item = &'a SessionKey>, cfg: &CleanConfig) -> Option<&'static str> {
    let mut per_video: HashMap<&str, usize> = HashMap::new();
    let mut n = 0;
    for k in keys {
        *per_video.entry(k.video_id.as_str()).or_default() += 1;
        n += 1;
    }
    if per_video.values().any(|&c| c > cfg.max_sessions_per_video) {
        Some("R2")
    } else if n < cfg.min_user_sessions {
        Some("R3")
    } else if per_video.len() < cfg.min_distinct_videos {
        Some("R4")
    } else {
        None
    }
}

/// R5: every event of a video gets the video's maximum observed duration.
fn standardize_durations(sessions: &mut Sessions) -> usize {
    let mut max_dur: HashMap<String, f64> = HashMap::new();
    for (k, evs) in sessions.iter() {
        for d in evs.iter().filter_map(|e| e.video_duration) {
            let m = max_dur.entry(k.video_id.clone()).or_insert(d);
            *m = m.max(d);
        }
    }
    let mut raised = 0;
    for (k, evs) in sessions.iter_mut() {
        if let Some(&m) = max_dur.get(&k.video_id) {
            for e in evs.iter_mut() {
                if e.video_duration != Some(m) {
                    e.video_duration = Some(m);
                    raised += 1;
                }
            }
        }
    }
    raised
}

pub fn clean(sessions: Sessions, cfg: &CleanConfig) -> (Sessions, CleanReport) {
    let mut report = CleanReport::new();
    report.sessions_in = sessions.len();
    report.rows_in = sessions.values().map(Vec::len).sum();
    let mut sessions = sessions;

    let repaired = sessions.values_mut().map(|evs| standardize_nulls(evs)).filter(|&c| c).count();
    bump(&mut report.repairs_by_rule, "R1", repaired);

    loop {
        report.passes += 1;
        let mut removed_any = false;

        let mut by_user: BTreeMap<&str, Vec<&SessionKey>> = BTreeMap::new();
        for k in sessions.keys() {
            by_user.entry(k.user_id.as_str()).or_default().push(k);
        }
        let mut doomed: BTreeMap<String, &'static str> = BTreeMap::new();
        for (user, keys) in &by_user {
            if let Some(rule) = user_rule(keys.iter().copied(), cfg) {
                doomed.insert(user.to_string(), rule);
            }
        }
        if !doomed.is_empty() {
            removed_any = true;
            for rule in doomed.values() {
                bump(&mut report.users_removed_by_rule, rule, 1);
            }
            sessions.retain(|k, _| match doomed.get(&k.user_id) {
                Some(rule) => {
                    bump(&mut report.sessions_removed_by_rule, rule, 1);
                    false
                }
                None => true,
            });
        }

        let raised = standardize_durations(&mut sessions);
        bump(&mut report.repairs_by_rule, "R5", raised);

        let before = sessions.len();
        sessions.retain(|_, evs| match session_rule(evs, cfg) {
            Some(rule) => {
                bump(&mut report.sessions_removed_by_rule, rule, 1);
                false
            }
            None => true,
        });
        removed_any |= sessions.len() != before;

        if !removed_any {
            break;
        }
    }
    report.sessions_out = sessions.len();
    report.rows_out = sessions.values().map(Vec::len).sum();
    (sessions, report)
}

/// Users left after cleaning, in order.
pub fn users(sessions: &Sessions) -> BTreeSet<&str> {
    sessions.keys().map(|k| k.user_id.as_str()).collect()
}
