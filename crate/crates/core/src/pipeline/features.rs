//! Per-session enrichment and compression into one [`SessionRecord`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::clean::play_time;
use crate::event_store::{DeviceClass, EventType, RawEvent, SessionKey, Sessions};
use crate::learner::stats::{mean, std_dev, weighted_skewness};

/// One compressed session. Optional fields are null when the session has too
/// few samples to define them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub user_id: String,
    pub video_id: String,
    pub session_id: String,
    pub hour_of_day: u8,
    pub popularity: f64,
    pub screen_size: Option<u8>,
    pub video_duration: f64,
    pub startup_delay: f64,
    pub play_time: f64,
    pub stall_count: u32,
    pub stall_duration_mean: Option<f64>,
    pub stall_duration_std: Option<f64>,
    pub stall_duration_skew: Option<f64>,
    pub bitrate_mean: Option<f64>,
    pub bitrate_std: Option<f64>,
    pub switch_count: u32,
    pub switch_magnitude_mean: Option<f64>,
    pub switch_skew: Option<f64>,
    pub seek_count: u32,
    pub pause_count: u32,
    pub latency_mean: Option<f64>,
    pub engagement: f64,
}

/// Features offered to feature selection. `play_time` is left out: playback
/// seconds divided by duration is the label itself.
pub const CANDIDATE_FEATURES: [&str; 17] = [
    "hour_of_day",
    "popularity",
    "screen_size",
    "video_duration",
    "startup_delay",
    "stall_count",
    "stall_duration_mean",
    "stall_duration_std",
    "stall_duration_skew",
    "bitrate_mean",
    "bitrate_std",
    "switch_count",
    "switch_magnitude_mean",
    "switch_skew",
    "seek_count",
    "pause_count",
    "latency_mean",
];

/// Coarse grouping of features, used to compare learned sensitivities with
/// generator weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Stall,
    Bitrate,
    Duration,
    Popularity,
    Other,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 5] =
        [FeatureFamily::Stall, FeatureFamily::Bitrate, FeatureFamily::Duration, FeatureFamily::Popularity, FeatureFamily::Other];

    pub fn of(feature: &str) -> FeatureFamily {
        match feature.strip_prefix("sens_").unwrap_or(feature) {
            "stall_count" | "stall_duration_mean" | "stall_duration_std" | "stall_duration_skew" => FeatureFamily::Stall,
            "bitrate_mean" | "bitrate_std" | "switch_count" | "switch_magnitude_mean" | "switch_skew" => FeatureFamily::Bitrate,
            "video_duration" => FeatureFamily::Duration,
            "popularity" => FeatureFamily::Popularity,
            _ => FeatureFamily::Other,
        }
    }
}

impl SessionRecord {
    pub fn key(&self) -> SessionKey {
        SessionKey { user_id: self.user_id.clone(), video_id: self.video_id.clone(), session_id: self.session_id.clone() }
    }

    /// Value of a candidate feature (or `play_time`); `None` for null values
    /// and unknown names.
    pub fn feature(&self, name: &str) -> Option<f64> {
        Some(match name {
            "hour_of_day" => self.hour_of_day as f64,
            "popularity" => self.popularity,
            "screen_size" => self.screen_size? as f64,
            "video_duration" => self.video_duration,
            "startup_delay" => self.startup_delay,
            "play_time" => self.play_time,
            "stall_count" => self.stall_count as f64,
            "stall_duration_mean" => self.stall_duration_mean?,
            "stall_duration_std" => self.stall_duration_std?,
            "stall_duration_skew" => self.stall_duration_skew?,
            "bitrate_mean" => self.bitrate_mean?,
            "bitrate_std" => self.bitrate_std?,
            "switch_count" => self.switch_count as f64,
            "switch_magnitude_mean" => self.switch_magnitude_mean?,
            "switch_skew" => self.switch_skew?,
            "seek_count" => self.seek_count as f64,
            "pause_count" => self.pause_count as f64,
            "latency_mean" => self.latency_mean?,
            _ => return None,
        })
    }

    pub fn is_feature(name: &str) -> bool {
        name == "play_time" || CANDIDATE_FEATURES.contains(&name)
    }
}

pub fn screen_size(device: DeviceClass) -> Option<u8> {
    match device {
        DeviceClass::Phone => Some(1),
        DeviceClass::Tablet => Some(2),
        DeviceClass::Laptop => Some(3),
        DeviceClass::Desktop => Some(4),
        DeviceClass::Tv | DeviceClass::Console => Some(5),
        DeviceClass::Unknown => None,
    }
}

pub fn hour_of_day(epoch_ms: i64) -> u8 {
    (epoch_ms.div_euclid(3_600_000)).rem_euclid(24) as u8
}

/// Session count per video over a corpus.
pub fn popularity_index(sessions: &Sessions) -> HashMap<String, usize> {
    let mut idx = HashMap::new();
    for k in sessions.keys() {
        *idx.entry(k.video_id.clone()).or_insert(0) += 1;
    }
    idx
}

pub fn popularity_score(count: usize) -> f64 {
    (count as f64).ln_1p()
}

/// `clamp(max(videotime_end) / video_duration, 0, 1)`; `None` when there is
/// no usable position or duration.
pub fn compute_engagement(events: &[RawEvent], video_duration: f64) -> Option<f64> {
    if !(video_duration > 0.0) {
        return None;
    }
    let max_end = events.iter().filter_map(|e| e.videotime_end).fold(f64::NAN, f64::max);
    if max_end.is_nan() {
        return None;
    }
    Some((max_end / video_duration).clamp(0.0, 1.0))
}

/// A session's events plus the derived per-event and per-session values.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedSession {
    pub key: SessionKey,
    pub events: Vec<RawEvent>,
    pub hour_of_day: u8,
    pub popularity: f64,
    pub screen_size: Option<u8>,
    pub video_duration: f64,
    /// Per event; set on bitrate switches that have a previous bitrate.
    pub bitrate_delta: Vec<Option<f64>>,
    /// Per event, `server_time - client_time` in milliseconds.
    pub latency: Vec<Option<f64>>,
    pub engagement: Option<f64>,
}

/// `popularity` is the video's corpus session count (see [`popularity_index`]).
pub fn engineer(events: Vec<RawEvent>, popularity: usize) -> EnrichedSession {
    engineer_with_score(events, popularity_score(popularity))
}

pub fn engineer_with_score(events: Vec<RawEvent>, popularity: f64) -> EnrichedSession {
    let key = events.first().map(RawEvent::key).unwrap_or(SessionKey {
        user_id: String::new(),
        video_id: String::new(),
        session_id: String::new(),
    });
    let start = events.iter().map(|e| e.client_time).min().unwrap_or(0);
    let device = events.iter().map(|e| e.device_class).find(|d| *d != DeviceClass::Unknown).unwrap_or_default();
    let video_duration = events.iter().filter_map(|e| e.video_duration).fold(0.0, f64::max);

    let mut prev_bitrate: Option<f64> = None;
    let mut bitrate_delta = Vec::with_capacity(events.len());
    for e in &events {
        let delta = match (e.event_type, e.bitrate, prev_bitrate) {
            (EventType::BitrateSwitch, Some(cur), Some(prev)) => Some(cur - prev),
            _ => None,
        };
        bitrate_delta.push(delta);
        if e.bitrate.is_some() {
            prev_bitrate = e.bitrate;
        }
    }
    let latency = events.iter().map(|e| e.server_time.map(|s| (s - e.client_time) as f64)).collect();
    let engagement = compute_engagement(&events, video_duration);
    EnrichedSession {
        key,
        hour_of_day: hour_of_day(start),
        popularity,
        screen_size: screen_size(device),
        video_duration,
        bitrate_delta,
        latency,
        engagement,
        events,
    }
}

/// Weighted skewness of event positions within the session.
///
/// Positions are anchored by two unit-weight points at 0 and at the furthest
/// playhead position, so the sign says where in the session the events sit:
/// clustered early gives a long right tail (positive), clustered late a long
/// left tail (negative). Event weights are rescaled to mean 1 so a session's
/// anchors weigh the same relative to its events regardless of units.
pub fn positional_skew(positions: &[f64], weights: &[f64], session_end: f64) -> Option<f64> {
    if positions.is_empty() || !(session_end > 0.0) {
        return None;
    }
    let total: f64 = weights.iter().sum();
    let scaled: Vec<f64> = if total > 0.0 {
        weights.iter().map(|w| w * positions.len() as f64 / total).collect()
    } else {
        vec![1.0; positions.len()]
    };
    let mut xs = Vec::with_capacity(positions.len() + 2);
    let mut ws = Vec::with_capacity(positions.len() + 2);
    xs.extend([0.0, session_end]);
    ws.extend([1.0, 1.0]);
    xs.extend_from_slice(positions);
    ws.extend(scaled);
    weighted_skewness(&xs, &ws)
}

pub fn compress(s: &EnrichedSession) -> Option<SessionRecord> {
    let engagement = s.engagement?;
    let events = &s.events;
    let session_end = events.iter().filter_map(|e| e.videotime_end).fold(0.0, f64::max);
    let position = |e: &RawEvent| e.videotime_start.or(e.videotime_end);

    let stalls: Vec<&RawEvent> = events.iter().filter(|e| e.event_type == EventType::Stall).collect();
    let stall_durations: Vec<f64> = stalls.iter().filter_map(|e| e.event_duration).collect();
    let (stall_pos, stall_w): (Vec<f64>, Vec<f64>) =
        stalls.iter().filter_map(|e| Some((position(e)?, e.event_duration.unwrap_or(0.0).max(0.0)))).unzip();

    let mut switch_mags = Vec::new();
    let (mut switch_pos, mut switch_w) = (Vec::new(), Vec::new());
    let mut switch_count = 0;
    for (e, d) in events.iter().zip(&s.bitrate_delta) {
        if e.event_type != EventType::BitrateSwitch {
            continue;
        }
        switch_count += 1;
        if let Some(d) = d {
            switch_mags.push(d.abs());
        }
        if let Some(p) = position(e) {
            switch_pos.push(p);
            switch_w.push(d.map(f64::abs).unwrap_or(0.0));
        }
    }

    // Time-weighted bitrate over playback intervals, falling back to a plain
    // mean when no interval carries a duration.
    let playback: Vec<(f64, f64)> = events
        .iter()
        .filter(|e| e.event_type.is_playback())
        .filter_map(|e| Some((e.bitrate?, e.event_duration.unwrap_or(0.0).max(0.0))))
        .collect();
    let total_w: f64 = playback.iter().map(|p| p.1).sum();
    let (bitrate_mean, bitrate_std) = if total_w > 0.0 {
        let m = playback.iter().map(|(b, w)| b * w).sum::<f64>() / total_w;
        let v = playback.iter().map(|(b, w)| w * (b - m) * (b - m)).sum::<f64>() / total_w;
        (Some(m), Some(v.sqrt()))
    } else {
        let bs: Vec<f64> = playback.iter().map(|p| p.0).collect();
        (mean(&bs), std_dev(&bs))
    };

    let latencies: Vec<f64> = s.latency.iter().flatten().copied().collect();
    let count = |t: EventType| events.iter().filter(|e| e.event_type == t).count() as u32;

    Some(SessionRecord {
        user_id: s.key.user_id.clone(),
        video_id: s.key.video_id.clone(),
        session_id: s.key.session_id.clone(),
        hour_of_day: s.hour_of_day,
        popularity: s.popularity,
        screen_size: s.screen_size,
        video_duration: s.video_duration,
        startup_delay: events
            .iter()
            .find(|e| e.event_type == EventType::Startup)
            .and_then(|e| e.event_duration)
            .unwrap_or(0.0),
        play_time: play_time(events),
        stall_count: stalls.len() as u32,
        stall_duration_mean: mean(&stall_durations),
        stall_duration_std: std_dev(&stall_durations),
        stall_duration_skew: positional_skew(&stall_pos, &stall_w, session_end),
        bitrate_mean,
        bitrate_std,
        switch_count,
        switch_magnitude_mean: mean(&switch_mags),
        switch_skew: positional_skew(&switch_pos, &switch_w, session_end),
        seek_count: count(EventType::Seek),
        pause_count: count(EventType::Pause),
        latency_mean: mean(&latencies),
        engagement,
    })
}
