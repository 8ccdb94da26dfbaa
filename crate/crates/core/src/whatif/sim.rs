//! Discrete segment-level playback simulation.
//!
//! Segments download back to back. Segment `i` finishes at `E_i`; playback
//! starts once the first [`STARTUP_SEGMENTS`] are in, at `P`, and segment `i`
//! starts playing at `ps_i = max(ps_{i-1} + len_{i-1}, E_i)`. Whenever `E_i`
//! is later than the previous segment's end, the gap is a stall. The
//! downloader pauses while [`MAX_BUFFER`] seconds of video are buffered, so
//! segment `i` cannot start downloading before segment `i - MAX_BUFFER/len`
//! starts playing. Wall time is therefore exactly `P + duration + stalls`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{AbrPolicy, WhatIfScenario};
use super::trace::BandwidthTrace;
use crate::event_store::{EventType, RawEvent};
use crate::rng;

pub const MAX_BUFFER: f64 = 30.0;
pub const STARTUP_SEGMENTS: usize = 2;
/// 2024-01-01T00:00:00Z; simulated sessions start on this day.
pub const SIM_EPOCH_MS: i64 = 1_704_067_200_000;
pub const SIM_VIDEO_ID: &str = "whatif-video";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub startup_delay: f64,
    pub playback_time: f64,
    pub stall_time: f64,
    pub stall_count: usize,
    pub wall_time: f64,
    pub switch_count: usize,
    /// Playback-time-weighted bitrate.
    pub mean_bitrate: f64,
    /// Ladder index per segment.
    pub rungs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub events: Vec<RawEvent>,
    pub stats: SimStats,
}

fn harmonic_mean(xs: &[f64]) -> f64 {
    xs.len() as f64 / xs.iter().map(|x| 1.0 / x).sum::<f64>()
}

fn choose_rung(abr: AbrPolicy, ladder: &[f64], throughputs: &[f64], buffer: f64, prev: Option<usize>) -> usize {
    let top = ladder.len() - 1;
    let by_throughput = || {
        if throughputs.is_empty() {
            return 0;
        }
        let hm = harmonic_mean(&throughputs[throughputs.len().saturating_sub(3)..]);
        ladder.iter().rposition(|&b| b <= hm).unwrap_or(0)
    };
    match abr {
        AbrPolicy::Throughput => by_throughput(),
        AbrPolicy::Buffer => (((buffer / MAX_BUFFER) * ladder.len() as f64).floor().max(0.0) as usize).min(top),
        AbrPolicy::Hybrid => {
            let r = by_throughput();
            match prev {
                Some(p) if r > p + 1 => p + 1,
                _ => r,
            }
        }
    }
}

/// Simulates one session of `scenario` on `trace`. The seed drives the
/// bandwidth jitter and reported latencies only.
pub fn simulate_session(scenario: &WhatIfScenario, trace: &BandwidthTrace, user_id: &str, session_id: &str, seed: u64) -> SimOutput {
    let seg = scenario.segment_size;
    let duration = scenario.video_duration;
    let ladder: Vec<f64> = scenario.ladder.iter().map(|r| r.bitrate_kbps).collect();
    let n = ((duration / seg) - 1e-9).ceil().max(1.0) as usize;
    let pos: Vec<f64> = (0..n).map(|j| j as f64 * seg).collect();
    let ends: Vec<f64> = (0..n).map(|j| if j + 1 == n { duration } else { (j + 1) as f64 * seg }).collect();
    let lens: Vec<f64> = (0..n).map(|j| ends[j] - pos[j]).collect();
    let ahead = ((MAX_BUFFER / seg).floor() as usize).max(STARTUP_SEGMENTS);
    let startup_n = STARTUP_SEGMENTS.min(n);

    let mut rungs = Vec::with_capacity(n);
    let mut throughputs = Vec::with_capacity(n);
    let mut ps: Vec<f64> = Vec::with_capacity(n);
    let mut stall_before = vec![0.0; n];
    let mut start: Option<f64> = None;
    let mut free_at = 0.0f64;

    for i in 0..n {
        let mut t = free_at;
        if i >= ahead {
            t = t.max(ps[i - ahead]);
        }
        let buffer = match start {
            Some(p) if t >= p => {
                let played = (0..ps.len()).rev().find(|&j| ps[j] <= t).map_or(0.0, |j| pos[j] + (t - ps[j]).min(lens[j]));
                pos[i] - played
            }
            // before playback everything downloaded is buffered
            _ => pos[i],
        };
        let r = choose_rung(scenario.abr, &ladder, &throughputs, buffer, rungs.last().copied());
        let kbits = lens[i] * ladder[r];
        let dl = trace.download_time(t, kbits, seed);
        let done = t + dl;
        rungs.push(r);
        throughputs.push(kbits / dl);
        free_at = done;

        if i + 1 == startup_n {
            start = Some(done);
            ps.push(done);
            for j in 1..=i {
                ps.push(ps[j - 1] + lens[j - 1]);
            }
        } else if i >= startup_n {
            let due = ps[i - 1] + lens[i - 1];
            if done > due {
                stall_before[i] = done - due;
            }
            ps.push(due.max(done));
        }
    }

    let startup_delay = start.expect("at least one segment");
    let end_time = ps[n - 1] + lens[n - 1];
    let stall_time: f64 = stall_before.iter().sum();

    let mut r = rng::stream(seed, &[0x006c_6174]);
    let t0 = SIM_EPOCH_MS + scenario.start_hour as i64 * 3_600_000;
    let mut events = Vec::with_capacity(2 * n + 2);
    let mut push = |t: f64, kind: EventType, rung: usize, from: f64, to: f64, dur: f64, r: &mut rand_chacha::ChaCha8Rng| {
        let client_time = t0 + (t * 1000.0).round() as i64;
        events.push(RawEvent {
            client_time,
            server_time: Some(client_time + r.random_range(20..120)),
            user_id: user_id.to_string(),
            video_id: SIM_VIDEO_ID.to_string(),
            session_id: session_id.to_string(),
            event_type: kind,
            device_class: scenario.device_class,
            cdn: "sim".into(),
            bitrate: Some(ladder[rung]),
            videotime_start: Some(from),
            videotime_end: Some(to),
            event_duration: Some(dur),
            video_duration: Some(duration),
            error_code: None,
            extras: BTreeMap::new(),
        });
    };
    push(0.0, EventType::Startup, rungs[0], 0.0, 0.0, startup_delay, &mut r);
    let mut switches = 0;
    for j in 0..n {
        if stall_before[j] > 0.0 {
            push(ps[j] - stall_before[j], EventType::Stall, rungs[j - 1], pos[j], pos[j], stall_before[j], &mut r);
        }
        if j > 0 && rungs[j] != rungs[j - 1] {
            switches += 1;
            push(ps[j], EventType::BitrateSwitch, rungs[j], pos[j], pos[j], 0.0, &mut r);
        }
        let kind = if j == 0 { EventType::Play } else { EventType::Heartbeat };
        push(ps[j] + lens[j], kind, rungs[j], pos[j], ends[j], lens[j], &mut r);
    }
    push(end_time, EventType::Quit, rungs[n - 1], duration, duration, 0.0, &mut r);
    events.sort_by_key(|e| e.client_time);

    let mean_bitrate = (0..n).map(|j| ladder[rungs[j]] * lens[j]).sum::<f64>() / duration;
    SimOutput {
        events,
        stats: SimStats {
            startup_delay,
            playback_time: duration,
            stall_time,
            stall_count: stall_before.iter().filter(|s| **s > 0.0).count(),
            wall_time: end_time,
            switch_count: switches,
            mean_bitrate,
            rungs,
        },
    }
}
