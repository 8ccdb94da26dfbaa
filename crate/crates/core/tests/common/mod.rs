//! Fixtures and independent oracles shared by the integration and acceptance
//! tests.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;

use digitwise::event_store::{group_sessions, DeviceClass, EventType, RawEvent, Sessions};
use digitwise::learner::FeatureMatrix;

pub const T0: i64 = 1_704_067_200_000;

pub fn event(user: &str, video: &str, session: &str, t: i64, kind: EventType) -> RawEvent {
    RawEvent {
        client_time: t,
        server_time: Some(t + 40),
        user_id: user.into(),
        video_id: video.into(),
        session_id: session.into(),
        event_type: kind,
        device_class: DeviceClass::Laptop,
        cdn: "cdn-a".into(),
        bitrate: Some(1600.0),
        videotime_start: Some(0.0),
        videotime_end: Some(0.0),
        event_duration: Some(0.0),
        video_duration: Some(600.0),
        error_code: None,
        extras: BTreeMap::new(),
    }
}

/// Startup, 60 s of play and a quit: a session every rule accepts.
pub fn clean_session(user: &str, video: &str, session: &str, start: i64) -> Vec<RawEvent> {
    let mut startup = event(user, video, session, start, EventType::Startup);
    startup.event_duration = Some(1.0);
    let mut play = event(user, video, session, start + 61_000, EventType::Play);
    play.videotime_end = Some(60.0);
    play.event_duration = Some(60.0);
    let mut quit = event(user, video, session, start + 61_500, EventType::Quit);
    quit.videotime_start = Some(60.0);
    quit.videotime_end = Some(60.0);
    vec![startup, play, quit]
}

/// `n` clean sessions for `user`, spread round-robin over `videos` videos.
pub fn user_sessions(user: &str, n: usize, videos: usize) -> Vec<RawEvent> {
    (0..n)
        .flat_map(|i| clean_session(user, &format!("v{}", i % videos), &format!("{user}-{i}"), T0 + i as i64 * 3_600_000))
        .collect()
}

/// A corpus that breaks each of R1..R11 exactly once. Three users break R2,
/// R3 and R4; the remaining rules are broken inside `good`'s extra sessions,
/// so removing them leaves `good` above every user threshold.
pub fn rule_violation_corpus() -> Sessions {
    let mut ev = user_sessions("good", 60, 10);
    ev.extend(user_sessions("other", 60, 10));

    // R1: a non-finite bitrate, nulled but not removed
    let mut s = clean_session("good", "v0", "good-r1", T0 - 10_000_000);
    s[1].bitrate = Some(f64::NAN);
    ev.extend(s);
    // R2: 101 sessions of one video
    let bot = user_sessions("bot", 101, 1);
    ev.extend(bot);
    // R3: 49 sessions
    ev.extend(user_sessions("sparse", 49, 10));
    // R4: four distinct videos
    ev.extend(user_sessions("narrow", 60, 4));
    // R5: one event reports a shorter duration than the rest of its video
    let mut s = clean_session("good", "v1", "good-r5", T0 - 20_000_000);
    s[0].video_duration = Some(590.0);
    ev.extend(s);
    // R6: an error event
    let mut s = clean_session("good", "v2", "good-r6", T0 - 30_000_000);
    let mut err = event("good", "v2", "good-r6", T0 - 30_000_000 + 30_000, EventType::Error);
    err.error_code = Some("E42".into());
    s.push(err);
    ev.extend(s);
    // R7: no playhead positions at all
    let mut s = clean_session("good", "v3", "good-r7", T0 - 40_000_000);
    for e in &mut s {
        e.videotime_start = None;
        e.videotime_end = None;
    }
    ev.extend(s);
    // R8: five seconds of playback
    let mut s = clean_session("good", "v4", "good-r8", T0 - 50_000_000);
    s[1].event_duration = Some(5.0);
    s[1].videotime_end = Some(5.0);
    s[2].videotime_start = Some(5.0);
    s[2].videotime_end = Some(5.0);
    ev.extend(s);
    // R9: the quit arrives 25 hours later
    let mut s = clean_session("good", "v5", "good-r9", T0 - 200_000_000);
    s[2].client_time += 25 * 3_600_000;
    ev.extend(s);
    // R10: a negative duration
    let mut s = clean_session("good", "v6", "good-r10", T0 - 60_000_000);
    let mut pause = event("good", "v6", "good-r10", T0 - 60_000_000 + 30_000, EventType::Pause);
    pause.event_duration = Some(-3.0);
    s.push(pause);
    ev.extend(s);
    // R11: playhead past the end of the video
    let mut s = clean_session("good", "v7", "good-r11", T0 - 70_000_000);
    s[1].videotime_end = Some(700.0);
    s[1].event_duration = Some(700.0);
    ev.extend(s);
    group_sessions(ev)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteSplit {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Best root split by exhaustive search: every feature, every midpoint
/// between consecutive distinct values, gain
/// `GL²/(HL+λ) + GR²/(HR+λ) − G²/(H+λ)`. Rows are sent left when
/// `x < threshold`. Gains within a relative 1e-9 of the maximum count as
/// tied and the lowest (feature, threshold) wins.
pub fn brute_force_root_split(x: &FeatureMatrix<f64>, g: &[f64], h: &[f64], lambda: f64, min_leaf: usize) -> Option<BruteSplit> {
    let n = g.len();
    let gs: f64 = g.iter().sum();
    let hs: f64 = h.iter().sum();
    let parent = gs * gs / (hs + lambda);
    let mut all = Vec::new();
    for f in 0..x.n_cols() {
        let mut vals: Vec<f64> = (0..n).map(|r| x.get(r, f)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = w[0] + (w[1] - w[0]) / 2.0;
            let thr = if w[0] < thr && thr <= w[1] { thr } else { w[1] };
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0);
            for r in 0..n {
                if x.get(r, f) < thr {
                    gl += g[r];
                    hl += h[r];
                    nl += 1;
                }
            }
            if nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let (gr, hr) = (gs - gl, hs - hl);
            let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
            all.push(BruteSplit { feature: f, threshold: thr, gain });
        }
    }
    let best = all.iter().map(|s| s.gain).fold(f64::NEG_INFINITY, f64::max);
    if !(best > 0.0) {
        return None;
    }
    all.into_iter().filter(|s| s.gain >= best - 1e-9 * best.abs().max(1.0)).min_by(|a, b| {
        a.feature.cmp(&b.feature).then(a.threshold.total_cmp(&b.threshold))
    })
}

/// Training RMSE after each boosting round, recomputed from the trees.
pub fn rmse_by_round(model: &digitwise::TreeEnsemble, x: &FeatureMatrix<f64>, y: &[f64]) -> Vec<f64> {
    (0..=model.trees.len())
        .map(|k| {
            let se: f64 = x.rows().zip(y).map(|(r, t)| (model.predict_staged(r, k) - t).powi(2)).sum();
            (se / y.len() as f64).sqrt()
        })
        .collect()
}
