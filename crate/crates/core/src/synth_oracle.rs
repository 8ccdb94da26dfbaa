//! Synthetic users with known sensitivities, and raw event logs that realize
//! them.
//!
//! Each user carries latent weights over four feature families. A session's
//! engagement is `clamp(1 - Σ w_f · penalty_f + noise, 0, 1)`, where each
//! family penalty lies in [0, 1]:
//!
//! | family     | penalty                                   |
//! |------------|-------------------------------------------|
//! | stall      | `stall_count / max_stalls`                |
//! | bitrate    | `1 - (bitrate - 400) / 6000`              |
//! | duration   | `(D - D_min) / (D_max - D_min)`           |
//! | popularity | `popularity_rank / (n_videos - 1)`        |
//!
//! Session conditions are drawn so that engagement is close to uniform on
//! [0, 1] for every user: a target engagement is drawn first and the user's
//! dominant family is set to whatever penalty reaches it. That keeps all ten
//! engagement bins populated, so balancing does not starve any user.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_store::{write_events_csv, DeviceClass, EventType, RawEvent, SessionKey};
use crate::pipeline::FeatureFamily;
use crate::rng;

pub const MIN_BITRATE: f64 = 400.0;
pub const MAX_BITRATE: f64 = 6400.0;
/// Seconds watched at minimum, so every session clears the 10 s play rule.
pub const MIN_WATCH: f64 = 15.0;
const HEARTBEAT: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    StallSensitive,
    BitrateSensitive,
    DurationSensitive,
    PopularityDriven,
    Mixed,
}

impl Archetype {
    pub const ALL: [Archetype; 5] = [
        Archetype::StallSensitive,
        Archetype::BitrateSensitive,
        Archetype::DurationSensitive,
        Archetype::PopularityDriven,
        Archetype::Mixed,
    ];

    /// Latent family weights, in [`FAMILIES`] order.
    pub fn weights(self) -> [f64; 4] {
        match self {
            Archetype::StallSensitive => [0.8, 0.1, 0.05, 0.05],
            Archetype::BitrateSensitive => [0.1, 0.8, 0.05, 0.05],
            Archetype::DurationSensitive => [0.1, 0.05, 0.8, 0.05],
            Archetype::PopularityDriven => [0.1, 0.05, 0.05, 0.8],
            Archetype::Mixed => [0.4, 0.3, 0.2, 0.1],
        }
    }

    pub fn dominant(self) -> FeatureFamily {
        let w = self.weights();
        let i = (0..4).fold(0, |best, i| if w[i] > w[best] { i } else { best });
        FAMILIES[i]
    }
}

pub const FAMILIES: [FeatureFamily; 4] =
    [FeatureFamily::Stall, FeatureFamily::Bitrate, FeatureFamily::Duration, FeatureFamily::Popularity];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthUser {
    pub user_id: String,
    pub archetype: Archetype,
    pub weights: IndexMap<FeatureFamily, f64>,
    pub noise_sd: f64,
}

impl GroundTruthUser {
    fn weight_array(&self) -> [f64; 4] {
        FAMILIES.map(|f| self.weights.get(&f).copied().unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_users: usize,
    pub sessions_per_user: usize,
    pub n_videos: usize,
    pub video_duration_min: f64,
    pub video_duration_max: f64,
    pub seed: u64,
    pub mix: IndexMap<Archetype, f64>,
    pub noise_sd: f64,
    pub max_stalls: u32,
    pub zipf_exponent: f64,
    /// Epoch milliseconds of the first session.
    pub start_time: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 60,
            sessions_per_user: 300,
            n_videos: 200,
            video_duration_min: 300.0,
            video_duration_max: 2400.0,
            seed: 0,
            mix: [(Archetype::StallSensitive, 0.5), (Archetype::BitrateSensitive, 0.5)].into_iter().collect(),
            noise_sd: 0.05,
            max_stalls: 10,
            zipf_exponent: 0.8,
            start_time: 1_704_067_200_000,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.mix.values().sum();
        if self.mix.is_empty() || (total - 1.0).abs() > 1e-9 || self.mix.values().any(|p| *p < 0.0) {
            return Err(Error::config(format!("archetype proportions must be non-negative and sum to 1, got {total}")));
        }
        if self.sessions_per_user < 100 {
            return Err(Error::config("sessions_per_user must be at least 100"));
        }
        if self.n_videos < 5 {
            return Err(Error::config("n_videos must be at least 5"));
        }
        if !(self.video_duration_min >= 2.0 * MIN_WATCH && self.video_duration_max >= self.video_duration_min) {
            return Err(Error::config("video duration range must satisfy 30 <= min <= max"));
        }
        if !(self.noise_sd >= 0.0) || self.max_stalls == 0 {
            return Err(Error::config("noise_sd must be >= 0 and max_stalls >= 1"));
        }
        Ok(())
    }
}

/// Archetype counts by largest remainder, ties to the earlier archetype.
fn apportion(mix: &IndexMap<Archetype, f64>, n: usize) -> Vec<(Archetype, usize)> {
    let mut counts: Vec<(Archetype, usize, f64)> =
        mix.iter().map(|(a, p)| (*a, (p * n as f64).floor() as usize, p * n as f64 - (p * n as f64).floor())).collect();
    let mut left = n - counts.iter().map(|c| c.1).sum::<usize>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].2.partial_cmp(&counts[a].2).unwrap().then(a.cmp(&b)));
    for i in order {
        if left == 0 {
            break;
        }
        counts[i].1 += 1;
        left -= 1;
    }
    counts.into_iter().map(|(a, c, _)| (a, c)).collect()
}

pub fn generate_population(cfg: &SynthConfig) -> Result<Vec<GroundTruthUser>> {
    cfg.validate()?;
    let mut archetypes: Vec<Archetype> =
        apportion(&cfg.mix, cfg.n_users).into_iter().flat_map(|(a, c)| std::iter::repeat_n(a, c)).collect();
    archetypes.shuffle(&mut rng::stream(cfg.seed, &[0x706f70]));
    let width = cfg.n_users.to_string().len().max(3);
    Ok(archetypes
        .into_iter()
        .enumerate()
        .map(|(i, a)| GroundTruthUser {
            user_id: format!("user-{i:0width$}"),
            archetype: a,
            weights: FAMILIES.iter().copied().zip(a.weights()).collect(),
            noise_sd: cfg.noise_sd,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Video {
    pub video_id: String,
    pub duration: f64,
    /// 0 is the most popular.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct VideoCatalog {
    pub videos: Vec<Video>,
    cumulative: Vec<f64>,
    by_duration: Vec<usize>,
    d_min: f64,
    d_max: f64,
}

impl VideoCatalog {
    pub fn new(cfg: &SynthConfig) -> Self {
        let mut r = rng::stream(cfg.seed, &[0x766964]);
        let videos: Vec<Video> = (0..cfg.n_videos)
            .map(|i| Video {
                video_id: format!("video-{i:04}"),
                duration: r.random_range(cfg.video_duration_min..=cfg.video_duration_max).round(),
                rank: i,
            })
            .collect();
        let mut acc = 0.0;
        let cumulative = (0..cfg.n_videos)
            .map(|i| {
                acc += 1.0 / ((i + 1) as f64).powf(cfg.zipf_exponent);
                acc
            })
            .collect();
        let mut by_duration: Vec<usize> = (0..videos.len()).collect();
        by_duration.sort_by(|&a, &b| videos[a].duration.partial_cmp(&videos[b].duration).unwrap().then(a.cmp(&b)));
        Self { videos, cumulative, by_duration, d_min: cfg.video_duration_min, d_max: cfg.video_duration_max }
    }

    fn zipf(&self, r: &mut ChaCha8Rng) -> usize {
        let u = r.random::<f64>() * self.cumulative.last().copied().unwrap_or(0.0);
        self.cumulative.partition_point(|&c| c <= u).min(self.videos.len() - 1)
    }

    pub fn duration_penalty(&self, v: usize) -> f64 {
        if self.d_max > self.d_min {
            ((self.videos[v].duration - self.d_min) / (self.d_max - self.d_min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn popularity_penalty(&self, v: usize) -> f64 {
        self.videos[v].rank as f64 / (self.videos.len() - 1) as f64
    }

    fn nearest_by_duration(&self, p: f64) -> usize {
        let pos = self.by_duration.partition_point(|&v| self.duration_penalty(v) < p);
        let cands = [pos.saturating_sub(1), pos.min(self.by_duration.len() - 1)];
        let best = cands
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let da = (self.duration_penalty(self.by_duration[a]) - p).abs();
                let db = (self.duration_penalty(self.by_duration[b]) - p).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        self.by_duration[best]
    }

    fn nearest_by_popularity(&self, p: f64) -> usize {
        ((p * (self.videos.len() - 1) as f64).round() as usize).min(self.videos.len() - 1)
    }
}

/// What the generator intended for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTruth {
    pub key: SessionKey,
    pub engagement: f64,
    /// Penalties in [`FAMILIES`] order.
    pub penalties: [f64; 4],
    pub stall_count: u32,
    pub bitrate: f64,
    pub video_duration: f64,
}

/// Session conditions before they are turned into events.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Conditions {
    stalls: u32,
    bitrate: f64,
    video: usize,
}

fn penalties(c: &Conditions, cfg: &SynthConfig, cat: &VideoCatalog) -> [f64; 4] {
    [
        c.stalls as f64 / cfg.max_stalls as f64,
        1.0 - (c.bitrate - MIN_BITRATE) / (MAX_BITRATE - MIN_BITRATE),
        cat.duration_penalty(c.video),
        cat.popularity_penalty(c.video),
    ]
}

fn draw_conditions(user: &GroundTruthUser, cfg: &SynthConfig, cat: &VideoCatalog, r: &mut ChaCha8Rng) -> Conditions {
    let w = user.weight_array();
    let dom = (0..4).fold(0, |best, i| if w[i] > w[best] { i } else { best });
    let target_penalty = 1.0 - r.random::<f64>();
    let mut last = None;
    for _ in 0..64 {
        let mut c = Conditions {
            stalls: r.random_range(0..=cfg.max_stalls),
            bitrate: r.random_range(MIN_BITRATE..=MAX_BITRATE),
            video: cat.zipf(r),
        };
        let p = penalties(&c, cfg, cat);
        let others: f64 = (0..4).filter(|&i| i != dom).map(|i| w[i] * p[i]).sum();
        let need = (target_penalty - others) / w[dom];
        let feasible = (0.0..=1.0).contains(&need);
        let need = need.clamp(0.0, 1.0);
        match FAMILIES[dom] {
            FeatureFamily::Stall => c.stalls = (need * cfg.max_stalls as f64).round() as u32,
            FeatureFamily::Bitrate => c.bitrate = MIN_BITRATE + (1.0 - need) * (MAX_BITRATE - MIN_BITRATE),
            FeatureFamily::Duration => c.video = cat.nearest_by_duration(need),
            _ => c.video = cat.nearest_by_popularity(need),
        }
        if feasible {
            return c;
        }
        last = Some(c);
    }
    last.expect("at least one draw")
}

/// Events realizing a session that stops at `engagement · duration`.
fn realize(
    key: &SessionKey,
    c: &Conditions,
    duration: f64,
    engagement: f64,
    start: i64,
    r: &mut ChaCha8Rng,
) -> Vec<RawEvent> {
    let quit_at = engagement * duration;
    let device = [DeviceClass::Phone, DeviceClass::Tablet, DeviceClass::Laptop, DeviceClass::Desktop, DeviceClass::Tv]
        [r.random_range(0..5)];
    let cdn = ["cdn-a", "cdn-b", "cdn-c"][r.random_range(0..3)];
    let mut stalls: Vec<(f64, f64)> =
        (0..c.stalls).map(|_| (r.random_range(0.0..quit_at), r.random_range(0.5..4.0))).collect();
    stalls.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut pauses: Vec<(f64, f64)> =
        (0..r.random_range(0..3)).map(|_| (r.random_range(0.0..quit_at), r.random_range(1.0..30.0))).collect();
    pauses.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut events = Vec::new();
    let mut push = |t_ms: f64, kind: EventType, start: f64, end: f64, dur: f64, r: &mut ChaCha8Rng| {
        let client_time = t_ms.round() as i64;
        events.push(RawEvent {
            client_time,
            server_time: Some(client_time + r.random_range(20..120)),
            user_id: key.user_id.clone(),
            video_id: key.video_id.clone(),
            session_id: key.session_id.clone(),
            event_type: kind,
            device_class: device,
            cdn: cdn.to_string(),
            bitrate: Some(c.bitrate),
            videotime_start: Some(start),
            videotime_end: Some(end),
            event_duration: Some(dur),
            video_duration: Some(duration),
            error_code: None,
            extras: BTreeMap::new(),
        });
    };

    let startup = r.random_range(0.3..3.0);
    let mut wall = start as f64;
    push(wall, EventType::Startup, 0.0, 0.0, startup, r);
    wall += startup * 1000.0;

    // Breakpoints: heartbeat boundaries, stall and pause positions, the quit point.
    let mut cuts: Vec<f64> = (1..).map(|i| i as f64 * HEARTBEAT).take_while(|&p| p < quit_at).collect();
    cuts.extend(stalls.iter().map(|s| s.0));
    cuts.extend(pauses.iter().map(|p| p.0));
    cuts.push(quit_at);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (mut si, mut pi) = (0, 0);
    let mut pos = 0.0;
    let mut first = true;
    for cut in cuts {
        if cut > pos {
            // Playback is reported once the interval has been watched.
            let kind = if first { EventType::Play } else { EventType::Heartbeat };
            first = false;
            wall += (cut - pos) * 1000.0;
            push(wall, kind, pos, cut, cut - pos, r);
            pos = cut;
        }
        while si < stalls.len() && stalls[si].0 <= pos {
            push(wall, EventType::Stall, pos, pos, stalls[si].1, r);
            wall += stalls[si].1 * 1000.0;
            si += 1;
        }
        while pi < pauses.len() && pauses[pi].0 <= pos {
            push(wall, EventType::Pause, pos, pos, pauses[pi].1, r);
            wall += pauses[pi].1 * 1000.0;
            pi += 1;
        }
    }
    push(wall, EventType::Quit, quit_at, quit_at, 0.0, r);
    events
}

/// Sessions of one user, each with its intended outcome.
pub fn generate_sessions(
    user: &GroundTruthUser,
    user_index: usize,
    cfg: &SynthConfig,
    cat: &VideoCatalog,
) -> Vec<(SessionTruth, Vec<RawEvent>)> {
    let w = user.weight_array();
    let noise = Normal::new(0.0, user.noise_sd.max(0.0)).expect("finite sd");
    (0..cfg.sessions_per_user)
        .map(|j| {
            let mut r = rng::stream(cfg.seed, &[0x7365_7373, user_index as u64, j as u64]);
            let c = draw_conditions(user, cfg, cat, &mut r);
            let p = penalties(&c, cfg, cat);
            let video = &cat.videos[c.video];
            let raw = 1.0 - (0..4).map(|i| w[i] * p[i]).sum::<f64>() + noise.sample(&mut r);
            let engagement = raw.clamp(0.0, 1.0).max(MIN_WATCH / video.duration);
            let key = SessionKey {
                user_id: user.user_id.clone(),
                video_id: video.video_id.clone(),
                session_id: format!("{}-s{j:04}", user.user_id),
            };
            // One session every four hours plus jitter, so hours of day vary.
            let start = cfg.start_time + j as i64 * 4 * 3_600_000 + r.random_range(0..3_600_000);
            let events = realize(&key, &c, video.duration, engagement, start, &mut r);
            let truth = SessionTruth {
                key,
                engagement,
                penalties: p,
                stall_count: c.stalls,
                bitrate: c.bitrate,
                video_duration: video.duration,
            };
            (truth, events)
        })
        .collect()
}

pub struct SynthCorpus {
    pub users: Vec<GroundTruthUser>,
    pub videos: Vec<Video>,
    pub truths: Vec<SessionTruth>,
    pub events: Vec<RawEvent>,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    let users = generate_population(cfg)?;
    let cat = VideoCatalog::new(cfg);
    let per_user: Vec<_> = users.par_iter().enumerate().map(|(i, u)| generate_sessions(u, i, cfg, &cat)).collect();
    let mut truths = Vec::new();
    let mut events = Vec::new();
    for sessions in per_user {
        for (t, evs) in sessions {
            truths.push(t);
            events.extend(evs);
        }
    }
    Ok(SynthCorpus { users, videos: cat.videos, truths, events })
}

/// Writes `events.csv` and `ground_truth.csv` (one row per user).
pub fn write_corpus(dir: &Path, corpus: &SynthCorpus) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = fs::File::create(dir.join("events.csv"))?;
    write_events_csv(&corpus.events, std::io::BufWriter::new(file))?;
    let mut w = csv::Writer::from_path(dir.join("ground_truth.csv"))?;
    w.write_record(["user_id", "archetype", "w_stall", "w_bitrate", "w_duration", "w_popularity", "noise_sd"])?;
    for u in &corpus.users {
        let a = serde_json::to_value(u.archetype)?;
        let mut row = vec![u.user_id.clone(), a.as_str().unwrap_or_default().to_string()];
        row.extend(u.weight_array().iter().map(|x| x.to_string()));
        row.push(u.noise_sd.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Feature weights summed per family, over all five families in order.
pub fn family_weights(weights: &IndexMap<String, f64>) -> IndexMap<FeatureFamily, f64> {
    let mut out: IndexMap<FeatureFamily, f64> = FeatureFamily::ALL.iter().map(|f| (*f, 0.0)).collect();
    for (name, w) in weights {
        *out.get_mut(&FeatureFamily::of(name)).expect("every family present") += w;
    }
    out
}

/// Family with the largest summed weight; ties go to the earlier family.
pub fn dominant_family(weights: &IndexMap<String, f64>) -> FeatureFamily {
    let fw = family_weights(weights);
    let mut best = (FeatureFamily::ALL[0], f64::NEG_INFINITY);
    for (f, w) in fw {
        if w > best.1 {
            best = (f, w);
        }
    }
    best.0
}

/// Cosine similarity between family-aggregated extracted weights and the
/// user's latent weights (which put zero on the "other" family).
pub fn latent_cosine(user: &GroundTruthUser, extracted: &IndexMap<String, f64>) -> f64 {
    let fw = family_weights(extracted);
    let a: Vec<f64> = FeatureFamily::ALL.iter().map(|f| fw[f]).collect();
    let b: Vec<f64> = FeatureFamily::ALL.iter().map(|f| user.weights.get(f).copied().unwrap_or(0.0)).collect();
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
