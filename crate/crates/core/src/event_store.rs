//! Raw player events: data model, CSV/JSONL parsing, session grouping and
//! on-disk persistence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Startup,
    Play,
    Pause,
    Seek,
    Stall,
    BitrateSwitch,
    Heartbeat,
    Quit,
    Error,
}

impl EventType {
    pub const ALL: [EventType; 9] = [
        EventType::Startup,
        EventType::Play,
        EventType::Pause,
        EventType::Seek,
        EventType::Stall,
        EventType::BitrateSwitch,
        EventType::Heartbeat,
        EventType::Quit,
        EventType::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Startup => "startup",
            EventType::Play => "play",
            EventType::Pause => "pause",
            EventType::Seek => "seek",
            EventType::Stall => "stall",
            EventType::BitrateSwitch => "bitrate_switch",
            EventType::Heartbeat => "heartbeat",
            EventType::Quit => "quit",
            EventType::Error => "error",
        }
    }

    /// Canonical names plus the raw-type aliases collapsed onto them.
    pub fn parse(raw: &str) -> Option<Self> {
        let canonical = EventType::ALL.iter().copied().find(|t| t.as_str() == raw);
        canonical.or(match raw {
            "rebuffering" | "buffering" => Some(EventType::Stall),
            "qualitychange" => Some(EventType::BitrateSwitch),
            "startuptime" => Some(EventType::Startup),
            _ => None,
        })
    }

    /// Events that advance the playhead.
    pub fn is_playback(self) -> bool {
        matches!(self, EventType::Play | EventType::Heartbeat)
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    Phone,
    Tablet,
    Laptop,
    Desktop,
    Tv,
    Console,
    #[default]
    Unknown,
}

impl DeviceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceClass::Phone => "phone",
            DeviceClass::Tablet => "tablet",
            DeviceClass::Laptop => "laptop",
            DeviceClass::Desktop => "desktop",
            DeviceClass::Tv => "tv",
            DeviceClass::Console => "console",
            DeviceClass::Unknown => "unknown",
        }
    }

    pub fn parse(raw: &str) -> Option<Self> {
        Some(match raw {
            "phone" => DeviceClass::Phone,
            "tablet" => DeviceClass::Tablet,
            "laptop" => DeviceClass::Laptop,
            "desktop" => DeviceClass::Desktop,
            "tv" => DeviceClass::Tv,
            "console" => DeviceClass::Console,
            "unknown" => DeviceClass::Unknown,
            _ => return None,
        })
    }
}

/// One analytics row. Times are epoch milliseconds (UTC); video positions and
/// durations are seconds; bitrate is kbps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub client_time: i64,
    pub server_time: Option<i64>,
    pub user_id: String,
    pub video_id: String,
    pub session_id: String,
    pub event_type: EventType,
    pub device_class: DeviceClass,
    pub cdn: String,
    pub bitrate: Option<f64>,
    pub videotime_start: Option<f64>,
    pub videotime_end: Option<f64>,
    pub event_duration: Option<f64>,
    pub video_duration: Option<f64>,
    pub error_code: Option<String>,
    /// Pass-through columns outside the modeled schema.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

impl RawEvent {
    pub fn key(&self) -> SessionKey {
        SessionKey { user_id: self.user_id.clone(), video_id: self.video_id.clone(), session_id: self.session_id.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionKey {
    pub user_id: String,
    pub video_id: String,
    pub session_id: String,
}

/// Sessions keyed by identity, each holding its time-ordered events.
pub type Sessions = BTreeMap<SessionKey, Vec<RawEvent>>;

pub const COLUMNS: [&str; 14] = [
    "client_time",
    "server_time",
    "user_id",
    "video_id",
    "session_id",
    "event_type",
    "device_class",
    "cdn",
    "bitrate",
    "videotime_start",
    "videotime_end",
    "event_duration",
    "video_duration",
    "error_code",
];

pub const MANDATORY_COLUMNS: [&str; 3] = ["user_id", "session_id", "event_type"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl FromStr for LogFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" => Ok(LogFormat::Jsonl),
            other => Err(Error::config(format!("unknown log format `{other}` (expected csv or jsonl)"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    /// Data rows read, including skipped ones.
    pub rows: usize,
    pub skipped: usize,
    /// Optional fields present but unparseable, stored as null.
    pub nulled_fields: usize,
    /// First few skip reasons, `(row number, reason)`.
    pub skip_reasons: Vec<(usize, String)>,
}

const MAX_SKIP_REASONS: usize = 20;

impl ParseReport {
    pub fn events(&self) -> usize {
        self.rows - self.skipped
    }

    fn skip(&mut self, row: usize, reason: String) {
        self.skipped += 1;
        if self.skip_reasons.len() < MAX_SKIP_REASONS {
            self.skip_reasons.push((row, reason));
        }
    }

    pub fn merge(&mut self, other: ParseReport) {
        self.rows += other.rows;
        self.skipped += other.skipped;
        self.nulled_fields += other.nulled_fields;
        for r in other.skip_reasons {
            if self.skip_reasons.len() < MAX_SKIP_REASONS {
                self.skip_reasons.push(r);
            }
        }
    }
}

fn parse_time(raw: &str) -> Option<i64> {
    raw.parse::<i64>().ok().or_else(|| {
        let v = raw.parse::<f64>().ok()?;
        (v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// Builds one event from a field accessor. `Err` means the row is skipped.
fn build_event(
    get: &dyn Fn(&str) -> Option<String>,
    extras: BTreeMap<String, String>,
    nulled: &mut usize,
) -> std::result::Result<RawEvent, String> {
    let required = |name: &str| get(name).ok_or_else(|| format!("missing {name}"));
    let user_id = required("user_id")?;
    let session_id = required("session_id")?;
    let raw_type = required("event_type")?;
    let event_type = EventType::parse(&raw_type).ok_or_else(|| format!("unknown event_type `{raw_type}`"))?;
    let client_time = required("client_time").and_then(|v| parse_time(&v).ok_or_else(|| format!("bad client_time `{v}`")))?;

    let mut optional_f64 = |name: &str| -> Option<f64> {
        let raw = get(name)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                *nulled += 1;
                None
            }
        }
    };
    let bitrate = optional_f64("bitrate");
    let videotime_start = optional_f64("videotime_start");
    let videotime_end = optional_f64("videotime_end");
    let event_duration = optional_f64("event_duration");
    let video_duration = optional_f64("video_duration");
    let server_time = match get("server_time") {
        None => None,
        Some(raw) => {
            let t = parse_time(&raw);
            if t.is_none() {
                *nulled += 1;
            }
            t
        }
    };
    let device_class = match get("device_class") {
        None => DeviceClass::Unknown,
        Some(raw) => DeviceClass::parse(&raw).unwrap_or_else(|| {
            *nulled += 1;
            DeviceClass::Unknown
        }),
    };
    let mut error_code = get("error_code");
    match (event_type, &error_code) {
        (EventType::Error, None) => error_code = Some("unspecified".to_string()),
        (t, Some(code)) if t != EventType::Error => {
            return Err(format!("error_code `{code}` on a {t} event"));
        }
        _ => {}
    }
    Ok(RawEvent {
        client_time,
        server_time,
        user_id,
        video_id: get("video_id").unwrap_or_default(),
        session_id,
        event_type,
        device_class,
        cdn: get("cdn").unwrap_or_default(),
        bitrate,
        videotime_start,
        videotime_end,
        event_duration,
        video_duration,
        error_code,
        extras,
    })
}

fn non_empty(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// Parses an event log. Malformed rows are counted and skipped; unparseable
/// optional values become null.
pub fn parse_event_log<R: Read>(reader: R, format: LogFormat) -> Result<(Vec<RawEvent>, ParseReport)> {
    match format {
        LogFormat::Csv => parse_csv(reader),
        LogFormat::Jsonl => parse_jsonl(reader),
    }
}

fn parse_csv<R: Read>(reader: R) -> Result<(Vec<RawEvent>, ParseReport)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers: Vec<String> = match rdr.headers() {
        Ok(h) => h.iter().map(|s| s.trim().to_string()).collect(),
        Err(e) => return Err(csv_error(e)),
    };
    if let Some(missing) = MANDATORY_COLUMNS.iter().find(|c| !headers.iter().any(|h| h == *c)) {
        return Err(Error::schema(format!("header lacks mandatory column `{missing}`")));
    }
    let index: BTreeMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let extra_cols: Vec<(usize, &String)> =
        headers.iter().enumerate().filter(|(_, h)| !COLUMNS.contains(&h.as_str())).collect();

    let mut events = Vec::new();
    let mut report = ParseReport::default();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        report.rows += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(csv_error(e)),
            Err(e) => {
                report.skip(row, e.to_string());
                continue;
            }
        };
        if rec.len() != headers.len() {
            report.skip(row, format!("{} fields, header has {}", rec.len(), headers.len()));
            continue;
        }
        let get = |name: &str| index.get(name).and_then(|&i| rec.get(i)).and_then(non_empty);
        let extras = extra_cols
            .iter()
            .filter_map(|(i, h)| rec.get(*i).filter(|v| !v.is_empty()).map(|v| ((*h).clone(), v.to_string())))
            .collect();
        match build_event(&get, extras, &mut report.nulled_fields) {
            Ok(ev) => events.push(ev),
            Err(reason) => report.skip(row, reason),
        }
    }
    Ok((events, report))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Csv(csv::Error::from(std::io::Error::other(format!("{other:?}")))),
    }
}

fn json_to_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) => non_empty(s),
        other => Some(other.to_string()),
    }
}

fn parse_jsonl<R: Read>(reader: R) -> Result<(Vec<RawEvent>, ParseReport)> {
    let mut events = Vec::new();
    let mut report = ParseReport::default();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.rows += 1;
        let obj = match serde_json::from_str::<serde_json::Value>(&line) {
            Ok(serde_json::Value::Object(o)) => o,
            Ok(_) => {
                report.skip(i + 1, "line is not a JSON object".into());
                continue;
            }
            Err(e) => {
                report.skip(i + 1, e.to_string());
                continue;
            }
        };
        let get = |name: &str| obj.get(name).and_then(json_to_string);
        let extras = obj
            .iter()
            .filter(|(k, _)| !COLUMNS.contains(&k.as_str()))
            .filter_map(|(k, v)| json_to_string(v).map(|s| (k.clone(), s)))
            .collect();
        match build_event(&get, extras, &mut report.nulled_fields) {
            Ok(ev) => events.push(ev),
            Err(reason) => report.skip(i + 1, reason),
        }
    }
    Ok((events, report))
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn event_cells(e: &RawEvent) -> [String; 14] {
    [
        e.client_time.to_string(),
        opt(&e.server_time),
        e.user_id.clone(),
        e.video_id.clone(),
        e.session_id.clone(),
        e.event_type.as_str().to_string(),
        e.device_class.as_str().to_string(),
        e.cdn.clone(),
        opt(&e.bitrate),
        opt(&e.videotime_start),
        opt(&e.videotime_end),
        opt(&e.event_duration),
        opt(&e.video_duration),
        opt(&e.error_code),
    ]
}

/// Writes events as CSV; extra columns (sorted union) follow the schema columns.
pub fn write_events_csv<'a, W: Write>(events: impl IntoIterator<Item = &'a RawEvent> + Clone, writer: W) -> Result<()> {
    let extra_cols: BTreeSet<String> = events.clone().into_iter().flat_map(|e| e.extras.keys().cloned()).collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS.iter().copied().chain(extra_cols.iter().map(String::as_str)))?;
    for e in events {
        let cells = event_cells(e);
        let extras = extra_cols.iter().map(|k| e.extras.get(k).map(String::as_str).unwrap_or(""));
        w.write_record(cells.iter().map(String::as_str).chain(extras))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_jsonl<'a, W: Write>(events: impl IntoIterator<Item = &'a RawEvent>, mut writer: W) -> Result<()> {
    for e in events {
        let mut obj = serde_json::Map::new();
        for (name, cell) in COLUMNS.iter().zip(event_cells(e)) {
            if cell.is_empty() {
                continue;
            }
            let value = match *name {
                "client_time" | "server_time" => serde_json::Value::from(cell.parse::<i64>().expect("integer cell")),
                "bitrate" | "videotime_start" | "videotime_end" | "event_duration" | "video_duration" => {
                    serde_json::Value::from(cell.parse::<f64>().expect("float cell"))
                }
                _ => serde_json::Value::String(cell),
            };
            obj.insert(name.to_string(), value);
        }
        for (k, v) in &e.extras {
            obj.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        serde_json::to_writer(&mut writer, &obj)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Groups events by session; each group is sorted by `client_time`, stable on ties.
pub fn group_sessions(events: impl IntoIterator<Item = RawEvent>) -> Sessions {
    let mut sessions: Sessions = BTreeMap::new();
    for e in events {
        sessions.entry(e.key()).or_default().push(e);
    }
    for evs in sessions.values_mut() {
        evs.sort_by_key(|e| e.client_time);
    }
    sessions
}

pub const EVENTS_FILE: &str = "events.csv";

/// Persists grouped sessions as one CSV in session-key, time order.
pub fn write_sessions_dir(dir: &Path, sessions: &Sessions) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(EVENTS_FILE);
    let file = fs::File::create(&path)?;
    write_events_csv(sessions.values().flatten(), std::io::BufWriter::new(file))?;
    Ok(path)
}

/// Loads every `events*.csv` / `events*.jsonl` file in `dir` (in parallel) and
/// groups the union into sessions.
pub fn read_sessions_dir(dir: &Path) -> Result<(Sessions, ParseReport)> {
    let mut files: Vec<(PathBuf, LogFormat)> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?.to_string();
            if !name.starts_with("events") {
                return None;
            }
            let fmt = if name.ends_with(".csv") {
                LogFormat::Csv
            } else if name.ends_with(".jsonl") {
                LogFormat::Jsonl
            } else {
                return None;
            };
            Some((p, fmt))
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    if files.is_empty() {
        return Err(Error::Invalid(format!("no events*.csv or events*.jsonl files in {}", dir.display())));
    }
    let parsed = files
        .par_iter()
        .map(|(p, f)| parse_event_log(BufReader::new(fs::File::open(p)?), *f))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ParseReport::default();
    let mut all = Vec::new();
    for (events, r) in parsed {
        report.merge(r);
        all.extend(events);
    }
    Ok((group_sessions(all), report))
}
