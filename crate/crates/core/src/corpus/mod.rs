//! Dataset schema, ingestion, validation and the per-user message window.
//!
//! The canonical on-disk format is JSON lines, one user per line:
//!
//! ```text
//! {"profile":{"user_id":"u1","age":13,"gender":"female","race":"white",
//!   "ethnicity":"other","depression":false,"anxiety":false,
//!   "self_esteem_issues":true,"bullying_history":"none",
//!   "disciplinary_issues":true,"substance_abuse":false,
//!   "internet_use":"lt_1h_weekly"},
//!  "messages":[{"sender_id":"14","timestamp":"2023-05-01T10:00:00Z","text":"..."}]}
//! ```
//!
//! The csv-pair format is a directory holding `profiles.csv` and
//! `messages.csv` joined on `user_id`; see [`PROFILE_COLUMNS`] and
//! [`MESSAGE_COLUMNS`] for the fixed column order.

mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

pub use synthetic::{
    generate_synthetic, generate_synthetic_with_pools, TemplatePool, SYNTHETIC_NOW,
};

pub const PROFILE_COLUMNS: [&str; 12] = [
    "user_id",
    "age",
    "gender",
    "race",
    "ethnicity",
    "depression",
    "anxiety",
    "self_esteem_issues",
    "bullying_history",
    "disciplinary_issues",
    "substance_abuse",
    "internet_use",
];

pub const MESSAGE_COLUMNS: [&str; 4] = ["user_id", "sender_id", "timestamp", "text"];

macro_rules! wire_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $wire:literal),+ $(,)? } default $default:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $wire)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $wire),+ }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($wire => Some($name::$variant),)+
                    _ => None,
                }
            }

            /// Value used when the field is missing from an otherwise usable record.
            pub fn fill_value() -> Self {
                $name::$default
            }
        }
    };
}

wire_enum!(Gender { Female => "female", Male => "male", Other => "other" } default Other);
wire_enum!(Race { White => "white", Nonwhite => "nonwhite" } default White);
wire_enum!(Ethnicity { HispanicLatino => "hispanic_latino", Other => "other" } default Other);
wire_enum!(
    /// Recency of a previous bullying experience.
    BullyingHistory {
        None => "none",
        Within1Month => "within_1_month",
        OneToTwoMonths => "one_to_two_months",
        MoreThanTwoMonths => "more_than_two_months",
    } default None
);
wire_enum!(
    /// Self-reported internet use, ordered from least to most.
    InternetUse {
        Lt1hWeekly => "lt_1h_weekly",
        Lt4hDaily => "lt_4h_daily",
        FourToSixHDaily => "four_to_six_h_daily",
        Gt6hDaily => "gt_6h_daily",
    } default Lt1hWeekly
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub age: u32,
    pub gender: Gender,
    pub race: Race,
    pub ethnicity: Ethnicity,
    pub depression: bool,
    pub anxiety: bool,
    pub self_esteem_issues: bool,
    pub bullying_history: BullyingHistory,
    pub disciplinary_issues: bool,
    pub substance_abuse: bool,
    pub internet_use: InternetUse,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub sender_id: String,
    #[serde(with = "iso8601")]
    pub timestamp: DateTime<Utc>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub profile: UserProfile,
    pub messages: Vec<Message>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub days_limit: u32,
    pub message_cap: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            days_limit: 90,
            message_cap: 100,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days_limit < 1 || self.message_cap < 1 {
            return Err(Error::Config(format!(
                "window limits must be >= 1 (days={}, messages={})",
                self.days_limit, self.message_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    JsonLines,
    CsvPair,
}

mod iso8601 {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw).ok_or_else(|| serde::de::Error::custom("bad timestamp"))
    }
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Parses RFC 3339 timestamps; a zone-less `YYYY-MM-DDTHH:MM:SS` (or space
/// separated) timestamp is read as UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
        return Some(ts.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .map(|naive| naive.and_utc())
}

/// Profile fields as read from disk, before the missing-value policy runs.
#[derive(Debug, Default)]
struct RawProfile {
    user_id: String,
    age: Option<u32>,
    gender: Option<Gender>,
    race: Option<Race>,
    ethnicity: Option<Ethnicity>,
    depression: Option<bool>,
    anxiety: Option<bool>,
    self_esteem_issues: Option<bool>,
    bullying_history: Option<BullyingHistory>,
    disciplinary_issues: Option<bool>,
    substance_abuse: Option<bool>,
    internet_use: Option<InternetUse>,
}

impl RawProfile {
    const ATTRIBUTES: usize = 11;

    fn missing(&self) -> usize {
        [
            self.age.is_none(),
            self.gender.is_none(),
            self.race.is_none(),
            self.ethnicity.is_none(),
            self.depression.is_none(),
            self.anxiety.is_none(),
            self.self_esteem_issues.is_none(),
            self.bullying_history.is_none(),
            self.disciplinary_issues.is_none(),
            self.substance_abuse.is_none(),
            self.internet_use.is_none(),
        ]
        .iter()
        .filter(|m| **m)
        .count()
    }

    fn fill(self, median_age: u32) -> UserProfile {
        UserProfile {
            user_id: self.user_id,
            age: self.age.unwrap_or(median_age),
            gender: self.gender.unwrap_or_else(Gender::fill_value),
            race: self.race.unwrap_or_else(Race::fill_value),
            ethnicity: self.ethnicity.unwrap_or_else(Ethnicity::fill_value),
            depression: self.depression.unwrap_or(false),
            anxiety: self.anxiety.unwrap_or(false),
            self_esteem_issues: self.self_esteem_issues.unwrap_or(false),
            bullying_history: self
                .bullying_history
                .unwrap_or_else(BullyingHistory::fill_value),
            disciplinary_issues: self.disciplinary_issues.unwrap_or(false),
            substance_abuse: self.substance_abuse.unwrap_or(false),
            internet_use: self.internet_use.unwrap_or_else(InternetUse::fill_value),
        }
    }
}

struct RawRecord {
    profile: RawProfile,
    messages: Vec<Message>,
}

/// Per-line context for error reporting.
struct Loc<'a> {
    path: &'a Path,
    line: usize,
}

impl Loc<'_> {
    fn parse(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn missing(&self, field: &str) -> Error {
        Error::MissingField {
            path: self.path.to_path_buf(),
            line: self.line,
            field: field.to_string(),
        }
    }

    fn unknown(&self, field: &str, value: &str) -> Error {
        Error::UnknownEnum {
            path: self.path.to_path_buf(),
            line: self.line,
            field: field.to_string(),
            value: value.to_string(),
        }
    }

    fn enum_field<T>(&self, field: &str, raw: Option<&str>, parse: fn(&str) -> Option<T>) -> Result<Option<T>> {
        match raw.map(str::trim) {
            None | Some("") => Ok(None),
            Some(s) => parse(s).map(Some).ok_or_else(|| self.unknown(field, s)),
        }
    }

    fn bool_field(&self, field: &str, raw: Option<&str>) -> Result<Option<bool>> {
        match raw.map(|s| s.trim().to_ascii_lowercase()) {
            None => Ok(None),
            Some(s) => match s.as_str() {
                "" => Ok(None),
                "true" | "yes" | "y" | "1" => Ok(Some(true)),
                "false" | "no" | "n" | "0" => Ok(Some(false)),
                _ => Err(self.unknown(field, &s)),
            },
        }
    }

    fn age_field(&self, raw: Option<&str>) -> Result<Option<u32>> {
        match raw.map(str::trim) {
            None | Some("") => Ok(None),
            Some(s) => s
                .parse::<u32>()
                .map(Some)
                .map_err(|_| self.parse(format!("age must be a non-negative integer, got {s:?}"))),
        }
    }

    fn message(&self, sender: Option<String>, ts: Option<&str>, text: Option<String>) -> Result<Message> {
        let sender_id = sender.ok_or_else(|| self.missing("sender_id"))?;
        let ts = ts.ok_or_else(|| self.missing("timestamp"))?;
        let timestamp =
            parse_timestamp(ts).ok_or_else(|| self.parse(format!("unparseable timestamp {ts:?}")))?;
        let text = text.ok_or_else(|| self.missing("text"))?;
        if text.trim().is_empty() {
            return Err(self.parse("message text is empty"));
        }
        Ok(Message {
            sender_id,
            timestamp,
            text,
        })
    }
}

fn json_scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        other => Some(other.to_string()),
    }
}

fn parse_json_record(loc: &Loc, line: &str) -> Result<RawRecord> {
    let value: Value = serde_json::from_str(line).map_err(|e| loc.parse(e.to_string()))?;
    let profile = value.get("profile").ok_or_else(|| loc.missing("profile"))?;
    if !profile.is_object() {
        return Err(loc.parse("`profile` must be an object"));
    }
    let field = |name: &str| profile.get(name).and_then(json_scalar);
    let user_id = field("user_id").ok_or_else(|| loc.missing("user_id"))?;
    let raw = raw_profile(loc, user_id, &field)?;

    let messages = value
        .get("messages")
        .ok_or_else(|| loc.missing("messages"))?
        .as_array()
        .ok_or_else(|| loc.parse("`messages` must be an array"))?
        .iter()
        .map(|m| {
            let get = |name: &str| m.get(name).and_then(json_scalar);
            loc.message(get("sender_id"), get("timestamp").as_deref(), get("text"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawRecord {
        profile: raw,
        messages,
    })
}

fn raw_profile(loc: &Loc, user_id: String, field: &dyn Fn(&str) -> Option<String>) -> Result<RawProfile> {
    Ok(RawProfile {
        user_id,
        age: loc.age_field(field("age").as_deref())?,
        gender: loc.enum_field("gender", field("gender").as_deref(), Gender::parse)?,
        race: loc.enum_field("race", field("race").as_deref(), Race::parse)?,
        ethnicity: loc.enum_field("ethnicity", field("ethnicity").as_deref(), Ethnicity::parse)?,
        depression: loc.bool_field("depression", field("depression").as_deref())?,
        anxiety: loc.bool_field("anxiety", field("anxiety").as_deref())?,
        self_esteem_issues: loc
            .bool_field("self_esteem_issues", field("self_esteem_issues").as_deref())?,
        bullying_history: loc.enum_field(
            "bullying_history",
            field("bullying_history").as_deref(),
            BullyingHistory::parse,
        )?,
        disciplinary_issues: loc
            .bool_field("disciplinary_issues", field("disciplinary_issues").as_deref())?,
        substance_abuse: loc.bool_field("substance_abuse", field("substance_abuse").as_deref())?,
        internet_use: loc.enum_field(
            "internet_use",
            field("internet_use").as_deref(),
            InternetUse::parse,
        )?,
    })
}

fn read_json_lines(path: &Path) -> Result<Vec<RawRecord>> {
    let file = fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let loc = Loc { path, line: i + 1 };
        out.push(parse_json_record(&loc, &line)?);
    }
    Ok(out)
}

fn read_csv_pair(dir: &Path) -> Result<Vec<RawRecord>> {
    let profiles_path = dir.join("profiles.csv");
    let messages_path = dir.join("messages.csv");

    let mut records: Vec<RawRecord> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();

    let mut rdr = csv::ReaderBuilder::new().from_path(&profiles_path)?;
    check_header(&profiles_path, rdr.headers()?, &PROFILE_COLUMNS)?;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let loc = Loc {
            path: &profiles_path,
            line,
        };
        let field = |name: &str| {
            PROFILE_COLUMNS
                .iter()
                .position(|c| *c == name)
                .and_then(|i| row.get(i))
                .filter(|s| !s.trim().is_empty())
                .map(str::to_string)
        };
        let user_id = field("user_id").ok_or_else(|| loc.missing("user_id"))?;
        if index.contains_key(&user_id) {
            return Err(loc.parse(format!("duplicate user_id {user_id:?}")));
        }
        let raw = raw_profile(&loc, user_id.clone(), &field)?;
        index.insert(user_id, records.len());
        records.push(RawRecord {
            profile: raw,
            messages: Vec::new(),
        });
    }

    let mut rdr = csv::ReaderBuilder::new().from_path(&messages_path)?;
    check_header(&messages_path, rdr.headers()?, &MESSAGE_COLUMNS)?;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let loc = Loc {
            path: &messages_path,
            line,
        };
        let get = |i: usize| row.get(i).map(str::to_string);
        let user_id = get(0)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| loc.missing("user_id"))?;
        let slot = *index
            .get(&user_id)
            .ok_or_else(|| loc.parse(format!("message for unknown user_id {user_id:?}")))?;
        let msg = loc.message(
            get(1).filter(|s| !s.is_empty()),
            row.get(2).filter(|s| !s.is_empty()),
            get(3),
        )?;
        records[slot].messages.push(msg);
    }
    Ok(records)
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got: Vec<&str> = got.iter().map(str::trim).collect();
    if got != want {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}, got {}", want.join(","), got.join(",")),
        });
    }
    Ok(())
}

/// Loads, validates and cleans a dataset.
///
/// Records missing more than half of their profile attributes are dropped
/// with a warning. Remaining gaps are filled: booleans with `false`, enums
/// with their none/other value, and age with the lower median of the ages
/// present in the kept records. Messages are sorted by timestamp (stable) and
/// exact duplicates (same sender, timestamp and text) are removed.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<UserRecord>> {
    let raw = match format {
        DatasetFormat::JsonLines => read_json_lines(path)?,
        DatasetFormat::CsvPair => read_csv_pair(path)?,
    };

    let kept: Vec<RawRecord> = raw
        .into_iter()
        .filter(|r| {
            let missing = r.profile.missing();
            let drop = 2 * missing > RawProfile::ATTRIBUTES;
            if drop {
                log::warn!(
                    "dropping user {:?}: {missing} of {} profile attributes missing",
                    r.profile.user_id,
                    RawProfile::ATTRIBUTES
                );
            }
            !drop
        })
        .collect();

    let mut ages: Vec<u32> = kept.iter().filter_map(|r| r.profile.age).collect();
    ages.sort_unstable();
    let median_age = if ages.is_empty() {
        0
    } else {
        ages[(ages.len() - 1) / 2]
    };

    Ok(kept
        .into_iter()
        .map(|r| {
            let mut messages = r.messages;
            messages.sort_by_key(|m| m.timestamp);
            let mut seen = HashSet::new();
            messages.retain(|m| seen.insert(m.clone()));
            UserRecord {
                profile: r.profile.fill(median_age),
                messages,
            }
        })
        .collect())
}

/// Serializes records in the canonical json-lines format.
pub fn to_json_lines(records: &[UserRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_json_lines(path: &Path, records: &[UserRecord]) -> Result<()> {
    fs::write(path, to_json_lines(records)?)?;
    Ok(())
}

/// Writes `profiles.csv` and `messages.csv` into `dir`.
pub fn write_csv_pair(dir: &Path, records: &[UserRecord]) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let profiles = dir.join("profiles.csv");
    let messages = dir.join("messages.csv");

    let mut w = csv::Writer::from_path(&profiles)?;
    w.write_record(PROFILE_COLUMNS)?;
    for r in records {
        let p = &r.profile;
        w.write_record([
            p.user_id.clone(),
            p.age.to_string(),
            p.gender.as_str().to_string(),
            p.race.as_str().to_string(),
            p.ethnicity.as_str().to_string(),
            p.depression.to_string(),
            p.anxiety.to_string(),
            p.self_esteem_issues.to_string(),
            p.bullying_history.as_str().to_string(),
            p.disciplinary_issues.to_string(),
            p.substance_abuse.to_string(),
            p.internet_use.as_str().to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&messages)?;
    w.write_record(MESSAGE_COLUMNS)?;
    for r in records {
        for m in &r.messages {
            w.write_record([
                r.profile.user_id.as_str(),
                m.sender_id.as_str(),
                format_timestamp(&m.timestamp).as_str(),
                m.text.as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok((profiles, messages))
}

/// Keeps messages timestamped within `[now - days_limit, now]`, then the
/// `message_cap` most recent of those, preserving the original order.
pub fn apply_window(record: &UserRecord, cfg: &WindowConfig, now: DateTime<Utc>) -> UserRecord {
    let start = now - Duration::days(i64::from(cfg.days_limit));
    let in_range: Vec<usize> = record
        .messages
        .iter()
        .enumerate()
        .filter(|(_, m)| m.timestamp >= start && m.timestamp <= now)
        .map(|(i, _)| i)
        .collect();

    let keep: HashSet<usize> = if in_range.len() > cfg.message_cap {
        let mut by_recency = in_range.clone();
        // newest first; ties broken towards the later position
        by_recency.sort_by(|&a, &b| {
            record.messages[b]
                .timestamp
                .cmp(&record.messages[a].timestamp)
                .then(b.cmp(&a))
        });
        by_recency.into_iter().take(cfg.message_cap).collect()
    } else {
        in_range.into_iter().collect()
    };

    UserRecord {
        profile: record.profile.clone(),
        messages: record
            .messages
            .iter()
            .enumerate()
            .filter(|(i, _)| keep.contains(i))
            .map(|(_, m)| m.clone())
            .collect(),
    }
}

/// Latest message timestamp across the dataset, used as the default window anchor.
pub fn latest_timestamp(records: &[UserRecord]) -> Option<DateTime<Utc>> {
    records
        .iter()
        .flat_map(|r| r.messages.iter().map(|m| m.timestamp))
        .max()
}
