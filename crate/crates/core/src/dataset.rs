//! Two-day championship result files.
//!
//! One skater per line:
//!
//! ```text
//! #event,<venue>,<year>
//! name,lane1,t100_1,t500_1,status1,lane2,t100_2,t500_2,status2[,note]
//! ```
//!
//! Lanes are `i`/`o` (starting lane), times carry exactly two decimals or are
//! empty, and status is one of `ok,fell,dq,dnf,dns,wd`. Times are held as
//! integer centiseconds so that ingestion and re-serialization are exact.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A time in integer hundredths of a second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Centis(pub i64);

impl Centis {
    pub fn seconds(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Nearest centisecond count for a value in seconds.
    pub fn from_seconds_rounded(s: f64) -> Self {
        Centis((s * 100.0).round() as i64)
    }
}

impl fmt::Display for Centis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

impl FromStr for Centis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (whole, frac) = s
            .split_once('.')
            .ok_or_else(|| format!("time {s:?} has no decimal point"))?;
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("time {s:?} is not a decimal number"));
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) || frac.is_empty() {
            return Err(format!("time {s:?} is not a decimal number"));
        }
        if frac.len() > 2 {
            return Err(format!("time {s:?} is not a centisecond multiple"));
        }
        if frac.len() < 2 {
            return Err(format!(
                "time {s:?} must have exactly two fractional digits"
            ));
        }
        let whole: i64 = whole
            .parse()
            .map_err(|_| format!("time {s:?} out of range"))?;
        let frac: i64 = frac.parse().expect("two ascii digits");
        Ok(Centis(whole * 100 + frac))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lane {
    InnerStart,
    OuterStart,
}

impl Lane {
    pub fn opposite(self) -> Lane {
        match self {
            Lane::InnerStart => Lane::OuterStart,
            Lane::OuterStart => Lane::InnerStart,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Lane::InnerStart => "i",
            Lane::OuterStart => "o",
        }
    }

    pub fn parse_token(s: &str) -> Option<Lane> {
        match s {
            "i" => Some(Lane::InnerStart),
            "o" => Some(Lane::OuterStart),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunStatus {
    Ok,
    Fell,
    Disqualified,
    DidNotFinish,
    DidNotStart,
    Withdrawn,
}

impl RunStatus {
    pub fn token(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Fell => "fell",
            RunStatus::Disqualified => "dq",
            RunStatus::DidNotFinish => "dnf",
            RunStatus::DidNotStart => "dns",
            RunStatus::Withdrawn => "wd",
        }
    }

    pub fn parse_token(s: &str) -> Option<RunStatus> {
        Some(match s {
            "ok" => RunStatus::Ok,
            "fell" => RunStatus::Fell,
            "dq" => RunStatus::Disqualified,
            "dnf" => RunStatus::DidNotFinish,
            "dns" => RunStatus::DidNotStart,
            "wd" => RunStatus::Withdrawn,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub lane: Lane,
    pub t100: Option<Centis>,
    pub t500: Option<Centis>,
    pub status: RunStatus,
}

impl Run {
    pub fn ok(lane: Lane, t100: Centis, t500: Centis) -> Self {
        Run {
            lane,
            t100: Some(t100),
            t500: Some(t500),
            status: RunStatus::Ok,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        match self.status {
            RunStatus::Ok => match (self.t100, self.t500) {
                (Some(a), Some(b)) if b > a && a.0 > 0 => Ok(()),
                (Some(_), Some(_)) => Err("500 m time must exceed the positive 100 m time".into()),
                _ => Err("status ok requires both 100 m and 500 m times".into()),
            },
            _ if self.t500.is_some() => Err(format!(
                "status {} cannot carry a 500 m time",
                self.status.token()
            )),
            _ => Ok(()),
        }
    }

    pub fn is_usable(&self) -> bool {
        self.status == RunStatus::Ok && self.t100.is_some() && self.t500.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkaterPair {
    pub name: String,
    pub day1: Run,
    pub day2: Run,
    pub note: Option<String>,
    pub declared_outlier: bool,
}

/// `w = +1/2` for a day-1 outer start, `-1/2` for a day-1 inner start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaneIndicator {
    PlusHalf,
    MinusHalf,
}

impl LaneIndicator {
    pub fn from_day1(lane: Lane) -> Self {
        match lane {
            Lane::OuterStart => LaneIndicator::PlusHalf,
            Lane::InnerStart => LaneIndicator::MinusHalf,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            LaneIndicator::PlusHalf => 0.5,
            LaneIndicator::MinusHalf => -0.5,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            LaneIndicator::PlusHalf => LaneIndicator::MinusHalf,
            LaneIndicator::MinusHalf => LaneIndicator::PlusHalf,
        }
    }
}

/// Numeric view of one skater's two runs, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub w: f64,
}

impl Observation {
    /// Same skater with the lane draw reversed.
    pub fn relabeled(self) -> Self {
        Observation { w: -self.w, ..self }
    }
}

/// A pair with both runs usable, tagged with its lane indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsablePair {
    pub pair: SkaterPair,
    pub w: LaneIndicator,
}

impl UsablePair {
    pub fn name(&self) -> &str {
        &self.pair.name
    }

    pub fn observation(&self) -> Observation {
        let sec = |c: Option<Centis>| c.expect("usable pair has all times").seconds();
        Observation {
            x1: sec(self.pair.day1.t100),
            y1: sec(self.pair.day1.t500),
            x2: sec(self.pair.day2.t100),
            y2: sec(self.pair.day2.t500),
            w: self.w.value(),
        }
    }
}

pub fn observations(pairs: &[UsablePair]) -> Vec<Observation> {
    pairs.iter().map(UsablePair::observation).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LanePolicy {
    /// Drop skaters whose two starts were in the same lane.
    Strict,
    /// Keep them, with `w` taken from the day-1 lane.
    #[default]
    WarnDay1,
}

impl FromStr for LanePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "strict" => Ok(LanePolicy::Strict),
            "warn_day1" | "warn-day1" => Ok(LanePolicy::WarnDay1),
            _ => Err(format!(
                "unknown lane policy {s:?} (expected strict or warn_day1)"
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UsableSet {
    pub pairs: Vec<UsablePair>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDataset {
    pub venue: String,
    pub year: i32,
    pub skaters: Vec<SkaterPair>,
}

impl EventDataset {
    pub fn label(&self) -> String {
        format!("{} {}", self.year, self.venue)
    }

    /// Serialize back to the line format accepted by [`parse_event`].
    pub fn to_csv(&self) -> String {
        let mut out = format!("#event,{},{}\n", self.venue, self.year);
        let t = |c: Option<Centis>| c.map(|c| c.to_string()).unwrap_or_default();
        for s in &self.skaters {
            let mut line = format!(
                "{},{},{},{},{},{},{},{},{}",
                s.name,
                s.day1.lane.token(),
                t(s.day1.t100),
                t(s.day1.t500),
                s.day1.status.token(),
                s.day2.lane.token(),
                t(s.day2.t100),
                t(s.day2.t500),
                s.day2.status.token()
            );
            if let Some(note) = &s.note {
                line.push(',');
                line.push_str(note);
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Pairs with both runs usable, each with its lane indicator.
    pub fn usable_pairs(&self, policy: LanePolicy) -> UsableSet {
        let mut set = UsableSet::default();
        for s in &self.skaters {
            if !(s.day1.is_usable() && s.day2.is_usable()) {
                continue;
            }
            if s.day1.lane == s.day2.lane {
                match policy {
                    LanePolicy::Strict => {
                        set.warnings.push(format!(
                            "{}: same starting lane on both days; excluded",
                            s.name
                        ));
                        continue;
                    }
                    LanePolicy::WarnDay1 => set.warnings.push(format!(
                        "{}: same starting lane on both days; using day-1 lane",
                        s.name
                    )),
                }
            }
            set.pairs.push(UsablePair {
                pair: s.clone(),
                w: LaneIndicator::from_day1(s.day1.lane),
            });
        }
        set
    }

    /// Dataset holding exactly the given pairs, in order.
    pub fn from_pairs(venue: &str, year: i32, pairs: &[UsablePair]) -> Self {
        EventDataset {
            venue: venue.to_string(),
            year,
            skaters: pairs.iter().map(|p| p.pair.clone()).collect(),
        }
    }
}

fn parse_run(fields: &[&str], line: usize) -> Result<Run> {
    let err = |message: String| Error::Parse { line, message };
    let lane = Lane::parse_token(fields[0])
        .ok_or_else(|| err(format!("lane token {:?} is not i or o", fields[0])))?;
    let time = |s: &str| -> Result<Option<Centis>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse::<Centis>().map(Some).map_err(err)
        }
    };
    let status = RunStatus::parse_token(fields[3])
        .ok_or_else(|| err(format!("unknown status {:?}", fields[3])))?;
    let run = Run {
        lane,
        t100: time(fields[1])?,
        t500: time(fields[2])?,
        status,
    };
    run.check().map_err(err)?;
    Ok(run)
}

/// Parse one championship file.
pub fn parse_event(source: &str) -> Result<EventDataset> {
    let mut header: Option<(String, i32)> = None;
    let mut skaters = Vec::new();
    let mut seen = HashSet::new();

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        if header.is_none() {
            let fields: Vec<&str> = text.split(',').map(str::trim).collect();
            if fields.len() != 3 || fields[0] != "#event" {
                return Err(Error::Parse {
                    line,
                    message: "expected header `#event,<venue>,<year>`".into(),
                });
            }
            let year = fields[2].parse().map_err(|_| Error::Parse {
                line,
                message: format!("year {:?} is not an integer", fields[2]),
            })?;
            header = Some((fields[1].to_string(), year));
            continue;
        }
        if text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 9 && fields.len() != 10 {
            return Err(Error::Parse {
                line,
                message: format!("expected 9 or 10 fields, found {}", fields.len()),
            });
        }
        let name = fields[0];
        if name.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty skater name".into(),
            });
        }
        if !seen.insert(name.to_string()) {
            return Err(Error::DuplicateName {
                name: name.to_string(),
                line,
            });
        }
        let day1 = parse_run(&fields[1..5], line)?;
        let day2 = parse_run(&fields[5..9], line)?;
        let note = fields
            .get(9)
            .filter(|n| !n.is_empty())
            .map(|n| n.to_string());
        skaters.push(SkaterPair {
            name: name.to_string(),
            day1,
            day2,
            note,
            declared_outlier: false,
        });
    }

    let (venue, year) = header.ok_or(Error::Empty("no `#event` header found"))?;
    Ok(EventDataset {
        venue,
        year,
        skaters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(row: &str) -> Result<EventDataset> {
        parse_event(&format!("#event,Calgary,1994\n{row}\n"))
    }

    #[test]
    fn parses_table_row() {
        let ds = one("D.Jansen,o,9.82,35.96,ok,i,9.75,35.76,ok").unwrap();
        let s = &ds.skaters[0];
        assert_eq!(s.day1, Run::ok(Lane::OuterStart, Centis(982), Centis(3596)));
        assert_eq!(s.day2, Run::ok(Lane::InnerStart, Centis(975), Centis(3576)));
        assert_eq!(ds.label(), "1994 Calgary");
    }

    #[test]
    fn inner_day1_start_gives_minus_half() {
        let ds = one("R.Strom,i,9.99,37.07,ok,o,10.03,36.87,ok").unwrap();
        let set = ds.usable_pairs(LanePolicy::WarnDay1);
        assert_eq!(set.pairs[0].w, LaneIndicator::MinusHalf);
        assert_eq!(set.pairs[0].w.value(), -0.5);
    }

    #[test]
    fn bad_lane_token_names_line() {
        let err = parse_event("#event,X,1990\n\nA,x,9.82,35.96,ok,i,9.75,35.76,ok\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn rejects_duplicates_and_bad_times() {
        let dup = parse_event(
            "#event,X,1990\nA,o,9.82,35.96,ok,i,9.75,35.76,ok\nA,o,9.82,35.96,ok,i,9.75,35.76,ok\n",
        );
        assert!(matches!(dup, Err(Error::DuplicateName { line: 3, .. })));
        assert!(matches!(
            one("A,o,9.825,35.96,ok,i,9.75,35.76,ok"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(one("A,o,9.8,35.96,ok,i,9.75,35.76,ok").is_err());
        assert!(one("A,o,9.82,,ok,i,9.75,35.76,ok").is_err());
        assert!(one("A,o,9.82,35.96,bad,i,9.75,35.76,ok").is_err());
        assert!(one("A,o,9.82,35.96,fell,i,9.75,35.76,ok").is_err());
        assert!(one("A,o,9.82,35.96,ok,i,9.75,35.76").is_err());
    }

    #[test]
    fn partial_and_missing_runs() {
        let ds = parse_event(
            "#event,Calgary,1994\n\
             O.Kostromitin,o,9.90,37.01,ok,i,9.93,,fell\n\
             A.Golubyev,i,,,dq,o,9.92,38.20,ok\n\
             T.Hamamichi,i,10.93,37.50,ok,o,9.69,36.12,ok,t100 annotated f\n",
        )
        .unwrap();
        assert_eq!(ds.skaters[0].day2.t100, Some(Centis(993)));
        assert_eq!(ds.skaters[0].day2.status, RunStatus::Fell);
        assert_eq!(ds.skaters[1].day1.t100, None);
        assert_eq!(ds.skaters[2].note.as_deref(), Some("t100 annotated f"));
        let set = ds.usable_pairs(LanePolicy::Strict);
        assert_eq!(set.pairs.len(), 1);
        assert_eq!(set.pairs[0].name(), "T.Hamamichi");
    }

    #[test]
    fn everyone_fell_on_day_two() {
        let ds = parse_event(
            "#event,X,1990\nA,o,9.82,35.90,ok,i,9.75,,fell\nB,i,9.90,36.00,ok,o,,,dns\n",
        )
        .unwrap();
        assert!(ds.usable_pairs(LanePolicy::WarnDay1).pairs.is_empty());
    }

    #[test]
    fn same_lane_policy() {
        let ds = one("Yuk.Miyabe,o,10.04,37.30,ok,o,10.00,37.54,ok").unwrap();
        let warn = ds.usable_pairs(LanePolicy::WarnDay1);
        assert_eq!(warn.pairs.len(), 1);
        assert_eq!(warn.pairs[0].w, LaneIndicator::PlusHalf);
        assert_eq!(warn.warnings.len(), 1);
        let strict = ds.usable_pairs(LanePolicy::Strict);
        assert!(strict.pairs.is_empty());
        assert_eq!(strict.warnings.len(), 1);
    }

    #[test]
    fn centis_display_roundtrip() {
        for s in ["9.82", "10.00", "0.05", "42.47"] {
            assert_eq!(s.parse::<Centis>().unwrap().to_string(), s);
        }
        assert_eq!(Centis(-5).to_string(), "-0.05");
    }
}
