//! Single-race result lists re-ranked as if every lane draw had been reversed.
//!
//! An inner starter finishes in the outer lane, which carries the disadvantage
//! `d`; swapping the draw therefore adds `d` to inner starters and subtracts it
//! from outer starters. All arithmetic is in integer centiseconds.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{Centis, Lane, RunStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OlympicEntry {
    pub name: String,
    pub lane: Lane,
    pub time: Option<Centis>,
    pub status: RunStatus,
}

impl OlympicEntry {
    pub fn finished(&self) -> bool {
        self.status == RunStatus::Ok && self.time.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OlympicList {
    pub venue: String,
    pub year: i32,
    pub entries: Vec<OlympicEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntry {
    /// `None` for non-finishers.
    pub rank: Option<usize>,
    pub name: String,
    pub time: Option<Centis>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeculativeList {
    pub venue: String,
    pub year: i32,
    pub d_used: Centis,
    pub entries: Vec<RankedEntry>,
}

/// Parse `#olympic,<venue>,<year>` followed by `name,lane,time,status` rows.
pub fn parse_olympic(source: &str) -> Result<OlympicList> {
    let mut header = None;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let f: Vec<&str> = text.split(',').map(str::trim).collect();
        let err = |message: String| Error::Parse { line, message };
        if header.is_none() {
            if f.len() != 3 || f[0] != "#olympic" {
                return Err(err("expected header `#olympic,<venue>,<year>`".into()));
            }
            let year = f[2]
                .parse()
                .map_err(|_| err(format!("year {:?} is not an integer", f[2])))?;
            header = Some((f[1].to_string(), year));
            continue;
        }
        if text.starts_with('#') {
            continue;
        }
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let lane = Lane::parse_token(f[1])
            .ok_or_else(|| err(format!("lane token {:?} is not i or o", f[1])))?;
        let time = if f[2].is_empty() {
            None
        } else {
            Some(f[2].parse::<Centis>().map_err(err)?)
        };
        let status = RunStatus::parse_token(f[3])
            .ok_or_else(|| err(format!("unknown status {:?}", f[3])))?;
        if status == RunStatus::Ok && time.is_none() {
            return Err(err("status ok requires a time".into()));
        }
        if !seen.insert(f[0].to_string()) {
            return Err(Error::DuplicateName {
                name: f[0].to_string(),
                line,
            });
        }
        entries.push(OlympicEntry {
            name: f[0].to_string(),
            lane,
            time,
            status,
        });
    }
    let (venue, year) = header.ok_or(Error::Empty("no `#olympic` header found"))?;
    Ok(OlympicList {
        venue,
        year,
        entries,
    })
}

impl OlympicList {
    pub fn to_csv(&self) -> String {
        let mut out = format!("#olympic,{},{}\n", self.venue, self.year);
        for e in &self.entries {
            let t = e.time.map(|t| t.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.name,
                e.lane.token(),
                t,
                e.status.token()
            ));
        }
        out
    }

    /// The list as actually ranked.
    pub fn ranked(&self) -> Vec<RankedEntry> {
        rank(&self.entries)
    }
}

/// Competition ranking of finishers by time, stable within ties; non-finishers
/// follow unranked in input order.
pub fn rank(entries: &[OlympicEntry]) -> Vec<RankedEntry> {
    let mut fin: Vec<&OlympicEntry> = entries.iter().filter(|e| e.finished()).collect();
    fin.sort_by_key(|e| e.time);
    let mut out = Vec::with_capacity(entries.len());
    let mut prev: Option<(Centis, usize)> = None;
    for (pos, e) in fin.iter().enumerate() {
        let t = e.time.expect("finisher has a time");
        let r = match prev {
            Some((pt, pr)) if pt == t => pr,
            _ => pos + 1,
        };
        prev = Some((t, r));
        out.push(RankedEntry {
            rank: Some(r),
            name: e.name.clone(),
            time: Some(t),
        });
    }
    out.extend(
        entries
            .iter()
            .filter(|e| !e.finished())
            .map(|e| RankedEntry {
                rank: None,
                name: e.name.clone(),
                time: None,
            }),
    );
    out
}

pub fn d_to_centis(d: f64) -> Centis {
    Centis::from_seconds_rounded(d)
}

/// Each finisher's time under the reversed draw, with its lane flipped.
pub fn swap_draw(list: &OlympicList, d: Centis) -> OlympicList {
    let entries = list
        .entries
        .iter()
        .map(|e| OlympicEntry {
            time: e.time.map(|t| match e.lane {
                Lane::InnerStart => Centis(t.0 + d.0),
                Lane::OuterStart => Centis(t.0 - d.0),
            }),
            lane: e.lane.opposite(),
            ..e.clone()
        })
        .collect();
    OlympicList {
        venue: list.venue.clone(),
        year: list.year,
        entries,
    }
}

/// Ranked list under the reversed draw; `d` is rounded to whole centiseconds.
pub fn speculate(list: &OlympicList, d: f64) -> SpeculativeList {
    let dc = d_to_centis(d);
    SpeculativeList {
        venue: list.venue.clone(),
        year: list.year,
        d_used: dc,
        entries: rank(&swap_draw(list, dc).entries),
    }
}

/// Swap the draw twice; the result equals the input exactly.
pub fn round_trip(list: &OlympicList, d: f64) -> OlympicList {
    let dc = d_to_centis(d);
    swap_draw(&swap_draw(list, dc), dc)
}

impl SpeculativeList {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "#speculative,{},{},{}\n",
            self.venue, self.year, self.d_used
        );
        for e in &self.entries {
            match (e.rank, e.time) {
                (Some(r), Some(t)) => out.push_str(&format!("{r},{},{t}\n", e.name)),
                _ => out.push_str(&format!(",{},---\n", e.name)),
            }
        }
        out
    }
}

/// Parse the CSV produced by [`SpeculativeList::to_csv`].
pub fn parse_speculative(source: &str) -> Result<SpeculativeList> {
    let mut lines = source
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(Error::Empty("speculative list"))?;
    let h: Vec<&str> = head.trim().split(',').collect();
    let bad_header = || Error::Parse {
        line: 1,
        message: "expected header `#speculative,<venue>,<year>,<d>`".into(),
    };
    if h.len() != 4 || h[0] != "#speculative" {
        return Err(bad_header());
    }
    let mut list = SpeculativeList {
        venue: h[1].to_string(),
        year: h[2].parse().map_err(|_| bad_header())?,
        d_used: h[3].parse().map_err(|_| bad_header())?,
        entries: Vec::new(),
    };
    for (idx, raw) in lines {
        let line = idx + 1;
        let f: Vec<&str> = raw.trim().split(',').collect();
        let err = |message: String| Error::Parse { line, message };
        if f.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", f.len())));
        }
        let entry = if f[2] == "---" {
            RankedEntry {
                rank: None,
                name: f[1].to_string(),
                time: None,
            }
        } else {
            RankedEntry {
                rank: Some(f[0].parse().map_err(|_| err(format!("rank {:?}", f[0])))?),
                name: f[1].to_string(),
                time: Some(f[2].parse::<Centis>().map_err(err)?),
            }
        };
        list.entries.push(entry);
    }
    Ok(list)
}

fn text_cell(entry: Option<&RankedEntry>, prev_rank: Option<usize>, name_width: usize) -> String {
    let Some(e) = entry else {
        return " ".repeat(name_width + 11);
    };
    let rank = match e.rank {
        Some(r) if Some(r) != prev_rank => format!("{r:>3}."),
        _ => "    ".to_string(),
    };
    let time = e
        .time
        .map(|t| t.to_string())
        .unwrap_or_else(|| "---".into());
    format!("{rank} {:<name_width$} {time:>5}", e.name)
}

/// Real and speculative lists side by side. Tied entries after the first show no rank.
pub fn render_text(real: &OlympicList, spec: &SpeculativeList) -> String {
    let left = real.ranked();
    let right = &spec.entries;
    let width = left
        .iter()
        .chain(right.iter())
        .map(|e| e.name.chars().count())
        .max()
        .unwrap_or(4);
    let mut out = format!(
        "{} {}: real results | reversed draw, d = {}\n",
        real.venue, real.year, spec.d_used
    );
    let rows = left.len().max(right.len());
    for i in 0..rows {
        let lp = i
            .checked_sub(1)
            .and_then(|j| left.get(j))
            .and_then(|e| e.rank);
        let rp = i
            .checked_sub(1)
            .and_then(|j| right.get(j))
            .and_then(|e| e.rank);
        let l = text_cell(left.get(i), lp, width);
        let r = text_cell(right.get(i), rp, width);
        out.push_str(format!("{l}   {r}").trim_end());
        out.push('\n');
    }
    out
}
