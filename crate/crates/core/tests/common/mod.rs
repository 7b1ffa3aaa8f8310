#![allow(dead_code)]

use std::path::PathBuf;

use lanebias::meta::read_summaries;
use lanebias::{
    analyze_event, parse_event, parse_olympic, EventAnalysis, EventDataset, EventSummary,
    LanePolicy, OlympicList, ScanOptions,
};

pub const YEARS: [i32; 11] = [
    1994, 1993, 1992, 1991, 1990, 1989, 1988, 1987, 1986, 1985, 1984,
];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn read(name: &str) -> String {
    let p = data_dir().join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn event(year: i32) -> EventDataset {
    parse_event(&read(&format!("swc{year}.csv"))).expect("fixture parses")
}

pub fn all_events() -> Vec<EventDataset> {
    YEARS.iter().map(|&y| event(y)).collect()
}

pub fn analyzed(year: i32) -> EventAnalysis {
    analyze_event(&event(year), LanePolicy::WarnDay1, ScanOptions::default()).expect("fit")
}

pub fn olympic(year: i32) -> OlympicList {
    parse_olympic(&read(&format!("oly{year}.csv"))).expect("olympic fixture parses")
}

pub fn men_table() -> Vec<EventSummary> {
    read_summaries(&read("men_summary.csv")).unwrap()
}

pub fn women_table() -> Vec<EventSummary> {
    read_summaries(&read("women_summary.csv")).unwrap()
}

/// Skaters removed as outliers in each championship, by fixture name.
pub fn declared_outliers(year: i32) -> Vec<&'static str> {
    match year {
        1994 => vec!["T.Hamamichi", "P.H.Koninckx", "P.Tahmindjis"],
        1992 => vec!["I.Dolp"],
        1991 => vec!["T.Kuroiwa", "I.Dolp"],
        1989 => vec!["R.Sighel"],
        1986 => vec!["G.Boucher"],
        1985 => vec!["K.-T.Bae", "E.Henriksen"],
        1984 => vec!["G.Kuiper"],
        _ => vec![],
    }
}

pub fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}
