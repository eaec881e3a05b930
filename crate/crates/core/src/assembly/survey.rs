//! Likert survey aggregation: per-rating totals, per-participant winners,
//! and per-method means and medians.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub participant: String,
    pub movie: String,
    pub method: String,
    pub appropriateness: u8,
    pub attractiveness: u8,
    pub interest: u8,
}

impl Rating {
    pub fn total(&self) -> u32 {
        total_score(self.appropriateness, self.attractiveness, self.interest)
    }

    fn check(&self) -> Result<(), String> {
        for (name, v) in [
            ("appropriateness", self.appropriateness),
            ("attractiveness", self.attractiveness),
            ("interest", self.interest),
        ] {
            if !(LIKERT_MIN..=LIKERT_MAX).contains(&v) {
                return Err(format!("{name} {v} outside {LIKERT_MIN}..={LIKERT_MAX}"));
            }
        }
        Ok(())
    }
}

pub fn total_score(appropriateness: u8, attractiveness: u8, interest: u8) -> u32 {
    appropriateness as u32 + attractiveness as u32 + interest as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line in the input, header included.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub appropriateness: f64,
    pub attractiveness: f64,
    pub interest: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub ratings: usize,
    pub mean: Metrics,
    pub median: Metrics,
    /// Participant/movie pairs where this method had the top total.
    pub wins: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    pub by_method: BTreeMap<String, MethodStats>,
    /// movie, then method
    pub by_movie: BTreeMap<String, BTreeMap<String, MethodStats>>,
    pub rejected: Vec<RejectedRow>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        (s[m - 1] + s[m]) / 2.0
    }
}

fn stats(rows: &[&Rating]) -> MethodStats {
    let col = |f: fn(&Rating) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
    let cols = [
        col(|r| r.appropriateness as f64),
        col(|r| r.attractiveness as f64),
        col(|r| r.interest as f64),
        col(|r| r.total() as f64),
    ];
    let metrics = |f: fn(&[f64]) -> f64| Metrics {
        appropriateness: f(&cols[0]),
        attractiveness: f(&cols[1]),
        interest: f(&cols[2]),
        total: f(&cols[3]),
    };
    MethodStats {
        ratings: rows.len(),
        mean: metrics(mean),
        median: metrics(median),
        wins: 0,
    }
}

/// Aggregates valid ratings. Every method tied for the top total of a
/// participant/movie pair is credited with a win.
pub fn aggregate_survey(ratings: &[Rating]) -> SurveySummary {
    let mut by_method: BTreeMap<&str, Vec<&Rating>> = BTreeMap::new();
    let mut by_movie: BTreeMap<&str, BTreeMap<&str, Vec<&Rating>>> = BTreeMap::new();
    let mut groups: BTreeMap<(&str, &str), Vec<&Rating>> = BTreeMap::new();
    for r in ratings {
        by_method.entry(&r.method).or_default().push(r);
        by_movie.entry(&r.movie).or_default().entry(&r.method).or_default().push(r);
        groups.entry((&r.participant, &r.movie)).or_default().push(r);
    }
    let mut out = SurveySummary {
        by_method: by_method.iter().map(|(m, rs)| (m.to_string(), stats(rs))).collect(),
        by_movie: by_movie
            .iter()
            .map(|(movie, ms)| (movie.to_string(), ms.iter().map(|(m, rs)| (m.to_string(), stats(rs))).collect()))
            .collect(),
        rejected: Vec::new(),
    };
    for ((_, movie), rs) in groups {
        let best = rs.iter().map(|r| r.total()).max().unwrap_or(0);
        let mut winners: Vec<&str> = rs.iter().filter(|r| r.total() == best).map(|r| r.method.as_str()).collect();
        winners.sort_unstable();
        winners.dedup();
        for w in winners {
            if let Some(s) = out.by_method.get_mut(w) {
                s.wins += 1;
            }
            if let Some(s) = out.by_movie.get_mut(movie).and_then(|m| m.get_mut(w)) {
                s.wins += 1;
            }
        }
    }
    out
}

/// Reads `participant,movie,method,appropriateness,attractiveness,interest`
/// rows. Malformed or out-of-range rows are returned as rejections.
pub fn parse_ratings(text: &str) -> Result<(Vec<Rating>, Vec<RejectedRow>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::InvalidInput(format!("ratings header: {e}")))?.clone();
    for col in ["participant", "movie", "method", "appropriateness", "attractiveness", "interest"] {
        if !headers.iter().any(|h| h.eq_ignore_ascii_case(col)) {
            return Err(Error::InvalidInput(format!("ratings file lacks a `{col}` column")));
        }
    }
    let mut ok = Vec::new();
    let mut rejected = Vec::new();
    for rec in reader.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                rejected.push(RejectedRow { line, reason: e.to_string() });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: std::result::Result<Rating, _> = rec.deserialize(Some(&headers));
        match row.map_err(|e| e.to_string()).and_then(|r| r.check().map(|_| r)) {
            Ok(r) => ok.push(r),
            Err(reason) => rejected.push(RejectedRow { line, reason }),
        }
    }
    Ok((ok, rejected))
}

pub fn survey_file(path: &Path) -> Result<SurveySummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (rows, rejected) = parse_ratings(&text)?;
    let mut summary = aggregate_survey(&rows);
    summary.rejected = rejected;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: &str, movie: &str, method: &str, a: u8, b: u8, c: u8) -> Rating {
        Rating {
            participant: p.into(),
            movie: movie.into(),
            method: method.into(),
            appropriateness: a,
            attractiveness: b,
            interest: c,
        }
    }

    #[test]
    fn totals() {
        assert_eq!(total_score(3, 3, 2), 8);
        assert_eq!(total_score(1, 1, 1), 3);
    }

    #[test]
    fn ties_credit_every_method() {
        let s = aggregate_survey(&[r("p1", "m", "ours", 3, 3, 2), r("p1", "m", "other", 2, 3, 3), r("p1", "m", "base", 1, 1, 1)]);
        assert_eq!(s.by_method["ours"].wins, 1);
        assert_eq!(s.by_method["other"].wins, 1);
        assert_eq!(s.by_method["base"].wins, 0);
        assert_eq!(s.by_movie["m"]["ours"].wins, 1);
    }

    #[test]
    fn medians_of_even_and_odd_counts() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn out_of_range_rows_are_rejected() {
        let text = "participant,movie,method,appropriateness,attractiveness,interest\n\
                    p1,m,ours,3,3,2\np2,m,ours,8,3,2\np3,m,ours,x,1,1\n";
        let (ok, bad) = parse_ratings(text).unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!(ok[0].total(), 8);
        assert_eq!(bad.len(), 2);
        assert_eq!(bad[0].line, 3);
        assert!(bad[0].reason.contains("appropriateness"));
    }

    #[test]
    fn missing_column_is_an_error() {
        assert!(parse_ratings("participant,movie,method\n").is_err());
    }
}
