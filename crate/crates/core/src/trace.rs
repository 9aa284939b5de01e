//! Per-iteration step records and their CSV form.
//!
//! A trace opens with one `INIT` record describing `x^(0)`. Record `t ≥ 1` holds the
//! step taken from `x^(t−1)` together with the gaps, objective value and active-set
//! size at `x^(t)`, so the last record always describes the returned iterate.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{FwError, Result};
use crate::iterate::StepKind;

pub const CSV_HEADER: &str = "iter,kind,gamma,gamma_max,fw_gap,away_gap,f_value,active_size";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(rename = "iter")]
    pub iteration: usize,
    pub kind: StepKind,
    pub gamma: f64,
    pub gamma_max: f64,
    pub fw_gap: f64,
    pub away_gap: f64,
    pub f_value: f64,
    pub active_size: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
    pub config_echo: serde_json::Value,
    /// Not written to CSV so that traces stay byte-reproducible.
    pub wall_time: f64,
}

impl RunTrace {
    pub fn new(config_echo: serde_json::Value) -> Self {
        Self {
            records: Vec::new(),
            config_echo,
            wall_time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records that describe an actual step (everything except `INIT`).
    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(|r| r.kind != StepKind::Init)
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.last().map(|r| r.fw_gap)
    }

    pub fn final_value(&self) -> Option<f64> {
        self.last().map(|r| r.f_value)
    }

    pub fn count(&self, kind: StepKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    pub fn tallies(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for k in StepKind::ALL {
            if k != StepKind::Init {
                out.insert(k.token().to_string(), self.count(k));
            }
        }
        out
    }

    /// Largest excess of `#drops` over `t/2 + slack` across all step prefixes.
    /// Non-positive means the drop-step bound holds everywhere.
    pub fn max_drop_excess(&self, slack: f64) -> f64 {
        let mut drops = 0usize;
        let mut worst = f64::NEG_INFINITY;
        for (i, r) in self.steps().enumerate() {
            if r.kind == StepKind::Drop {
                drops += 1;
            }
            let t = (i + 1) as f64;
            worst = worst.max(drops as f64 - t / 2.0 - slack);
        }
        if worst == f64::NEG_INFINITY {
            0.0
        } else {
            worst
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", serde_json::to_string(&self.config_echo)?)?;
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.iteration,
                r.kind.token(),
                r.gamma,
                r.gamma_max,
                r.fw_gap,
                r.away_gap,
                r.f_value,
                r.active_size
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Parses the format produced by [`RunTrace::write_csv`]. The config line is
    /// optional.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut config_echo = serde_json::Value::Null;
        let mut body = String::new();
        for line in r.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                if config_echo.is_null() {
                    config_echo = serde_json::from_str(rest.trim())?;
                }
                continue;
            }
            body.push_str(&line);
            body.push('\n');
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
            return Err(FwError::Parse(format!(
                "unexpected trace header {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut records = Vec::new();
        for row in rdr.deserialize() {
            records.push(row?);
        }
        Ok(Self {
            records,
            config_echo,
            wall_time: 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunTrace {
        let mut t = RunTrace::new(serde_json::json!({"variant": "AFW", "epsilon": 1e-10}));
        let rec = |iteration, kind, gamma, gamma_max, fw_gap, away_gap, f_value, active_size| StepRecord {
            iteration,
            kind,
            gamma,
            gamma_max,
            fw_gap,
            away_gap,
            f_value,
            active_size,
        };
        t.records.push(rec(0, StepKind::Init, 0.0, 0.0, 2.5, 0.0, 1.0 / 3.0, 1));
        t.records.push(rec(1, StepKind::Fw, 0.1, 1.0, 1e-300, 3.0e-17, -0.0, 2));
        t.records.push(rec(2, StepKind::Drop, 0.25, 0.25, 0.0, 0.0, -1.5, 1));
        t
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let t = sample();
        let s = t.to_csv_string();
        assert!(s.starts_with("# {"));
        assert_eq!(s.lines().nth(1).unwrap(), CSV_HEADER);
        assert!(s.contains(",DROP,"));
        let back = RunTrace::read_csv(s.as_bytes()).unwrap();
        assert_eq!(back.records, t.records);
        assert_eq!(back.config_echo, t.config_echo);
    }

    #[test]
    fn drop_excess_and_tallies() {
        let t = sample();
        assert!(t.max_drop_excess(0.0) <= 0.0);
        assert_eq!(t.tallies()["DROP"], 1);
        assert_eq!(t.steps().count(), 2);
        assert_eq!(t.final_gap(), Some(0.0));
    }

    #[test]
    fn rejects_bad_header() {
        let err = RunTrace::read_csv("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FwError::Parse(_)));
    }
}
