use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SimError;

/// One PD-rate sample of the measured channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    /// Body pitch (rad).
    pub r: f64,
    pub rdot: f64,
    pub theta: Vec<f64>,
    pub thetadot: Vec<f64>,
    /// Motor currents (A).
    pub current: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    /// Time at which a task termination condition fired, if any.
    pub terminated_at: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn joint_count(&self) -> usize {
        self.records.first().map_or(0, |r| r.theta.len())
    }

    /// CSV with header `t,r,rdot,theta_0,thetadot_0,current_0,theta_1,...`.
    /// Floats use the shortest representation that round-trips exactly.
    pub fn to_csv(&self) -> String {
        let n = self.joint_count();
        let mut out = String::from("t,r,rdot");
        for i in 0..n {
            write!(out, ",theta_{i},thetadot_{i},current_{i}").unwrap();
        }
        out.push('\n');
        for rec in &self.records {
            write!(out, "{:?},{:?},{:?}", rec.t, rec.r, rec.rdot).unwrap();
            for i in 0..n {
                write!(
                    out,
                    ",{:?},{:?},{:?}",
                    rec.theta[i], rec.thetadot[i], rec.current[i]
                )
                .unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let bad = |m: String| SimError::Format(m);
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty trajectory file".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 3 || cols[..3] != ["t", "r", "rdot"] || (cols.len() - 3) % 3 != 0 {
            return Err(bad(format!("unexpected header: {header}")));
        }
        let n = (cols.len() - 3) / 3;
        for i in 0..n {
            let want = [
                format!("theta_{i}"),
                format!("thetadot_{i}"),
                format!("current_{i}"),
            ];
            if cols[3 + 3 * i..6 + 3 * i] != want {
                return Err(bad(format!("unexpected header: {header}")));
            }
        }
        let mut records = Vec::new();
        for (row, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("row {row}: {e}")))?;
            if vals.len() != cols.len() {
                return Err(bad(format!("row {row}: expected {} fields", cols.len())));
            }
            records.push(TrajectoryRecord {
                t: vals[0],
                r: vals[1],
                rdot: vals[2],
                theta: (0..n).map(|i| vals[3 + 3 * i]).collect(),
                thetadot: (0..n).map(|i| vals[4 + 3 * i]).collect(),
                current: (0..n).map(|i| vals[5 + 3 * i]).collect(),
            });
        }
        Ok(Self {
            records,
            terminated_at: None,
        })
    }
}
