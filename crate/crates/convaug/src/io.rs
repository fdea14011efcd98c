//! Plain-text artifacts: run traces as CSV (schema v1: `t`, state
//! components, innovation norm, distance, feasibility flag), full runs as
//! JSON, training logs and closed-loop traces as CSV. Floats are written with
//! the shortest round-trip representation, so identical runs produce
//! byte-identical files.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::AugmentedRun;
use crate::learned::EpochLog;
use crate::mpc::ClosedLoopRun;
use crate::scalar::{sc, Scalar};

pub const RUN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
}

fn fmt<T: Scalar>(x: T) -> String {
    format!("{}", x.to_f64().expect("scalar convertible"))
}

/// CSV image of an augmented run. The innovation column holds `|v_t|` for
/// `t < steps` and `0` on the final row.
pub fn run_to_csv<T: Scalar>(run: &AugmentedRun<T>) -> String {
    let n = run.states.first().map_or(0, |s| s.len());
    let mut out = String::new();
    out.push('t');
    for i in 0..n {
        out.push_str(&format!(",s{i}"));
    }
    out.push_str(",v_norm,dist,feasible\n");
    for (t, state) in run.states.iter().enumerate() {
        out.push_str(&t.to_string());
        for i in 0..n {
            out.push(',');
            out.push_str(&fmt(state[i]));
        }
        let v_norm = if t < run.innovations.len() {
            run.innovations[t].norm()
        } else {
            T::zero()
        };
        out.push(',');
        out.push_str(&fmt(v_norm));
        out.push(',');
        out.push_str(&fmt(run.distances[t]));
        out.push(',');
        out.push_str(if run.feasible[t] { "1" } else { "0" });
        out.push('\n');
    }
    out
}

/// Parsed columns of a run CSV.
#[derive(Debug, Clone)]
pub struct RunCsv {
    pub states: Vec<Vec<f64>>,
    pub innovation_norms: Vec<f64>,
    pub distances: Vec<f64>,
    pub feasible: Vec<bool>,
}

pub fn run_from_csv(text: &str) -> Result<RunCsv, IoError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::Csv {
        line: 0,
        message: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "t" {
        return Err(IoError::Csv {
            line: 1,
            message: "expected header t,s*,v_norm,dist,feasible".into(),
        });
    }
    let n = cols.len() - 4;
    let mut out = RunCsv {
        states: Vec::new(),
        innovation_norms: Vec::new(),
        distances: Vec::new(),
        feasible: Vec::new(),
    };
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(IoError::Csv {
                line: idx + 1,
                message: format!("expected {} fields, got {}", cols.len(), fields.len()),
            });
        }
        let parse = |s: &str, line: usize| -> Result<f64, IoError> {
            s.parse::<f64>().map_err(|e| IoError::Csv {
                line,
                message: e.to_string(),
            })
        };
        let mut state = Vec::with_capacity(n);
        for f in &fields[1..1 + n] {
            state.push(parse(f, idx + 1)?);
        }
        out.states.push(state);
        out.innovation_norms.push(parse(fields[1 + n], idx + 1)?);
        out.distances.push(parse(fields[2 + n], idx + 1)?);
        out.feasible.push(fields[3 + n].trim() == "1");
    }
    Ok(out)
}

/// JSON image of a run: configuration echo plus the full trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunJson {
    pub schema_version: u32,
    pub problem_id: String,
    pub baseline_id: String,
    pub config: serde_json::Value,
    pub states: Vec<Vec<f64>>,
    pub innovations: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
    pub feasible: Vec<bool>,
    pub correction_fallbacks: usize,
}

pub fn run_to_json<T: Scalar>(run: &AugmentedRun<T>, config: serde_json::Value) -> RunJson {
    let to_rows = |vs: &[crate::scalar::Vector<T>]| -> Vec<Vec<f64>> {
        vs.iter()
            .map(|v| v.iter().map(|x| x.to_f64().expect("scalar convertible")).collect())
            .collect()
    };
    RunJson {
        schema_version: RUN_SCHEMA_VERSION,
        problem_id: run.problem_id.clone(),
        baseline_id: run.baseline_id.clone(),
        config,
        states: to_rows(&run.states),
        innovations: to_rows(&run.innovations),
        distances: run
            .distances
            .iter()
            .map(|d| d.to_f64().expect("scalar convertible"))
            .collect(),
        feasible: run.feasible.clone(),
        correction_fallbacks: run.correction_fallbacks,
    }
}

/// `epoch,mean_cost,best_cost,envelope_constant`.
pub fn training_log_to_csv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch,mean_cost,best_cost,envelope_constant\n");
    for e in log {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.epoch, e.mean_cost, e.best_cost, e.envelope_constant
        ));
    }
    out
}

/// `step,x*,u*,stage_cost` rows for one closed loop.
pub fn closed_loop_to_csv<T: Scalar>(run: &ClosedLoopRun<T>) -> String {
    let n = run.states.first().map_or(0, |s| s.len());
    let m = run.inputs.first().map_or(0, |u| u.len());
    let mut out = String::from("step");
    for i in 0..n {
        out.push_str(&format!(",x{i}"));
    }
    for i in 0..m {
        out.push_str(&format!(",u{i}"));
    }
    out.push_str(",stage_cost\n");
    for t in 0..run.inputs.len() {
        out.push_str(&t.to_string());
        for i in 0..n {
            out.push(',');
            out.push_str(&fmt(run.states[t][i]));
        }
        for i in 0..m {
            out.push(',');
            out.push_str(&fmt(run.inputs[t][i]));
        }
        out.push(',');
        out.push_str(&fmt(run.stage_costs[t]));
        out.push('\n');
    }
    out
}

/// Distance trace reconstructed in the active scalar type.
pub fn distances_from_csv<T: Scalar>(csv: &RunCsv) -> Vec<T> {
    csv.distances.iter().map(|&d| sc(d)).collect()
}
