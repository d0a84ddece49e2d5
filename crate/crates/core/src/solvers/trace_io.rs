//! JSONL trace files: one [`StepRecord`] per line, with the run parameters in
//! a `<path>.meta.json` sidecar.

use super::{IterateTrace, RunSpec, SolverError, StepRecord};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub problem: String,
    pub spec: RunSpec,
    pub x0: Vec<f64>,
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Incremental JSONL writer; the sidecar is written on [`TraceWriter::finish`].
pub struct TraceWriter {
    out: BufWriter<File>,
    meta_path: PathBuf,
    meta: TraceMeta,
}

impl TraceWriter {
    pub fn create(path: &Path, meta: TraceMeta) -> Result<Self, SolverError> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
            meta_path: meta_path(path),
            meta,
        })
    }

    pub fn push(&mut self, record: &StepRecord) -> Result<(), SolverError> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), SolverError> {
        self.out.flush()?;
        std::fs::write(&self.meta_path, serde_json::to_vec_pretty(&self.meta)?)?;
        Ok(())
    }
}

pub fn write_trace_jsonl(trace: &IterateTrace, problem: &str, path: &Path) -> Result<(), SolverError> {
    let meta = TraceMeta {
        problem: problem.to_string(),
        spec: trace.spec,
        x0: trace.records.first().map(|r| r.x.clone()).unwrap_or_default(),
    };
    let mut w = TraceWriter::create(path, meta)?;
    for r in &trace.records {
        w.push(r)?;
    }
    w.finish()
}

/// Reads a trace and its sidecar.
pub fn read_trace_jsonl(path: &Path) -> Result<(TraceMeta, IterateTrace), SolverError> {
    let meta: TraceMeta = serde_json::from_slice(&std::fs::read(meta_path(path))?)?;
    let mut records = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str::<StepRecord>(&line)?);
    }
    let trace = IterateTrace {
        spec: meta.spec,
        records,
    };
    Ok((meta, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::problem_by_label;
    use crate::solvers::{run, MappingKind, NoiseModel, StepSchedule};

    #[test]
    fn round_trip_is_lossless() {
        let z1 = problem_by_label("Z1").unwrap();
        let spec = RunSpec {
            mapping: MappingKind::Subgradient,
            schedule: StepSchedule::new(0.1, 0.7),
            noise: NoiseModel::UniformBall { r: 0.1 },
            steps: 50,
            seed: 9,
            trial: 2,
        };
        let trace = run(&z1, spec, vec![0.01, 0.02]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write_trace_jsonl(&trace, "Z1", &path).unwrap();
        let (meta, back) = read_trace_jsonl(&path).unwrap();
        assert_eq!(meta.problem, "Z1");
        assert_eq!(back, trace);
    }
}
