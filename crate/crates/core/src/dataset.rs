//! CSV answer files (`task,worker,answer`) and truth files (`task,truth`).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::inference::AnswerMatrix;

fn csv_error(line: u64, message: impl Into<String>) -> Error {
    Error::Csv { line, message: message.into() }
}

fn records<R: Read>(reader: R, header: &[&str]) -> Result<Vec<(u64, Vec<u64>)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let got = rdr.headers().map_err(|e| csv_error(1, e.to_string()))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(csv_error(1, format!("expected header `{}`", header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let values = rec
            .iter()
            .map(|f| f.parse::<u64>().map_err(|_| csv_error(line, format!("`{f}` is not a nonnegative integer"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != header.len() {
            return Err(csv_error(line, format!("expected {} fields", header.len())));
        }
        out.push((line, values));
    }
    Ok(out)
}

/// Reads answers. Task and worker ids must be dense from 0; `choices`
/// defaults to the largest answer plus one (at least 2).
pub fn read_answers<R: Read>(reader: R, choices: Option<u32>) -> Result<AnswerMatrix> {
    let rows = records(reader, &["task", "worker", "answer"])?;
    if rows.is_empty() {
        return Err(csv_error(1, "no answers"));
    }
    let to_u32 = |line: u64, v: u64| u32::try_from(v).map_err(|_| csv_error(line, format!("{v} is too large")));
    let mut entries = Vec::with_capacity(rows.len());
    for (line, v) in &rows {
        entries.push((to_u32(*line, v[0])? as usize, to_u32(*line, v[1])? as usize, to_u32(*line, v[2])?));
    }
    let n = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
    let m = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
    let max_answer = entries.iter().map(|e| e.2).max().unwrap_or(0);
    let l = match choices {
        Some(l) if l <= max_answer => {
            let line = rows.iter().zip(&entries).find(|(_, e)| e.2 >= l).map_or(0, |(r, _)| r.0);
            return Err(csv_error(line, format!("answer is not below {l} choices")));
        }
        Some(l) => l,
        None => (max_answer + 1).max(2),
    };
    let mut seen_task = vec![false; n];
    let mut seen_worker = vec![false; m];
    for &(i, j, _) in &entries {
        seen_task[i] = true;
        seen_worker[j] = true;
    }
    if let Some(i) = seen_task.iter().position(|s| !s) {
        return Err(Error::Answers(format!("task ids are not dense: {i} is missing")));
    }
    if let Some(j) = seen_worker.iter().position(|s| !s) {
        return Err(Error::Answers(format!("worker ids are not dense: {j} is missing")));
    }
    AnswerMatrix::new(n, m, l, entries)
}

/// Reads ground truth for tasks `0..n`, in any row order.
pub fn read_truth<R: Read>(reader: R, n: usize) -> Result<Vec<u32>> {
    let rows = records(reader, &["task", "truth"])?;
    let mut truth = vec![None; n];
    for (line, v) in rows {
        let i = v[0] as usize;
        if i >= n {
            return Err(csv_error(line, format!("task {i} is outside 0..{n}")));
        }
        let t = u32::try_from(v[1]).map_err(|_| csv_error(line, "truth value is too large"))?;
        if truth[i].replace(t).is_some() {
            return Err(csv_error(line, format!("task {i} appears twice")));
        }
    }
    truth
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| Error::Answers(format!("no truth for task {i}"))))
        .collect()
}

pub fn write_answers<W: Write>(writer: W, v: &AnswerMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["task", "worker", "answer"]).map_err(io)?;
    for (i, j, a) in v.entries() {
        w.write_record([i.to_string(), j.to_string(), a.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_truth<W: Write>(writer: W, truth: &[u32]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["task", "truth"]).map_err(io)?;
    for (i, t) in truth.iter().enumerate() {
        w.write_record([i.to_string(), t.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
