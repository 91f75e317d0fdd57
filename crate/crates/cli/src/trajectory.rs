//! `trajectory.csv`: one row per control step.
//!
//! Columns are `k, t, q_0.., u_cbf_0.., u_lc_0.., h_0.., hprime, e`. Floats
//! carry 17 significant digits so a file round-trips bit for bit; a filter
//! that was not evaluated is written as `nan`.

use std::io::Write;
use std::path::Path;

use cbflcp_core::simulate::TrajectoryLog;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Malformed(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn header(dof: usize, constraints: usize) -> Vec<String> {
    let mut cols = vec!["k".to_string(), "t".to_string()];
    for prefix in ["q", "u_cbf", "u_lc"] {
        cols.extend((0..dof).map(|i| format!("{prefix}_{i}")));
    }
    cols.extend((0..constraints).map(|i| format!("h_{i}")));
    cols.push("hprime".into());
    cols.push("e".into());
    cols
}

pub fn write_csv<W: Write>(
    out: &mut W,
    log: &TrajectoryLog,
    dof: usize,
    constraints: usize,
) -> std::io::Result<()> {
    writeln!(out, "{}", header(dof, constraints).join(","))?;
    let missing = vec![f64::NAN; dof];
    for r in &log.records {
        let mut fields = vec![r.k.to_string(), fmt(r.t)];
        fields.extend(r.q.iter().map(|v| fmt(*v)));
        fields.extend(r.u_cbf.as_ref().unwrap_or(&missing).iter().map(|v| fmt(*v)));
        fields.extend(r.u_lc.as_ref().unwrap_or(&missing).iter().map(|v| fmt(*v)));
        fields.extend(r.h.iter().map(|v| fmt(*v)));
        fields.push(fmt(r.hprime));
        fields.push(fmt(r.e.unwrap_or(f64::NAN)));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_file(
    path: &Path,
    log: &TrajectoryLog,
    dof: usize,
    constraints: usize,
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(&mut f, log, dof, constraints)?;
    f.flush()
}

/// The columns of a trajectory file needed for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub t: Vec<f64>,
    /// `q[step][joint]`
    pub q: Vec<Vec<f64>>,
    pub hprime: Vec<f64>,
    pub e: Vec<f64>,
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<TrajectoryTable, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| CsvError::Malformed(e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CsvError::MissingColumn(name.to_string()))
    };
    find("k")?;
    let t_col = find("t")?;
    let hp_col = find("hprime")?;
    let e_col = find("e")?;
    let mut q_cols = Vec::new();
    while let Some(pos) = headers
        .iter()
        .position(|h| h == format!("q_{}", q_cols.len()))
    {
        q_cols.push(pos);
    }
    if q_cols.is_empty() {
        return Err(CsvError::MissingColumn("q_0".into()));
    }

    let mut table = TrajectoryTable {
        t: vec![],
        q: vec![],
        hprime: vec![],
        e: vec![],
    };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CsvError::Malformed(e.to_string()))?;
        let get = |col: usize| -> Result<f64, CsvError> {
            let raw = rec.get(col).ok_or_else(|| {
                CsvError::Malformed(format!(
                    "row {} is missing field {}",
                    line + 2,
                    &headers[col]
                ))
            })?;
            raw.trim().parse::<f64>().map_err(|_| {
                CsvError::Malformed(format!(
                    "row {}, column `{}`: cannot parse `{raw}`",
                    line + 2,
                    &headers[col]
                ))
            })
        };
        table.t.push(get(t_col)?);
        table
            .q
            .push(q_cols.iter().map(|&c| get(c)).collect::<Result<_, _>>()?);
        table.hprime.push(get(hp_col)?);
        table.e.push(get(e_col)?);
    }
    Ok(table)
}

pub fn read_file(path: &Path) -> Result<TrajectoryTable, CsvError> {
    read_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cbflcp_core::simulate::{StepRecord, Termination};

    fn log() -> TrajectoryLog {
        TrajectoryLog {
            records: vec![StepRecord {
                k: 0,
                t: 0.0,
                q: vec![0.1, 1.0 / 3.0],
                u_des: vec![0.0, 0.0],
                u_cbf: Some(vec![1e-300, -2.5]),
                u_lc: None,
                u: vec![1e-300, -2.5],
                h: vec![0.1, std::f64::consts::PI],
                hprime: 0.09,
                e: None,
            }],
            final_q: vec![0.1, 0.2],
            final_hprime: None,
            termination: Termination::MaxSteps,
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            header(2, 1).join(","),
            "k,t,q_0,q_1,u_cbf_0,u_cbf_1,u_lc_0,u_lc_1,h_0,hprime,e"
        );
    }

    #[test]
    fn values_round_trip_exactly() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &log(), 2, 2).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let table = read_csv(buf.as_slice()).unwrap();
        assert_eq!(table.q[0], vec![0.1, 1.0 / 3.0]);
        assert_eq!(table.hprime[0], 0.09);
        assert!(table.e[0].is_nan());
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_csv("k,t,q_0,e\n0,0,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CsvError::MissingColumn(c) if c == "hprime"));
    }

    #[test]
    fn garbage_value_is_malformed() {
        let err = read_csv("k,t,q_0,hprime,e\n0,zero,0,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CsvError::Malformed(_)));
    }
}
