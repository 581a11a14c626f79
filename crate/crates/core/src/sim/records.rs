use super::run::CoincidenceRecord;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, Read, Write};
use thiserror::Error;

/// Run metadata carried in `#` comment lines ahead of the CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RecordHeader {
    pub seed: Option<u64>,
    pub gates_per_record: Option<u64>,
    pub record_interval: Option<f64>,
}

#[derive(Debug, Error)]
pub enum RecordParseError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct Row {
    t_s: f64,
    phi_a_deg: f64,
    phi_b_deg: f64,
    bin_a_deg: f64,
    bin_b_deg: f64,
    singles1: u64,
    singles2: u64,
    coinc: u64,
    acc_est: f64,
    discarded: u8,
}

pub fn write_records_csv<W: Write>(
    records: &[CoincidenceRecord],
    header: &RecordHeader,
    mut out: W,
) -> std::io::Result<()> {
    let mut meta = Vec::new();
    if let Some(s) = header.seed {
        meta.push(format!("seed={s}"));
    }
    if let Some(g) = header.gates_per_record {
        meta.push(format!("gates_per_record={g}"));
    }
    if let Some(t) = header.record_interval {
        meta.push(format!("record_interval_s={t}"));
    }
    if !meta.is_empty() {
        writeln!(out, "# {}", meta.join(" "))?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(Row {
            t_s: r.timestamp,
            phi_a_deg: r.phi_a_est.to_degrees(),
            phi_b_deg: r.phi_b_est.to_degrees(),
            bin_a_deg: r.bin_size_a.to_degrees(),
            bin_b_deg: r.bin_size_b.to_degrees(),
            singles1: r.singles_1,
            singles2: r.singles_2,
            coinc: r.coincidences,
            acc_est: r.accidental_estimate,
            discarded: r.discarded as u8,
        })
        .map_err(std::io::Error::other)?;
    }
    if records.is_empty() {
        w.write_record([
            "t_s", "phi_a_deg", "phi_b_deg", "bin_a_deg", "bin_b_deg", "singles1", "singles2",
            "coinc", "acc_est", "discarded",
        ])
        .map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn read_records_csv<R: Read>(
    input: R,
) -> Result<(Vec<CoincidenceRecord>, RecordHeader), RecordParseError> {
    let mut reader = BufReader::new(input);
    let mut header = RecordHeader::default();
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        for (key, value) in line.trim_start_matches('#').split_whitespace().filter_map(|kv| kv.split_once('=')) {
            match key {
                "seed" => header.seed = value.parse().ok(),
                "gates_per_record" => header.gates_per_record = value.parse().ok(),
                "record_interval_s" => header.record_interval = value.parse().ok(),
                _ => {}
            }
        }
    }
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let malformed = |e: csv::Error| RecordParseError::Malformed {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let headers = csv.headers().map_err(malformed)?.clone();
    let mut records = Vec::new();
    for raw in csv.records() {
        let raw = raw.map_err(malformed)?;
        let line = raw.position().map_or(0, |p| p.line());
        let row: Row = raw.deserialize(Some(&headers)).map_err(|e| RecordParseError::Malformed {
            line,
            message: e.to_string(),
        })?;
        let bad = |message: &str| RecordParseError::Malformed {
            line,
            message: message.into(),
        };
        let phases = [row.phi_a_deg, row.phi_b_deg, row.bin_a_deg, row.bin_b_deg];
        if phases.iter().any(|p| !p.is_finite()) || row.bin_a_deg <= 0.0 || row.bin_b_deg <= 0.0 {
            return Err(bad("phases must be finite and bin sizes positive"));
        }
        if row.coinc > row.singles1.min(row.singles2) {
            return Err(bad("coincidences exceed singles"));
        }
        if !(row.acc_est >= 0.0) || row.discarded > 1 {
            return Err(bad("acc_est must be >= 0 and discarded 0 or 1"));
        }
        records.push(CoincidenceRecord {
            timestamp: row.t_s,
            phi_a_est: row.phi_a_deg.to_radians(),
            phi_b_est: row.phi_b_deg.to_radians(),
            bin_size_a: row.bin_a_deg.to_radians(),
            bin_size_b: row.bin_b_deg.to_radians(),
            singles_1: row.singles1,
            singles_2: row.singles2,
            coincidences: row.coinc,
            accidental_estimate: row.acc_est,
            discarded: row.discarded == 1,
        });
    }
    Ok((records, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec() -> CoincidenceRecord {
        CoincidenceRecord {
            timestamp: 0.2,
            phi_a_est: 0.5,
            phi_b_est: 1.5,
            bin_size_a: 3f64.to_radians(),
            bin_size_b: 45f64.to_radians(),
            singles_1: 10,
            singles_2: 12,
            coincidences: 2,
            accidental_estimate: 0.25,
            discarded: true,
        }
    }

    #[test]
    fn round_trip() {
        let header = RecordHeader {
            seed: Some(7),
            gates_per_record: Some(20_000_000),
            record_interval: Some(0.2),
        };
        let mut buf = Vec::new();
        write_records_csv(&[rec(), rec()], &header, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=7"));
        assert!(text.contains("t_s,phi_a_deg,phi_b_deg,bin_a_deg,bin_b_deg,singles1,singles2,coinc,acc_est,discarded"));
        let (back, h) = read_records_csv(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(back.len(), 2);
        assert!((back[0].phi_a_est - 0.5).abs() < 1e-12);
        assert!(back[0].discarded);
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "t_s,phi_a_deg,phi_b_deg,bin_a_deg,bin_b_deg,singles1,singles2,coinc,acc_est,discarded\n\
                    0.2,1,2,3,3,5,5,1,0.1,0\n\
                    0.4,1,2,3,3,5,5,9,0.1,0\n";
        match read_records_csv(text.as_bytes()) {
            Err(RecordParseError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
