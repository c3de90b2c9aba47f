//! Steal log as CSV: one row per attempt, stolen ids comma-joined, `-` for a
//! failed attempt.
//!
//! ```text
//! attempt,thief,victim,stolen_ids,outcome
//! 1,63,20,"205,206,207",success
//! 25,35,12,-,failed
//! ```

use std::io::{Read, Write};

use crate::rma::Rank;

use super::{StealOutcome, StealRecord, TaskId};

pub const STEAL_LOG_HEADER: [&str; 5] = ["attempt", "thief", "victim", "stolen_ids", "outcome"];

fn join_ids(ids: &[TaskId]) -> String {
    if ids.is_empty() {
        return "-".to_string();
    }
    ids.iter()
        .map(|id| id.0.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes records sorted by attempt number.
pub fn write_steal_log<W: Write>(out: W, records: &[StealRecord]) -> csv::Result<()> {
    let mut sorted: Vec<&StealRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.attempt);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STEAL_LOG_HEADER)?;
    for r in sorted {
        let outcome = match r.outcome() {
            StealOutcome::Success => "success",
            StealOutcome::Failed => "failed",
        };
        w.write_record([
            r.attempt.to_string(),
            r.thief.0.to_string(),
            r.victim.0.to_string(),
            join_ids(&r.stolen),
            outcome.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a steal log. The victim count observed under the lock is not part
/// of the format; it comes back as the stolen count.
pub fn read_steal_log<R: Read>(input: R) -> Result<Vec<StealRecord>, String> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().ne(STEAL_LOG_HEADER.iter().copied()) {
        return Err(format!("unexpected steal log header: {headers:?}"));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        let num = |i: usize| {
            field(i)
                .parse::<u64>()
                .map_err(|e| format!("column {}: {e}", STEAL_LOG_HEADER[i]))
        };
        let stolen = match field(3) {
            "-" => Vec::new(),
            ids => ids
                .split(',')
                .map(|s| s.parse::<u64>().map(TaskId).map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let record = StealRecord {
            attempt: num(0)?,
            thief: Rank(num(1)? as usize),
            victim: Rank(num(2)? as usize),
            observed_remaining: stolen.len() as u64,
            stolen,
        };
        let expected = match field(4) {
            "success" => StealOutcome::Success,
            "failed" => StealOutcome::Failed,
            other => return Err(format!("unknown outcome {other:?}")),
        };
        if record.outcome() != expected {
            return Err(format!(
                "attempt {}: outcome contradicts ids",
                record.attempt
            ));
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(attempt: u64, thief: usize, victim: usize, ids: &[u64]) -> StealRecord {
        StealRecord {
            attempt,
            thief: Rank(thief),
            victim: Rank(victim),
            stolen: ids.iter().copied().map(TaskId).collect(),
            observed_remaining: ids.len() as u64,
        }
    }

    #[test]
    fn layout_matches_table_rows() {
        let records = vec![
            rec(25, 35, 12, &[]),
            rec(1, 63, 20, &[205, 206, 207]),
            rec(18, 20, 21, &[387]),
        ];
        let mut buf = Vec::new();
        write_steal_log(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "attempt,thief,victim,stolen_ids,outcome\n\
             1,63,20,\"205,206,207\",success\n\
             18,20,21,387,success\n\
             25,35,12,-,failed\n"
        );
        let back = read_steal_log(text.as_bytes()).unwrap();
        assert_eq!(back[0], records[1]);
        assert_eq!(back[2].stolen, Vec::new());
    }

    #[test]
    fn rejects_contradictions() {
        let bad = "attempt,thief,victim,stolen_ids,outcome\n1,0,1,-,success\n";
        assert!(read_steal_log(bad.as_bytes()).is_err());
        let bad = "a,b,c,d,e\n";
        assert!(read_steal_log(bad.as_bytes()).is_err());
    }
}
