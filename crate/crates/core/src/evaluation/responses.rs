use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds a subject has to answer.
pub const TIME_LIMIT: f64 = 10.0;
/// Largest accepted client-measured elapsed time of a non-timed-out answer.
pub const ELAPSED_CAP: f64 = 10.5;
pub const RESPONSE_SCHEMA_VERSION: u32 = 1;

/// Answer of the localisation task: two clicks on the edge, or the reject
/// box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickResponse {
    pub stimulus_id: String,
    /// In-image clicks as integer pixel coordinates, origin top-left.
    #[serde(default)]
    pub clicks: Vec<(i64, i64)>,
    /// The subject clicked the reject box.
    #[serde(default)]
    pub reject: bool,
    pub elapsed: f64,
    #[serde(default)]
    pub timed_out: bool,
}

impl ClickResponse {
    pub fn validate(&self) -> Result<()> {
        if self.clicks.len() > 2 {
            return Err(Error::InvalidParameter(format!("{} clicks, at most 2 allowed", self.clicks.len())));
        }
        check_elapsed(self.elapsed, self.timed_out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Timeout,
}

impl Answer {
    /// Timeouts count as "no".
    pub fn is_yes(self) -> bool {
        self == Answer::Yes
    }
}

/// Answer of the presence task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YesNoResponse {
    pub stimulus_id: String,
    pub answer: Answer,
    pub elapsed: f64,
}

impl YesNoResponse {
    pub fn validate(&self) -> Result<()> {
        check_elapsed(self.elapsed, self.answer == Answer::Timeout)
    }
}

fn check_elapsed(elapsed: f64, timed_out: bool) -> Result<()> {
    if !(elapsed >= 0.0) {
        return Err(Error::InvalidParameter(format!("elapsed time {elapsed} is negative")));
    }
    if !timed_out && elapsed > ELAPSED_CAP {
        return Err(Error::InvalidParameter(format!(
            "elapsed time {elapsed} s exceeds the {ELAPSED_CAP} s cap"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    Click(ClickResponse),
    YesNo(YesNoResponse),
    /// A click outside both the image and the reject box; the trial goes on.
    Dismissed {
        stimulus_id: String,
        x: i64,
        y: i64,
        elapsed: f64,
    },
}

impl Response {
    pub fn stimulus_id(&self) -> &str {
        match self {
            Response::Click(c) => &c.stimulus_id,
            Response::YesNo(y) => &y.stimulus_id,
            Response::Dismissed { stimulus_id, .. } => stimulus_id,
        }
    }

    /// Whether the response ends its trial.
    pub fn is_final(&self) -> bool {
        !matches!(self, Response::Dismissed { .. })
    }
}

/// One line of the append-only response log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub schema_version: u32,
    pub session_id: String,
    pub subject: String,
    pub nonce: String,
    /// Position of the record in its session.
    pub seq: u64,
    /// Unix time in milliseconds at which the server stored the record.
    pub received_at_ms: u64,
    pub response: Response,
}

/// Reads a line-delimited response log, skipping blank lines.
pub fn read_response_log(path: &Path) -> Result<Vec<ResponseRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ResponseRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Schema(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if record.schema_version != RESPONSE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "{}:{}: response schema version {}",
                path.display(),
                i + 1,
                record.schema_version
            )));
        }
        out.push(record);
    }
    Ok(out)
}
