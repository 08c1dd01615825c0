use std::fmt::Write as _;
use std::io::{self, Write};

use crate::model::{ContainerId, SimTime, WorkerId};

/// One line of the append-only event log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub time: SimTime,
    pub kind: &'static str,
    pub container: Option<ContainerId>,
    pub worker: Option<WorkerId>,
    pub detail: String,
}

impl LogRecord {
    /// `time,kind,container,worker,detail`; empty fields for missing ids.
    pub fn line(&self) -> String {
        let mut s = String::new();
        write!(s, "{:.6},{},", self.time, self.kind).unwrap();
        if let Some(c) = self.container {
            write!(s, "{c}").unwrap();
        }
        s.push(',');
        if let Some(w) = self.worker {
            write!(s, "{w}").unwrap();
        }
        s.push(',');
        s.push_str(&self.detail);
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    records: Vec<LogRecord>,
}

impl EventLog {
    pub const HEADER: &'static str = "time,kind,container,worker,detail";

    pub fn push(
        &mut self,
        time: SimTime,
        kind: &'static str,
        container: Option<ContainerId>,
        worker: Option<WorkerId>,
        detail: impl Into<String>,
    ) {
        self.records.push(LogRecord { time, kind, container, worker, detail: detail.into() });
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a LogRecord> + 'a {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn write_to(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "{}", Self::HEADER)?;
        for r in &self.records {
            writeln!(out, "{}", r.line())?;
        }
        Ok(())
    }
}
