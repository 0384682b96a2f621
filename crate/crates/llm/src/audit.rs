//! Request/response audit trail, one JSON object per line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::transport::{ChatRequest, LlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub job: String,
    pub prompt_id: u8,
    pub attempt: u32,
    pub request: ChatRequest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Keeps every record in memory and, when backed by a file, appends it
/// there before the caller sees the response.
#[derive(Default)]
pub struct AuditLog {
    records: Vec<AuditRecord>,
    sink: Option<BufWriter<File>>,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        AuditLog::default()
    }

    pub fn to_file(path: &Path) -> Result<Self, LlmError> {
        let file = File::create(path).map_err(|e| LlmError::Io(e.to_string()))?;
        Ok(AuditLog {
            records: Vec::new(),
            sink: Some(BufWriter::new(file)),
        })
    }

    pub fn record(&mut self, rec: AuditRecord) -> Result<(), LlmError> {
        if let Some(sink) = &mut self.sink {
            let line = serde_json::to_string(&rec).map_err(|e| LlmError::Io(e.to_string()))?;
            writeln!(sink, "{line}")
                .and_then(|_| sink.flush())
                .map_err(|e| LlmError::Io(e.to_string()))?;
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }
}
