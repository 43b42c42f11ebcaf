//! External domain-knowledge-model (DKM) protocol.
//!
//! A DKM is a child process speaking newline-delimited single-line JSON on
//! stdin/stdout. Request: `{"id": <int>, "inputs": [<float>, ...]}`.
//! Response: `{"id": <int>, "outputs": [<float>, ...]}`. The probe request
//! has id 0 and empty inputs; its response additionally carries `"dim"`
//! (and may carry `"params"`, a declared parameter count).

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::GaenError;
use crate::Real;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Serialize, Deserialize)]
pub struct DkmRequest {
    pub id: u64,
    pub inputs: Vec<Real>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DkmResponse {
    pub id: u64,
    pub outputs: Vec<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<u64>,
}

/// Client side of the DKM protocol: owns the child process and serializes
/// requests over its stdio.
#[derive(Debug)]
pub struct DkmClient {
    command: String,
    child: Child,
    stdin: std::process::ChildStdin,
    lines: mpsc::Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
}

impl DkmClient {
    /// Launches `command` (whitespace-split into argv) and wires its stdio.
    pub fn launch(command: &str, timeout: Duration) -> Result<Self, GaenError> {
        let mut parts = command.split_whitespace();
        let program = parts.next().ok_or_else(|| GaenError::BadDescriptor {
            descriptor: command.to_string(),
        })?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| GaenError::Spawn {
                command: command.to_string(),
                message: e.to_string(),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            command: command.to_string(),
            child,
            stdin,
            lines: rx,
            timeout,
            next_id: 1,
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn round_trip(&mut self, request: &DkmRequest) -> Result<DkmResponse, GaenError> {
        let mut line = serde_json::to_string(request).expect("serializable request");
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| GaenError::Pipe {
                command: self.command.clone(),
                message: e.to_string(),
            })?;
        let line = self
            .lines
            .recv_timeout(self.timeout)
            .map_err(|_| GaenError::Timeout {
                command: self.command.clone(),
                id: request.id,
            })?
            .map_err(|e| GaenError::Pipe {
                command: self.command.clone(),
                message: e.to_string(),
            })?;
        let response: DkmResponse =
            serde_json::from_str(&line).map_err(|_| GaenError::Malformed {
                command: self.command.clone(),
                line,
            })?;
        if response.id != request.id {
            return Err(GaenError::IdMismatch {
                command: self.command.clone(),
                expected: request.id,
                got: response.id,
            });
        }
        Ok(response)
    }

    /// Probe request: returns (declared dimension, declared parameter count).
    pub fn probe(&mut self) -> Result<(usize, Option<u64>), GaenError> {
        let response = self.round_trip(&DkmRequest {
            id: 0,
            inputs: Vec::new(),
        })?;
        let dim = response.dim.ok_or_else(|| GaenError::Malformed {
            command: self.command.clone(),
            line: "probe response without dim".to_string(),
        })?;
        Ok((dim, response.params))
    }

    pub fn predict(&mut self, inputs: &[Real]) -> Result<Vec<Real>, GaenError> {
        let id = self.next_id;
        self.next_id += 1;
        let response = self.round_trip(&DkmRequest {
            id,
            inputs: inputs.to_vec(),
        })?;
        Ok(response.outputs)
    }
}

impl Drop for DkmClient {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Server-side loop for implementing a DKM executable: reads requests from
/// stdin, answers probes with `dim`/`params`, and delegates everything else
/// to `predict`. Runs until stdin closes.
pub fn serve_stdio<F>(dim: usize, params: u64, mut predict: F) -> std::io::Result<()>
where
    F: FnMut(&[Real]) -> Vec<Real>,
{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: DkmRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let response = if request.id == 0 && request.inputs.is_empty() {
            DkmResponse {
                id: 0,
                outputs: Vec::new(),
                dim: Some(dim),
                params: Some(params),
            }
        } else {
            DkmResponse {
                id: request.id,
                outputs: predict(&request.inputs),
                dim: None,
                params: None,
            }
        };
        let mut line = serde_json::to_string(&response).expect("serializable response");
        line.push('\n');
        out.write_all(line.as_bytes())?;
        out.flush()?;
    }
    Ok(())
}
