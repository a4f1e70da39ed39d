//! Deterministic scripted backend for tests and golden replays. Responses
//! are served either FIFO from a queue or looked up by the exact request
//! hash; identical request sequences always yield identical responses.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatBackend, ChatRequest, ChatResponse, Finish, GatewayError};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
enum ScriptFile {
    Queue { responses: Vec<String> },
    Map { responses: BTreeMap<String, String> },
}

enum Script {
    Queue(Mutex<std::collections::VecDeque<String>>),
    Map(BTreeMap<String, String>),
}

/// A backend that replays scripted responses.
pub struct ScriptedBackend {
    script: Script,
    label: String,
}

impl ScriptedBackend {
    /// FIFO queue of responses; each request consumes one.
    pub fn from_queue(responses: Vec<String>) -> ScriptedBackend {
        ScriptedBackend {
            script: Script::Queue(Mutex::new(responses.into())),
            label: "scripted:queue".into(),
        }
    }

    /// Responses keyed by `request_key`.
    pub fn from_map(responses: BTreeMap<String, String>) -> ScriptedBackend {
        ScriptedBackend { script: Script::Map(responses), label: "scripted:map".into() }
    }

    /// Load a script file: `{"mode":"queue","responses":[...]}` or
    /// `{"mode":"map","responses":{"<request key>":"<text>"}}`.
    pub fn from_file(path: &Path) -> Result<ScriptedBackend, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let file: ScriptFile = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let mut backend = match file {
            ScriptFile::Queue { responses } => ScriptedBackend::from_queue(responses),
            ScriptFile::Map { responses } => ScriptedBackend::from_map(responses),
        };
        backend.label = format!("scripted:{}", path.display());
        Ok(backend)
    }

    /// The lookup key for map-mode scripts: a SHA-256 over the exact system
    /// and user text.
    pub fn request_key(request: &ChatRequest) -> String {
        let mut hasher = Sha256::new();
        hasher.update(request.system.as_deref().unwrap_or(""));
        hasher.update([0u8]);
        hasher.update(&request.user);
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn remaining(&self) -> Option<usize> {
        match &self.script {
            Script::Queue(q) => Some(q.lock().expect("queue lock").len()),
            Script::Map(_) => None,
        }
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let text = match &self.script {
            Script::Queue(queue) => queue
                .lock()
                .expect("queue lock")
                .pop_front()
                .ok_or_else(|| GatewayError::Backend("scripted queue exhausted".into()))?,
            Script::Map(map) => {
                let key = Self::request_key(request);
                map.get(&key)
                    .cloned()
                    .ok_or_else(|| GatewayError::Backend(format!("no scripted response for request key {key}")))?
            }
        };
        Ok(ChatResponse { text, finish: Finish::Stop, latency_ms: 0 })
    }

    fn identity(&self) -> String {
        self.label.clone()
    }
}

/// Serialize a queue script file (used when authoring fixtures).
pub fn render_queue_script(responses: &[String]) -> String {
    let file = ScriptFile::Queue { responses: responses.to_vec() };
    let mut out = serde_json::to_string_pretty(&file).expect("script serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_serves_fifo() {
        let backend = ScriptedBackend::from_queue(vec!["[]".into(), "[1]".into()]);
        let req = ChatRequest::new("p");
        assert_eq!(backend.complete(&req).unwrap().text, "[]");
        assert_eq!(backend.complete(&req).unwrap().text, "[1]");
    }

    #[test]
    fn queued_empty_array_response() {
        let backend = ScriptedBackend::from_queue(vec!["[]".into()]);
        let resp = backend.complete(&ChatRequest::new("p")).unwrap();
        assert_eq!(resp.text, "[]");
        assert_eq!(resp.finish, Finish::Stop);
    }

    #[test]
    fn exhausted_queue_is_a_backend_error() {
        let backend = ScriptedBackend::from_queue(vec![]);
        let err = backend.complete(&ChatRequest::new("p")).unwrap_err();
        assert!(matches!(err, GatewayError::Backend(_)));
    }

    #[test]
    fn map_lookup_by_request_hash() {
        let req = ChatRequest::new("what are the orders?");
        let key = ScriptedBackend::request_key(&req);
        let mut map = BTreeMap::new();
        map.insert(key, "[]".to_string());
        let backend = ScriptedBackend::from_map(map);
        assert_eq!(backend.complete(&req).unwrap().text, "[]");
        assert!(backend.complete(&ChatRequest::new("different")).is_err());
    }

    #[test]
    fn identical_sequences_yield_identical_responses() {
        let run = || {
            let backend = ScriptedBackend::from_queue(vec!["a".into(), "b".into(), "c".into()]);
            let req = ChatRequest::new("p");
            (0..3).map(|_| backend.complete(&req).unwrap().text).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn script_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.json");
        std::fs::write(&path, render_queue_script(&["[]".to_string()])).unwrap();
        let backend = ScriptedBackend::from_file(&path).unwrap();
        assert_eq!(backend.complete(&ChatRequest::new("p")).unwrap().text, "[]");
    }
}
