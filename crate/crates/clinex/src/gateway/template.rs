//! `%SLOT%` prompt templates. Every placeholder in a template body must be
//! declared, and rendering demands a binding for each declared slot.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {template:?}: no binding for slot {slot:?}")]
    MissingBinding { template: String, slot: String },
    #[error("template {template:?}: binding {name:?} does not match any declared slot")]
    UnknownBinding { template: String, name: String },
    #[error("template {template:?}: body references undeclared slot {slot:?}")]
    UndeclaredSlot { template: String, slot: String },
}

/// A named prompt template with `%NAME%` slots.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
    slots: Vec<String>,
}

impl PromptTemplate {
    /// Declare a template. Fails if the body contains a `%NAME%` pattern not
    /// in `slots`.
    pub fn new(
        name: impl Into<String>,
        body: impl Into<String>,
        slots: &[&str],
    ) -> Result<PromptTemplate, TemplateError> {
        let name = name.into();
        let body = body.into();
        let slots: Vec<String> = slots.iter().map(|s| s.to_string()).collect();
        for found in find_slots(&body) {
            if !slots.iter().any(|s| s == &found) {
                return Err(TemplateError::UndeclaredSlot { template: name, slot: found });
            }
        }
        Ok(PromptTemplate { name, body, slots })
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    /// Substitute every slot. Bindings must cover all slots exactly; no
    /// `%NAME%` pattern for a declared slot survives in the output.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
        for name in bindings.keys() {
            if !self.slots.iter().any(|s| s == name) {
                return Err(TemplateError::UnknownBinding {
                    template: self.name.clone(),
                    name: name.clone(),
                });
            }
        }
        let mut out = self.body.clone();
        for slot in &self.slots {
            let value = bindings.get(slot).ok_or_else(|| TemplateError::MissingBinding {
                template: self.name.clone(),
                slot: slot.clone(),
            })?;
            out = out.replace(&format!("%{slot}%"), value);
        }
        Ok(out)
    }
}

/// Scan for `%NAME%` patterns where NAME is uppercase alphanumeric or '_'.
fn find_slots(body: &str) -> Vec<String> {
    let bytes = body.as_bytes();
    let mut found = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_uppercase() || bytes[j].is_ascii_digit() || bytes[j] == b'_') {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'%' && j > i + 1 {
                found.push(body[i + 1..j].to_string());
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    found
}

/// Convenience for building binding maps.
pub fn bindings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}
