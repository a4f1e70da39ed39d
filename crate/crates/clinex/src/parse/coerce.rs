//! Coercion of parsed JSON documents into typed orders and observation
//! candidates. Dropped records come back as diagnostics, never silently.

use serde_json::Value;

use crate::corpus::{FlowsheetSchema, MedicalOrder, OrderType};

use super::{CoercionError, Diagnostic};

fn value_kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Coerce a parsed document into medical orders. A lone object is treated as
/// a singleton array. Order types go through the synonym table; records with
/// no usable description or type are dropped and counted.
pub fn coerce_orders(doc: &Value) -> Result<(Vec<MedicalOrder>, Vec<Diagnostic>), CoercionError> {
    let items: Vec<&Value> = match doc {
        Value::Array(items) => items.iter().collect(),
        Value::Object(_) => vec![doc],
        other => return Err(CoercionError::BadRoot(value_kind(other))),
    };

    let mut orders = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, item) in items.iter().enumerate() {
        let Value::Object(map) = item else {
            diagnostics.push(Diagnostic::new(
                "coerce_orders",
                format!("record {idx}: expected an object, found {}", value_kind(item)),
            ));
            continue;
        };

        let description = map
            .get("description")
            .and_then(Value::as_str)
            .map(str::trim)
            .unwrap_or("");
        if description.is_empty() {
            diagnostics.push(Diagnostic::new(
                "coerce_orders",
                format!("record {idx}: missing or empty description, dropped"),
            ));
            continue;
        }

        let type_label = map
            .get("order_type")
            .or_else(|| map.get("type"))
            .and_then(Value::as_str)
            .unwrap_or("");
        let Some(order_type) = OrderType::from_label(type_label) else {
            diagnostics.push(Diagnostic::new(
                "coerce_orders",
                format!("record {idx}: unknown order_type {type_label:?}, dropped"),
            ));
            continue;
        };

        let reason = map
            .get("reason")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .map(str::to_string);

        let mut provenance = Vec::new();
        if let Some(prov) = map.get("provenance") {
            match prov {
                Value::Array(entries) => {
                    for entry in entries {
                        match coerce_line_no(entry) {
                            Some(n) => provenance.push(n),
                            None => diagnostics.push(Diagnostic::new(
                                "coerce_orders",
                                format!("record {idx}: non-positive or non-integer provenance entry {entry}"),
                            )),
                        }
                    }
                }
                Value::Null => {}
                other => diagnostics.push(Diagnostic::new(
                    "coerce_orders",
                    format!("record {idx}: provenance should be an array, found {}", value_kind(other)),
                )),
            }
        }

        let mut order = MedicalOrder {
            description: description.to_string(),
            order_type,
            reason,
            provenance,
        };
        order.normalize();
        orders.push(order);
    }
    Ok((orders, diagnostics))
}

fn coerce_line_no(entry: &Value) -> Option<u32> {
    match entry {
        Value::Number(n) => {
            let n = n.as_i64()?;
            (n > 0 && n <= u32::MAX as i64).then_some(n as u32)
        }
        Value::String(s) => {
            let n: i64 = s.trim().parse().ok()?;
            (n > 0 && n <= u32::MAX as i64).then_some(n as u32)
        }
        _ => None,
    }
}

/// An uncanonicalized observation candidate: the schema row it targets, the
/// value text to canonicalize, and the source span.
#[derive(Debug, Clone, PartialEq)]
pub struct RawObservation {
    pub row_key: String,
    pub value_text: String,
    pub raw_span: String,
}

/// Coerce a parsed `{row_key: value}` document into observation candidates.
/// Values may be scalars or `{value, span}` objects; keys are matched
/// case-insensitively against the schema, unknown keys are dropped and
/// counted, and canonicalization happens downstream.
pub fn coerce_observations(
    doc: &Value,
    schema: &FlowsheetSchema,
) -> Result<(Vec<RawObservation>, Vec<Diagnostic>), CoercionError> {
    let Value::Object(map) = doc else {
        return Err(CoercionError::NotAnObject(value_kind(doc)));
    };

    let mut raw = Vec::new();
    let mut diagnostics = Vec::new();
    for (key, value) in map {
        let Some(row) = schema.row_ci(key) else {
            diagnostics.push(Diagnostic::new(
                "coerce_observations",
                format!("unknown row key {key:?}, dropped"),
            ));
            continue;
        };
        let (value_text, span) = match value {
            Value::Null => {
                diagnostics.push(Diagnostic::new(
                    "coerce_observations",
                    format!("row {key:?}: null value, dropped"),
                ));
                continue;
            }
            Value::String(s) => (s.clone(), s.clone()),
            Value::Number(n) => (n.to_string(), n.to_string()),
            Value::Bool(b) => (b.to_string(), b.to_string()),
            Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|item| match item {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                let joined = parts.join(", ");
                (joined.clone(), joined)
            }
            Value::Object(inner) => {
                let Some(v) = inner.get("value") else {
                    diagnostics.push(Diagnostic::new(
                        "coerce_observations",
                        format!("row {key:?}: object value without a \"value\" field, dropped"),
                    ));
                    continue;
                };
                let value_text = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                let span = inner
                    .get("span")
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .unwrap_or_else(|| value_text.clone());
                (value_text, span)
            }
        };
        if value_text.trim().is_empty() {
            diagnostics.push(Diagnostic::new(
                "coerce_observations",
                format!("row {key:?}: empty value, dropped"),
            ));
            continue;
        }
        raw.push(RawObservation {
            row_key: row.key.clone(),
            value_text,
            raw_span: span,
        });
    }
    Ok((raw, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RowDataType, SchemaRow};
    use crate::parse::extract_json_payload;
    use serde_json::json;

    fn demo_schema() -> FlowsheetSchema {
        FlowsheetSchema {
            hospital_id: "demo".into(),
            rows: vec![
                SchemaRow {
                    key: "Pulse rate".into(),
                    data_type: RowDataType::Numeric,
                    allowed_values: vec![],
                    phrasings: None,
                },
                SchemaRow {
                    key: "Urine colour".into(),
                    data_type: RowDataType::Picklist,
                    allowed_values: vec!["pale yellow".into(), "dark yellow".into(), "amber".into()],
                    phrasings: None,
                },
                SchemaRow {
                    key: "Pain present".into(),
                    data_type: RowDataType::Boolean,
                    allowed_values: vec![],
                    phrasings: None,
                },
            ],
        }
    }

    #[test]
    fn order_type_is_case_folded() {
        let doc = json!([{"description": "CT of Chest", "order_type": "Imaging"}]);
        let (orders, diags) = coerce_orders(&doc).unwrap();
        assert_eq!(orders[0].order_type, OrderType::Imaging);
        assert!(diags.is_empty());
    }

    // Synonym-table lookup: "laboratory" is one of the lab labels.
    #[test]
    fn laboratory_maps_to_lab() {
        let doc = json!([{"description": "CBC", "order_type": "laboratory"}]);
        let (orders, _) = coerce_orders(&doc).unwrap();
        assert_eq!(orders[0].order_type, OrderType::Lab);
    }

    #[test]
    fn standard_order_object_coerces_fully() {
        let doc = json!([{
            "description": "CT of Chest",
            "order_type": "imaging",
            "reason": "infection",
            "provenance": [45, 46]
        }]);
        let (orders, diags) = coerce_orders(&doc).unwrap();
        assert_eq!(
            orders[0],
            MedicalOrder {
                description: "CT of Chest".into(),
                order_type: OrderType::Imaging,
                reason: Some("infection".into()),
                provenance: vec![45, 46],
            }
        );
        assert!(diags.is_empty());
    }

    #[test]
    fn lone_object_is_wrapped() {
        let doc = json!({"description": "CBC", "order_type": "lab"});
        let (orders, _) = coerce_orders(&doc).unwrap();
        assert_eq!(orders.len(), 1);
    }

    #[test]
    fn missing_description_drops_record_with_diagnostic() {
        let doc = json!([{"order_type": "lab"}, {"description": "CBC", "order_type": "lab"}]);
        let (orders, diags) = coerce_orders(&doc).unwrap();
        assert_eq!(orders.len(), 1);
        assert_eq!(diags.len(), 1);
    }

    #[test]
    fn scalar_root_is_a_coercion_error() {
        assert!(coerce_orders(&json!("not orders")).is_err());
        assert!(coerce_orders(&json!(42)).is_err());
    }

    #[test]
    fn provenance_strings_and_floats() {
        let doc = json!([{
            "description": "x", "order_type": "lab",
            "provenance": [3, "7", 2.5, -1]
        }]);
        let (orders, diags) = coerce_orders(&doc).unwrap();
        assert_eq!(orders[0].provenance, vec![3, 7]);
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn known_key_produces_candidate() {
        let doc = json!({"Pulse rate": "88"});
        let (raw, diags) = coerce_observations(&doc, &demo_schema()).unwrap();
        assert_eq!(raw.len(), 1);
        assert_eq!(raw[0].row_key, "Pulse rate");
        assert_eq!(raw[0].value_text, "88");
        assert!(diags.is_empty());
    }

    #[test]
    fn unknown_key_is_dropped_and_counted() {
        let doc = json!({"Nonexistent row": "x"});
        let (raw, diags) = coerce_observations(&doc, &demo_schema()).unwrap();
        assert!(raw.is_empty());
        assert_eq!(diags.len(), 1);
    }

    // Counting oracle: 3 known + 2 unknown keys.
    #[test]
    fn mixed_known_and_unknown_keys() {
        let doc = json!({
            "Pulse rate": "88",
            "Urine colour": "dark yellow",
            "Pain present": "yes",
            "Mystery A": "1",
            "Mystery B": "2"
        });
        let (raw, diags) = coerce_observations(&doc, &demo_schema()).unwrap();
        assert_eq!(raw.len(), 3);
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn value_span_object_keeps_both() {
        let doc = json!({"Pulse rate": {"value": "88", "span": "pulse is 88 today"}});
        let (raw, _) = coerce_observations(&doc, &demo_schema()).unwrap();
        assert_eq!(raw[0].value_text, "88");
        assert_eq!(raw[0].raw_span, "pulse is 88 today");
    }

    #[test]
    fn key_match_is_case_insensitive() {
        let doc = json!({"pulse RATE": 88});
        let (raw, _) = coerce_observations(&doc, &demo_schema()).unwrap();
        assert_eq!(raw[0].row_key, "Pulse rate");
    }

    #[test]
    fn array_root_for_observations_is_an_error() {
        assert!(coerce_observations(&json!([1, 2]), &demo_schema()).is_err());
    }

    // Idempotence: a cleanly serialized order array survives the full
    // parse + coerce path unchanged.
    #[test]
    fn parse_coerce_round_trip_is_identity() {
        let orders = vec![
            MedicalOrder {
                description: "CT of Chest".into(),
                order_type: OrderType::Imaging,
                reason: Some("infection".into()),
                provenance: vec![45, 46],
            },
            MedicalOrder {
                description: "amoxicillin 500mg".into(),
                order_type: OrderType::Medication,
                reason: None,
                provenance: vec![],
            },
        ];
        let text = serde_json::to_string(&orders).unwrap();
        let outcome = extract_json_payload(&text, 200);
        assert!(outcome.repairs.is_empty());
        let (back, diags) = coerce_orders(&outcome.value.unwrap()).unwrap();
        assert_eq!(back, orders);
        assert!(diags.is_empty());
    }
}
