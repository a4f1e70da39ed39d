//! The individual text repairs. Each takes a candidate payload and returns
//! a possibly-modified string; returning the input unchanged means the
//! repair did not apply. String-literal contents are never rewritten: every
//! scan tracks quoting and escape state.

/// Strip a markdown code fence (``` or ```json) around the payload. When
/// the closing fence is missing (output cut off), everything after the
/// opening fence line is kept.
pub fn strip_fences(text: &str) -> String {
    let Some(open) = text.find("```") else {
        return text.to_string();
    };
    let after_open = &text[open + 3..];
    // Skip the rest of the fence line (e.g. a "json" language tag).
    let body_start = match after_open.find('\n') {
        Some(nl) => nl + 1,
        None => return text.to_string(),
    };
    let body = &after_open[body_start..];
    let inner = match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    };
    inner.trim().to_string()
}

/// Keep only the span from the first opening bracket to the last closing
/// bracket, dropping surrounding prose. Without any closing bracket the
/// tail is kept for later balancing.
pub fn strip_prose(text: &str) -> String {
    let first = match (text.find('['), text.find('{')) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => return text.to_string(),
    };
    let last = match (text.rfind(']'), text.rfind('}')) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    };
    match last {
        Some(last) if last > first => text[first..=last].to_string(),
        _ => text[first..].to_string(),
    }
}

/// Remove commas that directly precede a closing bracket (ignoring
/// whitespace), outside string literals. A run of commas before a closer is
/// removed whole.
pub fn remove_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            i += 1;
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                out.push(c);
                i += 1;
            }
            ',' => {
                // Collect the run of commas/whitespace starting here.
                let mut j = i;
                while j < chars.len() && (chars[j] == ',' || chars[j].is_whitespace()) {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == ']' || chars[j] == '}') {
                    // Drop the commas, keep the whitespace.
                    for &k in chars[i..j].iter() {
                        if k != ',' {
                            out.push(k);
                        }
                    }
                } else {
                    out.extend(&chars[i..j]);
                }
                i = j;
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

/// Truncate numeric arrays longer than `max_len` elements. Targets run-on
/// number sequences (the classic failure mode for line-number lists); an
/// unterminated numeric array at end of input is closed after truncation.
pub fn truncate_runon_arrays(text: &str, max_len: usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            i += 1;
            continue;
        }
        if c == '"' {
            in_string = true;
            out.push(c);
            i += 1;
            continue;
        }
        if c == '[' {
            // Scan ahead: is this an array of bare numbers?
            let mut j = i + 1;
            while j < chars.len()
                && (chars[j].is_ascii_digit()
                    || chars[j] == ','
                    || chars[j] == '-'
                    || chars[j] == '+'
                    || chars[j] == '.'
                    || chars[j].is_whitespace())
            {
                j += 1;
            }
            let terminated = j < chars.len() && chars[j] == ']';
            let at_end = j == chars.len();
            if (terminated || at_end) && j > i + 1 {
                let body: String = chars[i + 1..j].iter().collect();
                let elements: Vec<&str> = body
                    .split(',')
                    .map(|e| e.trim())
                    .filter(|e| !e.is_empty())
                    .collect();
                if elements.len() > max_len {
                    out.push('[');
                    out.push_str(&elements[..max_len].join(", "));
                    out.push(']');
                    i = if terminated { j + 1 } else { j };
                    continue;
                }
            }
            out.push(c);
            i += 1;
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Close any open string literal and append the closing brackets the input
/// is missing. Dangling commas directly before the appended closers are
/// dropped so the result can parse.
pub fn balance_brackets(text: &str) -> String {
    let mut stack = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for c in text.chars() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '[' => stack.push(']'),
            '{' => stack.push('}'),
            ']' | '}' if stack.last() == Some(&c) => {
                stack.pop();
            }
            _ => {}
        }
    }
    if !in_string && stack.is_empty() {
        return text.to_string();
    }
    let mut out = text.to_string();
    if in_string {
        out.push('"');
    }
    // Trim dangling separators before closing.
    loop {
        let trimmed = out.trim_end();
        if let Some(stripped) = trimmed.strip_suffix(',') {
            out = stripped.to_string();
        } else {
            out = trimmed.to_string();
            break;
        }
    }
    while let Some(close) = stack.pop() {
        out.push(close);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fence_with_language_tag() {
        assert_eq!(strip_fences("```json\n[1, 2]\n```"), "[1, 2]");
    }

    #[test]
    fn fence_without_closer_keeps_tail() {
        assert_eq!(strip_fences("```json\n[1, 2"), "[1, 2");
    }

    #[test]
    fn no_fence_is_noop() {
        assert_eq!(strip_fences("[1]"), "[1]");
    }

    #[test]
    fn prose_around_array() {
        assert_eq!(strip_prose("Sure! Here you go: [1, 2] Hope that helps."), "[1, 2]");
    }

    #[test]
    fn prose_with_unclosed_payload_keeps_tail() {
        assert_eq!(strip_prose("Output: [1, 2"), "[1, 2");
    }

    #[test]
    fn trailing_comma_before_brace() {
        assert_eq!(remove_trailing_commas(r#"{"a": 1,}"#), r#"{"a": 1}"#);
        assert_eq!(remove_trailing_commas("[1, 2, ]"), "[1, 2 ]");
        assert_eq!(remove_trailing_commas("[1,,]"), "[1]");
    }

    #[test]
    fn comma_inside_string_survives() {
        assert_eq!(remove_trailing_commas(r#"{"a": "x,}"}"#), r#"{"a": "x,}"}"#);
    }

    #[test]
    fn runon_array_is_truncated_and_closed() {
        let body: Vec<String> = (1..=10).map(|n| n.to_string()).collect();
        let text = format!("[{}", body.join(","));
        assert_eq!(truncate_runon_arrays(&text, 3), "[1, 2, 3]");
    }

    #[test]
    fn short_numeric_arrays_are_untouched() {
        assert_eq!(truncate_runon_arrays("[45, 46]", 200), "[45, 46]");
    }

    #[test]
    fn non_numeric_arrays_are_untouched() {
        let text = r#"["a", "b", "c", "d"]"#;
        assert_eq!(truncate_runon_arrays(text, 2), text);
    }

    #[test]
    fn nested_numeric_array_inside_object() {
        let text = r#"{"provenance": [1,2,3,4,5]}"#;
        assert_eq!(truncate_runon_arrays(text, 3), r#"{"provenance": [1, 2, 3]}"#);
    }

    #[test]
    fn balance_appends_missing_closers() {
        assert_eq!(balance_brackets(r#"[{"a": [1, 2"#), r#"[{"a": [1, 2]}]"#);
    }

    #[test]
    fn balance_closes_open_string() {
        assert_eq!(balance_brackets(r#"{"a": "cut of"#), r#"{"a": "cut of"}"#);
    }

    #[test]
    fn balance_drops_dangling_comma() {
        assert_eq!(balance_brackets("[1, 2,"), "[1, 2]");
    }

    #[test]
    fn balanced_input_is_noop() {
        assert_eq!(balance_brackets("[1]"), "[1]");
    }
}
