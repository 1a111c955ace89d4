//! Event surgery shared by the operators: token removal/replacement and
//! credential corruption across headers, cookies and body fields.

use restmut_core::Event;

/// Field names that look like credentials for Failed Login Attempt
/// Duplication.
pub const CREDENTIAL_KEYS: [&str; 5] = ["password", "pass", "pwd", "secret", "credentials"];

fn is_key(keys: &[String], name: &str) -> bool {
    keys.iter().any(|k| k.eq_ignore_ascii_case(name))
}

/// Token values present on the event under any of the configured keys.
pub fn token_values(event: &Event, token_keys: &[String]) -> Vec<String> {
    let mut values = Vec::new();
    for (name, value) in event.params.headers.iter() {
        if is_key(token_keys, name) && !value.is_empty() {
            values.push(value.to_string());
        }
    }
    for (name, value) in &event.params.cookies {
        if is_key(token_keys, name) && !value.is_empty() {
            values.push(value.clone());
        }
    }
    for (name, value) in body_fields(event.body()) {
        if is_key(token_keys, &name) && !value.is_empty() {
            values.push(value);
        }
    }
    values
}

/// Deletes every token-keyed assignment: headers, cookies, extra params and
/// body fields.
pub fn remove_tokens(event: &mut Event, token_keys: &[String]) {
    for key in token_keys {
        event.params.headers.remove(key);
    }
    event.params.cookies.retain(|name, _| !is_key(token_keys, name));
    event.params.extra.retain(|name, _| !is_key(token_keys, name));
    if let Some(body) = &event.params.body {
        if let Some(rewritten) = rewrite_body_fields(body, |name, _| {
            if is_key(token_keys, name) {
                None
            } else {
                Some(unchanged())
            }
        }) {
            event.params.body = Some(rewritten);
        }
    }
}

/// Replaces every token-keyed assignment with `replacement`.
pub fn replace_tokens(event: &mut Event, token_keys: &[String], replacement: &str) {
    let names: Vec<String> = event
        .params
        .headers
        .iter()
        .filter(|(n, _)| is_key(token_keys, n))
        .map(|(n, _)| n.to_string())
        .collect();
    for name in names {
        event.params.headers.set(&name, replacement);
    }
    for (name, value) in event.params.cookies.iter_mut() {
        if is_key(token_keys, name) {
            *value = replacement.to_string();
        }
    }
    for (name, value) in event.params.extra.iter_mut() {
        if is_key(token_keys, name) {
            *value = replacement.to_string();
        }
    }
    if let Some(body) = &event.params.body {
        let replacement = replacement.to_string();
        if let Some(rewritten) = rewrite_body_fields(body, |name, _| {
            if is_key(token_keys, name) {
                Some(replacement.clone())
            } else {
                Some(unchanged())
            }
        }) {
            event.params.body = Some(rewritten);
        }
    }
}

/// Corrupts credential-looking assignments. Returns true when something was
/// corrupted; callers fall back to an `authorization` header otherwise.
pub fn corrupt_credentials(event: &mut Event, wrong: &str) -> bool {
    let cred_keys: Vec<String> = CREDENTIAL_KEYS.iter().map(|k| k.to_string()).collect();
    let mut hit = false;
    let names: Vec<String> = event
        .params
        .headers
        .iter()
        .filter(|(n, _)| is_key(&cred_keys, n) || n.eq_ignore_ascii_case("authorization"))
        .map(|(n, _)| n.to_string())
        .collect();
    for name in names {
        event.params.headers.set(&name, wrong);
        hit = true;
    }
    if let Some(body) = &event.params.body {
        let mut changed = false;
        let wrong_owned = wrong.to_string();
        if let Some(rewritten) = rewrite_body_fields(body, |name, _| {
            if is_key(&cred_keys, name) {
                changed = true;
                Some(wrong_owned.clone())
            } else {
                Some(unchanged())
            }
        }) {
            if changed {
                event.params.body = Some(rewritten);
                hit = true;
            }
        }
    }
    hit
}

// Sentinel meaning "keep the original value" in rewrite callbacks.
fn unchanged() -> String {
    "\u{0}keep".into()
}

/// Rewrites the fields of a flat JSON object or form-encoded body. The
/// callback returns `None` to drop a field, the `unchanged` sentinel to keep
/// it, or a new value. Returns `None` when the body has no recognizable
/// field structure.
fn rewrite_body_fields(body: &str, mut f: impl FnMut(&str, &str) -> Option<String>) -> Option<String> {
    let keep = unchanged();
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(body) {
        let mut out = serde_json::Map::new();
        for (k, v) in map {
            let current = match &v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            match f(&k, &current) {
                None => {}
                Some(nv) if nv == keep => {
                    out.insert(k, v);
                }
                Some(nv) => {
                    out.insert(k, serde_json::Value::String(nv));
                }
            }
        }
        return Some(serde_json::Value::Object(out).to_string());
    }
    if body.contains('=') && !body.contains(char::is_whitespace) {
        let mut parts = Vec::new();
        for pair in body.split('&') {
            match pair.split_once('=') {
                Some((k, v)) => match f(k, v) {
                    None => {}
                    Some(nv) if nv == keep => parts.push(format!("{k}={v}")),
                    Some(nv) => parts.push(format!("{k}={nv}")),
                },
                None => parts.push(pair.to_string()),
            }
        }
        return Some(parts.join("&"));
    }
    None
}

fn body_fields(body: &str) -> Vec<(String, String)> {
    let mut fields = Vec::new();
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(body) {
        for (k, v) in map {
            let value = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            fields.push((k, value));
        }
        return fields;
    }
    if body.contains('=') && !body.contains(char::is_whitespace) {
        for pair in body.split('&') {
            if let Some((k, v)) = pair.split_once('=') {
                fields.push((k.to_string(), v.to_string()));
            }
        }
    }
    fields
}
