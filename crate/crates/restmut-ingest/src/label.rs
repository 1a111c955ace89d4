//! Behavior labeling: crash, login, token creation, token usage, mock.

use std::collections::BTreeSet;

use restmut_core::labels;

use crate::log::HttpExchange;

#[derive(Debug, Clone)]
pub struct LabelConfig {
    /// Component id of the service under test.
    pub sut_id: String,
    /// A request whose path contains one of these (case-insensitively) is an
    /// authentication request.
    pub login_patterns: Vec<String>,
    /// Header, cookie or body field names whose values act as tokens.
    pub token_keys: Vec<String>,
}

impl LabelConfig {
    pub fn new(sut_id: impl Into<String>) -> Self {
        LabelConfig {
            sut_id: sut_id.into(),
            login_patterns: ["login", "auth", "signin"].map(String::from).to_vec(),
            token_keys: ["authorization", "token", "access_token", "sessionid"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Assigns behavior labels. Idempotent: labels are recomputed from the
/// exchange contents alone, so running it twice yields the same result.
///
/// Rules: a 500 response is a crash; a request whose path matches a login
/// pattern is a login; a response introducing a token-keyed value is a token
/// creation and registers the value; any later exchange carrying a registered
/// value is a token step; exchanges touching a dependee (a component the SUT
/// itself sends requests to) are mock steps.
pub fn label_exchanges(mut xs: Vec<HttpExchange>, cfg: &LabelConfig) -> Vec<HttpExchange> {
    let dependees = dependees_of(&xs, &cfg.sut_id);
    let mut known_tokens: Vec<String> = Vec::new();

    for x in xs.iter_mut() {
        let mut set: BTreeSet<String> = BTreeSet::new();

        if x.status == Some(500) {
            set.insert(labels::CRASH.into());
        }
        if x.is_request() {
            if let Some(path) = &x.path {
                let lower = path.to_ascii_lowercase();
                if cfg.login_patterns.iter().any(|p| lower.contains(&p.to_ascii_lowercase())) {
                    set.insert(labels::LOGIN.into());
                }
            }
        }
        if dependees.contains(&x.from) || dependees.contains(&x.to) {
            set.insert(labels::MOCK.into());
        }

        // Token usage first, creation second: an exchange that carries an
        // already-known token is a token step even if it also introduces one.
        if known_tokens.iter().any(|t| carries_value(x, t)) {
            set.insert(labels::TOKEN.into());
        }
        if x.is_response() {
            let mut introduced = Vec::new();
            for value in token_field_values(x, &cfg.token_keys) {
                if !known_tokens.contains(&value) {
                    introduced.push(value);
                }
            }
            if !introduced.is_empty() {
                set.insert(labels::TOKEN_CREATION.into());
                known_tokens.extend(introduced);
            }
        }

        x.labels = set;
    }
    xs
}

/// Components the SUT sends requests to.
pub fn dependees_of(xs: &[HttpExchange], sut_id: &str) -> BTreeSet<String> {
    xs.iter()
        .filter(|x| x.is_request() && x.from == sut_id)
        .map(|x| x.to.clone())
        .collect()
}

/// Values of token-keyed fields present in the exchange: headers, cookies and
/// body fields (JSON object or form encoding).
pub fn token_field_values(x: &HttpExchange, token_keys: &[String]) -> Vec<String> {
    let is_token_key = |name: &str| token_keys.iter().any(|k| k.eq_ignore_ascii_case(name));
    let mut values = Vec::new();
    for (name, value) in x.headers.iter() {
        if is_token_key(name) && !value.is_empty() {
            values.push(value.to_string());
        }
    }
    for (name, value) in &x.cookies {
        if is_token_key(name) && !value.is_empty() {
            values.push(value.clone());
        }
    }
    if let Some(body) = &x.body {
        for (name, value) in body_fields(body) {
            if is_token_key(&name) && !value.is_empty() {
                values.push(value);
            }
        }
    }
    values
}

/// True when the exchange carries `value` anywhere observable: header or
/// cookie values, the body text, or the path query.
pub fn carries_value(x: &HttpExchange, value: &str) -> bool {
    x.headers.iter().any(|(_, v)| v == value)
        || x.cookies.values().any(|v| v == value)
        || x.body.as_deref().is_some_and(|b| b.contains(value))
        || x.path.as_deref().is_some_and(|p| p.contains(value))
}

/// Best-effort extraction of (key, value) fields from a body: a flat JSON
/// object, or `k=v&k2=v2` form encoding. Anything else yields no fields.
pub fn body_fields(body: &str) -> Vec<(String, String)> {
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(body) {
        return map
            .into_iter()
            .filter_map(|(k, v)| match v {
                serde_json::Value::String(s) => Some((k, s)),
                serde_json::Value::Number(n) => Some((k, n.to_string())),
                serde_json::Value::Bool(b) => Some((k, b.to_string())),
                _ => None,
            })
            .collect();
    }
    if body.contains('=') && !body.contains(char::is_whitespace) {
        return body
            .split('&')
            .filter_map(|pair| {
                let (k, v) = pair.split_once('=')?;
                Some((k.to_string(), v.to_string()))
            })
            .collect();
    }
    Vec::new()
}
