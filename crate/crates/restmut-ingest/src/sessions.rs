//! Session splitting and test-case construction.

use std::collections::BTreeMap;

use restmut_core::validate::validate;
use restmut_core::{Direction, Event, EventParams, TestCase, TestStep};
use serde::{Deserialize, Serialize};

use crate::label::{dependees_of, token_field_values, LabelConfig};
use crate::log::HttpExchange;

/// How exchanges are grouped into sessions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionKey {
    /// Group by the client component id (default).
    ClientId,
    /// Group by the value of the named cookie on client requests; requests
    /// without it fall back to the client id.
    Cookie(String),
}

/// Parameter values recorded from a log, used later to resolve `*`
/// assignments at concretization time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bindings {
    pub schema: String,
    /// First recorded value per parameter name (header, cookie, query or
    /// body field). Lookup is case-insensitive on the name.
    pub values: BTreeMap<String, String>,
    /// Token values in registration order.
    pub tokens: Vec<String>,
}

impl Bindings {
    pub fn lookup(&self, name: &str) -> Option<&str> {
        self.values
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Default)]
pub struct BuildOutcome {
    /// (test-case id, test case), in first-seen session order. All returned
    /// cases pass validation.
    pub test_cases: Vec<(String, TestCase)>,
    pub bindings: Bindings,
    pub warnings: Vec<String>,
}

/// Splits labeled exchanges into sessions and builds one linear pass-ending
/// test case per session. Sessions with unanswered requests are dropped with
/// a warning, as are sessions whose test case would be structurally invalid.
pub fn build_test_cases(xs: &[HttpExchange], cfg: &LabelConfig, key: &SessionKey) -> BuildOutcome {
    let mut outcome = BuildOutcome {
        bindings: harvest_bindings(xs, cfg),
        ..Default::default()
    };
    let sut = cfg.sut_id.as_str();
    let dependees = dependees_of(xs, sut);
    let is_client_request =
        |x: &HttpExchange| x.is_request() && x.to == sut && x.from != sut && !dependees.contains(&x.from);

    // Session assignment per exchange index.
    let mut session_of: Vec<Option<String>> = vec![None; xs.len()];
    let mut session_order: Vec<String> = Vec::new();
    let key_of = |x: &HttpExchange| match key {
        SessionKey::ClientId => x.from.clone(),
        SessionKey::Cookie(name) => x
            .cookies
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| x.from.clone()),
    };

    for (i, x) in xs.iter().enumerate() {
        if is_client_request(x) {
            let k = key_of(x);
            if !session_order.contains(&k) {
                session_order.push(k.clone());
            }
            session_of[i] = Some(k);
        } else if let Some(req) = x.request {
            session_of[i] = session_of.get(req).cloned().flatten();
        }
    }
    // Dependee traffic attaches to the most recent client request whose
    // response has not been observed yet; unattributable exchanges are
    // dropped with a warning.
    for (i, x) in xs.iter().enumerate() {
        if session_of[i].is_some() {
            continue;
        }
        let open = (0..i)
            .rev()
            .filter(|&j| is_client_request(&xs[j]))
            .find(|&j| {
                let answered = xs.iter().take(i).any(|r| r.request == Some(j));
                !answered
            })
            .or_else(|| (0..i).rev().find(|&j| is_client_request(&xs[j])));
        match open {
            Some(j) => session_of[i] = session_of[j].clone(),
            None => outcome
                .warnings
                .push(format!("exchange {i} ({} -> {}) precedes any client request; dropped", x.from, x.to)),
        }
    }

    for (n, session) in session_order.iter().enumerate() {
        let members: Vec<usize> = (0..xs.len())
            .filter(|&i| session_of[i].as_deref() == Some(session.as_str()))
            .collect();
        let unanswered = members.iter().any(|&i| {
            xs[i].is_request() && !xs.iter().any(|r| r.request == Some(i))
        });
        if unanswered {
            outcome
                .warnings
                .push(format!("session \"{session}\": request without response; session dropped"));
            continue;
        }
        let tc = linear_test_case(xs, &members, sut);
        let report = validate(&tc);
        if !report.is_valid() {
            outcome
                .warnings
                .push(format!("session \"{session}\": invalid test case dropped: {report}"));
            continue;
        }
        let id = format!("tc-{n:03}-{}", sanitize(session));
        outcome.test_cases.push((id, tc));
    }
    outcome
}

fn linear_test_case(xs: &[HttpExchange], members: &[usize], sut: &str) -> TestCase {
    let mut tc = TestCase::skeleton(sut, "q0");
    let mut current = "q0".to_string();
    for (pos, &i) in members.iter().enumerate() {
        let x = &xs[i];
        let target = if pos + 1 == members.len() {
            tc.verdicts.pass.clone()
        } else {
            tc.add_fresh_state("q")
        };
        tc.steps.push(TestStep {
            source: current.clone(),
            event: Some(exchange_event(x, sut)),
            labels: x.labels.clone(),
            target: target.clone(),
        });
        current = target;
    }
    tc
}

fn exchange_event(x: &HttpExchange, sut: &str) -> Event {
    let direction = if x.is_request() && x.to == sut && x.from != sut {
        Direction::Input
    } else {
        Direction::Output
    };
    let label = match (&x.kind, &x.path, x.status) {
        (crate::log::ExchangeKind::Request, Some(path), _) => {
            path.split('?').next().unwrap_or(path).to_string()
        }
        (_, _, Some(status)) if status < 400 => "/ok".to_string(),
        _ => "/error".to_string(),
    };
    Event {
        label,
        direction,
        params: EventParams {
            from: x.from.clone(),
            to: x.to.clone(),
            method: x.method.clone(),
            path: x.path.clone(),
            status: x.status.map(|s| s.to_string()),
            body: x.body.clone(),
            headers: x.headers.clone(),
            cookies: x.cookies.clone(),
            ..Default::default()
        },
    }
}

fn harvest_bindings(xs: &[HttpExchange], cfg: &LabelConfig) -> Bindings {
    let mut bindings = Bindings {
        schema: crate::BINDINGS_SCHEMA.to_string(),
        ..Default::default()
    };
    let put = |values: &mut BTreeMap<String, String>, name: &str, value: &str| {
        if !value.is_empty() && !values.keys().any(|k| k.eq_ignore_ascii_case(name)) {
            values.insert(name.to_string(), value.to_string());
        }
    };
    for x in xs {
        for (name, value) in x.headers.iter() {
            put(&mut bindings.values, name, value);
        }
        for (name, value) in &x.cookies {
            put(&mut bindings.values, name, value);
        }
        if let Some(query) = x.path.as_deref().and_then(|p| p.split_once('?').map(|(_, q)| q)) {
            for pair in query.split('&') {
                if let Some((k, v)) = pair.split_once('=') {
                    put(&mut bindings.values, k, v);
                }
            }
        }
        if let Some(body) = &x.body {
            for (name, value) in crate::label::body_fields(body) {
                put(&mut bindings.values, &name, &value);
            }
        }
        if x.is_response() {
            for value in token_field_values(x, &cfg.token_keys) {
                if !bindings.tokens.contains(&value) {
                    bindings.tokens.push(value);
                }
            }
        }
    }
    bindings
}

fn sanitize(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}
