//! Demo services used by the `fixtures` subcommand and the test suites: an
//! account-management service in a hardened and a deliberately weakened
//! variant, plus a scripted service with fixed behavior for verdict checks.
//!
//! The weakened variant seeds three classic flaws: HTTP verbs are not
//! checked (any verb reaches the handler), a missing or wrong token is
//! ignored, and sessions never expire.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::httpd::{handler, Reply, Request, Response, Server};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoMode {
    Secure,
    Vulnerable,
}

impl DemoMode {
    pub fn parse(raw: &str) -> Option<DemoMode> {
        match raw.to_ascii_lowercase().as_str() {
            "secure" => Some(DemoMode::Secure),
            "vulnerable" => Some(DemoMode::Vulnerable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub mode: DemoMode,
    /// Base URL the service calls its risk-check dependee at; None skips the
    /// dependee call.
    pub dependee_url: Option<String>,
    /// Secure mode rejects sessions older than this.
    pub session_ttl_ms: u64,
    pub valid_token: String,
    pub valid_password: String,
    /// Secure mode rejects bodies larger than this.
    pub max_body_bytes: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            mode: DemoMode::Secure,
            dependee_url: None,
            session_ttl_ms: 10 * 60 * 1000,
            valid_token: "1234".into(),
            valid_password: "wonder".into(),
            max_body_bytes: 64 * 1024,
        }
    }
}

struct DemoState {
    cfg: DemoConfig,
    client: reqwest::Client,
    sessions: Mutex<HashMap<String, Instant>>,
    failed_logins: Mutex<u32>,
}

pub struct DemoSut {
    server: Server,
}

impl DemoSut {
    pub fn url(&self) -> String {
        self.server.url()
    }

    pub fn stop(&self) {
        self.server.stop()
    }
}

pub async fn spawn_demo_sut(cfg: DemoConfig, port: u16) -> std::io::Result<DemoSut> {
    let state = Arc::new(DemoState {
        client: reqwest::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()
            .expect("client construction cannot fail"),
        cfg,
        sessions: Mutex::new(HashMap::new()),
        failed_logins: Mutex::new(0),
    });
    let server = Server::bind(
        port,
        handler(move |req| {
            let state = state.clone();
            async move { demo_handle(&state, req).await }
        }),
    )
    .await?;
    Ok(DemoSut { server })
}

fn error_response(status: u16, message: &str) -> Reply {
    Reply::Respond(Response::new(status, message.as_bytes().to_vec()))
}

async fn demo_handle(state: &DemoState, req: Request) -> Reply {
    let secure = state.cfg.mode == DemoMode::Secure;
    match req.path_without_query() {
        "/login" => {
            if secure && req.method != "POST" {
                return error_response(405, "error: method not allowed");
            }
            handle_login(state, &req)
        }
        "/checkAccountRisk" => {
            if secure && req.method != "GET" {
                return error_response(405, "error: method not allowed");
            }
            if secure && req.body.len() > state.cfg.max_body_bytes {
                return error_response(400, "error: payload too large");
            }
            if secure {
                let token = req.header("token").unwrap_or("");
                if token != state.cfg.valid_token {
                    return error_response(401, "error: authentication required");
                }
                let stale = {
                    let sessions = state.sessions.lock().unwrap();
                    match sessions.get(token) {
                        Some(start) => start.elapsed() > Duration::from_millis(state.cfg.session_ttl_ms),
                        None => true,
                    }
                };
                if stale {
                    return error_response(401, "error: session terminated");
                }
            }
            check_risk(state, &req).await
        }
        _ => error_response(404, "error: not found"),
    }
}

fn handle_login(state: &DemoState, req: &Request) -> Reply {
    let secure = state.cfg.mode == DemoMode::Secure;
    let body = req.body_text();
    let good_creds = body.contains(&format!("pass={}", state.cfg.valid_password));
    if secure && !good_creds {
        let mut failed = state.failed_logins.lock().unwrap();
        *failed += 1;
        return if *failed >= 3 {
            error_response(401, "error : Too Many Failed Attempt")
        } else {
            error_response(401, "error: invalid credentials")
        };
    }
    *state.failed_logins.lock().unwrap() = 0;
    state
        .sessions
        .lock()
        .unwrap()
        .insert(state.cfg.valid_token.clone(), Instant::now());
    Reply::Respond(
        Response::new(200, b"welcome".to_vec()).with_header("token", &state.cfg.valid_token),
    )
}

async fn check_risk(state: &DemoState, req: &Request) -> Reply {
    let secure = state.cfg.mode == DemoMode::Secure;
    let Some(dependee) = &state.cfg.dependee_url else {
        return Reply::Respond(Response::new(200, b"LOWRISK".to_vec()));
    };

    // Forward the account id from the form body and the caller's token.
    let acc = req
        .body_text()
        .split('&')
        .find_map(|pair| {
            let (k, v) = pair.split_once('=')?;
            (k.trim_matches('"') == "acc").then(|| v.to_string())
        })
        .unwrap_or_else(|| "99".to_string());
    let mut outbound = state
        .client
        .get(format!("{}/evaluateRisk", dependee.trim_end_matches('/')))
        .header("acc", acc);
    if let Some(token) = req.header("token") {
        outbound = outbound.header("token", token);
    }

    match outbound.send().await {
        Ok(response) if response.status().as_u16() == 200 => {
            let token_ok = response
                .headers()
                .get("token")
                .and_then(|v| v.to_str().ok())
                .is_some_and(|v| v == state.cfg.valid_token);
            let body = response.text().await.unwrap_or_default();
            if secure && !token_ok {
                return error_response(403, "error: risk check rejected");
            }
            Reply::Respond(Response::new(200, body.into_bytes()))
        }
        Ok(_) if secure => error_response(403, "error: risk check rejected"),
        Err(_) if secure => error_response(408, "error : connexion timed out"),
        _ => Reply::Respond(Response::new(200, b"ok (risk unchecked)".to_vec())),
    }
}

/// Fixed behaviors for verdict-semantics checks.
#[derive(Debug, Clone)]
pub enum ScriptedBehavior {
    /// Call the dependee once (GET /evaluateRisk with the canonical headers)
    /// and then answer with the given status and body.
    CallMockThenRespond { status: u16, body: String },
    /// Answer directly without touching the dependee.
    Respond { status: u16, body: String },
    /// Accept the request and never answer.
    Silent,
}

pub struct ScriptedSut {
    server: Server,
}

impl ScriptedSut {
    pub fn url(&self) -> String {
        self.server.url()
    }
}

pub async fn spawn_scripted_sut(
    behavior: ScriptedBehavior,
    dependee_url: Option<String>,
    port: u16,
) -> std::io::Result<ScriptedSut> {
    let client = reqwest::Client::builder()
        .timeout(Duration::from_secs(5))
        .build()
        .expect("client construction cannot fail");
    let server = Server::bind(
        port,
        handler(move |_req| {
            let behavior = behavior.clone();
            let dependee = dependee_url.clone();
            let client = client.clone();
            async move {
                match behavior {
                    ScriptedBehavior::CallMockThenRespond { status, body } => {
                        if let Some(dep) = dependee {
                            let _ = client
                                .get(format!("{}/evaluateRisk", dep.trim_end_matches('/')))
                                .header("acc", "99")
                                .header("token", "1234")
                                .send()
                                .await;
                        }
                        Reply::Respond(Response::new(status, body.into_bytes()))
                    }
                    ScriptedBehavior::Respond { status, body } => {
                        Reply::Respond(Response::new(status, body.into_bytes()))
                    }
                    ScriptedBehavior::Silent => Reply::Silent,
                }
            }
        }),
    )
    .await?;
    Ok(ScriptedSut { server })
}
