//! JSONL exchange log parsing and request/response pairing.

use std::collections::{BTreeMap, BTreeSet};

use restmut_core::Headers;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeKind {
    Request,
    Response,
}

/// One HTTP-level communication observed in a log. Responses carry the index
/// of the request they answer once pairing has run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpExchange {
    pub ts: u64,
    pub from: String,
    pub to: String,
    pub kind: ExchangeKind,
    pub method: Option<String>,
    pub path: Option<String>,
    pub status: Option<u16>,
    pub headers: Headers,
    pub body: Option<String>,
    pub cookies: BTreeMap<String, String>,
    /// Behavior labels; empty until `label_exchanges` has run.
    pub labels: BTreeSet<String>,
    /// For responses: index of the paired request in the exchange list.
    pub request: Option<usize>,
}

impl HttpExchange {
    pub fn is_request(&self) -> bool {
        self.kind == ExchangeKind::Request
    }

    pub fn is_response(&self) -> bool {
        self.kind == ExchangeKind::Response
    }
}

/// Log line wire format. All fields except `ts`, `from`, `to` and `kind` are
/// optional; unknown fields make the line malformed.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogLine {
    ts: u64,
    from: String,
    to: String,
    kind: ExchangeKind,
    #[serde(default)]
    method: Option<String>,
    #[serde(default)]
    path: Option<String>,
    #[serde(default)]
    status: Option<u16>,
    #[serde(default)]
    headers: Headers,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    cookies: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log is not valid UTF-8: {0}")]
    Encoding(#[from] std::str::Utf8Error),
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
}

#[derive(Debug, Default)]
pub struct ParsedLog {
    pub exchanges: Vec<HttpExchange>,
    /// Lines skipped in lenient mode, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// Parses a JSONL exchange log. Every line must be one JSON object; requests
/// carry `method` + `path`, responses carry `status` and are paired to the
/// nearest preceding unpaired request with swapped `from`/`to`. Malformed
/// lines are fatal unless `lenient`, in which case they are skipped and
/// reported.
pub fn parse_log(bytes: &[u8], lenient: bool) -> Result<ParsedLog, LogError> {
    let text = std::str::from_utf8(bytes)?;
    let mut out = ParsedLog::default();
    let mut last_ts: Option<u64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        match parse_line(raw, &out.exchanges, &mut last_ts) {
            Ok(exchange) => out.exchanges.push(exchange),
            Err(reason) if lenient => out.skipped.push((line_no, reason)),
            Err(reason) => return Err(LogError::Line { line: line_no, reason }),
        }
    }
    Ok(out)
}

fn parse_line(
    raw: &str,
    previous: &[HttpExchange],
    last_ts: &mut Option<u64>,
) -> Result<HttpExchange, String> {
    let line: LogLine = serde_json::from_str(raw).map_err(|e| e.to_string())?;
    if line.from.is_empty() || line.to.is_empty() {
        return Err("from/to must be non-empty".into());
    }
    match line.kind {
        ExchangeKind::Request => {
            if line.method.is_none() || line.path.is_none() {
                return Err("request lines need method and path".into());
            }
        }
        ExchangeKind::Response => {
            if line.status.is_none() {
                return Err("response lines need a status".into());
            }
        }
    }
    if let Some(prev) = *last_ts {
        if line.ts < prev {
            return Err(format!("timestamp {} goes backwards (previous {prev})", line.ts));
        }
    }
    *last_ts = Some(line.ts);

    let mut exchange = HttpExchange {
        ts: line.ts,
        from: line.from,
        to: line.to,
        kind: line.kind,
        method: line.method,
        path: line.path,
        status: line.status,
        headers: line.headers,
        body: line.body,
        cookies: line.cookies,
        labels: BTreeSet::new(),
        request: None,
    };

    if exchange.is_response() {
        let paired = previous
            .iter()
            .enumerate()
            .rev()
            .find(|(i, x)| {
                x.is_request()
                    && x.from == exchange.to
                    && x.to == exchange.from
                    && !previous.iter().any(|r| r.request == Some(*i))
            })
            .map(|(i, _)| i);
        match paired {
            Some(i) => exchange.request = Some(i),
            None => return Err(format!("response from {} has no unpaired preceding request", exchange.from)),
        }
    }
    Ok(exchange)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RISK_PAIR: &str = concat!(
        r#"{"ts":1,"from":"Client","to":"AccMan","kind":"request","method":"GET","path":"/checkAccountRisk","headers":{"token":"1234"}}"#,
        "\n",
        r#"{"ts":2,"from":"AccMan","to":"Client","kind":"response","status":200,"body":"LOWRISK"}"#,
        "\n"
    );

    #[test]
    fn request_response_pair_is_linked() {
        let parsed = parse_log(RISK_PAIR.as_bytes(), false).unwrap();
        assert_eq!(parsed.exchanges.len(), 2);
        assert_eq!(parsed.exchanges[1].request, Some(0));
        assert_eq!(parsed.exchanges[0].headers.get("token"), Some("1234"));
    }

    #[test]
    fn empty_file_parses_to_nothing() {
        let parsed = parse_log(b"", false).unwrap();
        assert!(parsed.exchanges.is_empty());
    }

    #[test]
    fn orphan_response_is_a_pairing_error() {
        let line = r#"{"ts":1,"from":"AccMan","to":"Client","kind":"response","status":200}"#;
        let err = parse_log(line.as_bytes(), false).unwrap_err();
        assert!(err.to_string().contains("no unpaired preceding request"), "{err}");
    }

    #[test]
    fn malformed_line_is_fatal_unless_lenient() {
        let log = format!("{{not json}}\n{RISK_PAIR}");
        assert!(parse_log(log.as_bytes(), false).is_err());
        let parsed = parse_log(log.as_bytes(), true).unwrap();
        assert_eq!(parsed.exchanges.len(), 2);
        assert_eq!(parsed.skipped.len(), 1);
        assert_eq!(parsed.skipped[0].0, 1);
    }

    #[test]
    fn interleaved_pairs_match_by_endpoints() {
        let log = concat!(
            r#"{"ts":1,"from":"A","to":"S","kind":"request","method":"GET","path":"/x"}"#, "\n",
            r#"{"ts":2,"from":"B","to":"S","kind":"request","method":"GET","path":"/y"}"#, "\n",
            r#"{"ts":3,"from":"S","to":"B","kind":"response","status":200}"#, "\n",
            r#"{"ts":4,"from":"S","to":"A","kind":"response","status":404}"#, "\n",
        );
        let parsed = parse_log(log.as_bytes(), false).unwrap();
        assert_eq!(parsed.exchanges[2].request, Some(1));
        assert_eq!(parsed.exchanges[3].request, Some(0));
    }
}
