use std::collections::BTreeMap;
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Marker for "assigned arbitrarily, not of interest". Stored verbatim in the
/// model; resolved to a concrete value only at concretization time. In
/// matchers it matches any value.
pub const WILDCARD: &str = "*";

/// Direction of an event relative to the test driver: inputs are stimuli the
/// driver delivers to the service under test (rendered `?`), outputs are
/// everything it observes or orchestrates (rendered `!`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "in")]
    Input,
    #[serde(rename = "out")]
    Output,
}

impl Direction {
    pub fn prefix(self) -> char {
        match self {
            Direction::Input => '?',
            Direction::Output => '!',
        }
    }
}

/// Ordered name/value multimap. Header names compare case-insensitively but
/// are stored with their original casing and document order, so a loaded
/// document serializes back byte-identically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Headers(Vec<(String, String)>);

impl Headers {
    pub fn new() -> Self {
        Headers(Vec::new())
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        Headers(pairs.into_iter().map(|(n, v)| (n.into(), v.into())).collect())
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.0.push((name.into(), value.into()));
    }

    /// First value for `name`, compared case-insensitively.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// Removes every entry whose name matches `name` case-insensitively.
    /// Returns how many entries were removed.
    pub fn remove(&mut self, name: &str) -> usize {
        let before = self.0.len();
        self.0.retain(|(n, _)| !n.eq_ignore_ascii_case(name));
        before - self.0.len()
    }

    pub fn set(&mut self, name: &str, value: impl Into<String>) {
        let value = value.into();
        match self.0.iter_mut().find(|(n, _)| n.eq_ignore_ascii_case(name)) {
            Some((_, v)) => *v = value,
            None => self.0.push((name.to_string(), value)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl Serialize for Headers {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (n, v) in &self.0 {
            map.serialize_entry(n, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Headers {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct HeadersVisitor;

        impl<'de> Visitor<'de> for HeadersVisitor {
            type Value = Headers;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of header names to string values")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Headers, A::Error> {
                let mut pairs = Vec::with_capacity(access.size_hint().unwrap_or(0));
                while let Some((name, value)) = access.next_entry::<String, String>()? {
                    pairs.push((name, value));
                }
                Ok(Headers(pairs))
            }
        }

        deserializer.deserialize_map(HeadersVisitor)
    }
}

/// Parameter assignments of one event. `from`/`to` identify source and
/// destination components and are always present; the remaining reserved
/// fields depend on whether the event is a request (`method` + `path`) or a
/// response (`status`). Any other assignment lands in `extra`, which is also
/// where matcher predicates (`bodyContains`, `notCrash`, ...) and harness
/// knobs (`delayMs`, `repeat`, ...) live. All values are strings; `*` means
/// wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventParams {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Headers::is_empty")]
    pub headers: Headers,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cookies: BTreeMap<String, String>,
    #[serde(default, flatten, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

/// One HTTP-level communication: a request or a response, with its parameter
/// assignments. The label is a path or status token; the literal `*` is the
/// wildcard label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub label: String,
    #[serde(rename = "dir")]
    pub direction: Direction,
    pub params: EventParams,
}

impl Event {
    pub fn is_request(&self) -> bool {
        self.params.method.is_some()
    }

    pub fn is_response(&self) -> bool {
        self.params.status.is_some()
    }

    pub fn from(&self) -> &str {
        &self.params.from
    }

    pub fn to(&self) -> &str {
        &self.params.to
    }

    pub fn body(&self) -> &str {
        self.params.body.as_deref().unwrap_or("")
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.params.headers.get(name)
    }

    pub fn status(&self) -> Option<&str> {
        self.params.status.as_deref()
    }

    /// `?label` / `!label` rendering used in diagnostics.
    pub fn rendered(&self) -> String {
        format!("{}{}", self.direction.prefix(), self.label)
    }
}

/// Canonical ordering key for events: (direction, label, method, path,
/// status), compared lexicographically. The model itself never depends on an
/// event order; the key exists so traversal, mutant enumeration and mutant
/// ids are reproducible.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventKey {
    pub direction: Direction,
    pub label: String,
    pub method: Option<String>,
    pub path: Option<String>,
    pub status: Option<String>,
}

impl Event {
    pub fn key(&self) -> EventKey {
        EventKey {
            direction: self.direction,
            label: self.label.clone(),
            method: self.params.method.clone(),
            path: self.params.path.clone(),
            status: self.params.status.clone(),
        }
    }
}
