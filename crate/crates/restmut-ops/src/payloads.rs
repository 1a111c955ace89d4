//! Attack payload dictionaries: editable text files, one payload per line,
//! `#` comments and blank lines ignored. The shipped files double as the
//! embedded defaults.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payloads {
    pub xss: Vec<String>,
    pub sql: Vec<String>,
    pub traversal: Vec<String>,
    pub unauthorized: Vec<String>,
}

impl Default for Payloads {
    fn default() -> Self {
        Payloads {
            xss: parse_payloads(include_str!("../payloads/xss.txt")),
            sql: parse_payloads(include_str!("../payloads/sql.txt")),
            traversal: parse_payloads(include_str!("../payloads/traversal.txt")),
            unauthorized: parse_payloads(include_str!("../payloads/unauthorized.txt")),
        }
    }
}

pub fn parse_payloads(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}
