//! Taint-source and taint-sink API catalog.

mod classify;

pub use classify::{access_text, classify_sink, classify_source, split_request_map, SinkMatch, SourceMatch};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub const DEFAULT_CATALOG: &str = include_str!("default.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaintLabel {
    DeviceState,
    DeviceInfo,
    Location,
    UserInput,
    StateVariable,
}

impl TaintLabel {
    pub const ALL: [TaintLabel; 5] = [
        TaintLabel::DeviceState,
        TaintLabel::DeviceInfo,
        TaintLabel::Location,
        TaintLabel::UserInput,
        TaintLabel::StateVariable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaintLabel::DeviceState => "DeviceState",
            TaintLabel::DeviceInfo => "DeviceInfo",
            TaintLabel::Location => "Location",
            TaintLabel::UserInput => "UserInput",
            TaintLabel::StateVariable => "StateVariable",
        }
    }
}

impl fmt::Display for TaintLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaintLabel {
    type Err = CatalogError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaintLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| CatalogError::UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SinkKind {
    Internet,
    Messaging,
}

impl SinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SinkKind::Internet => "Internet",
            SinkKind::Messaging => "Messaging",
        }
    }
}

impl fmt::Display for SinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SinkKind {
    type Err = CatalogError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Internet" => Ok(SinkKind::Internet),
            "Messaging" => Ok(SinkKind::Messaging),
            _ => Err(CatalogError::UnknownSinkKind(s.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown taint label `{0}`")]
    UnknownLabel(String),
    #[error("unknown sink kind `{0}`")]
    UnknownSinkKind(String),
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which arguments of a sink call carry content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContentArgs {
    /// Every positional argument other than the recipient.
    All,
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkSpec {
    pub kind: SinkKind,
    pub recipient: Option<usize>,
    pub content: Option<ContentArgs>,
}

impl SinkSpec {
    fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [kind, rec, content] = parts.as_slice() else {
            return Err(format!("sink info `{s}` is not Kind:recipient:content"));
        };
        let kind = SinkKind::from_str(kind).map_err(|e| e.to_string())?;
        let idx = |v: &str| -> Result<Option<usize>, String> {
            match v {
                "-" => Ok(None),
                _ => v.parse().map(Some).map_err(|_| format!("bad argument index `{v}`")),
            }
        };
        let recipient = idx(rec)?;
        let content = match *content {
            "*" => Some(ContentArgs::All),
            c => idx(c)?.map(ContentArgs::Index),
        };
        Ok(SinkSpec {
            kind,
            recipient,
            content,
        })
    }

    fn render(&self) -> String {
        let rec = self.recipient.map(|i| i.to_string()).unwrap_or_else(|| "-".into());
        let content = match self.content {
            Some(ContentArgs::All) => "*".to_string(),
            Some(ContentArgs::Index(i)) => i.to_string(),
            None => "-".to_string(),
        };
        format!("{}:{rec}:{content}", self.kind)
    }
}

/// `[qualifier:]name[*]`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePattern {
    pub qualifier: Option<String>,
    pub name: String,
    pub wildcard: bool,
}

impl SourcePattern {
    pub fn parse(s: &str) -> Result<Self, String> {
        if s.is_empty() {
            return Err("empty source pattern".into());
        }
        let (qualifier, rest) = match s.split_once(':') {
            Some((q, r)) if !q.is_empty() => (Some(q.to_string()), r),
            Some(_) => return Err(format!("empty qualifier in `{s}`")),
            None => (None, s),
        };
        let (name, wildcard) = match rest.strip_suffix('*') {
            Some(n) => (n.to_string(), true),
            None => (rest.to_string(), false),
        };
        if name.contains('*') {
            return Err(format!("`*` is only allowed at the end of `{s}`"));
        }
        if !wildcard && name.is_empty() {
            return Err(format!("empty name in `{s}`"));
        }
        Ok(SourcePattern {
            qualifier,
            name,
            wildcard,
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(q) = &self.qualifier {
            s.push_str(q);
            s.push(':');
        }
        s.push_str(&self.name);
        if self.wildcard {
            s.push('*');
        }
        s
    }

    /// Match strength, higher is better; `None` when the pattern does not apply.
    /// Qualified exact, then qualified wildcard, then unqualified exact, then
    /// unqualified prefix; longer prefixes win among wildcards.
    fn rank(&self, qualifiers: &[&str], name: &str) -> Option<(u8, usize, u8)> {
        let qualified = match &self.qualifier {
            Some(q) => {
                if !qualifiers.iter().any(|x| x.eq_ignore_ascii_case(q)) {
                    return None;
                }
                1
            }
            None => 0,
        };
        if self.wildcard {
            let prefix = canonical(&self.name);
            let target = if self.qualifier.as_deref() == Some("input") {
                name.to_ascii_lowercase()
            } else {
                canonical(name)
            };
            // a prefix is matched against the raw name too, so `current*` hits `currentValue`
            if target.starts_with(&prefix) || name.to_ascii_lowercase().starts_with(&self.name.to_ascii_lowercase()) {
                Some((2 * qualified, self.name.len(), qualified))
            } else {
                None
            }
        } else if canonical(&self.name) == canonical(name) {
            Some((1 + 2 * qualified, self.name.len(), qualified))
        } else {
            None
        }
    }
}

/// Lowercased name with a leading `get` getter prefix removed.
pub fn canonical(name: &str) -> String {
    let strip = |p: &str| -> Option<&str> {
        let rest = name.strip_prefix(p)?;
        rest.starts_with(|c: char| c.is_ascii_uppercase()).then_some(rest)
    };
    let base = strip("get").unwrap_or(name);
    base.to_ascii_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub pattern: SourcePattern,
    pub label: TaintLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkEntry {
    pub api: String,
    pub spec: SinkSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointEntry {
    pub verb: String,
    pub kind: SinkKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaintCatalog {
    pub sources: Vec<SourceEntry>,
    pub sinks: Vec<SinkEntry>,
    pub endpoints: Vec<EndpointEntry>,
}

impl TaintCatalog {
    pub fn default_catalog() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("embedded catalog is well formed")
    }

    /// Parse a catalog document. Later lines win over earlier ones per key.
    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut cat = TaintCatalog::default();
        cat.merge_text(text)?;
        Ok(cat)
    }

    fn merge_text(&mut self, text: &str) -> Result<(), CatalogError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim_end_matches('\r');
            if body.trim().is_empty() || body.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = body.split('\t').map(str::trim).collect();
            let [kind, pattern, info] = fields.as_slice() else {
                return Err(CatalogError::Parse {
                    line,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            };
            let perr = |reason: String| CatalogError::Parse { line, reason };
            match *kind {
                "source" => {
                    let pattern = SourcePattern::parse(pattern).map_err(perr)?;
                    let label = TaintLabel::from_str(info)?;
                    self.insert_source(SourceEntry { pattern, label });
                }
                "sink" => {
                    if pattern.is_empty() {
                        return Err(perr("empty sink api".into()));
                    }
                    let spec = SinkSpec::parse(info).map_err(perr)?;
                    self.insert_sink(SinkEntry {
                        api: pattern.to_string(),
                        spec,
                    });
                }
                "endpoint" => {
                    let kind = match SinkKind::from_str(info) {
                        Ok(k) => k,
                        Err(e) => return Err(perr(e.to_string())),
                    };
                    let verb = pattern.to_ascii_uppercase();
                    if let Some(e) = self.endpoints.iter_mut().find(|e| e.verb == verb) {
                        e.kind = kind;
                    } else {
                        self.endpoints.push(EndpointEntry { verb, kind });
                    }
                }
                other => return Err(perr(format!("unknown entry kind `{other}`"))),
            }
        }
        Ok(())
    }

    fn insert_source(&mut self, entry: SourceEntry) {
        let key = entry.pattern.render().to_ascii_lowercase();
        if let Some(e) = self
            .sources
            .iter_mut()
            .find(|e| e.pattern.render().to_ascii_lowercase() == key)
        {
            *e = entry;
        } else {
            self.sources.push(entry);
        }
    }

    fn insert_sink(&mut self, entry: SinkEntry) {
        if let Some(e) = self.sinks.iter_mut().find(|e| e.api.eq_ignore_ascii_case(&entry.api)) {
            *e = entry;
        } else {
            self.sinks.push(entry);
        }
    }

    /// Canonical text form; `parse(to_tsv())` reproduces the catalog.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for s in &self.sources {
            out.push_str(&format!("source\t{}\t{}\n", s.pattern.render(), s.label));
        }
        for s in &self.sinks {
            out.push_str(&format!("sink\t{}\t{}\n", s.api, s.spec.render()));
        }
        for e in &self.endpoints {
            out.push_str(&format!("endpoint\t{}\t{}\n", e.verb, e.kind));
        }
        out
    }

    /// Call sinks plus web-service endpoints.
    pub fn sink_count(&self) -> usize {
        self.sinks.len() + self.endpoints.len()
    }

    pub fn sink(&self, api: &str) -> Option<&SinkEntry> {
        self.sinks.iter().find(|s| s.api.eq_ignore_ascii_case(api))
    }

    pub fn endpoint(&self, verb: &str) -> Option<SinkKind> {
        self.endpoints
            .iter()
            .find(|e| e.verb.eq_ignore_ascii_case(verb))
            .map(|e| e.kind)
    }

    /// Best source entry for an access named `name` whose receiver satisfies `qualifiers`.
    pub fn lookup_source(&self, qualifiers: &[&str], name: &str) -> Option<&SourceEntry> {
        self.sources
            .iter()
            .filter_map(|e| e.pattern.rank(qualifiers, name).map(|r| (r, e)))
            .max_by(|a, b| a.0.cmp(&b.0))
            .map(|(_, e)| e)
    }
}

/// Load the embedded catalog, optionally merged with an override file.
pub fn load_catalog(path: Option<&Path>) -> Result<TaintCatalog, CatalogError> {
    let mut cat = TaintCatalog::default_catalog();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|source| CatalogError::Io {
            path: p.display().to_string(),
            source,
        })?;
        cat.merge_text(&text)?;
    }
    Ok(cat)
}
