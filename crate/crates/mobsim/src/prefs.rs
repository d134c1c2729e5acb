//! Key-value preference file in the Android shared-preferences layout:
//! a `<map>` of typed `<string>`, `<int>`, `<long>`, `<float>`,
//! `<boolean>` and `<null>` entries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

pub const USER_HASH: &str = "usu_hash";
pub const REG_ID: &str = "registration_id";
pub const APP_VERSION: &str = "appVersion";
pub const SILENCE: &str = "Silence";
pub const PREVIOUS_RINGER: &str = "estadoAnterior";
pub const RINGER_MODE: &str = "ringerMode";

#[derive(Debug, Error)]
pub enum PrefsError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed preference file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrefValue {
    String(String),
    Int(i32),
    Long(i64),
    Float(f32),
    Boolean(bool),
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preferences {
    path: PathBuf,
    values: BTreeMap<String, PrefValue>,
}

fn malformed(e: impl std::fmt::Display) -> PrefsError {
    PrefsError::Malformed(e.to_string())
}

fn attr(e: &BytesStart<'_>, name: &str) -> Result<Option<String>, PrefsError> {
    match e.try_get_attribute(name).map_err(malformed)? {
        Some(a) => Ok(Some(a.unescape_value().map_err(malformed)?.into_owned())),
        None => Ok(None),
    }
}

fn parse_scalar(tag: &str, value: &str) -> Result<PrefValue, PrefsError> {
    let bad = || PrefsError::Malformed(format!("bad {tag} value `{value}`"));
    Ok(match tag {
        "int" => PrefValue::Int(value.parse().map_err(|_| bad())?),
        "long" => PrefValue::Long(value.parse().map_err(|_| bad())?),
        "float" => PrefValue::Float(value.parse().map_err(|_| bad())?),
        "boolean" => PrefValue::Boolean(value.parse().map_err(|_| bad())?),
        other => return Err(PrefsError::Malformed(format!("unknown entry type `{other}`"))),
    })
}

/// Parses the XML text of a preference file.
pub fn parse_prefs(text: &str) -> Result<BTreeMap<String, PrefValue>, PrefsError> {
    let mut reader = Reader::from_str(text);
    let mut values = BTreeMap::new();
    // name of the <string> entry being read and its text so far
    let mut open: Option<(String, String)> = None;
    loop {
        match reader.read_event().map_err(malformed)? {
            Event::Eof => break,
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"map" => {}
            Event::Start(e) if e.name().as_ref() == b"string" => {
                let name = attr(&e, "name")?.ok_or_else(|| malformed("string entry without name"))?;
                open = Some((name, String::new()));
            }
            Event::Empty(e) if e.name().as_ref() == b"string" => {
                let name = attr(&e, "name")?.ok_or_else(|| malformed("string entry without name"))?;
                values.insert(name, PrefValue::String(String::new()));
            }
            Event::Empty(e) => {
                let tag = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                let name = attr(&e, "name")?.ok_or_else(|| malformed(format!("{tag} entry without name")))?;
                let value = if tag == "null" {
                    PrefValue::Null
                } else {
                    let raw = attr(&e, "value")?.ok_or_else(|| malformed(format!("{tag} `{name}` without value")))?;
                    parse_scalar(&tag, &raw)?
                };
                values.insert(name, value);
            }
            Event::Text(t) => {
                if let Some((_, buf)) = open.as_mut() {
                    buf.push_str(&t.decode().map_err(malformed)?);
                }
            }
            Event::GeneralRef(r) => {
                if let Some((_, buf)) = open.as_mut() {
                    if let Some(c) = r.resolve_char_ref().map_err(malformed)? {
                        buf.push(c);
                    } else {
                        let name = r.decode().map_err(malformed)?;
                        let s = resolve_predefined_entity(&name)
                            .ok_or_else(|| malformed(format!("unknown entity `{name}`")))?;
                        buf.push_str(s);
                    }
                }
            }
            Event::End(e) if e.name().as_ref() == b"string" => {
                let (name, text) = open.take().ok_or_else(|| malformed("unbalanced </string>"))?;
                values.insert(name, PrefValue::String(text));
            }
            Event::Start(e) => {
                return Err(malformed(format!("unexpected <{}>", String::from_utf8_lossy(e.name().as_ref()))));
            }
            _ => {}
        }
    }
    if open.is_some() {
        return Err(malformed("unterminated <string>"));
    }
    Ok(values)
}

/// Renders entries as a preference file.
pub fn render_prefs(values: &BTreeMap<String, PrefValue>) -> String {
    let mut out = String::from("<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n");
    for (name, value) in values {
        let name = escape(name.as_str());
        let line = match value {
            PrefValue::String(s) => format!("<string name=\"{name}\">{}</string>", escape(s.as_str())),
            PrefValue::Int(v) => format!("<int name=\"{name}\" value=\"{v}\" />"),
            PrefValue::Long(v) => format!("<long name=\"{name}\" value=\"{v}\" />"),
            PrefValue::Float(v) => format!("<float name=\"{name}\" value=\"{v}\" />"),
            PrefValue::Boolean(v) => format!("<boolean name=\"{name}\" value=\"{v}\" />"),
            PrefValue::Null => format!("<null name=\"{name}\" />"),
        };
        out.push_str("    ");
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("</map>\n");
    out
}

impl Preferences {
    /// Opens `path`, starting empty when the file does not exist yet.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, PrefsError> {
        let path = path.into();
        let values = match std::fs::read_to_string(&path) {
            Ok(text) => parse_prefs(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(source) => return Err(PrefsError::Io { path, source }),
        };
        Ok(Preferences { path, values })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<&PrefValue> {
        self.values.get(key)
    }

    pub fn get_string(&self, key: &str, default: &str) -> String {
        match self.values.get(key) {
            Some(PrefValue::String(s)) => s.clone(),
            _ => default.to_string(),
        }
    }

    pub fn get_int(&self, key: &str, default: i32) -> i32 {
        match self.values.get(key) {
            Some(PrefValue::Int(v)) => *v,
            _ => default,
        }
    }

    pub fn put_string(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), PrefValue::String(value.into()));
    }

    pub fn put_int(&mut self, key: &str, value: i32) {
        self.values.insert(key.to_string(), PrefValue::Int(value));
    }

    pub fn remove(&mut self, key: &str) {
        self.values.remove(key);
    }

    /// Writes the file through a temporary sibling and a rename.
    pub fn commit(&self) -> Result<(), PrefsError> {
        let io = |source| PrefsError::Io { path: self.path.clone(), source };
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = self.path.with_extension("xml.tmp");
        std::fs::write(&tmp, render_prefs(&self.values)).map_err(io)?;
        std::fs::rename(&tmp, &self.path).map_err(io)
    }
}
