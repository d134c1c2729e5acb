use serde::Serialize;
use serde_json::Value;

use super::SourceError;
use crate::model::GeoPoint;

pub const DGT_URL: &str = "http://infocar.dgt.es/etraffic/BuscarElementos";
pub const ICON_BASE_URL: &str = "http://infocar.dgt.es/etraffic/img/iconosIncitar/";

/// Request parameters: a bounding box over Spain, incidences only.
pub const DGT_PARAMS: &[(&str, &str)] = &[
    ("latNS", "44.33956524809713"),
    ("longNS", "30.1904296875"),
    ("latSW", "26.745610382199022"),
    ("longSW", "-39.287109375"),
    ("zoom", "5"),
    ("accion", "getElementos"),
    ("Camaras", "false"),
    ("SensoresTrafico", "false"),
    ("SensoresMeteorologico", "false"),
    ("Paneles", "false"),
    ("IncidenciasRETENCION", "true"),
    ("IncidenciasOBRAS", "false"),
    ("IncidenciasMETEOROLOGICA", "true"),
    ("IncidenciasPUERTOS", "true"),
    ("IncidenciasOTROS", "true"),
    ("IncidenciasEVENTOS", "true"),
    ("niveles", "false"),
    ("caracter", "acontecimiento"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Incidence {
    pub point: GeoPoint,
    pub description: String,
    pub icon_name: String,
}

impl Incidence {
    pub fn icon_url(&self) -> String {
        format!("{ICON_BASE_URL}{}", self.icon_name)
    }
}

/// Where incidence JSON comes from: the live DGT endpoint or a fixture.
pub trait IncidenceSource: Send + Sync {
    fn fetch(&self, params: &[(&str, &str)]) -> Result<String, SourceError>;
}

/// Serves a fixed body, or fails like an unreachable host when empty.
#[derive(Debug, Clone, Default)]
pub struct FixtureIncidenceSource {
    body: Option<String>,
}

impl FixtureIncidenceSource {
    pub fn new(body: impl Into<String>) -> Self {
        FixtureIncidenceSource { body: Some(body.into()) }
    }

    pub fn unreachable() -> Self {
        FixtureIncidenceSource { body: None }
    }
}

impl IncidenceSource for FixtureIncidenceSource {
    fn fetch(&self, _params: &[(&str, &str)]) -> Result<String, SourceError> {
        self.body.clone().ok_or_else(|| SourceError("fixture source has no body".into()))
    }
}

/// Removes markup and decodes entities once; `<br>` and `<p>` become line
/// breaks.
fn from_html(text: &str) -> String {
    let mut plain = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        plain.push_str(&rest[..start]);
        let tag = &rest[start + 1..];
        let is_tag = tag.starts_with(|c: char| c.is_ascii_alphabetic() || c == '/' || c == '!');
        match tag.find('>') {
            Some(end) if is_tag => {
                let name = tag[..end].trim_start_matches('/').to_ascii_lowercase();
                if name.starts_with("br") || name == "p" {
                    plain.push('\n');
                }
                rest = &tag[end + 1..];
            }
            _ => {
                plain.push('<');
                rest = tag;
            }
        }
    }
    plain.push_str(rest);
    html_escape::decode_html_entities(&plain).into_owned()
}

/// Decodes a description the way the upstream client displays it: two
/// full markup-stripping passes, so double-escaped text comes out plain.
pub fn decode_description(raw: &str) -> String {
    from_html(&from_html(raw)).trim().to_string()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedIncidences {
    pub incidences: Vec<Incidence>,
    pub warnings: Vec<String>,
}

fn coordinate(element: &Value, key: &str) -> Result<f64, String> {
    match element.get(key) {
        Some(Value::String(s)) => s.trim().parse().map_err(|_| format!("bad {key} `{s}`")),
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| format!("bad {key}")),
        _ => Err(format!("missing {key}")),
    }
}

fn parse_element(element: &Value) -> Result<Incidence, String> {
    let lat = coordinate(element, "lat")?;
    let lon = coordinate(element, "lng")?;
    let point = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
    let text = |key: &str| element.get(key).and_then(Value::as_str).ok_or_else(|| format!("missing {key}"));
    Ok(Incidence {
        point,
        description: decode_description(text("descripcion")?),
        icon_name: text("icono")?.to_string(),
    })
}

/// Parses the incidence JSON array, skipping malformed elements.
pub fn parse_incidences(json: &str) -> Result<ParsedIncidences, String> {
    let value: Value = serde_json::from_str(json).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Array(elements) = value else {
        return Err("expected a JSON array".into());
    };
    let mut out = ParsedIncidences::default();
    for (i, element) in elements.iter().enumerate() {
        match parse_element(element) {
            Ok(inc) => out.incidences.push(inc),
            Err(e) => out.warnings.push(format!("element {i}: {e}")),
        }
    }
    Ok(out)
}

/// Fetches and parses incidences. Source or body failures yield an empty
/// list; every problem is logged as a warning.
pub fn fetch_incidences(source: &dyn IncidenceSource) -> ParsedIncidences {
    let parsed = source
        .fetch(DGT_PARAMS)
        .map_err(|e| e.to_string())
        .and_then(|body| parse_incidences(&body));
    match parsed {
        Ok(p) => {
            for w in &p.warnings {
                tracing::warn!(target: "traffic", "skipped incidence: {w}");
            }
            p
        }
        Err(e) => {
            tracing::warn!(target: "traffic", "incidences unavailable: {e}");
            ParsedIncidences { incidences: Vec::new(), warnings: vec![e] }
        }
    }
}
