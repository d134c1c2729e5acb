//! Live and file-backed traffic inputs, refreshed into the shared layer.

use std::time::Duration;

use mobility_core::traffic::{
    fetch_incidences, join_traffic_map, parse_sections_csv, parse_state_feed, FixtureIncidenceSource,
    IncidenceSource, RoadSection, SectionState, SourceError,
};

use crate::config::{Source, TrafficConfig};
use crate::state::SharedState;

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(Some(timeout)).build().new_agent()
}

fn read_source(source: &Source, timeout: Duration) -> Result<String, SourceError> {
    match source {
        Source::File(path) => {
            std::fs::read_to_string(path).map_err(|e| SourceError(format!("{}: {e}", path.display())))
        }
        Source::Url(url) => agent(timeout)
            .get(url)
            .call()
            .and_then(|mut r| r.body_mut().read_to_string())
            .map_err(|e| SourceError(format!("{url}: {e}"))),
    }
}

/// GETs the incidence endpoint with the request parameters.
pub struct HttpIncidenceSource {
    url: String,
    agent: ureq::Agent,
}

impl HttpIncidenceSource {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        HttpIncidenceSource { url: url.into(), agent: agent(timeout) }
    }
}

impl IncidenceSource for HttpIncidenceSource {
    fn fetch(&self, params: &[(&str, &str)]) -> Result<String, SourceError> {
        self.agent
            .get(&self.url)
            .query_pairs(params.iter().copied())
            .call()
            .and_then(|mut r| r.body_mut().read_to_string())
            .map_err(|e| SourceError(format!("{}: {e}", self.url)))
    }
}

/// Blocking refresh state. Section geometry is read once and kept; the
/// state feed keeps its last good result when a refresh fails.
pub struct TrafficFeeds {
    config: TrafficConfig,
    sections: Option<Vec<RoadSection>>,
    states: Vec<SectionState>,
}

impl TrafficFeeds {
    pub fn new(config: TrafficConfig) -> Self {
        TrafficFeeds { config, sections: None, states: Vec::new() }
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs(self.config.timeout_s.max(1))
    }

    fn load_sections(&mut self) -> &[RoadSection] {
        if self.sections.is_none() {
            if let Some(src) = &self.config.sections {
                match read_source(src, self.timeout()) {
                    Ok(text) => {
                        let table = parse_sections_csv(&text);
                        for w in &table.warnings {
                            tracing::warn!(target: "traffic", "sections: {w}");
                        }
                        self.sections = Some(table.sections);
                    }
                    Err(e) => tracing::warn!(target: "traffic", "sections unavailable: {e}"),
                }
            }
        }
        self.sections.as_deref().unwrap_or_default()
    }

    pub fn refresh(&mut self) -> mobility_core::traffic::TrafficLayer {
        let timeout = self.timeout();
        if let Some(src) = &self.config.state_feed {
            match read_source(src, timeout) {
                Ok(text) => {
                    let feed = parse_state_feed(&text);
                    for w in &feed.warnings {
                        tracing::warn!(target: "traffic", "state feed: {w}");
                    }
                    self.states = feed.states;
                }
                Err(e) => tracing::warn!(target: "traffic", "state feed unavailable, keeping last: {e}"),
            }
        }
        let incidences = match &self.config.incidences {
            None => Vec::new(),
            Some(Source::Url(url)) => fetch_incidences(&HttpIncidenceSource::new(url.clone(), timeout)).incidences,
            Some(src @ Source::File(_)) => {
                let fixture = read_source(src, timeout)
                    .map(FixtureIncidenceSource::new)
                    .unwrap_or_else(|e| {
                        tracing::warn!(target: "traffic", "{e}");
                        FixtureIncidenceSource::unreachable()
                    });
                fetch_incidences(&fixture).incidences
            }
        };
        let states = std::mem::take(&mut self.states);
        let layer = join_traffic_map(self.load_sections(), &states, &incidences);
        self.states = states;
        layer
    }
}

/// Refreshes the layer now and then every `refresh_s` seconds.
pub async fn refresh_loop(state: SharedState, config: TrafficConfig) {
    let period = Duration::from_secs(config.refresh_s.max(1));
    let mut feeds = Some(TrafficFeeds::new(config));
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        ticker.tick().await;
        let Some(mut f) = feeds.take() else { return };
        let joined = tokio::task::spawn_blocking(move || {
            let layer = f.refresh();
            (f, layer)
        })
        .await;
        match joined {
            Ok((f, layer)) => {
                tracing::info!(target: "traffic", sections = layer.polylines.len(), incidences = layer.markers.len(), "traffic layer refreshed");
                state.set_traffic(layer);
                feeds = Some(f);
            }
            Err(e) => {
                tracing::error!(target: "traffic", "refresh task failed: {e}");
                return;
            }
        }
    }
}
