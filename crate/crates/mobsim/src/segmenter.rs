//! Turns a trace into uploadable segments: majority vote per window,
//! transport-mode refinement, silence mode, then runs of equal class.

use mobility_core::activity::{
    classify_window, refine_activity, silence_transition, ActivitySample, PoiIndex, RefineConfig,
    RingerMode, RouteOracle, WINDOW_S,
};
use mobility_core::model::{ActivityClass, LocationSample, ModelError, Segment};
use serde::Serialize;

use crate::trace::TraceSample;

/// Classification of one window of consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowDecision {
    /// Index range into the trace, end exclusive.
    pub start: usize,
    pub end: usize,
    pub base: ActivityClass,
    pub refined: ActivityClass,
}

/// Samples per window for a given sampling interval.
pub fn window_len(sample_interval_s: u32) -> usize {
    (WINDOW_S / sample_interval_s.max(1)).max(1) as usize
}

pub fn decide_windows(
    trace: &[TraceSample],
    sample_interval_s: u32,
    poi: &PoiIndex,
    oracle: &dyn RouteOracle,
    config: &RefineConfig,
) -> Vec<WindowDecision> {
    let len = window_len(sample_interval_s);
    let mut out = Vec::with_capacity(trace.len().div_ceil(len));
    for (i, chunk) in trace.chunks(len).enumerate() {
        let labels: Vec<ActivitySample> = chunk.iter().map(|s| s.activity).collect();
        let locations: Vec<LocationSample> = chunk.iter().map(|s| s.location).collect();
        let accuracy: Vec<f64> = chunk.iter().map(|s| s.accuracy_m).collect();
        let base = classify_window(&labels);
        let refined = refine_activity(base, &locations, &accuracy, poi, oracle, config);
        out.push(WindowDecision { start: i * len, end: i * len + chunk.len(), base, refined });
    }
    out
}

/// Ringer state carried between windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SilenceState {
    pub feature_on: bool,
    pub ringer: RingerMode,
    pub stored: Option<RingerMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingerEvent {
    pub offset_s: u64,
    pub detected: ActivityClass,
    pub ringer: RingerMode,
    pub stored: Option<RingerMode>,
}

/// Runs silence mode once per window on the recognizer's class and
/// records the state after each step.
pub fn apply_silence(
    state: &mut SilenceState,
    trace: &[TraceSample],
    windows: &[WindowDecision],
    mut persist: impl FnMut(&SilenceState),
) -> Vec<RingerEvent> {
    windows
        .iter()
        .map(|w| {
            let (ringer, stored) = silence_transition(state.ringer, state.stored, w.base, state.feature_on);
            state.ringer = ringer;
            state.stored = stored;
            persist(state);
            RingerEvent { offset_s: trace[w.start].offset_s, detected: w.base, ringer, stored }
        })
        .collect()
}

/// A segment ready for upload, with where it starts in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSegment {
    pub first_index: usize,
    pub first_offset_s: u64,
    pub segment: Segment,
}

/// Groups consecutive windows of equal class into segments. A run too
/// short to form a segment joins the previous run, or the next one when it
/// is first. Every sample ends up in exactly one segment.
pub fn build_segments(trace: &[TraceSample], windows: &[WindowDecision]) -> Result<Vec<PlannedSegment>, ModelError> {
    if trace.len() < 2 {
        return Err(ModelError::InsufficientSamples);
    }
    // (start, end, class)
    let mut runs: Vec<(usize, usize, ActivityClass)> = Vec::new();
    for w in windows {
        match runs.last_mut() {
            Some(last) if last.2 == w.refined => last.1 = w.end,
            _ => runs.push((w.start, w.end, w.refined)),
        }
    }
    let mut merged: Vec<(usize, usize, ActivityClass)> = Vec::new();
    let mut carry: Option<usize> = None;
    for (start, end, class) in runs {
        let start = carry.take().unwrap_or(start);
        if end - start >= 2 {
            merged.push((start, end, class));
        } else if let Some(last) = merged.last_mut() {
            last.1 = end;
        } else {
            carry = Some(start);
        }
    }
    if let Some(start) = carry {
        // only reachable when every run was short; the whole trace has >= 2 samples
        merged.push((start, trace.len(), windows.last().map_or(ActivityClass::Unknown, |w| w.refined)));
    }
    merged
        .into_iter()
        .map(|(start, end, class)| {
            let samples = trace[start..end].iter().map(|s| s.location).collect();
            Ok(PlannedSegment {
                first_index: start,
                first_offset_s: trace[start].offset_s,
                segment: Segment::from_samples(class, samples)?,
            })
        })
        .collect()
}
