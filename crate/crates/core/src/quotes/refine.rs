use crate::providers::VadSegment;
use crate::timeline::TimeSpan;

/// Snaps `span` to the hull of the speech segments it overlaps, limited to
/// `span` padded by `pad_s`. Returns `None` when no speech overlaps.
pub fn refine_with_vad(span: TimeSpan, segments: &[VadSegment], pad_s: f64) -> Option<TimeSpan> {
    let speech: Vec<TimeSpan> = segments
        .iter()
        .filter(|s| s.is_speech && s.span.overlaps(&span))
        .map(|s| s.span)
        .collect();
    let lo = speech.iter().map(TimeSpan::start).reduce(f64::min)?;
    let hi = speech.iter().map(TimeSpan::end).reduce(f64::max)?;
    let start = lo.max(span.start() - pad_s).max(0.0);
    let end = hi.min(span.end() + pad_s);
    TimeSpan::new(start, end).ok()
}
