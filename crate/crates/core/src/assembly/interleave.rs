use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::report::Report;
use crate::timeline::{Clip, TrailerTimeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Sc,
    Qc,
}

/// SC/QC order: the j-th quote (1-based) follows `ceil(j * n_sc / (n_qc + 1))`
/// standard clips. Quotes beyond `n_sc - 1` are dropped, lowest rank first.
pub fn interleave(n_sc: usize, n_qc: usize, report: &mut Report) -> Vec<Slot> {
    let usable = n_qc.min(n_sc.saturating_sub(1));
    if usable < n_qc {
        report.warn(
            "quotes-dropped",
            format!("{} of {n_qc} quote clips do not fit between {n_sc} standard clips", n_qc - usable),
        );
    }
    let mut out = Vec::with_capacity(n_sc + usable);
    let mut placed_sc = 0;
    for j in 1..=usable {
        let after = (j * n_sc + usable) / (usable + 1);
        out.extend(std::iter::repeat_n(Slot::Sc, after - placed_sc));
        placed_sc = after;
        out.push(Slot::Qc);
    }
    out.extend(std::iter::repeat_n(Slot::Sc, n_sc - placed_sc));
    out
}

/// Sorts standard clip groups by source start, then sub-plot index.
pub fn order_standard_clips(groups: &mut [Vec<Clip>]) {
    let key = |g: &Vec<Clip>| {
        let c = g.first();
        (
            c.and_then(|c| c.source_span).map_or(f64::INFINITY, |s| s.start()),
            c.and_then(|c| c.subplot).unwrap_or(usize::MAX),
        )
    };
    groups.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
    });
}

/// Orders the standard groups and interleaves the ranked quote clips. An
/// empty result becomes a single black clip of `fallback_s`.
pub fn build_visual_timeline(
    mut standard: Vec<Vec<Clip>>,
    quotes: Vec<Clip>,
    fallback_s: f64,
    report: &mut Report,
) -> Result<TrailerTimeline> {
    order_standard_clips(&mut standard);
    let slots = interleave(standard.len(), quotes.len(), report);
    let mut sc = standard.into_iter();
    let mut qc = quotes.into_iter();
    let mut clips = Vec::new();
    for s in slots {
        match s {
            Slot::Sc => clips.extend(sc.next().expect("slot count matches")),
            Slot::Qc => clips.push(qc.next().expect("slot count matches")),
        }
    }
    if clips.is_empty() {
        report.warn("empty-timeline", format!("no clip survived; rendering {fallback_s} s of black"));
        clips.push(Clip::black(fallback_s));
    }
    TrailerTimeline::assemble(clips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::TimeSpan;
    use proptest::prelude::*;
    use Slot::{Qc, Sc};

    fn il(n_sc: usize, n_qc: usize) -> Vec<Slot> {
        interleave(n_sc, n_qc, &mut Report::new())
    }

    #[test]
    fn worked_examples() {
        assert_eq!(il(3, 2), [Sc, Qc, Sc, Qc, Sc]);
        assert_eq!(il(4, 0), [Sc, Sc, Sc, Sc]);
        assert_eq!(il(4, 1), [Sc, Sc, Qc, Sc, Sc]);
    }

    #[test]
    fn excess_quotes_are_dropped() {
        let mut r = Report::new();
        assert_eq!(interleave(2, 3, &mut r), [Sc, Qc, Sc]);
        assert!(r.has("quotes-dropped"));
        let mut r = Report::new();
        assert!(interleave(0, 2, &mut r).is_empty());
        assert!(r.has("quotes-dropped"));
    }

    #[test]
    fn standard_clips_sort_by_source_time_then_subplot() {
        let g = |t: f64, sub: usize| vec![Clip::standard(TimeSpan::new(t, t + 3.0).unwrap(), sub)];
        let mut groups = vec![g(500.0, 0), g(100.0, 1), g(300.0, 2), g(100.0, 0)];
        order_standard_clips(&mut groups);
        let got: Vec<_> = groups.iter().map(|g| (g[0].source_span.unwrap().start(), g[0].subplot.unwrap())).collect();
        assert_eq!(got, [(100.0, 0), (100.0, 1), (300.0, 2), (500.0, 0)]);
    }

    #[test]
    fn nothing_at_all_becomes_black() {
        let mut r = Report::new();
        let tl = build_visual_timeline(Vec::new(), Vec::new(), 12.0, &mut r).unwrap();
        assert_eq!(tl.clips.len(), 1);
        assert_eq!(tl.total_duration_s, 12.0);
        assert!(r.has("empty-timeline"));
    }

    proptest! {
        #[test]
        fn shape_invariants(n_sc in 2usize..=50, q in 1usize..50) {
            let n_qc = 1 + (q - 1) % (n_sc - 1);
            let seq = il(n_sc, n_qc);
            prop_assert_eq!(seq.len(), n_sc + n_qc);
            prop_assert_eq!(seq[0], Sc);
            prop_assert_eq!(*seq.last().unwrap(), Sc);
            prop_assert!(seq.windows(2).all(|w| !(w[0] == Qc && w[1] == Qc)));
            prop_assert_eq!(seq.iter().filter(|s| **s == Qc).count(), n_qc);
            // j-th quote sits after ceil(j * n_sc / (n_qc + 1)) standard clips
            let mut seen_sc = 0;
            let mut j = 0;
            for s in &seq {
                match s {
                    Sc => seen_sc += 1,
                    Qc => {
                        j += 1;
                        let want = ((j * n_sc) as f64 / (n_qc + 1) as f64).ceil() as usize;
                        prop_assert_eq!(seen_sc, want);
                    }
                }
            }
        }
    }
}
