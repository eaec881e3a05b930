use crate::providers::EmbeddingVector;
use crate::report::Report;

/// Cosine similarity; `None` when either vector has zero magnitude.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Option<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(&x, &y)| x as f64 * y as f64).sum();
    Some(dot / (na * nb))
}

/// Per-frame score: the best cosine against any anchor (keywords plus the
/// whole sub-plot). Zero-magnitude pairs count as 0.
pub fn score_frames(anchors: &[EmbeddingVector], frames: &[EmbeddingVector], report: &mut Report) -> Vec<f64> {
    let mut zero_pairs = 0usize;
    let scores = frames
        .iter()
        .map(|f| {
            anchors
                .iter()
                .map(|a| {
                    cosine(a, f).unwrap_or_else(|| {
                        zero_pairs += 1;
                        0.0
                    })
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .map(|s| if s.is_finite() { s } else { 0.0 })
        .collect();
    if zero_pairs > 0 {
        report.warn("zero-embedding", format!("{zero_pairs} anchor/frame pairs had a zero vector"));
    }
    scores
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f32]) -> EmbeddingVector {
        EmbeddingVector(x.to_vec())
    }

    #[test]
    fn analytic_cases() {
        assert_eq!(cosine(&v(&[1.0, 0.0]), &v(&[1.0, 0.0])), Some(1.0));
        assert_eq!(cosine(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])), Some(0.0));
        let c = cosine(&v(&[0.3, 0.4]), &v(&[0.6, 0.8])).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])), None);
    }

    #[test]
    fn score_is_max_over_anchors() {
        let mut r = Report::new();
        let s = score_frames(&[v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.0, 0.0])], &[v(&[0.0, 2.0])], &mut r);
        assert_eq!(s, [1.0]);
        assert!(r.has("zero-embedding"));
    }

    proptest! {
        #[test]
        fn scaling_does_not_change_scores(
            a in proptest::collection::vec(-1.0f32..1.0, 4),
            f in proptest::collection::vec(-1.0f32..1.0, 4),
            k in 0.1f32..10.0,
        ) {
            let base = score_frames(&[v(&a)], &[v(&f)], &mut Report::new());
            let scaled: Vec<f32> = f.iter().map(|x| x * k).collect();
            let s = score_frames(&[v(&a)], &[v(&scaled)], &mut Report::new());
            prop_assert!((base[0] - s[0]).abs() < 1e-5);
        }
    }
}
