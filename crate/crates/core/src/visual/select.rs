use crate::error::Result;
use crate::report::Report;

/// Index of the chosen frame per sub-plot; `None` when the sub-plot was
/// dropped.
pub type Selection = Vec<Option<usize>>;

/// Greedy narrative-order choice: sub-plot `i` takes its best-scoring frame
/// at least `min_gap_frac * duration_s` away from every earlier pick and
/// free of text. `has_text` is asked lazily, for at most `ocr_budget`
/// gap-feasible candidates per sub-plot.
pub fn select_frames(
    scores: &[Vec<f64>],
    times: &[f64],
    duration_s: f64,
    min_gap_frac: f64,
    ocr_budget: usize,
    mut has_text: impl FnMut(usize) -> Result<bool>,
    report: &mut Report,
) -> Result<Selection> {
    let min_gap = min_gap_frac * duration_s;
    let mut picked: Vec<f64> = Vec::new();
    let mut out = Vec::with_capacity(scores.len());
    for (i, row) in scores.iter().enumerate() {
        let mut order: Vec<usize> = (0..times.len().min(row.len())).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        let mut screened = 0usize;
        let mut choice = None;
        for f in order {
            if picked.iter().any(|&t| (times[f] - t).abs() < min_gap - 1e-9) {
                continue;
            }
            if screened == ocr_budget {
                break;
            }
            screened += 1;
            if !has_text(f)? {
                choice = Some(f);
                break;
            }
        }
        match choice {
            Some(f) => picked.push(times[f]),
            None => report.warn("subplot-dropped", format!("no usable frame for sub-plot {i}")),
        }
        out.push(choice);
    }
    Ok(out)
}
