//! Exact left-to-right labelling by dynamic programming.

use crate::error::SegmentError;
use crate::segmentation::Segmentation;

/// Best monotone labelling of a sequence of `len` samples into `m` phases.
///
/// `gain(t, j)` scores interior sample `t` (`1..len-1`) under phase `j`.
/// The endpoints are pinned to the first and last phase and every phase
/// must cover at least one interior sample. Ties prefer staying in the
/// current phase, which pushes boundaries late.
pub fn best_labels(
    len: usize,
    m: usize,
    gain: impl Fn(usize, usize) -> f64,
) -> Result<Segmentation, SegmentError> {
    let interior = len.saturating_sub(2);
    if m == 0 || interior < m {
        return Err(SegmentError::InfeasibleM { m, interior });
    }
    // score[i][j]: best total over interior samples 0..=i with sample i in j.
    let neg = f64::NEG_INFINITY;
    let mut score = vec![vec![neg; m]; interior];
    let mut moved = vec![vec![false; m]; interior];
    score[0][0] = gain(1, 0);
    for i in 1..interior {
        let lo = m.saturating_sub(interior - i);
        let hi = (i + 1).min(m);
        for j in lo..hi {
            let stay = score[i - 1][j];
            let step = if j > 0 { score[i - 1][j - 1] } else { neg };
            let (best, from_prev) = if step > stay { (step, true) } else { (stay, false) };
            if best > neg {
                score[i][j] = best + gain(i + 1, j);
                moved[i][j] = from_prev;
            }
        }
    }
    let mut labels = vec![0; len];
    labels[len - 1] = m - 1;
    let mut j = m - 1;
    for i in (0..interior).rev() {
        labels[i + 1] = j;
        if moved[i][j] {
            j -= 1;
        }
    }
    Ok(Segmentation::new(labels, m)?)
}
