/// Precision/recall summary at one match threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    /// 101-point interpolated average precision, in `[0, 1]`.
    pub ap: f64,
    /// Recall after all detections, in `[0, 1]`.
    pub max_recall: f64,
}

/// Greedy matching of one image at threshold `t`.
///
/// `quality[d][g]` holds detections in descending score order. Each detection
/// takes the unmatched ground truth of highest quality `>= t`, ties going to
/// the lower index. Returns the true-positive flag of every detection.
pub fn match_detections(quality: &[Vec<Option<f64>>], num_gt: usize, t: f64) -> Vec<bool> {
    let mut taken = vec![false; num_gt];
    quality
        .iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (g, q) in row.iter().enumerate() {
                let Some(q) = *q else { continue };
                if taken[g] || q < t {
                    continue;
                }
                if best.is_none_or(|(_, bq)| q > bq) {
                    best = Some((g, q));
                }
            }
            match best {
                Some((g, _)) => {
                    taken[g] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

/// COCO-style AP from `(score, is_true_positive)` pairs pooled over images.
///
/// Pairs are ranked by descending score, stable in input order. Precision is
/// made monotone from the right, then read at recall levels `0, 0.01, …, 1`
/// (first rank reaching each level; 0 where never reached). With no ground
/// truth both values are 0.
pub fn average_precision(detections: &[(f64, bool)], num_gt: usize) -> PrecisionRecall {
    if num_gt == 0 {
        return PrecisionRecall { ap: 0.0, max_recall: 0.0 };
    }
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].0.total_cmp(&detections[a].0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut recall = Vec::with_capacity(order.len());
    let mut precision = Vec::with_capacity(order.len());
    for &i in &order {
        if detections[i].1 {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / num_gt as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }
    let ap = (0..=100)
        .map(|k| {
            let r = k as f64 / 100.0;
            let idx = recall.partition_point(|&x| x < r);
            precision.get(idx).copied().unwrap_or(0.0)
        })
        .sum::<f64>()
        / 101.0;
    PrecisionRecall {
        ap,
        max_recall: recall.last().copied().unwrap_or(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_empty() {
        let p = average_precision(&[(0.9, true), (0.8, true)], 2);
        assert_eq!((p.ap, p.max_recall), (1.0, 1.0));
        let p = average_precision(&[], 3);
        assert_eq!((p.ap, p.max_recall), (0.0, 0.0));
        assert_eq!(average_precision(&[(1.0, true)], 0).ap, 0.0);
    }

    #[test]
    fn false_positive_first() {
        // Precision after ranks: 0, 1/2; monotone envelope 1/2 up to recall 1.
        let p = average_precision(&[(0.9, false), (0.5, true)], 1);
        assert!((p.ap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn half_recall() {
        // Recall 0.5 reached at rank 1 with precision 1; levels above 0.5 score 0.
        let p = average_precision(&[(0.9, true)], 2);
        assert!((p.ap - 51.0 / 101.0).abs() < 1e-12);
        assert_eq!(p.max_recall, 0.5);
    }

    #[test]
    fn greedy_match_ties_to_lower_index() {
        let q = vec![vec![Some(0.8), Some(0.8)], vec![Some(0.9), Some(0.6)]];
        assert_eq!(match_detections(&q, 2, 0.5), vec![true, true]);
        assert_eq!(match_detections(&q, 2, 0.7), vec![true, false]);
        let q = vec![vec![None, Some(0.4)]];
        assert_eq!(match_detections(&q, 2, 0.5), vec![false]);
    }
}
