use crate::error::{Error, Result};

/// Area under the ROC curve: probability that a random positive scores above a
/// random negative, ties counted half.
///
/// Computed from mid-ranks. The numerator `2·U` is an exact integer, so the
/// result equals `(#greater + ½·#ties) / (n₊·n₋)` to the last bit.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::validation("AUC input contains NaN"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::validation("AUC needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum over positives of twice their (1-based) mid-rank.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the mid-rank (i + j + 2) / 2
        let twice_mid = (i + j + 2) as u128;
        let pos_in_tie = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        twice_rank_sum += pos_in_tie * twice_mid;
        i = j + 1;
    }
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// `max(a, 1 − a)`: discriminative power regardless of direction.
pub fn oriented(a: f64) -> f64 {
    a.max(1.0 - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let labels = [false, false, true, true];
        assert_eq!(auc(&[1.0, 2.0, 3.0, 4.0], &labels).unwrap(), 1.0);
        // positives {2, 4} vs negatives {1, 3}: 3 of 4 pairs ordered, no ties
        assert_eq!(auc(&[1.0, 3.0, 2.0, 4.0], &labels).unwrap(), 0.75);
        // one tied pair counts half: 3.5 / 4
        assert_eq!(auc(&[1.0, 3.0, 3.0, 4.0], &labels).unwrap(), 0.875);
        assert_eq!(auc(&[4.0, 3.0, 2.0, 1.0], &labels).unwrap(), 0.0);
        assert_eq!(auc(&[1.0, 1.0, 1.0, 1.0], &labels).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_error() {
        assert!(auc(&[1.0, 2.0], &[true, true]).is_err());
        assert!(auc(&[1.0], &[true, false]).is_err());
    }

    #[test]
    fn orientation() {
        assert_eq!(oriented(0.2), 0.8);
        assert_eq!(oriented(0.7), 0.7);
    }
}
