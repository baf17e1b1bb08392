//! Classification metrics.

use alloc::vec;

use crate::error::{Error, Result};

/// Micro- and macro-averaged F1 for single-label multiclass predictions.
///
/// Micro aggregates true/false positive counts over all classes (for
/// single-label problems this equals accuracy). Macro averages per-class F1
/// uniformly over all `n_classes` classes; a class absent from both truth
/// and prediction contributes zero.
pub fn micro_macro_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<(f64, f64)> {
    if y_true.is_empty() {
        return Err(Error::EmptyInput { op: "micro_macro_f1" });
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch {
            op: "micro_macro_f1",
            lhs: (y_true.len(), 1),
            rhs: (y_pred.len(), 1),
        });
    }
    let mut tp = vec![0u64; n_classes];
    let mut fp = vec![0u64; n_classes];
    let mut fn_ = vec![0u64; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes {
            return Err(Error::RowIndex { op: "micro_macro_f1 truth", index: t, rows: n_classes });
        }
        if p >= n_classes {
            return Err(Error::RowIndex { op: "micro_macro_f1 pred", index: p, rows: n_classes });
        }
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }

    let f1 = |tp: f64, fp: f64, fn_: f64| -> f64 {
        let denom = 2.0 * tp + fp + fn_;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp / denom
        }
    };

    let (stp, sfp, sfn) = (
        tp.iter().sum::<u64>() as f64,
        fp.iter().sum::<u64>() as f64,
        fn_.iter().sum::<u64>() as f64,
    );
    let micro = f1(stp, sfp, sfn);
    let macro_ = (0..n_classes)
        .map(|c| f1(tp[c] as f64, fp[c] as f64, fn_[c] as f64))
        .sum::<f64>()
        / n_classes as f64;
    Ok((micro, macro_))
}
