//! Feature alignment by truncated singular value decomposition.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;

/// Project `x` (n x d') onto its top-`d` singular directions, returning
/// `U_d * Sigma_d` (n x d): left singular vectors scaled by their singular
/// values, in nonincreasing singular-value order.
///
/// The Gram matrix of the result equals the best rank-`d` approximation of
/// `x xᵀ`. When `d` exceeds the rank, the missing directions are zero
/// columns. Each singular vector's sign is fixed so its largest-magnitude
/// entry is positive.
pub fn svd_align(x: &Tensor, d: usize) -> Result<Tensor> {
    if d == 0 {
        return Err(Error::BadConfig { what: "alignment width must be >= 1" });
    }
    if d > x.cols() {
        return Err(Error::BadAlignDim { d, cols: x.cols() });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite { op: "svd_align" });
    }
    let n = x.rows();
    let m = x.cols();
    if n == 0 {
        return Ok(Tensor::zeros(0, d));
    }

    // One-sided Jacobi on the columns of x, stored as rows of the transpose
    // so each rotation touches contiguous memory.
    let mut at = x.transpose();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let (app, aqq, apq) = {
                    let rp = at.row(p);
                    let rq = at.row(q);
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for (&a, &b) in rp.iter().zip(rq) {
                        app += a * a;
                        aqq += b * b;
                        apq += a * b;
                    }
                    (app, aqq, apq)
                };
                if apq == 0.0 || apq * apq <= JACOBI_TOL * JACOBI_TOL * app * aqq {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                // Rotate the column pair in place.
                let (lo, hi) = (p.min(q), p.max(q));
                let (head, tail) = at.data_mut().split_at_mut(hi * n);
                let row_lo = &mut head[lo * n..(lo + 1) * n];
                let row_hi = &mut tail[..n];
                let (rp, rq) = if lo == p { (row_lo, row_hi) } else { (row_hi, row_lo) };
                for (a, b) in rp.iter_mut().zip(rq.iter_mut()) {
                    let va = *a;
                    let vb = *b;
                    *a = c * va - s * vb;
                    *b = s * va + c * vb;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Columns of the rotated matrix are sigma_j * u_j; order by norm.
    let mut order: Vec<(f64, usize)> = (0..m)
        .map(|j| {
            let norm2: f64 = at.row(j).iter().map(|v| v * v).sum();
            (norm2, j)
        })
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    // Directions whose singular value is negligible against the largest are
    // rank noise; emit exact zero columns for them.
    let top = order.first().map_or(0.0, |&(n2, _)| n2);
    let floor = top * 1e-24;
    let mut out = Tensor::zeros(n, d);
    for (k, &(norm2, j)) in order.iter().take(d).enumerate() {
        if norm2 <= floor {
            continue;
        }
        let col = at.row(j);
        // Sign convention: largest-magnitude entry positive.
        let mut max_abs = 0.0;
        let mut flip = false;
        for &v in col {
            let a = if v < 0.0 { -v } else { v };
            if a > max_abs {
                max_abs = a;
                flip = v < 0.0;
            }
        }
        let sgn = if flip { -1.0 } else { 1.0 };
        for (r, &v) in col.iter().enumerate() {
            out.set(r, k, sgn * v);
        }
    }
    Ok(out)
}
