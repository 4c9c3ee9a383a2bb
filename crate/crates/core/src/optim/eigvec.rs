use crate::error::Result;
use crate::linalg::{qr, sym_eig, DenseMatrix};

/// `QR` diagonals below this fraction of `‖P Q‖` trigger the fallback.
pub const REFRESH_COLLAPSE_TOL: f64 = 1e-14;

/// One orthogonal-iteration step toward the eigenvectors of symmetric `p`:
/// `Q₊ = QR(P Q).Q` with a nonnegative `R` diagonal.
///
/// If `P Q` has a (numerically) zero column the step is undefined and the
/// eigenvectors of `p` are returned instead.
pub fn eigenvectors_refresh(p: &DenseMatrix, q: &DenseMatrix) -> Result<DenseMatrix> {
    let s = p.matmul(q)?;
    let floor = REFRESH_COLLAPSE_TOL * s.frobenius_norm();
    if s.is_finite() {
        let (q_next, tri) = qr(&s)?;
        if (0..tri.rows()).all(|k| tri.get(k, k) > floor) {
            return Ok(q_next);
        }
    }
    Ok(sym_eig(p)?.eigenvectors)
}
