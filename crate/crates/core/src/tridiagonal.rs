//! Eigenvectors of symmetric tridiagonal matrices at a known eigenvalue.

/// Eigenvector of `L D Lᵀ` (unit lower bidiagonal `L` with subdiagonal `l`,
/// diagonal `d`) for the eigenvalue `shift`, via the differential twisted
/// factorization.
///
/// Entries are returned as `(ln|v_x|, sign_x)` with the twist entry set to 1.
/// Working on the factored form rather than on the matrix entries keeps the
/// small eigenvalues and the decaying tails to high relative accuracy.
pub(crate) fn eigenvector_log(d: &[f64], l: &[f64], shift: f64) -> Vec<(f64, i8)> {
    let n = d.len();
    assert_eq!(l.len() + 1, n.max(1));
    if n == 1 {
        return vec![(0.0, 1)];
    }
    let scale = d
        .iter()
        .zip(l.iter().chain(std::iter::once(&0.0)))
        .map(|(di, li)| di.abs() * (1.0 + li * li))
        .fold(shift.abs(), f64::max);
    let guard = |p: f64| {
        if p == 0.0 {
            f64::MIN_POSITIVE.max(f64::EPSILON * scale)
        } else {
            p
        }
    };

    // stationary transform L D Lᵀ - τ = L₊ D₊ L₊ᵀ
    let mut s = vec![0.0; n];
    let mut lplus = vec![0.0; n - 1];
    s[0] = -shift;
    for i in 0..n - 1 {
        let dp = guard(d[i] + s[i]);
        lplus[i] = d[i] * l[i] / dp;
        s[i + 1] = lplus[i] * l[i] * s[i] - shift;
    }
    // progressive transform L D Lᵀ - τ = U₋ D₋ U₋ᵀ
    let mut p = vec![0.0; n];
    let mut uminus = vec![0.0; n - 1];
    p[n - 1] = d[n - 1] - shift;
    for i in (0..n - 1).rev() {
        let dm = guard(d[i] * l[i] * l[i] + p[i + 1]);
        let t = d[i] / dm;
        uminus[i] = l[i] * t;
        p[i] = p[i + 1] * t - shift;
    }
    let twist = (0..n)
        .min_by(|&i, &j| {
            let gi = (s[i] + p[i] + shift).abs();
            let gj = (s[j] + p[j] + shift).abs();
            gi.total_cmp(&gj)
        })
        .unwrap_or(0);

    let sign_of = |v: f64| if v < 0.0 { -1i8 } else { 1 };
    let mut out = vec![(0.0, 1i8); n];
    for i in (0..twist).rev() {
        let (lg, sg) = out[i + 1];
        let r = -lplus[i];
        out[i] = (lg + r.abs().ln(), sg * sign_of(r));
    }
    for i in twist..n - 1 {
        let (lg, sg) = out[i];
        let r = -uminus[i];
        out[i + 1] = (lg + r.abs().ln(), sg * sign_of(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn assemble(d: &[f64], l: &[f64]) -> DMatrix<f64> {
        let n = d.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = d[i]
                + if i > 0 {
                    d[i - 1] * l[i - 1] * l[i - 1]
                } else {
                    0.0
                };
            if i + 1 < n {
                m[(i, i + 1)] = d[i] * l[i];
                m[(i + 1, i)] = d[i] * l[i];
            }
        }
        m
    }

    #[test]
    fn matches_dense_eigenvectors() {
        let d = [2.0, 3.5, 1.0, 4.0, 2.5];
        let l = [-0.5, 0.2, -1.3, -0.4];
        let eig = SymmetricEigen::new(assemble(&d, &l));
        for k in 0..d.len() {
            let v = eigenvector_log(&d, &l, eig.eigenvalues[k]);
            let lin: Vec<f64> = v.iter().map(|&(lg, s)| f64::from(s) * lg.exp()).collect();
            let norm = lin.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dense = eig.eigenvectors.column(k);
            let dot: f64 = lin
                .iter()
                .zip(dense.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / norm;
            assert!((dot.abs() - 1.0).abs() < 1e-12, "mode {k}: {dot}");
        }
    }

    #[test]
    fn singular_factor_gives_null_vector() {
        // last pivot zero: the matrix annihilates v with v_{i+1}/v_i = -1/l_i
        let d = [1.0, 2.0, 0.0];
        let l = [-2.0, -0.5];
        let v = eigenvector_log(&d, &l, 0.0);
        let lin: Vec<f64> = v.iter().map(|&(lg, s)| f64::from(s) * lg.exp()).collect();
        assert!((lin[1] / lin[0] - 0.5).abs() < 1e-15);
        assert!((lin[2] / lin[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn one_by_one() {
        assert_eq!(eigenvector_log(&[3.0], &[], 3.0), vec![(0.0, 1)]);
    }
}
