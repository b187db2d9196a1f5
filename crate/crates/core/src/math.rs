//! Small dense helpers shared by the model and scoring code.

/// Numerically stable softmax. Empty input yields an empty vector.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Dot product with four interleaved partial sums.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `out += m · x` for row-major `m` of shape (out.len(), x.len()).
#[inline]
pub fn matvec_acc(m: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(m.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `dx += mᵀ · dy` for row-major `m` of shape (dy.len(), dx.len()).
#[inline]
pub fn matvec_t_acc(m: &[f64], dy: &[f64], dx: &mut [f64]) {
    let cols = dx.len();
    debug_assert_eq!(m.len(), dy.len() * cols);
    for (&g, row) in dy.iter().zip(m.chunks_exact(cols)) {
        if g == 0.0 {
            continue;
        }
        for (d, w) in dx.iter_mut().zip(row) {
            *d += g * w;
        }
    }
}

/// `dm += dy ⊗ x` (outer product) for row-major `dm` of shape (dy.len(), x.len()).
#[inline]
pub fn outer_acc(dy: &[f64], x: &[f64], dm: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(dm.len(), dy.len() * cols);
    for (&g, row) in dy.iter().zip(dm.chunks_exact_mut(cols)) {
        if g == 0.0 {
            continue;
        }
        for (d, v) in row.iter_mut().zip(x) {
            *d += g * v;
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_sums_to_one_and_survives_large_inputs() {
        let p = softmax(&[1000.0, 1000.0, -1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert_eq!(p[2], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transpose_products_agree() {
        let m = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut y = [0.0; 2];
        matvec_acc(&m, &[1.0, 0.0, -1.0], &mut y);
        assert_eq!(y, [-2.0, -2.0]);
        let mut x = [0.0; 3];
        matvec_t_acc(&m, &[1.0, 1.0], &mut x);
        assert_eq!(x, [5.0, 7.0, 9.0]);
        let mut dm = [0.0; 6];
        outer_acc(&[1.0, 2.0], &[1.0, 0.0, 3.0], &mut dm);
        assert_eq!(dm, [1.0, 0.0, 3.0, 2.0, 0.0, 6.0]);
    }
}
