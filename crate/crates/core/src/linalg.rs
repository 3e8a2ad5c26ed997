//! Small dense Hermitian kernels on flat column-major buffers.
//!
//! The fixed-point maps factor thousands of tiny (N or QN sized) systems per
//! evaluation; going through heap-allocated matrix types dominates the cost
//! at those sizes.

use num_complex::Complex64;

/// In-place lower Cholesky factor of the Hermitian matrix `a` (`n x n`,
/// column-major, lower triangle read). Returns false if `a` is not positive
/// definite.
pub(crate) fn cholesky_in_place(a: &mut [Complex64], n: usize) -> bool {
    // dot-product form keeps the running sums in registers
    for j in 0..n {
        let mut d = a[j + j * n].re;
        for k in 0..j {
            d -= a[j + k * n].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        let inv = 1.0 / d;
        a[j + j * n] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[i + j * n];
            for k in 0..j {
                s -= a[i + k * n] * a[j + k * n].conj();
            }
            a[i + j * n] = s * inv;
        }
    }
    true
}

/// Solves `L y = b` in place.
pub(crate) fn forward_in_place(l: &[Complex64], n: usize, b: &mut [Complex64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i + k * n] * b[k];
        }
        b[i] = s / l[i + i * n].re;
    }
}

/// Solves `L^H x = y` in place.
pub(crate) fn backward_in_place(l: &[Complex64], n: usize, b: &mut [Complex64]) {
    for i in (0..n).rev() {
        let col = &l[i * n + i..i * n + n];
        let mut s = b[i];
        for (lki, bk) in col[1..].iter().zip(&b[i + 1..n]) {
            s -= lki.conj() * bk;
        }
        b[i] = s / col[0].re;
    }
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting
/// (`a` is `n x n` column-major and is destroyed). Returns false when a pivot
/// vanishes.
pub(crate) fn lu_solve_in_place(a: &mut [Complex64], n: usize, b: &mut [Complex64]) -> bool {
    for j in 0..n {
        let (mut piv, mut best) = (j, a[j + j * n].norm_sqr());
        for i in j + 1..n {
            let v = a[i + j * n].norm_sqr();
            if v > best {
                piv = i;
                best = v;
            }
        }
        if !(best > 0.0) || !best.is_finite() {
            return false;
        }
        if piv != j {
            for c in j..n {
                a.swap(j + c * n, piv + c * n);
            }
            b.swap(j, piv);
        }
        let inv = a[j + j * n].inv();
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let mult = &mut head[j * n + j + 1..(j + 1) * n];
        for m in mult.iter_mut() {
            *m *= inv;
        }
        let bj = b[j];
        for (bi, m) in b[j + 1..n].iter_mut().zip(mult.iter()) {
            *bi -= m * bj;
        }
        for col in tail.chunks_exact_mut(n) {
            let u = col[j];
            if u.re == 0.0 && u.im == 0.0 {
                continue;
            }
            for (x, m) in col[j + 1..].iter_mut().zip(mult.iter()) {
                *x -= m * u;
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for c in i + 1..n {
            s -= a[i + c * n] * b[c];
        }
        b[i] = s / a[i + i * n];
    }
    true
}
