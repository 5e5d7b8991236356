//! Dense-matrix reference implementation used as an oracle. Everything here
//! is deliberately independent of the library's banded/Chebyshev paths:
//! operators are explicit (N+1) x (N+1) matrices and the propagator is a
//! scaled-and-squared Taylor series.

use num_complex::Complex64;

pub type CMat = Vec<Vec<Complex64>>;

pub fn zeros(dim: usize) -> CMat {
    vec![vec![Complex64::new(0.0, 0.0); dim]; dim]
}

pub fn identity(dim: usize) -> CMat {
    let mut m = zeros(dim);
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = Complex64::new(1.0, 0.0);
    }
    m
}

fn ladder(n: usize, k: usize) -> f64 {
    (((k + 1) * (n - k)) as f64).sqrt()
}

/// Dense Jx, Jy, Jz for N atoms.
pub fn dense_spin_ops(n: usize) -> (CMat, CMat, CMat) {
    let dim = n + 1;
    let mut jx = zeros(dim);
    let mut jy = zeros(dim);
    let mut jz = zeros(dim);
    for k in 0..dim {
        jz[k][k] = Complex64::new(k as f64 - n as f64 / 2.0, 0.0);
        if k + 1 < dim {
            let a = ladder(n, k);
            jx[k + 1][k] += Complex64::new(a / 2.0, 0.0);
            jx[k][k + 1] += Complex64::new(a / 2.0, 0.0);
            jy[k + 1][k] += Complex64::new(0.0, -a / 2.0);
            jy[k][k + 1] += Complex64::new(0.0, a / 2.0);
        }
    }
    (jx, jy, jz)
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let dim = a.len();
    let mut out = zeros(dim);
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum())
        .collect()
}

pub fn scale(a: &CMat, s: Complex64) -> CMat {
    a.iter()
        .map(|row| row.iter().map(|x| x * s).collect())
        .collect()
}

pub fn add_assign(a: &mut CMat, b: &CMat) {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += y;
        }
    }
}

fn inf_norm(a: &CMat) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a 24-term Taylor series.
pub fn matexp(a: &CMat) -> CMat {
    let norm = inf_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = scale(a, Complex64::new(1.0 / 2f64.powi(squarings as i32), 0.0));
    let mut result = identity(a.len());
    let mut term = identity(a.len());
    for j in 1..=24 {
        term = matmul(&term, &b);
        term = scale(&term, Complex64::new(1.0 / j as f64, 0.0));
        add_assign(&mut result, &term);
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Dense `exp(-i angle axis.J)`.
pub fn dense_rotation(n: usize, axis: [f64; 3], angle: f64) -> CMat {
    let (jx, jy, jz) = dense_spin_ops(n);
    let mut h = zeros(n + 1);
    add_assign(&mut h, &scale(&jx, Complex64::new(axis[0], 0.0)));
    add_assign(&mut h, &scale(&jy, Complex64::new(axis[1], 0.0)));
    add_assign(&mut h, &scale(&jz, Complex64::new(axis[2], 0.0)));
    matexp(&scale(&h, Complex64::new(0.0, -angle)))
}

/// `<v| A |v>` for Hermitian dense A.
pub fn expectation(a: &CMat, v: &[Complex64]) -> f64 {
    let av = matvec(a, v);
    v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum::<Complex64>().re
}
