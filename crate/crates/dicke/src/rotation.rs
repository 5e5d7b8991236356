//! SU(2) rotation internals.
//!
//! An arbitrary rotation `exp(-i angle axis.J)` is factored through its
//! defining SU(2) matrix into z-y-z Euler form. The two z factors are
//! diagonal phase ramps; the middle y factor is applied with a Chebyshev
//! expansion of the tridiagonal generator,
//!
//! ```text
//! exp(-i beta Jy) v = sum_k (2 - d_k0) (-i)^k J_k(beta J) T_k(Jy / J) v,
//! ```
//!
//! which converges to machine precision once `k` passes `beta * J`. Because
//! the spin-J representation is a true representation of SU(2), the factored
//! product reproduces the rotation exactly, including the `(-1)^N` global
//! phase of a 2 pi turn.

use num_complex::Complex64;

use crate::state::ladder_coefficients;

/// SU(2) matrix `[[a, b], [-conj(b), conj(a)]]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Su2 {
    pub a: Complex64,
    pub b: Complex64,
}

impl Su2 {
    /// `exp(-i angle/2 axis.sigma)` for a unit axis.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let c = (angle * 0.5).cos();
        let s = (angle * 0.5).sin();
        Su2 {
            a: Complex64::new(c, -axis[2] * s),
            b: Complex64::new(-axis[1] * s, -axis[0] * s),
        }
    }

    /// `self * rhs`: the rotation `rhs` followed by `self`.
    pub fn after(self, rhs: Su2) -> Self {
        Su2 {
            a: self.a * rhs.a - self.b * rhs.b.conj(),
            b: self.a * rhs.b + self.b * rhs.a.conj(),
        }
    }

    /// Euler angles with `U = Rz(alpha) Ry(beta) Rz(gamma)`, `beta` in `[0, pi]`.
    pub fn euler_zyz(&self) -> (f64, f64, f64) {
        let beta = 2.0 * self.b.norm().atan2(self.a.norm());
        let arg_a = self.a.arg();
        let arg_nb = (-self.b).arg();
        let alpha = -(arg_a + arg_nb);
        let gamma = arg_nb - arg_a;
        (alpha, beta, gamma)
    }

    /// Axis-angle form; angle in `[0, 2 pi)`, identity maps to the z axis.
    pub fn to_axis_angle(&self) -> ([f64; 3], f64) {
        let v = [-self.b.im, -self.b.re, -self.a.im];
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let angle = 2.0 * s.atan2(self.a.re);
        if s < 1e-300 {
            ([0.0, 0.0, 1.0], angle)
        } else {
            ([v[0] / s, v[1] / s, v[2] / s], angle)
        }
    }
}

/// Multiplies slot `k` by `exp(-i theta m_k)`.
pub(crate) fn apply_z_phase(n_atoms: u32, theta: f64, v: &mut [Complex64]) {
    let n = n_atoms as i64;
    for (k, a) in v.iter_mut().enumerate() {
        let m = (2 * k as i64 - n) as f64 * 0.5;
        let p = -theta * m;
        *a *= Complex64::new(p.cos(), p.sin());
    }
}

/// Applies `exp(-i beta Jy)` in place, `beta` in `[0, pi]`.
pub(crate) fn apply_y_rotation(n_atoms: u32, beta: f64, v: &mut Vec<Complex64>) {
    let j = n_atoms as f64 * 0.5;
    let z = beta * j;
    if z == 0.0 {
        return;
    }
    let margin = 30 + (14.0 * z.cbrt()).ceil() as usize;
    let k_max = z.ceil() as usize + margin;
    let bessel = bessel_jn(z, k_max);
    let mut k_end = k_max;
    while k_end > 1 && bessel[k_end].abs() < 1e-18 {
        k_end -= 1;
    }

    let ap = ladder_coefficients(n_atoms);
    let scale = 1.0 / (2.0 * j);

    // T_0 v and T_1 v.
    let mut t_prev = v.clone();
    let mut t_cur = vec![Complex64::new(0.0, 0.0); v.len()];
    scaled_jy(&ap, scale, &t_prev, &mut t_cur);

    let mut acc: Vec<Complex64> = t_prev.iter().map(|x| bessel[0] * x).collect();
    let mut ik = Complex64::new(0.0, -1.0); // (-i)^k, k = 1
    let c1 = 2.0 * bessel[1] * ik;
    for (a, t) in acc.iter_mut().zip(&t_cur) {
        *a += c1 * t;
    }

    let n_slots = v.len();
    let mut jy_buf = vec![Complex64::new(0.0, 0.0); n_slots];
    for coeff in bessel.iter().take(k_end + 1).skip(2) {
        // t_next = 2 A t_cur - t_prev, reusing t_prev's buffer.
        scaled_jy(&ap, scale, &t_cur, &mut jy_buf);
        for (p, y) in t_prev.iter_mut().zip(&jy_buf) {
            *p = 2.0 * y - *p;
        }
        std::mem::swap(&mut t_prev, &mut t_cur);
        ik *= Complex64::new(0.0, -1.0);
        let c = 2.0 * coeff * ik;
        for (a, t) in acc.iter_mut().zip(&t_cur) {
            *a += c * t;
        }
    }
    *v = acc;
}

/// `out = (Jy / J) v` with `scale = 1 / (2 J)`.
fn scaled_jy(ap: &[f64], scale: f64, v: &[Complex64], out: &mut [Complex64]) {
    let n = v.len() - 1;
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        if k > 0 {
            acc += ap[k - 1] * v[k - 1];
        }
        if k < n {
            acc -= ap[k] * v[k + 1];
        }
        // times -i * scale
        *o = Complex64::new(acc.im * scale, -acc.re * scale);
    }
}

/// `J_k(z)` for `k = 0..=k_max` by Miller's downward recurrence, normalized
/// with `J_0 + 2 sum_k J_2k = 1`.
pub(crate) fn bessel_jn(z: f64, k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    if z < 1e-300 {
        out[0] = 1.0;
        return out;
    }
    let start = k_max + (40.0 * (k_max as f64 + 1.0)).sqrt().ceil() as usize + 20;
    let mut j_next = 0.0_f64;
    let mut j_cur = 1e-250_f64;
    let mut norm = 0.0_f64;
    for k in (0..=start).rev() {
        if k <= k_max {
            out[k] = j_cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j_cur } else { 2.0 * j_cur };
        }
        if k > 0 {
            let j_prev = (2.0 * k as f64 / z) * j_cur - j_next;
            j_next = j_cur;
            j_cur = j_prev;
            if j_cur.abs() > 1e250 {
                let s = 1e-250;
                j_cur *= s;
                j_next *= s;
                norm *= s;
                for v in out.iter_mut() {
                    *v *= s;
                }
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_jn(1.0, 4);
        assert_abs_diff_eq!(j[0], 0.7651976865579666, epsilon = 1e-14);
        assert_abs_diff_eq!(j[1], 0.4400505857449335, epsilon = 1e-14);
        let j2 = bessel_jn(2.0, 2);
        assert_abs_diff_eq!(j2[0], 0.2238907791412357, epsilon = 1e-14);
    }

    #[test]
    fn bessel_parseval_identity() {
        // J_0^2 + 2 sum J_k^2 = 1, independent of the Miller normalizer.
        for &z in &[0.5, 3.0, 40.0, 333.0] {
            let k_max = z as usize + 80;
            let j = bessel_jn(z, k_max);
            let total = j[0] * j[0] + 2.0 * j[1..].iter().map(|x| x * x).sum::<f64>();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn euler_factors_reproduce_the_matrix() {
        let axes = [
            [0.6, 0.0, 0.8],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [-0.267261241912424, 0.534522483824849, 0.801783725737273],
        ];
        for (i, &axis) in axes.iter().enumerate() {
            let angle = 0.9 + 1.3 * i as f64;
            let u = Su2::from_axis_angle(axis, angle);
            let (alpha, beta, gamma) = u.euler_zyz();
            let rebuilt = Su2::from_axis_angle([0.0, 0.0, 1.0], alpha)
                .after(Su2::from_axis_angle([0.0, 1.0, 0.0], beta))
                .after(Su2::from_axis_angle([0.0, 0.0, 1.0], gamma));
            assert_abs_diff_eq!(u.a.re, rebuilt.a.re, epsilon = 1e-14);
            assert_abs_diff_eq!(u.a.im, rebuilt.a.im, epsilon = 1e-14);
            assert_abs_diff_eq!(u.b.re, rebuilt.b.re, epsilon = 1e-14);
            assert_abs_diff_eq!(u.b.im, rebuilt.b.im, epsilon = 1e-14);
        }
    }

    #[test]
    fn axis_angle_round_trip() {
        let axis = [0.48, -0.6, 0.64];
        let angle = 2.3;
        let (axis2, angle2) = Su2::from_axis_angle(axis, angle).to_axis_angle();
        assert_abs_diff_eq!(angle, angle2, epsilon = 1e-14);
        for i in 0..3 {
            assert_abs_diff_eq!(axis[i], axis2[i], epsilon = 1e-14);
        }
    }
}
