//! Clebsch-Gordan coefficients for the `J (x) K -> J` coupling family used
//! by the spherical Wigner expansion.
//!
//! Every `m3` level (the coefficients `<J m1; K m3-m1 | J m3>` over `m1`) is
//! computed independently with the three-term recurrence in `m1`,
//!
//! ```text
//! T(m1) C(m1-1) + [m1 (m3-m1) - lambda] C(m1) + T(m1+1) C(m1+1) = 0,
//! T(m1) = A1(m1) B2(m3-m1) / 2,   lambda = -K(K+1)/2,
//! ```
//!
//! run from both edges into the classically allowed region, matched at the
//! magnitude peak, rescaled against overflow, and normalized to unit sum of
//! squares. This is stable at any `J`: no factorials, no cancellation-prone
//! alternating sums, no error accumulation across levels. Signs follow the
//! Condon-Shortley convention, anchored at `<J J; K 0 | J J> > 0` and
//! propagated downward through the `J-` ladder identity (a sign decision at
//! the best-conditioned slot, immune to roundoff).
//!
//! Projections are stored doubled (`2m`) so half-integer bookkeeping stays
//! exact.

/// One `m3` level: coefficients `<J m1; K m3-m1 | J m3>` over `m1`.
pub(crate) struct CgLevel {
    pub dm3: i64,
    pub dm1_lo: i64,
    pub coeffs: Vec<f64>,
}

/// Full table for fixed `(j1 = J, j2 = K, j3 = J)`.
pub(crate) struct CgTable {
    dn: i64,
    dk2: i64,
    pub levels: Vec<CgLevel>,
}

impl CgTable {
    /// `<J m1; K (m3-m1) | J m3>` with doubled projections; zero outside the
    /// allowed range.
    #[allow(dead_code)]
    pub fn get(&self, dm1: i64, dm3: i64) -> f64 {
        if dm3.abs() > self.dn || dm1.abs() > self.dn || (dm3 - dm1).abs() > self.dk2 {
            return 0.0;
        }
        let level = &self.levels[((self.dn - dm3) / 2) as usize];
        let idx = (dm1 - level.dm1_lo) / 2;
        if idx < 0 || idx as usize >= level.coeffs.len() {
            return 0.0;
        }
        level.coeffs[idx as usize]
    }
}

/// `(j - m)(j + m + 1)` (squared raising element), doubled arguments.
fn raise_sq(dj: i64, dm: i64) -> f64 {
    (((dj - dm) / 2) as f64) * (((dj + dm) / 2 + 1) as f64)
}

/// `(j + m)(j - m + 1)` (squared lowering element), doubled arguments.
fn lower_sq(dj: i64, dm: i64) -> f64 {
    (((dj + dm) / 2) as f64) * (((dj - dm) / 2 + 1) as f64)
}

const RESCALE_THRESHOLD: f64 = 1e250;

/// Unnormalized level solution from the three-term recurrence; `coeffs[i]`
/// corresponds to `dm1 = lo + 2 i`.
fn three_term_level(dn: i64, dk2: i64, dm3: i64) -> CgLevel {
    let lo = (-dn).max(dm3 - dk2);
    let hi = dn.min(dm3 + dk2);
    let width = ((hi - lo) / 2 + 1) as usize;
    if width == 1 {
        return CgLevel {
            dm3,
            dm1_lo: lo,
            coeffs: vec![1.0],
        };
    }

    let k = (dk2 / 2) as f64;
    let lambda = -0.5 * k * (k + 1.0);
    let t = |dm1: i64| 0.5 * lower_sq(dn, dm1).sqrt() * raise_sq(dk2, dm3 - dm1).sqrt();
    let d = |dm1: i64| {
        let m1 = dm1 as f64 * 0.5;
        let m2 = (dm3 - dm1) as f64 * 0.5;
        m1 * m2 - lambda
    };
    let dm1_at = |i: usize| lo + 2 * i as i64;

    // Forward sweep from the lower edge (dominant direction inward).
    let mut fwd = vec![0.0f64; width];
    fwd[0] = 1.0;
    fwd[1] = -d(lo) * fwd[0] / t(lo + 2);
    for i in 1..width - 1 {
        let dm1 = dm1_at(i);
        fwd[i + 1] = -(d(dm1) * fwd[i] + t(dm1) * fwd[i - 1]) / t(dm1 + 2);
        if fwd[i + 1].abs() > RESCALE_THRESHOLD {
            let s = 1.0 / RESCALE_THRESHOLD;
            for v in fwd.iter_mut().take(i + 2) {
                *v *= s;
            }
        }
    }
    let mut peak = 0;
    for (i, v) in fwd.iter().enumerate() {
        if v.abs() > fwd[peak].abs() {
            peak = i;
        }
    }

    // Backward sweep from the upper edge down to the peak.
    let mut coeffs = fwd;
    if peak < width - 1 {
        let mut bwd = vec![0.0f64; width];
        bwd[width - 1] = 1.0;
        bwd[width - 2] = -d(hi) * bwd[width - 1] / t(hi);
        for i in (peak..width.saturating_sub(2)).rev() {
            let dm1 = dm1_at(i + 1);
            bwd[i] = -(d(dm1) * bwd[i + 1] + t(dm1 + 2) * bwd[i + 2]) / t(dm1);
            if bwd[i].abs() > RESCALE_THRESHOLD {
                let s = 1.0 / RESCALE_THRESHOLD;
                for v in bwd.iter_mut().skip(i) {
                    *v *= s;
                }
            }
        }
        let mut anchor = peak;
        if bwd[anchor] == 0.0 && anchor + 1 < width {
            anchor += 1;
        }
        let scale = coeffs[anchor] / bwd[anchor];
        for i in anchor..width {
            coeffs[i] = bwd[i] * scale;
        }
    }

    // Normalize to unit sum of squares, guarding dynamic range.
    let max_abs = coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norm_sq: f64 = coeffs.iter().map(|v| (v / max_abs) * (v / max_abs)).sum();
    let inv = 1.0 / (max_abs * norm_sq.sqrt());
    for v in &mut coeffs {
        *v *= inv;
    }

    CgLevel {
        dm3,
        dm1_lo: lo,
        coeffs,
    }
}

/// Builds the `(J, K, J)` table for `N = 2J` atoms and integer rank `k`.
pub(crate) fn cg_jkj(n_atoms: u32, k: u32) -> CgTable {
    let dn = n_atoms as i64; // doubled J
    let dk2 = 2 * k as i64; // doubled K
    debug_assert!(dk2 <= 2 * dn, "rank K must not exceed 2J");

    let mut levels: Vec<CgLevel> = Vec::with_capacity(dn as usize + 1);
    for level_idx in 0..=(dn as usize) {
        let dm3 = dn - 2 * level_idx as i64;
        let mut level = three_term_level(dn, dk2, dm3);
        if level_idx == 0 {
            // Condon-Shortley anchor: <J J; K 0 | J J> > 0.
            if *level.coeffs.last().unwrap() < 0.0 {
                for v in &mut level.coeffs {
                    *v = -*v;
                }
            }
        } else {
            // Sign continuity through the J- ladder:
            // A3(m3+1) C_{m3}(m1) = A1(m1+1) C_{m3+1}(m1+1)
            //                       + A2(m3+1-m1) C_{m3+1}(m1).
            let src = &levels[level_idx - 1];
            let src_dm3 = dm3 + 2;
            let pick = |dm1: i64| -> f64 {
                let idx = (dm1 - src.dm1_lo) / 2;
                if dm1.abs() > dn || idx < 0 || idx as usize >= src.coeffs.len() {
                    0.0
                } else {
                    src.coeffs[idx as usize]
                }
            };
            let mut best = 0usize;
            let mut best_pred = 0.0f64;
            for (i, _) in level.coeffs.iter().enumerate() {
                let dm1 = level.dm1_lo + 2 * i as i64;
                let pred = lower_sq(dn, dm1 + 2).sqrt() * pick(dm1 + 2)
                    + lower_sq(dk2, src_dm3 - dm1).sqrt() * pick(dm1);
                if pred.abs() > best_pred.abs() {
                    best_pred = pred;
                    best = i;
                }
            }
            if best_pred * level.coeffs[best] < 0.0 {
                for v in &mut level.coeffs {
                    *v = -*v;
                }
            }
        }
        levels.push(level);
    }

    CgTable { dn, dk2, levels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Racah closed form with log-factorials; reliable for small j only
    /// (alternating sum). Doubled arguments.
    fn racah_cg(dj1: i64, dm1: i64, dj2: i64, dm2: i64, dj3: i64, dm3: i64) -> f64 {
        if dm1 + dm2 != dm3 {
            return 0.0;
        }
        let lnf = |n: i64| -> f64 {
            assert!(n >= 0, "negative factorial");
            (1..=n).map(|v| (v as f64).ln()).sum()
        };
        let h = |d: i64| d / 2; // halved (all inputs arranged to be even)
        let delta = lnf(h(dj1 + dj2 - dj3)) + lnf(h(dj1 - dj2 + dj3)) + lnf(h(-dj1 + dj2 + dj3))
            - lnf(h(dj1 + dj2 + dj3) + 1);
        let pre = 0.5 * ((dj3 + 1) as f64).ln()
            + 0.5
                * (delta
                    + lnf(h(dj3 + dm3))
                    + lnf(h(dj3 - dm3))
                    + lnf(h(dj1 + dm1))
                    + lnf(h(dj1 - dm1))
                    + lnf(h(dj2 + dm2))
                    + lnf(h(dj2 - dm2)));
        let k_min = 0.max(h(dj2 - dj3 - dm1)).max(h(dj1 - dj3 + dm2));
        let k_max = h(dj1 + dj2 - dj3).min(h(dj1 - dm1)).min(h(dj2 + dm2));
        let mut sum = 0.0;
        for k in k_min..=k_max {
            let ln_term = lnf(k)
                + lnf(h(dj1 + dj2 - dj3) - k)
                + lnf(h(dj1 - dm1) - k)
                + lnf(h(dj2 + dm2) - k)
                + lnf(h(dj3 - dj2 + dm1) + k)
                + lnf(h(dj3 - dj1 - dm2) + k);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (pre - ln_term).exp();
        }
        sum
    }

    #[test]
    fn matches_racah_form_for_small_j() {
        for n in [1u32, 2, 3, 5, 8, 12] {
            let dn = n as i64;
            for k in 0..=n.min(24) {
                let table = cg_jkj(n, k);
                let dk2 = 2 * k as i64;
                for level in &table.levels {
                    for (i, &c) in level.coeffs.iter().enumerate() {
                        let dm1 = level.dm1_lo + 2 * i as i64;
                        let dm2 = level.dm3 - dm1;
                        let reference = racah_cg(dn, dm1, dk2, dm2, dn, level.dm3);
                        assert_abs_diff_eq!(c, reference, epsilon = 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn levels_stay_normalized() {
        // Each |J m3> expansion has unit norm: sum_m1 C^2 = 1.
        for (n, k) in [(20u32, 7u32), (40, 40), (40, 3), (100, 100), (100, 51)] {
            let table = cg_jkj(n, k);
            for level in &table.levels {
                let s: f64 = level.coeffs.iter().map(|c| c * c).sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn multipole_operators_are_orthonormal() {
        // Tr(T_KQ^dag T_K'Q) = delta_KK' with the sqrt((2K+1)/(2J+1))
        // normalization, i.e. the m-sum of cg_K cg_K' products vanishes for
        // K != K'.
        let n = 40u32; // J = 20
        let dn = n as i64;
        for q in [0i64, 1, 5, 17] {
            for k1 in (q.unsigned_abs() as u32)..=n {
                let t1 = cg_jkj(n, k1);
                for k2 in [k1, (k1 + 3).min(n), n] {
                    if (2 * q).abs() > 2 * k2 as i64 {
                        continue;
                    }
                    let t2 = cg_jkj(n, k2);
                    let mut acc = 0.0;
                    let mut dm1 = -dn;
                    while dm1 <= dn {
                        let dm3 = dm1 + 2 * q;
                        if dm3.abs() <= dn {
                            acc += t1.get(dm1, dm3) * t2.get(dm1, dm3);
                        }
                        dm1 += 2;
                    }
                    let w1 = ((2 * k1 + 1) as f64 / (dn + 1) as f64).sqrt();
                    let w2 = ((2 * k2 + 1) as f64 / (dn + 1) as f64).sqrt();
                    let trace = w1 * w2 * acc;
                    let expected = if k1 == k2 { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(trace, expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn known_half_integer_case() {
        // Coupling 1/2 (x) 1 -> 1/2, Condon-Shortley anchor on the first
        // argument: |1/2,1/2> = (1/sqrt3)|+1/2>|1,0> - sqrt(2/3)|-1/2>|1,1>.
        let table = cg_jkj(1, 1);
        assert_abs_diff_eq!(table.get(1, 1), 1.0 / 3.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(table.get(-1, 1), -(2.0f64 / 3.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn traceless_above_rank_zero() {
        // sum_m <J m; K 0 | J m> = 0 for K >= 1.
        for (n, k) in [(9u32, 1u32), (20, 6), (40, 40), (100, 77)] {
            let table = cg_jkj(n, k);
            let dn = n as i64;
            let mut acc = 0.0;
            let mut dm = -dn;
            while dm <= dn {
                acc += table.get(dm, dm);
                dm += 2;
            }
            assert_abs_diff_eq!(acc, 0.0, epsilon = 1e-11);
        }
    }
}
