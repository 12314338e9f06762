//! Exact evaluation of the Delannoy/Jacobi identity over the dyadic rationals.
//!
//! With a = A/2^e, b = B/2^e, c = C/2^e and S = AB + C·2^e, both sides share
//! the denominator 2^{eβ + 2ek + k}:
//!   lhs = 2^k Σ_j C(k+β,j) C(k,j) A^{k+β−j} B^{k−j} S^j,
//!   rhs = (−1)^k A^β T_k,
//! where T_m = (2D)^m P_m^{(0,β)}(N/D), N = −(2AB + C·2^e), D = C·2^e, is an
//! integer sequence obeying the Jacobi recurrence with exact divisions.

use num_bigint::BigInt;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

/// (sign·mantissa, exponent) with x = mantissa · 2^exponent.
fn decode(x: f64) -> (BigInt, i32) {
    let (m, e, s) = x.integer_decode();
    (BigInt::from(s as i64) * BigInt::from(m), e as i32)
}

/// x · 2^{−shift} rounded to f64 without intermediate overflow.
pub(crate) fn scaled_to_f64(x: &BigInt, shift: u64) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let bits = x.bits();
    let drop = bits.saturating_sub(64);
    let top = (x >> drop).to_f64().unwrap_or(f64::NAN);
    let mut exp = drop as i64 - shift as i64;
    let mut v = top;
    // Apply the power of two in steps that stay representable.
    while exp != 0 {
        let step = exp.clamp(-1000, 1000);
        v *= 2f64.powi(step as i32);
        exp -= step;
    }
    v
}

fn binom(n: u64, r: u64) -> BigInt {
    let r = r.min(n.saturating_sub(r));
    (1..=r).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - r + i) / BigInt::from(i))
}

/// Integer numerators of both sides and their common power-of-two denominator.
pub(crate) fn identity_sides(phi: [f64; 3], beta: u32, k: u32) -> (BigInt, BigInt, u64) {
    let decoded = phi.map(decode);
    let e = decoded.iter().map(|&(_, q)| (-q).max(0)).max().unwrap_or(0) as u64;
    let lift = |(m, q): &(BigInt, i32)| {
        if m.is_zero() {
            BigInt::zero()
        } else {
            m << (*q as i64 + e as i64) as u64
        }
    };
    let (a, b, c) = (lift(&decoded[0]), lift(&decoded[1]), lift(&decoded[2]));
    let (beta, k) = (beta as u64, k as u64);
    let pow2e = BigInt::one() << e;
    let s = &a * &b + &c * &pow2e;

    let lhs = (0..=k).fold(BigInt::zero(), |acc, j| {
        acc + binom(k + beta, j) * binom(k, j) * num_traits::pow(a.clone(), (k + beta - j) as usize)
            * num_traits::pow(b.clone(), (k - j) as usize)
            * num_traits::pow(s.clone(), j as usize)
    }) << k;

    let d = &c * &pow2e;
    let n = -(BigInt::from(2) * &a * &b + &d);
    let bb = beta as i64;
    let int = |v: i64| BigInt::from(v);
    let t_k = if k == 0 {
        BigInt::one()
    } else {
        // T_1 = 2D·P_1 with P_1(x) = 1 + (β+2)(x−1)/2.
        let mut t0 = BigInt::one();
        let mut t1 = int(2) * &d + int(bb + 2) * (&n - &d);
        for m in 2..=k as i64 {
            let sm = 2 * m + bb;
            let c0 = int(2 * m * (m + bb) * (sm - 2));
            let c1 = int(sm - 1) * (int(2 * sm * (sm - 2)) * &n - int(2 * bb * bb) * &d);
            let c2 = int(2 * (m - 1) * (m + bb - 1) * sm) * int(4) * &d * &d;
            let t2 = (c1 * &t1 - c2 * &t0) / c0;
            t0 = t1;
            t1 = t2;
        }
        t1
    };
    let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    let rhs = sign * num_traits::pow(a, beta as usize) * t_k;
    (lhs, rhs, e * beta + 2 * e * k + k)
}

/// |lhs − rhs| and both sides rounded to f64.
pub(crate) fn identity_values(phi: [f64; 3], beta: u32, k: u32) -> (f64, f64, f64) {
    let (lhs, rhs, shift) = identity_sides(phi, beta, k);
    let diff = (&lhs - &rhs).abs();
    (scaled_to_f64(&lhs, shift), scaled_to_f64(&rhs, shift), scaled_to_f64(&diff, shift))
}
