//! Size bounds for ordered orthogonal arrays.
//!
//! Lower bounds are exact: the classical Rao bound for the depth-1 orthogonal
//! array underneath, and the trivial `q^t`. The random-construction upper
//! bound and the sampling size threshold both carry unspecified universal
//! constants; they are evaluated parametrically with
//! the caller's constant and never rounded down.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::design::{binomial, count_shapes};
use crate::error::{Error, Result};

pub const CONSTANT_CAVEAT: &str =
    "c and C are unspecified universal constants; values shown are parametric in the supplied c and C";

/// Largest exponent `ceil(c t)` that `existence_bound` will expand exactly.
const MAX_EXPONENT: u64 = 1 << 16;

/// Classical Rao bound for a strength-`t` orthogonal array on `n` columns.
pub fn rao_bound_oa(q: u32, n: usize, t: usize) -> Result<BigUint> {
    if q < 2 {
        return Err(Error::InvalidParams(format!("alphabet size q = {q} must be at least 2")));
    }
    if t > n {
        return Err(Error::InvalidParams(format!("Rao bound needs t <= n, got t = {t}, n = {n}")));
    }
    let q1 = BigUint::from(q - 1);
    let u = t / 2;
    let mut sum: BigUint = (0..=u).map(|i| binomial(n as u64, i as u64) * q1.pow(i as u32)).sum();
    if t % 2 == 1 {
        sum += binomial(n as u64 - 1, u as u64) * q1.pow(u as u32 + 1);
    }
    Ok(sum)
}

/// `max(Rao(q, n, t), q^t)`, with the Rao term only when `t <= n`.
pub fn ooa_lower_bound(q: u32, n: usize, r: usize, t: usize) -> BigUint {
    lower_bounds(q, n, r, t).2
}

/// `(trivial q^t, Rao term if applicable, max of both)`.
fn lower_bounds(q: u32, n: usize, _r: usize, t: usize) -> (BigUint, Option<BigUint>, BigUint) {
    let trivial = BigUint::from(q).pow(t as u32);
    let rao = (t <= n && q >= 2).then(|| rao_bound_oa(q, n, t).expect("checked ranges"));
    let best = match &rao {
        Some(r) if *r > trivial => r.clone(),
        _ => trivial.clone(),
    };
    (trivial, rao, best)
}

fn ceil_ratio(x: &BigRational) -> BigInt {
    x.numer().div_ceil(x.denom())
}

fn floor_ratio(x: &BigRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

fn ratio_pow(x: &BigRational, e: u32) -> BigRational {
    BigRational::new(x.numer().pow(e), x.denom().pow(e))
}

/// `ceil((c q (n + t) / t)^ceil(c t))`. The exponent is rounded up before
/// exponentiation; `r` does not enter the formula.
pub fn existence_bound(q: u32, n: usize, _r: usize, t: usize, c: &BigRational) -> Result<BigUint> {
    if !c.is_positive() {
        return Err(Error::InvalidParams("constant c must be positive".into()));
    }
    if t == 0 {
        return Err(Error::InvalidParams("strength must be positive".into()));
    }
    let exponent = ceil_ratio(&(c * BigRational::from_integer(BigInt::from(t))));
    let exponent = exponent
        .to_u64()
        .filter(|&e| e <= MAX_EXPONENT)
        .ok_or_else(|| Error::ScaleExceeded(format!("exponent ceil(c t) = {exponent} too large")))?;
    let base = c * BigRational::new(BigInt::from(q as u64 * (n + t) as u64), BigInt::from(t));
    let value = ceil_ratio(&ratio_pow(&base, exponent as u32));
    Ok(value.to_biguint().expect("positive base"))
}

/// Rigorous enclosure `lo <= ln(y) <= hi` for an integer `y >= 1`.
pub fn ln_bounds(y: &BigUint) -> (BigRational, BigRational) {
    assert!(!y.is_zero(), "ln(0) is undefined");
    let k = y.bits() - 1;
    let pow2: BigInt = BigInt::one() << k;
    let y = BigInt::from(y.clone());
    // y = 2^k m with m in [1, 2); ln m = 2 atanh((m - 1) / (m + 1))
    let z_m = BigRational::new(&y - &pow2, &y + &pow2);
    let z_2 = BigRational::new(BigInt::one(), BigInt::from(3));
    let (m_lo, m_hi) = atanh_bounds(&z_m);
    let (l2_lo, l2_hi) = atanh_bounds(&z_2);
    let two = BigRational::from_integer(BigInt::from(2));
    let kq = BigRational::from_integer(BigInt::from(k));
    let lo = &two * (&kq * l2_lo + m_lo);
    let hi = &two * (&kq * l2_hi + m_hi);
    (round_to_grid(&lo, false), round_to_grid(&hi, true))
}

const ATANH_TERMS: u32 = 40;

/// `atanh(z)` for `0 <= z <= 1/3`, from the odd power series and a geometric tail bound.
fn atanh_bounds(z: &BigRational) -> (BigRational, BigRational) {
    let mut sum = BigRational::zero();
    let z2 = z * z;
    let mut power = z.clone();
    for i in 0..ATANH_TERMS {
        sum += &power / BigRational::from_integer(BigInt::from(2 * i + 1));
        power = &power * &z2;
    }
    let one = BigRational::one();
    let tail = &power / (BigRational::from_integer(BigInt::from(2 * ATANH_TERMS + 1)) * (&one - &z2));
    let hi = &sum + tail;
    (sum, hi)
}

/// Outward rounding to a 2^-128 grid keeps the rationals small.
fn round_to_grid(x: &BigRational, up: bool) -> BigRational {
    let scale: BigInt = BigInt::one() << 128u32;
    let scaled = x * BigRational::from_integer(scale.clone());
    let n = if up { ceil_ratio(&scaled) } else { floor_ratio(&scaled) };
    BigRational::new(n, scale)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimsRecord {
    #[serde(with = "crate::serde_big")]
    pub size_x: BigUint,
    #[serde(with = "crate::serde_big")]
    pub size_s: BigUint,
    #[serde(with = "crate::serde_big")]
    pub size_f: BigUint,
    #[serde(with = "crate::serde_big")]
    pub size_fprime: BigUint,
    #[serde(with = "crate::serde_big")]
    pub dim_v: BigUint,
    #[serde(with = "crate::serde_big")]
    pub c1: BigUint,
    #[serde(with = "crate::serde_big")]
    pub c2: BigUint,
    #[serde(with = "crate::serde_big")]
    pub c3: BigUint,
}

/// `Σ_{T ∈ S'} (q-1)^{|T|}` without enumerating `S'`.
///
/// A domain is fixed by its deepest column per block; a block whose deepest
/// column has depth `d >= 1` contributes `Σ_k C(d-1, k-1) (q-1)^k = (q-1) q^(d-1)`.
pub fn fprime_count(q: u32, n: usize, r: usize, t: usize) -> BigUint {
    let weight = |d: usize| -> BigUint {
        if d == 0 {
            BigUint::one()
        } else {
            BigUint::from(q - 1) * BigUint::from(q).pow(d as u32 - 1)
        }
    };
    // dp[s] = weighted number of depth profiles with total depth s
    let mut dp = vec![BigUint::zero(); t + 1];
    dp[0] = BigUint::one();
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); t + 1];
        for (s, acc) in dp.iter().enumerate() {
            if acc.is_zero() {
                continue;
            }
            for d in 0..=r.min(t - s) {
                next[s + d] += acc * weight(d);
            }
        }
        dp = next;
    }
    dp.into_iter().sum()
}

pub fn dims(q: u32, n: usize, r: usize, t: usize) -> Result<DimsRecord> {
    crate::design::ArrayParams::new(q, n, r, t, 1)?;
    let size_x = BigUint::from(q).pow((n * r) as u32);
    let size_s = count_shapes(n, r, t);
    let c1 = BigUint::from(q).pow(t as u32);
    let size_f = &c1 * &size_s;
    let size_fprime = fprime_count(q, n, r, t);
    let c3 = (BigUint::one() << (t + 1)) * &size_f;
    Ok(DimsRecord { size_x, size_s, size_f, dim_v: size_fprime.clone(), size_fprime, c1, c2: BigUint::one(), c3 })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KlpThreshold {
    /// `ceil` of an upper enclosure of `C c2 c3^2 (dim V)^6 ln(2 c3 dim V)^6`.
    #[serde(with = "crate::serde_big")]
    pub raw_threshold: BigUint,
    /// Smallest admissible multiple of `c1`, if one fits below `|X|`.
    #[serde(with = "crate::serde_big::option")]
    pub smallest_size: Option<BigUint>,
    #[serde(with = "crate::serde_big")]
    pub size_x: BigUint,
    #[serde(with = "crate::serde_big")]
    pub c1: BigUint,
}

impl KlpThreshold {
    /// Whether `N` satisfies `min(N, |X| - N) >= threshold` and `c1 | N`.
    pub fn admits(&self, size: &BigUint) -> bool {
        size <= &self.size_x
            && (size % &self.c1).is_zero()
            && size >= &self.raw_threshold
            && (&self.size_x - size) >= self.raw_threshold
    }
}

pub fn klp_threshold(q: u32, n: usize, r: usize, t: usize, big_c: &BigRational) -> Result<KlpThreshold> {
    if !big_c.is_positive() {
        return Err(Error::InvalidParams("constant C must be positive".into()));
    }
    let d = dims(q, n, r, t)?;
    let log_arg = BigUint::from(2u32) * &d.c3 * &d.dim_v;
    let (_, ln_hi) = ln_bounds(&log_arg);
    let int = |v: &BigUint| BigRational::from_integer(BigInt::from(v.clone()));
    let raw = big_c * int(&d.c2) * ratio_pow(&int(&d.c3), 2) * ratio_pow(&int(&d.dim_v), 6) * ratio_pow(&ln_hi, 6);
    let raw_threshold = ceil_ratio(&raw).to_biguint().expect("positive threshold");
    let first = raw_threshold.div_ceil(&d.c1).max(BigUint::one()) * &d.c1;
    let smallest_size = (first <= d.size_x && &d.size_x - &first >= raw_threshold).then_some(first);
    Ok(KlpThreshold { raw_threshold, smallest_size, size_x: d.size_x, c1: d.c1 })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub q: u32,
    pub n: usize,
    pub r: usize,
    pub t: usize,
    #[serde(with = "crate::serde_big")]
    pub lower_trivial: BigUint,
    #[serde(with = "crate::serde_big::option")]
    pub lower_rao: Option<BigUint>,
    pub rao_applicable: bool,
    #[serde(with = "crate::serde_big")]
    pub lower: BigUint,
    pub c: String,
    #[serde(with = "crate::serde_big")]
    pub existence_upper: BigUint,
    #[serde(rename = "C")]
    pub big_c: String,
    pub klp: KlpThreshold,
    pub dims: DimsRecord,
    pub caveat: &'static str,
}

pub fn bound_report(q: u32, n: usize, r: usize, t: usize, c: &BigRational, big_c: &BigRational) -> Result<BoundReport> {
    let dims = dims(q, n, r, t)?;
    let (lower_trivial, lower_rao, lower) = lower_bounds(q, n, r, t);
    Ok(BoundReport {
        q,
        n,
        r,
        t,
        rao_applicable: lower_rao.is_some(),
        lower_trivial,
        lower_rao,
        lower,
        c: c.to_string(),
        existence_upper: existence_bound(q, n, r, t, c)?,
        big_c: big_c.to_string(),
        klp: klp_threshold(q, n, r, t, big_c)?,
        dims,
        caveat: CONSTANT_CAVEAT,
    })
}

/// Parses "3", "3/4" or "0.75" exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidParams(format!("cannot parse {s:?} as a rational"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" { BigInt::zero() } else { int.parse().map_err(|_| bad())? };
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = int.abs() * &den + frac;
        return Ok(BigRational::new(if negative { -mag } else { mag }, den));
    }
    let v: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(v))
}

/// Parameters of a `(t, m, s)`-net in base `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NetParams {
    pub t: u32,
    pub m: u32,
    pub s: usize,
    pub base: u32,
}

/// An OOA parameter tuple `strength-(q, blocks, depth, lambda)` of size `size`.
/// Strength and depth may be 0 for degenerate nets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OoaFamily {
    pub strength: u32,
    pub q: u32,
    pub blocks: usize,
    pub depth: u32,
    #[serde(with = "crate::serde_big")]
    pub lambda: BigUint,
    #[serde(with = "crate::serde_big")]
    pub size: BigUint,
}

/// `(t, m, s)`-net in base `q` ↦ `(m-t)-(q, s, m-t, q^t)` OOA of size `q^m`.
pub fn net_to_ooa(net: NetParams) -> Result<OoaFamily> {
    let NetParams { t, m, s, base: q } = net;
    if q < 2 || s == 0 || t > m {
        return Err(Error::InvalidParams(format!(
            "need q >= 2, s >= 1, 0 <= t <= m; got q = {q}, s = {s}, t = {t}, m = {m}"
        )));
    }
    Ok(OoaFamily {
        strength: m - t,
        q,
        blocks: s,
        depth: m - t,
        lambda: BigUint::from(q).pow(t),
        size: BigUint::from(q).pow(m),
    })
}

/// Inverse of [`net_to_ooa`]: needs depth = strength and `lambda = q^k`.
pub fn ooa_to_net(q: u32, n: usize, r: usize, t: usize, lambda: &BigUint) -> Result<NetParams> {
    if q < 2 || n == 0 {
        return Err(Error::InvalidParams(format!("need q >= 2 and n >= 1, got q = {q}, n = {n}")));
    }
    if r != t {
        return Err(Error::NotInvertible(format!("depth {r} differs from strength {t}")));
    }
    let mut rest = lambda.clone();
    let mut k = 0u32;
    let qb = BigUint::from(q);
    if rest.is_zero() {
        return Err(Error::NotInvertible("lambda must be positive".into()));
    }
    while (&rest % &qb).is_zero() {
        rest /= &qb;
        k += 1;
    }
    if !rest.is_one() {
        return Err(Error::NotInvertible(format!("lambda = {lambda} is not a power of {q}")));
    }
    Ok(NetParams { t: k, m: t as u32 + k, s: n, base: q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn rao_examples() {
        assert_eq!(rao_bound_oa(2, 4, 2).unwrap(), big(5));
        assert_eq!(rao_bound_oa(2, 4, 3).unwrap(), big(8));
        assert_eq!(rao_bound_oa(3, 5, 0).unwrap(), big(1));
        assert!(rao_bound_oa(2, 2, 3).is_err());
        assert!(rao_bound_oa(1, 2, 1).is_err());
        for q in 2..8 {
            for n in 1..8 {
                assert_eq!(rao_bound_oa(q, n, 1).unwrap(), big(q as u64));
            }
        }
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(ooa_lower_bound(2, 2, 2, 2), big(4));
        assert_eq!(ooa_lower_bound(2, 4, 1, 2), big(5));
        assert_eq!(ooa_lower_bound(3, 1, 1, 1), big(3));
        // t > n: only the trivial bound
        assert_eq!(ooa_lower_bound(2, 1, 3, 3), big(8));
    }

    #[test]
    fn existence_bound_examples() {
        assert_eq!(existence_bound(2, 2, 2, 2, &rat("1")).unwrap(), big(16));
        assert_eq!(existence_bound(2, 2, 2, 2, &rat("2")).unwrap(), big(4096));
        assert_eq!(existence_bound(2, 2, 2, 2, &rat("1/1000000")).unwrap(), big(1));
        assert!(existence_bound(2, 2, 2, 2, &rat("0")).is_err());
        // ct = 3/2 rounds up to exponent 2; base 3/4 * 2 * 4 / 2 = 3
        assert_eq!(existence_bound(2, 2, 2, 2, &rat("3/4")).unwrap(), big(9));
    }

    #[test]
    fn ln_enclosures() {
        for y in [1u64, 2, 3, 10, 1536, 1 << 40, 123_456_789_012] {
            let (lo, hi) = ln_bounds(&big(y));
            let approx = (y as f64).ln();
            assert!(lo <= hi);
            assert!(lo.to_f64().unwrap() <= approx + 1e-12, "{y}");
            assert!(hi.to_f64().unwrap() >= approx - 1e-12, "{y}");
            assert!((&hi - &lo).to_f64().unwrap() < 1e-30);
        }
        let (lo, hi) = ln_bounds(&big(1));
        assert!(lo <= BigRational::zero() && hi >= BigRational::zero());
    }

    #[test]
    fn dims_examples() {
        let d = dims(2, 2, 2, 2).unwrap();
        assert_eq!(
            (&d.size_x, &d.size_s, &d.size_f, &d.size_fprime, &d.c1, &d.c2, &d.c3),
            (&big(16), &big(3), &big(12), &big(8), &big(4), &big(1), &big(96))
        );
        let d = dims(2, 2, 1, 2).unwrap();
        assert_eq!((d.size_s, d.size_f), (big(1), big(4)));
        for q in 2..6 {
            let d = dims(q, 1, 1, 1).unwrap();
            assert_eq!((d.size_s, d.size_f, d.c1), (big(1), big(q as u64), big(q as u64)));
        }
        assert_eq!(dims(3, 2, 1, 2).unwrap().size_fprime, big(9));
    }

    #[test]
    fn klp_threshold_examples() {
        let k = klp_threshold(2, 2, 2, 2, &rat("1")).unwrap();
        assert_eq!(k.smallest_size, None);
        // 96^2 * 8^6 * ln(1536)^6 ≈ 3.8e14
        let approx = 96f64.powi(2) * 8f64.powi(6) * 1536f64.ln().powi(6);
        let raw = k.raw_threshold.to_f64().unwrap();
        assert!(raw >= approx && raw <= approx * (1.0 + 1e-12) + 1.0);

        let k = klp_threshold(2, 4, 2, 2, &rat("1")).unwrap();
        assert_eq!(k.smallest_size, None);
        assert!(k.raw_threshold > big(256));

        let tiny = BigRational::new(BigInt::one(), BigInt::from(10u64).pow(30));
        let k = klp_threshold(2, 2, 2, 2, &tiny).unwrap();
        assert_eq!(k.raw_threshold, big(1));
        assert_eq!(k.smallest_size, Some(big(4)));
        assert!(klp_threshold(2, 2, 2, 2, &rat("-1")).is_err());
    }

    #[test]
    fn klp_threshold_is_least_admissible_multiple() {
        for (q, n, r, t) in [(2, 6, 3, 1), (3, 4, 2, 1), (2, 8, 2, 1)] {
            for e in [20u32, 24, 28, 32] {
                let c = BigRational::new(BigInt::one(), BigInt::from(10u64).pow(e));
                let k = klp_threshold(q, n, r, t, &c).unwrap();
                if let Some(size) = &k.smallest_size {
                    assert!(k.admits(size));
                    assert!((size % &k.c1).is_zero());
                    if size > &k.c1 {
                        assert!(!k.admits(&(size - &k.c1)));
                    }
                }
            }
        }
    }

    #[test]
    fn net_translation() {
        let fam = net_to_ooa(NetParams { t: 0, m: 2, s: 2, base: 2 }).unwrap();
        assert_eq!((fam.strength, fam.blocks, fam.depth), (2, 2, 2));
        assert_eq!((fam.lambda.clone(), fam.size.clone()), (big(1), big(4)));
        let fam = net_to_ooa(NetParams { t: 3, m: 3, s: 5, base: 3 }).unwrap();
        assert_eq!((fam.strength, fam.lambda), (0, big(27)));
        assert!(net_to_ooa(NetParams { t: 4, m: 3, s: 1, base: 2 }).is_err());

        let net = ooa_to_net(2, 5, 3, 3, &big(2)).unwrap();
        assert_eq!(net, NetParams { t: 1, m: 4, s: 5, base: 2 });
        let back = net_to_ooa(net).unwrap();
        assert_eq!((back.strength, back.q, back.blocks, back.depth, back.lambda), (3, 2, 5, 3, big(2)));
        assert!(matches!(ooa_to_net(2, 5, 2, 3, &big(2)), Err(Error::NotInvertible(_))));
        assert!(matches!(ooa_to_net(3, 5, 3, 3, &big(6)), Err(Error::NotInvertible(_))));
        assert_eq!(ooa_to_net(2, 2, 2, 2, &big(1)).unwrap(), NetParams { t: 0, m: 2, s: 2, base: 2 });
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(rat("3/4"), BigRational::new(BigInt::from(3), BigInt::from(4)));
        assert_eq!(rat("0.75"), BigRational::new(BigInt::from(3), BigInt::from(4)));
        assert_eq!(rat("-1.5"), BigRational::new(BigInt::from(-3), BigInt::from(2)));
        assert_eq!(rat("2"), BigRational::from_integer(BigInt::from(2)));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
    }

    proptest! {
        #[test]
        fn dims_invariants(q in 2u32..6, n in 1usize..6, r in 1usize..5, t in 1usize..8) {
            prop_assume!(t <= n * r);
            let d = dims(q, n, r, t).unwrap();
            prop_assert_eq!(&d.size_f, &(&d.c1 * &d.size_s));
            prop_assert!(d.size_fprime <= d.size_f);
            prop_assert_eq!(&d.dim_v, &d.size_fprime);
            if r >= t && n >= t {
                prop_assert_eq!(d.size_s, binomial((n + t - 1) as u64, t as u64));
            }
        }

        #[test]
        fn rao_monotone_in_columns(q in 2u32..6, n in 1usize..8, r in 1usize..4, t in 0usize..8) {
            prop_assume!(t <= n);
            prop_assert!(rao_bound_oa(q, n, t).unwrap() <= rao_bound_oa(q, n * r, t).unwrap());
        }
    }
}
