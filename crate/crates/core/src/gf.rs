//! Exact arithmetic in GF(p^k) for small prime powers.
//!
//! Elements are kept as reduced coefficient vectors over GF(p) (lowest degree
//! first), so equality and hashing are structural. Every element also has a
//! canonical index `Σ c_j p^j` in `0..q`; that index is the symbol an element
//! becomes when written into an array.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conway-style defining polynomials for the extension fields up to order 9,
/// lowest degree first.
const BUILTIN_MODULI: &[(u32, u32, &[u32])] = &[
    (2, 2, &[1, 1, 1]),    // x^2 + x + 1
    (2, 3, &[1, 1, 0, 1]), // x^3 + x + 1
    (3, 2, &[1, 0, 1]),    // x^2 + 1
];

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `q` as `p^k` with `p` prime, if possible.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut k = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

/// Parses a comma-separated coefficient list, lowest degree first ("1,1,1" is x²+x+1).
pub fn parse_modulus(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|c| c.trim().parse::<u32>().map_err(|_| Error::InvalidModulus(format!("bad coefficient {c:?} in {s:?}"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    rep: Vec<u32>,
}

impl FieldElement {
    pub fn coefficients(&self) -> &[u32] {
        &self.rep
    }

    pub fn is_zero(&self) -> bool {
        self.rep.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rep.len() == 1 {
            return write!(f, "{}", self.rep[0]);
        }
        let terms: Vec<String> = self
            .rep
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "x".to_string(),
                (1, c) => format!("{c}x"),
                (i, 1) => format!("x^{i}"),
                (i, c) => format!("{c}x^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join("+"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Mul,
    Inv,
    Neg,
}

/// A polynomial over a [`FieldSpec`]; `coeffs[i]` is the coefficient of `x^i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    pub coeffs: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<FieldElement>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    p: u32,
    k: u32,
    q: u32,
    /// Monic, length k + 1. `None` for prime fields.
    modulus: Option<Vec<u32>>,
}

impl FieldSpec {
    /// Builds GF(p^k). For `k > 1` the modulus must be monic of degree `k` and
    /// irreducible; when omitted the built-in table is consulted.
    pub fn new(p: u32, k: u32, modulus: Option<Vec<u32>>) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        if k == 0 {
            return Err(Error::InvalidParams("extension degree must be positive".into()));
        }
        let q = (p as u64)
            .checked_pow(k)
            .filter(|&q| q <= u32::MAX as u64)
            .ok_or_else(|| Error::InvalidParams(format!("{p}^{k} is too large")))? as u32;
        if k == 1 {
            if let Some(m) = modulus {
                return Err(Error::InvalidModulus(format!("prime field GF({p}) takes no modulus, got {m:?}")));
            }
            return Ok(Self { p, k, q, modulus: None });
        }
        let modulus = match modulus {
            Some(m) => m,
            None => BUILTIN_MODULI
                .iter()
                .find(|(bp, bk, _)| *bp == p && *bk == k)
                .map(|(_, _, m)| m.to_vec())
                .ok_or(Error::MissingModulus { p, k })?,
        };
        if modulus.len() != k as usize + 1 {
            return Err(Error::InvalidModulus(format!(
                "expected {} coefficients for degree {k}, got {}",
                k + 1,
                modulus.len()
            )));
        }
        if let Some(&c) = modulus.iter().find(|&&c| c >= p) {
            return Err(Error::InvalidModulus(format!("coefficient {c} is not below {p}")));
        }
        if modulus[k as usize] != 1 {
            return Err(Error::InvalidModulus("modulus must be monic".into()));
        }
        if !is_irreducible(p, &modulus) {
            return Err(Error::ReducibleModulus { p, modulus });
        }
        Ok(Self { p, k, q, modulus: Some(modulus) })
    }

    /// GF(q) for a prime power `q`, using the built-in modulus table when `q` is not prime.
    pub fn from_order(q: u32) -> Result<Self> {
        let (p, k) = prime_power(q as u64).ok_or(Error::NotPrimePower(q as u64))?;
        Self::new(p as u32, k, None)
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> Option<&[u32]> {
        self.modulus.as_deref()
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { rep: vec![0; self.k as usize] }
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// The element with canonical index `index` (base-p digits, lowest first).
    ///
    /// # Panics
    /// If `index >= q`.
    pub fn element(&self, index: u32) -> FieldElement {
        assert!(index < self.q, "index {index} out of range for GF({})", self.q);
        let mut rest = index;
        let rep = (0..self.k)
            .map(|_| {
                let c = rest % self.p;
                rest /= self.p;
                c
            })
            .collect();
        FieldElement { rep }
    }

    pub fn try_element(&self, coefficients: Vec<u32>) -> Result<FieldElement> {
        let e = FieldElement { rep: coefficients };
        self.check(&e)?;
        Ok(e)
    }

    pub fn index_of(&self, e: &FieldElement) -> u32 {
        e.rep.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    /// All elements in canonical index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(|i| self.element(i))
    }

    pub fn contains(&self, e: &FieldElement) -> bool {
        e.rep.len() == self.k as usize && e.rep.iter().all(|&c| c < self.p)
    }

    fn check(&self, e: &FieldElement) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(Error::ForeignElement(e.rep.clone()))
        }
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let rep = a.rep.iter().zip(&b.rep).map(|(x, y)| (x + y) % self.p).collect();
        FieldElement { rep }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        let rep = a.rep.iter().map(|&x| (self.p - x) % self.p).collect();
        FieldElement { rep }
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let p = self.p as u64;
        let k = self.k as usize;
        let mut prod = vec![0u64; 2 * k - 1];
        for (i, &x) in a.rep.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.rep.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        if let Some(m) = &self.modulus {
            // x^k = -(m_0 + ... + m_{k-1} x^{k-1})
            for d in (k..prod.len()).rev() {
                let c = prod[d];
                if c == 0 {
                    continue;
                }
                prod[d] = 0;
                for (j, &mj) in m[..k].iter().enumerate() {
                    let idx = d - k + j;
                    prod[idx] = (prod[idx] + (p - c) * mj as u64) % p;
                }
            }
        }
        prod.truncate(k);
        FieldElement { rep: prod.into_iter().map(|c| c as u32).collect() }
    }

    pub fn pow(&self, a: &FieldElement, mut e: u64) -> FieldElement {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        // a^(q-2) = a^-1 in a field of order q
        Ok(self.pow(a, self.q as u64 - 2))
    }

    /// Checked dispatch over the four basic operations.
    pub fn op(&self, op: FieldOp, a: &FieldElement, b: Option<&FieldElement>) -> Result<FieldElement> {
        self.check(a)?;
        if let Some(b) = b {
            self.check(b)?;
        }
        match op {
            FieldOp::Add => Ok(self.add(a, b.ok_or(Error::MissingOperand("add"))?)),
            FieldOp::Mul => Ok(self.mul(a, b.ok_or(Error::MissingOperand("mul"))?)),
            FieldOp::Neg => Ok(self.neg(a)),
            FieldOp::Inv => self.inv(a),
        }
    }

    /// Horner evaluation.
    pub fn evaluate(&self, poly: &Polynomial, at: &FieldElement) -> FieldElement {
        poly.coeffs.iter().rev().fold(self.zero(), |acc, c| self.add(&self.mul(&acc, at), c))
    }

    /// Coefficients of `g(z) = poly(a + z)`. Coefficient `j` is the `j`-th Hasse
    /// derivative of `poly` at `a`. The output has the same length as the input.
    pub fn taylor_shift(&self, poly: &Polynomial, a: &FieldElement) -> Polynomial {
        let len = poly.coeffs.len();
        let mut out: Vec<FieldElement> = Vec::with_capacity(len);
        // Horner in the ring of polynomials in z: acc <- acc * (a + z) + c
        for c in poly.coeffs.iter().rev() {
            let mut next = vec![self.zero(); out.len() + 1];
            for (j, coef) in out.iter().enumerate() {
                next[j] = self.add(&next[j], &self.mul(coef, a));
                next[j + 1] = self.add(&next[j + 1], coef);
            }
            next[0] = self.add(&next[0], c);
            out = next;
        }
        out.truncate(len);
        Polynomial { coeffs: out }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

/// Remainder of `num` modulo the monic `den` over GF(p), both lowest-degree first.
fn poly_rem(p: u32, num: &[u32], den: &[u32]) -> Vec<u32> {
    let p64 = p as u64;
    let mut r: Vec<u64> = num.iter().map(|&c| c as u64).collect();
    let dd = den.len() - 1;
    while r.len() > dd {
        let lead = r.pop().unwrap();
        if lead == 0 {
            continue;
        }
        let shift = r.len() - dd;
        for (j, &dj) in den[..dd].iter().enumerate() {
            r[shift + j] = (r[shift + j] + (p64 - lead) * dj as u64) % p64;
        }
    }
    r.into_iter().map(|c| c as u32).collect()
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn is_irreducible(p: u32, modulus: &[u32]) -> bool {
    let deg = modulus.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for idx in 0..count {
            let mut divisor = Vec::with_capacity(d + 1);
            let mut rest = idx;
            for _ in 0..d {
                divisor.push((rest % p as u64) as u32);
                rest /= p as u64;
            }
            divisor.push(1);
            if poly_rem(p, modulus, &divisor).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}
