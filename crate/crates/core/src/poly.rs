//! Dense univariate polynomials over `Q` and binary forms built on them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Coefficients from the constant term up; no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                _ if a.is_one() => {}
                _ => write!(f, "{a}*")?,
            }
            match i {
                0 => {}
                1 => write!(f, "s")?,
                _ => write!(f, "s^{i}")?,
            }
        }
        Ok(())
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `s − root`.
    pub fn linear_root(root: &BigRational) -> Self {
        Self::new(vec![-root.clone(), BigRational::one()])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&(BigRational::one() / self.lead()))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        let lead = divisor.lead();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = &rem[i + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] -= &c * dc;
                }
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn rem(&self, divisor: &Poly) -> Poly {
        self.div_rem(divisor).1
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = x.rem(&y);
            x = y;
            y = r;
        }
        x.monic()
    }

    /// Exact quotient; panics if `divisor` does not divide.
    pub fn exact_div(&self, divisor: &Poly) -> Poly {
        let (q, r) = self.div_rem(divisor);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Yun's algorithm: monic square-free `a_i` with `self = c · Π a_i^i`.
    /// Entry `i − 1` of the result is `a_i`, possibly `1`.
    pub fn square_free_decomposition(&self) -> Vec<Poly> {
        if self.degree().unwrap_or(0) == 0 {
            return vec![];
        }
        let f = self.monic();
        let df = f.derivative();
        let mut a = Poly::gcd(&f, &df);
        let mut b = f.exact_div(&a);
        let mut c = df.exact_div(&a);
        let mut d = c - b.derivative();
        let mut out = Vec::new();
        loop {
            a = Poly::gcd(&b, &d);
            out.push(a.clone());
            b = b.exact_div(&a);
            if b.degree() == Some(0) {
                break;
            }
            c = d.exact_div(&a);
            d = c - b.derivative();
        }
        while out.last().is_some_and(|p| p.degree() == Some(0)) {
            out.pop();
        }
        out
    }

    /// Distinct rational roots, ascending.
    pub fn rational_roots(&self) -> Vec<BigRational> {
        let Some(deg) = self.degree() else {
            return vec![];
        };
        if deg == 0 {
            return vec![];
        }
        // Clear denominators, then strip the power of s.
        let lcm = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self.coeffs.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
        let shift = ints.iter().position(|c| !c.is_zero()).unwrap_or(0);
        let ints = &ints[shift..];
        let mut roots = Vec::new();
        if shift > 0 {
            roots.push(BigRational::zero());
        }
        if ints.len() > 1 {
            let lead = ints.last().expect("nonempty").abs();
            let constant = ints[0].abs();
            let ps = divisors(&constant);
            let qs = divisors(&lead);
            for p in &ps {
                for q in &qs {
                    for sign in [1, -1] {
                        let cand = BigRational::new(p * BigInt::from(sign), q.clone());
                        if !roots.contains(&cand) && self.eval(&cand).is_zero() {
                            roots.push(cand);
                        }
                    }
                }
            }
        }
        roots.sort();
        roots
    }
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut i = BigInt::one();
    while &i * &i <= n {
        if (&n % &i).is_zero() {
            out.push(i.clone());
            let j = &n / &i;
            if j != i {
                out.push(j);
            }
        }
        i += 1;
    }
    out
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        &self + &rhs
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
                        + rhs.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
                })
                .collect(),
        )
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self + &(-rhs)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

/// A binary form `Σ c_i z^i w^{d−i}` of fixed degree `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryForm {
    degree: u32,
    /// Dehomogenised at `w = 1`; its degree is at most `degree`.
    affine: Poly,
}

impl BinaryForm {
    /// `coeffs[i]` multiplies `z^i w^{d−i}`; `d = coeffs.len() − 1`.
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        let degree = coeffs.len().saturating_sub(1) as u32;
        Self {
            degree,
            affine: Poly::new(coeffs),
        }
    }

    pub fn from_affine(degree: u32, affine: Poly) -> Self {
        Self { degree, affine }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn affine(&self) -> &Poly {
        &self.affine
    }

    pub fn is_zero(&self) -> bool {
        self.affine.is_zero()
    }

    /// Vanishing order at `[1 : 0]`.
    pub fn order_at_infinity(&self) -> u32 {
        match self.affine.degree() {
            None => self.degree,
            Some(k) => self.degree - k as u32,
        }
    }

    /// Value at `[z : w]`.
    pub fn eval(&self, z: &BigRational, w: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        let mut wpow = BigRational::one();
        let coeffs = self.affine.coeffs();
        let mut terms = vec![BigRational::zero(); self.degree as usize + 1];
        for i in (0..=self.degree as usize).rev() {
            terms[i] = wpow.clone();
            wpow *= w;
        }
        let mut zpow = BigRational::one();
        for (i, t) in terms.iter().enumerate() {
            if let Some(c) = coeffs.get(i) {
                acc += c * &zpow * t;
            }
            zpow *= z;
        }
        acc
    }
}
