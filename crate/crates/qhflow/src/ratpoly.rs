//! Exact sparse bivariate polynomials and planar polynomial vector fields.
//!
//! Coefficients are generic over [`Coeff`]; the crate instantiates the exact
//! lane at arbitrary-precision rationals ([`crate::RatPoly`]) and a float lane
//! at f64 for numerical orbit evaluation. Terms are kept in a canonical
//! graded-lexicographic order (by total degree, then x-exponent) so printed
//! output and pivot choices are deterministic.

use crate::error::{Error, Result};
use crate::scalar::{Coeff, ExactField};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Hard cap on exponents; compositions and powers that push past it fail fast.
pub const EXPONENT_CAP: u32 = 512;

/// Exponent pair of a monomial `x^i y^j`, ordered graded-lexicographically by
/// `(i + j, i)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct Exp {
    pub i: u32,
    pub j: u32,
}

impl Exp {
    pub fn new(i: u32, j: u32) -> Self {
        Exp { i, j }
    }

    pub fn total(self) -> u32 {
        self.i + self.j
    }

    fn checked_mul(self, other: Exp) -> Result<Exp> {
        let i = self.i + other.i;
        let j = self.j + other.j;
        if i > EXPONENT_CAP || j > EXPONENT_CAP {
            return Err(Error::ExponentOverflow(u64::from(i.max(j)), EXPONENT_CAP));
        }
        Ok(Exp { i, j })
    }
}

impl Ord for Exp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.total(), self.i).cmp(&(other.total(), other.i))
    }
}

impl PartialOrd for Exp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse bivariate polynomial. No zero coefficients are stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparsePolynomial<C: Coeff> {
    terms: BTreeMap<Exp, C>,
}

impl<C: Coeff> Default for SparsePolynomial<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> SparsePolynomial<C> {
    pub fn zero() -> Self {
        SparsePolynomial { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.insert_add(Exp::new(0, 0), c);
        p
    }

    pub fn monomial(i: u32, j: u32, c: C) -> Self {
        let mut p = Self::zero();
        p.insert_add(Exp::new(i, j), c);
        p
    }

    pub fn var_x() -> Self {
        Self::monomial(1, 0, C::one())
    }

    pub fn var_y() -> Self {
        Self::monomial(0, 1, C::one())
    }

    pub fn from_terms<I: IntoIterator<Item = (u32, u32, C)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (i, j, c) in it {
            p.insert_add(Exp::new(i, j), c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in canonical ascending graded-lex order.
    pub fn iter_terms(&self) -> impl Iterator<Item = (Exp, &C)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeff(&self, i: u32, j: u32) -> C {
        self.terms.get(&Exp::new(i, j)).cloned().unwrap_or_else(C::zero)
    }

    pub fn insert_add(&mut self, e: Exp, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn scalar_mul(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = Self::zero();
        for (e, a) in self.iter_terms() {
            out.insert_add(e, a.clone() * c.clone());
        }
        out
    }

    pub fn scalar_div(&self, c: &C) -> Self {
        let mut out = Self::zero();
        for (e, a) in self.iter_terms() {
            out.insert_add(e, a.clone() / c.clone());
        }
        out
    }

    fn mul_impl(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero();
        for (ea, ca) in self.iter_terms() {
            for (eb, cb) in other.iter_terms() {
                out.insert_add(ea.checked_mul(eb)?, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<Self> {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul_impl(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.mul_impl(&base)?;
            }
        }
        Ok(acc)
    }

    /// Exact substitution `x -> fx, y -> fy`. Truncation, when wanted, is a
    /// separate step so that untruncated composition stays exact.
    pub fn compose(&self, fx: &Self, fy: &Self) -> Result<Self> {
        // Cache powers of the images.
        let max_i = self.terms.keys().map(|e| e.i).max().unwrap_or(0);
        let max_j = self.terms.keys().map(|e| e.j).max().unwrap_or(0);
        let mut xp: Vec<Self> = Vec::with_capacity(max_i as usize + 1);
        let mut yp: Vec<Self> = Vec::with_capacity(max_j as usize + 1);
        xp.push(Self::one());
        yp.push(Self::one());
        for k in 1..=max_i {
            let next = xp[(k - 1) as usize].mul_impl(fx)?;
            xp.push(next);
        }
        for k in 1..=max_j {
            let next = yp[(k - 1) as usize].mul_impl(fy)?;
            yp.push(next);
        }
        let mut out = Self::zero();
        for (e, c) in self.iter_terms() {
            let t = xp[e.i as usize].mul_impl(&yp[e.j as usize])?;
            for (te, tc) in t.iter_terms() {
                out.insert_add(te, c.clone() * tc.clone());
            }
        }
        Ok(out)
    }

    pub fn dx(&self) -> Self {
        let mut out = Self::zero();
        for (e, c) in self.iter_terms() {
            if e.i > 0 {
                let mut k = C::zero();
                for _ in 0..e.i {
                    k = k + C::one();
                }
                out.insert_add(Exp::new(e.i - 1, e.j), c.clone() * k);
            }
        }
        out
    }

    pub fn dy(&self) -> Self {
        let mut out = Self::zero();
        for (e, c) in self.iter_terms() {
            if e.j > 0 {
                let mut k = C::zero();
                for _ in 0..e.j {
                    k = k + C::one();
                }
                out.insert_add(Exp::new(e.i, e.j - 1), c.clone() * k);
            }
        }
        out
    }

    pub fn eval(&self, x: &C, y: &C) -> C {
        let mut acc = C::zero();
        for (e, c) in self.iter_terms() {
            let mut t = c.clone();
            for _ in 0..e.i {
                t = t * x.clone();
            }
            for _ in 0..e.j {
                t = t * y.clone();
            }
            acc = acc + t;
        }
        acc
    }

    /// Substitute a constant for x, leaving a univariate polynomial in y.
    pub fn substitute_x(&self, v: &C) -> UniPoly<C> {
        let max_j = self.terms.keys().map(|e| e.j).max().unwrap_or(0) as usize;
        let mut coeffs = vec![C::zero(); max_j + 1];
        for (e, c) in self.iter_terms() {
            let mut t = c.clone();
            for _ in 0..e.i {
                t = t * v.clone();
            }
            coeffs[e.j as usize] = coeffs[e.j as usize].clone() + t;
        }
        UniPoly::new(coeffs)
    }

    pub fn truncate_total_degree(&self, d: u32) -> Self {
        self.filter_terms(|e| e.total() <= d)
    }

    pub fn filter_terms<F: Fn(Exp) -> bool>(&self, keep: F) -> Self {
        let mut out = Self::zero();
        for (e, c) in self.iter_terms() {
            if keep(e) {
                out.insert_add(e, c.clone());
            }
        }
        out
    }

    pub fn map_coeffs<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> SparsePolynomial<D> {
        let mut out = SparsePolynomial::<D>::zero();
        for (e, c) in self.iter_terms() {
            out.insert_add(e, f(c));
        }
        out
    }

    pub fn max_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.total()).max()
    }
}

impl<C: ExactField> SparsePolynomial<C> {
    /// First nonzero coefficient ratio `self / other`, verified on every term.
    /// Returns `None` when `self` is not an exact scalar multiple of `other`.
    pub fn proportionality(&self, other: &Self) -> Option<C> {
        if other.is_zero() {
            return if self.is_zero() { Some(C::zero()) } else { None };
        }
        if self.is_zero() {
            return Some(C::zero());
        }
        if self.terms.len() != other.terms.len() {
            return None;
        }
        let (e0, c0) = other.iter_terms().next().unwrap();
        let s0 = self.terms.get(&e0)?;
        let ratio = s0.clone() / c0.clone();
        for (e, c) in other.iter_terms() {
            let s = self.terms.get(&e)?;
            if s.clone() != ratio.clone() * c.clone() {
                return None;
            }
        }
        Some(ratio)
    }
}

impl<C: Coeff> Add for &SparsePolynomial<C> {
    type Output = SparsePolynomial<C>;
    fn add(self, rhs: Self) -> SparsePolynomial<C> {
        let mut out = self.clone();
        for (e, c) in rhs.iter_terms() {
            out.insert_add(e, c.clone());
        }
        out
    }
}

impl<C: Coeff> Sub for &SparsePolynomial<C> {
    type Output = SparsePolynomial<C>;
    fn sub(self, rhs: Self) -> SparsePolynomial<C> {
        let mut out = self.clone();
        for (e, c) in rhs.iter_terms() {
            out.insert_add(e, -c.clone());
        }
        out
    }
}

impl<C: Coeff> Neg for &SparsePolynomial<C> {
    type Output = SparsePolynomial<C>;
    fn neg(self) -> SparsePolynomial<C> {
        self.map_coeffs(|c| -c.clone())
    }
}

impl<C: Coeff> Mul for &SparsePolynomial<C> {
    type Output = SparsePolynomial<C>;
    fn mul(self, rhs: Self) -> SparsePolynomial<C> {
        self.mul_impl(rhs).expect("exponent cap exceeded in polynomial product")
    }
}

impl<C: Coeff> Add for SparsePolynomial<C> {
    type Output = SparsePolynomial<C>;
    fn add(self, rhs: Self) -> SparsePolynomial<C> {
        &self + &rhs
    }
}

impl<C: Coeff> Sub for SparsePolynomial<C> {
    type Output = SparsePolynomial<C>;
    fn sub(self, rhs: Self) -> SparsePolynomial<C> {
        &self - &rhs
    }
}

impl<C: Coeff> Neg for SparsePolynomial<C> {
    type Output = SparsePolynomial<C>;
    fn neg(self) -> SparsePolynomial<C> {
        -&self
    }
}

impl<C: Coeff> Mul for SparsePolynomial<C> {
    type Output = SparsePolynomial<C>;
    fn mul(self, rhs: Self) -> SparsePolynomial<C> {
        &self * &rhs
    }
}

fn fmt_monomial(e: Exp) -> String {
    let mut parts = Vec::new();
    match e.i {
        0 => {}
        1 => parts.push("x".to_string()),
        k => parts.push(format!("x^{k}")),
    }
    match e.j {
        0 => {}
        1 => parts.push("y".to_string()),
        k => parts.push(format!("y^{k}")),
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

impl<C: Coeff> fmt::Display for SparsePolynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        // Descending canonical order reads like handwritten polynomials.
        for (e, c) in self.terms.iter().rev() {
            let cs = c.to_string();
            let (neg, mag) = match cs.strip_prefix('-') {
                Some(rest) => (true, rest.to_string()),
                None => (false, cs),
            };
            let mono = fmt_monomial(*e);
            let body = if mono == "1" {
                mag
            } else if mag == "1" {
                mono
            } else {
                format!("{mag}*{mono}")
            };
            if first {
                if neg {
                    write!(f, "-{body}")?;
                } else {
                    write!(f, "{body}")?;
                }
                first = false;
            } else if neg {
                write!(f, " - {body}")?;
            } else {
                write!(f, " + {body}")?;
            }
        }
        Ok(())
    }
}

/// Planar polynomial vector field `(P, Q)`.
#[derive(Clone, PartialEq, Debug)]
pub struct PlanarField<C: Coeff> {
    pub p: SparsePolynomial<C>,
    pub q: SparsePolynomial<C>,
}

impl<C: Coeff> PlanarField<C> {
    pub fn new(p: SparsePolynomial<C>, q: SparsePolynomial<C>) -> Self {
        PlanarField { p, q }
    }

    pub fn zero() -> Self {
        PlanarField { p: SparsePolynomial::zero(), q: SparsePolynomial::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    /// `self ∧ other = P1·Q2 − Q1·P2`.
    pub fn wedge(&self, other: &Self) -> SparsePolynomial<C> {
        &(&self.p * &other.q) - &(&self.q * &other.p)
    }

    pub fn divergence(&self) -> SparsePolynomial<C> {
        &self.p.dx() + &self.q.dy()
    }

    /// Lie derivative of the scalar `v` along the field.
    pub fn lie_derivative(&self, v: &SparsePolynomial<C>) -> SparsePolynomial<C> {
        &(&self.p * &v.dx()) + &(&self.q * &v.dy())
    }

    pub fn scalar_mul(&self, c: &C) -> Self {
        PlanarField { p: self.p.scalar_mul(c), q: self.q.scalar_mul(c) }
    }

    /// Multiply both components by a scalar polynomial.
    pub fn poly_mul(&self, s: &SparsePolynomial<C>) -> Self {
        PlanarField { p: &self.p * s, q: &self.q * s }
    }

    pub fn map_coeffs<D: Coeff, F: Fn(&C) -> D + Copy>(&self, f: F) -> PlanarField<D> {
        PlanarField { p: self.p.map_coeffs(f), q: self.q.map_coeffs(f) }
    }
}

impl<C: Coeff> Add for &PlanarField<C> {
    type Output = PlanarField<C>;
    fn add(self, rhs: Self) -> PlanarField<C> {
        PlanarField { p: &self.p + &rhs.p, q: &self.q + &rhs.q }
    }
}

impl<C: Coeff> Sub for &PlanarField<C> {
    type Output = PlanarField<C>;
    fn sub(self, rhs: Self) -> PlanarField<C> {
        PlanarField { p: &self.p - &rhs.p, q: &self.q - &rhs.q }
    }
}

impl<C: Coeff> Neg for &PlanarField<C> {
    type Output = PlanarField<C>;
    fn neg(self) -> PlanarField<C> {
        PlanarField { p: -&self.p, q: -&self.q }
    }
}

impl<C: Coeff> fmt::Display for PlanarField<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

/// Hamiltonian field `X_h = (−∂h/∂y, ∂h/∂x)`.
pub fn hamiltonian_field<C: Coeff>(h: &SparsePolynomial<C>) -> PlanarField<C> {
    PlanarField { p: -&h.dy(), q: h.dx() }
}

/// Dense univariate polynomial (ascending coefficients, no trailing zeros).
#[derive(Clone, PartialEq, Debug)]
pub struct UniPoly<C: Coeff> {
    coeffs: Vec<C>,
}

impl<C: Coeff> UniPoly<C> {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: C) -> Self {
        Self::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).cloned().unwrap_or_else(C::zero)
    }

    pub fn leading(&self) -> Option<&C> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &C) -> C {
        let mut acc = C::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let mut m = C::zero();
            for _ in 0..k {
                m = m + C::one();
            }
            out.push(c.clone() * m);
        }
        Self::new(out)
    }

    /// Embed into the bivariate ring using x as the variable.
    pub fn to_bivariate_x(&self) -> SparsePolynomial<C> {
        SparsePolynomial::from_terms(
            self.coeffs.iter().enumerate().map(|(k, c)| (k as u32, 0, c.clone())),
        )
    }
}

impl<C: ExactField> UniPoly<C> {
    /// Euclidean remainder; the divisor must be nonzero.
    pub fn rem(&self, div: &Self) -> Self {
        assert!(!div.is_zero(), "division by the zero polynomial");
        let dd = div.degree().unwrap();
        let lead = div.leading().unwrap().clone();
        let mut r = self.coeffs.clone();
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1;
            let c = r[k].clone();
            if c.is_zero() {
                r.pop();
                continue;
            }
            let f = c / lead.clone();
            let shift = k - dd;
            for (m, dc) in div.coeffs.iter().enumerate() {
                let idx = shift + m;
                r[idx] = r[idx].clone() - f.clone() * dc.clone();
            }
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
        }
        Self::new(r)
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            None => Self::zero(),
            Some(l) => {
                let l = l.clone();
                Self::new(self.coeffs.iter().map(|c| c.clone() / l.clone()).collect())
            }
        }
    }

    /// Monic gcd; errors when both arguments are zero.
    pub fn gcd(&self, other: &Self) -> Result<Self> {
        if self.is_zero() && other.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        Ok(a.monic())
    }

    pub fn squarefree_part(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if self.degree() == Some(0) {
            return Ok(self.monic());
        }
        let g = self.gcd(&self.derivative())?;
        if g.degree() == Some(0) {
            return Ok(self.monic());
        }
        // Exact division self / g via repeated remainder-free steps.
        Ok(self.div_exact(&g).monic())
    }

    /// Exact quotient; panics if the division is not exact.
    pub fn div_exact(&self, div: &Self) -> Self {
        assert!(!div.is_zero(), "division by the zero polynomial");
        let dd = div.degree().unwrap();
        let lead = div.leading().unwrap().clone();
        let mut r = self.coeffs.clone();
        let qd = match self.degree() {
            None => return Self::zero(),
            Some(sd) => {
                assert!(sd >= dd, "inexact polynomial division");
                sd - dd
            }
        };
        let mut q = vec![C::zero(); qd + 1];
        while r.len() > dd {
            let k = r.len() - 1;
            let c = r[k].clone();
            if c.is_zero() {
                r.pop();
                continue;
            }
            let f = c / lead.clone();
            let shift = k - dd;
            q[shift] = f.clone();
            for (m, dc) in div.coeffs.iter().enumerate() {
                let idx = shift + m;
                r[idx] = r[idx].clone() - f.clone() * dc.clone();
            }
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
        }
        assert!(r.is_empty(), "inexact polynomial division");
        Self::new(q)
    }
}

/// Interval endpoint for real-root counting.
#[derive(Clone, Debug)]
pub enum Endpoint<C> {
    NegInf,
    Finite(C),
    PosInf,
}

fn sign_at<C: ExactField>(p: &UniPoly<C>, at: &Endpoint<C>) -> i8 {
    match at {
        Endpoint::Finite(x) => {
            let v = p.eval(x);
            if v.is_zero() {
                0
            } else if v.is_positive() {
                1
            } else {
                -1
            }
        }
        Endpoint::PosInf => match p.leading() {
            None => 0,
            Some(l) => {
                if l.is_positive() {
                    1
                } else {
                    -1
                }
            }
        },
        Endpoint::NegInf => match p.degree() {
            None => 0,
            Some(d) => {
                let l = p.leading().unwrap();
                let s = if l.is_positive() { 1 } else { -1 };
                if d % 2 == 0 {
                    s
                } else {
                    -s
                }
            }
        },
    }
}

fn sign_variations(signs: &[i8]) -> usize {
    let mut count = 0;
    let mut last: Option<i8> = None;
    for &s in signs {
        if s == 0 {
            continue;
        }
        if let Some(l) = last {
            if l != s {
                count += 1;
            }
        }
        last = Some(s);
    }
    count
}

/// Number of distinct real roots of `u` in the half-open interval `(lo, hi]`,
/// by a Sturm sequence over exact coefficients. The zero polynomial is an
/// error; multiple roots are counted once.
pub fn sturm_real_root_count<C: ExactField>(
    u: &UniPoly<C>,
    lo: &Endpoint<C>,
    hi: &Endpoint<C>,
) -> Result<usize> {
    if u.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let p = u.squarefree_part()?;
    if p.degree() == Some(0) {
        return Ok(0);
    }
    let mut chain = vec![p.clone(), p.derivative()];
    while !chain.last().unwrap().is_zero() {
        let n = chain.len();
        let r = chain[n - 2].rem(&chain[n - 1]);
        chain.push(UniPoly::new(r.coeffs.iter().map(|c| -c.clone()).collect()));
    }
    chain.pop();
    let v_lo: Vec<i8> = chain.iter().map(|q| sign_at(q, lo)).collect();
    let v_hi: Vec<i8> = chain.iter().map(|q| sign_at(q, hi)).collect();
    let a = sign_variations(&v_lo);
    let b = sign_variations(&v_hi);
    Ok(a.saturating_sub(b))
}

/// Monic gcd of two univariate polynomials (spec-facing wrapper).
pub fn univariate_gcd<C: ExactField>(u: &UniPoly<C>, v: &UniPoly<C>) -> Result<UniPoly<C>> {
    u.gcd(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, RatPoly, Rational};

    fn x() -> RatPoly {
        RatPoly::var_x()
    }
    fn y() -> RatPoly {
        RatPoly::var_y()
    }

    #[test]
    fn difference_of_squares() {
        let a = &x() + &y();
        let b = &x() - &y();
        let prod = &a * &b;
        let expect = &(&x() * &x()) - &(&y() * &y());
        assert_eq!(prod, expect);
    }

    #[test]
    fn monomial_derivative() {
        // d/dy (x^4/4 + y^4/4) = y^3
        let h = RatPoly::from_terms([(4, 0, rat(1, 4)), (0, 4, rat(1, 4))]);
        assert_eq!(h.dy(), RatPoly::monomial(0, 3, rat(1, 1)));
    }

    #[test]
    fn substitution_then_truncation() {
        // y^2 with y -> y + x^2, truncated at total degree 3: y^2 + 2x^2 y
        let p = RatPoly::monomial(0, 2, rat(1, 1));
        let sub = p.compose(&x(), &(&y() + &RatPoly::monomial(2, 0, rat(1, 1)))).unwrap();
        let truncated = sub.truncate_total_degree(3);
        let expect = RatPoly::from_terms([(0, 2, rat(1, 1)), (2, 1, rat(2, 1))]);
        assert_eq!(truncated, expect);
    }

    #[test]
    fn exponent_cap_fails_fast() {
        let p = RatPoly::monomial(300, 0, rat(1, 1));
        let err = p.pow(2).unwrap_err();
        assert!(matches!(err, Error::ExponentOverflow(..)));
    }

    #[test]
    fn wedge_examples() {
        let d0 = PlanarField::new(x(), y());
        assert!(d0.wedge(&d0).is_zero());
        let xh = PlanarField::new(
            RatPoly::monomial(0, 3, rat(-1, 1)),
            RatPoly::monomial(3, 0, rat(1, 1)),
        );
        let w = d0.wedge(&xh);
        let four_h = RatPoly::from_terms([(4, 0, rat(1, 1)), (0, 4, rat(1, 1))]);
        assert_eq!(w, four_h);
        let e1 = PlanarField::new(RatPoly::one(), RatPoly::zero());
        let e2 = PlanarField::new(RatPoly::zero(), RatPoly::one());
        assert_eq!(e1.wedge(&e2), RatPoly::one());
    }

    #[test]
    fn divergence_examples() {
        let h = RatPoly::from_terms([(4, 0, rat(1, 4)), (0, 4, rat(1, 4))]);
        let xh = hamiltonian_field(&h);
        assert!(xh.divergence().is_zero());
        let id = PlanarField::new(x(), y());
        assert_eq!(id.divergence(), RatPoly::constant(rat(2, 1)));
        let hd0 = id.poly_mul(&h);
        assert_eq!(hd0.divergence(), h.scalar_mul(&rat(6, 1)));
    }

    #[test]
    fn lie_derivative_examples() {
        let h = RatPoly::from_terms([(4, 0, rat(1, 4)), (0, 4, rat(1, 4))]);
        let xh = hamiltonian_field(&h);
        assert!(xh.lie_derivative(&h).is_zero());
        // Prop-15-style field: L_F (4y^3 - 3x^4) = 4x^2 (4y^3 - 3x^4)
        let f = PlanarField::new(
            RatPoly::from_terms([(0, 2, rat(1, 1)), (3, 0, rat(1, 1))]),
            RatPoly::from_terms([(3, 0, rat(1, 1)), (2, 1, rat(4, 3))]),
        );
        let w = RatPoly::from_terms([(0, 3, rat(4, 1)), (4, 0, rat(-3, 1))]);
        let lhs = f.lie_derivative(&w);
        let rhs = &RatPoly::monomial(2, 0, rat(4, 1)) * &w;
        assert_eq!(lhs, rhs);
    }

    fn uni(cs: &[(i64, i64)]) -> UniPoly<Rational> {
        UniPoly::new(cs.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    #[test]
    fn sturm_examples() {
        // s^2 + 1: no real roots
        let p = uni(&[(1, 1), (0, 1), (1, 1)]);
        assert_eq!(sturm_real_root_count(&p, &Endpoint::NegInf, &Endpoint::PosInf).unwrap(), 0);
        // s^2 - 1: two
        let p = uni(&[(-1, 1), (0, 1), (1, 1)]);
        assert_eq!(sturm_real_root_count(&p, &Endpoint::NegInf, &Endpoint::PosInf).unwrap(), 2);
        // s^3 - s on (0, +inf): one (half-open at 0)
        let p = uni(&[(0, 1), (-1, 1), (0, 1), (1, 1)]);
        assert_eq!(
            sturm_real_root_count(&p, &Endpoint::Finite(rat(0, 1)), &Endpoint::PosInf).unwrap(),
            1
        );
        // zero polynomial is an error
        assert!(sturm_real_root_count(
            &UniPoly::<Rational>::zero(),
            &Endpoint::NegInf,
            &Endpoint::PosInf
        )
        .is_err());
        // multiple roots counted once: (s-1)^2 (s+2)
        let p = uni(&[(2, 1), (-3, 1), (0, 1), (1, 1)]);
        assert_eq!(sturm_real_root_count(&p, &Endpoint::NegInf, &Endpoint::PosInf).unwrap(), 2);
    }

    #[test]
    fn gcd_examples() {
        let s2 = uni(&[(0, 1), (0, 1), (1, 1)]);
        let s = uni(&[(0, 1), (1, 1)]);
        assert_eq!(univariate_gcd(&s2, &s).unwrap(), s);
        let a = uni(&[(1, 1), (0, 1), (1, 1)]);
        let b = uni(&[(-1, 1), (1, 1)]);
        assert_eq!(univariate_gcd(&a, &b).unwrap(), UniPoly::constant(rat(1, 1)));
        // gcd(s^3 - 3s + 2, 3s^2 - 3) = s - 1
        let a = uni(&[(2, 1), (-3, 1), (0, 1), (1, 1)]);
        let b = uni(&[(-3, 1), (0, 1), (3, 1)]);
        assert_eq!(univariate_gcd(&a, &b).unwrap(), uni(&[(-1, 1), (1, 1)]));
    }

    #[test]
    fn display_is_canonical() {
        let p = RatPoly::from_terms([(2, 0, rat(1, 1)), (0, 2, rat(-1, 1)), (0, 0, rat(1, 3))]);
        assert_eq!(p.to_string(), "x^2 - y^2 + 1/3");
    }
}
