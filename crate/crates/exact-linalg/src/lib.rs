//! Exact dense linear algebra over arbitrary-precision rationals and prime
//! fields.
//!
//! Scalar arithmetic is organized around [`ScalarDomain`]: a small context
//! object (the rationals, or a concrete prime field F_p) that constructs and
//! combines elements.  Matrices store plain element data; every operation
//! that needs arithmetic takes the domain explicitly, so prime moduli never
//! have to be smuggled into element types, and mixing scalar kinds is a
//! compile-time error.
//!
//! The crate provides
//! - exact rank: fraction-free (Bareiss) elimination over the rationals and
//!   Gaussian elimination over F_p, plus a naive division-based oracle;
//! - [`GradedComplexEval`], a chain of scalar matrices with the
//!   zero-composition contract checked at construction, and its Betti
//!   numbers;
//! - root-of-unity specialization: rational weight vectors become torus
//!   points over F_p via a deterministic generator of the right
//!   multiplicative order;
//! - multi-prime consensus for Betti numbers computed over several primes.

use std::fmt;

use num::bigint::Sign;
use num::{BigInt, BigRational, Integer, One, Signed, Zero};
use thiserror::Error;

/// Errors from matrix construction, complex assembly, and specialization.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinAlgError {
    /// Matrix data of the wrong length, or non-matching shapes.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A chain of matrices whose neighboring shapes cannot compose.
    #[error("matrices at degrees {degree} and {} cannot compose: cols of the higher map ({higher_cols}) != rows of the lower map ({lower_rows})", .degree + 1)]
    NonComposable {
        degree: usize,
        higher_cols: usize,
        lower_rows: usize,
    },
    /// The zero-composition contract failed.
    #[error("composition of the maps leaving degrees {degree} and {} is nonzero", .degree + 1)]
    NonzeroComposition { degree: usize },
    /// A modulus that is not a prime number.
    #[error("{p} is not prime")]
    NotPrime { p: u64 },
    /// A prime incompatible with the required root-of-unity order.
    #[error("prime {p} is not congruent to 1 modulo the weight denominator {m}")]
    IncompatiblePrime { p: u64, m: u64 },
    /// A rational whose denominator exceeds the supported range.
    #[error("weight denominator does not fit in 64 bits")]
    DenominatorOverflow,
    /// A denominator divisible by the field characteristic.
    #[error("denominator of a rational is divisible by the prime {p}")]
    DenominatorVanishes { p: u64 },
    /// Too few usable primes for a consensus computation.
    #[error("need at least 2 admissible primes, found {found}")]
    TooFewPrimes { found: usize },
    /// An underlying computation failed for one prime.
    #[error("builder failed for prime {p}: {message}")]
    BuilderFailed { p: u64, message: String },
}

// ---------------------------------------------------------------------------
// Scalar domains
// ---------------------------------------------------------------------------

/// A field of scalars, passed explicitly to every arithmetic operation.
pub trait ScalarDomain {
    /// The element representation.
    type Elem: Clone + PartialEq + fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse; `None` exactly for zero.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    /// Exact rank of a matrix over this domain.  The default is naive
    /// Gaussian elimination; domains override it with a faster exact method.
    fn rank(&self, m: &Matrix<Self::Elem>) -> usize
    where
        Self: Sized,
    {
        rank_naive(self, m)
    }
}

/// The field of arbitrary-precision rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Rationals;

impl ScalarDomain for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }

    /// Fraction-free (Bareiss) elimination on the denominator-cleared
    /// integer matrix, with max-absolute-value pivot selection.
    fn rank(&self, m: &Matrix<BigRational>) -> usize {
        if m.rows() == 0 || m.cols() == 0 {
            return 0;
        }
        // Clearing each row's denominators leaves the rank unchanged.
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(m.rows());
        for r in 0..m.rows() {
            let mut lcm = BigInt::one();
            for c in 0..m.cols() {
                lcm = lcm.lcm(m.get(r, c).denom());
            }
            let row = (0..m.cols())
                .map(|c| {
                    let e = m.get(r, c);
                    e.numer() * (&lcm / e.denom())
                })
                .collect();
            rows.push(row);
        }
        bareiss_rank(rows)
    }
}

/// Fraction-free elimination over the integers; all divisions are exact.
fn bareiss_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut rank = 0usize;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        // Max-absolute-value pivot bounds coefficient growth in practice.
        let mut pivot_row = None;
        let mut pivot_abs = BigInt::zero();
        for (r, row) in m.iter().enumerate().skip(rank) {
            let a = row[col].abs();
            if !a.is_zero() && a > pivot_abs {
                pivot_abs = a;
                pivot_row = Some(r);
            }
        }
        let Some(pr) = pivot_row else { continue };
        m.swap(rank, pr);
        let pivot = m[rank][col].clone();
        for r in rank + 1..rows {
            // Even zero-factor rows must be rescaled: the fraction-free
            // invariant keeps every entry a leading minor of the original.
            let factor = std::mem::replace(&mut m[r][col], BigInt::zero());
            for c in col + 1..cols {
                let num = &m[r][c] * &pivot - &factor * &m[rank][c];
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "fraction-free update must divide exactly");
                m[r][c] = q;
            }
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

/// A prime field F_p; elements are `u64` values reduced modulo `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    /// Validates primality (trial division; intended for moderate primes).
    pub fn new(p: u64) -> Result<Self, LinAlgError> {
        if !is_prime_u64(p) {
            return Err(LinAlgError::NotPrime { p });
        }
        Ok(PrimeField { p })
    }

    /// The characteristic p.
    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Reduces a signed integer into the field.
    pub fn embed_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    /// Reduces an arbitrary-precision integer into the field.
    pub fn embed_bigint(&self, v: &BigInt) -> u64 {
        let m = BigInt::from(self.p);
        let r = v.mod_floor(&m);
        let (sign, digits) = r.to_u64_digits();
        match sign {
            Sign::NoSign => 0,
            Sign::Plus => digits[0],
            Sign::Minus => unreachable!("mod_floor of a positive modulus is nonnegative"),
        }
    }

    /// Reduces a rational into the field; fails when p divides the
    /// denominator.
    pub fn embed_ratio(&self, v: &BigRational) -> Result<u64, LinAlgError> {
        let den = self.embed_bigint(v.denom());
        let inv = self
            .inv_u64(den)
            .ok_or(LinAlgError::DenominatorVanishes { p: self.p })?;
        Ok(self.mul_u64(self.embed_bigint(v.numer()), inv))
    }

    fn mul_u64(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    /// Modular exponentiation with a signed exponent (negative exponents use
    /// the inverse).
    pub fn pow(&self, base: u64, exp: i64) -> u64 {
        let b = base % self.p;
        if exp < 0 {
            let inv = self.inv_u64(b).expect("negative power of zero");
            return self.pow(inv, -exp);
        }
        let mut acc = 1u64;
        let mut b = b;
        let mut e = exp as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_u64(acc, b);
            }
            b = self.mul_u64(b, b);
            e >>= 1;
        }
        acc
    }

    fn inv_u64(&self, a: u64) -> Option<u64> {
        if a % self.p == 0 {
            None
        } else {
            Some(self.pow(a, self.p as i64 - 2))
        }
    }
}

impl ScalarDomain for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.p
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.p - b % self.p) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        self.mul_u64(*a, *b)
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.p - a % self.p) % self.p
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        self.inv_u64(*a)
    }
    fn is_zero(&self, a: &u64) -> bool {
        a % self.p == 0
    }

    /// Standard Gaussian elimination; every nonzero pivot is invertible.
    fn rank(&self, m: &Matrix<u64>) -> usize {
        let mut data: Vec<Vec<u64>> = (0..m.rows())
            .map(|r| (0..m.cols()).map(|c| m.get(r, c) % self.p).collect())
            .collect();
        let mut rank = 0usize;
        for col in 0..m.cols() {
            if rank == m.rows() {
                break;
            }
            let Some(pr) = (rank..m.rows()).find(|&r| data[r][col] != 0) else {
                continue;
            };
            data.swap(rank, pr);
            let inv = self.inv_u64(data[rank][col]).unwrap();
            for r in rank + 1..m.rows() {
                if data[r][col] == 0 {
                    continue;
                }
                let factor = self.mul_u64(data[r][col], inv);
                for c in col..m.cols() {
                    let sub = self.mul_u64(factor, data[rank][c]);
                    data[r][c] = (data[r][c] + self.p - sub) % self.p;
                }
            }
            rank += 1;
        }
        rank
    }
}

fn is_prime_u64(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d.checked_mul(d).map_or(false, |sq| sq <= p) {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// A dense row-major matrix of scalar elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Clone + PartialEq + fmt::Debug> Matrix<E> {
    /// Builds a matrix from row-major data of length `rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<E>) -> Result<Self, LinAlgError> {
        if data.len() != rows * cols {
            return Err(LinAlgError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// The all-zero matrix of the given shape.
    pub fn zeros<D: ScalarDomain<Elem = E>>(domain: &D, rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![domain.zero(); rows * cols],
        }
    }

    /// The k×k identity.
    pub fn identity<D: ScalarDomain<Elem = E>>(domain: &D, k: usize) -> Self {
        Matrix::from_fn(k, k, |r, c| if r == c { domain.one() } else { domain.zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &E {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: E) {
        self.data[r * self.cols + c] = v;
    }

    /// Row-major view of the entries.
    pub fn entries(&self) -> &[E] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    /// Applies `f` to every entry.
    pub fn map<F, T: Clone + PartialEq + fmt::Debug>(&self, mut f: F) -> Matrix<T>
    where
        F: FnMut(&E) -> T,
    {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut f).collect(),
        }
    }

    /// True when every entry is zero in the domain.
    pub fn is_zero<D: ScalarDomain<Elem = E>>(&self, domain: &D) -> bool {
        self.data.iter().all(|e| domain.is_zero(e))
    }

    /// Matrix product `self · rhs`.
    pub fn mul<D: ScalarDomain<Elem = E>>(&self, domain: &D, rhs: &Self) -> Result<Self, LinAlgError> {
        if self.cols != rhs.rows {
            return Err(LinAlgError::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(domain, self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if domain.is_zero(a) {
                    continue;
                }
                for c in 0..rhs.cols {
                    let term = domain.mul(a, rhs.get(k, c));
                    let cur = domain.add(out.get(r, c), &term);
                    out.set(r, c, cur);
                }
            }
        }
        Ok(out)
    }

    /// Entrywise sum.
    pub fn add<D: ScalarDomain<Elem = E>>(&self, domain: &D, rhs: &Self) -> Result<Self, LinAlgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinAlgError::ShapeMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, self.cols, |r, c| {
            domain.add(self.get(r, c), rhs.get(r, c))
        }))
    }

    /// Scalar multiple.
    pub fn scale<D: ScalarDomain<Elem = E>>(&self, domain: &D, s: &E) -> Self {
        self.map(|e| domain.mul(s, e))
    }
}

/// Naive division-based Gaussian elimination over any scalar domain; used as
/// the cross-check oracle for the optimized rank implementations.
pub fn rank_naive<D: ScalarDomain>(domain: &D, m: &Matrix<D::Elem>) -> usize {
    let mut data: Vec<Vec<D::Elem>> = (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m.get(r, c).clone()).collect())
        .collect();
    let mut rank = 0usize;
    for col in 0..m.cols() {
        if rank == m.rows() {
            break;
        }
        let Some(pr) = (rank..m.rows()).find(|&r| !domain.is_zero(&data[r][col])) else {
            continue;
        };
        data.swap(rank, pr);
        let inv = domain.inv(&data[rank][col]).expect("nonzero pivot");
        for r in rank + 1..m.rows() {
            if domain.is_zero(&data[r][col]) {
                continue;
            }
            let factor = domain.mul(&data[r][col], &inv);
            for c in col..m.cols() {
                let sub = domain.mul(&factor, &data[rank][c]);
                data[r][c] = domain.sub(&data[r][c], &sub);
            }
        }
        rank += 1;
    }
    rank
}

/// Exact rank over the domain's preferred elimination.
pub fn rank<D: ScalarDomain>(domain: &D, m: &Matrix<D::Elem>) -> usize {
    domain.rank(m)
}

/// Exact check that `a · b = 0` for rational matrices, clearing denominators
/// first so the product runs over the integers.  Much faster than forming the
/// rational product when the matrices are large and the answer is expected to
/// be zero.
pub fn rational_product_is_zero(
    a: &Matrix<BigRational>,
    b: &Matrix<BigRational>,
) -> Result<bool, LinAlgError> {
    if a.cols() != b.rows() {
        return Err(LinAlgError::ShapeMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let clear = |m: &Matrix<BigRational>| -> Vec<BigInt> {
        let lcm = m
            .entries()
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        m.entries()
            .iter()
            .map(|v| v.numer() * (&lcm / v.denom()))
            .collect()
    };
    let ai = clear(a);
    let bi = clear(b);
    let (rows, inner, cols) = (a.rows(), a.cols(), b.cols());
    let zero = BigInt::zero();
    for i in 0..rows {
        let mut acc = vec![BigInt::zero(); cols];
        for k in 0..inner {
            let lhs = &ai[i * inner + k];
            if lhs.is_zero() {
                continue;
            }
            for (slot, rhs) in acc.iter_mut().zip(&bi[k * cols..(k + 1) * cols]) {
                if !rhs.is_zero() {
                    *slot += lhs * rhs;
                }
            }
        }
        if acc.iter().any(|v| *v != zero) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Graded complexes
// ---------------------------------------------------------------------------

/// A finite complex of scalar matrices M_0, …, M_{d−1}, where M_q maps
/// degree q to degree q+1 (rows = target dimension, columns = source
/// dimension).  Construction verifies composability of neighboring shapes
/// and the zero-composition law M_{q+1} · M_q = 0.
#[derive(Debug, Clone)]
pub struct GradedComplexEval<D: ScalarDomain> {
    domain: D,
    maps: Vec<Matrix<D::Elem>>,
    dims: Vec<usize>,
}

impl<D: ScalarDomain> GradedComplexEval<D> {
    /// Checks shapes and zero composition; the degree named in an error is
    /// the lower of the two composed maps.
    pub fn new(domain: D, maps: Vec<Matrix<D::Elem>>) -> Result<Self, LinAlgError> {
        assert!(!maps.is_empty(), "a graded complex needs at least one map");
        for q in 0..maps.len() - 1 {
            if maps[q + 1].cols() != maps[q].rows() {
                return Err(LinAlgError::NonComposable {
                    degree: q,
                    higher_cols: maps[q + 1].cols(),
                    lower_rows: maps[q].rows(),
                });
            }
            let comp = maps[q + 1].mul(&domain, &maps[q])?;
            if !comp.is_zero(&domain) {
                return Err(LinAlgError::NonzeroComposition { degree: q });
            }
        }
        let mut dims: Vec<usize> = maps.iter().map(|m| m.cols()).collect();
        dims.push(maps.last().unwrap().rows());
        Ok(GradedComplexEval { domain, maps, dims })
    }

    /// The dimension of each degree, 0 ..= d.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// The map leaving degree q.
    pub fn map_at(&self, q: usize) -> &Matrix<D::Elem> {
        &self.maps[q]
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Betti numbers b_k = dim_k − rank(M_k) − rank(M_{k−1}).
    pub fn betti(&self) -> Vec<usize> {
        let ranks: Vec<usize> = self.maps.iter().map(|m| self.domain.rank(m)).collect();
        let d = self.maps.len();
        let mut out = Vec::with_capacity(d + 1);
        for k in 0..=d {
            let r_k = if k < d { ranks[k] } else { 0 };
            let r_prev = if k > 0 { ranks[k - 1] } else { 0 };
            let b = self.dims[k]
                .checked_sub(r_k + r_prev)
                .expect("rank-nullity bound violated");
            out.push(b);
        }
        debug_assert_eq!(
            alternating_sum(&out),
            self.euler(),
            "Betti alternating sum must equal the Euler characteristic"
        );
        out
    }

    /// Euler characteristic Σ (−1)^k dim_k.
    pub fn euler(&self) -> i64 {
        alternating_sum(&self.dims)
    }
}

/// Σ (−1)^k v_k.
pub fn alternating_sum(v: &[usize]) -> i64 {
    v.iter()
        .enumerate()
        .map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) })
        .sum()
}

// ---------------------------------------------------------------------------
// Root-of-unity specialization
// ---------------------------------------------------------------------------

/// A torus point over F_p whose coordinates are powers of one element g of
/// exact multiplicative order m: the mod-p shadow of t = exp(−2πiλ).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclotomicPoint {
    field: PrimeField,
    m: u64,
    g: u64,
    coords: Vec<u64>,
}

impl CyclotomicPoint {
    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// The common denominator m of the weight vector.
    pub fn order(&self) -> u64 {
        self.m
    }

    /// The chosen element of exact order m.
    pub fn generator(&self) -> u64 {
        self.g
    }

    /// The coordinates t_{i,j} = g^{−a_{i,j}}, in the same order as the
    /// input weights.
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }
}

/// Specializes a rational weight vector λ to the torus point
/// t_{i,j} = g^{−a_{i,j}} over F_p, where m is the least common denominator,
/// λ_{i,j} = a_{i,j}/m, and g is the smallest element of exact
/// multiplicative order m (searched upward from 2; m = 1 gives g = 1 and the
/// all-ones point).  Requires p ≡ 1 (mod m).
pub fn cyclotomic_point(weights: &[BigRational], p: u64) -> Result<CyclotomicPoint, LinAlgError> {
    let field = PrimeField::new(p)?;
    let mut m_big = BigInt::one();
    for w in weights {
        m_big = m_big.lcm(w.denom());
    }
    let m: u64 = u64::try_from(&m_big).map_err(|_| LinAlgError::DenominatorOverflow)?;
    if (p - 1) % m != 0 {
        return Err(LinAlgError::IncompatiblePrime { p, m });
    }
    let g = if m == 1 {
        1
    } else {
        (2..p)
            .find(|&c| has_exact_order(&field, c, m))
            .expect("a cyclic group of order p-1 contains elements of every divisor order")
    };
    let m_int = BigInt::from(m);
    let coords = weights
        .iter()
        .map(|w| {
            let a = w.numer() * (&m_int / w.denom());
            // Reduce the exponent −a modulo m before raising g to it.
            let e_big = (-a).mod_floor(&m_int);
            let e = u64::try_from(&e_big).expect("reduced exponent fits");
            field.pow(g, e as i64)
        })
        .collect();
    Ok(CyclotomicPoint { field, m, g, coords })
}

fn has_exact_order(field: &PrimeField, c: u64, m: u64) -> bool {
    if field.pow(c, m as i64) != 1 {
        return false;
    }
    // Exact order: no proper prime-quotient power collapses to 1.
    let mut rest = m;
    let mut d = 2u64;
    while d * d <= rest {
        if rest % d == 0 {
            if field.pow(c, (m / d) as i64) == 1 {
                return false;
            }
            while rest % d == 0 {
                rest /= d;
            }
        }
        d += 1;
    }
    if rest > 1 && field.pow(c, (m / rest) as i64) == 1 {
        return false;
    }
    true
}

// ---------------------------------------------------------------------------
// Multi-prime consensus
// ---------------------------------------------------------------------------

/// Betti numbers of one prime specialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeBetti {
    pub p: u64,
    pub betti: Vec<usize>,
}

/// The outcome of computing Betti numbers over several primes: per-prime
/// results, the per-degree minimum (the sound estimate, since specialization
/// can only inflate mod-p Betti numbers), and an agreement flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusReport {
    pub per_prime: Vec<PrimeBetti>,
    pub consensus: Vec<usize>,
    pub agreement: bool,
}

/// Runs `builder` for every prime, keeps the primes it accepts, and reduces
/// the per-prime Betti numbers to a consensus report.  A builder error marks
/// its prime inadmissible (e.g. p ≢ 1 mod m); fewer than two admissible
/// primes is an error.
pub fn multi_prime_betti<F>(primes: &[u64], mut builder: F) -> Result<ConsensusReport, LinAlgError>
where
    F: FnMut(u64) -> Result<GradedComplexEval<PrimeField>, LinAlgError>,
{
    let mut per_prime = Vec::new();
    for &p in primes {
        match builder(p) {
            Ok(cx) => per_prime.push(PrimeBetti { p, betti: cx.betti() }),
            Err(LinAlgError::IncompatiblePrime { .. }) | Err(LinAlgError::NotPrime { .. }) => continue,
            Err(e) => return Err(LinAlgError::BuilderFailed { p, message: e.to_string() }),
        }
    }
    if per_prime.len() < 2 {
        return Err(LinAlgError::TooFewPrimes { found: per_prime.len() });
    }
    let degrees = per_prime[0].betti.len();
    let mut consensus = vec![usize::MAX; degrees];
    let mut agreement = true;
    for pb in &per_prime {
        assert_eq!(pb.betti.len(), degrees, "all primes must grade identically");
        for (k, &b) in pb.betti.iter().enumerate() {
            consensus[k] = consensus[k].min(b);
        }
        if pb.betti != per_prime[0].betti {
            agreement = false;
        }
    }
    Ok(ConsensusReport { per_prime, consensus, agreement })
}
