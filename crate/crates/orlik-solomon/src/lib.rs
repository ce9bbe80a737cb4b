//! Orlik–Solomon algebra of a discriminantal arrangement, with the
//! multiplication operator `μ(λ) = ω_λ ∧ −` computed by two independent
//! routes.
//!
//! Elements are stored on the broken-circuit-free monomial basis provided by
//! `index-combinatorics`, with exact rational coefficients.  Matrices follow
//! the column convention: one column per domain basis element, one row per
//! codomain basis element, both in basis-enumeration order.
//!
//! The two routes for `μ` are
//! * [`mu_naive`] — wedge the weight one-form against every basis monomial
//!   and straighten the result, and
//! * [`mu_closed_form`] — assemble the matrix blockwise by recursion on the
//!   restricted arrangement, with the off-diagonal block filled in from
//!   admissible index sets.
//!
//! Both are linear in the weight vector, which [`mu_directions`] exploits to
//! cache one integer matrix per hyperplane; fast exact composition checks
//! then run in `i128` arithmetic instead of big rationals.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use exact_linalg::{Matrix, Rationals};
use index_combinatorics::{
    admissible_sets, enumerate_basis, hyperplane_pairs, ArrangementParams, BasisIndex, Pair,
};
use num::traits::ToPrimitive;
use num::{BigInt, BigRational, One, Zero};
use thiserror::Error;

/// Errors for weight-vector construction.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum OSError {
    /// The coordinate list does not match the number of hyperplanes.
    #[error("{arrangement} carries {expected} hyperplane weights, got {got}")]
    WeightLength {
        arrangement: String,
        expected: usize,
        got: usize,
    },
}

fn ratio(value: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

/// A rational weight for every hyperplane of one arrangement, in the global
/// coordinate order (pairs sorted by upper index, then lower index).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector {
    params: ArrangementParams,
    coords: Vec<BigRational>,
}

impl WeightVector {
    /// Wraps a coordinate list, checking its length against the arrangement.
    pub fn new(params: ArrangementParams, coords: Vec<BigRational>) -> Result<Self, OSError> {
        let expected = params.hyperplane_count();
        if coords.len() != expected {
            return Err(OSError::WeightLength {
                arrangement: params.to_string(),
                expected,
                got: coords.len(),
            });
        }
        Ok(Self { params, coords })
    }

    /// The zero weight vector.
    pub fn zeros(params: ArrangementParams) -> Self {
        Self {
            params,
            coords: vec![BigRational::zero(); params.hyperplane_count()],
        }
    }

    /// Builds a weight vector from integer coordinates.
    pub fn from_integers(params: ArrangementParams, values: &[i64]) -> Result<Self, OSError> {
        Self::new(params, values.iter().map(|&v| ratio(v)).collect())
    }

    /// The arrangement these weights belong to.
    pub fn params(&self) -> ArrangementParams {
        self.params
    }

    /// All coordinates in the global order.
    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    /// The weight of one hyperplane.
    ///
    /// Panics if the pair is not a hyperplane of this arrangement.
    pub fn get(&self, pair: Pair) -> &BigRational {
        let idx = self.params.pair_index(pair).unwrap_or_else(|| {
            panic!(
                "({}, {}) is not a hyperplane of {}",
                pair.i(),
                pair.j(),
                self.params
            )
        });
        &self.coords[idx]
    }

    /// Drops the weights at the lowest level, producing weights for the
    /// restricted arrangement.  `None` when there is no smaller arrangement.
    pub fn restrict(&self) -> Option<WeightVector> {
        let hat = self.params.restricted()?;
        let skip = self.params.ell() as usize;
        Some(WeightVector {
            params: hat,
            coords: self.coords[skip..].to_vec(),
        })
    }
}

/// A homogeneous algebra element: a rational combination of basis monomials
/// of one fixed degree.  Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OSElement {
    degree: usize,
    terms: BTreeMap<BasisIndex, BigRational>,
}

impl OSElement {
    /// The zero element of the given degree.
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// The multiplicative unit (degree zero, coefficient one).
    pub fn unit() -> Self {
        Self::from_basis(BasisIndex::unit())
    }

    /// A single basis monomial with coefficient one.
    pub fn from_basis(index: BasisIndex) -> Self {
        let mut terms = BTreeMap::new();
        let degree = index.degree();
        terms.insert(index, BigRational::one());
        Self { degree, terms }
    }

    /// The homogeneous degree this element lives in.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Whether every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored (nonzero) terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Iterates over `(basis index, coefficient)` pairs in basis order.
    pub fn terms(&self) -> impl Iterator<Item = (&BasisIndex, &BigRational)> + '_ {
        self.terms.iter()
    }

    /// The coefficient of one basis monomial (zero when absent).
    pub fn coefficient(&self, index: &BasisIndex) -> BigRational {
        self.terms.get(index).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Sum of two elements of the same degree.
    ///
    /// Panics when the degrees differ: the algebra is graded and we never
    /// form inhomogeneous combinations.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(
            self.degree, other.degree,
            "cannot add elements of different degrees"
        );
        let mut out = self.clone();
        for (ix, c) in other.terms() {
            out.add_term(ix.clone(), c.clone());
        }
        out
    }

    /// Difference of two elements of the same degree.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    /// Scalar multiple.
    pub fn scale(&self, scalar: &BigRational) -> Self {
        if scalar.is_zero() {
            return Self::zero(self.degree);
        }
        Self {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(ix, c)| (ix.clone(), c * scalar))
                .collect(),
        }
    }

    fn add_term(&mut self, index: BasisIndex, coeff: BigRational) {
        use std::collections::btree_map::Entry;
        if coeff.is_zero() {
            return;
        }
        debug_assert_eq!(index.degree(), self.degree);
        match self.terms.entry(index) {
            Entry::Vacant(slot) => {
                slot.insert(coeff);
            }
            Entry::Occupied(mut slot) => {
                let sum = slot.get() + &coeff;
                if sum.is_zero() {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }
}

fn basis_factors(index: &BasisIndex) -> Vec<Pair> {
    index
        .i_set()
        .iter()
        .zip(index.j_set())
        .map(|(&i, &j)| Pair::new(i, j).expect("basis monomials factor into valid pairs"))
        .collect()
}

/// Rewrites a product of degree-one generators into the monomial basis.
///
/// `sign` (±1) multiplies the whole result, so a caller that already knows
/// the parity of a factor permutation can fold it in directly.
///
/// Every factor must be a hyperplane pair of the arrangement (lower index
/// below upper index, upper index above the deleted levels); anything else
/// is a programming error and panics.  The rewriting replaces the leftmost
/// adjacent factor pair that shares an upper index: either the connecting
/// pair of lower indices sits at a deleted level and the monomial dies, or
/// the product splits into two monomials whose upper-index multisets are
/// strictly smaller, so the loop terminates.
pub fn normal_form(factors: &[Pair], sign: i8, params: ArrangementParams) -> OSElement {
    assert!(sign == 1 || sign == -1, "sign must be +1 or -1");
    let level = params.ell() + 1;
    for p in factors {
        assert!(
            p.j() >= level && p.j() <= params.n(),
            "factor ({}, {}) is not a hyperplane of {}",
            p.i(),
            p.j(),
            params
        );
    }
    let degree = factors.len();
    let mut result = OSElement::zero(degree);
    if degree > params.top_degree() {
        return result;
    }
    let mut work: Vec<(BigRational, Vec<Pair>)> = vec![(ratio(sign as i64), factors.to_vec())];
    while let Some((mut coeff, mut mono)) = work.pop() {
        // A repeated factor squares to zero.
        let duplicate = (0..mono.len())
            .any(|a| (a + 1..mono.len()).any(|b| mono[a] == mono[b]));
        if duplicate {
            continue;
        }
        // Stable sort by upper index; the generators anticommute, so the
        // parity of the applied permutation enters the coefficient.
        let inversions: usize = (0..mono.len())
            .map(|a| (a + 1..mono.len()).filter(|&b| mono[a].j() > mono[b].j()).count())
            .sum();
        if inversions % 2 == 1 {
            coeff = -coeff;
        }
        mono.sort_by_key(|p| p.j());
        let clash = (0..mono.len().saturating_sub(1)).find(|&p| mono[p].j() == mono[p + 1].j());
        let p = match clash {
            None => {
                // Upper indices strictly increase: this is a basis monomial.
                let i_set: Vec<u32> = mono.iter().map(|p| p.i()).collect();
                let j_set: Vec<u32> = mono.iter().map(|p| p.j()).collect();
                let index = BasisIndex::new(&i_set, &j_set, params)
                    .expect("strictly increasing upper indices form a basis monomial");
                result.add_term(index, coeff);
                continue;
            }
            Some(p) => p,
        };
        let (mut lo, mut hi) = (mono[p], mono[p + 1]);
        if lo.i() > hi.i() {
            std::mem::swap(&mut lo, &mut hi);
            coeff = -coeff;
        }
        // lo = (i, k) and hi = (i', k) with i < i' < k.  The relation sends
        // the product to (i, i') ∧ ((i', k) − (i, k)) — unless level i' was
        // deleted, in which case the product is zero.
        if hi.i() < level {
            continue;
        }
        let bridge = Pair::new(lo.i(), hi.i()).expect("lower indices are ordered");
        let upper_hi = Pair::new(hi.i(), lo.j()).expect("i' < k");
        let upper_lo = Pair::new(lo.i(), lo.j()).expect("i < k");
        let mut rest = mono;
        rest.remove(p + 1);
        rest.remove(p);
        let mut plus = rest.clone();
        plus.insert(p, upper_hi);
        plus.insert(p, bridge);
        let mut minus = rest;
        minus.insert(p, upper_lo);
        minus.insert(p, bridge);
        work.push((coeff.clone(), plus));
        work.push((-coeff, minus));
    }
    result
}

/// Exterior product of two elements, straightened onto the basis.
pub fn wedge(x: &OSElement, y: &OSElement, params: ArrangementParams) -> OSElement {
    let degree = x.degree() + y.degree();
    let mut result = OSElement::zero(degree);
    if degree > params.top_degree() {
        return result;
    }
    for (ix, cx) in x.terms() {
        for (iy, cy) in y.terms() {
            let mut factors = basis_factors(ix);
            factors.extend(basis_factors(iy));
            let scale = cx * cy;
            for (b, c) in normal_form(&factors, 1, params).terms() {
                result.add_term(b.clone(), c * &scale);
            }
        }
    }
    result
}

/// The weight one-form `ω_λ = Σ λ_{i,j} a_{i,j}`.
pub fn omega(weights: &WeightVector) -> OSElement {
    let params = weights.params();
    let mut out = OSElement::zero(1);
    for pair in hyperplane_pairs(params) {
        let c = weights.get(pair);
        if !c.is_zero() {
            let index = BasisIndex::new(&[pair.i()], &[pair.j()], params)
                .expect("a hyperplane pair is a degree-one basis monomial");
            out.add_term(index, c.clone());
        }
    }
    out
}

/// Matrix of `μ(λ): A^q → A^{q+1}` computed directly: wedge `ω_λ` against
/// every degree-`q` basis monomial and straighten.
///
/// Column convention: column `c` holds the image of the `c`-th degree-`q`
/// basis monomial, expanded over the degree-`q+1` basis rows.
pub fn mu_naive(params: ArrangementParams, q: usize, weights: &WeightVector) -> Matrix<BigRational> {
    assert_eq!(
        weights.params(),
        params,
        "weight vector belongs to a different arrangement"
    );
    let row_basis = enumerate_basis(params, q + 1);
    let col_basis = enumerate_basis(params, q);
    let row_pos: BTreeMap<BasisIndex, usize> = row_basis.iter().cloned().zip(0..).collect();
    let n_rows = row_basis.len();
    let n_cols = col_basis.len();
    let om = omega(weights);
    let mut data = vec![BigRational::zero(); n_rows * n_cols];
    for (c, index) in col_basis.iter().enumerate() {
        let image = wedge(&om, &OSElement::from_basis(index.clone()), params);
        for (b, coeff) in image.terms() {
            let r = row_pos[b];
            data[r * n_cols + c] = coeff.clone();
        }
    }
    Matrix::new(n_rows, n_cols, data).expect("dimensions fixed by the basis enumeration")
}

/// Entry of the correction block: the coefficient tying the column monomial
/// `(I, J)` (no lowest-level factor) to the row monomial `((m, R), {level}∪J)`.
///
/// The sum runs over admissible index sets of every truncation of `(I, J)`
/// that is compatible with the row's lower indices `R`; each admissible set
/// contributes the weight of its final value paired with the truncation's
/// last level, and a perfect match (`R = I`) additionally contributes the
/// weight at the lowest level.
fn lambda_entry(
    params: ArrangementParams,
    weights: &WeightVector,
    j_set: &[u32],
    r_set: &[u32],
    i_set: &[u32],
    m: u32,
) -> BigRational {
    let q = j_set.len();
    debug_assert_eq!(r_set.len(), q);
    debug_assert_eq!(i_set.len(), q);
    let level = params.ell() + 1;
    // Positions (1-based) where the row's lower indices differ from the
    // column's.  Truncations shorter than the last mismatch contribute
    // nothing, and admissible sets must repair every mismatch explicitly.
    let mismatches: Vec<usize> = (1..=q).filter(|&p| r_set[p - 1] != i_set[p - 1]).collect();
    let mut total = if mismatches.is_empty() {
        weights
            .get(Pair::new(m, level).expect("m sits below the lowest level"))
            .clone()
    } else {
        BigRational::zero()
    };
    for p in 1..=q {
        if mismatches.iter().any(|&pos| pos > p) {
            continue;
        }
        let sets = admissible_sets(&i_set[..p], &j_set[..p], m, params)
            .expect("truncations of a basis monomial stay queryable");
        for k in &sets {
            let repairs_row = mismatches.iter().all(|&pos| {
                k.positions()
                    .iter()
                    .position(|&s| s == pos)
                    .map(|slot| k.values()[slot] == r_set[pos - 1])
                    .unwrap_or(false)
            });
            if repairs_row {
                let pair = Pair::new(k.final_value(), j_set[p - 1])
                    .expect("admissible values stay below their level");
                total = total + weights.get(pair);
            }
        }
    }
    if mismatches.len() % 2 == 1 {
        -total
    } else {
        total
    }
}

fn restricted_index(i_set: &[u32], j_set: &[u32], hat: Option<ArrangementParams>) -> BasisIndex {
    match hat {
        Some(h) => BasisIndex::new(i_set, j_set, h)
            .expect("monomials avoiding the lowest level restrict"),
        None => {
            debug_assert!(i_set.is_empty() && j_set.is_empty());
            BasisIndex::unit()
        }
    }
}

/// Matrix of `μ(λ): A^q → A^{q+1}` assembled blockwise, without any wedge
/// products.
///
/// Basis monomials split by whether their level set contains the lowest
/// undeleted level.  Columns that do are images of the restricted
/// arrangement one degree down and reproduce `−μ̂^{q−1}`; columns that do
/// not receive `μ̂^q` on the rows that also avoid the lowest level, plus a
/// correction block of admissible-set sums ([`lambda_entry`]) on the rows
/// that contain it.  The recursion bottoms out when no smaller arrangement
/// exists, where only degree zero survives.
pub fn mu_closed_form(
    params: ArrangementParams,
    q: usize,
    weights: &WeightVector,
) -> Matrix<BigRational> {
    assert_eq!(
        weights.params(),
        params,
        "weight vector belongs to a different arrangement"
    );
    let level = params.ell() + 1;
    let row_basis = enumerate_basis(params, q + 1);
    let col_basis = enumerate_basis(params, q);
    let n_rows = row_basis.len();
    let n_cols = col_basis.len();
    let row_pos: BTreeMap<BasisIndex, usize> = row_basis.iter().cloned().zip(0..).collect();

    let hat = params.restricted();
    let hat_weights = weights.restrict();
    let hat_basis = |deg: usize| -> Vec<BasisIndex> {
        match hat {
            Some(h) => enumerate_basis(h, deg),
            None if deg == 0 => vec![BasisIndex::unit()],
            None => Vec::new(),
        }
    };
    let hb_prev = if q >= 1 { hat_basis(q - 1) } else { Vec::new() };
    let hb_same = hat_basis(q);
    let hb_next = hat_basis(q + 1);
    let hpos_prev: BTreeMap<BasisIndex, usize> = hb_prev.iter().cloned().zip(0..).collect();
    let hpos_same: BTreeMap<BasisIndex, usize> = hb_same.iter().cloned().zip(0..).collect();

    let hat_mu = |deg: usize, rows: usize, cols: usize| -> Matrix<BigRational> {
        match (hat, &hat_weights) {
            (Some(h), Some(hw)) => mu_closed_form(h, deg, hw),
            _ => Matrix::zeros(&Rationals, rows, cols),
        }
    };
    let mu_hat_same = hat_mu(q, hb_next.len(), hb_same.len());
    let mu_hat_prev = if q >= 1 {
        Some(hat_mu(q - 1, hb_same.len(), hb_prev.len()))
    } else {
        None
    };

    let mut data = vec![BigRational::zero(); n_rows * n_cols];
    for (c, col_ix) in col_basis.iter().enumerate() {
        let js = col_ix.j_set();
        let is = col_ix.i_set();
        if js.first() == Some(&level) {
            // The column factors through the lowest level: copy a negated
            // column of the restricted matrix one degree down, at the rows
            // carrying the same leading lower index.
            let m = is[0];
            let prime = restricted_index(&is[1..], &js[1..], hat);
            let pc = hpos_prev[&prime];
            let mu_hat = mu_hat_prev.as_ref().expect("columns at the lowest level have q >= 1");
            for (hr, hix) in hb_same.iter().enumerate() {
                let v = mu_hat.get(hr, pc);
                if v.is_zero() {
                    continue;
                }
                let mut full_i = Vec::with_capacity(q + 1);
                full_i.push(m);
                full_i.extend_from_slice(hix.i_set());
                let mut full_j = Vec::with_capacity(q + 1);
                full_j.push(level);
                full_j.extend_from_slice(hix.j_set());
                let full = BasisIndex::new(&full_i, &full_j, params)
                    .expect("prepending the lowest level keeps a basis monomial");
                data[row_pos[&full] * n_cols + c] = -v.clone();
            }
        } else {
            // The column avoids the lowest level: restricted matrix on the
            // rows that avoid it too, correction block on the rows whose
            // level set is {level} ∪ J.
            let prime = restricted_index(is, js, hat);
            let pc = hpos_same[&prime];
            for (hr, hix) in hb_next.iter().enumerate() {
                let v = mu_hat_same.get(hr, pc);
                if v.is_zero() {
                    continue;
                }
                let full = BasisIndex::new(hix.i_set(), hix.j_set(), params)
                    .expect("restricted monomials embed");
                data[row_pos[&full] * n_cols + c] = v.clone();
            }
            for (r, row_ix) in row_basis.iter().enumerate() {
                let rj = row_ix.j_set();
                if rj.first() == Some(&level) && &rj[1..] == js {
                    let m = row_ix.i_set()[0];
                    let r_rest = &row_ix.i_set()[1..];
                    let v = lambda_entry(params, weights, js, r_rest, is, m);
                    if !v.is_zero() {
                        data[r * n_cols + c] = v;
                    }
                }
            }
        }
    }
    Matrix::new(n_rows, n_cols, data).expect("dimensions fixed by the basis enumeration")
}

/// Which implementation of `μ` to differentiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MuRoute {
    /// Wedge-and-straighten ([`mu_naive`]).
    Naive,
    /// Blockwise recursion ([`mu_closed_form`]).
    ClosedForm,
}

/// One integer matrix per hyperplane: the derivative of `λ ↦ μ^q(λ)` in each
/// coordinate direction.  Since `μ` is linear in `λ`, the matrix at any
/// weight vector is the weighted sum of these.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionMatrices {
    rows: usize,
    cols: usize,
    per_pair: Vec<Vec<(u32, u32, i64)>>,
}

impl DirectionMatrices {
    /// Codomain dimension (degree `q+1`).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Domain dimension (degree `q`).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of hyperplane directions.
    pub fn pair_count(&self) -> usize {
        self.per_pair.len()
    }

    /// Sparse `(row, col, coefficient)` triples for each direction, in the
    /// global hyperplane order.
    pub fn matrices(&self) -> &[Vec<(u32, u32, i64)>] {
        &self.per_pair
    }

    /// Evaluates `μ^q` at an integer weight vector, as a dense `i128` matrix.
    pub fn assemble_i128(&self, integer_weights: &[i64]) -> Int128Matrix {
        assert_eq!(
            integer_weights.len(),
            self.per_pair.len(),
            "one integer weight per hyperplane"
        );
        let mut out = Int128Matrix::zeros(self.rows, self.cols);
        for (triples, &w) in self.per_pair.iter().zip(integer_weights) {
            if w == 0 {
                continue;
            }
            for &(r, c, v) in triples {
                let cell = &mut out.data[r as usize * self.cols + c as usize];
                *cell = cell
                    .checked_add((v as i128) * (w as i128))
                    .expect("assembled entry fits in i128");
            }
        }
        out
    }
}

/// Dense integer matrix used for exact composition checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Int128Matrix {
    rows: usize,
    cols: usize,
    data: Vec<i128>,
}

impl Int128Matrix {
    /// The zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    /// Row count.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// One entry.
    pub fn get(&self, r: usize, c: usize) -> i128 {
        self.data[r * self.cols + c]
    }

    /// Whether every entry vanishes.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Matrix product with overflow checks.
    pub fn mul(&self, rhs: &Int128Matrix) -> Int128Matrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Int128Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                let src = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in dst.iter_mut().zip(src) {
                    if b != 0 {
                        *o = o
                            .checked_add(a.checked_mul(b).expect("i128 product overflow"))
                            .expect("i128 accumulation overflow");
                    }
                }
            }
        }
        out
    }
}

type DirectionKey = (u32, u32, usize, MuRoute);

static DIRECTION_CACHE: OnceLock<Mutex<HashMap<DirectionKey, Arc<DirectionMatrices>>>> =
    OnceLock::new();

/// Cached direction matrices for `μ^q` on one arrangement, via one route.
pub fn mu_directions(params: ArrangementParams, q: usize, route: MuRoute) -> Arc<DirectionMatrices> {
    let key = (params.n(), params.ell(), q, route);
    let cache = DIRECTION_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("direction cache lock").get(&key) {
        return Arc::clone(hit);
    }
    let built = Arc::new(build_directions(params, q, route));
    let mut guard = cache.lock().expect("direction cache lock");
    Arc::clone(guard.entry(key).or_insert(built))
}

fn build_directions(params: ArrangementParams, q: usize, route: MuRoute) -> DirectionMatrices {
    let count = params.hyperplane_count();
    let rows = enumerate_basis(params, q + 1).len();
    let cols = enumerate_basis(params, q).len();
    let mut per_pair = Vec::with_capacity(count);
    for d in 0..count {
        let mut coords = vec![BigRational::zero(); count];
        coords[d] = BigRational::one();
        let w = WeightVector::new(params, coords).expect("coordinate count matches");
        let m = match route {
            MuRoute::Naive => mu_naive(params, q, &w),
            MuRoute::ClosedForm => mu_closed_form(params, q, &w),
        };
        let mut triples = Vec::new();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let v = m.get(r, c);
                if v.is_zero() {
                    continue;
                }
                assert!(v.is_integer(), "direction coefficients are integers");
                triples.push((
                    r as u32,
                    c as u32,
                    v.to_integer().to_i64().expect("direction coefficient fits in i64"),
                ));
            }
        }
        per_pair.push(triples);
    }
    DirectionMatrices {
        rows,
        cols,
        per_pair,
    }
}

/// Clears denominators: multiplies the coordinates by the least common
/// multiple of their denominators and returns the resulting integers.
///
/// Panics when a scaled coordinate does not fit in `i64`; callers keep the
/// inputs small.
pub fn scale_weights_to_integers(coords: &[BigRational]) -> Vec<i64> {
    let mut lcm = BigInt::one();
    for c in coords {
        lcm = num::integer::lcm(lcm, c.denom().clone());
    }
    let lcm = BigRational::from_integer(lcm);
    coords
        .iter()
        .map(|c| {
            let scaled = c * &lcm;
            debug_assert!(scaled.is_integer());
            scaled
                .to_integer()
                .to_i64()
                .expect("scaled weight fits in i64")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: u32, ell: u32) -> ArrangementParams {
        ArrangementParams::new(n, ell).unwrap()
    }

    fn pair(i: u32, j: u32) -> Pair {
        Pair::new(i, j).unwrap()
    }

    fn basis(i: &[u32], j: &[u32], p: ArrangementParams) -> BasisIndex {
        BasisIndex::new(i, j, p).unwrap()
    }

    fn all_params(max_n: u32) -> Vec<ArrangementParams> {
        let mut out = Vec::new();
        for n in 2..=max_n {
            for ell in 1..n {
                out.push(params(n, ell));
            }
        }
        out
    }

    fn random_weights(rng: &mut ChaCha8Rng, p: ArrangementParams) -> WeightVector {
        let coords = (0..p.hyperplane_count())
            .map(|_| {
                BigRational::new(
                    BigInt::from(rng.gen_range(-6i64..=6)),
                    BigInt::from(rng.gen_range(1i64..=4)),
                )
            })
            .collect();
        WeightVector::new(p, coords).unwrap()
    }

    #[test]
    fn weight_vector_validates_length_and_restricts() {
        let p = params(4, 1);
        assert_eq!(
            WeightVector::from_integers(p, &[1, 2, 3]).unwrap_err(),
            OSError::WeightLength {
                arrangement: p.to_string(),
                expected: 6,
                got: 3
            }
        );
        let w = WeightVector::from_integers(p, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(w.get(pair(1, 2)), &ratio(1));
        assert_eq!(w.get(pair(2, 3)), &ratio(3));
        assert_eq!(w.get(pair(3, 4)), &ratio(6));
        let hat = w.restrict().unwrap();
        assert_eq!(hat.params(), params(4, 2));
        assert_eq!(hat.coords(), &[ratio(2), ratio(3), ratio(4), ratio(5), ratio(6)]);
        assert_eq!(hat.get(pair(1, 3)), &ratio(2));
        // Restricting all the way down runs out of arrangements.
        assert!(hat.restrict().unwrap().restrict().is_none());
    }

    #[test]
    fn normal_form_straightens_a_shared_upper_index() {
        let p = params(3, 1);
        let nf = normal_form(&[pair(1, 3), pair(2, 3)], 1, p);
        assert_eq!(nf.term_count(), 2);
        assert_eq!(nf.coefficient(&basis(&[1, 2], &[2, 3], p)), ratio(1));
        assert_eq!(nf.coefficient(&basis(&[1, 1], &[2, 3], p)), ratio(-1));
    }

    #[test]
    fn normal_form_dies_at_a_deleted_level() {
        // With two deleted levels the connecting pair (1, 2) is gone.
        let p = params(3, 2);
        assert!(normal_form(&[pair(1, 3), pair(2, 3)], 1, p).is_zero());
    }

    #[test]
    fn normal_form_kills_repeated_factors() {
        let p = params(3, 1);
        assert!(normal_form(&[pair(1, 2), pair(1, 2)], 1, p).is_zero());
        assert!(normal_form(&[pair(1, 3), pair(2, 3), pair(1, 3)], 1, p).is_zero());
    }

    #[test]
    fn normal_form_tracks_factor_order() {
        let p = params(3, 1);
        let forward = normal_form(&[pair(1, 2), pair(1, 3)], 1, p);
        let backward = normal_form(&[pair(1, 3), pair(1, 2)], 1, p);
        assert_eq!(forward.coefficient(&basis(&[1, 1], &[2, 3], p)), ratio(1));
        assert_eq!(forward.term_count(), 1);
        assert_eq!(backward, forward.neg());
        // The sign argument folds in the same way.
        assert_eq!(normal_form(&[pair(1, 2), pair(1, 3)], -1, p), backward.neg().neg());
    }

    #[test]
    fn wedge_has_the_unit_and_matches_the_frozen_products() {
        let p = params(3, 1);
        let a12 = OSElement::from_basis(basis(&[1], &[2], p));
        let a13 = OSElement::from_basis(basis(&[1], &[3], p));
        let x = a12.scale(&ratio(3)).add(&a13.scale(&ratio(-2)));
        assert_eq!(wedge(&OSElement::unit(), &x, p), x);
        assert_eq!(wedge(&x, &OSElement::unit(), p), x);

        let fwd = wedge(&a12, &a13, p);
        assert_eq!(fwd.term_count(), 1);
        assert_eq!(fwd.coefficient(&basis(&[1, 1], &[2, 3], p)), ratio(1));
        assert_eq!(wedge(&a13, &a12, p), fwd.neg());
    }

    #[test]
    fn wedge_is_bilinear() {
        let p = params(4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let deg1 = enumerate_basis(p, 1);
        let random_elt = |rng: &mut ChaCha8Rng| {
            let mut e = OSElement::zero(1);
            for ix in &deg1 {
                e.add_term(ix.clone(), ratio(rng.gen_range(-3i64..=3)));
            }
            e
        };
        for _ in 0..10 {
            let x = random_elt(&mut rng);
            let y = random_elt(&mut rng);
            let z = random_elt(&mut rng);
            let lhs = wedge(&x.add(&y), &z, p);
            let rhs = wedge(&x, &z, p).add(&wedge(&y, &z, p));
            assert_eq!(lhs, rhs);
            // Degree-one elements anticommute.
            assert_eq!(wedge(&x, &y, p), wedge(&y, &x, p).neg());
        }
    }

    #[test]
    fn straightening_is_confluent_under_factor_permutations() {
        // All six orderings of a degree-three product agree up to the
        // parity of the permutation.
        const PERMS: [([usize; 3], i8); 6] = [
            ([0, 1, 2], 1),
            ([0, 2, 1], -1),
            ([1, 0, 2], -1),
            ([1, 2, 0], 1),
            ([2, 0, 1], 1),
            ([2, 1, 0], -1),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for p in all_params(5) {
            let pairs = hyperplane_pairs(p);
            for _ in 0..15 {
                let f: Vec<Pair> = (0..3)
                    .map(|_| pairs[rng.gen_range(0..pairs.len())])
                    .collect();
                let base = normal_form(&f, 1, p);
                for (perm, parity) in PERMS {
                    let shuffled = [f[perm[0]], f[perm[1]], f[perm[2]]];
                    assert_eq!(
                        normal_form(&shuffled, parity, p),
                        base,
                        "straightening depends on factor order for {p}"
                    );
                }
            }
        }
    }

    #[test]
    fn mu_of_the_smallest_arrangement_is_the_weight_itself() {
        let p = params(2, 1);
        let w = WeightVector::from_integers(p, &[7]).unwrap();
        for route in [MuRoute::Naive, MuRoute::ClosedForm] {
            let m = match route {
                MuRoute::Naive => mu_naive(p, 0, &w),
                MuRoute::ClosedForm => mu_closed_form(p, 0, &w),
            };
            assert_eq!((m.rows(), m.cols()), (1, 1));
            assert_eq!(m.get(0, 0), &ratio(7));
        }
    }

    #[test]
    fn mu_matches_the_frozen_three_point_matrices() {
        // Weights λ_{1,2} = 2, λ_{1,3} = 3, λ_{2,3} = 5.
        let p = params(3, 1);
        let w = WeightVector::from_integers(p, &[2, 3, 5]).unwrap();
        for m in [mu_naive(p, 0, &w), mu_closed_form(p, 0, &w)] {
            assert_eq!((m.rows(), m.cols()), (3, 1));
            assert_eq!(
                (m.get(0, 0), m.get(1, 0), m.get(2, 0)),
                (&ratio(2), &ratio(3), &ratio(5))
            );
        }
        // Degree one: rows are (1,1)|(2,3) then (1,2)|(2,3); columns are
        // (1)|(2), (1)|(3), (2)|(3).
        let expected = [
            [ratio(-3), ratio(2 + 5), ratio(-3)],
            [ratio(-5), ratio(-5), ratio(2 + 3)],
        ];
        for m in [mu_naive(p, 1, &w), mu_closed_form(p, 1, &w)] {
            assert_eq!((m.rows(), m.cols()), (2, 3));
            for r in 0..2 {
                for c in 0..3 {
                    assert_eq!(m.get(r, c), &expected[r][c], "entry ({r}, {c})");
                }
            }
        }
    }

    #[test]
    fn correction_entries_on_the_diagonal_sum_two_weights() {
        // On A(3,1) the diagonal of the correction block couples the column
        // (i)|(3) to the row (1,i)|(2,3): the entry is λ_{1,2} + λ_{k,3}
        // where {k, i} = {1, 2}.
        let p = params(3, 1);
        let w = WeightVector::from_integers(p, &[11, 13, 17]).unwrap();
        let m = mu_closed_form(p, 1, &w);
        // Column (1)|(3) at row (1,1)|(2,3): 11 + 17 (k = 2).
        assert_eq!(m.get(0, 1), &ratio(11 + 17));
        // Column (2)|(3) at row (1,2)|(2,3): 11 + 13 (k = 1).
        assert_eq!(m.get(1, 2), &ratio(11 + 13));
    }

    #[test]
    fn zero_weights_give_zero_matrices() {
        for p in [params(3, 1), params(4, 2)] {
            let w = WeightVector::zeros(p);
            for q in 0..=p.top_degree() {
                assert!(mu_naive(p, q, &w).is_zero(&Rationals));
                assert!(mu_closed_form(p, q, &w).is_zero(&Rationals));
            }
        }
    }

    #[test]
    fn closed_form_agrees_with_the_naive_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for p in all_params(5) {
            for _ in 0..20 {
                let w = random_weights(&mut rng, p);
                for q in 0..=p.top_degree() {
                    assert_eq!(
                        mu_closed_form(p, q, &w),
                        mu_naive(p, q, &w),
                        "routes disagree on {p} in degree {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn direction_matrices_agree_between_routes_and_hit_the_cache() {
        for p in all_params(5) {
            for q in 0..=p.top_degree() {
                let naive = mu_directions(p, q, MuRoute::Naive);
                let closed = mu_directions(p, q, MuRoute::ClosedForm);
                assert_eq!(*naive, *closed, "direction matrices split on {p}, degree {q}");
                assert!(Arc::ptr_eq(&naive, &mu_directions(p, q, MuRoute::Naive)));
            }
        }
    }

    #[test]
    fn assembled_directions_match_a_direct_evaluation() {
        let p = params(4, 2);
        let ints = [2i64, -3, 5, 7, -1];
        let w = WeightVector::from_integers(p, &ints).unwrap();
        for q in 0..=p.top_degree() {
            let asm = mu_directions(p, q, MuRoute::Naive).assemble_i128(&ints);
            let direct = mu_naive(p, q, &w);
            assert_eq!((asm.rows(), asm.cols()), (direct.rows(), direct.cols()));
            for r in 0..asm.rows() {
                for c in 0..asm.cols() {
                    assert_eq!(&ratio(asm.get(r, c) as i64), direct.get(r, c));
                }
            }
        }
    }

    #[test]
    fn scaling_weights_clears_denominators() {
        let coords = vec![
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            BigRational::new(BigInt::from(-2), BigInt::from(3)),
            ratio(4),
        ];
        assert_eq!(scale_weights_to_integers(&coords), vec![3, -4, 24]);
    }

    #[test]
    fn mu_composes_to_zero_on_all_small_arrangements() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for p in all_params(6) {
            let top = p.top_degree();
            let dirs: Vec<_> = (0..=top)
                .map(|q| mu_directions(p, q, MuRoute::Naive))
                .collect();
            for _ in 0..50 {
                let w: Vec<i64> = (0..p.hyperplane_count())
                    .map(|_| rng.gen_range(-9i64..=9))
                    .collect();
                let mats: Vec<Int128Matrix> = dirs.iter().map(|d| d.assemble_i128(&w)).collect();
                for q in 0..top {
                    assert!(
                        mats[q + 1].mul(&mats[q]).is_zero(),
                        "composition in degrees {q}, {} is nonzero on {p}",
                        q + 1
                    );
                }
            }
        }
    }

    #[test]
    fn deleting_the_lowest_level_projects_onto_the_restricted_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for p in [params(4, 1), params(5, 1), params(5, 2)] {
            let hat = p.restricted().unwrap();
            let level = p.ell() + 1;
            for _ in 0..5 {
                let w = random_weights(&mut rng, p);
                let hw = w.restrict().unwrap();
                for q in 0..=hat.top_degree() {
                    let full = mu_naive(p, q, &w);
                    let small = mu_naive(hat, q, &hw);
                    let rows = enumerate_basis(p, q + 1);
                    let cols = enumerate_basis(p, q);
                    let keep = |ix: &BasisIndex| !ix.j_set().contains(&level);
                    let row_of: BTreeMap<BasisIndex, usize> =
                        rows.iter().cloned().zip(0..).collect();
                    let col_of: BTreeMap<BasisIndex, usize> =
                        cols.iter().cloned().zip(0..).collect();
                    for (hr, hix) in enumerate_basis(hat, q + 1).iter().enumerate() {
                        let full_row = basis(hix.i_set(), hix.j_set(), p);
                        assert!(keep(&full_row));
                        for (hc, hcx) in enumerate_basis(hat, q).iter().enumerate() {
                            let full_col = basis(hcx.i_set(), hcx.j_set(), p);
                            assert_eq!(
                                full.get(row_of[&full_row], col_of[&full_col]),
                                small.get(hr, hc),
                                "projection fails on {p} degree {q}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lowest_level_block_is_the_negated_restricted_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for p in [params(4, 1), params(4, 2), params(5, 2)] {
            let hat = p.restricted().unwrap();
            let level = p.ell() + 1;
            for _ in 0..5 {
                let w = random_weights(&mut rng, p);
                let hw = w.restrict().unwrap();
                for q in 1..=p.top_degree() {
                    let full = mu_naive(p, q, &w);
                    let small = mu_naive(hat, q - 1, &hw);
                    let rows = enumerate_basis(p, q + 1);
                    let cols = enumerate_basis(p, q);
                    let hrow_of: BTreeMap<BasisIndex, usize> =
                        enumerate_basis(hat, q).iter().cloned().zip(0..).collect();
                    let hcol_of: BTreeMap<BasisIndex, usize> =
                        enumerate_basis(hat, q - 1).iter().cloned().zip(0..).collect();
                    for (r, rix) in rows.iter().enumerate() {
                        if rix.j_set().first() != Some(&level) {
                            continue;
                        }
                        let (rm, rrest) = (rix.i_set()[0], basis(&rix.i_set()[1..], &rix.j_set()[1..], hat));
                        for (c, cix) in cols.iter().enumerate() {
                            if cix.j_set().first() != Some(&level) {
                                continue;
                            }
                            let (cm, crest) =
                                (cix.i_set()[0], basis(&cix.i_set()[1..], &cix.j_set()[1..], hat));
                            let expected = if rm == cm {
                                -small.get(hrow_of[&rrest], hcol_of[&crest]).clone()
                            } else {
                                BigRational::zero()
                            };
                            assert_eq!(
                                full.get(r, c),
                                &expected,
                                "lowest-level block mismatch on {p} degree {q}"
                            );
                        }
                    }
                }
            }
        }
    }
}
