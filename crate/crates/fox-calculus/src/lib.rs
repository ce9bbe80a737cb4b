//! Fox free differential calculus on the pure braid-like groups P_{n,ℓ}.
//!
//! The group P_{n,ℓ} is the iterated semidirect product of free groups
//! G_n ⋊ (G_{n−1} ⋊ (… ⋊ G_{ℓ+1})), where G_j is free on the generators
//! γ_{1,j}, …, γ_{j−1,j}.  Lower-level generators act on higher levels by
//! the Artin conjugation action.  This crate provides
//!
//! - freely reduced [`Word`]s and a canonical normal form for P_{n,ℓ}
//!   (level blocks in increasing order), making group-ring arithmetic exact
//!   modulo the group relations;
//! - the Artin action of a generator γ_{r,s}^{±1} on γ_{i,j} (s < j) and its
//!   extension to words;
//! - Fox derivatives, Jacobian matrices J(β) = (∂ β(γ_{i,j}) / ∂ γ_{k,j}),
//!   and the level representations ρ_j(β) = β·J(β) with their entrywise
//!   extension ρ̃_j to matrices;
//! - abelianization to sparse Laurent polynomials, evaluation at torus
//!   points, and directional derivatives at the identity point t = 1.
//!
//! Words act on the right, so automorphisms compose left-to-right along a
//! word: for w = c₁c₂, the induced map is φ_{c₂} ∘ φ_{c₁}, and the Jacobian
//! chain rule reads J(uv) = ṽ(J(u))·J(v).

use std::collections::BTreeMap;
use std::fmt;

use exact_linalg::Matrix;
use index_combinatorics::{ArrangementParams, Pair};
use num::{BigRational, One, Zero};
use thiserror::Error;

/// Errors for level preconditions and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoxError {
    /// A Fox derivative applied to a word straying outside one free factor.
    #[error("word contains generator ({i}, {j}) outside the free group at level {level}")]
    MixedLevels { i: u32, j: u32, level: u32 },
    /// A Jacobian of a braid word containing letters at or above the level.
    #[error("braid letter ({i}, {j}) does not lie below level {level}")]
    LevelTooHigh { i: u32, j: u32, level: u32 },
    /// A letter that indexes no hyperplane of the arrangement.
    #[error("generator ({i}, {j}) is outside the arrangement")]
    PairOutsideArrangement { i: u32, j: u32 },
    /// A coordinate vector of the wrong length.
    #[error("coordinate vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    /// A torus point with a non-invertible coordinate.
    #[error("torus point coordinate {index} is zero")]
    ZeroCoordinate { index: usize },
}

// ---------------------------------------------------------------------------
// Words
// ---------------------------------------------------------------------------

/// A freely reduced word in the generators γ_{i,j}; the empty word is the
/// identity.  Letters are (pair, exponent) with exponent ±1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word {
    letters: Vec<(Pair, i8)>,
}

impl Word {
    /// The identity element.
    pub fn identity() -> Self {
        Word::default()
    }

    /// The generator γ_{i,j}.
    pub fn generator(p: Pair) -> Self {
        Word { letters: vec![(p, 1)] }
    }

    /// γ_{i,j}^{exp} with exp = ±1.
    pub fn generator_power(p: Pair, exp: i8) -> Self {
        assert!(exp == 1 || exp == -1, "letter exponents are ±1");
        Word { letters: vec![(p, exp)] }
    }

    /// Builds a word from letters, freely reducing adjacent inverses.
    pub fn from_letters(letters: impl IntoIterator<Item = (Pair, i8)>) -> Self {
        let mut stack: Vec<(Pair, i8)> = Vec::new();
        for (p, e) in letters {
            assert!(e == 1 || e == -1, "letter exponents are ±1");
            if let Some(&(q, f)) = stack.last() {
                if q == p && f == -e {
                    stack.pop();
                    continue;
                }
            }
            stack.push((p, e));
        }
        Word { letters: stack }
    }

    /// The reduced letters.
    pub fn letters(&self) -> &[(Pair, i8)] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The inverse word (letters reversed, exponents negated).
    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|&(p, e)| (p, -e)).collect(),
        }
    }

    /// The product self·rhs, freely reduced.
    pub fn mul(&self, rhs: &Word) -> Word {
        Word::from_letters(self.letters.iter().chain(rhs.letters.iter()).copied())
    }

    /// The conjugate z·self·z⁻¹.
    pub fn conjugate_by(&self, z: &Word) -> Word {
        z.mul(self).mul(&z.inverse())
    }

    /// The commutator [a, b] = a·b·a⁻¹·b⁻¹.
    pub fn commutator(a: &Word, b: &Word) -> Word {
        a.mul(b).mul(&a.inverse()).mul(&b.inverse())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (idx, (p, e)) in self.letters.iter().enumerate() {
            if idx > 0 {
                write!(f, "·")?;
            }
            write!(f, "g[{},{}]", p.i(), p.j())?;
            if *e < 0 {
                write!(f, "^-1")?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Artin action
// ---------------------------------------------------------------------------

/// The Artin action of γ_{r,s}^{exp} on the generator γ_{i,j}.  For s ≥ j
/// the action is trivial; otherwise the image is z·γ_{i,j}·z⁻¹ with z
/// depending on the position of i relative to r and s.
pub fn artin_act_letter(gen: Pair, exp: i8, target: Pair) -> Word {
    let (r, s) = (gen.i(), gen.j());
    let (i, j) = (target.i(), target.j());
    if s >= j {
        return Word::generator(target);
    }
    let a = Word::generator(Pair::new(r, j).expect("r < s < j"));
    let b = Word::generator(Pair::new(s, j).expect("s < j"));
    let t = Word::generator(target);
    if i == r || i == s {
        let z = if exp == 1 {
            a.mul(&b)
        } else {
            b.inverse().mul(&a.inverse())
        };
        t.conjugate_by(&z)
    } else if r < i && i < s {
        let z = if exp == 1 {
            Word::commutator(&a, &b)
        } else {
            // The inverse automorphism conjugates by b⁻¹a⁻¹ba.
            b.inverse().mul(&a.inverse()).mul(&b).mul(&a)
        };
        t.conjugate_by(&z)
    } else {
        t
    }
}

/// The Artin action of a single generator letter extended to a word, as a
/// group homomorphism.
pub fn artin_act_word(gen: Pair, exp: i8, w: &Word) -> Word {
    let mut out = Word::identity();
    for &(p, e) in w.letters() {
        let image = artin_act_letter(gen, exp, p);
        let image = if e == 1 { image } else { image.inverse() };
        out = out.mul(&image);
    }
    out
}

/// The Artin action of a full braid word: since elements act on the right,
/// the first letter acts first.
pub fn artin_act(braid: &Word, x: &Word) -> Word {
    let mut acc = x.clone();
    for &(p, e) in braid.letters() {
        acc = artin_act_word(p, e, &acc);
    }
    acc
}

// ---------------------------------------------------------------------------
// Normal form in P_{n,ℓ}
// ---------------------------------------------------------------------------

/// Canonical form of a word in P_{n,ℓ}: the product u_{ℓ+1}·u_{ℓ+2}⋯u_n of
/// freely reduced level blocks u_j ∈ G_j in increasing level order.  Two
/// words represent the same group element exactly when their normal forms
/// coincide, because each level splits off as a free factor of an iterated
/// semidirect product.
///
/// Appending a letter g at level s moves it left past all higher blocks,
/// twisting them: u_j ← φ_g(u_j) for j > s, from the relation
/// x·g = g·φ_g(x).
pub fn normalize(w: &Word) -> Word {
    let mut blocks: BTreeMap<u32, Word> = BTreeMap::new();
    for &(p, e) in w.letters() {
        let s = p.j();
        let higher: Vec<u32> = blocks.range(s + 1..).map(|(&k, _)| k).collect();
        for k in higher {
            let twisted = artin_act_word(p, e, &blocks[&k]);
            blocks.insert(k, twisted);
        }
        let entry = blocks.entry(s).or_default();
        *entry = entry.mul(&Word::generator_power(p, e));
    }
    let mut out = Word::identity();
    for (_, block) in blocks {
        out = out.mul(&block);
    }
    out
}

// ---------------------------------------------------------------------------
// Group ring
// ---------------------------------------------------------------------------

/// A formal rational combination of group elements of P_{n,ℓ}.  Keys are
/// stored in canonical normal form, so equality of group-ring elements is
/// equality modulo the group relations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupRingElement {
    terms: BTreeMap<Word, BigRational>,
}

impl GroupRingElement {
    pub fn zero() -> Self {
        GroupRingElement::default()
    }

    /// The ring unit (the identity group element).
    pub fn one() -> Self {
        GroupRingElement::from_word(Word::identity())
    }

    /// A single group element with coefficient 1.
    pub fn from_word(w: Word) -> Self {
        GroupRingElement::monomial(w, BigRational::one())
    }

    /// coeff · w.
    pub fn monomial(w: Word, coeff: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(normalize(&w), coeff);
        }
        GroupRingElement { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The terms as (normalized word, coefficient) pairs.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, &BigRational)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    fn insert(&mut self, w: Word, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.insert(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        GroupRingElement {
            terms: self.terms.iter().map(|(w, c)| (w.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        if s.is_zero() {
            return GroupRingElement::zero();
        }
        GroupRingElement {
            terms: self.terms.iter().map(|(w, c)| (w.clone(), c * s)).collect(),
        }
    }

    /// Ring product; products of normal forms are renormalized.
    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = GroupRingElement::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &rhs.terms {
                out.insert(normalize(&w1.mul(w2)), c1 * c2);
            }
        }
        out
    }

    /// The augmentation ε (sum of coefficients; evaluation at t = 1).
    pub fn augmentation(&self) -> BigRational {
        self.terms
            .values()
            .fold(BigRational::zero(), |acc, c| acc + c)
    }

    /// Applies a group homomorphism to every term's word.
    pub fn apply_hom(&self, f: impl Fn(&Word) -> Word) -> Self {
        let mut out = GroupRingElement::zero();
        for (w, c) in &self.terms {
            out.insert(normalize(&f(w)), c.clone());
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Matrices over the group ring
// ---------------------------------------------------------------------------

/// A dense matrix of group-ring elements.  Boundary matrices act on row
/// vectors from the right, so rows index the source basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GRMatrix {
    rows: usize,
    cols: usize,
    data: Vec<GroupRingElement>,
}

impl GRMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<GroupRingElement>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length must match shape");
        GRMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        GRMatrix {
            rows,
            cols,
            data: vec![GroupRingElement::zero(); rows * cols],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = GRMatrix::zeros(k, k);
        for d in 0..k {
            m.set(d, d, GroupRingElement::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &GroupRingElement {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: GroupRingElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[GroupRingElement] {
        &self.data
    }

    pub fn mul(&self, rhs: &GRMatrix) -> GRMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = GRMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let term = a.mul(rhs.get(k, c));
                    let sum = out.get(r, c).add(&term);
                    out.set(r, c, sum);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &GRMatrix) -> GRMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.add(b))
            .collect();
        GRMatrix::new(self.rows, self.cols, data)
    }

    pub fn neg(&self) -> GRMatrix {
        GRMatrix::new(self.rows, self.cols, self.data.iter().map(|e| e.neg()).collect())
    }

    /// Left-multiplies every entry by a fixed group-ring scalar.
    pub fn scale_left(&self, s: &GroupRingElement) -> GRMatrix {
        GRMatrix::new(self.rows, self.cols, self.data.iter().map(|e| s.mul(e)).collect())
    }

    /// Applies a group homomorphism to every entry.
    pub fn apply_hom(&self, f: impl Fn(&Word) -> Word + Copy) -> GRMatrix {
        GRMatrix::new(
            self.rows,
            self.cols,
            self.data.iter().map(|e| e.apply_hom(f)).collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Fox derivatives, Jacobians, and the level representations
// ---------------------------------------------------------------------------

/// The Fox derivative ∂w/∂gen for a word w in the single free group G_j
/// containing gen: ∂(uv) = ∂u + u·∂v, ∂x/∂x = 1, ∂x⁻¹/∂x = −x⁻¹, and
/// ∂y^{±1}/∂x = 0 for y ≠ x.
pub fn fox_derivative(w: &Word, gen: Pair) -> Result<GroupRingElement, FoxError> {
    let level = gen.j();
    for &(p, _) in w.letters() {
        if p.j() != level {
            return Err(FoxError::MixedLevels { i: p.i(), j: p.j(), level });
        }
    }
    let mut out = GroupRingElement::zero();
    let mut prefix = Word::identity();
    for &(p, e) in w.letters() {
        if p == gen {
            if e == 1 {
                out = out.add(&GroupRingElement::from_word(prefix.clone()));
            } else {
                let w_inv = prefix.mul(&Word::generator_power(p, -1));
                out = out.sub(&GroupRingElement::from_word(w_inv));
            }
        }
        prefix = prefix.mul(&Word::generator_power(p, e));
    }
    Ok(out)
}

/// The Jacobian J(β) at level j: the (j−1)×(j−1) matrix with (i,k) entry
/// ∂ φ_β(γ_{i,j}) / ∂ γ_{k,j}, computed directly from the action of the full
/// braid word.  Requires every letter of β to lie below level j.
pub fn jacobian(braid: &Word, j: u32) -> Result<GRMatrix, FoxError> {
    for &(p, _) in braid.letters() {
        if p.j() >= j {
            return Err(FoxError::LevelTooHigh { i: p.i(), j: p.j(), level: j });
        }
    }
    let size = (j - 1) as usize;
    let mut m = GRMatrix::zeros(size, size);
    for i in 1..j {
        let target = Word::generator(Pair::new(i, j).expect("i < j"));
        let image = artin_act(braid, &target);
        for k in 1..j {
            let d = fox_derivative(&image, Pair::new(k, j).expect("k < j"))?;
            m.set((i - 1) as usize, (k - 1) as usize, d);
        }
    }
    Ok(m)
}

/// The level representation ρ_j(β) = β·J(β), extended to arbitrary words of
/// P_{n,ℓ} by sending every letter at level ≥ j to the identity matrix (its
/// scalar is discarded along with it).
pub fn rho_matrix(braid: &Word, j: u32) -> GRMatrix {
    let filtered = Word::from_letters(
        braid
            .letters()
            .iter()
            .copied()
            .filter(|(p, _)| p.j() < j),
    );
    let jac = jacobian(&filtered, j).expect("filtered letters lie below the level");
    let scalar = GroupRingElement::from_word(filtered);
    jac.scale_left(&scalar)
}

/// The entrywise extension ρ̃_j: every group-ring entry Σ c_w·w of `m`
/// becomes the (j−1)×(j−1) block Σ c_w·ρ_j(w), inflating an r×c matrix to
/// r(j−1) × c(j−1).
pub fn rho_tilde(m: &GRMatrix, j: u32) -> GRMatrix {
    let d = (j - 1) as usize;
    let mut out = GRMatrix::zeros(m.rows() * d, m.cols() * d);
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let entry = m.get(r, c);
            if entry.is_zero() {
                continue;
            }
            let mut block = GRMatrix::zeros(d, d);
            for (w, coeff) in entry.terms() {
                let rho = rho_matrix(w, j);
                for br in 0..d {
                    for bc in 0..d {
                        let scaled = rho.get(br, bc).scale(coeff);
                        if !scaled.is_zero() {
                            let sum = block.get(br, bc).add(&scaled);
                            block.set(br, bc, sum);
                        }
                    }
                }
            }
            for br in 0..d {
                for bc in 0..d {
                    out.set(r * d + br, c * d + bc, block.get(br, bc).clone());
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Abelianization and evaluation
// ---------------------------------------------------------------------------

/// A sparse Laurent polynomial: exponent vectors in the global pair order of
/// one arrangement, with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    vars: usize,
    terms: BTreeMap<Vec<i32>, BigRational>,
}

impl LaurentPoly {
    pub fn zero(vars: usize) -> Self {
        LaurentPoly { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: BigRational) -> Self {
        let mut p = LaurentPoly::zero(vars);
        p.insert(vec![0; vars], c);
        p
    }

    /// coeff · t^{exponents}.
    pub fn monomial(exponents: Vec<i32>, coeff: BigRational) -> Self {
        let vars = exponents.len();
        let mut p = LaurentPoly::zero(vars);
        p.insert(exponents, coeff);
        p
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &BigRational)> {
        self.terms.iter()
    }

    fn insert(&mut self, e: Vec<i32>, c: BigRational) {
        assert_eq!(e.len(), self.vars);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.vars, rhs.vars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        LaurentPoly {
            vars: self.vars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    /// Substitutes the torus point t; every coordinate must be nonzero.
    pub fn eval_at(&self, t: &[BigRational]) -> Result<BigRational, FoxError> {
        if t.len() != self.vars {
            return Err(FoxError::LengthMismatch { expected: self.vars, got: t.len() });
        }
        if let Some(index) = t.iter().position(|x| x.is_zero()) {
            return Err(FoxError::ZeroCoordinate { index });
        }
        let mut total = BigRational::zero();
        for (exps, c) in &self.terms {
            let mut m = c.clone();
            for (k, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let base = if e > 0 { t[k].clone() } else { t[k].recip() };
                for _ in 0..e.unsigned_abs() {
                    m *= &base;
                }
            }
            total += m;
        }
        Ok(total)
    }

    /// The directional derivative at t = 1 along λ: Σ_w c_w·⟨exp(w), λ⟩.
    pub fn derivative_at_one(&self, lambda: &[BigRational]) -> Result<BigRational, FoxError> {
        if lambda.len() != self.vars {
            return Err(FoxError::LengthMismatch { expected: self.vars, got: lambda.len() });
        }
        let mut total = BigRational::zero();
        for (exps, c) in &self.terms {
            let mut pairing = BigRational::zero();
            for (k, &e) in exps.iter().enumerate() {
                if e != 0 {
                    pairing += BigRational::from_integer(e.into()) * &lambda[k];
                }
            }
            total += c * pairing;
        }
        Ok(total)
    }
}

/// The exponent vector of a word in the global pair order of `params`.
pub fn abelianize_word(params: ArrangementParams, w: &Word) -> Result<Vec<i32>, FoxError> {
    let mut exps = vec![0i32; params.hyperplane_count()];
    for &(p, e) in w.letters() {
        let idx = params
            .pair_index(p)
            .ok_or(FoxError::PairOutsideArrangement { i: p.i(), j: p.j() })?;
        exps[idx] += e as i32;
    }
    Ok(exps)
}

/// Abelianizes a group-ring element: each word becomes the monomial of its
/// exponent vector, and colliding monomials sum.
pub fn abelianize(params: ArrangementParams, x: &GroupRingElement) -> Result<LaurentPoly, FoxError> {
    let mut out = LaurentPoly::zero(params.hyperplane_count());
    for (w, c) in x.terms() {
        out.insert(abelianize_word(params, w)?, c.clone());
    }
    Ok(out)
}

/// Evaluates a group-ring element at a rational torus point.
pub fn eval_gr_at(
    params: ArrangementParams,
    x: &GroupRingElement,
    t: &[BigRational],
) -> Result<BigRational, FoxError> {
    abelianize(params, x)?.eval_at(t)
}

/// Evaluates a group-ring matrix entrywise at a rational torus point.
pub fn eval_matrix_at(
    params: ArrangementParams,
    m: &GRMatrix,
    t: &[BigRational],
) -> Result<Matrix<BigRational>, FoxError> {
    let mut out = Matrix::zeros(&exact_linalg::Rationals, m.rows(), m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            out.set(r, c, eval_gr_at(params, m.get(r, c), t)?);
        }
    }
    Ok(out)
}

/// The entrywise directional derivative at t = 1 of a group-ring matrix.
pub fn derivative_matrix_at_one(
    params: ArrangementParams,
    m: &GRMatrix,
    lambda: &[BigRational],
) -> Result<Matrix<BigRational>, FoxError> {
    let mut out = Matrix::zeros(&exact_linalg::Rationals, m.rows(), m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let p = abelianize(params, m.get(r, c))?;
            out.set(r, c, p.derivative_at_one(lambda)?);
        }
    }
    Ok(out)
}

/// The derivative at t = 1 of the evaluated representation
/// t ↦ ρ_j(braid)(t), computed entrywise.
pub fn rho_derivative(
    braid: &Word,
    j: u32,
    params: ArrangementParams,
    lambda: &[BigRational],
) -> Result<Matrix<BigRational>, FoxError> {
    derivative_matrix_at_one(params, &rho_matrix(braid, j), lambda)
}
