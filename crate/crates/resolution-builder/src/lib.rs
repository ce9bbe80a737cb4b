//! Free resolution of the integers over the group ring of the pure-braid-like
//! group attached to a discriminantal arrangement, together with its
//! evaluations.
//!
//! The chain groups split into blocks indexed by level sets `J`
//! ([`ResolutionLayout`]).  The boundary matrices are assembled over the
//! group ring by a recursion on Fox-calculus Jacobians ([`delta_j_gr`],
//! [`assemble_boundary`], row convention: one row per source basis element),
//! and in parallel as integer Laurent polynomials in the abelianized
//! generators, which is how all evaluations are produced.  Evaluated
//! matrices switch to the column convention (one row per *target* basis
//! element): [`boundary_eval`] transposes internally, so composable products
//! read left to right and the cochain matrices of [`cochain_matrix`] have
//! the same shape as the multiplication operator on the Orlik–Solomon
//! algebra.
//!
//! Everything heavy — per-letter Jacobian images, word products, the
//! assembled Laurent matrices — is cached globally behind a mutex, so
//! repeated evaluations at different points do the symbolic work once.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use exact_linalg::{Matrix, PrimeField, ScalarDomain};
use fox_calculus::{rho_matrix, rho_tilde, GRMatrix, LaurentPoly, Word};
use index_combinatorics::{hyperplane_pairs, module_rank, ArrangementParams, Pair};
use num::traits::ToPrimitive;
use num::{BigInt, BigRational, One, Zero};
use thiserror::Error;

/// Errors raised by resolution assembly and evaluation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResolutionError {
    /// A level set must contain at least one level.
    #[error("the level set is empty")]
    EmptyLevelSet,
    /// A level set must increase strictly and stay within the arrangement.
    #[error("invalid level set: {reason}")]
    InvalidLevelSet { reason: String },
    /// Boundary degrees run from 1 to the top degree.
    #[error("degree {q} is out of range 1..={max}")]
    DegreeOutOfRange { q: usize, max: usize },
    /// A torus point needs one coordinate per hyperplane.
    #[error("torus point needs {expected} coordinates, got {got}")]
    TorusLength { expected: usize, got: usize },
    /// Torus coordinates must be invertible.
    #[error("torus coordinate for ({i}, {j}) is zero")]
    ZeroTorusCoordinate { i: u32, j: u32 },
    /// A weight vector needs one coordinate per hyperplane.
    #[error("weight vector needs {expected} coordinates, got {got}")]
    WeightLength { expected: usize, got: usize },
    /// A point or weight built for one arrangement was used with another.
    #[error("argument belongs to a different arrangement")]
    ArrangementMismatch,
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

/// One direct summand of a chain group: the block of basis elements sharing
/// a level set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JBlock {
    levels: Vec<u32>,
    rank: usize,
    offset: usize,
}

impl JBlock {
    /// The level set `J` (strictly increasing).
    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Rank of the block: the product of `j − 1` over its levels.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Offset of the block's first coordinate within its chain group.
    pub fn offset(&self) -> usize {
        self.offset
    }
}

/// Block structure of every chain group of one arrangement: per degree, the
/// ordered level-set blocks with ranks and offsets.  The order and the total
/// rank agree with `enumerate_basis`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionLayout {
    params: ArrangementParams,
    degrees: Vec<Vec<JBlock>>,
}

fn level_subsets(params: ArrangementParams, q: usize) -> Vec<Vec<u32>> {
    let lo = params.ell() + 1;
    let hi = params.n();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(q);
    fn extend(lo: u32, hi: u32, q: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if current.len() == q {
            out.push(current.clone());
            return;
        }
        for j in lo..=hi {
            current.push(j);
            extend(j + 1, hi, q, current, out);
            current.pop();
        }
    }
    extend(lo, hi, q, &mut current, &mut out);
    out
}

impl ResolutionLayout {
    /// Computes the layout of every degree `0..=top`.
    pub fn new(params: ArrangementParams) -> Self {
        let mut degrees = Vec::with_capacity(params.top_degree() + 1);
        for q in 0..=params.top_degree() {
            let mut blocks = Vec::new();
            let mut offset = 0;
            for levels in level_subsets(params, q) {
                let rank = module_rank(&levels) as usize;
                blocks.push(JBlock {
                    levels,
                    rank,
                    offset,
                });
                offset += rank;
            }
            degrees.push(blocks);
        }
        Self { params, degrees }
    }

    /// The arrangement this layout describes.
    pub fn params(&self) -> ArrangementParams {
        self.params
    }

    /// Blocks of the degree-`q` chain group, in level-set order.
    pub fn blocks(&self, q: usize) -> &[JBlock] {
        static EMPTY: Vec<JBlock> = Vec::new();
        self.degrees.get(q).unwrap_or(&EMPTY)
    }

    /// Total rank of the degree-`q` chain group.
    pub fn dim(&self, q: usize) -> usize {
        self.blocks(q).iter().map(JBlock::rank).sum()
    }

    /// Combined rank of the blocks whose level set contains the lowest
    /// undeleted level.  Those blocks always come first, so this is also the
    /// split position of the mapping-cone partition.
    pub fn lowest_level_rank(&self, q: usize) -> usize {
        let level = self.params.ell() + 1;
        self.blocks(q)
            .iter()
            .filter(|b| b.levels.first() == Some(&level))
            .map(JBlock::rank)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Torus points
// ---------------------------------------------------------------------------

/// A point of the algebraic torus: one invertible scalar per hyperplane, in
/// the global coordinate order.  Look entries up by pair with [`Self::get`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusPoint<E> {
    params: ArrangementParams,
    values: Vec<E>,
}

impl<E> TorusPoint<E> {
    /// The arrangement the point belongs to.
    pub fn params(&self) -> ArrangementParams {
        self.params
    }

    /// All coordinates in the global order.
    pub fn values(&self) -> &[E] {
        &self.values
    }

    /// The coordinate of one hyperplane.
    ///
    /// Panics if the pair is not a hyperplane of this arrangement.
    pub fn get(&self, pair: Pair) -> &E {
        let idx = self
            .params
            .pair_index(pair)
            .unwrap_or_else(|| panic!("({}, {}) is not a hyperplane", pair.i(), pair.j()));
        &self.values[idx]
    }
}

impl TorusPoint<BigRational> {
    /// A rational torus point; every coordinate must be nonzero.
    pub fn rational(
        params: ArrangementParams,
        values: Vec<BigRational>,
    ) -> Result<Self, ResolutionError> {
        check_torus_len(params, values.len())?;
        for (idx, v) in values.iter().enumerate() {
            if v.is_zero() {
                let pair = hyperplane_pairs(params)[idx];
                return Err(ResolutionError::ZeroTorusCoordinate {
                    i: pair.i(),
                    j: pair.j(),
                });
            }
        }
        Ok(Self { params, values })
    }

    /// The identity point (every coordinate one).
    pub fn ones(params: ArrangementParams) -> Self {
        Self {
            params,
            values: vec![BigRational::one(); params.hyperplane_count()],
        }
    }
}

impl TorusPoint<u64> {
    /// A torus point over a prime field; coordinates are reduced mod `p` and
    /// must be nonzero afterwards.
    pub fn mod_p(
        field: &PrimeField,
        params: ArrangementParams,
        values: Vec<u64>,
    ) -> Result<Self, ResolutionError> {
        check_torus_len(params, values.len())?;
        let reduced: Vec<u64> = values.iter().map(|&v| v % field.modulus()).collect();
        for (idx, &v) in reduced.iter().enumerate() {
            if v == 0 {
                let pair = hyperplane_pairs(params)[idx];
                return Err(ResolutionError::ZeroTorusCoordinate {
                    i: pair.i(),
                    j: pair.j(),
                });
            }
        }
        Ok(Self {
            params,
            values: reduced,
        })
    }
}

fn check_torus_len(params: ArrangementParams, got: usize) -> Result<(), ResolutionError> {
    let expected = params.hyperplane_count();
    if got != expected {
        return Err(ResolutionError::TorusLength { expected, got });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Group-ring route
// ---------------------------------------------------------------------------

fn validate_levels(params: ArrangementParams, j_set: &[u32]) -> Result<(), ResolutionError> {
    if j_set.is_empty() {
        return Err(ResolutionError::EmptyLevelSet);
    }
    let lo = params.ell() + 1;
    let hi = params.n();
    for w in j_set.windows(2) {
        if w[0] >= w[1] {
            return Err(ResolutionError::InvalidLevelSet {
                reason: format!("levels must increase strictly, got {:?}", j_set),
            });
        }
    }
    if j_set[0] < lo || *j_set.last().expect("nonempty") > hi {
        return Err(ResolutionError::InvalidLevelSet {
            reason: format!("levels must lie in [{lo}, {hi}], got {:?}", j_set),
        });
    }
    Ok(())
}

fn generator_column(level: u32) -> GRMatrix {
    let rows = (level - 1) as usize;
    let mut m = GRMatrix::zeros(rows, 1);
    for i in 1..level {
        let gamma = Word::generator(Pair::new(i, level).expect("i < level"));
        let entry = fox_calculus::GroupRingElement::from_word(gamma)
            .sub(&fox_calculus::GroupRingElement::one());
        m.set((i - 1) as usize, 0, entry);
    }
    m
}

/// The restriction matrix `Δ_J` over the group ring.
///
/// For a single level it is the column of `γ_{i,j} − 1`; for longer level
/// sets it is built recursively by applying the blockwise Jacobian expansion
/// at the last level to the previous matrix and negating.  Shape:
/// `rank(J) × rank(J minus its first level)`.
pub fn delta_j_gr(params: ArrangementParams, j_set: &[u32]) -> Result<GRMatrix, ResolutionError> {
    validate_levels(params, j_set)?;
    let mut m = generator_column(j_set[0]);
    for &level in &j_set[1..] {
        m = rho_tilde(&m, level).neg();
    }
    Ok(m)
}

/// The full boundary matrix `∂_q` over the group ring, in the row convention
/// (rows: degree-`q` coordinates; columns: degree-`q−1` coordinates).
///
/// Each source block `J` contributes one component per level `j_p ∈ J`,
/// routed to the target block `J ∖ {j_p}`: the restriction matrix itself for
/// the first level, and block-diagonal copies of the restriction matrix of
/// the level-set suffix for the later ones, replicated once per basis prefix.
pub fn assemble_boundary(
    params: ArrangementParams,
    q: usize,
) -> Result<GRMatrix, ResolutionError> {
    let top = params.top_degree();
    if q < 1 || q > top {
        return Err(ResolutionError::DegreeOutOfRange { q, max: top });
    }
    let layout = ResolutionLayout::new(params);
    let rows = layout.dim(q);
    let cols = layout.dim(q - 1);
    let col_offset: BTreeMap<Vec<u32>, usize> = layout
        .blocks(q - 1)
        .iter()
        .map(|b| (b.levels.to_vec(), b.offset))
        .collect();
    let mut out = GRMatrix::zeros(rows, cols);
    for block in layout.blocks(q) {
        let j_set = block.levels();
        for p in 0..q {
            let mut target: Vec<u32> = j_set.to_vec();
            target.remove(p);
            let co = col_offset[&target];
            let comp = delta_j_gr(params, &j_set[p..])?;
            let copies: usize = j_set[..p].iter().map(|&j| (j - 1) as usize).product();
            for copy in 0..copies {
                let ro = block.offset() + copy * comp.rows();
                let co = co + copy * comp.cols();
                for r in 0..comp.rows() {
                    for c in 0..comp.cols() {
                        let v = comp.get(r, c);
                        if !v.is_zero() {
                            out.set(ro + r, co + c, v.clone());
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Integer Laurent route
// ---------------------------------------------------------------------------

// Variables are indexed independently of the arrangement so that cached
// matrices are shared: pair (i, j) gets index C(j−1, 2) + i − 1.
fn universal_var(pair: Pair) -> u16 {
    let j = pair.j() as u32;
    let idx = (j - 1) * (j - 2) / 2 + pair.i() - 1;
    u16::try_from(idx).expect("variable index fits in u16")
}

type Exps = Vec<(u16, i16)>;

/// Sparse Laurent polynomial with integer coefficients in the universal
/// pair variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct IntLaurent {
    terms: BTreeMap<Exps, i64>,
}

impl IntLaurent {
    fn zero() -> Self {
        Self::default()
    }

    fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), 1);
        Self { terms }
    }

    fn monomial_word(letters: &[(Pair, i8)]) -> Self {
        let mut exps: BTreeMap<u16, i32> = BTreeMap::new();
        for &(pair, sign) in letters {
            *exps.entry(universal_var(pair)).or_insert(0) += sign as i32;
        }
        let key: Exps = exps
            .into_iter()
            .filter(|&(_, e)| e != 0)
            .map(|(v, e)| (v, i16::try_from(e).expect("exponent fits in i16")))
            .collect();
        let mut terms = BTreeMap::new();
        terms.insert(key, 1);
        Self { terms }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_scaled(&mut self, rhs: &IntLaurent, scale: i64) {
        if scale == 0 {
            return;
        }
        for (e, &c) in &rhs.terms {
            let inc = c.checked_mul(scale).expect("coefficient overflow");
            let slot = self.terms.entry(e.clone()).or_insert(0);
            *slot = slot.checked_add(inc).expect("coefficient overflow");
            if *slot == 0 {
                self.terms.remove(e);
            }
        }
    }

    fn mul(&self, rhs: &IntLaurent) -> IntLaurent {
        let mut out = IntLaurent::zero();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                let mut exps: BTreeMap<u16, i32> = ea.iter().map(|&(v, e)| (v, e as i32)).collect();
                for &(v, e) in eb {
                    *exps.entry(v).or_insert(0) += e as i32;
                }
                let key: Exps = exps
                    .into_iter()
                    .filter(|&(_, e)| e != 0)
                    .map(|(v, e)| (v, i16::try_from(e).expect("exponent fits in i16")))
                    .collect();
                let inc = ca.checked_mul(cb).expect("coefficient overflow");
                let slot = out.terms.entry(key).or_insert(0);
                *slot = slot.checked_add(inc).expect("coefficient overflow");
                if *slot == 0 {
                    out.terms.remove(&{
                        // Rebuild the key: the entry above consumed it.
                        let mut exps: BTreeMap<u16, i32> =
                            ea.iter().map(|&(v, e)| (v, e as i32)).collect();
                        for &(v, e) in eb {
                            *exps.entry(v).or_insert(0) += e as i32;
                        }
                        exps.into_iter()
                            .filter(|&(_, e)| e != 0)
                            .map(|(v, e)| (v, e as i16))
                            .collect::<Exps>()
                    });
                }
            }
        }
        out
    }
}

/// Dense matrix of integer Laurent polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
struct LMat {
    rows: usize,
    cols: usize,
    entries: Vec<IntLaurent>,
}

impl LMat {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![IntLaurent::zero(); rows * cols],
        }
    }

    fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k, k);
        for d in 0..k {
            m.entries[d * k + d] = IntLaurent::one();
        }
        m
    }

    fn get(&self, r: usize, c: usize) -> &IntLaurent {
        &self.entries[r * self.cols + c]
    }

    fn mul(&self, rhs: &LMat) -> LMat {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = LMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let prod = a.mul(b);
                    out.entries[i * rhs.cols + j].add_scaled(&prod, 1);
                }
            }
        }
        out
    }

    fn add_block_scaled(&mut self, r0: usize, c0: usize, block: &LMat, scale: i64) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                let v = block.get(r, c);
                if !v.is_zero() {
                    self.entries[(r0 + r) * self.cols + (c0 + c)].add_scaled(v, scale);
                }
            }
        }
    }
}

fn block_dim(levels: &[u32]) -> usize {
    levels.iter().map(|&j| (j - 1) as usize).product()
}

#[derive(Default)]
struct Caches {
    rho: HashMap<(u32, Pair, i8), Arc<GRMatrix>>,
    letter: HashMap<(Vec<u32>, Pair, i8), Arc<LMat>>,
    word: HashMap<(Vec<u32>, Vec<(Pair, i8)>), Arc<LMat>>,
    delta: HashMap<Vec<u32>, Arc<LMat>>,
    boundary: HashMap<(u32, u32, usize), Arc<LMat>>,
}

static CACHES: OnceLock<Mutex<Caches>> = OnceLock::new();

fn caches() -> &'static Mutex<Caches> {
    CACHES.get_or_init(|| Mutex::new(Caches::default()))
}

fn rho_flat(level: u32, pair: Pair, sign: i8) -> Arc<GRMatrix> {
    let key = (level, pair, sign);
    if let Some(hit) = caches().lock().expect("cache lock").rho.get(&key) {
        return Arc::clone(hit);
    }
    let built = Arc::new(rho_matrix(&Word::generator_power(pair, sign), level));
    let mut guard = caches().lock().expect("cache lock");
    Arc::clone(guard.rho.entry(key).or_insert(built))
}

/// Image of a single generator (or inverse) under the abelianized blockwise
/// Jacobian expansions at the given levels, applied innermost-first.
fn letter_image(tail: &[u32], pair: Pair, sign: i8) -> Arc<LMat> {
    let key = (tail.to_vec(), pair, sign);
    if let Some(hit) = caches().lock().expect("cache lock").letter.get(&key) {
        return Arc::clone(hit);
    }
    let built = if tail.is_empty() {
        let mut m = LMat::zeros(1, 1);
        m.entries[0] = IntLaurent::monomial_word(&[(pair, sign)]);
        m
    } else {
        debug_assert!(pair.j() < tail[0], "letters stay below the expansion level");
        let level = tail[0];
        let rest = &tail[1..];
        let rho = rho_flat(level, pair, sign);
        let side = (level - 1) as usize;
        let inner = block_dim(rest);
        let mut m = LMat::zeros(side * inner, side * inner);
        for r in 0..side {
            for c in 0..side {
                let entry = rho.get(r, c);
                if entry.is_zero() {
                    continue;
                }
                for (word, coeff) in entry.terms() {
                    let image = word_image(rest, word.letters());
                    let scale = coeff.to_integer().to_i64().expect("integer coefficient");
                    debug_assert!(coeff.is_integer());
                    m.add_block_scaled(r * inner, c * inner, &image, scale);
                }
            }
        }
        m
    };
    let built = Arc::new(built);
    let mut guard = caches().lock().expect("cache lock");
    Arc::clone(guard.letter.entry(key).or_insert(built))
}

/// Image of a word: the product of its letter images.  Every prefix of the
/// word is memoized, so words sharing prefixes (conjugates by a common
/// element, most prominently) cost one matrix product each.
fn word_image(tail: &[u32], letters: &[(Pair, i8)]) -> Arc<LMat> {
    if letters.is_empty() {
        return Arc::new(LMat::identity(block_dim(tail)));
    }
    if letters.len() == 1 {
        return letter_image(tail, letters[0].0, letters[0].1);
    }
    let key = (tail.to_vec(), letters.to_vec());
    if let Some(hit) = caches().lock().expect("cache lock").word.get(&key) {
        return Arc::clone(hit);
    }
    let (prefix, last) = letters.split_at(letters.len() - 1);
    let left = word_image(tail, prefix);
    let right = letter_image(tail, last[0].0, last[0].1);
    let built = Arc::new(left.mul(&right));
    let mut guard = caches().lock().expect("cache lock");
    Arc::clone(guard.word.entry(key).or_insert(built))
}

/// Abelianized `Δ_J` as integer Laurent polynomials.  Independent of the
/// arrangement: only the level set matters.
fn delta_laurent(j_set: &[u32]) -> Arc<LMat> {
    let key = j_set.to_vec();
    if let Some(hit) = caches().lock().expect("cache lock").delta.get(&key) {
        return Arc::clone(hit);
    }
    let first = j_set[0];
    let tail = &j_set[1..];
    let inner = block_dim(tail);
    let identity = LMat::identity(inner);
    let mut m = LMat::zeros((first - 1) as usize * inner, inner);
    let sign = if (j_set.len() - 1) % 2 == 1 { -1 } else { 1 };
    for i in 1..first {
        let gamma = Pair::new(i, first).expect("i < level");
        let image = letter_image(tail, gamma, 1);
        let r0 = (i - 1) as usize * inner;
        m.add_block_scaled(r0, 0, &image, sign);
        m.add_block_scaled(r0, 0, &identity, -sign);
    }
    let built = Arc::new(m);
    let mut guard = caches().lock().expect("cache lock");
    Arc::clone(guard.delta.entry(key).or_insert(built))
}

fn boundary_laurent_cached(
    params: ArrangementParams,
    q: usize,
) -> Result<Arc<LMat>, ResolutionError> {
    let top = params.top_degree();
    if q < 1 || q > top {
        return Err(ResolutionError::DegreeOutOfRange { q, max: top });
    }
    let key = (params.n(), params.ell(), q);
    if let Some(hit) = caches().lock().expect("cache lock").boundary.get(&key) {
        return Ok(Arc::clone(hit));
    }
    let layout = ResolutionLayout::new(params);
    let rows = layout.dim(q);
    let cols = layout.dim(q - 1);
    let col_offset: BTreeMap<Vec<u32>, usize> = layout
        .blocks(q - 1)
        .iter()
        .map(|b| (b.levels.to_vec(), b.offset))
        .collect();
    let mut out = LMat::zeros(rows, cols);
    for block in layout.blocks(q) {
        let j_set = block.levels();
        for p in 0..q {
            let mut target: Vec<u32> = j_set.to_vec();
            target.remove(p);
            let co = col_offset[&target];
            let comp = delta_laurent(&j_set[p..]);
            let copies: usize = j_set[..p].iter().map(|&j| (j - 1) as usize).product();
            for copy in 0..copies {
                out.add_block_scaled(
                    block.offset() + copy * comp.rows,
                    co + copy * comp.cols,
                    &comp,
                    1,
                );
            }
        }
    }
    let built = Arc::new(out);
    let mut guard = caches().lock().expect("cache lock");
    Ok(Arc::clone(guard.boundary.entry(key).or_insert(built)))
}

/// The abelianized boundary matrix as Laurent polynomials over the
/// arrangement's own coordinates, in the row convention — `(rows, cols,
/// row-major entries)`.  Mostly useful for cross-checking against the
/// group-ring route.
pub fn boundary_laurent(
    params: ArrangementParams,
    q: usize,
) -> Result<(usize, usize, Vec<LaurentPoly>), ResolutionError> {
    let lm = boundary_laurent_cached(params, q)?;
    let var_of = universal_to_local(params);
    let vars = params.hyperplane_count();
    let entries = lm
        .entries
        .iter()
        .map(|e| int_laurent_to_poly(e, &var_of, vars))
        .collect();
    Ok((lm.rows, lm.cols, entries))
}

fn universal_to_local(params: ArrangementParams) -> HashMap<u16, usize> {
    hyperplane_pairs(params)
        .into_iter()
        .map(|pair| {
            (
                universal_var(pair),
                params.pair_index(pair).expect("hyperplane pair"),
            )
        })
        .collect()
}

fn int_laurent_to_poly(e: &IntLaurent, var_of: &HashMap<u16, usize>, vars: usize) -> LaurentPoly {
    let mut out = LaurentPoly::zero(vars);
    for (exps, &c) in &e.terms {
        let mut dense = vec![0i32; vars];
        for &(v, p) in exps {
            dense[var_of[&v]] = p as i32;
        }
        out = out.add(&LaurentPoly::monomial(
            dense,
            BigRational::from_integer(BigInt::from(c)),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

fn rational_power(
    base: &BigRational,
    exp: i16,
    memo: &mut HashMap<(u16, i16), BigRational>,
    var: u16,
) -> BigRational {
    if let Some(hit) = memo.get(&(var, exp)) {
        return hit.clone();
    }
    let e = exp.unsigned_abs() as u32;
    let mut v = BigRational::new(base.numer().pow(e), base.denom().pow(e));
    if exp < 0 {
        v = v.recip();
    }
    memo.insert((var, exp), v.clone());
    v
}

fn eval_entry_rational(
    e: &IntLaurent,
    point: &[BigRational],
    local_of: &HashMap<u16, usize>,
    memo: &mut HashMap<(u16, i16), BigRational>,
) -> BigRational {
    let mut acc = BigRational::zero();
    for (exps, &c) in &e.terms {
        let mut term = BigRational::from_integer(BigInt::from(c));
        for &(v, p) in exps {
            term *= rational_power(&point[local_of[&v]], p, memo, v);
        }
        acc += term;
    }
    acc
}

/// Largest `n` for which the symbolic Laurent matrices are built and cached.
/// Beyond this the term counts explode, so the public evaluation routines
/// switch to a direct per-point recursion over scalar values instead.
const SYMBOLIC_LIMIT: u32 = 5;

fn boundary_eval_symbolic(
    params: ArrangementParams,
    q: usize,
    t: &TorusPoint<BigRational>,
) -> Result<Matrix<BigRational>, ResolutionError> {
    let lm = boundary_laurent_cached(params, q)?;
    let local_of = universal_to_local(params);
    let mut memo = HashMap::new();
    let mut data = vec![BigRational::zero(); lm.rows * lm.cols];
    for r in 0..lm.rows {
        for c in 0..lm.cols {
            let v = eval_entry_rational(lm.get(r, c), t.values(), &local_of, &mut memo);
            // Transposed placement: row-convention (r, c) lands at (c, r).
            data[c * lm.rows + r] = v;
        }
    }
    Ok(Matrix::new(lm.cols, lm.rows, data).expect("shape by construction"))
}

fn boundary_eval_mod_symbolic(
    field: &PrimeField,
    params: ArrangementParams,
    q: usize,
    t: &TorusPoint<u64>,
) -> Result<Matrix<u64>, ResolutionError> {
    let lm = boundary_laurent_cached(params, q)?;
    let local_of = universal_to_local(params);
    let mut memo: HashMap<(u16, i16), u64> = HashMap::new();
    let mut data = vec![0u64; lm.rows * lm.cols];
    for r in 0..lm.rows {
        for c in 0..lm.cols {
            let mut acc = 0u64;
            for (exps, &coeff) in &lm.get(r, c).terms {
                let mut term = field.embed_i64(coeff);
                for &(v, p) in exps {
                    let base = t.values()[local_of[&v]];
                    let pw = *memo
                        .entry((v, p))
                        .or_insert_with(|| field.pow(base, p as i64));
                    term = field.mul(&term, &pw);
                }
                acc = field.add(&acc, &term);
            }
            data[c * lm.rows + r] = acc;
        }
    }
    Ok(Matrix::new(lm.cols, lm.rows, data).expect("shape by construction"))
}

fn boundary_derivative_symbolic(
    params: ArrangementParams,
    q: usize,
    lambda: &[BigRational],
) -> Result<Matrix<BigRational>, ResolutionError> {
    let lm = boundary_laurent_cached(params, q)?;
    let local_of = universal_to_local(params);
    let mut data = vec![BigRational::zero(); lm.rows * lm.cols];
    for r in 0..lm.rows {
        for c in 0..lm.cols {
            let mut acc = BigRational::zero();
            for (exps, &coeff) in &lm.get(r, c).terms {
                let mut weight = BigRational::zero();
                for &(v, p) in exps {
                    weight += &lambda[local_of[&v]] * BigRational::from_integer(BigInt::from(p));
                }
                acc += weight * BigRational::from_integer(BigInt::from(coeff));
            }
            data[c * lm.rows + r] = acc;
        }
    }
    Ok(Matrix::new(lm.cols, lm.rows, data).expect("shape by construction"))
}

// ---------------------------------------------------------------------------
// Direct evaluation at a point
// ---------------------------------------------------------------------------
//
// For large arrangements the symbolic Laurent matrices are far too fat to
// build, but the blockwise recursion goes through verbatim with scalar
// values in place of polynomials.  The backend supplies the arithmetic and
// the coordinate values; one evaluator instance carries the memo tables for
// a single point.

trait PointBackend {
    type Value: Clone;

    fn zero(&self) -> Self::Value;
    fn is_zero(&self, v: &Self::Value) -> bool;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn integer(&self, c: i64) -> Self::Value;
    /// Value of `t_{i,j}^sign` for the given pair.
    fn generator(&self, pair: Pair, sign: i8) -> Self::Value;
}

struct RationalBackend {
    point: HashMap<Pair, BigRational>,
}

impl RationalBackend {
    fn new(t: &TorusPoint<BigRational>) -> Self {
        let point = hyperplane_pairs(t.params())
            .into_iter()
            .zip(t.values().iter().cloned())
            .collect();
        Self { point }
    }
}

impl PointBackend for RationalBackend {
    type Value = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }

    fn is_zero(&self, v: &BigRational) -> bool {
        v.is_zero()
    }

    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }

    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }

    fn integer(&self, c: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(c))
    }

    fn generator(&self, pair: Pair, sign: i8) -> BigRational {
        let base = &self.point[&pair];
        let e = sign.unsigned_abs() as u32;
        let v = BigRational::new(base.numer().pow(e), base.denom().pow(e));
        if sign < 0 {
            v.recip()
        } else {
            v
        }
    }
}

struct ModBackend<'f> {
    field: &'f PrimeField,
    point: HashMap<Pair, u64>,
}

impl<'f> ModBackend<'f> {
    fn new(field: &'f PrimeField, t: &TorusPoint<u64>) -> Self {
        let point = hyperplane_pairs(t.params())
            .into_iter()
            .zip(t.values().iter().copied())
            .collect();
        Self { field, point }
    }
}

impl PointBackend for ModBackend<'_> {
    type Value = u64;

    fn zero(&self) -> u64 {
        0
    }

    fn is_zero(&self, v: &u64) -> bool {
        *v == 0
    }

    fn add(&self, a: &u64, b: &u64) -> u64 {
        self.field.add(a, b)
    }

    fn mul(&self, a: &u64, b: &u64) -> u64 {
        self.field.mul(a, b)
    }

    fn integer(&self, c: i64) -> u64 {
        self.field.embed_i64(c)
    }

    fn generator(&self, pair: Pair, sign: i8) -> u64 {
        self.field.pow(self.point[&pair], sign as i64)
    }
}

/// First-order jet at the identity: values `a + εb` with `ε² = 0`, where the
/// coordinate `t_{i,j}` is sent to `1 + ε·λ_{i,j}`.  The `ε`-part of the
/// evaluated boundary is exactly its directional derivative at the identity.
type Jet = (BigRational, BigRational);

struct JetBackend {
    direction: HashMap<Pair, BigRational>,
}

impl JetBackend {
    fn new(params: ArrangementParams, lambda: &[BigRational]) -> Self {
        let direction = hyperplane_pairs(params)
            .into_iter()
            .zip(lambda.iter().cloned())
            .collect();
        Self { direction }
    }
}

impl PointBackend for JetBackend {
    type Value = Jet;

    fn zero(&self) -> Jet {
        (BigRational::zero(), BigRational::zero())
    }

    fn is_zero(&self, v: &Jet) -> bool {
        v.0.is_zero() && v.1.is_zero()
    }

    fn add(&self, a: &Jet, b: &Jet) -> Jet {
        (&a.0 + &b.0, &a.1 + &b.1)
    }

    fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        (&a.0 * &b.0, &a.0 * &b.1 + &a.1 * &b.0)
    }

    fn integer(&self, c: i64) -> Jet {
        (
            BigRational::from_integer(BigInt::from(c)),
            BigRational::zero(),
        )
    }

    fn generator(&self, pair: Pair, sign: i8) -> Jet {
        (
            BigRational::one(),
            &self.direction[&pair] * BigRational::from_integer(BigInt::from(sign)),
        )
    }
}

/// Dense matrix of backend values.
struct VMat<V> {
    rows: usize,
    cols: usize,
    entries: Vec<V>,
}

impl<V: Clone> VMat<V> {
    fn zeros<B: PointBackend<Value = V>>(backend: &B, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![backend.zero(); rows * cols],
        }
    }

    fn identity<B: PointBackend<Value = V>>(backend: &B, k: usize) -> Self {
        let mut m = Self::zeros(backend, k, k);
        for d in 0..k {
            m.entries[d * k + d] = backend.integer(1);
        }
        m
    }

    fn get(&self, r: usize, c: usize) -> &V {
        &self.entries[r * self.cols + c]
    }

    fn mul<B: PointBackend<Value = V>>(&self, backend: &B, rhs: &VMat<V>) -> VMat<V> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = VMat::zeros(backend, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if backend.is_zero(a) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if backend.is_zero(b) {
                        continue;
                    }
                    let slot = &mut out.entries[i * rhs.cols + j];
                    *slot = backend.add(slot, &backend.mul(a, b));
                }
            }
        }
        out
    }

    fn add_block_scaled<B: PointBackend<Value = V>>(
        &mut self,
        backend: &B,
        r0: usize,
        c0: usize,
        block: &VMat<V>,
        scale: &V,
    ) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                let v = block.get(r, c);
                if backend.is_zero(v) {
                    continue;
                }
                let slot = &mut self.entries[(r0 + r) * self.cols + (c0 + c)];
                *slot = backend.add(slot, &backend.mul(v, scale));
            }
        }
    }
}

/// Per-point mirror of the cached symbolic recursion: same block structure,
/// same memoization points, scalar entries.
struct DirectEvaluator<'b, B: PointBackend> {
    backend: &'b B,
    letter: HashMap<(Vec<u32>, Pair, i8), Arc<VMat<B::Value>>>,
    word: HashMap<(Vec<u32>, Vec<(Pair, i8)>), Arc<VMat<B::Value>>>,
    delta: HashMap<Vec<u32>, Arc<VMat<B::Value>>>,
}

impl<'b, B: PointBackend> DirectEvaluator<'b, B> {
    fn new(backend: &'b B) -> Self {
        Self {
            backend,
            letter: HashMap::new(),
            word: HashMap::new(),
            delta: HashMap::new(),
        }
    }

    fn letter_image(&mut self, tail: &[u32], pair: Pair, sign: i8) -> Arc<VMat<B::Value>> {
        let key = (tail.to_vec(), pair, sign);
        if let Some(hit) = self.letter.get(&key) {
            return Arc::clone(hit);
        }
        let built = if tail.is_empty() {
            VMat {
                rows: 1,
                cols: 1,
                entries: vec![self.backend.generator(pair, sign)],
            }
        } else {
            debug_assert!(pair.j() < tail[0], "letters stay below the expansion level");
            let level = tail[0];
            let rest = &tail[1..];
            let rho = rho_flat(level, pair, sign);
            let side = (level - 1) as usize;
            let inner = block_dim(rest);
            let mut m = VMat::zeros(self.backend, side * inner, side * inner);
            for r in 0..side {
                for c in 0..side {
                    let entry = rho.get(r, c);
                    if entry.is_zero() {
                        continue;
                    }
                    for (word, coeff) in entry.terms() {
                        let image = self.word_image(rest, word.letters());
                        debug_assert!(coeff.is_integer());
                        let scale = self
                            .backend
                            .integer(coeff.to_integer().to_i64().expect("integer coefficient"));
                        m.add_block_scaled(self.backend, r * inner, c * inner, &image, &scale);
                    }
                }
            }
            m
        };
        let built = Arc::new(built);
        self.letter.insert(key, Arc::clone(&built));
        built
    }

    fn word_image(&mut self, tail: &[u32], letters: &[(Pair, i8)]) -> Arc<VMat<B::Value>> {
        if letters.is_empty() {
            return Arc::new(VMat::identity(self.backend, block_dim(tail)));
        }
        if letters.len() == 1 {
            return self.letter_image(tail, letters[0].0, letters[0].1);
        }
        let key = (tail.to_vec(), letters.to_vec());
        if let Some(hit) = self.word.get(&key) {
            return Arc::clone(hit);
        }
        let (prefix, last) = letters.split_at(letters.len() - 1);
        let left = self.word_image(tail, prefix);
        let right = self.letter_image(tail, last[0].0, last[0].1);
        let built = Arc::new(left.mul(self.backend, &right));
        self.word.insert(key, Arc::clone(&built));
        built
    }

    fn delta(&mut self, j_set: &[u32]) -> Arc<VMat<B::Value>> {
        let key = j_set.to_vec();
        if let Some(hit) = self.delta.get(&key) {
            return Arc::clone(hit);
        }
        let first = j_set[0];
        let tail = &j_set[1..];
        let inner = block_dim(tail);
        let identity = VMat::identity(self.backend, inner);
        let mut m = VMat::zeros(self.backend, (first - 1) as usize * inner, inner);
        let sign = if (j_set.len() - 1) % 2 == 1 { -1 } else { 1 };
        let plus = self.backend.integer(sign);
        let minus = self.backend.integer(-sign);
        for i in 1..first {
            let gamma = Pair::new(i, first).expect("i < level");
            let image = self.letter_image(tail, gamma, 1);
            let r0 = (i - 1) as usize * inner;
            m.add_block_scaled(self.backend, r0, 0, &image, &plus);
            m.add_block_scaled(self.backend, r0, 0, &identity, &minus);
        }
        let built = Arc::new(m);
        self.delta.insert(key, Arc::clone(&built));
        built
    }

    /// Evaluated `∂_q` in the row convention.
    fn boundary(
        &mut self,
        params: ArrangementParams,
        q: usize,
    ) -> Result<VMat<B::Value>, ResolutionError> {
        let top = params.top_degree();
        if q < 1 || q > top {
            return Err(ResolutionError::DegreeOutOfRange { q, max: top });
        }
        let layout = ResolutionLayout::new(params);
        let rows = layout.dim(q);
        let cols = layout.dim(q - 1);
        let col_offset: BTreeMap<Vec<u32>, usize> = layout
            .blocks(q - 1)
            .iter()
            .map(|b| (b.levels.to_vec(), b.offset))
            .collect();
        let one = self.backend.integer(1);
        let mut out = VMat::zeros(self.backend, rows, cols);
        for block in layout.blocks(q) {
            let j_set = block.levels();
            for p in 0..q {
                let mut target: Vec<u32> = j_set.to_vec();
                target.remove(p);
                let co = col_offset[&target];
                let comp = self.delta(&j_set[p..]);
                let copies: usize = j_set[..p].iter().map(|&j| (j - 1) as usize).product();
                for copy in 0..copies {
                    out.add_block_scaled(
                        self.backend,
                        block.offset() + copy * comp.rows,
                        co + copy * comp.cols,
                        &comp,
                        &one,
                    );
                }
            }
        }
        Ok(out)
    }
}

/// Transposes a row-convention evaluated boundary into the column convention.
fn transpose_vmat<V: Clone + PartialEq + std::fmt::Debug>(vm: &VMat<V>, fill: V) -> Matrix<V> {
    let mut data = vec![fill; vm.rows * vm.cols];
    for r in 0..vm.rows {
        for c in 0..vm.cols {
            data[c * vm.rows + r] = vm.get(r, c).clone();
        }
    }
    Matrix::new(vm.cols, vm.rows, data).expect("shape by construction")
}

fn boundary_eval_direct(
    params: ArrangementParams,
    q: usize,
    t: &TorusPoint<BigRational>,
) -> Result<Matrix<BigRational>, ResolutionError> {
    let backend = RationalBackend::new(t);
    let mut eval = DirectEvaluator::new(&backend);
    let vm = eval.boundary(params, q)?;
    Ok(transpose_vmat(&vm, BigRational::zero()))
}

fn boundary_eval_mod_direct(
    field: &PrimeField,
    params: ArrangementParams,
    q: usize,
    t: &TorusPoint<u64>,
) -> Result<Matrix<u64>, ResolutionError> {
    let backend = ModBackend::new(field, t);
    let mut eval = DirectEvaluator::new(&backend);
    let vm = eval.boundary(params, q)?;
    Ok(transpose_vmat(&vm, 0))
}

fn boundary_derivative_direct(
    params: ArrangementParams,
    q: usize,
    lambda: &[BigRational],
) -> Result<Matrix<BigRational>, ResolutionError> {
    let backend = JetBackend::new(params, lambda);
    let mut eval = DirectEvaluator::new(&backend);
    let vm = eval.boundary(params, q)?;
    let mut data = vec![BigRational::zero(); vm.rows * vm.cols];
    for r in 0..vm.rows {
        for c in 0..vm.cols {
            data[c * vm.rows + r] = vm.get(r, c).1.clone();
        }
    }
    Ok(Matrix::new(vm.cols, vm.rows, data).expect("shape by construction"))
}

/// Evaluation of `∂_q` at a rational torus point, transposed into the column
/// convention: rows index degree-`q−1` coordinates, columns degree-`q`
/// coordinates, so `boundary_eval(q) · boundary_eval(q+1)` is the composite.
pub fn boundary_eval(
    params: ArrangementParams,
    q: usize,
    t: &TorusPoint<BigRational>,
) -> Result<Matrix<BigRational>, ResolutionError> {
    if t.params() != params {
        return Err(ResolutionError::ArrangementMismatch);
    }
    if params.n() <= SYMBOLIC_LIMIT {
        boundary_eval_symbolic(params, q, t)
    } else {
        boundary_eval_direct(params, q, t)
    }
}

/// Evaluation of `∂_q` over a prime field, in the column convention.
pub fn boundary_eval_mod(
    field: &PrimeField,
    params: ArrangementParams,
    q: usize,
    t: &TorusPoint<u64>,
) -> Result<Matrix<u64>, ResolutionError> {
    if t.params() != params {
        return Err(ResolutionError::ArrangementMismatch);
    }
    if params.n() <= SYMBOLIC_LIMIT {
        boundary_eval_mod_symbolic(field, params, q, t)
    } else {
        boundary_eval_mod_direct(field, params, q, t)
    }
}

/// Entrywise derivative of `t ↦ ∂_q(t)` at the identity in the direction of
/// a weight vector (coordinates in the global hyperplane order), in the
/// column convention.
pub fn boundary_derivative(
    params: ArrangementParams,
    q: usize,
    lambda: &[BigRational],
) -> Result<Matrix<BigRational>, ResolutionError> {
    let expected = params.hyperplane_count();
    if lambda.len() != expected {
        return Err(ResolutionError::WeightLength {
            expected,
            got: lambda.len(),
        });
    }
    if params.n() <= SYMBOLIC_LIMIT {
        boundary_derivative_symbolic(params, q, lambda)
    } else {
        boundary_derivative_direct(params, q, lambda)
    }
}

/// Cochain matrix `δ^q(t) = (−1)^q · transpose(∂_{q+1}(t))`, in the column
/// convention: rows index degree-`q+1` coordinates, columns degree-`q`.
pub fn cochain_matrix(
    params: ArrangementParams,
    q: usize,
    t: &TorusPoint<BigRational>,
) -> Result<Matrix<BigRational>, ResolutionError> {
    let evaluated = boundary_eval(params, q + 1, t)?;
    let mut out = evaluated.transpose();
    if q % 2 == 1 {
        out = out.map(|v| -v.clone());
    }
    Ok(out)
}

/// Cochain matrix over a prime field.
pub fn cochain_matrix_mod(
    field: &PrimeField,
    params: ArrangementParams,
    q: usize,
    t: &TorusPoint<u64>,
) -> Result<Matrix<u64>, ResolutionError> {
    let evaluated = boundary_eval_mod(field, params, q + 1, t)?;
    let mut out = evaluated.transpose();
    if q % 2 == 1 {
        out = out.map(|v| field.neg(v));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Mapping cone
// ---------------------------------------------------------------------------

/// The boundary matrix `∂_{q+1}` partitioned along the mapping-cone
/// decomposition.  Rows and columns split at the blocks whose level set
/// contains the lowest undeleted level (those come first in the layout).
///
/// The top-left block carries the shifted copies of the smaller
/// arrangement's resolution: the cone construction reverses the sign of
/// their boundary, so the shifted summand's own differential is
/// [`Self::cone_shift_boundary`], the *negation* of the literal block.  The
/// top-right block is the comparison chain map; the bottom-left block is
/// zero; the bottom-right block is the smaller arrangement's boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingConeBlocks {
    row_split: usize,
    col_split: usize,
    top_left: GRMatrix,
    top_right: GRMatrix,
    bottom_left: GRMatrix,
    bottom_right: GRMatrix,
}

impl MappingConeBlocks {
    /// Number of rows in the shifted (lowest-level) part.
    pub fn row_split(&self) -> usize {
        self.row_split
    }

    /// Number of columns in the shifted part.
    pub fn col_split(&self) -> usize {
        self.col_split
    }

    /// Rows: shifted part; columns: shifted part.
    pub fn top_left(&self) -> &GRMatrix {
        &self.top_left
    }

    /// Rows: shifted part; columns: remaining part (the chain map).
    pub fn top_right(&self) -> &GRMatrix {
        &self.top_right
    }

    /// Rows: remaining part; columns: shifted part (zero).
    pub fn bottom_left(&self) -> &GRMatrix {
        &self.bottom_left
    }

    /// Rows and columns in the remaining part: the smaller arrangement's
    /// boundary matrix.
    pub fn bottom_right(&self) -> &GRMatrix {
        &self.bottom_right
    }

    /// The differential of the shifted summand itself: the sign-reversed
    /// top-left block.
    pub fn cone_shift_boundary(&self) -> GRMatrix {
        self.top_left.neg()
    }
}

fn submatrix(m: &GRMatrix, r0: usize, r1: usize, c0: usize, c1: usize) -> GRMatrix {
    let mut out = GRMatrix::zeros(r1 - r0, c1 - c0);
    for r in r0..r1 {
        for c in c0..c1 {
            let v = m.get(r, c);
            if !v.is_zero() {
                out.set(r - r0, c - c0, v.clone());
            }
        }
    }
    out
}

/// Partitions `∂_{q+1}` along the mapping-cone block structure.
pub fn mapping_cone_blocks(
    params: ArrangementParams,
    q: usize,
) -> Result<MappingConeBlocks, ResolutionError> {
    let boundary = assemble_boundary(params, q + 1)?;
    let layout = ResolutionLayout::new(params);
    let row_split = layout.lowest_level_rank(q + 1);
    let col_split = layout.lowest_level_rank(q);
    let rows = boundary.rows();
    let cols = boundary.cols();
    Ok(MappingConeBlocks {
        row_split,
        col_split,
        top_left: submatrix(&boundary, 0, row_split, 0, col_split),
        top_right: submatrix(&boundary, 0, row_split, col_split, cols),
        bottom_left: submatrix(&boundary, row_split, rows, 0, col_split),
        bottom_right: submatrix(&boundary, row_split, rows, col_split, cols),
    })
}
