//! Index combinatorics for discriminantal arrangements A(n, ℓ).
//!
//! The arrangement A(n, ℓ) consists of the N = C(n,2) − C(ℓ,2) hyperplanes
//! H_{i,j} indexed by pairs (i, j) with ℓ+1 ≤ j ≤ n and 1 ≤ i < j.  This
//! crate enumerates those index pairs in the global coordinate order used by
//! every other crate in the workspace, enumerates the graded basis indices
//! (I, J) shared by the Orlik–Solomon algebra and the chain complex of the
//! group P_{n,ℓ}, computes block ranks d_J, and enumerates the admissible
//! index sets that drive the closed-form Orlik–Solomon differential.
//!
//! # Global coordinate order
//!
//! Pairs are ordered lexicographically by (j, i):
//! (1, ℓ+1), …, (ℓ, ℓ+1), (1, ℓ+2), …, (n−1, n).
//! Weight vectors and torus points everywhere in the workspace list their
//! coordinates in this order.  Basis indices (I, J) of fixed degree q are
//! ordered J-lexicographically first and I-lexicographically second, so that
//! the indices sharing a given J form one contiguous block of columns.

use std::fmt;

use thiserror::Error;

/// Errors for constructor and query validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    /// Arrangement parameters outside the valid range.
    #[error("invalid arrangement parameters (n = {n}, ell = {ell}): need 2 <= n and 1 <= ell <= n - 1")]
    InvalidParams { n: u32, ell: u32 },
    /// An index pair that is not of the form 1 <= i < j.
    #[error("invalid index pair ({i}, {j}): need 1 <= i < j")]
    InvalidPair { i: u32, j: u32 },
    /// A basis index (I, J) violating the shape constraints.
    #[error("invalid basis index: {reason}")]
    InvalidBasisIndex { reason: String },
    /// An admissibility query with out-of-range arguments.
    #[error("invalid admissibility query: {reason}")]
    InvalidAdmissibleQuery { reason: String },
}

fn choose2(x: u32) -> u64 {
    let x = x as u64;
    x * x.saturating_sub(1) / 2
}

/// The parameters (n, ℓ) of a discriminantal arrangement A(n, ℓ).
///
/// Valid parameters satisfy 2 ≤ n and 1 ≤ ℓ ≤ n−1, which makes the derived
/// hyperplane count N = C(n,2) − C(ℓ,2) at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrangementParams {
    n: u32,
    ell: u32,
}

impl ArrangementParams {
    /// Validates and constructs arrangement parameters.
    pub fn new(n: u32, ell: u32) -> Result<Self, DomainError> {
        if n < 2 || ell < 1 || ell > n - 1 {
            return Err(DomainError::InvalidParams { n, ell });
        }
        Ok(ArrangementParams { n, ell })
    }

    /// The number of points n.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// The puncture level ℓ.
    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// The hyperplane count N = C(n,2) − C(ℓ,2).
    pub fn hyperplane_count(&self) -> usize {
        (choose2(self.n) - choose2(self.ell)) as usize
    }

    /// The top nonvanishing degree n − ℓ of the graded basis.
    pub fn top_degree(&self) -> usize {
        (self.n - self.ell) as usize
    }

    /// The parameters (n, ℓ+1) of the restricted arrangement, or `None`
    /// when ℓ+1 = n would leave no hyperplanes at all (callers that recurse
    /// on ℓ must treat that case as the empty arrangement themselves).
    pub fn restricted(&self) -> Option<ArrangementParams> {
        ArrangementParams::new(self.n, self.ell + 1).ok()
    }

    /// The position of `pair` in the global coordinate order, or `None` if
    /// the pair indexes no hyperplane of this arrangement (j ≤ ℓ).
    pub fn pair_index(&self, pair: Pair) -> Option<usize> {
        if pair.j < self.ell + 1 || pair.j > self.n {
            return None;
        }
        let block = choose2(pair.j - 1) - choose2(self.ell);
        Some(block as usize + (pair.i as usize - 1))
    }
}

impl fmt::Display for ArrangementParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A({}, {})", self.n, self.ell)
    }
}

/// An index pair (i, j) with 1 ≤ i < j, naming a hyperplane H_{i,j}, an
/// algebra generator a_{i,j}, or a group generator γ_{i,j}.
///
/// Pairs are ordered lexicographically by (j, i), matching the global
/// coordinate order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    i: u32,
    j: u32,
}

impl Pair {
    /// Validates 1 ≤ i < j and constructs the pair.
    pub fn new(i: u32, j: u32) -> Result<Self, DomainError> {
        if i < 1 || i >= j {
            return Err(DomainError::InvalidPair { i, j });
        }
        Ok(Pair { i, j })
    }

    /// The lower index i.
    pub fn i(&self) -> u32 {
        self.i
    }

    /// The upper index j.
    pub fn j(&self) -> u32 {
        self.j
    }
}

impl Ord for Pair {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.j, self.i).cmp(&(other.j, other.i))
    }
}

impl PartialOrd for Pair {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// All hyperplane pairs of the arrangement in the global coordinate order:
/// lexicographic by (j, i), j running over ℓ+1..=n.
pub fn hyperplane_pairs(params: ArrangementParams) -> Vec<Pair> {
    let mut pairs = Vec::with_capacity(params.hyperplane_count());
    for j in params.ell + 1..=params.n {
        for i in 1..j {
            pairs.push(Pair { i, j });
        }
    }
    debug_assert_eq!(pairs.len(), params.hyperplane_count());
    pairs
}

/// A graded basis index (I, J): J = (j_1 < … < j_q) within [ℓ+1, n] and
/// I = (i_1, …, i_q) with 1 ≤ i_p < j_p.  The empty index (q = 0) denotes
/// the unit.
///
/// The derived ordering compares J lexicographically first and then I
/// lexicographically, which is the column order of every graded matrix in
/// the workspace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex {
    // Field order matters: the derived `Ord` compares `j` before `i`.
    j: Vec<u32>,
    i: Vec<u32>,
}

impl BasisIndex {
    /// Validates shape constraints against `params` and constructs the index.
    pub fn new(i: &[u32], j: &[u32], params: ArrangementParams) -> Result<Self, DomainError> {
        if i.len() != j.len() {
            return Err(DomainError::InvalidBasisIndex {
                reason: format!("lengths differ: |I| = {}, |J| = {}", i.len(), j.len()),
            });
        }
        for p in 0..j.len() {
            if j[p] < params.ell + 1 || j[p] > params.n {
                return Err(DomainError::InvalidBasisIndex {
                    reason: format!("j_{} = {} outside [{}, {}]", p + 1, j[p], params.ell + 1, params.n),
                });
            }
            if p + 1 < j.len() && j[p] >= j[p + 1] {
                return Err(DomainError::InvalidBasisIndex {
                    reason: format!("J not strictly increasing at position {}", p + 1),
                });
            }
            if i[p] < 1 || i[p] >= j[p] {
                return Err(DomainError::InvalidBasisIndex {
                    reason: format!("i_{} = {} outside [1, {})", p + 1, i[p], j[p]),
                });
            }
        }
        Ok(BasisIndex {
            j: j.to_vec(),
            i: i.to_vec(),
        })
    }

    /// The degree-zero index denoting the unit.
    pub fn unit() -> Self {
        BasisIndex { j: Vec::new(), i: Vec::new() }
    }

    /// The degree q = |J|.
    pub fn degree(&self) -> usize {
        self.j.len()
    }

    /// The upper index sequence J.
    pub fn j_set(&self) -> &[u32] {
        &self.j
    }

    /// The lower index sequence I.
    pub fn i_set(&self) -> &[u32] {
        &self.i
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(I = {:?}, J = {:?})", self.i, self.j)
    }
}

/// Strictly increasing `size`-subsets of `[lo, hi]` in lexicographic order.
fn k_subsets_lex(lo: u32, hi: u32, size: usize) -> Vec<Vec<u32>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    let span = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
    if size > span {
        return Vec::new();
    }
    let mut current: Vec<u32> = (0..size as u32).map(|k| lo + k).collect();
    let mut out = Vec::new();
    loop {
        out.push(current.clone());
        // Advance the rightmost entry that can still move, then reset the tail.
        let mut p = size;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            let max_here = hi - (size as u32 - 1 - p as u32);
            if current[p] < max_here {
                current[p] += 1;
                for t in p + 1..size {
                    current[t] = current[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All basis indices of degree `q`, ordered J-lexicographically and then
/// I-lexicographically.  Degree 0 yields the singleton unit; degrees above
/// n − ℓ yield nothing.
pub fn enumerate_basis(params: ArrangementParams, q: usize) -> Vec<BasisIndex> {
    if q == 0 {
        return vec![BasisIndex::unit()];
    }
    if q > params.top_degree() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for j in k_subsets_lex(params.ell + 1, params.n, q) {
        // Odometer over I with the last position fastest: I-lexicographic.
        let mut i: Vec<u32> = vec![1; q];
        'odometer: loop {
            out.push(BasisIndex { j: j.clone(), i: i.clone() });
            let mut p = q;
            loop {
                if p == 0 {
                    break 'odometer;
                }
                p -= 1;
                if i[p] < j[p] - 1 {
                    i[p] += 1;
                    for t in p + 1..q {
                        i[t] = 1;
                    }
                    continue 'odometer;
                }
            }
        }
    }
    out
}

/// The block rank d_J = (j_1 − 1)⋯(j_q − 1), with d_∅ = 1.
pub fn module_rank(j_set: &[u32]) -> u64 {
    j_set.iter().map(|&j| (j - 1) as u64).product()
}

/// Coefficients of Π_{j=ℓ+1}^{n} (1 + (j−1)t): entry q is the number of
/// degree-q basis indices, for q = 0..=n−ℓ.
pub fn poincare_coefficients(params: ArrangementParams) -> Vec<u64> {
    let mut coeffs = vec![1u64];
    for j in params.ell + 1..=params.n {
        let w = (j - 1) as u64;
        let mut next = vec![0u64; coeffs.len() + 1];
        for (q, &c) in coeffs.iter().enumerate() {
            next[q] += c;
            next[q + 1] += c * w;
        }
        coeffs = next;
    }
    coeffs
}

/// An admissible index set K for a basis index (I, J) and a distinguished
/// pair (m, ℓ+1): a set of positions (s_1 < … < s_t, q), the last always
/// being the degree q itself, together with one value k at each position.
///
/// Values may coincide numerically at different positions, so the set is
/// stored as an indexed tuple.  The derived ordering (positions first, then
/// values) is the enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdmissibleSet {
    positions: Vec<usize>,
    values: Vec<u32>,
}

impl AdmissibleSet {
    /// The 1-based positions (s_1 < … < s_t, q).
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// The values (k_{s_1}, …, k_{s_t}, k_q), parallel to `positions`.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// The value at the final position q (the coefficient contribution of
    /// this set is the weight λ_{k_q, j_q}).
    pub fn final_value(&self) -> u32 {
        *self.values.last().expect("admissible set is never empty")
    }

    /// Direct predicate check of the defining conditions, independent of the
    /// enumeration: positions end at q; the first position satisfies
    /// {k, i} = {m, ℓ+1}; each later position satisfies
    /// {k, i} = {k_prev, j_prev}; and every value obeys 1 ≤ k < j with
    /// k ≠ i at its position.
    pub fn is_admissible_for(&self, i_set: &[u32], j_set: &[u32], m: u32, ell: u32) -> bool {
        let q = j_set.len();
        if q == 0 || self.positions.len() != self.values.len() || self.positions.is_empty() {
            return false;
        }
        if *self.positions.last().unwrap() != q {
            return false;
        }
        let mut prev: Option<(u32, u32)> = None;
        for (t, (&s, &k)) in self.positions.iter().zip(&self.values).enumerate() {
            if s < 1 || s > q {
                return false;
            }
            if t > 0 && self.positions[t - 1] >= s {
                return false;
            }
            let (i_s, j_s) = (i_set[s - 1], j_set[s - 1]);
            if k < 1 || k >= j_s || k == i_s {
                return false;
            }
            let required = match prev {
                None => (m, ell + 1),
                Some(pair) => pair,
            };
            let matches = (k == required.0 && i_s == required.1) || (k == required.1 && i_s == required.0);
            if !matches {
                return false;
            }
            prev = Some((k, j_s));
        }
        true
    }
}

/// Every admissible set for the basis index (I, J), distinguished pair
/// (m, ℓ+1), found by exhaustive search over position subsets; ordered by
/// positions, then values.
///
/// Preconditions: 1 ≤ m ≤ ℓ and (I, J) a valid basis index with
/// J ⊆ [ℓ+2, n].  Degree 0 has no admissible sets.
pub fn admissible_sets(
    i_set: &[u32],
    j_set: &[u32],
    m: u32,
    params: ArrangementParams,
) -> Result<Vec<AdmissibleSet>, DomainError> {
    if m < 1 || m > params.ell() {
        return Err(DomainError::InvalidAdmissibleQuery {
            reason: format!("m = {} outside [1, {}]", m, params.ell()),
        });
    }
    let index = BasisIndex::new(i_set, j_set, params)?;
    if let Some(&j1) = index.j_set().first() {
        if j1 < params.ell() + 2 {
            return Err(DomainError::InvalidAdmissibleQuery {
                reason: format!("J contains {} but must lie within [{}, {}]", j1, params.ell() + 2, params.n()),
            });
        }
    }
    let q = j_set.len();
    if q == 0 {
        return Ok(Vec::new());
    }
    let mut found = Vec::new();
    // Choose any subset of positions [1, q−1]; position q is always present.
    for mask in 0u32..(1u32 << (q - 1)) {
        let mut positions: Vec<usize> = (1..q).filter(|s| mask >> (s - 1) & 1 == 1).collect();
        positions.push(q);
        // The values are forced: at each position the lower index i_s must be
        // one element of the current pair, and k_s is the other.
        let mut prev = (m, params.ell() + 1);
        let mut values = Vec::with_capacity(positions.len());
        let mut ok = true;
        for &s in &positions {
            let (i_s, j_s) = (i_set[s - 1], j_set[s - 1]);
            let k = if i_s == prev.0 {
                prev.1
            } else if i_s == prev.1 {
                prev.0
            } else {
                ok = false;
                break;
            };
            debug_assert!(k >= 1 && k < j_s && k != i_s);
            values.push(k);
            prev = (k, j_s);
        }
        if ok {
            let candidate = AdmissibleSet { positions, values };
            debug_assert!(candidate.is_admissible_for(i_set, j_set, m, params.ell()));
            found.push(candidate);
        }
    }
    found.sort();
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, ell: u32) -> ArrangementParams {
        ArrangementParams::new(n, ell).unwrap()
    }

    fn pair(i: u32, j: u32) -> Pair {
        Pair::new(i, j).unwrap()
    }

    #[test]
    fn pairs_of_small_arrangements() {
        let p31 = hyperplane_pairs(params(3, 1));
        assert_eq!(p31, vec![pair(1, 2), pair(1, 3), pair(2, 3)]);
        assert_eq!(params(3, 1).hyperplane_count(), 3);

        let p42 = hyperplane_pairs(params(4, 2));
        assert_eq!(
            p42,
            vec![pair(1, 3), pair(2, 3), pair(1, 4), pair(2, 4), pair(3, 4)]
        );
        assert_eq!(params(4, 2).hyperplane_count(), 5);

        assert_eq!(hyperplane_pairs(params(2, 1)), vec![pair(1, 2)]);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(ArrangementParams::new(1, 1).is_err());
        assert!(ArrangementParams::new(3, 0).is_err());
        assert!(ArrangementParams::new(3, 3).is_err());
        assert!(ArrangementParams::new(2, 1).is_ok());
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        assert!(Pair::new(0, 2).is_err());
        assert!(Pair::new(2, 2).is_err());
        assert!(Pair::new(3, 2).is_err());
    }

    #[test]
    fn pair_index_matches_enumeration_order() {
        for (n, ell) in [(3, 1), (4, 1), (4, 2), (5, 2), (6, 3), (7, 1)] {
            let ps = params(n, ell);
            for (idx, pr) in hyperplane_pairs(ps).into_iter().enumerate() {
                assert_eq!(ps.pair_index(pr), Some(idx));
            }
        }
        // Pairs below the puncture level index no hyperplane.
        assert_eq!(params(4, 2).pair_index(pair(1, 2)), None);
        assert_eq!(params(4, 2).pair_index(pair(1, 5)), None);
    }

    #[test]
    fn basis_enumeration_examples() {
        let b = enumerate_basis(params(3, 2), 1);
        assert_eq!(
            b,
            vec![
                BasisIndex::new(&[1], &[3], params(3, 2)).unwrap(),
                BasisIndex::new(&[2], &[3], params(3, 2)).unwrap(),
            ]
        );
        assert_eq!(enumerate_basis(params(4, 1), 2).len(), 11);
        assert!(enumerate_basis(params(4, 1), 4).is_empty());
        assert_eq!(poincare_coefficients(params(4, 1)), vec![1, 6, 11, 6]);
    }

    #[test]
    fn basis_order_is_j_lex_then_i_lex() {
        let b = enumerate_basis(params(4, 1), 2);
        let expect: Vec<(Vec<u32>, Vec<u32>)> = vec![
            (vec![1, 1], vec![2, 3]),
            (vec![1, 2], vec![2, 3]),
            (vec![1, 1], vec![2, 4]),
            (vec![1, 2], vec![2, 4]),
            (vec![1, 3], vec![2, 4]),
            (vec![1, 1], vec![3, 4]),
            (vec![1, 2], vec![3, 4]),
            (vec![1, 3], vec![3, 4]),
            (vec![2, 1], vec![3, 4]),
            (vec![2, 2], vec![3, 4]),
            (vec![2, 3], vec![3, 4]),
        ];
        let got: Vec<(Vec<u32>, Vec<u32>)> = b
            .iter()
            .map(|ix| (ix.i_set().to_vec(), ix.j_set().to_vec()))
            .collect();
        assert_eq!(got, expect);
        let mut sorted = b.clone();
        sorted.sort();
        assert_eq!(sorted, b);
    }

    #[test]
    fn module_rank_examples() {
        assert_eq!(module_rank(&[3]), 2);
        assert_eq!(module_rank(&[]), 1);
        assert_eq!(module_rank(&[2, 3, 4]), 6);
    }

    #[test]
    fn admissible_set_examples() {
        let ps = params(4, 1);
        let sets = admissible_sets(&[1], &[3], 1, ps).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].positions(), &[1]);
        assert_eq!(sets[0].values(), &[2]);

        let sets = admissible_sets(&[2], &[3], 1, ps).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].positions(), &[1]);
        assert_eq!(sets[0].values(), &[1]);

        let sets = admissible_sets(&[2, 3], &[3, 4], 1, ps).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].positions(), &[1, 2]);
        assert_eq!(sets[0].values(), &[1, 1]);
    }

    #[test]
    fn admissible_query_validation() {
        let ps = params(4, 2);
        // m beyond the puncture level.
        assert!(admissible_sets(&[1], &[4], 3, ps).is_err());
        // J must avoid ℓ+1.
        assert!(admissible_sets(&[1], &[3], 1, ps).is_err());
        assert!(admissible_sets(&[1], &[4], 1, ps).is_ok());
    }

    #[test]
    fn admissible_sets_revalidate() {
        for (n, ell) in [(4, 1), (5, 1), (5, 2), (6, 2)] {
            let ps = params(n, ell);
            for q in 1..=ps.top_degree() {
                for ix in enumerate_basis(ps, q) {
                    if ix.j_set().first().copied().unwrap_or(u32::MAX) < ell + 2 {
                        continue;
                    }
                    for m in 1..=ell {
                        let sets = admissible_sets(ix.i_set(), ix.j_set(), m, ps).unwrap();
                        for s in &sets {
                            assert!(s.is_admissible_for(ix.i_set(), ix.j_set(), m, ell));
                        }
                        // Distinct admissible sets never coincide.
                        for a in 0..sets.len() {
                            for b in a + 1..sets.len() {
                                assert_ne!(sets[a], sets[b]);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dimension_law_matches_poincare_product() {
        for n in 2..=7u32 {
            for ell in 1..n {
                let ps = params(n, ell);
                let coeffs = poincare_coefficients(ps);
                assert_eq!(coeffs.len(), ps.top_degree() + 1);
                for q in 0..=ps.top_degree() + 2 {
                    let count = enumerate_basis(ps, q).len() as u64;
                    let expect = coeffs.get(q).copied().unwrap_or(0);
                    assert_eq!(count, expect, "degree {q} of {ps}");
                }
            }
        }
    }

    #[test]
    fn module_rank_cross_counts_basis() {
        for (n, ell) in [(4, 1), (5, 2), (6, 3)] {
            let ps = params(n, ell);
            for q in 0..=ps.top_degree() {
                let basis = enumerate_basis(ps, q);
                for j in k_subsets_lex(ell + 1, n, q) {
                    let count = basis.iter().filter(|ix| ix.j_set() == j.as_slice()).count() as u64;
                    assert_eq!(count, module_rank(&j));
                }
            }
        }
    }

    #[test]
    fn enumeration_is_stable() {
        let ps = params(5, 2);
        assert_eq!(hyperplane_pairs(ps), hyperplane_pairs(ps));
        for q in 0..=ps.top_degree() {
            assert_eq!(enumerate_basis(ps, q), enumerate_basis(ps, q));
        }
        let sets1 = admissible_sets(&[2, 3], &[4, 5], 1, ps).unwrap();
        let sets2 = admissible_sets(&[2, 3], &[4, 5], 1, ps).unwrap();
        assert_eq!(sets1, sets2);
    }

    #[test]
    fn restricted_parameters() {
        assert_eq!(params(4, 1).restricted(), Some(params(4, 2)));
        assert_eq!(params(4, 3).restricted(), None);
    }

    #[test]
    fn basis_index_validation() {
        let ps = params(4, 1);
        assert!(BasisIndex::new(&[1, 2], &[2, 3], ps).is_ok());
        assert!(BasisIndex::new(&[1], &[2, 3], ps).is_err());
        assert!(BasisIndex::new(&[2, 1], &[2, 3], ps).is_err());
        assert!(BasisIndex::new(&[1, 1], &[3, 3], ps).is_err());
        assert!(BasisIndex::new(&[1, 1], &[3, 2], ps).is_err());
        assert!(BasisIndex::new(&[1], &[5], ps).is_err());
        assert!(BasisIndex::new(&[1], &[3], params(4, 3)).is_err());
        assert_eq!(BasisIndex::unit().degree(), 0);
    }
}
