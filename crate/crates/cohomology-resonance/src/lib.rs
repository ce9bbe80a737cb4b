//! Top-level cohomology computations for discriminantal arrangements.
//!
//! This crate ties the lower layers together: Betti numbers of the
//! Orlik–Solomon complex `(A•, μ(λ))` and of rank-one local systems on the
//! arrangement complement (via the Fox-calculus chain complex), the
//! entrywise linearization comparison between the two differentials, and the
//! resonance-variety membership test with its tangent-cone probe — the
//! rank-drop loci of the two families, compared direction by direction.
//!
//! Conventions shared with the lower crates: weight vectors and torus points
//! are ordered by the global pair order (pairs `(i, j)` sorted by `j`, then
//! `i`); evaluated matrices use the column convention (rows index the
//! codomain), so `μ^q` has shape `dim A^{q+1} × dim A^q` and the cochain map
//! `δ^q(t)` has shape `dim A^{q+1} × dim A^q` as well.

use exact_linalg::{
    alternating_sum, cyclotomic_point, multi_prime_betti, rank, GradedComplexEval, LinAlgError,
    Matrix, Rationals,
};
use index_combinatorics::{poincare_coefficients, ArrangementParams};
use num::{BigInt, BigRational, Integer, One, Zero};
use orlik_solomon::{mu_closed_form, mu_naive, OSError, WeightVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resolution_builder::{
    boundary_derivative, cochain_matrix, cochain_matrix_mod, ResolutionError, TorusPoint,
};
use thiserror::Error;

/// Errors raised by the top-level computations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CohomologyError {
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error(transparent)]
    Weights(#[from] OSError),
    #[error(transparent)]
    Resolution(#[from] ResolutionError),
    #[error("the weight or torus data belongs to a different arrangement")]
    ArrangementMismatch,
    #[error("cohomological degree {k} lies outside 1..={max}")]
    DegreeOutOfRange { k: usize, max: usize },
    #[error("the multiplicity bound must be at least 1")]
    ZeroMultiplicity,
    #[error("the subgroup parameter u = 0 does not give a torus point")]
    ZeroParameter,
    #[error(
        "sandwich inequality violated in degree {degree}: {os} ≤ {local} ≤ {dim} fails"
    )]
    SandwichViolation {
        degree: usize,
        os: usize,
        local: usize,
        dim: usize,
    },
}

// ---------------------------------------------------------------------------
// Betti reports
// ---------------------------------------------------------------------------

/// Where a Betti computation's coefficients came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BettiProvenance {
    /// The Orlik–Solomon complex with differential `μ(λ)`, over the
    /// rationals.
    OsWeight { lambda: Vec<BigRational> },
    /// The local-system cochain complex at a rational torus point.
    RationalTorus { t: Vec<BigRational> },
    /// The local-system complex at the order-`order` point `t = g^{−a}`
    /// determined by `λ = a/order`, computed over several prime fields and
    /// reduced to the per-degree minimum.  `agreement = false` is a warning
    /// state: the primes did not all agree, and only the `b_k ≤ dim_k`
    /// bound is guaranteed for the reported minima.
    CyclotomicConsensus {
        lambda: Vec<BigRational>,
        order: u64,
        primes: Vec<u64>,
        agreement: bool,
    },
}

/// Per-degree dimensions and Betti numbers of one cochain complex, with the
/// Euler characteristic and the provenance of its coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiReport {
    params: ArrangementParams,
    provenance: BettiProvenance,
    dims: Vec<usize>,
    betti: Vec<usize>,
    euler: i64,
}

impl BettiReport {
    fn new(
        params: ArrangementParams,
        provenance: BettiProvenance,
        dims: Vec<usize>,
        betti: Vec<usize>,
    ) -> Self {
        assert_eq!(dims.len(), betti.len(), "gradings must match");
        for (k, (&b, &d)) in betti.iter().zip(&dims).enumerate() {
            assert!(b <= d, "degree {k}: Betti number {b} exceeds dimension {d}");
        }
        let euler = alternating_sum(&dims);
        let consensus_disagrees = matches!(
            provenance,
            BettiProvenance::CyclotomicConsensus { agreement: false, .. }
        );
        if !consensus_disagrees {
            assert_eq!(
                alternating_sum(&betti),
                euler,
                "Betti alternating sum must equal the Euler characteristic"
            );
        }
        Self {
            params,
            provenance,
            dims,
            betti,
            euler,
        }
    }

    pub fn params(&self) -> ArrangementParams {
        self.params
    }

    pub fn provenance(&self) -> &BettiProvenance {
        &self.provenance
    }

    /// Dimension of each degree of the underlying complex, `0..=n−ℓ`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Betti numbers `b_0..=b_{n−ℓ}`.
    pub fn betti(&self) -> &[usize] {
        &self.betti
    }

    /// Euler characteristic `Σ (−1)^k dim_k`.
    pub fn euler(&self) -> i64 {
        self.euler
    }

    /// True when a multi-prime computation did not reach agreement; the
    /// reported Betti numbers are then per-degree minima only.
    pub fn consensus_warning(&self) -> bool {
        matches!(
            self.provenance,
            BettiProvenance::CyclotomicConsensus { agreement: false, .. }
        )
    }
}

fn complex_dims(params: ArrangementParams) -> Vec<usize> {
    poincare_coefficients(params)
        .into_iter()
        .map(|c| usize::try_from(c).expect("dimension fits"))
        .collect()
}

fn check_weights(
    params: ArrangementParams,
    weights: &WeightVector,
) -> Result<(), CohomologyError> {
    if weights.params() != params {
        return Err(CohomologyError::ArrangementMismatch);
    }
    Ok(())
}

/// Betti numbers of the Orlik–Solomon complex `(A•, μ(λ))`.
///
/// The maps are the closed-form `μ` matrices; the complex constructor
/// re-verifies the zero-composition law before any rank is taken.
pub fn os_betti(
    params: ArrangementParams,
    weights: &WeightVector,
) -> Result<BettiReport, CohomologyError> {
    check_weights(params, weights)?;
    let maps: Vec<Matrix<BigRational>> = (0..params.top_degree())
        .map(|q| mu_closed_form(params, q, weights))
        .collect();
    let cx = GradedComplexEval::new(Rationals, maps)?;
    let dims = cx.dims().to_vec();
    let betti = cx.betti();
    Ok(BettiReport::new(
        params,
        BettiProvenance::OsWeight {
            lambda: weights.coords().to_vec(),
        },
        dims,
        betti,
    ))
}

/// Betti numbers of the local-system cochain complex `(C•, δ•(t))` at a
/// rational torus point, computed exactly over the rationals.
pub fn local_betti_rational(
    params: ArrangementParams,
    t: &TorusPoint<BigRational>,
) -> Result<BettiReport, CohomologyError> {
    let maps: Result<Vec<Matrix<BigRational>>, ResolutionError> = (0..params.top_degree())
        .map(|q| cochain_matrix(params, q, t))
        .collect();
    let cx = GradedComplexEval::new(Rationals, maps?)?;
    let dims = cx.dims().to_vec();
    let betti = cx.betti();
    Ok(BettiReport::new(
        params,
        BettiProvenance::RationalTorus {
            t: t.values().to_vec(),
        },
        dims,
        betti,
    ))
}

fn weight_order(weights: &WeightVector) -> Result<u64, CohomologyError> {
    let mut m = BigInt::one();
    for w in weights.coords() {
        m = m.lcm(w.denom());
    }
    u64::try_from(&m).map_err(|_| CohomologyError::LinAlg(LinAlgError::DenominatorOverflow))
}

/// Betti numbers of the local system at the root-of-unity point
/// `t = g^{−a}` attached to a rational weight vector `λ = a/m` (the shadow
/// of `t = exp(−2πiλ)`), computed over every admissible prime in the list
/// and reduced to a consensus.  Primes `p ≢ 1 (mod m)` are skipped; fewer
/// than two admissible primes is an error.  Disagreement between primes is
/// surfaced through [`BettiReport::consensus_warning`], not an error.
pub fn local_betti_cyclotomic(
    params: ArrangementParams,
    weights: &WeightVector,
    primes: &[u64],
) -> Result<BettiReport, CohomologyError> {
    check_weights(params, weights)?;
    let order = weight_order(weights)?;
    let top = params.top_degree();
    let report = multi_prime_betti(primes, |p| {
        let point = cyclotomic_point(weights.coords(), p)?;
        let field = point.field();
        let t = TorusPoint::mod_p(&field, params, point.coords().to_vec())
            .map_err(|e| LinAlgError::ShapeMismatch(e.to_string()))?;
        let maps: Result<Vec<Matrix<u64>>, LinAlgError> = (0..top)
            .map(|q| {
                cochain_matrix_mod(&field, params, q, &t)
                    .map_err(|e| LinAlgError::ShapeMismatch(e.to_string()))
            })
            .collect();
        GradedComplexEval::new(field, maps?)
    })?;
    let used: Vec<u64> = report.per_prime.iter().map(|pb| pb.p).collect();
    Ok(BettiReport::new(
        params,
        BettiProvenance::CyclotomicConsensus {
            lambda: weights.coords().to_vec(),
            order,
            primes: used,
            agreement: report.agreement,
        },
        complex_dims(params),
        report.consensus,
    ))
}

// ---------------------------------------------------------------------------
// Linearization
// ---------------------------------------------------------------------------

/// Location of the first entrywise disagreement in a linearization check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MismatchLocation {
    /// Degree `q` of the compared `μ^q`.
    pub degree: usize,
    /// Row index into the degree-`q+1` basis.
    pub row: usize,
    /// Column index into the degree-`q` basis.
    pub col: usize,
}

/// Outcome of comparing `μ^q(λ)` against `(−1)^q · transpose(∂_{q+1}∗(λ))`
/// entrywise in every degree, through both `μ` routes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearizationReport {
    params: ArrangementParams,
    lambda: Vec<BigRational>,
    per_degree: Vec<bool>,
    first_mismatch: Option<MismatchLocation>,
}

impl LinearizationReport {
    pub fn params(&self) -> ArrangementParams {
        self.params
    }

    pub fn lambda(&self) -> &[BigRational] {
        &self.lambda
    }

    /// One flag per degree `q = 0..n−ℓ−1`: true iff both `μ` routes equal
    /// the signed transposed boundary derivative exactly.
    pub fn per_degree(&self) -> &[bool] {
        &self.per_degree
    }

    pub fn first_mismatch(&self) -> Option<MismatchLocation> {
        self.first_mismatch
    }

    pub fn passed(&self) -> bool {
        self.per_degree.iter().all(|&ok| ok)
    }
}

fn first_difference(
    a: &Matrix<BigRational>,
    b: &Matrix<BigRational>,
) -> Option<(usize, usize)> {
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            if a.get(r, c) != b.get(r, c) {
                return Some((r, c));
            }
        }
    }
    None
}

/// The signed transposed derivative `(−1)^q · transpose(∂_{q+1}∗(λ))`, the
/// linear side of the comparison.
fn linearized_boundary(
    params: ArrangementParams,
    q: usize,
    lambda: &[BigRational],
) -> Result<Matrix<BigRational>, CohomologyError> {
    let derivative = boundary_derivative(params, q + 1, lambda)?;
    let mut target = derivative.transpose();
    if q % 2 == 1 {
        target = target.map(|v| -v.clone());
    }
    Ok(target)
}

/// Compares both `μ` routes against the signed transposed boundary
/// derivative, degree by degree, for one weight vector.
pub fn verify_linearization(
    params: ArrangementParams,
    weights: &WeightVector,
) -> Result<LinearizationReport, CohomologyError> {
    check_weights(params, weights)?;
    let mut per_degree = Vec::with_capacity(params.top_degree());
    let mut first_mismatch = None;
    for q in 0..params.top_degree() {
        let target = linearized_boundary(params, q, weights.coords())?;
        let closed = mu_closed_form(params, q, weights);
        let naive = mu_naive(params, q, weights);
        let ok = closed == target && naive == target;
        if !ok && first_mismatch.is_none() {
            let loc = first_difference(&closed, &target)
                .or_else(|| first_difference(&naive, &target))
                .expect("an unequal pair differs somewhere");
            first_mismatch = Some(MismatchLocation {
                degree: q,
                row: loc.0,
                col: loc.1,
            });
        }
        per_degree.push(ok);
    }
    Ok(LinearizationReport {
        params,
        lambda: weights.coords().to_vec(),
        per_degree,
        first_mismatch,
    })
}

/// Runs [`verify_linearization`] over every coordinate direction
/// `λ = e_{i,j}`.  Both sides are linear in `λ`, so passing on all
/// directions decides the comparison for every weight vector.
pub fn verify_linearization_sweep(
    params: ArrangementParams,
) -> Result<Vec<LinearizationReport>, CohomologyError> {
    let count = params.hyperplane_count();
    let mut reports = Vec::with_capacity(count);
    for d in 0..count {
        let mut coords = vec![0i64; count];
        coords[d] = 1;
        let weights = WeightVector::from_integers(params, &coords)?;
        reports.push(verify_linearization(params, &weights)?);
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Resonance membership
// ---------------------------------------------------------------------------

fn check_degree_and_multiplicity(
    params: ArrangementParams,
    k: usize,
    m: usize,
) -> Result<(), CohomologyError> {
    let max = params.top_degree();
    if k < 1 || k > max {
        return Err(CohomologyError::DegreeOutOfRange { k, max });
    }
    if m < 1 {
        return Err(CohomologyError::ZeroMultiplicity);
    }
    Ok(())
}

/// Membership of `λ` in the degree-`k`, multiplicity-`m` resonance variety:
/// true iff `rank μ^{k−1}(λ) + rank μ^k(λ) ≤ dim A^k − m`, which by
/// rank–nullity says `dim H^k(A•, μ(λ)) ≥ m`.
pub fn resonance_membership(
    params: ArrangementParams,
    k: usize,
    m: usize,
    weights: &WeightVector,
) -> Result<bool, CohomologyError> {
    check_degree_and_multiplicity(params, k, m)?;
    check_weights(params, weights)?;
    let below = rank(&Rationals, &mu_closed_form(params, k - 1, weights));
    let above = if k == params.top_degree() {
        0
    } else {
        rank(&Rationals, &mu_closed_form(params, k, weights))
    };
    let dim_k = complex_dims(params)[k] as i64;
    Ok((below + above) as i64 <= dim_k - m as i64)
}

// ---------------------------------------------------------------------------
// Tangent-cone probe
// ---------------------------------------------------------------------------

/// One sampled parameter of a tangent-cone probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRow {
    /// The subgroup parameter `u`.
    pub u: BigRational,
    /// True at `u = 1`: the local system is trivial there, so the row
    /// carries no information about the direction.
    pub trivial: bool,
    /// `dim H^k(M; L_{t(u)})` at `t(u) = (u^{λ_{i,j}})`.
    pub betti_k: usize,
}

/// Side-by-side record of resonance membership of an integral direction `λ`
/// and the local-system Betti numbers along the one-parameter subgroup
/// `t(u) = (u^{λ_{i,j}})` through that direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TangentConeProbe {
    params: ArrangementParams,
    k: usize,
    m: usize,
    direction: Vec<i64>,
    membership: bool,
    rows: Vec<ProbeRow>,
}

impl TangentConeProbe {
    pub fn params(&self) -> ArrangementParams {
        self.params
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn multiplicity(&self) -> usize {
        self.m
    }

    pub fn direction(&self) -> &[i64] {
        &self.direction
    }

    /// Resonance-variety membership of the direction itself.
    pub fn membership(&self) -> bool {
        self.membership
    }

    pub fn rows(&self) -> &[ProbeRow] {
        &self.rows
    }

    /// True when every non-trivial sample agrees with the membership bit:
    /// rank drop (`b_k ≥ m`) along the subtorus exactly where the direction
    /// is resonant.  Sampled evidence for the tangent-cone statement, not a
    /// proof.
    pub fn consistent(&self) -> bool {
        self.rows
            .iter()
            .filter(|row| !row.trivial)
            .all(|row| (row.betti_k >= self.m) == self.membership)
    }
}

fn rational_pow(base: &BigRational, exp: i64) -> BigRational {
    let e = u32::try_from(exp.unsigned_abs()).expect("exponent fits in u32");
    let v = BigRational::new(base.numer().pow(e), base.denom().pow(e));
    if exp < 0 {
        v.recip()
    } else {
        v
    }
}

/// Probes the tangent-cone relation for an integral direction `λ`: for each
/// sampled `u ≠ 0`, computes the local-system Betti number at
/// `t(u) = (u^{λ_{i,j}})` and reports it beside the resonance membership of
/// `λ`.  `u = 1` is allowed but flagged as the trivial point.
pub fn tangent_cone_probe(
    params: ArrangementParams,
    k: usize,
    m: usize,
    direction: &[i64],
    u_samples: &[BigRational],
) -> Result<TangentConeProbe, CohomologyError> {
    check_degree_and_multiplicity(params, k, m)?;
    let weights = WeightVector::from_integers(params, direction)?;
    let membership = resonance_membership(params, k, m, &weights)?;
    let mut rows = Vec::with_capacity(u_samples.len());
    for u in u_samples {
        if u.is_zero() {
            return Err(CohomologyError::ZeroParameter);
        }
        let coords: Vec<BigRational> = direction.iter().map(|&e| rational_pow(u, e)).collect();
        let t = TorusPoint::rational(params, coords)?;
        let report = local_betti_rational(params, &t)?;
        rows.push(ProbeRow {
            u: u.clone(),
            trivial: u.is_one(),
            betti_k: report.betti()[k],
        });
    }
    Ok(TangentConeProbe {
        params,
        k,
        m,
        direction: direction.to_vec(),
        membership,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Resonance scan
// ---------------------------------------------------------------------------

/// How a resonance scan draws its weight vectors.
///
/// Both samplers skip the zero vector: the origin lies in every resonance
/// cone with `m ≤ dim A^k` (the differential vanishes identically there),
/// so it carries no information about the nontrivial components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplerSpec {
    /// Every nonzero integer vector in `{low..=high}^N`, ordered
    /// lexicographically (first coordinate slowest).
    Grid { low: i64, high: i64 },
    /// `count` random nonzero rational vectors with numerators in `−9..=9`
    /// and denominators in `1..=4`.
    Random { count: usize },
}

/// One scanned weight vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanRecord {
    pub lambda: Vec<BigRational>,
    /// Betti numbers of `(A•, μ(λ))` in every degree.
    pub betti: Vec<usize>,
    /// Membership in the degree-`k`, multiplicity-`m` resonance variety.
    pub member: bool,
}

/// A group of positive hits together with the outcome of sampling rational
/// linear combinations inside it: evidence (never a proof) that the group
/// sits inside one linear component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanGroup {
    /// Indices into the record list.
    pub members: Vec<usize>,
    pub combination_trials: usize,
    pub combination_successes: usize,
}

/// The full outcome of a resonance scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    params: ArrangementParams,
    k: usize,
    m: usize,
    seed: u64,
    records: Vec<ScanRecord>,
    groups: Vec<ScanGroup>,
}

impl ScanReport {
    pub fn params(&self) -> ArrangementParams {
        self.params
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn multiplicity(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Records in sample order (deterministic for a fixed spec and seed).
    pub fn records(&self) -> &[ScanRecord] {
        &self.records
    }

    pub fn groups(&self) -> &[ScanGroup] {
        &self.groups
    }

    pub fn hits(&self) -> impl Iterator<Item = &ScanRecord> {
        self.records.iter().filter(|r| r.member)
    }
}

fn grid_points(count: usize, low: i64, high: i64) -> Vec<Vec<BigRational>> {
    assert!(low <= high, "empty grid range");
    let width = (high - low + 1) as usize;
    let total = width.checked_pow(count as u32).expect("grid size fits");
    let mut out = Vec::with_capacity(total);
    for index in 0..total {
        let mut coords = vec![BigRational::zero(); count];
        let mut rest = index;
        for slot in (0..count).rev() {
            let digit = (rest % width) as i64;
            rest /= width;
            coords[slot] = BigRational::from_integer(BigInt::from(low + digit));
        }
        if coords.iter().any(|v| !v.is_zero()) {
            out.push(coords);
        }
    }
    out
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(
        BigInt::from(rng.gen_range(-9i64..=9)),
        BigInt::from(rng.gen_range(1i64..=4)),
    )
}

fn combination(
    a: &[BigRational],
    b: &[BigRational],
    rng: &mut ChaCha8Rng,
) -> Vec<BigRational> {
    let c1 = BigRational::new(
        BigInt::from(rng.gen_range(1i64..=3)),
        BigInt::from(rng.gen_range(1i64..=2)),
    );
    let c2 = BigRational::new(
        BigInt::from(rng.gen_range(1i64..=3)),
        BigInt::from(rng.gen_range(1i64..=2)),
    );
    a.iter()
        .zip(b)
        .map(|(x, y)| &c1 * x + &c2 * y)
        .collect()
}

/// Scans weight vectors for resonance membership and groups the hits.
///
/// Each sample gets a full Betti record; the post-pass places every hit
/// into the first group whose representative combines with it (two random
/// positive rational combinations, both still members), then samples a few
/// more in-group combinations as closure evidence.  The seed drives both
/// the random sampler and the combination draws.
pub fn resonance_scan(
    params: ArrangementParams,
    k: usize,
    m: usize,
    sampler: &SamplerSpec,
    seed: u64,
) -> Result<ScanReport, CohomologyError> {
    check_degree_and_multiplicity(params, k, m)?;
    let count = params.hyperplane_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<BigRational>> = match *sampler {
        SamplerSpec::Grid { low, high } => grid_points(count, low, high),
        SamplerSpec::Random { count: wanted } => (0..wanted)
            .map(|_| loop {
                let draw: Vec<BigRational> =
                    (0..count).map(|_| random_rational(&mut rng)).collect();
                if draw.iter().any(|v| !v.is_zero()) {
                    break draw;
                }
            })
            .collect(),
    };
    let mut records = Vec::with_capacity(samples.len());
    for lambda in samples {
        let weights = WeightVector::new(params, lambda.clone())?;
        let report = os_betti(params, &weights)?;
        let member = report.betti()[k] >= m;
        records.push(ScanRecord {
            lambda,
            betti: report.betti().to_vec(),
            member,
        });
    }
    let member_of = |coords: &[BigRational]| -> Result<bool, CohomologyError> {
        let weights = WeightVector::new(params, coords.to_vec())?;
        resonance_membership(params, k, m, &weights)
    };
    let mut groups: Vec<ScanGroup> = Vec::new();
    for (index, record) in records.iter().enumerate() {
        if !record.member {
            continue;
        }
        let mut placed = false;
        for group in &mut groups {
            let representative = &records[group.members[0]].lambda;
            let joins = (0..2).try_fold(true, |acc, _| {
                let combo = combination(&record.lambda, representative, &mut rng);
                member_of(&combo).map(|ok| acc && ok)
            })?;
            if joins {
                group.members.push(index);
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push(ScanGroup {
                members: vec![index],
                combination_trials: 0,
                combination_successes: 0,
            });
        }
    }
    for group in &mut groups {
        if group.members.len() < 2 {
            continue;
        }
        for _ in 0..4 {
            let a = group.members[rng.gen_range(0..group.members.len())];
            let b = group.members[rng.gen_range(0..group.members.len())];
            let combo = combination(&records[a].lambda, &records[b].lambda, &mut rng);
            group.combination_trials += 1;
            if member_of(&combo)? {
                group.combination_successes += 1;
            }
        }
    }
    Ok(ScanReport {
        params,
        k,
        m,
        seed,
        records,
        groups,
    })
}

// ---------------------------------------------------------------------------
// Sandwich check
// ---------------------------------------------------------------------------

/// Per-degree verification of `dim H^k(A•, μ(λ)) ≤ dim H^k(M; L_t) ≤ dim A^k`
/// at the root-of-unity point `t` attached to `λ`.  Returned only when every
/// degree passes; a violation is a hard error, since the inequality is a
/// theorem and a failure indicates a bug.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SandwichReport {
    params: ArrangementParams,
    lambda: Vec<BigRational>,
    order: u64,
    primes: Vec<u64>,
    agreement: bool,
    os_betti: Vec<usize>,
    local_betti: Vec<usize>,
    dims: Vec<usize>,
}

impl SandwichReport {
    pub fn params(&self) -> ArrangementParams {
        self.params
    }

    pub fn lambda(&self) -> &[BigRational] {
        &self.lambda
    }

    /// Common denominator of the weights: the multiplicative order of `t`.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// The admissible primes actually used.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn agreement(&self) -> bool {
        self.agreement
    }

    pub fn os_betti(&self) -> &[usize] {
        &self.os_betti
    }

    pub fn local_betti(&self) -> &[usize] {
        &self.local_betti
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
}

/// Checks the sandwich inequality for one rational weight vector, with the
/// local side computed by multi-prime consensus.
pub fn sandwich_check(
    params: ArrangementParams,
    weights: &WeightVector,
    primes: &[u64],
) -> Result<SandwichReport, CohomologyError> {
    let os = os_betti(params, weights)?;
    let local = local_betti_cyclotomic(params, weights, primes)?;
    let dims = os.dims().to_vec();
    for k in 0..dims.len() {
        let lower = os.betti()[k];
        let middle = local.betti()[k];
        if !(lower <= middle && middle <= dims[k]) {
            return Err(CohomologyError::SandwichViolation {
                degree: k,
                os: lower,
                local: middle,
                dim: dims[k],
            });
        }
    }
    let (order, primes_used, agreement) = match local.provenance() {
        BettiProvenance::CyclotomicConsensus {
            order,
            primes,
            agreement,
            ..
        } => (*order, primes.clone(), *agreement),
        _ => unreachable!("cyclotomic route always yields consensus provenance"),
    };
    Ok(SandwichReport {
        params,
        lambda: weights.coords().to_vec(),
        order,
        primes: primes_used,
        agreement,
        os_betti: os.betti().to_vec(),
        local_betti: local.betti().to_vec(),
        dims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, ell: u32) -> ArrangementParams {
        ArrangementParams::new(n, ell).unwrap()
    }

    fn weights(p: ArrangementParams, values: &[i64]) -> WeightVector {
        WeightVector::from_integers(p, values).unwrap()
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn random_point(rng: &mut ChaCha8Rng, p: ArrangementParams) -> TorusPoint<BigRational> {
        let values = (0..p.hyperplane_count())
            .map(|_| {
                let num = loop {
                    let v = rng.gen_range(-7i64..=7);
                    if v != 0 {
                        break v;
                    }
                };
                BigRational::new(BigInt::from(num), BigInt::from(rng.gen_range(1i64..=5)))
            })
            .collect();
        TorusPoint::rational(p, values).unwrap()
    }

    #[test]
    fn os_betti_matches_the_frozen_examples() {
        let p = params(3, 1);
        let resonant = os_betti(p, &weights(p, &[1, 1, -2])).unwrap();
        assert_eq!(resonant.dims(), &[1, 3, 2]);
        assert_eq!(resonant.betti(), &[0, 1, 1]);
        assert_eq!(resonant.euler(), 0);

        let generic = os_betti(p, &weights(p, &[1, 1, 1])).unwrap();
        assert_eq!(generic.betti(), &[0, 0, 0]);

        let zero = os_betti(p, &WeightVector::zeros(p)).unwrap();
        assert_eq!(zero.betti(), zero.dims());
    }

    #[test]
    fn local_betti_at_the_identity_recovers_the_dimensions() {
        for (n, ell) in [(3, 1), (4, 1), (4, 2), (5, 2)] {
            let p = params(n, ell);
            let report = local_betti_rational(p, &TorusPoint::ones(p)).unwrap();
            assert_eq!(report.betti(), report.dims(), "trivial system on {p}");
        }
    }

    #[test]
    fn local_betti_at_generic_points_vanishes_below_the_top() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // (4, 2): χ = (2−3)(2−4) = 2 concentrated on top; (3, 1): χ = 0.
        let p = params(4, 2);
        let report = local_betti_rational(p, &random_point(&mut rng, p)).unwrap();
        assert_eq!(report.betti(), &[0, 0, 2]);

        let p = params(3, 1);
        let report = local_betti_rational(p, &random_point(&mut rng, p)).unwrap();
        assert_eq!(report.betti(), &[0, 0, 0]);
    }

    #[test]
    fn cyclotomic_route_agrees_with_the_rank_one_resonance_example() {
        let p = params(3, 1);
        let w = WeightVector::new(p, vec![ratio(1, 2), ratio(1, 2), ratio(-1, 1)]).unwrap();
        let report = local_betti_cyclotomic(p, &w, &[3, 5, 7, 13]).unwrap();
        assert!(!report.consensus_warning());
        match report.provenance() {
            BettiProvenance::CyclotomicConsensus { order, primes, .. } => {
                assert_eq!(*order, 2);
                assert_eq!(primes, &[3, 5, 7, 13]);
            }
            other => panic!("unexpected provenance {other:?}"),
        }
        // t = (−1, −1, 1): the same rank drop as the rational resonant point.
        assert_eq!(report.betti(), &[0, 1, 1]);
    }

    #[test]
    fn cyclotomic_route_skips_inadmissible_primes() {
        let p = params(3, 1);
        let w = WeightVector::new(p, vec![ratio(1, 3), ratio(1, 3), ratio(-2, 3)]).unwrap();
        // 5 ≡ 2 (mod 3) is skipped; 7 and 13 are ≡ 1 (mod 3).
        let report = local_betti_cyclotomic(p, &w, &[5, 7, 13]).unwrap();
        match report.provenance() {
            BettiProvenance::CyclotomicConsensus { primes, .. } => {
                assert_eq!(primes, &[7, 13]);
            }
            other => panic!("unexpected provenance {other:?}"),
        }
        let err = local_betti_cyclotomic(p, &w, &[5, 7]).unwrap_err();
        assert_eq!(
            err,
            CohomologyError::LinAlg(LinAlgError::TooFewPrimes { found: 1 })
        );
    }

    #[test]
    fn linearization_holds_on_small_arrangements() {
        let p = params(2, 1);
        let report = verify_linearization(p, &weights(p, &[1])).unwrap();
        assert!(report.passed());
        assert_eq!(report.per_degree(), &[true]);

        let p = params(4, 1);
        for report in verify_linearization_sweep(p).unwrap() {
            assert!(report.passed(), "direction {:?}", report.lambda());
            assert!(report.first_mismatch().is_none());
        }
    }

    #[test]
    fn a_doctored_sign_convention_fails_at_the_first_odd_degree() {
        // Dropping the (−1)^q factor leaves even degrees untouched and
        // breaks the first odd degree with a nonzero derivative block.
        let p = params(3, 1);
        let w = weights(p, &[2, 3, 5]);
        for q in 0..p.top_degree() {
            let doctored = boundary_derivative(p, q + 1, w.coords()).unwrap().transpose();
            let mu = mu_closed_form(p, q, &w);
            if q % 2 == 0 {
                assert_eq!(mu, doctored, "even degrees carry no sign");
            } else {
                assert_ne!(mu, doctored, "odd degrees must feel the sign");
            }
        }
    }

    #[test]
    fn resonance_membership_matches_the_rank_examples() {
        let p = params(3, 1);
        assert!(resonance_membership(p, 1, 1, &weights(p, &[1, 1, -2])).unwrap());
        assert!(!resonance_membership(p, 1, 1, &weights(p, &[1, 1, 1])).unwrap());
        assert!(resonance_membership(p, 1, 3, &WeightVector::zeros(p)).unwrap());
        assert!(!resonance_membership(p, 1, 4, &WeightVector::zeros(p)).unwrap());
        // Scaling invariance.
        let scaled = WeightVector::new(p, vec![ratio(1, 2), ratio(1, 2), ratio(-1, 1)]).unwrap();
        assert!(resonance_membership(p, 1, 1, &scaled).unwrap());

        assert_eq!(
            resonance_membership(p, 0, 1, &WeightVector::zeros(p)).unwrap_err(),
            CohomologyError::DegreeOutOfRange { k: 0, max: 2 }
        );
        assert_eq!(
            resonance_membership(p, 3, 1, &WeightVector::zeros(p)).unwrap_err(),
            CohomologyError::DegreeOutOfRange { k: 3, max: 2 }
        );
        assert_eq!(
            resonance_membership(p, 1, 0, &WeightVector::zeros(p)).unwrap_err(),
            CohomologyError::ZeroMultiplicity
        );
    }

    #[test]
    fn tangent_cone_probe_matches_the_membership_bit() {
        let p = params(3, 1);
        let samples = [ratio(2, 1), ratio(3, 1), ratio(5, 2)];
        let probe = tangent_cone_probe(p, 1, 1, &[1, 1, -2], &samples).unwrap();
        assert!(probe.membership());
        assert!(probe.consistent());
        for row in probe.rows() {
            assert!(!row.trivial);
            assert!(row.betti_k >= 1, "u = {} lost the rank drop", row.u);
        }

        let probe = tangent_cone_probe(p, 1, 1, &[1, 1, 1], &[ratio(2, 1)]).unwrap();
        assert!(!probe.membership());
        assert!(probe.consistent());
        assert_eq!(probe.rows()[0].betti_k, 0);

        let flagged = tangent_cone_probe(p, 1, 1, &[1, 1, -2], &[ratio(1, 1)]).unwrap();
        assert!(flagged.rows()[0].trivial);
        assert!(flagged.consistent(), "trivial rows are excluded");

        assert_eq!(
            tangent_cone_probe(p, 1, 1, &[1, 1, -2], &[BigRational::zero()]).unwrap_err(),
            CohomologyError::ZeroParameter
        );
    }

    #[test]
    fn grid_scan_identifies_the_sum_zero_hits() {
        let p = params(3, 1);
        let report =
            resonance_scan(p, 1, 1, &SamplerSpec::Grid { low: -2, high: 2 }, 11).unwrap();
        // 5^3 grid points minus the skipped origin.
        assert_eq!(report.records().len(), 124);
        for record in report.records() {
            let sum: BigRational = record.lambda.iter().sum();
            assert_eq!(
                record.member,
                sum.is_zero(),
                "membership of {:?} misclassified",
                record.lambda
            );
        }
        assert_eq!(report.hits().count(), 18);
        // The sum-zero hits form a single linear component.
        assert_eq!(report.groups().len(), 1);
        let group = &report.groups()[0];
        assert_eq!(group.members.len(), 18);
        assert_eq!(group.combination_trials, group.combination_successes);
    }

    #[test]
    fn oversized_multiplicity_scans_find_nothing() {
        let p = params(3, 1);
        let report =
            resonance_scan(p, 1, 4, &SamplerSpec::Grid { low: -1, high: 1 }, 5).unwrap();
        assert_eq!(report.hits().count(), 0);
        assert!(report.groups().is_empty());
    }

    #[test]
    fn random_scans_are_reproducible() {
        let p = params(3, 1);
        let spec = SamplerSpec::Random { count: 12 };
        let a = resonance_scan(p, 1, 1, &spec, 42).unwrap();
        let b = resonance_scan(p, 1, 1, &spec, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records().len(), 12);
    }

    #[test]
    fn sandwich_holds_on_the_frozen_example() {
        let p = params(3, 1);
        let w = WeightVector::new(p, vec![ratio(1, 2), ratio(1, 2), ratio(-1, 1)]).unwrap();
        let report = sandwich_check(p, &w, &[3, 5, 7]).unwrap();
        assert_eq!(report.order(), 2);
        assert!(report.agreement());
        assert_eq!(report.os_betti(), &[0, 1, 1]);
        assert_eq!(report.local_betti(), &[0, 1, 1]);
        assert_eq!(report.dims(), &[1, 3, 2]);
    }

    #[test]
    fn sandwich_is_trivial_for_integral_weights() {
        let p = params(3, 1);
        let report = sandwich_check(p, &weights(p, &[1, 1, -2]), &[3, 5, 7]).unwrap();
        assert_eq!(report.order(), 1);
        // t = 1: the middle term is the full dimension in every degree.
        assert_eq!(report.local_betti(), report.dims());

        let zero = sandwich_check(p, &WeightVector::zeros(p), &[3, 5, 7]).unwrap();
        assert_eq!(zero.os_betti(), zero.dims());
        assert_eq!(zero.local_betti(), zero.dims());
    }

    #[test]
    fn reports_reject_mismatched_arrangements() {
        let p = params(3, 1);
        let other = params(4, 1);
        let w = weights(p, &[1, 1, -2]);
        assert_eq!(
            os_betti(other, &w).unwrap_err(),
            CohomologyError::ArrangementMismatch
        );
        assert_eq!(
            verify_linearization(other, &w).unwrap_err(),
            CohomologyError::ArrangementMismatch
        );
    }
}
