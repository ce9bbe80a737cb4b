//! Command-line surface for the discriminantal-arrangement toolkit.
//!
//! Every subcommand parses and validates its inputs against the arrangement
//! `A(n, ℓ)` before dispatching to the library crates, emits an exact JSON
//! (or, for scans, CSV) payload — rationals are canonical `num/den` strings,
//! never floats — and maps outcomes to exit codes: 0 on success, 1 on a
//! verification or computation failure, 2 on a usage error.
//!
//! Weight and torus vectors are always given in the global pair order: the
//! hyperplane pairs (i, j) with ℓ+1 ≤ j ≤ n and 1 ≤ i < j, sorted by j and
//! then i.  `basis --q 1` lists that order explicitly.

use std::fmt::Write as _;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cohomology_resonance::{
    local_betti_cyclotomic, local_betti_rational, os_betti, resonance_scan, sandwich_check,
    tangent_cone_probe, verify_linearization, verify_linearization_sweep, BettiProvenance,
    BettiReport, LinearizationReport, SamplerSpec,
};
use exact_linalg::{rational_product_is_zero, Matrix};
use fox_calculus::{GRMatrix, Word};
use index_combinatorics::{enumerate_basis, hyperplane_pairs, ArrangementParams};
use num::{BigRational, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resolution_builder::{assemble_boundary, boundary_eval, mapping_cone_blocks, TorusPoint};
use serde::{Deserialize, Serialize};

/// Environment variable consulted for the default of `--threads`.
pub const THREADS_ENV: &str = "ARRANGEMENT_THREADS";

const DEFAULT_SEED: u64 = 0;

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// The result of one CLI invocation: exit code plus the bytes for the two
/// standard streams.  `main` prints them verbatim; tests inspect them.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum CliError {
    /// Invalid invocation or input data: exit code 2.
    Usage(String),
    /// A check failed or a computation could not be completed: exit code 1.
    Failure(String),
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Parses `argv` and runs the requested subcommand.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome { code: 0, stdout: rendered, stderr: String::new() }
                }
                _ => Outcome { code: 2, stdout: String::new(), stderr: rendered },
            };
        }
    };
    match execute(cli) {
        Ok(out) => out,
        Err(CliError::Usage(msg)) => Outcome {
            code: 2,
            stdout: String::new(),
            stderr: format!("usage error: {msg}\n"),
        },
        Err(CliError::Failure(msg)) => Outcome {
            code: 1,
            stdout: String::new(),
            stderr: format!("failure: {msg}\n"),
        },
    }
}

// ---------------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "discriminantal",
    version,
    about = "Exact cohomology computations for discriminantal arrangements A(n, l)",
    long_about = "Exact cohomology computations for discriminantal arrangements A(n, l).\n\
        Weight (--weights) and torus (--torus) vectors list one exact rational per\n\
        hyperplane pair (i, j), ordered by j and then i — e.g. for A(4, 1):\n\
        (1,2), (1,3), (2,3), (1,4), (2,4), (3,4).  Entries use canonical num/den\n\
        form (\"1\", \"-3/2\").  Exit codes: 0 success, 1 verification/computation\n\
        failure, 2 usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format; csv applies to resonance-scan only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the payload to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default from ARRANGEMENT_THREADS, else 1).  The
    /// orchestration is single-threaded; this is an upper bound, recorded for
    /// reproducibility.
    #[arg(long, global = true)]
    threads: Option<NonZeroUsize>,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Arrangement {
    /// Number of points n of A(n, l).
    #[arg(long)]
    n: u32,
    /// Dimension parameter l (written ell) of A(n, l), with 1 <= l < n.
    #[arg(long)]
    ell: u32,
}

impl Arrangement {
    fn params(&self) -> Result<ArrangementParams, CliError> {
        ArrangementParams::new(self.n, self.ell)
            .map_err(|e| CliError::Usage(format!("invalid arrangement: {e}")))
    }
}

#[derive(Args, Debug)]
struct WeightsInput {
    /// Inline comma-separated rational weights in global pair order.
    #[arg(long, conflicts_with = "weights_file", allow_hyphen_values = true)]
    weights: Option<String>,
    /// File containing the comma-separated weights.
    #[arg(long)]
    weights_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TorusInput {
    /// Inline comma-separated rational torus coordinates in global pair order.
    #[arg(long, conflicts_with = "torus_file", allow_hyphen_values = true)]
    torus: Option<String>,
    /// File containing the comma-separated torus coordinates.
    #[arg(long)]
    torus_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the monomial basis of the Orlik–Solomon module in each degree.
    Basis {
        #[command(flatten)]
        arrangement: Arrangement,
        /// Restrict to a single degree.
        #[arg(long)]
        q: Option<usize>,
    },
    /// Print the per-degree dimensions (Poincaré coefficients), comma-separated.
    Dims {
        #[command(flatten)]
        arrangement: Arrangement,
    },
    /// Emit the Orlik–Solomon differential mu^q(lambda) as a sparse exact matrix.
    Mu {
        #[command(flatten)]
        arrangement: Arrangement,
        /// Cohomological degree q.
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        weights: WeightsInput,
    },
    /// Emit the boundary matrix of the chain complex: over the group ring by
    /// default, or evaluated at a torus point when --torus/--torus-file is given.
    Boundary {
        #[command(flatten)]
        arrangement: Arrangement,
        /// Homological degree q (1..=n-l).
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        torus: TorusInput,
    },
    /// Betti numbers of the Orlik–Solomon complex (A, mu(lambda)).
    Betti {
        #[command(flatten)]
        arrangement: Arrangement,
        #[command(flatten)]
        weights: WeightsInput,
    },
    /// Betti numbers of the rank-one local system: at a rational torus point,
    /// or at the root-of-unity point of a weight vector via multi-prime consensus.
    LocalBetti {
        #[command(flatten)]
        arrangement: Arrangement,
        #[command(flatten)]
        torus: TorusInput,
        #[command(flatten)]
        weights: WeightsInput,
        /// Primes for the consensus route (p = 1 mod the weight denominator).
        #[arg(long, value_delimiter = ',', default_values_t = vec![7u64, 13, 19])]
        primes: Vec<u64>,
    },
    /// Check mu^q(lambda) = (-1)^q transpose(boundary-derivative) in every degree,
    /// for one weight vector or (by default) all coordinate directions.
    VerifyLinearization {
        #[command(flatten)]
        arrangement: Arrangement,
        #[command(flatten)]
        weights: WeightsInput,
    },
    /// Check the chain complex: boundaries vanish at t = 1, consecutive
    /// boundaries compose to zero at a (given or random) torus point, and the
    /// mapping-cone blocks tile each boundary matrix.
    VerifyResolution {
        #[command(flatten)]
        arrangement: Arrangement,
        #[command(flatten)]
        torus: TorusInput,
        /// Seed for the random torus point when none is given.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify os-Betti <= local-Betti <= dimension per degree at the
    /// root-of-unity point of a rational weight vector.
    Sandwich {
        #[command(flatten)]
        arrangement: Arrangement,
        #[command(flatten)]
        weights: WeightsInput,
        /// Primes for the consensus route.
        #[arg(long, value_delimiter = ',', default_values_t = vec![7u64, 13, 19])]
        primes: Vec<u64>,
    },
    /// Scan weight vectors for resonance membership and group the hits.
    ResonanceScan {
        #[command(flatten)]
        arrangement: Arrangement,
        /// Cohomological degree k of the resonance variety.
        #[arg(long)]
        k: usize,
        /// Multiplicity bound m (membership means b_k >= m).
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Integer grid "low..high" over all coordinates (excludes the origin).
        #[arg(long, conflicts_with = "count", allow_hyphen_values = true)]
        grid: Option<String>,
        /// Number of random rational samples instead of a grid.
        #[arg(long)]
        count: Option<usize>,
        /// RNG seed (recorded in the output).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Probe the tangent-cone relation along an integral direction lambda:
    /// local Betti numbers at t(u) = (u^lambda) beside resonance membership.
    TangentCone {
        #[command(flatten)]
        arrangement: Arrangement,
        /// Cohomological degree k.
        #[arg(long)]
        k: usize,
        /// Multiplicity bound m.
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Comma-separated integer direction in global pair order.
        #[arg(long, allow_hyphen_values = true)]
        direction: String,
        /// Comma-separated rational parameters u (default: 3 random of height >= 3).
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        /// RNG seed for random u (recorded in the output).
        #[arg(long)]
        seed: Option<u64>,
    },
}

// ---------------------------------------------------------------------------
// Payload schemas (serde structs keep field order deterministic)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct MatrixPayload {
    pub n: u32,
    pub ell: u32,
    pub q: usize,
    pub rows: usize,
    pub cols: usize,
    /// Sparse entries `[row, col, "num/den"]` with 0-based indices in
    /// row-major order; only nonzero values appear.
    pub entries: Vec<(usize, usize, String)>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct GroupRingTermPayload {
    pub coeff: String,
    /// The group word as `[i, j, exponent]` runs.
    pub word: Vec<(u32, u32, i32)>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct GroupRingMatrixPayload {
    pub n: u32,
    pub ell: u32,
    pub q: usize,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, Vec<GroupRingTermPayload>)>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProvenancePayload {
    OsWeight {
        lambda: Vec<String>,
    },
    RationalTorus {
        t: Vec<String>,
    },
    CyclotomicConsensus {
        lambda: Vec<String>,
        order: u64,
        primes: Vec<u64>,
        agreement: bool,
    },
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct BettiPayload {
    pub dims: Vec<usize>,
    pub betti: Vec<usize>,
    pub euler: i64,
    pub provenance: ProvenancePayload,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct BasisDegreePayload {
    pub q: usize,
    pub count: usize,
    /// Each element is its list of generator pairs `[i, j]`.
    pub elements: Vec<Vec<(u32, u32)>>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct BasisPayload {
    pub n: u32,
    pub ell: u32,
    pub degrees: Vec<BasisDegreePayload>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct MismatchPayload {
    pub degree: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct LinearizationCasePayload {
    pub lambda: Vec<String>,
    pub per_degree: Vec<bool>,
    pub first_mismatch: Option<MismatchPayload>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct LinearizationPayload {
    pub n: u32,
    pub ell: u32,
    pub mode: String,
    pub passed: bool,
    pub cases: Vec<LinearizationCasePayload>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct CompositionPayload {
    pub degrees: (usize, usize),
    pub zero: bool,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct ResolutionPayload {
    pub n: u32,
    pub ell: u32,
    pub t: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub identity_vanishes: bool,
    pub compositions: Vec<CompositionPayload>,
    pub cone_blocks_tile: bool,
    pub passed: bool,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct SandwichPayload {
    pub n: u32,
    pub ell: u32,
    pub lambda: Vec<String>,
    pub order: u64,
    pub primes: Vec<u64>,
    pub agreement: bool,
    pub os_betti: Vec<usize>,
    pub local_betti: Vec<usize>,
    pub dims: Vec<usize>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct ScanRecordPayload {
    pub lambda: Vec<String>,
    pub betti: Vec<usize>,
    pub member: bool,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct ScanGroupPayload {
    pub members: Vec<usize>,
    pub combination_trials: usize,
    pub combination_successes: usize,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct ScanPayload {
    pub n: u32,
    pub ell: u32,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub records: Vec<ScanRecordPayload>,
    pub groups: Vec<ScanGroupPayload>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct ProbeRowPayload {
    pub u: String,
    pub trivial: bool,
    pub betti_k: usize,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
pub struct ProbePayload {
    pub n: u32,
    pub ell: u32,
    pub k: usize,
    pub m: usize,
    pub direction: Vec<i64>,
    pub membership: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub rows: Vec<ProbeRowPayload>,
    pub consistent: bool,
}

// ---------------------------------------------------------------------------
// Emission helpers
// ---------------------------------------------------------------------------

fn to_json<T: Serialize>(payload: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(payload)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Failure(format!("serialization failed: {e}")))
}

fn rational_strings(values: &[BigRational]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

/// Converts an exact matrix to its sparse payload (row-major nonzero entries).
pub fn matrix_payload(
    params: ArrangementParams,
    q: usize,
    m: &Matrix<BigRational>,
) -> MatrixPayload {
    let mut entries = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m.get(r, c);
            if !v.is_zero() {
                entries.push((r, c, v.to_string()));
            }
        }
    }
    MatrixPayload {
        n: params.n(),
        ell: params.ell(),
        q,
        rows: m.rows(),
        cols: m.cols(),
        entries,
    }
}

/// Rebuilds the dense matrix a payload describes; the round-trip inverse of
/// [`matrix_payload`].
pub fn matrix_from_payload(payload: &MatrixPayload) -> Result<Matrix<BigRational>, String> {
    let mut m = Matrix::zeros(&exact_linalg::Rationals, payload.rows, payload.cols);
    for (r, c, s) in &payload.entries {
        if *r >= payload.rows || *c >= payload.cols {
            return Err(format!("entry ({r}, {c}) outside {}x{}", payload.rows, payload.cols));
        }
        let v = BigRational::from_str(s).map_err(|e| format!("bad rational {s:?}: {e}"))?;
        m.set(*r, *c, v);
    }
    Ok(m)
}

fn word_runs(w: &Word) -> Vec<(u32, u32, i32)> {
    let mut out: Vec<(u32, u32, i32)> = Vec::new();
    for &(p, e) in w.letters() {
        if let Some(last) = out.last_mut() {
            if last.0 == p.i() && last.1 == p.j() {
                last.2 += i32::from(e);
                if last.2 == 0 {
                    out.pop();
                }
                continue;
            }
        }
        out.push((p.i(), p.j(), i32::from(e)));
    }
    out
}

fn group_ring_payload(params: ArrangementParams, q: usize, m: &GRMatrix) -> GroupRingMatrixPayload {
    let mut entries = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let e = m.get(r, c);
            if e.is_zero() {
                continue;
            }
            let terms: Vec<GroupRingTermPayload> = e
                .terms()
                .map(|(w, coeff)| GroupRingTermPayload {
                    coeff: coeff.to_string(),
                    word: word_runs(w),
                })
                .collect();
            entries.push((r, c, terms));
        }
    }
    GroupRingMatrixPayload {
        n: params.n(),
        ell: params.ell(),
        q,
        rows: m.rows(),
        cols: m.cols(),
        entries,
    }
}

fn betti_payload(report: &BettiReport) -> BettiPayload {
    let provenance = match report.provenance() {
        BettiProvenance::OsWeight { lambda } => ProvenancePayload::OsWeight {
            lambda: rational_strings(lambda),
        },
        BettiProvenance::RationalTorus { t } => ProvenancePayload::RationalTorus {
            t: rational_strings(t),
        },
        BettiProvenance::CyclotomicConsensus {
            lambda,
            order,
            primes,
            agreement,
        } => ProvenancePayload::CyclotomicConsensus {
            lambda: rational_strings(lambda),
            order: *order,
            primes: primes.clone(),
            agreement: *agreement,
        },
    };
    BettiPayload {
        dims: report.dims().to_vec(),
        betti: report.betti().to_vec(),
        euler: report.euler(),
        provenance,
    }
}

fn linearization_case(report: &LinearizationReport) -> LinearizationCasePayload {
    LinearizationCasePayload {
        lambda: rational_strings(report.lambda()),
        per_degree: report.per_degree().to_vec(),
        first_mismatch: report.first_mismatch().map(|loc| MismatchPayload {
            degree: loc.degree,
            row: loc.row,
            col: loc.col,
        }),
    }
}

/// The CSV document for a scan report: one header line
/// `lambda_<i>_<j>,…,k,m,member,b_k`, then one line per record.
pub fn scan_csv(params: ArrangementParams, payload: &ScanPayload) -> String {
    let mut out = String::new();
    let header: Vec<String> = hyperplane_pairs(params)
        .iter()
        .map(|p| format!("lambda_{}_{}", p.i(), p.j()))
        .chain(["k", "m", "member", "b_k"].map(String::from))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for record in &payload.records {
        let mut fields = record.lambda.clone();
        fields.push(payload.k.to_string());
        fields.push(payload.m.to_string());
        fields.push(record.member.to_string());
        fields.push(record.betti[payload.k].to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Input parsing
// ---------------------------------------------------------------------------

fn parse_rational_list(text: &str, what: &str) -> Result<Vec<BigRational>, CliError> {
    text.split(',')
        .map(str::trim)
        .map(|piece| {
            BigRational::from_str(piece).map_err(|e| {
                CliError::Usage(format!(
                    "could not parse {what} entry {piece:?} as an exact rational \
                     (use forms like 2 or -3/2): {e}"
                ))
            })
        })
        .collect()
}

fn parse_integer_list(text: &str, what: &str) -> Result<Vec<i64>, CliError> {
    text.split(',')
        .map(str::trim)
        .map(|piece| {
            piece
                .parse::<i64>()
                .map_err(|e| CliError::Usage(format!("could not parse {what} entry {piece:?}: {e}")))
        })
        .collect()
}

fn check_length(
    params: ArrangementParams,
    got: usize,
    what: &str,
) -> Result<(), CliError> {
    let expected = params.hyperplane_count();
    if got != expected {
        return usage(format!(
            "expected N = {expected} {what} for {params} (one per hyperplane pair), got {got}"
        ));
    }
    Ok(())
}

fn read_vector_source(
    inline: &Option<String>,
    file: &Option<PathBuf>,
    flag: &str,
) -> Result<Option<String>, CliError> {
    if let Some(text) = inline {
        return Ok(Some(text.clone()));
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("could not read {flag} file {}: {e}", path.display()))
        })?;
        return Ok(Some(text.trim().to_string()));
    }
    Ok(None)
}

impl WeightsInput {
    fn parse_optional(
        &self,
        params: ArrangementParams,
    ) -> Result<Option<orlik_solomon::WeightVector>, CliError> {
        let Some(text) = read_vector_source(&self.weights, &self.weights_file, "--weights-file")?
        else {
            return Ok(None);
        };
        let coords = parse_rational_list(&text, "weight")?;
        check_length(params, coords.len(), "weights")?;
        orlik_solomon::WeightVector::new(params, coords)
            .map(Some)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    fn parse_required(
        &self,
        params: ArrangementParams,
    ) -> Result<orlik_solomon::WeightVector, CliError> {
        match self.parse_optional(params)? {
            Some(w) => Ok(w),
            None => usage("provide --weights or --weights-file"),
        }
    }
}

impl TorusInput {
    fn parse_optional(
        &self,
        params: ArrangementParams,
    ) -> Result<Option<TorusPoint<BigRational>>, CliError> {
        let Some(text) = read_vector_source(&self.torus, &self.torus_file, "--torus-file")? else {
            return Ok(None);
        };
        let coords = parse_rational_list(&text, "torus")?;
        check_length(params, coords.len(), "torus coordinates")?;
        TorusPoint::rational(params, coords)
            .map(Some)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn parse_grid_range(text: &str) -> Result<(i64, i64), CliError> {
    let Some((lo, hi)) = text.split_once("..") else {
        return usage(format!("grid range must look like \"-2..2\", got {text:?}"));
    };
    let low = lo
        .trim()
        .parse::<i64>()
        .map_err(|e| CliError::Usage(format!("bad grid bound {lo:?}: {e}")))?;
    let high = hi
        .trim()
        .parse::<i64>()
        .map_err(|e| CliError::Usage(format!("bad grid bound {hi:?}: {e}")))?;
    if low > high {
        return usage(format!("empty grid range {low}..{high}"));
    }
    Ok((low, high))
}

fn resolve_threads(explicit: Option<NonZeroUsize>) -> Result<usize, CliError> {
    if let Some(t) = explicit {
        return Ok(t.get());
    }
    match std::env::var(THREADS_ENV) {
        Ok(text) => text.trim().parse::<NonZeroUsize>().map(NonZeroUsize::get).map_err(|_| {
            CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {text:?}"))
        }),
        Err(_) => Ok(1),
    }
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

struct Emission {
    payload: String,
    notes: String,
    failed: bool,
}

impl Emission {
    fn ok(payload: String) -> Self {
        Emission { payload, notes: String::new(), failed: false }
    }
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    resolve_threads(cli.threads)?;
    if cli.format == Format::Csv && !matches!(cli.command, Command::ResonanceScan { .. }) {
        return usage("--format csv is only available for resonance-scan");
    }
    let emission = dispatch(&cli)?;
    let mut stdout = String::new();
    if let Some(path) = &cli.output {
        std::fs::write(path, emission.payload.as_bytes())
            .map_err(|e| CliError::Failure(format!("could not write {}: {e}", path.display())))?;
    } else {
        stdout = emission.payload;
    }
    Ok(Outcome {
        code: i32::from(emission.failed),
        stdout,
        stderr: emission.notes,
    })
}

fn dispatch(cli: &Cli) -> Result<Emission, CliError> {
    match &cli.command {
        Command::Basis { arrangement, q } => {
            let params = arrangement.params()?;
            let top = params.top_degree();
            if let Some(deg) = q {
                if *deg > top {
                    return usage(format!("degree q = {deg} exceeds the top degree {top} of {params}"));
                }
            }
            let degrees: Vec<usize> = match q {
                Some(deg) => vec![*deg],
                None => (0..=top).collect(),
            };
            let payload = BasisPayload {
                n: params.n(),
                ell: params.ell(),
                degrees: degrees
                    .into_iter()
                    .map(|deg| {
                        let elements: Vec<Vec<(u32, u32)>> = enumerate_basis(params, deg)
                            .iter()
                            .map(|b| {
                                b.i_set()
                                    .iter()
                                    .zip(b.j_set())
                                    .map(|(&i, &j)| (i, j))
                                    .collect()
                            })
                            .collect();
                        BasisDegreePayload { q: deg, count: elements.len(), elements }
                    })
                    .collect(),
            };
            Ok(Emission::ok(to_json(&payload)?))
        }

        Command::Dims { arrangement } => {
            let params = arrangement.params()?;
            let dims: Vec<String> = index_combinatorics::poincare_coefficients(params)
                .into_iter()
                .map(|c| c.to_string())
                .collect();
            Ok(Emission::ok(format!("{}\n", dims.join(","))))
        }

        Command::Mu { arrangement, q, weights } => {
            let params = arrangement.params()?;
            if *q > params.top_degree() {
                return usage(format!(
                    "degree q = {q} exceeds the top degree {} of {params}",
                    params.top_degree()
                ));
            }
            let w = weights.parse_required(params)?;
            let m = orlik_solomon::mu_closed_form(params, *q, &w);
            Ok(Emission::ok(to_json(&matrix_payload(params, *q, &m))?))
        }

        Command::Boundary { arrangement, q, torus } => {
            let params = arrangement.params()?;
            let top = params.top_degree();
            if *q < 1 || *q > top {
                return usage(format!("degree q = {q} outside 1..={top} for {params}"));
            }
            match torus.parse_optional(params)? {
                Some(t) => {
                    let m = boundary_eval(params, *q, &t)
                        .map_err(|e| CliError::Failure(e.to_string()))?;
                    Ok(Emission::ok(to_json(&matrix_payload(params, *q, &m))?))
                }
                None => {
                    let m = assemble_boundary(params, *q)
                        .map_err(|e| CliError::Failure(e.to_string()))?;
                    Ok(Emission::ok(to_json(&group_ring_payload(params, *q, &m))?))
                }
            }
        }

        Command::Betti { arrangement, weights } => {
            let params = arrangement.params()?;
            let w = weights.parse_required(params)?;
            let report = os_betti(params, &w).map_err(|e| CliError::Failure(e.to_string()))?;
            Ok(Emission::ok(to_json(&betti_payload(&report))?))
        }

        Command::LocalBetti { arrangement, torus, weights, primes } => {
            let params = arrangement.params()?;
            let torus_point = torus.parse_optional(params)?;
            let weight_vector = weights.parse_optional(params)?;
            let report = match (torus_point, weight_vector) {
                (Some(t), None) => {
                    local_betti_rational(params, &t).map_err(|e| CliError::Failure(e.to_string()))?
                }
                (None, Some(w)) => local_betti_cyclotomic(params, &w, primes)
                    .map_err(|e| CliError::Failure(e.to_string()))?,
                (Some(_), Some(_)) => {
                    return usage("give either a torus point or a weight vector, not both")
                }
                (None, None) => {
                    return usage("provide --torus/--torus-file or --weights/--weights-file")
                }
            };
            let mut notes = String::new();
            if report.consensus_warning() {
                notes.push_str(
                    "warning: primes disagree; reported Betti numbers are per-degree minima\n",
                );
            }
            Ok(Emission {
                payload: to_json(&betti_payload(&report))?,
                notes,
                failed: false,
            })
        }

        Command::VerifyLinearization { arrangement, weights } => {
            let params = arrangement.params()?;
            let (mode, reports) = match weights.parse_optional(params)? {
                Some(w) => (
                    "single",
                    vec![verify_linearization(params, &w)
                        .map_err(|e| CliError::Failure(e.to_string()))?],
                ),
                None => (
                    "sweep",
                    verify_linearization_sweep(params)
                        .map_err(|e| CliError::Failure(e.to_string()))?,
                ),
            };
            let passed = reports.iter().all(|r| r.passed());
            let payload = LinearizationPayload {
                n: params.n(),
                ell: params.ell(),
                mode: mode.to_string(),
                passed,
                cases: reports.iter().map(linearization_case).collect(),
            };
            Ok(Emission {
                payload: to_json(&payload)?,
                notes: String::new(),
                failed: !passed,
            })
        }

        Command::VerifyResolution { arrangement, torus, seed } => {
            let params = arrangement.params()?;
            verify_resolution(params, torus, *seed)
        }

        Command::Sandwich { arrangement, weights, primes } => {
            let params = arrangement.params()?;
            let w = weights.parse_required(params)?;
            let report =
                sandwich_check(params, &w, primes).map_err(|e| CliError::Failure(e.to_string()))?;
            let payload = SandwichPayload {
                n: params.n(),
                ell: params.ell(),
                lambda: rational_strings(report.lambda()),
                order: report.order(),
                primes: report.primes().to_vec(),
                agreement: report.agreement(),
                os_betti: report.os_betti().to_vec(),
                local_betti: report.local_betti().to_vec(),
                dims: report.dims().to_vec(),
            };
            let mut notes = String::new();
            if !report.agreement() {
                notes.push_str("warning: primes disagree on the local Betti numbers\n");
            }
            Ok(Emission { payload: to_json(&payload)?, notes, failed: false })
        }

        Command::ResonanceScan { arrangement, k, m, grid, count, seed } => {
            let params = arrangement.params()?;
            let sampler = match (grid, count) {
                (Some(range), None) => {
                    let (low, high) = parse_grid_range(range)?;
                    SamplerSpec::Grid { low, high }
                }
                (None, Some(c)) => SamplerSpec::Random { count: *c },
                (None, None) => return usage("provide --grid low..high or --count"),
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let report = resonance_scan(params, *k, *m, &sampler, seed)
                .map_err(|e| CliError::Failure(e.to_string()))?;
            let payload = ScanPayload {
                n: params.n(),
                ell: params.ell(),
                k: *k,
                m: *m,
                seed,
                records: report
                    .records()
                    .iter()
                    .map(|r| ScanRecordPayload {
                        lambda: rational_strings(&r.lambda),
                        betti: r.betti.clone(),
                        member: r.member,
                    })
                    .collect(),
                groups: report
                    .groups()
                    .iter()
                    .map(|g| ScanGroupPayload {
                        members: g.members.clone(),
                        combination_trials: g.combination_trials,
                        combination_successes: g.combination_successes,
                    })
                    .collect(),
            };
            let body = match cli.format {
                Format::Json => to_json(&payload)?,
                Format::Csv => scan_csv(params, &payload),
            };
            Ok(Emission {
                payload: body,
                notes: format!("seed: {seed}\n"),
                failed: false,
            })
        }

        Command::TangentCone { arrangement, k, m, direction, u, seed } => {
            let params = arrangement.params()?;
            let dir = parse_integer_list(direction, "direction")?;
            check_length(params, dir.len(), "direction entries")?;
            let (samples, used_seed) = match u {
                Some(text) => (parse_rational_list(text, "u")?, None),
                None => {
                    let seed = seed.unwrap_or(DEFAULT_SEED);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    ((0..3).map(|_| random_parameter(&mut rng)).collect(), Some(seed))
                }
            };
            let probe = tangent_cone_probe(params, *k, *m, &dir, &samples)
                .map_err(|e| CliError::Failure(e.to_string()))?;
            let payload = ProbePayload {
                n: params.n(),
                ell: params.ell(),
                k: *k,
                m: *m,
                direction: dir,
                membership: probe.membership(),
                seed: used_seed,
                rows: probe
                    .rows()
                    .iter()
                    .map(|row| ProbeRowPayload {
                        u: row.u.to_string(),
                        trivial: row.trivial,
                        betti_k: row.betti_k,
                    })
                    .collect(),
                consistent: probe.consistent(),
            };
            let notes = match used_seed {
                Some(s) => format!("seed: {s}\n"),
                None => String::new(),
            };
            Ok(Emission { payload: to_json(&payload)?, notes, failed: false })
        }
    }
}

/// A random rational of height at least 3 (so never 0 or ±1): a generic
/// one-parameter value.
fn random_parameter(rng: &mut ChaCha8Rng) -> BigRational {
    loop {
        let num = rng.gen_range(-9i64..=9);
        let den = rng.gen_range(1i64..=4);
        if num == 0 {
            continue;
        }
        let v = BigRational::new(num.into(), den.into());
        let height = v.numer().magnitude().max(v.denom().magnitude());
        if *height >= 3u32.into() {
            return v;
        }
    }
}

fn verify_resolution(
    params: ArrangementParams,
    torus: &TorusInput,
    seed: Option<u64>,
) -> Result<Emission, CliError> {
    let top = params.top_degree();
    let (point, used_seed) = match torus.parse_optional(params)? {
        Some(t) => (t, None),
        None => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coords: Vec<BigRational> = (0..params.hyperplane_count())
                .map(|_| random_parameter(&mut rng))
                .collect();
            (
                TorusPoint::rational(params, coords)
                    .map_err(|e| CliError::Failure(e.to_string()))?,
                Some(seed),
            )
        }
    };

    let ones = TorusPoint::ones(params);
    let mut identity_vanishes = true;
    for q in 1..=top {
        let at_one =
            boundary_eval(params, q, &ones).map_err(|e| CliError::Failure(e.to_string()))?;
        identity_vanishes &= at_one.is_zero(&exact_linalg::Rationals);
    }

    let boundaries: Result<Vec<Matrix<BigRational>>, CliError> = (1..=top)
        .map(|q| boundary_eval(params, q, &point).map_err(|e| CliError::Failure(e.to_string())))
        .collect();
    let boundaries = boundaries?;
    let mut compositions = Vec::new();
    for q in 1..top {
        let zero = rational_product_is_zero(&boundaries[q - 1], &boundaries[q])
            .map_err(|e| CliError::Failure(e.to_string()))?;
        compositions.push(CompositionPayload { degrees: (q, q + 1), zero });
    }

    let mut cone_blocks_tile = true;
    for q in 1..=top {
        let full = assemble_boundary(params, q).map_err(|e| CliError::Failure(e.to_string()))?;
        // The block partition of the boundary out of degree q is indexed by
        // the degree q - 1 it lands in.
        let blocks =
            mapping_cone_blocks(params, q - 1).map_err(|e| CliError::Failure(e.to_string()))?;
        let (rs, cs) = (blocks.row_split(), blocks.col_split());
        let mut tiled = fox_calculus::GRMatrix::zeros(full.rows(), full.cols());
        for r in 0..full.rows() {
            for c in 0..full.cols() {
                let e = if r < rs && c < cs {
                    blocks.top_left().get(r, c)
                } else if r < rs {
                    blocks.top_right().get(r, c - cs)
                } else if c < cs {
                    blocks.bottom_left().get(r - rs, c)
                } else {
                    blocks.bottom_right().get(r - rs, c - cs)
                };
                tiled.set(r, c, e.clone());
            }
        }
        let lower_left_zero = blocks.bottom_left().entries().iter().all(|e| e.is_zero());
        cone_blocks_tile &= tiled == full && lower_left_zero;
    }

    let passed =
        identity_vanishes && compositions.iter().all(|c| c.zero) && cone_blocks_tile;
    let payload = ResolutionPayload {
        n: params.n(),
        ell: params.ell(),
        t: rational_strings(point.values()),
        seed: used_seed,
        identity_vanishes,
        compositions,
        cone_blocks_tile,
        passed,
    };
    let mut notes = String::new();
    if let Some(s) = used_seed {
        let _ = writeln!(notes, "seed: {s}");
    }
    Ok(Emission { payload: to_json(&payload)?, notes, failed: !passed })
}
