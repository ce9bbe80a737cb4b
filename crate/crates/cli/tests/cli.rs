//! End-to-end tests for the `discriminantal` command-line interface.
//!
//! Every test drives [`cli::run`] in process with a fixed argv and asserts on
//! the full [`cli::Outcome`]: exit code, stdout payload, and stderr notes.
//! JSON payloads are deserialized back through the public payload types, so
//! these tests also pin the wire schema.

use std::str::FromStr;

use num::BigRational;

use cli::{
    BasisPayload, BettiPayload, GroupRingMatrixPayload, LinearizationPayload, MatrixPayload,
    Outcome, ProbePayload, ProvenancePayload, ResolutionPayload, SandwichPayload, ScanPayload,
    matrix_from_payload, matrix_payload, run,
};
use index_combinatorics::ArrangementParams;

fn cli(args: &[&str]) -> Outcome {
    let mut argv = vec!["discriminantal"];
    argv.extend_from_slice(args);
    run(argv)
}

fn rat(text: &str) -> BigRational {
    BigRational::from_str(text).unwrap()
}

// ---------------------------------------------------------------------------
// Plain-text and basis output
// ---------------------------------------------------------------------------

#[test]
fn dims_prints_the_poincare_coefficients_as_plain_text() {
    let out = cli(&["dims", "--n", "4", "--ell", "1"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "1,6,11,6\n");
    assert_eq!(out.stderr, "");

    let out = cli(&["dims", "--n", "6", "--ell", "1"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "1,15,85,225,274,120\n");
}

#[test]
fn basis_lists_monomials_for_one_degree_or_all() {
    let out = cli(&["basis", "--n", "4", "--ell", "1", "--q", "2"]);
    assert_eq!(out.code, 0);
    let payload: BasisPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!((payload.n, payload.ell), (4, 1));
    assert_eq!(payload.degrees.len(), 1);
    let degree = &payload.degrees[0];
    assert_eq!(degree.q, 2);
    assert_eq!(degree.count, 11);
    assert_eq!(degree.elements.len(), 11);
    assert!(degree.elements.iter().all(|e| e.len() == 2));
    // Every factor is a pair (i, j) with 1 <= i < j <= 4.
    for element in &degree.elements {
        for &(i, j) in element {
            assert!(1 <= i && i < j && j <= 4);
        }
    }

    // With no --q the payload covers degrees 0..=top and matches the dims.
    let out = cli(&["basis", "--n", "4", "--ell", "1"]);
    assert_eq!(out.code, 0);
    let payload: BasisPayload = serde_json::from_str(&out.stdout).unwrap();
    let counts: Vec<usize> = payload.degrees.iter().map(|d| d.count).collect();
    assert_eq!(counts, vec![1, 6, 11, 6]);

    // Degrees above the top are a usage error.
    let out = cli(&["basis", "--n", "4", "--ell", "1", "--q", "5"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("top degree"), "stderr: {}", out.stderr);
}

// ---------------------------------------------------------------------------
// Matrix payloads
// ---------------------------------------------------------------------------

#[test]
fn mu_emits_a_sparse_exact_matrix() {
    let out = cli(&["mu", "--n", "2", "--ell", "1", "--q", "0", "--weights", "1"]);
    assert_eq!(out.code, 0);
    let payload: MatrixPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!((payload.n, payload.ell, payload.q), (2, 1, 0));
    assert_eq!((payload.rows, payload.cols), (1, 1));
    assert_eq!(payload.entries, vec![(0, 0, "1".to_string())]);
}

#[test]
fn mu_payload_round_trips_through_the_exact_matrix() {
    let out = cli(&["mu", "--n", "3", "--ell", "1", "--q", "1", "--weights", "1/2,-3/2,7"]);
    assert_eq!(out.code, 0);
    let payload: MatrixPayload = serde_json::from_str(&out.stdout).unwrap();

    let params = ArrangementParams::new(3, 1).unwrap();
    let weights = orlik_solomon::WeightVector::new(
        params,
        vec![rat("1/2"), rat("-3/2"), rat("7")],
    )
    .unwrap();
    let expected = orlik_solomon::mu_closed_form(params, 1, &weights);

    let decoded = matrix_from_payload(&payload).unwrap();
    assert_eq!(decoded, expected);

    // Re-encoding the decoded matrix reproduces the payload exactly.
    assert_eq!(matrix_payload(params, 1, &decoded), payload);
}

#[test]
fn boundary_at_the_identity_torus_point_is_the_zero_matrix() {
    let out = cli(&["boundary", "--n", "3", "--ell", "1", "--q", "1", "--torus", "1,1,1"]);
    assert_eq!(out.code, 0);
    let payload: MatrixPayload = serde_json::from_str(&out.stdout).unwrap();
    // Evaluated boundaries use the linear-map convention: rows index the
    // codomain (degree 0), columns the domain (degree 1).
    assert_eq!((payload.rows, payload.cols), (1, 3));
    assert!(payload.entries.is_empty());
}

#[test]
fn boundary_without_a_torus_point_emits_group_ring_entries() {
    let out = cli(&["boundary", "--n", "3", "--ell", "1", "--q", "1"]);
    assert_eq!(out.code, 0);
    let payload: GroupRingMatrixPayload = serde_json::from_str(&out.stdout).unwrap();
    // Symbolic boundaries keep the chain-complex convention: rows index the
    // source degree.
    assert_eq!((payload.rows, payload.cols), (3, 1));
    assert_eq!(payload.entries.len(), 3);

    // Each entry of the first boundary is x_{ij} - 1; the identity term
    // (empty word) sorts first.
    let pair_for_row = [(1u32, 2u32), (1, 3), (2, 3)];
    for (row, &(i, j)) in pair_for_row.iter().enumerate() {
        let (r, c, terms) = &payload.entries[row];
        assert_eq!((*r, *c), (row, 0));
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].coeff, "-1");
        assert!(terms[0].word.is_empty());
        assert_eq!(terms[1].coeff, "1");
        assert_eq!(terms[1].word, vec![(i, j, 1)]);
    }
}

// ---------------------------------------------------------------------------
// Betti reports
// ---------------------------------------------------------------------------

#[test]
fn betti_reports_weight_cohomology_with_provenance() {
    let out = cli(&["betti", "--n", "3", "--ell", "1", "--weights", "1,1,-2"]);
    assert_eq!(out.code, 0);
    let payload: BettiPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.dims, vec![1, 3, 2]);
    assert_eq!(payload.betti, vec![0, 1, 1]);
    assert_eq!(payload.euler, 0);
    assert_eq!(
        payload.provenance,
        ProvenancePayload::OsWeight {
            lambda: vec!["1".into(), "1".into(), "-2".into()]
        }
    );
}

#[test]
fn local_betti_accepts_a_rational_torus_point() {
    let out = cli(&["local-betti", "--n", "3", "--ell", "1", "--torus", "2,2,1/4"]);
    assert_eq!(out.code, 0);
    let payload: BettiPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.dims, vec![1, 3, 2]);
    assert_eq!(payload.betti, vec![0, 1, 1]);
    assert_eq!(
        payload.provenance,
        ProvenancePayload::RationalTorus {
            t: vec!["2".into(), "2".into(), "1/4".into()]
        }
    );
}

#[test]
fn local_betti_runs_the_cyclotomic_consensus_for_weights() {
    let out = cli(&[
        "local-betti", "--n", "3", "--ell", "1", "--weights", "1/2,1/2,-1",
        "--primes", "3,5,7,13",
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let payload: BettiPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.betti, vec![0, 1, 1]);
    match payload.provenance {
        ProvenancePayload::CyclotomicConsensus { order, primes, agreement, .. } => {
            assert_eq!(order, 2);
            // p = 3 is dropped: 3 - 1 is not divisible by... it is. Keep the
            // admissible ones only; all of 3, 5, 7, 13 are 1 mod 2.
            assert_eq!(primes, vec![3, 5, 7, 13]);
            assert!(agreement);
        }
        other => panic!("unexpected provenance {other:?}"),
    }
}

#[test]
fn local_betti_fails_cleanly_when_too_few_primes_are_admissible() {
    // Order 3 weights: only p = 7 works among {5, 7}.
    let out = cli(&[
        "local-betti", "--n", "3", "--ell", "1", "--weights", "1/3,1/3,-2/3",
        "--primes", "5,7",
    ]);
    assert_eq!(out.code, 1);
    assert_eq!(out.stdout, "");
    assert!(out.stderr.starts_with("failure:"), "stderr: {}", out.stderr);
    assert!(out.stderr.contains("admissible primes"), "stderr: {}", out.stderr);
}

// ---------------------------------------------------------------------------
// Verification commands
// ---------------------------------------------------------------------------

#[test]
fn verify_linearization_sweeps_all_coordinate_directions() {
    let out = cli(&["verify-linearization", "--n", "4", "--ell", "1"]);
    assert_eq!(out.code, 0);
    let payload: LinearizationPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.mode, "sweep");
    assert!(payload.passed);
    assert_eq!(payload.cases.len(), 6);
    for case in &payload.cases {
        assert!(case.per_degree.iter().all(|&ok| ok));
        assert!(case.first_mismatch.is_none());
    }
}

#[test]
fn verify_linearization_accepts_a_single_weight_vector() {
    let out = cli(&[
        "verify-linearization", "--n", "3", "--ell", "1", "--weights", "2/3,-1/5,4",
    ]);
    assert_eq!(out.code, 0);
    let payload: LinearizationPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.mode, "single");
    assert!(payload.passed);
    assert_eq!(payload.cases.len(), 1);
    assert_eq!(payload.cases[0].lambda, vec!["2/3", "-1/5", "4"]);
}

#[test]
fn verify_resolution_draws_a_generic_point_and_records_the_seed() {
    let out = cli(&["verify-resolution", "--n", "4", "--ell", "2"]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert_eq!(out.stderr, "seed: 0\n");
    let payload: ResolutionPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.seed, Some(0));
    assert!(payload.identity_vanishes);
    assert!(payload.compositions.iter().all(|c| c.zero));
    assert!(payload.cone_blocks_tile);
    assert!(payload.passed);
    assert_eq!(payload.t.len(), 5);
}

#[test]
fn verify_resolution_accepts_an_explicit_torus_point() {
    let out = cli(&[
        "verify-resolution", "--n", "3", "--ell", "1", "--torus", "2,5,-3/2",
    ]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stderr, "");
    let payload: ResolutionPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.seed, None);
    assert_eq!(payload.t, vec!["2", "5", "-3/2"]);
    assert!(payload.passed);
    // The serialized form omits the seed field entirely when none was used.
    assert!(!out.stdout.contains("\"seed\""));
}

#[test]
fn sandwich_reports_both_bounds() {
    let out = cli(&["sandwich", "--n", "3", "--ell", "1", "--weights", "1/2,1/2,-1"]);
    assert_eq!(out.code, 0);
    let payload: SandwichPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.order, 2);
    assert_eq!(payload.primes, vec![7, 13, 19]);
    assert!(payload.agreement);
    assert_eq!(payload.os_betti, vec![0, 1, 1]);
    assert_eq!(payload.local_betti, vec![0, 1, 1]);
    assert_eq!(payload.dims, vec![1, 3, 2]);
}

// ---------------------------------------------------------------------------
// Resonance scan and tangent cone
// ---------------------------------------------------------------------------

#[test]
fn resonance_scan_csv_is_deterministic_and_reports_the_seed() {
    let args = [
        "resonance-scan", "--n", "3", "--ell", "1", "--k", "1", "--count", "10",
        "--seed", "9", "--format", "csv",
    ];
    let first = cli(&args);
    assert_eq!(first.code, 0);
    assert_eq!(first.stderr, "seed: 9\n");

    let mut lines = first.stdout.lines();
    assert_eq!(
        lines.next(),
        Some("lambda_1_2,lambda_1_3,lambda_2_3,k,m,member,b_k")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    for row in &rows {
        assert_eq!(row.split(',').count(), 7);
    }

    let second = cli(&args);
    assert_eq!(second.stdout, first.stdout);
    assert_eq!(second.stderr, first.stderr);
}

#[test]
fn resonance_scan_grid_matches_the_sum_zero_locus() {
    let out = cli(&[
        "resonance-scan", "--n", "3", "--ell", "1", "--k", "1", "--grid", "-2..2",
    ]);
    assert_eq!(out.code, 0);
    let payload: ScanPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.records.len(), 124);
    let hits: Vec<_> = payload.records.iter().filter(|r| r.member).collect();
    assert_eq!(hits.len(), 18);
    for record in &payload.records {
        let sum: BigRational = record.lambda.iter().map(|s| rat(s)).sum();
        assert_eq!(record.member, sum == BigRational::from_integer(0.into()));
    }
    assert_eq!(payload.groups.len(), 1);
    assert_eq!(payload.groups[0].members.len(), 18);
}

#[test]
fn tangent_cone_probes_explicit_parameters() {
    let out = cli(&[
        "tangent-cone", "--n", "3", "--ell", "1", "--k", "1",
        "--direction", "1,1,-2", "--u", "2,3,5/2",
    ]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stderr, "");
    let payload: ProbePayload = serde_json::from_str(&out.stdout).unwrap();
    assert!(payload.membership);
    assert_eq!(payload.seed, None);
    assert_eq!(payload.rows.len(), 3);
    for row in &payload.rows {
        assert!(!row.trivial);
        assert!(row.betti_k >= 1);
    }
    assert!(payload.consistent);
}

#[test]
fn tangent_cone_flags_the_trivial_parameter_and_draws_random_ones() {
    // u = 1 lands on the trivial torus point; the row is flagged and excluded
    // from the consistency verdict.
    let out = cli(&[
        "tangent-cone", "--n", "3", "--ell", "1", "--k", "1",
        "--direction", "1,1,-2", "--u", "1,3",
    ]);
    assert_eq!(out.code, 0);
    let payload: ProbePayload = serde_json::from_str(&out.stdout).unwrap();
    assert!(payload.rows[0].trivial);
    assert!(!payload.rows[1].trivial);
    assert!(payload.consistent);

    // Without --u three pseudorandom parameters are drawn from the seed.
    let out = cli(&[
        "tangent-cone", "--n", "3", "--ell", "1", "--k", "1",
        "--direction", "1,1,-2", "--seed", "11",
    ]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stderr, "seed: 11\n");
    let payload: ProbePayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.seed, Some(11));
    assert_eq!(payload.rows.len(), 3);
    assert!(payload.rows.iter().all(|r| !r.trivial));
    assert!(payload.consistent);
}

// ---------------------------------------------------------------------------
// Usage errors, exit codes, and output redirection
// ---------------------------------------------------------------------------

#[test]
fn wrong_vector_length_is_a_usage_error_naming_the_expected_count() {
    let out = cli(&["mu", "--n", "2", "--ell", "1", "--q", "0", "--weights", "1,2"]);
    assert_eq!(out.code, 2);
    assert_eq!(out.stdout, "");
    assert!(out.stderr.contains("N = 1"), "stderr: {}", out.stderr);
    assert!(out.stderr.contains("got 2"), "stderr: {}", out.stderr);
}

#[test]
fn malformed_rationals_and_unknown_flags_are_usage_errors() {
    let out = cli(&["betti", "--n", "3", "--ell", "1", "--weights", "1,x,3"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("\"x\""), "stderr: {}", out.stderr);

    let out = cli(&["betti", "--n", "3", "--ell", "1", "--frobnicate"]);
    assert_eq!(out.code, 2);

    let out = cli(&["dims", "--n", "1", "--ell", "1"]);
    assert_eq!(out.code, 2, "n <= ell must be rejected; stderr: {}", out.stderr);
}

#[test]
fn csv_format_is_reserved_for_the_scan_command() {
    let out = cli(&["betti", "--n", "3", "--ell", "1", "--weights", "1,1,-2", "--format", "csv"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("resonance-scan"), "stderr: {}", out.stderr);
}

#[test]
fn help_prints_to_stdout_with_a_zero_exit_code() {
    let out = cli(&["--help"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("discriminantal"));
    assert!(out.stderr.is_empty());
}

#[test]
fn output_flag_writes_the_payload_to_a_file() {
    let path = std::env::temp_dir().join(format!(
        "discriminantal-cli-test-{}.json",
        std::process::id()
    ));
    let path_text = path.to_str().unwrap();
    let out = cli(&[
        "betti", "--n", "3", "--ell", "1", "--weights", "1,1,-2", "--output", path_text,
    ]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "");
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let payload: BettiPayload = serde_json::from_str(&written).unwrap();
    assert_eq!(payload.betti, vec![0, 1, 1]);
}

#[test]
fn vectors_can_be_read_from_files() {
    let path = std::env::temp_dir().join(format!(
        "discriminantal-cli-weights-{}.txt",
        std::process::id()
    ));
    std::fs::write(&path, "1, 1, -2\n").unwrap();
    let out = cli(&[
        "betti", "--n", "3", "--ell", "1", "--weights-file", path.to_str().unwrap(),
    ]);
    std::fs::remove_file(&path).ok();
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let payload: BettiPayload = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(payload.betti, vec![0, 1, 1]);

    let out = cli(&[
        "betti", "--n", "3", "--ell", "1", "--weights-file", "/nonexistent/weights.txt",
    ]);
    assert_eq!(out.code, 2);
}
