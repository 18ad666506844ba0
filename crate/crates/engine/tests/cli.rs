//! End-to-end CLI coverage: exit codes, emitted files, round-tripping
//! the bundled fixture through its own file formats, and rerun
//! determinism at the byte level.

use std::fs;
use std::path::Path;

use dmo_engine::io::cli::{run_cli, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_SOLVER};

fn dmo(args: &[&str]) -> i32 {
    let argv = std::iter::once("dmo").chain(args.iter().copied());
    run_cli(argv)
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(dmo(&["--help"]), EXIT_OK);
    assert_eq!(dmo(&["--version"]), EXIT_OK);
    assert_eq!(dmo(&["solve", "--help"]), EXIT_OK);
}

#[test]
fn unknown_arguments_are_input_errors() {
    assert_eq!(dmo(&["solve", "--frobnicate"]), EXIT_INPUT);
    assert_eq!(dmo(&["nonsense"]), EXIT_INPUT);
}

#[test]
fn fixture_files_round_trip_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert_eq!(dmo(&["fixture", "--out", fx.to_str().unwrap()]), EXIT_OK);
    for f in ["network.toml", "bids.toml", "fixed.csv", "tlmp.csv", "assigned.csv"] {
        assert!(fx.join(f).exists(), "missing {f}");
    }

    let from_files = dir.path().join("from_files");
    assert_eq!(
        dmo(&[
            "solve",
            "--network",
            fx.join("network.toml").to_str().unwrap(),
            "--bids",
            fx.join("bids.toml").to_str().unwrap(),
            "--fixed",
            fx.join("fixed.csv").to_str().unwrap(),
            "--tlmp",
            fx.join("tlmp.csv").to_str().unwrap(),
            "--assigned",
            fx.join("assigned.csv").to_str().unwrap(),
            "--out",
            from_files.to_str().unwrap(),
        ]),
        EXIT_OK
    );

    let builtin = dir.path().join("builtin");
    assert_eq!(dmo(&["solve", "--out", builtin.to_str().unwrap()]), EXIT_OK);

    for f in ["clearing.csv", "flows.csv", "settlement.csv"] {
        assert_eq!(
            read(&from_files.join(f)),
            read(&builtin.join(f)),
            "{f} differs between the bundled fixture and its file form"
        );
    }
}

#[test]
fn solve_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(dmo(&["solve", "--mu", "10", "--out", a.to_str().unwrap()]), EXIT_OK);
    assert_eq!(dmo(&["solve", "--mu", "10", "--out", b.to_str().unwrap()]), EXIT_OK);
    for f in ["clearing.csv", "flows.csv", "settlement.csv", "solution.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} not deterministic");
    }
}

#[test]
fn validate_accepts_the_fixture_network_and_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert_eq!(dmo(&["fixture", "--out", fx.to_str().unwrap()]), EXIT_OK);
    assert_eq!(
        dmo(&["validate", "--network", fx.join("network.toml").to_str().unwrap()]),
        EXIT_OK
    );

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "interface_bus = 0\n[[line]]\nid = 0\nfrom = 0\nto = 0\ncapacity = 5.0\n")
        .unwrap();
    assert_eq!(dmo(&["validate", "--network", bad.to_str().unwrap()]), EXIT_INPUT);
    assert_eq!(
        dmo(&["validate", "--network", dir.path().join("absent.toml").to_str().unwrap()]),
        EXIT_INPUT
    );
}

#[test]
fn short_tlmp_series_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert_eq!(dmo(&["fixture", "--out", fx.to_str().unwrap()]), EXIT_OK);
    // 23 rows instead of 24.
    let tlmp = read(&fx.join("tlmp.csv"));
    let mut lines: Vec<&str> = tlmp.lines().collect();
    lines.pop();
    let short = dir.path().join("short.csv");
    fs::write(&short, lines.join("\n")).unwrap();
    let code = dmo(&[
        "solve",
        "--network",
        fx.join("network.toml").to_str().unwrap(),
        "--bids",
        fx.join("bids.toml").to_str().unwrap(),
        "--fixed",
        fx.join("fixed.csv").to_str().unwrap(),
        "--tlmp",
        short.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn non_monotone_bid_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert_eq!(dmo(&["fixture", "--out", fx.to_str().unwrap()]), EXIT_OK);
    let bad_bids = dir.path().join("bids.toml");
    fs::write(
        &bad_bids,
        "[[customer]]\nbus = 1\nsegments = [[10.0, 2.0], [20.0, 2.0]]\n",
    )
    .unwrap();
    let code = dmo(&[
        "solve",
        "--network",
        fx.join("network.toml").to_str().unwrap(),
        "--bids",
        bad_bids.to_str().unwrap(),
        "--fixed",
        fx.join("fixed.csv").to_str().unwrap(),
        "--tlmp",
        fx.join("tlmp.csv").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn infeasible_fixture_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    // 1 MW trunk capacity cannot carry the downstream fixed load.
    let cfg = dir.path().join("tight.toml");
    fs::write(&cfg, "cap_3_8 = 1.0\n").unwrap();
    let code = dmo(&[
        "solve",
        "--fixture-config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_INFEASIBLE);
}

#[test]
fn case_sweeps_write_complete_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep3");
    assert_eq!(dmo(&["sweep", "--case", "3", "--out", out.to_str().unwrap()]), EXIT_OK);
    let sweep = read(&out.join("sweep.csv"));
    let values: std::collections::BTreeSet<&str> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(values.len(), 9, "expected 9 sweep values, got {values:?}");
    // 9 values x 13 buses plus the header.
    assert_eq!(sweep.lines().count(), 1 + 9 * 13);
    let deficit = read(&out.join("deficit.csv"));
    assert_eq!(deficit.lines().count(), 1 + 9);
}

#[test]
fn explicit_param_sweep_works_and_bad_values_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert_eq!(
        dmo(&[
            "sweep", "--param", "scale", "--values", "0.5,1.0,2.0",
            "--out", out.to_str().unwrap(),
        ]),
        EXIT_OK
    );
    assert_eq!(read(&out.join("deficit.csv")).lines().count(), 1 + 3);

    assert_eq!(
        dmo(&["sweep", "--param", "scale", "--values", "2.0,1.0"]),
        EXIT_INPUT
    );
    assert_eq!(dmo(&["sweep", "--param", "scale", "--values", "x,y"]), EXIT_INPUT);
    assert_eq!(dmo(&["sweep"]), EXIT_INPUT);
}

#[test]
fn kkt_reverifies_a_solution_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(dmo(&["solve", "--mu", "5", "--out", out.to_str().unwrap()]), EXIT_OK);
    let dump = out.join("solution.json");
    assert_eq!(dmo(&["kkt", "--solution", dump.to_str().unwrap()]), EXIT_OK);
    // An impossible tolerance must flip the exit code.
    assert_eq!(
        dmo(&["kkt", "--solution", dump.to_str().unwrap(), "--tol", "1e-30"]),
        EXIT_SOLVER
    );
    assert_eq!(
        dmo(&["kkt", "--solution", dir.path().join("nope.json").to_str().unwrap()]),
        EXIT_INPUT
    );
}
