use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treealgebra::io::{self, export_flat_table, Forest};
use treealgebra::oracle::{pointwise_equivalence, random_schema, random_tree, FuzzConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treealgebra"))
        .args(args)
        .env_remove("TREEALG_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_text_matches_golden() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/usage.txt");
    let text = treealgebra::cli::usage_text();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &text).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).expect("golden usage file present");
    assert_eq!(text, expected, "rerun with UPDATE_GOLDEN=1 after intended help changes");
}

#[test]
fn dist_of_worked_stumps() {
    let o = run(&[
        "dist",
        "--a",
        p(&fixture("stump4.json")),
        "--b",
        p(&fixture("stump6.json")),
        "--measure",
        "uniform",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0.447213595\n");
}

#[test]
fn degenerate_correlation_exits_two() {
    let o = run(&[
        "corr",
        "--a",
        p(&fixture("stump4.json")),
        "--b",
        p(&fixture("const7.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("code=DEGENERATE_CORRELATION msg=\""), "{}", err);
    assert!(err.contains("degenerate correlation: zero variance in b"));
}

#[test]
fn combine_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = run(&[
        "combine",
        "--forest",
        p(&fixture("three_stumps.json")),
        "--weights",
        p(&fixture("w.csv")),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = run(&["validate", p(&out)]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
}

#[test]
fn budget_exceeded_exits_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = run(&[
        "combine",
        "--forest",
        p(&fixture("three_stumps.json")),
        "--out",
        p(&out),
        "--max-nodes",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("code=BUDGET_EXCEEDED"));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["frobnicate"],
        vec!["dist", "--bogus"],
        vec!["dist", "--a", "x.json"],
        vec!["combine", "--forest", "f.json", "--out", "o.json", "--max-nodes", "0"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{:?}", args);
        assert!(stderr(&o).starts_with("code=USAGE msg="), "{:?}", args);
    }
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("dist-matrix"));
}

#[test]
fn missing_and_malformed_inputs_exit_one() {
    let o = run(&["validate", "/nonexistent/tree.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("code="));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema\": [1,\n").unwrap();
    let o = run(&["validate", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn empirical_measure_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    std::fs::write(&data, "5,1\n5,9\n3,3\n8,8\n").unwrap();
    // Points at x1 = 5 separate the stumps; half of the mass.
    let o = run(&[
        "dist",
        "--a",
        p(&fixture("stump4.json")),
        "--b",
        p(&fixture("stump6.json")),
        "--measure",
        "empirical",
        "--data",
        p(&data),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0.707106781\n");

    let o = run(&[
        "dist",
        "--a",
        p(&fixture("stump4.json")),
        "--b",
        p(&fixture("stump6.json")),
        "--measure",
        "empirical",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dist_matrix_and_mds_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("d.csv");
    let coords = dir.path().join("m.csv");
    let svg = dir.path().join("m.svg");
    let o = run(&[
        "dist-matrix",
        "--forest",
        p(&fixture("three_stumps.json")),
        "--out",
        p(&matrix),
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = io::parse_matrix(&std::fs::read_to_string(&matrix).unwrap()).unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d[0][1], 0.2f64.sqrt());
    let o = run(&[
        "mds",
        "--matrix",
        p(&matrix),
        "--dims",
        "2",
        "--out",
        p(&coords),
        "--svg",
        p(&svg),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("stress="));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn oracle_check_is_reproducible() {
    let forest = fixture("three_stumps.json");
    let args = [
        "oracle-check",
        "--forest",
        p(&forest),
        "--samples",
        "2000",
        "--seed",
        "7",
    ];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("pair 0 1 dist2 exact=0.200000000 grid=0.200000000"));

    let with_env = Command::new(env!("CARGO_BIN_EXE_treealgebra"))
        .args(&args[..5])
        .env("TREEALG_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(with_env.stdout, a.stdout);
}

#[test]
fn forest_dist_prints_value() {
    let o = run(&[
        "forest-dist",
        "--f",
        p(&fixture("three_stumps.json")),
        "--g",
        p(&fixture("three_stumps.json")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0.000000000\n");
}

#[test]
fn import_flat_table_of_fuzzed_forest() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let schema = random_schema(&mut rng, 3, 2, None);
    let config = FuzzConfig {
        max_nodes: 31,
        max_depth: 4,
        ..FuzzConfig::default()
    };
    let trees: Vec<_> = (0..50)
        .map(|_| random_tree(&schema, &config, &mut rng).unwrap())
        .collect();
    let forest = Forest::new(schema.clone(), trees.clone());

    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let schema_file = dir.path().join("s.json");
    let out = dir.path().join("f.json");
    let matrix = dir.path().join("d.csv");
    std::fs::write(&table, export_flat_table(&trees).unwrap()).unwrap();
    io::save_forest(&schema_file, &forest).unwrap();

    let o = run(&[
        "import",
        "--dialect",
        "flat-table",
        "--table",
        p(&table),
        "--schema",
        p(&schema_file),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let imported = io::load_forest(&out).unwrap();
    assert_eq!(imported.trees.len(), 50);
    for (a, b) in imported.trees.iter().zip(&trees) {
        assert!(pointwise_equivalence(a, &[b], 500, 3).unwrap().is_pass());
    }
    let o = run(&["dist-matrix", "--forest", p(&out), "--out", p(&matrix)]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn import_reports_orphans() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    std::fs::write(
        &table,
        "tree_id,node_id,parent_id,is_left_child,split_feature,split_threshold_or_levels,leaf_value\n\
         0,0,,,x1,4,\n0,1,0,true,,,0\n0,2,0,false,,,1\n0,3,9,true,,,1\n",
    )
    .unwrap();
    let out = dir.path().join("f.json");
    let o = run(&[
        "import",
        "--table",
        p(&table),
        "--schema",
        p(&fixture("stump4.json")),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("tree_id 0") && err.contains("node_id 3"), "{}", err);
    assert!(!out.exists());
}
