use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use strukt_cli::io::{self, AnyPencil, AnyPoly};
use strukt_core::polycore::{random_structured_with, MatrixPolynomial, StructureKind};
use strukt_core::rng::seeded_rng;
use tempfile::TempDir;

fn strukt(args: &[&str]) -> Output {
    strukt_env(args, &[])
}

fn strukt_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_strukt"));
    cmd.args(args).env_remove("STRUKT_NUM_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_random(
    dir: &Path,
    name: &str,
    kind: StructureKind,
    g: usize,
    n: usize,
    seed: u64,
) -> (PathBuf, MatrixPolynomial<f64>) {
    let p = random_structured_with(n, g, kind, 1.0, &mut seeded_rng(seed, 0)).unwrap();
    let path = dir.join(name);
    io::write_poly(&path, &p).unwrap();
    (path, p)
}

fn read_real(path: &Path) -> MatrixPolynomial<f64> {
    match io::read_poly(path).unwrap() {
        AnyPoly::Real(p) => p,
        AnyPoly::Complex(_) => panic!("expected a real file"),
    }
}

#[test]
fn even_grade_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let (input, _) = write_random(dir.path(), "P.json", StructureKind::Symmetric, 4, 2, 1);
    let out = dir.path().join("L.json");
    let o = strukt(&["linearize", s(&input), "--kind", "symmetric", "--output", s(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("odd grade required"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn missing_and_malformed_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&strukt(&["recover", s(&missing)])), 2);
    assert_eq!(code(&strukt(&["eigs", s(&missing)])), 2);

    let (input, _) = write_random(dir.path(), "P.json", StructureKind::Even, 3, 2, 2);
    let l = dir.path().join("L.json");
    assert_eq!(code(&strukt(&["linearize", s(&input), "--kind", "even", "-o", s(&l)])), 0);
    let side = io::sidecar_path(&l);
    std::fs::write(&side, "{\"k\":1,\"n\":2,\"kind\":\"even\"").unwrap();
    let o = strukt(&["recover", s(&l)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sidecar"), "{}", stderr(&o));
    std::fs::write(&side, "{\"k\":1,\"n\":3,\"kind\":\"even\",\"sign\":-1}").unwrap();
    assert_eq!(code(&strukt(&["recover", s(&l)])), 2);
    std::fs::remove_file(&side).unwrap();
    assert_eq!(code(&strukt(&["recover", s(&l)])), 2);

    assert_eq!(code(&strukt(&["linearize", s(&input), "--kind", "bogus", "-o", s(&l)])), 2);
    assert_eq!(code(&strukt(&["linearize", s(&input), "--kind", "even"])), 2);
    let wrong = (-StructureKind::Even.sigma()).to_string();
    let o = strukt(&["linearize", s(&input), "--kind", "even", "--sigma", &wrong, "-o", s(&l)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn unstructured_input_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (input, _) = write_random(dir.path(), "P.json", StructureKind::Palindromic, 3, 2, 3);
    let out = dir.path().join("L.json");
    let o = strukt(&["linearize", s(&input), "--kind", "skew", "-o", s(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn linearize_recover_round_trip() {
    let dir = TempDir::new().unwrap();
    for (i, kind) in StructureKind::ALL.into_iter().enumerate() {
        for placement in ["tridiagonal", "stacked"] {
            for g in [3, 5] {
                let (input, p) = write_random(dir.path(), "P.json", kind, g, 2, 10 + i as u64);
                let l = dir.path().join("L.json");
                let back = dir.path().join("Q.json");
                let o = strukt(&["linearize", s(&input), "--kind", kind.name(), "--placement", placement, "-o", s(&l)]);
                assert_eq!(code(&o), 0, "{kind} {placement}: {}", stderr(&o));
                assert!(stdout(&o).contains("norm_M="), "{}", stdout(&o));
                let o = strukt(&["recover", s(&l), "-o", s(&back)]);
                assert_eq!(code(&o), 0, "{}", stderr(&o));
                assert!(stdout(&o).contains("sign normalization applied"));
                let q = read_real(&back);
                let err = q.checked_sub(&p).unwrap().frob_norm() / p.frob_norm();
                assert!(err <= 1e-13, "{kind} {placement} g={g}: {err:e}");
            }
        }
    }
}

#[test]
fn recover_writes_to_stdout() {
    let dir = TempDir::new().unwrap();
    let (input, p) = write_random(dir.path(), "P.json", StructureKind::Odd, 3, 1, 4);
    let l = dir.path().join("L.json");
    assert_eq!(code(&strukt(&["linearize", s(&input), "--kind", "odd", "-o", s(&l)])), 0);
    let o = strukt(&["recover", s(&l)]);
    assert_eq!(code(&o), 0);
    let AnyPoly::Real(q) = io::parse_poly(&stdout(&o)).unwrap() else { panic!() };
    assert!(q.checked_sub(&p).unwrap().frob_norm() <= 1e-13 * p.frob_norm());
    assert!(stderr(&o).contains("sign normalization applied"));
}

#[test]
fn perturb_adds_a_structured_perturbation_of_given_norm() {
    let dir = TempDir::new().unwrap();
    let (input, _) = write_random(dir.path(), "P.json", StructureKind::AntiPalindromic, 5, 2, 5);
    let l = dir.path().join("L.json");
    let lp = dir.path().join("Lp.json");
    let lp2 = dir.path().join("Lp2.json");
    assert_eq!(code(&strukt(&["linearize", s(&input), "--kind", "anti-palindromic", "-o", s(&l)])), 0);
    for out in [&lp, &lp2] {
        let o = strukt(&["perturb", s(&l), "--norm", "1e-3", "--seed", "9", "-o", s(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&lp).unwrap(), std::fs::read(&lp2).unwrap());
    let (AnyPencil::Real(a), AnyPencil::Real(b)) = (io::read_pencil(&l).unwrap(), io::read_pencil(&lp).unwrap()) else {
        panic!()
    };
    let d = b.as_polynomial().checked_sub(&a.as_polynomial()).unwrap().frob_norm();
    assert!((d - 1e-3).abs() <= 1e-12, "{d:e}");
    assert_eq!(code(&strukt(&["recover", s(&lp)])), 0);
    let o = strukt(&["perturb", s(&l), "--norm", "1e-3", "--blocks", "33", "-o", s(&lp)]);
    assert_eq!(code(&o), 2);
}

fn small_config(dir: &Path) -> PathBuf {
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"kind":"palindromic","g":5,"n":2,"placement":"stacked","norms":[0.0,1e-9,1e-7],"trials":4,"seed":17}"#,
    )
    .unwrap();
    cfg
}

#[test]
fn certify_is_deterministic_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let a = strukt_env(&["certify", s(&cfg)], &[("STRUKT_NUM_THREADS", "1")]);
    let b = strukt_env(&["certify", s(&cfg)], &[("STRUKT_NUM_THREADS", "4")]);
    let c = strukt(&["certify", s(&cfg)]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let o = strukt(&["certify", s(&cfg), "--seed", "18"]);
    assert_ne!(o.stdout, a.stdout);
}

#[test]
fn certify_csv_schema_and_zero_norm_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("r.csv");
    let o = strukt(&["certify", s(&cfg), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("certified violations 0"), "{}", stdout(&o));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "seed",
            "kind",
            "g",
            "n",
            "k",
            "placement",
            "norm_P",
            "norm_L",
            "norm_M",
            "norm_dL",
            "threshold_ok",
            "norm_X",
            "norm_dR",
            "norm_dP",
            "ratio",
            "C_PL",
            "bound",
            "ratio_le_bound",
            "structure_ok",
            "eig_chordal_max",
            "iters",
            "wall_ms"
        ]
    );
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(&r[col("kind")], "palindromic");
        assert_eq!(&r[col("placement")], "stacked");
        assert_eq!(&r[col("seed")], "17");
        assert_eq!(&r[col("wall_ms")], "0");
        assert_eq!(&r[col("ratio_le_bound")], "true");
        assert_eq!(&r[col("structure_ok")], "true");
        if r[col("norm_dL")].parse::<f64>().unwrap() == 0.0 {
            assert_eq!(r[col("ratio")].parse::<f64>().unwrap(), 0.0);
        }
    }
    assert_eq!(rows.iter().filter(|r| &r[col("norm_dL")] == "0.0").count(), 4);
}

#[test]
fn certify_json_and_config_outputs() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("r.csv");
    let json_path = dir.path().join("r.json");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"kind":"even","g":3,"n":2,"norms":[1e-8],"trials":3,"output":{{"csv":{:?},"json":{:?}}}}}"#,
            s(&csv_path),
            s(&json_path)
        ),
    )
    .unwrap();
    let o = strukt(&["certify", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["kind"], "even");
    assert!(rows[0]["C_PL"].as_f64().unwrap() > 0.0);
    assert_eq!(csv::Reader::from_path(&csv_path).unwrap().records().count(), 3);

    let o = strukt(&["certify", "--kind", "skew", "--grade", "3", "--n", "1", "--norms", "1e-9", "--trials", "2"]);
    assert_eq!(code(&o), 2, "a 1x1 skew-symmetric polynomial is zero");
    let o = strukt(&[
        "certify", "--kind", "skew", "--grade", "3", "--n", "2", "--norms", "1e-9", "--trials", "2", "--format", "json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn certify_input_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let o = strukt_env(&["certify", s(&cfg)], &[("STRUKT_NUM_THREADS", "zero")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("STRUKT_NUM_THREADS"));
    assert_eq!(code(&strukt(&["certify", s(&cfg), "--grade", "4"])), 2);
    assert_eq!(code(&strukt(&["certify", s(&cfg), "--norms", "-1"])), 2);
    assert_eq!(code(&strukt(&["certify", s(&cfg), "--mode", "sloppy"])), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kind":"even","g":3,"n":1,"norms":[1e-9],"trials":2,"extra":true}"#).unwrap();
    assert_eq!(code(&strukt(&["certify", s(&bad)])), 2);
    assert_eq!(code(&strukt(&["certify", s(&dir.path().join("missing.json"))])), 2);
}

#[test]
fn certify_uses_a_polynomial_file() {
    let dir = TempDir::new().unwrap();
    let (input, p) = write_random(dir.path(), "P.json", StructureKind::Symmetric, 3, 3, 6);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"kind":"symmetric","g":5,"n":1,"norms":[1e-9],"trials":2,"polynomial":{:?}}}"#, s(&input)),
    )
    .unwrap();
    let o = strukt(&["certify", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    let rec = rdr.records().next().unwrap().unwrap();
    let get = |name: &str| rec[header.iter().position(|h| h == name).unwrap()].to_string();
    assert_eq!(get("g"), "3");
    assert_eq!(get("n"), "3");
    assert!((get("norm_P").parse::<f64>().unwrap() - p.frob_norm()).abs() <= 1e-15);
}

#[test]
fn default_config_certifies_every_trial() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let o = strukt(&["certify", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 300);
    for r in &rows {
        assert_eq!(&r[col("threshold_ok")], "true");
        assert_eq!(&r[col("ratio_le_bound")], "true");
        assert_eq!(&r[col("structure_ok")], "true");
        assert!(r[col("eig_chordal_max")].parse::<f64>().unwrap() <= 1e-6);
    }
    assert!(stderr(&o).contains("ratio<=bound 300/300"), "{}", stderr(&o));
}

#[test]
fn sigma_min_matches_the_closed_form() {
    let o = strukt(&["sigma-min", "--kmax", "2", "--kinds", "symmetric,even"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "kind,k,n,formula,svd,rel_err,reduced_gap,pass");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..3], ["symmetric", "1", "1"]);
    assert!(first[4].starts_with("1.4142135"), "{}", first[4]);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));

    let o = strukt(&["sigma-min", "--kmax", "2", "--n", "2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(code(&strukt(&["sigma-min", "--kmax", "0"])), 2);
}

#[test]
fn eigs_of_polynomial_and_pencil_agree() {
    let dir = TempDir::new().unwrap();
    let (input, _) = write_random(dir.path(), "P.json", StructureKind::Palindromic, 3, 2, 7);
    let l = dir.path().join("L.json");
    assert_eq!(code(&strukt(&["linearize", s(&input), "--kind", "palindromic", "-o", s(&l)])), 0);
    let a = strukt(&["eigs", s(&input), "--kind", "palindromic"]);
    let b = strukt(&["eigs", s(&l)]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    assert!(stderr(&a).contains("symmetry mismatch"));
    assert!(stderr(&b).contains("palindromic symmetry mismatch"));
    let lambdas = |o: &Output| -> Vec<(f64, f64)> {
        let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
        rdr.records()
            .map(|r| {
                let r = r.unwrap();
                (r[5].parse().unwrap(), r[6].parse().unwrap())
            })
            .collect()
    };
    let (x, y) = (lambdas(&a), lambdas(&b));
    assert_eq!(x.len(), 6);
    assert_eq!(y.len(), 6);
    for (p, q) in x.iter().zip(&y) {
        let d = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
        assert!(d <= 1e-8 * (1.0 + p.0.hypot(p.1)), "{p:?} {q:?}");
    }
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    assert_eq!(code(&strukt(&[])), 2);
    assert_eq!(code(&strukt(&["frobnicate"])), 2);
    assert_eq!(code(&strukt(&["--help"])), 0);
    assert_eq!(code(&strukt(&["certify", "--help"])), 0);
}
