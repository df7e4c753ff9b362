//! End-to-end tests of the command-line front end, driven in-process
//! through `cli::run` with the documented exit-code contract.

use std::fs;
use std::path::PathBuf;

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hcsk-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["hcsk".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    hcsk::cli::run(argv)
}

#[test]
fn solve_periodic_zero_higgs() {
    let dir = workdir("solve-zero");
    let cfg = dir.join("solve.toml");
    fs::write(
        &cfg,
        "[run]\ngrid = 32\n\n[xi]\nsource = \"zero\"\n",
    )
    .unwrap();
    let out = dir.join("out");
    let code = run(&[
        "solve-periodic",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["phi_sup"].as_f64().unwrap() <= 1e-10);
    assert!(report["residual_sup"].as_f64().unwrap() <= 1e-10);
    assert!(out.join("u_phi.hcsk").exists());
    assert!(out.join("log.jsonl").exists());
}

#[test]
fn solve_periodic_low_rank_matches_oracle() {
    let dir = workdir("solve-lowrank");
    let cfg = dir.join("solve.toml");
    fs::write(
        &cfg,
        r#"
[run]
grid = 64

[xi]
source = "low-rank"

[xi.low_rank]
c = [0.2, 0.0]
kind = "sin"
amplitude = 0.1
"#,
    )
    .unwrap();
    let out = dir.join("out");
    let code = run(&[
        "solve-periodic",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["residual_sup"].as_f64().unwrap() <= 1e-8);

    // The stored potential reproduces the oracle's second derivative.
    let bytes = fs::read(out.join("u_phi.hcsk")).unwrap();
    let phi = hcsk::torusfield::read_scalar(&mut bytes.as_slice()).unwrap();
    let u = hcsk::torusfield::SymplecticPotential::new(phi);
    let g = hcsk::torusfield::hessian(&u).unwrap();

    let higgs = hcsk::oracle1d::LowRankHiggs::second_type_from_fn(
        num_complex::Complex64::new(0.2, 0.0),
        64,
        |y| num_complex::Complex64::new(0.1 * (hcsk::torusfield::TAU * y).sin(), 0.0),
    );
    let oracle = hcsk::oracle1d::solve_translation_invariant(&higgs).unwrap();
    let mut diff = 0.0_f64;
    for idx in 0..g.grid.nodes() {
        let i = idx / g.grid.n_axis();
        diff = diff.max((g.a11[idx] - 1.0 - oracle.fpp[i]).abs());
    }
    assert!(diff <= 1e-5, "f'' differs from the oracle by {diff}");
}

#[test]
fn solve_periodic_inadmissible_exits_2() {
    let dir = workdir("solve-inadmissible");
    let cfg = dir.join("solve.toml");
    // Mode table with a constant coefficient too large to be admissible.
    let table = dir.join("modes.csv");
    fs::write(&table, "0,0,1.2,0,0,0,1.1,0\n").unwrap();
    fs::write(
        &cfg,
        format!(
            "[run]\ngrid = 32\n\n[xi]\nsource = \"modes\"\npath = \"{}\"\n",
            table.display()
        ),
    )
    .unwrap();
    let code = run(&[
        "solve-periodic",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn solve_periodic_t_tensor_source() {
    let dir = workdir("solve-ttensor");
    let cfg = dir.join("solve.toml");
    fs::write(
        &cfg,
        r#"
[run]
grid = 32

[xi]
source = "t-tensor"

[xi.t_tensor]
t112 = [{ k1 = 1, k2 = 0, re = 0.002, im = 0.0 }]
t212 = [{ k1 = 0, k2 = 1, re = 0.0, im = 0.001 }]
"#,
    )
    .unwrap();
    let out = dir.join("out");
    let code = run(&[
        "solve-periodic",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    // T-tensor fields solve the complex moment map: no warning recorded.
    assert!(report["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn oracle_1d_flat_and_constraints() {
    let dir = workdir("oracle");
    let cfg = dir.join("oracle.toml");
    fs::write(
        &cfg,
        "[oracle]\nc = [0.2, 0.0]\nkind = \"zero\"\nsamples = 128\n",
    )
    .unwrap();
    let out = dir.join("out");
    let code = run(&[
        "oracle-1d",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("oracle.csv")).unwrap();
    let mut k_col = Vec::new();
    for line in csv.lines().skip(2) {
        let cols: Vec<&str> = line.split(',').collect();
        k_col.push(cols[3].parse::<f64>().unwrap());
    }
    assert_eq!(k_col.len(), 128);
    for k in &k_col {
        assert!((k - (-0.979795897113271)).abs() < 1e-9, "k = {k}");
    }

    // First family: f'' identically zero.
    fs::write(
        &cfg,
        "[oracle]\nfamily = \"first-type\"\namplitude = 0.3\nsamples = 64\n",
    )
    .unwrap();
    assert_eq!(
        run(&["oracle-1d", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        0
    );
    let csv = fs::read_to_string(out.join("oracle.csv")).unwrap();
    for line in csv.lines().skip(2) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0);
    }

    // |c| = 0.35 violates the existence bound: exit 4.
    fs::write(&cfg, "[oracle]\nc = [0.35, 0.0]\nkind = \"zero\"\nsamples = 64\n").unwrap();
    assert_eq!(
        run(&["oracle-1d", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        4
    );
}

#[test]
fn oracle_output_is_deterministic() {
    let dir = workdir("oracle-det");
    let cfg = dir.join("oracle.toml");
    fs::write(
        &cfg,
        "[oracle]\nc = [0.2, 0.0]\nkind = \"sin\"\namplitude = 0.1\nsamples = 256\n",
    )
    .unwrap();
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    for out in [&out1, &out2] {
        assert_eq!(
            run(&[
                "oracle-1d",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "7",
            ]),
            0
        );
    }
    let a = fs::read(out1.join("oracle.csv")).unwrap();
    let b = fs::read(out2.join("oracle.csv")).unwrap();
    assert_eq!(a, b, "identical config and seed must give bit-identical CSV");
}

#[test]
fn verify_passes_default_seed() {
    let dir = workdir("verify");
    let code = run(&[
        "verify",
        "--out",
        dir.join("out").to_str().unwrap(),
        "--grid",
        "16",
        "--seed",
        "0",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.join("out").join("verify.txt")).unwrap();
    assert_eq!(text.matches("PASS").count(), 4);
}

#[test]
fn toric_square_and_non_delzant() {
    let dir = workdir("toric");
    let poly = dir.join("square.poly");
    fs::write(&poly, "0 0\n1 0\n1 1\n0 1\n").unwrap();
    let probes = dir.join("probes.txt");
    fs::write(
        &probes,
        "affine 1 0 0\nquadratic 1 0 0 -1 0 0.25\nplconvex 1,-1,0; -1,1,0\n",
    )
    .unwrap();
    let cfg = dir.join("toric.toml");
    fs::write(
        &cfg,
        format!(
            "[toric]\npolygon = \"{}\"\nprobes = \"{}\"\n\n[toric.boundary_check]\nxi = \"smooth\"\nentries = [0.5, 0.2, -0.1, 0.3, 0.7, 0.0]\n",
            poly.display(),
            probes.display()
        ),
    )
    .unwrap();
    let out = dir.join("out");
    let code = run(&[
        "toric",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("lc_table.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    // Normalized affine probe integrates to zero everywhere.
    assert!(rows[0][0].abs() < 1e-12);
    // L_C((y1 - 1/2)^2) = 1/3.
    assert!((rows[1][0] - 1.0 / 3.0).abs() < 1e-10);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["boundary_check"]["pass"].as_bool().unwrap());

    // Non-Delzant polygon: exit 4.
    fs::write(&poly, "0 0\n1 0\n0 2\n").unwrap();
    let code = run(&[
        "toric",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
}

#[test]
fn bad_config_exits_4() {
    let dir = workdir("badcfg");
    let cfg = dir.join("solve.toml");
    // Unknown keys are rejected.
    fs::write(&cfg, "[xi]\nsource = \"zero\"\nbogus = 1\n").unwrap();
    assert_eq!(
        run(&[
            "solve-periodic",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ]),
        4
    );
    // Missing config.
    assert_eq!(run(&["solve-periodic", "--out", dir.join("out").to_str().unwrap()]), 4);
}
