//! End-to-end tests of the `t2ieval` binary.

mod common;

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;
use t2ieval::io::{write_tensor, Tensor, TensorData};

use common::{fixture, run, stable_report};

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fx(rel: &str) -> String {
    fixture(rel).to_str().unwrap().to_string()
}

fn report(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn fails_with(args: &[&str], code: i32, class: &str) {
    let out = run(args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {stderr}");
    assert!(
        stderr.contains(class),
        "{args:?}: expected {class} in {stderr}"
    );
}

fn keys(v: &Value) -> Vec<&str> {
    v.as_object().unwrap().keys().map(String::as_str).collect()
}

fn write_gaussian(
    dir: &Path,
    name: &str,
    rows: usize,
    dim: usize,
    shift: f32,
    seed: u64,
) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * dim)
        .map(|_| rng.sample::<f32, _>(StandardNormal) + shift)
        .collect();
    let p = dir.join(name);
    write_tensor(
        &p,
        &Tensor::new(vec![rows as u64, dim as u64], TensorData::F32(data)).unwrap(),
    )
    .unwrap();
    path(&p).to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["cmd", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_64() {
    let a = fx("stats/diag_a.stats");
    for args in [
        vec!["cmd", "--fake", &a, "--real", &a],
        vec!["frobnicate"],
        vec!["fid", "--fake", &a, "--real", &a, "--bogus"],
        vec!["--threads", "0", "fid", "--fake", &a, "--real", &a],
        vec!["retrieval", "--bundle", "x", "--level", "paragraph"],
        vec!["stats", "--embeddings", "x.grb"],
    ] {
        assert_eq!(run(&args).status.code(), Some(64), "{args:?}");
    }
}

#[test]
fn data_errors_exit_2_with_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.stats");
    fails_with(
        &[
            "stats",
            "--embeddings",
            &fx("tensors/rank3.grb"),
            "--out",
            path(&out),
        ],
        2,
        "ShapeMismatch",
    );
    fails_with(
        &[
            "stats",
            "--embeddings",
            &fx("tensors/single.grb"),
            "--out",
            path(&out),
        ],
        2,
        "ShapeMismatch",
    );
    fails_with(
        &[
            "stats",
            "--embeddings",
            &fx("tensors/bad_magic.grb"),
            "--out",
            path(&out),
        ],
        2,
        "BadMagic",
    );
    fails_with(
        &[
            "fid",
            "--fake",
            &fx("tensors/nope.grb"),
            "--real",
            &fx("stats/diag_a.stats"),
        ],
        2,
        "MissingFile",
    );
    fails_with(
        &[
            "fid",
            "--normalize",
            "--fake",
            &fx("stats/diag_a.stats"),
            "--real",
            &fx("stats/diag_b.stats"),
        ],
        2,
        "InvalidParameter",
    );
    fails_with(
        &["retrieval", "--bundle", &fx("bundles/bad_offsets")],
        2,
        "OffsetsInvalid",
    );
    fails_with(
        &["retrieval", "--bundle", &fx("bundles/manifest_mismatch")],
        2,
        "ManifestMismatch",
    );
    assert!(!out.exists());
}

#[test]
fn word_level_needs_regions() {
    let bundle = fx("bundles/sentence_only_m2");
    fails_with(
        &["retrieval", "--bundle", &bundle, "--level", "word"],
        2,
        "MissingFile",
    );
    fails_with(&["itm-loss", "--bundle", &bundle], 2, "MissingFile");
    // Sentence level works on the same bundle.
    report(&["retrieval", "--bundle", &bundle]);
}

#[test]
fn fid_on_diagonal_fixtures() {
    let r = report(&[
        "fid",
        "--fake",
        &fx("stats/diag_a.stats"),
        "--real",
        &fx("stats/diag_b.stats"),
    ]);
    assert_eq!(r["values"]["dis_fr"], 7.0);
    assert_eq!(r["counts"]["dim"], 2);
    assert_eq!(r["regularized"]["dis_fr"], false);
}

#[test]
fn stats_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let emb = write_gaussian(dir.path(), "e.grb", 5000, 6, 0.0, 1);
    let mut seen = Vec::new();
    for (i, threads) in ["1", "3", "8"].iter().enumerate() {
        let out = dir.path().join(format!("{i}.stats"));
        let r = report(&[
            "--threads",
            threads,
            "stats",
            "--embeddings",
            &emb,
            "--out",
            path(&out),
        ]);
        assert_eq!(r["counts"]["n"], 5000);
        seen.push(fs::read(&out).unwrap());
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn cached_stats_match_raw_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let raw = [
        write_gaussian(dir.path(), "f.grb", 3000, 5, 0.0, 2),
        write_gaussian(dir.path(), "r.grb", 2500, 5, 0.7, 3),
        write_gaussian(dir.path(), "l.grb", 2000, 5, 0.3, 4),
    ];
    let cached: Vec<String> = raw
        .iter()
        .map(|g| {
            let out = g.replace(".grb", ".stats");
            report(&["stats", "--embeddings", g, "--out", &out]);
            out
        })
        .collect();
    let cmd = |p: &[String]| {
        report(&[
            "cmd",
            "--precise",
            "--fake",
            &p[0],
            "--real",
            &p[1],
            "--text",
            &p[2],
        ])
    };
    let (a, b) = (cmd(&raw), cmd(&cached));
    for key in ["cmd", "itdis", "dis_fr", "dis_fl", "dis_rl"] {
        let (x, y) = (
            a["values"][key].as_f64().unwrap(),
            b["values"][key].as_f64().unwrap(),
        );
        assert!(
            (x - y).abs() <= 1e-10 * x.abs().max(y.abs()),
            "{key}: {x} vs {y}"
        );
    }
    assert_eq!(a["counts"], b["counts"]);
}

#[test]
fn report_schema() {
    let bundle = fx("bundles/pair_m2");
    let a = fx("stats/diag_a.stats");
    let b = fx("stats/diag_b.stats");
    let top = [
        "command",
        "counts",
        "duration_ms",
        "hyperparameters",
        "inputs",
        "precise",
        "regularized",
        "schema_version",
        "timestamp_unix",
        "values",
    ];
    let cases: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            vec!["cmd", "--fake", &a, "--real", &b, "--text", &b],
            vec!["cmd", "dis_fl", "dis_fr", "dis_rl", "itdis"],
        ),
        (
            vec!["itdis", "--fake", &a, "--real", &b, "--text", &b],
            vec!["itdis"],
        ),
        (vec!["fid", "--fake", &a, "--real", &b], vec!["dis_fr"]),
        (
            vec!["retrieval", "--bundle", &bundle],
            vec!["r10_i2t", "r10_t2i", "r1_i2t", "r1_t2i", "r5_i2t", "r5_t2i"],
        ),
        (
            vec!["itm-loss", "--bundle", &bundle],
            vec!["l1_s", "l1_w", "l2_s", "l2_w", "total"],
        ),
    ];
    for (args, values) in cases {
        let r = report(&args);
        assert_eq!(keys(&r), top, "{args:?}");
        assert_eq!(r["schema_version"], 1);
        assert_eq!(r["command"], args[0]);
        assert_eq!(keys(&r["values"]), values, "{args:?}");
        assert!(r["values"]
            .as_object()
            .unwrap()
            .values()
            .all(|v| v.as_f64().unwrap().is_finite()));
    }
}

#[test]
fn defaults_are_echoed() {
    let r = report(&["itm-loss", "--bundle", &fx("bundles/pair_m2")]);
    let h = &r["hyperparameters"];
    assert_eq!(h["gamma"], 10.0);
    assert_eq!(h["lambda1"], 4.0);
    assert_eq!(h["lambda2"], 1.0);
    assert_eq!(h["gamma1"], 4.0);
    assert_eq!(h["gamma2"], 5.0);
    assert_eq!(h["normalize_attention"], false);
    assert_eq!(r["counts"]["m"], 2);
    assert_eq!(r["counts"]["r"], 3);
    assert_eq!(r["counts"]["n_total"], 5);
    assert_eq!(r["counts"]["max_words"], 3);
    let v = &r["values"];
    let total = 4.0 * (v["l1_s"].as_f64().unwrap() + v["l2_s"].as_f64().unwrap())
        + v["l1_w"].as_f64().unwrap()
        + v["l2_w"].as_f64().unwrap();
    assert!((total - v["total"].as_f64().unwrap()).abs() < 1e-5);
}

#[test]
fn single_pair_losses_are_zero() {
    let r = report(&["itm-loss", "--bundle", &fx("bundles/single_m1")]);
    for key in ["l1_s", "l2_s", "l1_w", "l2_w", "total"] {
        assert_eq!(r["values"][key], 0.0, "{key}");
    }
}

#[test]
fn planted_retrieval() {
    let r = report(&["retrieval", "--bundle", &fx("bundles/planted_rank3_m10")]);
    assert_eq!(r["values"]["r1_i2t"], 0.0);
    assert_eq!(r["values"]["r5_i2t"], 100.0);
    assert_eq!(r["values"]["r10_t2i"], 100.0);
    assert_eq!(r["hyperparameters"]["level"], "sentence");
}

#[test]
fn display_rounding_and_precise_mode() {
    let bundle = fx("bundles/random_m3");
    let rounded = report(&["itm-loss", "--bundle", &bundle]);
    let precise = report(&["itm-loss", "--precise", "--bundle", &bundle]);
    assert_eq!(precise["precise"], true);
    for (k, v) in rounded["values"].as_object().unwrap() {
        let (r, p) = (v.as_f64().unwrap(), precise["values"][k].as_f64().unwrap());
        assert_eq!(r, (p * 1e6).round() / 1e6, "{k}");
    }
}

#[test]
fn out_flag_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let r = run(&[
        "fid",
        "--out",
        path(&out),
        "--fake",
        &fx("stats/diag_a.stats"),
        "--real",
        &fx("stats/diag_b.stats"),
    ]);
    assert_eq!(r.status.code(), Some(0));
    assert!(r.stdout.is_empty());
    let v: Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["values"]["dis_fr"], 7.0);
}

#[test]
fn threads_env_var_is_a_fallback() {
    let args = ["retrieval", "--precise", "--level", "word", "--bundle"];
    let bundle = fx("bundles/random_m3");
    let via_env = common::bin()
        .env("T2IEVAL_THREADS", "2")
        .args(args)
        .arg(&bundle)
        .output()
        .unwrap();
    assert_eq!(via_env.status.code(), Some(0));
    let bad_env = common::bin()
        .env("T2IEVAL_THREADS", "zero")
        .args(args)
        .arg(&bundle)
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(64));
    let plain = run(&[&args[..], &[bundle.as_str()]].concat());
    assert_eq!(stable_report(&via_env.stdout), stable_report(&plain.stdout));
}
