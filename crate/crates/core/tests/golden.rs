//! Checked-in fixtures: digests, loading and known results.

mod common;

use std::fs;

use sha2::{Digest, Sha256};
use t2ieval::io::{self, load_bundle, read_stats, read_tensor, TensorData};
use t2ieval::itm::{build_similarity_matrix, contrastive_loss};
use t2ieval::{frechet_distance, rank_retrieval, Error, MatchLevel, WordRegionParams};

use common::fixture;

#[test]
fn fixture_digests_match() {
    let listing = fs::read_to_string(fixture("SHA256SUMS")).unwrap();
    let mut checked = 0;
    for line in listing.lines() {
        let (digest, rel) = line.split_once("  ").expect("`<digest>  <path>` lines");
        let bytes = fs::read(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
        let actual: String = Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        assert_eq!(
            actual, digest,
            "{rel} changed; rerun the make_fixtures example"
        );
        checked += 1;
    }
    assert!(checked > 40);
}

#[test]
fn valid_bundles_load() {
    for (name, m, word_level) in [
        ("pair_m2", 2, true),
        ("sentence_only_m2", 2, false),
        ("random_m3", 3, true),
        ("identity_m10", 10, true),
        ("planted_rank3_m10", 10, false),
        ("single_m1", 1, true),
        ("equal_m2", 2, true),
    ] {
        let b = load_bundle(fixture(&format!("bundles/{name}"))).unwrap();
        assert_eq!(b.captions.m(), m, "{name}");
        assert_eq!(b.require_word_level().is_ok(), word_level, "{name}");
        assert_eq!(b.manifest.encoder, "synthetic-fixture");
    }
}

#[test]
fn sentence_only_bundle_lacks_regions() {
    let b = load_bundle(fixture("bundles/sentence_only_m2")).unwrap();
    assert!(
        matches!(b.require_word_level(), Err(Error::MissingFile(p)) if p.ends_with("regions.grb"))
    );
}

#[test]
fn single_pair_losses_vanish() {
    let b = load_bundle(fixture("bundles/single_m1")).unwrap();
    for level in [MatchLevel::Sentence, MatchLevel::Word] {
        let s = build_similarity_matrix(&b.captions, level, &WordRegionParams::default()).unwrap();
        assert_eq!(contrastive_loss(&s, 10.0).unwrap(), (0.0, 0.0));
        let r = rank_retrieval(&s, &[1]).unwrap();
        assert_eq!(r.recalls[0].image_to_text, 100.0);
    }
}

#[test]
fn equal_scores_rank_by_index() {
    let b = load_bundle(fixture("bundles/equal_m2")).unwrap();
    let s = build_similarity_matrix(
        &b.captions,
        MatchLevel::Sentence,
        &WordRegionParams::default(),
    )
    .unwrap();
    let r = rank_retrieval(&s, &[1, 5]).unwrap();
    // Pair 0 wins its tie, pair 1 loses it.
    assert_eq!(r.at(1).unwrap().image_to_text, 50.0);
    assert_eq!(r.at(5).unwrap().text_to_image, 100.0);
}

#[test]
fn tensor_fixtures() {
    let single = read_tensor(fixture("tensors/single.grb")).unwrap();
    assert_eq!(single.dims(), &[1]);
    assert_eq!(
        fs::metadata(fixture("tensors/single.grb")).unwrap().len(),
        22
    );
    let rank3 = read_tensor(fixture("tensors/rank3.grb")).unwrap();
    assert!(matches!(rank3.data(), TensorData::F32(v) if v.len() == 8));
    assert!(matches!(
        rank3.to_embedding_matrix(),
        Err(Error::ShapeMismatch(_))
    ));
    let sample = read_tensor(fixture("tensors/sample_1d.grb")).unwrap();
    let stats = t2ieval::estimate_stats(&sample.to_embedding_matrix().unwrap()).unwrap();
    assert_eq!((stats.mean()[0], stats.cov()[(0, 0)]), (1.0, 2.0));
}

#[test]
fn diagonal_stats_fixtures() {
    let a = read_stats(fixture("stats/diag_a.stats")).unwrap();
    let b = read_stats(fixture("stats/diag_b.stats")).unwrap();
    assert_eq!(a.n(), 10);
    assert!((frechet_distance(&a, &b).unwrap() - 7.0).abs() < 1e-12);
    assert!(matches!(
        io::load_features(fixture("stats/diag_a.stats")).unwrap(),
        io::FeatureSource::Stats(_)
    ));
}
