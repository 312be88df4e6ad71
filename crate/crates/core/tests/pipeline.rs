use std::fs;

use tsgeom::cnn::{evaluate, load_checkpoint, save_checkpoint, train, Dataset, ModelSpec, TrainConfig};
use tsgeom::config::parse_config;
use tsgeom::downsample::Method;
use tsgeom::features::{extract, FeatureKind, FeatureParams};
use tsgeom::harness::{build_corpora, run_cell, ExperimentCell};
use tsgeom::ingestion::{load_bonn_dir, segment, ClassMap, SetMap, SetTag};

#[test]
fn bonn_directory_to_labeled_chunks() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("setA");
    fs::create_dir(&a).unwrap();
    let line = |v: i32| format!("{v}\n");
    fs::write(a.join("Z001.txt"), (0..10).map(line).collect::<String>()).unwrap();
    fs::write(dir.path().join("O001.txt"), (0..10).map(|v| line(-v)).collect::<String>()).unwrap();
    fs::write(dir.path().join("custom-7.txt"), "1\n2\n3\n").unwrap();
    fs::write(dir.path().join("N001.txt"), "1\n2\n").unwrap();

    let class_map: ClassMap = [(SetTag::A, 0), (SetTag::B, 1)].into_iter().collect();
    let set_map = SetMap::new(vec![("custom".into(), SetTag::B)]);
    let recordings = load_bonn_dir(dir.path(), &class_map, &set_map).unwrap();
    assert_eq!(recordings.len(), 3);
    let chunks: Vec<_> = recordings.iter().flat_map(|r| segment(r, 4).unwrap()).collect();
    // 10 → 2 chunks, 10 → 2 chunks, 3 → none.
    assert_eq!(chunks.len(), 4);
    assert!(chunks.iter().all(|c| c.series.len() == 4));
    assert_eq!(chunks.iter().filter(|c| c.label == 1).count(), 2);
}

#[test]
fn geometric_features_have_model_shapes() {
    let values: Vec<f64> = (0..80).map(|t| (t as f64 * 0.4).sin()).collect();
    let params = FeatureParams::default();
    let betti = extract(&values, FeatureKind::Betti, &params).unwrap();
    let spectra = extract(&values, FeatureKind::Spectra, &params).unwrap();
    assert_eq!((betti.len(), betti[0].len()), (3, 300));
    assert_eq!((spectra.len(), spectra[0].len()), (7, 300));
    // Normalized counts: β0 starts at one component per point.
    assert_eq!(betti[0][0], 1.0);
    for i in 0..300 {
        let total: f64 = spectra.iter().map(|c| c[i]).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    assert!(ModelSpec::betti(300).lengths().is_ok());
}

#[test]
fn trained_model_survives_checkpoint() {
    let cfg = parse_config("corpus = synthetic\nsynthetic_per_class = 12").unwrap();
    let corpora = build_corpora(&cfg, &[64].into_iter().collect()).unwrap();
    let spec = ModelSpec::raw(64, Default::default());
    let mut data = Dataset::new(1, 64);
    for c in &corpora[&64] {
        data.push(&extract(c.series.values(), FeatureKind::Raw, &cfg.features).unwrap(), c.label)
            .unwrap();
    }
    let (model, _) = train(spec, &data, &TrainConfig::default()).unwrap();
    let mut buf = Vec::new();
    save_checkpoint(&model, &mut buf).unwrap();
    let back = load_checkpoint(&buf[..]).unwrap();
    assert_eq!(evaluate(&back, &data).unwrap(), evaluate(&model, &data).unwrap());
}

#[test]
fn shuffled_labels_fall_to_chance() {
    let cfg = parse_config(
        "corpus = synthetic\nsynthetic_per_class = 100\nfeatures = raw\nshuffle_labels = true\nseed = 5",
    )
    .unwrap();
    let corpora = build_corpora(&cfg, &[100].into_iter().collect()).unwrap();
    let cell = ExperimentCell {
        feature: FeatureKind::Raw,
        chunk_len: 100,
        method: Method::Dropout,
        dynamic: false,
        resolution: 100,
    };
    let r = run_cell(&cell, &corpora[&100], &cfg);
    assert!(r.is_ok());
    assert!((0.35..=0.65).contains(&r.mean_accuracy), "{}", r.mean_accuracy);
}
