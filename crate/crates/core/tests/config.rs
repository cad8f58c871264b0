use pvrl_core::config::{scratch_cnn_spatial, KEYS};
use pvrl_core::{EncoderKind, Error, ExperimentConfig, ObsKind, StorageMode};

fn workspace_config(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn shipped_configs_validate_and_round_trip() {
    for name in ["smoke.conf", "smoke_vit.conf", "table1.conf"] {
        let cfg = ExperimentConfig::from_text(&workspace_config(name)).unwrap();
        let v = cfg.validate().unwrap();
        let again = ExperimentConfig::from_text(&v.config().to_text()).unwrap();
        assert_eq!(&again, v.config(), "{name}");
    }
}

#[test]
fn every_listed_key_is_readable() {
    let cfg = ExperimentConfig::default();
    for key in KEYS {
        cfg.get(key).unwrap();
    }
    assert!(matches!(cfg.get("agent.nope"), Err(Error::UnknownKey(_))));
}

#[test]
fn comments_blanks_and_overrides() {
    let mut cfg = ExperimentConfig::from_text(
        "# header\n\nexperiment.resolution = 84  # inline\nexperiment.seed = 3\n",
    )
    .unwrap();
    assert_eq!((cfg.resolution, cfg.seed), (84, 3));
    cfg.apply_overrides([("experiment.seed", "9"), ("experiment.encoder", "vit_reg")])
        .unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.encoder, EncoderKind::VitReg);
}

#[test]
fn syntax_errors_carry_line_numbers() {
    match ExperimentConfig::from_text("experiment.seed = 1\nno equals sign\n") {
        Err(Error::ConfigSyntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    match ExperimentConfig::from_text("experiment.seed = 1\nexperiment.seed = 2\n") {
        Err(Error::ConfigSyntax { line, msg }) => assert_eq!(line, 2, "{msg}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        ExperimentConfig::from_text("bogus.key = 1"),
        Err(Error::UnknownKey(_))
    ));
    assert!(matches!(
        ExperimentConfig::from_text("experiment.seed = minus one"),
        Err(Error::BadValue { .. })
    ));
}

#[test]
fn storage_follows_the_encoder() {
    let mut cfg = ExperimentConfig {
        encoder: EncoderKind::VitCls,
        ..Default::default()
    };
    let v = cfg.validate().unwrap();
    assert_eq!(v.storage(), StorageMode::Embedding);
    assert!(!v.augment());
    assert_eq!(v.obs_spec().kind(), ObsKind::Embedding);
    assert_eq!(v.bytes_per_observation(), 768 * 4);

    cfg.storage = Some(StorageMode::Image);
    assert!(matches!(cfg.validate(), Err(Error::IncompatibleStorage { .. })));

    cfg.encoder = EncoderKind::VitReg;
    cfg.storage = None;
    let v = cfg.validate().unwrap();
    assert_eq!(v.token_count(), 1 + cfg.registers);
    assert_eq!(v.bytes_per_observation(), (768 * 4 * (1 + cfg.registers)) as u64);

    cfg.encoder = EncoderKind::ScratchCnn;
    let v = cfg.validate().unwrap();
    assert_eq!(v.storage(), StorageMode::Image);
    assert!(v.augment());
    assert_eq!(v.bytes_per_observation(), 3 * 112 * 112);
}

#[test]
fn augmenting_embeddings_is_rejected() {
    let cfg = ExperimentConfig {
        encoder: EncoderKind::VitCls,
        augment: Some(true),
        ..Default::default()
    };
    assert!(matches!(cfg.validate(), Err(Error::Invalid(_))));
}

#[test]
fn resolutions_are_checked_per_encoder() {
    let mut cfg = ExperimentConfig::default();
    for r in [84, 112, 224] {
        cfg.resolution = r;
        cfg.validate().unwrap();
    }
    cfg.resolution = 100;
    assert!(matches!(cfg.validate(), Err(Error::UnsupportedResolution { .. })));
    cfg.encoder = EncoderKind::ResnetPieg;
    cfg.resolution = 84;
    assert!(matches!(cfg.validate(), Err(Error::UnsupportedResolution { .. })));
    cfg.resolution = 224;
    cfg.validate().unwrap();
}

#[test]
fn scratch_spatial_sizes() {
    // (r - 3) / 2 + 1, then three valid 3x3 convolutions.
    assert_eq!(scratch_cnn_spatial(84), Some(35));
    assert_eq!(scratch_cnn_spatial(112), Some(49));
    assert_eq!(scratch_cnn_spatial(224), Some(105));
    assert_eq!(scratch_cnn_spatial(8), None);
}

#[test]
fn numeric_invariants() {
    let bad: &[(&str, &str)] = &[
        ("agent.batch_size", "0"),
        ("agent.discount", "1.5"),
        ("dormant.threshold", "1"),
        ("perturb.alpha_min", "0.95"),
        ("agent.explore.end", "2"),
        ("agent.polyak", "-0.1"),
    ];
    for (k, v) in bad {
        let mut cfg = ExperimentConfig::default();
        cfg.set(k, v).unwrap();
        assert!(cfg.validate().is_err(), "{k} = {v}");
    }
}
