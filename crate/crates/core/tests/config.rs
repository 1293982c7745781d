use peakctl_core::config::parse_config;
use peakctl_core::inventory::{InventoryModel, InventoryParams};
use peakctl_core::queue::{QueueModel, QueueParams};
use std::fs;
use std::path::PathBuf;

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut seeds: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty(), "no seeds in {}", dir.display());
    seeds
}

#[test]
fn config_seeds_parse_validate_and_round_trip() {
    for target in ["parse_config", "config_roundtrip"] {
        for (path, text) in corpus(target) {
            let cfg = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let again = parse_config(&cfg.to_json()).unwrap();
            assert_eq!(again, cfg, "{}", path.display());
        }
    }
}

#[test]
fn param_seeds_build_models() {
    for (path, text) in corpus("model_params") {
        let inventory = serde_json::from_str::<InventoryParams>(&text).map(InventoryModel::new);
        let queue = serde_json::from_str::<QueueParams>(&text).map(QueueModel::new);
        let built = matches!(inventory, Ok(Ok(_))) || matches!(queue, Ok(Ok(_)));
        assert!(built, "{}", path.display());
    }
}
