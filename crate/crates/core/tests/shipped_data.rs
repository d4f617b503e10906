use std::path::{Path, PathBuf};

use hsnli_core::corpus::DatasetManifest;
use hsnli_core::engine::{HypothesisCatalog, ModelKind};
use hsnli_core::eval::read_reference;
use hsnli_core::strategy::StrategyConfig;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn reference_table_is_complete() {
    let rows = read_reference(&root().join("references/table1.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 5 * 5 * 3);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.macro_f1)));
    let get = |block: &str, variant: &str, dataset: &str, n: usize| {
        rows.iter()
            .find(|r| r.block == block && r.variant == variant && r.dataset == dataset && r.n_shot == n)
            .unwrap()
            .macro_f1
    };
    assert_eq!(get("held_out", "X+DEN", "BAS19_ES", 20), 0.66);
    assert_eq!(get("held_out", "M", "BAS19_ES", 2000), 0.84);
    assert_eq!(get("hatecheck", "X+DEN", "HateCheck_HI", 20), 0.57);
    assert_eq!(get("hatecheck", "X+KEN", "HateCheck_IT", 2000), 0.62);
}

#[test]
fn manifests_load_with_fractions() {
    let manifests = DatasetManifest::load_dir(&root().join("references/manifests")).unwrap();
    assert_eq!(manifests.len(), 13);
    let fen = manifests.iter().find(|m| m.code == "FEN").unwrap();
    assert_eq!(fen.expected_sizes.train, Some(20068));
    assert_eq!(fen.expected_hate_pct, Some(0.22));
    let has = manifests.iter().find(|m| m.code == "HAS21_HI").unwrap();
    assert_eq!(has.expected_sizes.test, Some(500));
    assert!(manifests.iter().all(|m| m.expected_hate_pct.is_some_and(|p| p < 1.0)));
}

#[test]
fn catalog_covers_strategy_slots_in_every_language() {
    let catalog = HypothesisCatalog::load(&root().join("config/catalog.toml")).unwrap();
    let strategies = StrategyConfig::load(&root().join("config/strategies.toml")).unwrap();
    for language in ["en", "es", "pt", "hi", "ar", "it"] {
        for slot in strategies.required_slots() {
            catalog.resolve(&slot, language, ModelKind::Monolingual).unwrap();
            let multi = catalog.resolve(&slot, language, ModelKind::Multilingual).unwrap();
            assert_eq!(multi.language, "en");
        }
    }
}
