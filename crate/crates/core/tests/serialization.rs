mod common;

use common::{model_for, scrambled_net};
use multistep::cgan::{CganConfig, CganPair, GanEpochLog};
use multistep::model_io::{CganDocument, TrainedModel};
use multistep::strategies::{Forecaster, Strategy};
use proptest::prelude::*;

fn history(seed: u64, p: usize) -> Vec<f64> {
    (0..p).map(|i| ((seed as f64 + 1.0) * (i as f64 + 0.37)).sin().abs()).collect()
}

#[test]
fn every_strategy_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (k, &s) in Strategy::ALL.iter().enumerate() {
        let model = model_for(s, k as u64, 6, 5);
        let path = dir.path().join(format!("{s}.json"));
        model.save(&path).unwrap();
        let back = TrainedModel::load(&path).unwrap();
        assert_eq!(back, model, "{s}");
        let h = history(k as u64, 6);
        let a = model.forecast(&h, 5).unwrap();
        let b = back.forecast(&h, 5).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            "{s}"
        );
    }
}

#[test]
fn saved_strategy_tag_is_kept() {
    let json = model_for(Strategy::MultiCgan, 1, 3, 2).to_json().unwrap();
    assert!(json.contains("\"strategy_tag\":\"multi-cgan\""));
    assert_eq!(TrainedModel::from_json(&json).unwrap().strategy, Strategy::MultiCgan);
}

#[test]
fn truncated_file_is_an_error() {
    let json = model_for(Strategy::Dad, 2, 4, 3).to_json().unwrap();
    assert!(TrainedModel::from_json(&json[..json.len() / 2]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn random_models_round_trip(
        k in 0usize..Strategy::ALL.len(),
        seed in any::<u64>(),
        p in 1usize..9,
        q in 2usize..9,
    ) {
        let model = model_for(Strategy::ALL[k], seed, p, q);
        let back = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &model);
        let h = history(seed, p);
        prop_assert_eq!(back.forecast(&h, q).unwrap(), model.forecast(&h, q).unwrap());
    }

    #[test]
    fn gan_documents_round_trip(seed in any::<u64>(), p in 1usize..6, q in 1usize..6, losses in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0), 0..4)) {
        let cfg = CganConfig { noise_dim: 3, seed, ..Default::default() };
        let mut pair = CganPair::init(p, q, &cfg).unwrap();
        pair.generator = scrambled_net(seed, 3 + q, p);
        for (epoch, (d, g)) in losses.into_iter().enumerate() {
            pair.training_log.push(GanEpochLog { epoch, d_loss: d, g_loss: g, d_accuracy: d / 5.0, holdout_accuracy: None });
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gan.json");
        CganDocument::new(&pair, &cfg, None).save(&path).unwrap();
        let doc = CganDocument::load(&path).unwrap();
        prop_assert_eq!(doc.to_pair().unwrap(), pair);
        prop_assert_eq!(doc.config, cfg);
    }
}
