use fogna::coarray::FocaCase;
use fogna::coupling::CouplingModel;
use fogna::estimator::{
    assemble_cases, assemble_foeca, match_to_truth, model_cumulants, sample_cumulants, ss_music,
};
use fogna::geometry::{build_fogna, FognaParams, SensorArray};
use fogna::optimizer::optimize;
use fogna::signalsim::{simulate, uniform_angles, SourceScene};
use fogna::{Complex64, Error};
use proptest::prelude::*;

fn nine() -> SensorArray {
    build_fogna(&optimize(9).unwrap().best_params).unwrap()
}

#[test]
fn extended_coarray_holds_more_sources_than_difference_coarray() {
    let a = nine();
    let truths = uniform_angles(90, -60.0, 60.0);
    let bank =
        model_cumulants(&a, &truths, &vec![Complex64::new(-2.0, 0.0); truths.len()]).unwrap();

    let fodca = assemble_cases(&bank, &a, &[FocaCase::Two]).unwrap();
    assert_eq!(fodca.lc, 84);
    assert!(matches!(
        ss_music(&fodca, truths.len(), 0.05),
        Err(Error::OverCapacity {
            requested: 90,
            capacity: 84
        })
    ));

    let foeca = assemble_foeca(&bank, &a).unwrap();
    assert_eq!(foeca.lc, 204);
    let est = ss_music(&foeca, truths.len(), 0.05).unwrap();
    assert!(est.resolved());
    for (e, t) in match_to_truth(&est.angles_deg, &truths).unwrap() {
        assert!((e - t).abs() < 0.05, "{e} vs {t}");
    }
}

#[test]
fn finite_sample_pipeline_resolves_two_sources() {
    let a = build_fogna(&FognaParams::new(4, 2, 1).unwrap()).unwrap();
    let truths = [-30.0, 30.0];
    let scene = SourceScene::bpsk(truths.to_vec(), 3).unwrap();
    let x = simulate(&a, &scene, 10.0, 10_000, None).unwrap();
    let meas = assemble_foeca(&sample_cumulants(&x).unwrap(), &a).unwrap();
    let est = ss_music(&meas, 2, 0.05).unwrap();
    for (e, t) in match_to_truth(&est.angles_deg, &truths).unwrap() {
        assert!((e - t).abs() < 0.5, "{e} vs {t}");
    }
}

#[test]
fn coupled_pipeline_still_resolves() {
    let a = nine();
    let truths = uniform_angles(6, -50.0, 50.0);
    let scene = SourceScene::bpsk(truths.clone(), 5).unwrap();
    let x = simulate(&a, &scene, 5.0, 10_000, Some(&CouplingModel::default())).unwrap();
    let meas = assemble_foeca(&sample_cumulants(&x).unwrap(), &a).unwrap();
    let est = ss_music(&meas, truths.len(), 0.05).unwrap();
    for (e, t) in match_to_truth(&est.angles_deg, &truths).unwrap() {
        assert!((e - t).abs() < 0.5, "{e} vs {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn case_three_conjugates_case_one(
        raw in prop::collection::btree_set(0i64..20, 2..5),
        angle in -80.0f64..80.0,
        snr in -10.0f64..20.0,
        seed in any::<u64>(),
        coupled in any::<bool>(),
    ) {
        let a = SensorArray::from_positions(raw).unwrap();
        let scene = SourceScene::bpsk(vec![angle], seed).unwrap();
        let model = CouplingModel::default();
        let x = simulate(&a, &scene, snr, 200, coupled.then_some(&model)).unwrap();
        let bank = sample_cumulants(&x).unwrap();
        prop_assert!(bank.conjugacy_error() < 1e-12);
        let meas = assemble_foeca(&bank, &a).unwrap();
        for m in meas.lags() {
            prop_assert!((meas.value(m).unwrap() - meas.value(-m).unwrap().conj()).norm() < 1e-12);
        }
    }
}
