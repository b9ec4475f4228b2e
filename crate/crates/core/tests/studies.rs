use htl_core::evaluate::{
    run_phase_study, run_transfer_study, PhaseStudyConfig, SimulationSettings, TransferEstimators,
    TransferStudyConfig,
};

#[test]
fn transfer_beats_target_only() {
    let cfg = TransferStudyConfig {
        m_source: 1.0,
        m_deltas: vec![3.0],
        xis: vec![0.25],
        n_targets: vec![100],
        source_exponent: 1.5,
        repeats: 50,
        estimators: TransferEstimators::default(),
        seed_base: 1,
        settings: SimulationSettings::default(),
    };
    assert_eq!(cfg.source_size(100), 1000);
    let table = run_transfer_study(&cfg, 1).unwrap();
    let risk = |label: &str| {
        table
            .rows
            .iter()
            .find(|r| r.filter == label)
            .unwrap()
            .mean_risk
    };
    let (transfer, baseline) = (risk("rahtl-gf-krr"), risk("target-only-krr"));
    assert!(
        transfer < baseline,
        "transfer {transfer} vs target-only {baseline}"
    );
}

#[test]
fn strong_shift_plateaus_in_source_size() {
    let cfg = PhaseStudyConfig {
        m_source: 1.0,
        m_delta: 3.0,
        n_target: 200,
        n_sources: vec![200, 1500],
        xis: vec![4.0],
        repeats: 50,
        estimators: TransferEstimators::default(),
        seed_base: 1,
        settings: SimulationSettings::default(),
    };
    let table = run_phase_study(&cfg, 1).unwrap();
    let risks: Vec<f64> = table.rows.iter().map(|r| r.mean_risk).collect();
    assert_eq!(risks.len(), 2);
    assert!(
        risks[1] >= 0.8 * risks[0],
        "risk fell from {} to {}",
        risks[0],
        risks[1]
    );
}
