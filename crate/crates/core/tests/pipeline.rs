use padkit::calibration::{evaluate, grid_search, sweep_delta, GridSpec};
use padkit::signals::{presets, read_csv, read_labels, labels_path, write_labeled, Preset};
use padkit::{detect, fit, FitConfig, KernelMethod};

fn run_preset(p: &Preset) -> (f64, f64) {
    let sig = p.generate().unwrap();
    let cfg = FitConfig::new(p.lag, p.train_len, p.method).delta(p.delta);
    let model = fit(&sig.series, &cfg).unwrap();
    let r = detect(&model, &sig.series, sig.series.len()).unwrap();
    let m = evaluate(&r, &sig.anomaly_windows, p.lag);
    (m.recall, m.false_positive_rate)
}

#[test]
fn presets_separate_their_windows() {
    for p in Preset::all() {
        let (recall, fpr) = run_preset(&p);
        assert!(recall >= 0.8 && fpr <= 0.05, "{}: recall {recall} fpr {fpr}", p.name);
    }
}

#[test]
fn preset_lookup() {
    assert_eq!(Preset::by_name("walking").unwrap(), presets::walking());
    assert!(Preset::by_name("running").is_none());
    assert_eq!(presets::synthetic().with_seed(4).spec.seed, 4);
}

#[test]
fn file_round_trip_preserves_detection() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.csv");
    let p = presets::walking();
    let sig = p.generate().unwrap();
    write_labeled(&sig, &path).unwrap();
    let series = read_csv(&path).unwrap();
    assert_eq!(series, sig.series);
    assert_eq!(read_labels(labels_path(&path)).unwrap(), sig.anomaly_windows);

    let cfg = FitConfig::new(p.lag, p.train_len, p.method).delta(p.delta);
    let a = detect(&fit(&sig.series, &cfg).unwrap(), &sig.series, 2000).unwrap();
    let b = detect(&fit(&series, &cfg).unwrap(), &series, 2000).unwrap();
    assert_eq!(a.flags, b.flags);
}

#[test]
fn sweep_on_preset_is_nested() {
    let p = presets::synthetic();
    let sig = p.generate().unwrap();
    let model = fit(&sig.series, &FitConfig::new(p.lag, p.train_len, p.method)).unwrap();
    let deltas = [0.25, 0.6, 1.2, 2.4, 4.8];
    let pts = sweep_delta(&model, &sig.series, 2000, &deltas, &sig.anomaly_windows).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].flag_count <= w[0].flag_count);
        assert!(w[0].result.flags.iter().zip(&w[1].result.flags).all(|(lo, hi)| hi <= lo));
    }
}

#[test]
fn grid_search_finds_gate_on_walking() {
    let sig = presets::walking().generate().unwrap();
    let spec = GridSpec::new(vec![40, 60], vec![900], vec![0.5, 1.01, 2.0], KernelMethod::Ipm);
    let report = grid_search(&sig, &spec).unwrap();
    assert_eq!(report.entries.len(), 6);
    assert!(report.best_meets_gate);
    let best = report.best_entry();
    let m = best.metrics.as_ref().unwrap();
    assert!(m.false_positive_rate <= spec.fpr_cap);
}
