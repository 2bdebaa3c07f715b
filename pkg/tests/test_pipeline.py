import numpy as np
import pytest

from weaksup.data import DataError, Dataset, HardLabelVector, ProbLabelVector
from weaksup.discmodel import DiscConfig
from weaksup.genmodel import FitConfig, fit_sp, label_sp
from weaksup.pipeline import RunConfig, agreement_rate, run, stopping_rule
from weaksup.synth import E2EScenario, gen_e2e


def test_agreement_rate_extremes():
    a = ProbLabelVector(np.array([1.0, -1.0, 1.0]))
    d = HardLabelVector(np.array([1, -1, 1]))
    assert agreement_rate(a, d) == 1.0
    assert agreement_rate(a, HardLabelVector(np.array([-1, 1, -1]))) == 0.0


def test_agreement_rate_sign_of_zero_is_positive():
    gen = ProbLabelVector(np.array([0.2, -0.3, 0.0]))
    disc = HardLabelVector(np.array([1, 1, -1]))
    assert agreement_rate(gen, disc) == pytest.approx(1.0 / 3.0)


def test_agreement_rate_length_mismatch():
    with pytest.raises(ValueError):
        agreement_rate(ProbLabelVector(np.zeros(2)), HardLabelVector(np.array([1])))


def test_stopping_rule_examples():
    assert stopping_rule([0.7, 0.75, 0.74], patience=1) is True
    assert stopping_rule([0.7, 0.75], patience=1) is False
    assert stopping_rule([0.7, 0.69, 0.71], patience=2) is False
    assert stopping_rule([0.7], patience=1) is False
    assert stopping_rule([0.7, 0.65, 0.64], patience=2) is True
    with pytest.raises(ValueError):
        stopping_rule([], patience=1)


def _small_scenario(seed=0, **kw):
    defaults = dict(m=4, n=1500, p=8, q_disc=3, seed=seed)
    defaults.update(kw)
    return E2EScenario(**defaults)


def _fast_config(**kw):
    defaults = dict(
        gen=FitConfig(max_iters=400),
        disc=DiscConfig(max_iters=400),
        grid_size=50,
    )
    defaults.update(kw)
    return RunConfig(**defaults)


def test_run_k_max_zero_matches_sp_baseline():
    ds = gen_e2e(_small_scenario(seed=1))
    report = run(ds, _fast_config(k_max=0))
    assert len(report.iterations) == 1
    assert report.best_k == 0
    assert report.stop_reason == "k_max"
    baseline = label_sp(fit_sp(ds.labels, FitConfig(max_iters=400)), ds.labels)
    assert report.final_labels.expected.tobytes() == baseline.expected.tobytes()


def test_run_is_deterministic():
    ds = gen_e2e(_small_scenario(seed=2))
    cfg = _fast_config(k_max=3)
    a = run(ds, cfg)
    b = run(ds, cfg)
    assert a.best_k == b.best_k
    assert a.stop_reason == b.stop_reason
    assert a.final_labels.expected.tobytes() == b.final_labels.expected.tobytes()
    for ra, rb in zip(a.iterations, b.iterations):
        assert ra.agreement == rb.agreement
        assert ra.dev_metric == rb.dev_metric
        assert ra.selected == rb.selected
        assert ra.gen_params.phi.tobytes() == rb.gen_params.phi.tobytes()
        assert ra.disc_params.theta.tobytes() == rb.disc_params.theta.tobytes()
        assert ra.disc_params.bias == rb.disc_params.bias


def test_run_selected_is_prefix_across_iterations():
    ds = gen_e2e(_small_scenario(seed=3))
    report = run(ds, _fast_config(k_max=4, patience=4))
    for prev, cur in zip(report.iterations[1:], report.iterations[2:]):
        assert cur.selected[: len(prev.selected)] == prev.selected


def test_run_best_k_maximizes_tracked_metric():
    ds = gen_e2e(_small_scenario(seed=4))
    report = run(ds, _fast_config(k_max=3, patience=3))
    metrics = [
        r.dev_metric if report.tracked_metric != "agreement" else r.agreement
        for r in report.iterations
    ]
    assert metrics[report.best_k] == max(metrics)
    assert report.best_k == int(np.argmax(metrics))


def test_run_finds_planted_subset_and_improves():
    # run blind (agreement-tracked); the held-back truth only scores the labels
    from weaksup.metrics import soft_label_accuracy

    ds = gen_e2e(E2EScenario(seed=23))
    blind = Dataset(
        labels=ds.labels, bin_features=ds.bin_features, real_features=ds.real_features
    )
    report = run(blind, RunConfig(k_max=4))
    assert report.best_k >= 1
    assert 0 in report.best.selected
    k0_labels = label_sp(report.iterations[0].gen_params, ds.labels)
    acc0 = soft_label_accuracy(k0_labels, ds.truth)
    acc_best = soft_label_accuracy(report.final_labels, ds.truth)
    assert acc_best > acc0


def test_run_path_exhausted_with_tiny_feature_set():
    ds = gen_e2e(_small_scenario(seed=5, p=2))
    report = run(ds, _fast_config(k_max=10, patience=10))
    assert report.stop_reason in ("path_exhausted", "k_max")
    if report.stop_reason == "path_exhausted":
        assert len(report.iterations) <= 3


def test_run_without_truth_tracks_agreement():
    ds = gen_e2e(_small_scenario(seed=6))
    blind = Dataset(
        labels=ds.labels, bin_features=ds.bin_features, real_features=ds.real_features
    )
    report = run(blind, _fast_config(k_max=2))
    assert report.tracked_metric == "agreement"
    assert all(r.dev_metric is None for r in report.iterations)


def test_run_requires_real_features():
    ds = gen_e2e(_small_scenario(seed=7))
    with pytest.raises(DataError, match="real-valued features"):
        run(Dataset(labels=ds.labels, bin_features=ds.bin_features), RunConfig())


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(k_max=-1)
    with pytest.raises(ValueError):
        RunConfig(patience=0)
    with pytest.raises(ValueError):
        RunConfig(dev_metric="auc")


def test_run_with_standardized_features():
    ds = gen_e2e(_small_scenario(seed=8))
    # shift one feature column so standardization actually changes the data
    shifted = ds.real_features.values.copy()
    shifted[:, 0] = shifted[:, 0] * 3.0 + 10.0
    from weaksup.data import FeatureMatrixReal

    moved = Dataset(
        labels=ds.labels,
        bin_features=ds.bin_features,
        real_features=FeatureMatrixReal(shifted),
        truth=ds.truth,
    )
    cfg = _fast_config(k_max=2, standardize=True)
    a = run(moved, cfg)
    b = run(moved, cfg)
    assert a.final_labels.expected.tobytes() == b.final_labels.expected.tobytes()
    assert a.iterations[0].dev_metric > 0.5


def test_run_refresh_disagreement_mode():
    ds = gen_e2e(_small_scenario(seed=9))
    report = run(ds, _fast_config(k_max=3, patience=3, refresh_disagreement=True))
    assert report.iterations[0].k == 0
    assert report.best_k == int(
        np.argmax([r.dev_metric for r in report.iterations])
    )


def test_run_tracks_f1_when_requested():
    ds = gen_e2e(_small_scenario(seed=10))
    report = run(ds, _fast_config(k_max=1, dev_metric="f1"))
    assert report.tracked_metric == "f1"
    assert all(0.0 <= r.dev_metric <= 1.0 for r in report.iterations)
