import numpy as np
import pytest

from weaksup.data import validate
from weaksup.genmodel import fit_sp
from weaksup.synth import (
    E2EScenario,
    PlantedSubset,
    RecoveryScenario,
    derive_trial_seed,
    gen_e2e,
    gen_recovery,
    run_recovery_experiment,
)


def test_scenario_validation():
    with pytest.raises(ValueError):
        RecoveryScenario(kappa=0.0, n=10)
    with pytest.raises(ValueError):
        RecoveryScenario(kappa=1.2, n=10)
    with pytest.raises(ValueError):
        RecoveryScenario(kappa=0.5, n=10, p=3, s_size=3)
    with pytest.raises(ValueError):
        RecoveryScenario(kappa=0.5, n=10, rho=0.2)  # rho below kappa


def test_gen_recovery_degenerate_kappa_one():
    x, target, support = gen_recovery(RecoveryScenario(kappa=1.0, n=200, p=10, seed=0))
    for j in support:
        np.testing.assert_array_equal(x.values[:, j].astype(float), target.values)


def test_gen_recovery_correlations_within_clt_bands():
    kappa, n = 0.6, 100_000
    x, target, support = gen_recovery(RecoveryScenario(kappa=kappa, n=n, p=10, seed=1))
    corr = x.values.astype(float).T @ target.values / n
    band_rel = 3.0 * np.sqrt((1.0 - kappa**2) / n)
    for j in range(10):
        if j in support:
            assert abs(corr[j] - kappa) < band_rel
        else:
            assert abs(corr[j]) < 3.0 / np.sqrt(n)


def test_gen_recovery_custom_rho_split():
    kappa = 0.5
    sc = RecoveryScenario(kappa=kappa, n=50_000, p=8, seed=3, rho=kappa)  # q = 0
    x, target, support = gen_recovery(sc)
    rho, q = sc.rho_q
    assert q == 0.0
    corr = x.values.astype(float).T @ target.values / sc.n
    for j in support:
        assert abs(corr[j] - kappa) < 3.0 * np.sqrt((1.0 - kappa**2) / sc.n)


def test_gen_recovery_deterministic():
    a = gen_recovery(RecoveryScenario(kappa=0.4, n=100, p=6, seed=9))
    b = gen_recovery(RecoveryScenario(kappa=0.4, n=100, p=6, seed=9))
    np.testing.assert_array_equal(a[0].values, b[0].values)
    np.testing.assert_array_equal(a[1].values, b[1].values)
    assert a[2] == b[2]


def test_gen_e2e_defaults_and_determinism():
    sc = E2EScenario(n=2000, seed=5)
    ds1, ds2 = gen_e2e(sc), gen_e2e(sc)
    np.testing.assert_array_equal(ds1.labels.votes, ds2.labels.votes)
    np.testing.assert_array_equal(ds1.real_features.values, ds2.real_features.values)
    assert validate(ds1).ok
    assert ds1.truth is not None and ds1.bin_features.p == sc.p


def test_gen_e2e_flipped_conditional_accuracy():
    sc = E2EScenario(seed=11)  # defaults: n=10000, base 0.8, flipped 0.3 on source 0
    ds = gen_e2e(sc)
    on_subset = ds.bin_features.values[:, 0] == 1
    votes = ds.labels.votes[sc.flipped_source]
    voted = votes != 0
    sel = on_subset & voted
    acc = (votes[sel] == ds.truth.labels[sel]).mean()
    se = np.sqrt(0.3 * 0.7 / sel.sum())
    assert abs(acc - sc.flipped_accuracy) < 3.0 * se
    off = ~on_subset & voted
    acc_off = (votes[off] == ds.truth.labels[off]).mean()
    assert abs(acc_off - 0.8) < 3.0 * np.sqrt(0.8 * 0.2 / off.sum())


def test_gen_e2e_null_when_flip_matches_base():
    sc = E2EScenario(n=20_000, flipped_accuracy=0.8, base_accuracies=0.8, seed=13)
    ds = gen_e2e(sc)
    # without a planted effect the indicator behaves like any noise column
    soft = fit_sp(ds.labels)
    gen_labels = np.tanh(soft.phi @ ds.labels.votes.astype(float))
    corr = np.abs(ds.bin_features.values.astype(float).T @ gen_labels) / sc.n
    assert abs(corr[0]) < 3.0 / np.sqrt(sc.n) + corr[1:].max()


def test_gen_e2e_sp_accuracy_estimate_between_conditionals():
    sc = E2EScenario(seed=17)
    ds = gen_e2e(sc)
    fitted = fit_sp(ds.labels)
    # implied voting accuracy of the flipped source: sigmoid(2 phi)
    implied = 1.0 / (1.0 + np.exp(-2.0 * fitted.phi[sc.flipped_source]))
    assert sc.flipped_accuracy < implied < 0.8


def test_gen_e2e_extra_subsets_get_indicator_columns():
    sc = E2EScenario(
        n=5000,
        flipped_source=1,
        extra_subsets=(PlantedSubset(source=3, accuracy=0.25, fraction=0.25),),
        seed=19,
    )
    ds = gen_e2e(sc)
    on = ds.bin_features.values[:, 1] == 1
    votes = ds.labels.votes[3]
    sel = on & (votes != 0)
    acc = (votes[sel] == ds.truth.labels[sel]).mean()
    assert abs(acc - 0.25) < 3.0 * np.sqrt(0.25 * 0.75 / sel.sum())


def test_trial_seeds_are_stable():
    assert derive_trial_seed(1, 0, 0) == derive_trial_seed(1, 0, 0)
    assert derive_trial_seed(1, 0, 0) != derive_trial_seed(1, 0, 1)
    assert derive_trial_seed(1, 0, 0) != derive_trial_seed(2, 0, 0)


def test_recovery_experiment_underdetermined_n():
    cells = run_recovery_experiment([0.6], [1], trials=20, p=10, s_size=3, seed=0)
    assert cells[0].recovered_fraction <= 0.05


def test_recovery_experiment_parallel_matches_serial():
    kwargs = dict(kappas=[0.6], ns=[300], trials=8, p=20, s_size=3, seed=4)
    serial = run_recovery_experiment(**kwargs, jobs=1)
    parallel = run_recovery_experiment(**kwargs, jobs=2)
    assert serial == parallel


def test_recovery_experiment_theorem_policy_runs():
    cells = run_recovery_experiment(
        [0.6], [4000], trials=4, p=10, s_size=3, seed=6, rho=0.6,
        lambda_policy="theorem",
    )
    cell = cells[0]
    assert 0.0 <= cell.recovered_fraction <= 1.0
    assert cell.containment_fraction >= cell.recovered_fraction
