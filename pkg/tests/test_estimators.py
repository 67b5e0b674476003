import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from xlbeam.config import ConfigError, SystemConfig
from xlbeam.estimators import (
    ExhaustiveSearchTrainer,
    NearFieldRainbowTrainer,
    PerfectCSIBeamformer,
    ThreeStageBeamTrainer,
    TwoPhaseTrainer,
    check_locations,
)

X = np.array([[20.0, 0.1], [35.0, -0.3]])


@pytest.mark.parametrize(
    "est, overhead",
    [
        (ThreeStageBeamTrainer(random_state=1), 3),
        (ExhaustiveSearchTrainer(rings=4, random_state=1), 513 * 4),
        (TwoPhaseTrainer(middle=2, rings=4, random_state=1), 513 + 2 * 4),
        (NearFieldRainbowTrainer(rings=5, random_state=1), 5),
        (PerfectCSIBeamformer(), 0),
    ],
)
def test_estimator_contract(est, overhead):
    est.fit()
    assert est.pilot_overhead_ == overhead
    assert est.n_features_in_ == 2
    pred = est.predict(X)
    assert pred.shape == X.shape
    assert np.array_equal(pred, clone(est).fit().predict(X))
    assert est.score(X) <= 0
    params = est.get_params()
    assert clone(est).get_params() == params


def test_perfect_csi_predicts_truth():
    est = PerfectCSIBeamformer().fit()
    assert np.array_equal(est.predict(X), X)
    assert est.score(X) == 0.0


def test_three_stage_is_accurate_at_reference_power():
    est = ThreeStageBeamTrainer(random_state=0).fit()
    pred = est.predict(X)
    assert np.all(np.abs(pred[:, 1] - X[:, 1]) < 0.01)
    assert np.all(np.abs(pred[:, 0] - X[:, 0]) / X[:, 0] < 0.2)


def test_config_forms():
    assert ThreeStageBeamTrainer(config={"transmit_power": "20 dBm"}).fit().config_.transmit_power == pytest.approx(0.1)
    cfg = SystemConfig(noise_power=0.0)
    assert ThreeStageBeamTrainer(config=cfg).fit().config_ is cfg
    with pytest.raises(ConfigError):
        ThreeStageBeamTrainer(config={"num_antennas_total": 512}).fit()


def test_not_fitted_and_bad_input():
    with pytest.raises(NotFittedError):
        ThreeStageBeamTrainer().predict(X)
    est = PerfectCSIBeamformer().fit()
    with pytest.raises(ValueError):
        est.predict(np.ones((2, 3)))
    with pytest.raises(ValueError):
        check_locations([[-1.0, 0.0]])
    with pytest.raises(ValueError):
        check_locations([[10.0, 1.0]])
    with pytest.raises(ValueError):
        TwoPhaseTrainer(middle=0).fit()
    with pytest.raises(ValueError):
        NearFieldRainbowTrainer(rings=0).fit()
