"""Estimator-style wrappers around the training schemes.

Each trainer follows the scikit-learn conventions: constructor arguments are
stored unchanged, ``fit`` validates them and derives the fitted state, and
``predict`` maps true user locations ``X[:, 0] = range, X[:, 1] = angle`` to
simulated estimates in the same layout. ``score`` is the negative mean of
the angle and range NMSE, so larger is better.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .benchmarks import (
    DEFAULT_RINGS,
    build_polar_codebook,
    dft_weights,
    exhaustive_polar_search,
    nearfield_rainbow_training,
    perfect_csi_beamformer,
    two_phase_training,
)
from .config import PolarPoint, SystemConfig, full_array, make_frequency_grid, validate_config
from .experiment import nmse, trial_seed
from .training import PILOTS_PER_TRAINING, run_full_training


def check_locations(X) -> np.ndarray:
    """Validate an ``(n, 2)`` array of ``[range, angle]`` rows."""
    X = check_array(X, dtype=float, ensure_min_samples=1)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns [range, angle], got {X.shape[1]}")
    if np.any(X[:, 0] <= 0):
        raise ValueError("ranges must be positive")
    if np.any((X[:, 1] < -1) | (X[:, 1] >= 1)):
        raise ValueError("angles must lie in [-1, 1)")
    return X


class _Trainer(BaseEstimator):
    def _setup(self) -> None:
        pass

    def fit(self, X=None, y=None):
        """Validate the configuration; ``X`` and ``y`` are accepted for API symmetry."""
        cfg = self.config if self.config is not None else SystemConfig()
        if not isinstance(cfg, SystemConfig):
            cfg = SystemConfig.from_dict(cfg)
        self.config_ = validate_config(cfg)
        self.grid_ = make_frequency_grid(self.config_)
        self.n_features_in_ = 2
        self._setup()
        return self

    def _estimate(self, user: PolarPoint, rng) -> tuple[float, float]:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "config_")
        X = check_locations(X)
        seed = 0 if self.random_state is None else self.random_state
        out = np.empty_like(X)
        for i, (r, theta) in enumerate(X):
            user = PolarPoint(float(r), float(theta))
            out[i] = self._estimate(user, trial_seed(seed, i))
        return out

    def score(self, X, y=None) -> float:
        X = check_locations(X)
        est = self.predict(X)
        return -0.5 * (nmse(est[:, 1], X[:, 1]) + nmse(est[:, 0], X[:, 0]))


class ThreeStageBeamTrainer(_Trainer):
    """Three-pilot sparse / dense / full-array training."""

    def __init__(self, config=None, random_state=None):
        self.config = config
        self.random_state = random_state

    def _setup(self):
        self.pilot_overhead_ = PILOTS_PER_TRAINING

    def _estimate(self, user, rng):
        out = run_full_training(self.config_, user, rng, self.grid_)
        return out.range, out.angle


class _GridTrainer(_Trainer):
    def _setup(self):
        cfg = self.config_
        alpha = cfg.r_max if self.alpha is None else self.alpha
        self.codebook_ = build_polar_codebook(cfg.num_antennas_total, self.rings, alpha)
        self.codewords_ = self.codebook_.weights(full_array(cfg), self.grid_.carrier)


class ExhaustiveSearchTrainer(_GridTrainer):
    def __init__(self, config=None, rings=DEFAULT_RINGS, alpha=None, random_state=None):
        self.config = config
        self.rings = rings
        self.alpha = alpha
        self.random_state = random_state

    def _setup(self):
        super()._setup()
        self.pilot_overhead_ = self.codebook_.size

    def _estimate(self, user, rng):
        out = exhaustive_polar_search(self.config_, user, self.codebook_, rng, self.grid_, codewords=self.codewords_)
        return out.range, out.angle


class TwoPhaseTrainer(_GridTrainer):
    def __init__(self, config=None, middle=1, rings=DEFAULT_RINGS, alpha=None, random_state=None):
        self.config = config
        self.middle = middle
        self.rings = rings
        self.alpha = alpha
        self.random_state = random_state

    def _setup(self):
        if self.middle < 1:
            raise ValueError("middle must be >= 1")
        super()._setup()
        self.dft_ = dft_weights(self.codebook_.angles, full_array(self.config_), self.grid_.carrier)
        self.pilot_overhead_ = self.codebook_.num_angles + self.middle * self.rings

    def _estimate(self, user, rng):
        out = two_phase_training(
            self.config_, user, self.middle, self.codebook_, rng, self.grid_,
            dft_codewords=self.dft_, codewords=self.codewords_,
        )
        return out.range, out.angle


class NearFieldRainbowTrainer(_Trainer):
    def __init__(self, config=None, rings=DEFAULT_RINGS, alpha=None, random_state=None):
        self.config = config
        self.rings = rings
        self.alpha = alpha
        self.random_state = random_state

    def _setup(self):
        if self.rings < 1:
            raise ValueError("rings must be >= 1")
        self.pilot_overhead_ = self.rings

    def _estimate(self, user, rng):
        out = nearfield_rainbow_training(self.config_, user, self.rings, self.alpha, rng, self.grid_)
        return out.range, out.angle


class PerfectCSIBeamformer(_Trainer):
    """Reference that knows the user location; ``predict`` returns ``X``."""

    def __init__(self, config=None, random_state=None):
        self.config = config
        self.random_state = random_state

    def _setup(self):
        self.pilot_overhead_ = 0

    def _estimate(self, user, rng):
        out = perfect_csi_beamformer(user, self.config_, self.grid_)
        return out.range, out.angle
