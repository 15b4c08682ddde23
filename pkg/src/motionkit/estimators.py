"""Estimator-style wrappers around the transform-shaped cores.

These follow the scikit-learn parameter conventions (constructor params,
``get_params``/``set_params``, ``fit`` returning self, ``transform``) so the
rasterizer and degrader drop into pipelines and grid searches without a hard
scikit-learn dependency.
"""

from __future__ import annotations

import inspect
from dataclasses import replace

import numpy as np

from .degrade import DegradeConfig, degrade
from .tracks import TrajectorySet
from .volume import MotionVolume, SigmaConfig, rasterize


class ParamsMixin:
    """get_params/set_params over the constructor signature."""

    @classmethod
    def _param_names(cls) -> list[str]:
        signature = inspect.signature(cls.__init__)
        return [name for name in signature.parameters if name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(f"invalid parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class VolumeRasterizer(ParamsMixin):
    """Stateless transformer from trajectory sets to motion volumes."""

    def __init__(
        self,
        height: int | None = None,
        width: int | None = None,
        sigma_fraction: float = 0.01,
        truncation: float = 3.0,
    ):
        self.height = height
        self.width = width
        self.sigma_fraction = sigma_fraction
        self.truncation = truncation

    def _sigma_config(self) -> SigmaConfig:
        return SigmaConfig(
            sigma_fraction=self.sigma_fraction, truncation_radius_sigmas=self.truncation
        )

    def fit(self, X=None, y=None) -> "VolumeRasterizer":
        self._sigma_config()  # validates parameters
        return self

    def transform(self, X) -> "MotionVolume | list[MotionVolume]":
        if isinstance(X, TrajectorySet):
            return self._one(X)
        return [self._one(item) for item in X]

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)

    def _one(self, traj_set: TrajectorySet) -> MotionVolume:
        height = self.height if self.height is not None else traj_set.image_height
        width = self.width if self.width is not None else traj_set.image_width
        return rasterize(traj_set, height, width, self._sigma_config())


class TrajectoryDegrader(ParamsMixin):
    """Confidence-driven degradation over every track of a trajectory set.

    Each track is degraded at its own confidence score, with per-track
    seeds derived from ``random_state`` so results are reproducible and
    independent of track order.
    """

    def __init__(
        self,
        theta_max: float = 5.0,
        delta_scale: float = 0.2,
        delta_trans: float = 30.0,
        l_min_fraction: float = 0.10,
        w_min: int = 3,
        poly_order: int = 2,
        intensity_low: float = 0.1,
        intensity_high: float = 1.0,
        random_state: int | None = None,
    ):
        self.theta_max = theta_max
        self.delta_scale = delta_scale
        self.delta_trans = delta_trans
        self.l_min_fraction = l_min_fraction
        self.w_min = w_min
        self.poly_order = poly_order
        self.intensity_low = intensity_low
        self.intensity_high = intensity_high
        self.random_state = random_state

    def _config(self) -> DegradeConfig:
        return DegradeConfig(
            theta_max=self.theta_max,
            delta_scale=self.delta_scale,
            delta_trans=self.delta_trans,
            l_min_fraction=self.l_min_fraction,
            w_min=self.w_min,
            poly_order=self.poly_order,
            intensity_range_low_conf=(self.intensity_low, self.intensity_high),
        )

    def fit(self, X=None, y=None) -> "TrajectoryDegrader":
        self._config()
        return self

    def transform(self, X) -> "TrajectorySet | list[TrajectorySet]":
        if isinstance(X, TrajectorySet):
            return self._one(X)
        return [self._one(item) for item in X]

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)

    def _one(self, traj_set: TrajectorySet) -> TrajectorySet:
        cfg = self._config()
        base = 0 if self.random_state is None else int(self.random_state)
        degraded = [
            degrade(
                track,
                track.confidence,
                cfg,
                np.random.SeedSequence([base, i]),
                traj_set.image_width,
                traj_set.image_height,
            )[0]
            for i, track in enumerate(traj_set.tracks)
        ]
        return replace(traj_set, tracks=degraded)
