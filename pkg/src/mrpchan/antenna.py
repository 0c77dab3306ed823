"""Antenna element field patterns and arrays used for CIR rendering."""
import abc
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import MalformedInputError, wrap180

__all__ = (
    "AntennaArray",
    "FieldPattern",
    "Isotropic",
    "ThreeGppPatch",
    "spherical_unit_vector",
)


class FieldPattern(abc.ABC):
    """Element field pattern in the global coordinate system.

    Custom patterns can be referenced from the run configuration by class
    path, e.g. ``antenna: {pattern: mypackage.patterns.Horn}``.
    """

    @abc.abstractmethod
    def field(
        self, zenith_deg: np.ndarray, azimuth_deg: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(F_theta, F_phi)`` for each direction."""


class Isotropic(FieldPattern):
    """Vertically polarized unit-gain element."""

    def field(self, zenith_deg, azimuth_deg):
        shape = np.broadcast(np.asarray(zenith_deg), np.asarray(azimuth_deg)).shape
        return np.ones(shape), np.zeros(shape)


class ThreeGppPatch(FieldPattern):
    """Single vertically polarized patch with 65 degree half-power
    beamwidths, 30 dB front-to-back limit and 8 dBi peak gain, boresight
    along the x axis."""

    max_gain_dbi = 8.0
    beamwidth_deg = 65.0
    max_attenuation_db = 30.0

    def field(self, zenith_deg, azimuth_deg):
        zenith = np.asarray(zenith_deg, dtype=float)
        azimuth = wrap180(azimuth_deg)
        vertical = -np.minimum(
            12 * ((zenith - 90.0) / self.beamwidth_deg) ** 2, self.max_attenuation_db
        )
        horizontal = -np.minimum(
            12 * (azimuth / self.beamwidth_deg) ** 2, self.max_attenuation_db
        )
        gain_db = self.max_gain_dbi - np.minimum(
            -(vertical + horizontal), self.max_attenuation_db
        )
        f_theta = np.sqrt(10 ** (gain_db / 10))
        return f_theta, np.zeros_like(f_theta)


class AntennaArray:
    """Element positions [m] (K x 3) and one field pattern per element."""

    def __init__(
        self,
        positions_m: Union[np.ndarray, Sequence[Sequence[float]]],
        patterns: Union[FieldPattern, Sequence[FieldPattern], None] = None,
    ) -> None:
        positions = np.asarray(positions_m, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3 or not len(positions):
            raise MalformedInputError(
                f"Element positions must be a non-empty K x 3 array, "
                f"got shape {positions.shape}"
            )
        if patterns is None:
            patterns = Isotropic()
        if isinstance(patterns, FieldPattern):
            patterns = [patterns] * len(positions)
        if len(patterns) != len(positions):
            raise MalformedInputError(
                f"Got {len(patterns)} field patterns for {len(positions)} elements"
            )
        self.positions_m = positions
        self.patterns: Tuple[FieldPattern, ...] = tuple(patterns)

    @classmethod
    def single(cls, pattern: Optional[FieldPattern] = None) -> "AntennaArray":
        return cls([[0.0, 0.0, 0.0]], pattern)

    @classmethod
    def uniform_linear(
        cls,
        count: int,
        spacing_m: float,
        axis: int = 0,
        pattern: Optional[FieldPattern] = None,
    ) -> "AntennaArray":
        positions = np.zeros((count, 3))
        positions[:, axis] = np.arange(count) * spacing_m
        return cls(positions, pattern)

    @property
    def size(self) -> int:
        return len(self.positions_m)

    def fields(
        self, zenith_deg: np.ndarray, azimuth_deg: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Field components with shape (K, P) for P directions."""
        f_theta = np.empty((self.size, np.size(zenith_deg)))
        f_phi = np.empty_like(f_theta)
        for k, pattern in enumerate(self.patterns):
            f_theta[k], f_phi[k] = pattern.field(zenith_deg, azimuth_deg)
        return f_theta, f_phi

    def __repr__(self):
        return f"AntennaArray(positions_m={self.positions_m.tolist()!r})"


def spherical_unit_vector(zenith_deg, azimuth_deg) -> np.ndarray:
    """Unit vectors with shape (..., 3)."""
    zenith = np.radians(zenith_deg)
    azimuth = np.radians(azimuth_deg)
    return np.stack(
        [
            np.sin(zenith) * np.cos(azimuth),
            np.sin(zenith) * np.sin(azimuth),
            np.cos(zenith),
        ],
        axis=-1,
    )
