"""Channel statistics: PADP, PL, rms delay spread, circular angular
spread, normalized errors, normal fits and the synthetic measurement
generator.

All spreads are power-weighted second moments over a :class:`PathList`,
applied identically to measured and modeled paths.
"""
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats as scipy_stats

from .core import (
    SPEED_OF_LIGHT,
    ChannelDomainError,
    DrawSite,
    MalformedInputError,
    Point3D,
    RandomStream,
    RpPlacement,
    rp_coordinates,
    virtual_anchor,
    wrap180,
    wrap360,
)
from .gbsm import AngleKind, PathSet

__all__ = (
    "ChannelStats",
    "NormalFit",
    "PadpGrid",
    "PathLayout",
    "PathList",
    "cdf_samples",
    "channel_stats",
    "circular_angle_spread",
    "estimate_pl",
    "fit_normal",
    "log10_spreads",
    "mean_stats",
    "normalized_error",
    "padp",
    "padp_from_paths",
    "path_layout",
    "paths_from_padp",
    "rms_delay_spread",
    "sounder_view",
    "spread_summary",
    "synth_measurement",
)

MEASURED_DELAY_MEAN_S = 90.20e-9
MEASURED_DELAY_STD_S = 36.39e-9
MEASURED_PATH_COUNT = 302
MEASURED_PL_DB = -80.8125
MEASURED_DS_S = 32.92e-9
MEASURED_AS_AZ_DEG = 89.98


class PathList(NamedTuple):
    """Effective paths: delays [s], AoDs [deg], optional ZoDs [deg] and
    linear powers."""

    delay_s: np.ndarray
    aod_deg: np.ndarray
    zod_deg: Optional[np.ndarray]
    power_lin: np.ndarray

    @classmethod
    def from_columns(
        cls,
        delay_s: Sequence[float],
        aod_deg: Sequence[float],
        power_lin: Sequence[float],
        zod_deg: Optional[Sequence[float]] = None,
    ) -> "PathList":
        delay = np.asarray(delay_s, dtype=float)
        aod = np.asarray(aod_deg, dtype=float)
        power = np.asarray(power_lin, dtype=float)
        zod = None if zod_deg is None else np.asarray(zod_deg, dtype=float)
        lengths = {len(delay), len(aod), len(power)} | (
            set() if zod is None else {len(zod)}
        )
        if len(lengths) != 1:
            raise MalformedInputError(f"Path columns differ in length: {lengths}")
        if not np.all(np.isfinite(power)) or np.any(power <= 0):
            raise MalformedInputError("Path powers must be finite and positive")
        if not np.all(np.isfinite(delay)) or np.any(delay < 0):
            raise MalformedInputError("Path delays must be finite and nonnegative")
        if not np.all(np.isfinite(aod)) or (
            zod is not None and not np.all(np.isfinite(zod))
        ):
            raise MalformedInputError("Path angles must be finite")
        return cls(delay, aod, zod, power)

    @classmethod
    def from_path_set(cls, paths: PathSet) -> "PathList":
        """Keep the paths carrying power; zero-weight rays are not
        effective paths."""
        keep = paths.power_lin > 0
        return cls.from_columns(
            delay_s=paths.abs_delay_s[keep],
            aod_deg=paths.aod_deg[keep],
            zod_deg=paths.zod_deg[keep],
            power_lin=paths.power_lin[keep],
        )

    @property
    def size(self) -> int:
        return len(self.power_lin)

    def zenith(self) -> np.ndarray:
        if self.zod_deg is None:
            return np.full(self.size, 90.0)
        return self.zod_deg

    def scaled(self, factor: float) -> "PathList":
        return self._replace(power_lin=self.power_lin * factor)

    def merged(self, other: "PathList") -> "PathList":
        if self.zod_deg is None and other.zod_deg is None:
            zod = None
        else:
            zod = np.concatenate([self.zenith(), other.zenith()])
        return PathList(
            np.concatenate([self.delay_s, other.delay_s]),
            np.concatenate([self.aod_deg, other.aod_deg]),
            zod,
            np.concatenate([self.power_lin, other.power_lin]),
        )


class ChannelStats(NamedTuple):
    pl_db: float
    ds_s: float
    as_az_deg: float
    as_zen_deg: Optional[float] = None


class PadpGrid(NamedTuple):
    """Power over a uniform rotation-angle axis [deg] and a uniform delay
    axis [s]; ``power`` has shape (angles, delays)."""

    angles_deg: np.ndarray
    delays_s: np.ndarray
    power: np.ndarray

    @property
    def angle_step_deg(self) -> float:
        if len(self.angles_deg) < 2:
            return 360.0
        return float(self.angles_deg[1] - self.angles_deg[0])

    @property
    def delay_step_s(self) -> float:
        if len(self.delays_s) < 2:
            return 0.0
        return float(self.delays_s[1] - self.delays_s[0])


class NormalFit(NamedTuple):
    mu: float
    sigma: float
    ks_distance: float


def _require_paths(paths: PathList) -> None:
    if paths.size == 0:
        raise MalformedInputError("The path list is empty")


def padp(
    cir: Sequence[Sequence[complex]],
    angles_deg: Sequence[float],
    delay_step_s: float,
) -> PadpGrid:
    """Squared CIR magnitudes, one CIR per rotation angle.

    All CIRs share the delay axis ``k * delay_step_s``.
    """
    rows = [np.asarray(row, dtype=complex) for row in cir]
    angles = np.asarray(angles_deg, dtype=float)
    if len(rows) != len(angles):
        raise MalformedInputError(
            f"Got {len(rows)} CIRs for {len(angles)} rotation angles"
        )
    if not rows or len({len(row) for row in rows}) != 1:
        raise MalformedInputError("CIRs must be non-empty and of equal length")
    if len(angles) > 2 and not np.allclose(np.diff(angles), angles[1] - angles[0]):
        raise MalformedInputError("Rotation angles must form a uniform grid")

    power = np.abs(np.stack(rows)) ** 2
    delays = np.arange(power.shape[1]) * delay_step_s
    return PadpGrid(angles_deg=angles, delays_s=delays, power=power)


def padp_from_paths(
    paths: PathList,
    angle_step_deg: float = 5.0,
    delay_step_s: float = 1e-9,
) -> PadpGrid:
    """Bin paths onto a rotation/delay grid, each path landing on the
    nearest rotation angle and delay bin."""
    _require_paths(paths)
    n_angles = int(round(360.0 / angle_step_deg))
    angle_idx = np.rint(wrap360(paths.aod_deg) / angle_step_deg).astype(int) % n_angles
    delay_idx = np.rint(paths.delay_s / delay_step_s).astype(int)

    power = np.zeros((n_angles, delay_idx.max() + 1))
    np.add.at(power, (angle_idx, delay_idx), paths.power_lin)
    return PadpGrid(
        angles_deg=np.arange(n_angles) * angle_step_deg,
        delays_s=np.arange(power.shape[1]) * delay_step_s,
        power=power,
    )


def paths_from_padp(grid: PadpGrid, dynamic_range_db: float = 30.0) -> PathList:
    """Every PADP cell within ``dynamic_range_db`` of the peak is an
    effective path at the cell's angle and delay."""
    peak = grid.power.max() if grid.power.size else 0.0
    if peak <= 0:
        raise MalformedInputError("The PADP holds no power")
    angle_idx, delay_idx = np.nonzero(
        grid.power >= peak * 10 ** (-dynamic_range_db / 10)
    )
    return PathList.from_columns(
        delay_s=grid.delays_s[delay_idx],
        aod_deg=grid.angles_deg[angle_idx],
        power_lin=grid.power[angle_idx, delay_idx],
    )


def sounder_view(
    paths: PathList,
    angle_step_deg: float = 5.0,
    delay_step_s: float = 1e-9,
    dynamic_range_db: float = 30.0,
) -> PathList:
    """The effective paths a rotating-horn sounder would extract: binned
    onto the PADP grid, then cut to ``dynamic_range_db`` below the peak.
    Zenith information is lost."""
    return paths_from_padp(
        padp_from_paths(paths, angle_step_deg, delay_step_s), dynamic_range_db
    )


class PathLayout(NamedTuple):
    """Single-hop geometry of a path list: ``scatterers`` and ``anchors``
    have shape (P, 3), in meters."""

    scatterers: np.ndarray
    anchors: np.ndarray


def path_layout(paths: PathList, tx: Point3D = Point3D(0.0, 0.0, 0.0)) -> PathLayout:
    """Place every path as a single bounce: the scatterer sits along the
    departure direction at half the propagation distance ``c * delay``,
    its virtual anchor at the full distance."""
    _require_paths(paths)
    halfway = RpPlacement(
        distances_m=tuple(float(d) for d in SPEED_OF_LIGHT * paths.delay_s / 2),
        aod_deg=tuple(float(a) for a in paths.aod_deg),
        zod_deg=tuple(float(z) for z in paths.zenith()),
    )
    scatterers = rp_coordinates(tx, halfway)
    anchors = [virtual_anchor(tx, point) for point in scatterers]
    return PathLayout(
        scatterers=np.array(scatterers, dtype=float),
        anchors=np.array(anchors, dtype=float),
    )


def estimate_pl(paths: PathList) -> float:
    _require_paths(paths)
    return float(10 * np.log10(paths.power_lin.sum()))


def _weighted_std(values: np.ndarray, weights: np.ndarray) -> float:
    mean = np.sum(weights * values) / weights.sum()
    return float(np.sqrt(np.sum(weights * (values - mean) ** 2) / weights.sum()))


def rms_delay_spread(paths: PathList) -> float:
    _require_paths(paths)
    return _weighted_std(paths.delay_s - paths.delay_s.min(), paths.power_lin)


def _angles(paths: PathList, axis: Union[AngleKind, str]) -> np.ndarray:
    if AngleKind(axis) is AngleKind.AZIMUTH:
        return paths.aod_deg
    return paths.zenith()


def circular_angle_spread(
    paths: PathList,
    axis: Union[AngleKind, str] = AngleKind.AZIMUTH,
    grid_step_deg: Optional[float] = None,
) -> float:
    """Wrapped rms angular spread, minimized over the reference rotation.

    With ``grid_step_deg=None`` the minimum is exact: it is attained by
    one of the N ways of cutting the circle between neighbouring angles
    and reading the angles as a linear sequence, so each cut is scored
    in O(1) from prefix sums and the winner is recomputed directly.
    A number selects the plain grid search over rotations instead.
    """
    _require_paths(paths)
    angles = wrap360(_angles(paths, axis))
    weights = paths.power_lin
    if grid_step_deg is not None:
        return _grid_angle_spread(angles, weights, grid_step_deg)

    order = np.argsort(angles, kind="stable")
    sorted_angles = angles[order]
    sorted_weights = weights[order]
    n = len(sorted_angles)

    unrolled = np.concatenate([sorted_angles, sorted_angles + 360.0])
    unrolled_w = np.concatenate([sorted_weights, sorted_weights])
    # Center before squaring to keep the prefix sums well conditioned.
    centered = unrolled - 360.0
    s0 = np.concatenate([[0.0], np.cumsum(unrolled_w)])
    s1 = np.concatenate([[0.0], np.cumsum(unrolled_w * centered)])
    s2 = np.concatenate([[0.0], np.cumsum(unrolled_w * centered**2)])

    starts = np.arange(n)
    total = s0[starts + n] - s0[starts]
    mean = (s1[starts + n] - s1[starts]) / total
    variance = (s2[starts + n] - s2[starts]) / total - mean**2
    best = int(np.argmin(variance))

    window = slice(best, best + n)
    return _weighted_std(unrolled[window], unrolled_w[window])


def _grid_angle_spread(
    angles: np.ndarray, weights: np.ndarray, step_deg: float
) -> float:
    rotations = np.arange(0.0, 360.0, step_deg)[:, None]
    shifted = wrap180(angles[None, :] - rotations)
    mean = (shifted * weights).sum(axis=1, keepdims=True) / weights.sum()
    deviation = wrap180(shifted - mean)
    spread = np.sqrt((weights * deviation**2).sum(axis=1) / weights.sum())
    return float(spread.min())


def channel_stats(paths: PathList, pl_db: Optional[float] = None) -> ChannelStats:
    """PL, DS and angular spreads of a path list.

    PL is estimated from the path powers unless given; zenith spread is
    reported only when the paths carry ZoDs.
    """
    return ChannelStats(
        pl_db=estimate_pl(paths) if pl_db is None else float(pl_db),
        ds_s=rms_delay_spread(paths),
        as_az_deg=circular_angle_spread(paths, AngleKind.AZIMUTH),
        as_zen_deg=(
            circular_angle_spread(paths, AngleKind.ZENITH)
            if paths.zod_deg is not None
            else None
        ),
    )


def _log_mean(values: Sequence[float]) -> float:
    with np.errstate(divide="ignore"):
        return float(10 ** np.mean(np.log10(np.asarray(values, dtype=float))))


def mean_stats(samples: Sequence[ChannelStats]) -> ChannelStats:
    """Average statistics over realizations.

    Spreads are lognormal, so DS and AS are averaged in the log10 domain
    (``10 ** mean(log10(x))``, the median of the fitted lognormal); PL is
    already in dB and is averaged as is. A zero spread in any sample
    makes the mean zero.
    """
    if not samples:
        raise MalformedInputError("No statistics to average")
    zenith = [s.as_zen_deg for s in samples]
    return ChannelStats(
        pl_db=float(np.mean([s.pl_db for s in samples])),
        ds_s=_log_mean([s.ds_s for s in samples]),
        as_az_deg=_log_mean([s.as_az_deg for s in samples]),
        as_zen_deg=None if None in zenith else _log_mean(zenith),
    )


def normalized_error(v0: float, v: float) -> float:
    """Absolute deviation of ``v`` from the reference ``v0``, in percent."""
    if v0 <= 0:
        raise ChannelDomainError(f"Reference value must be positive, got {v0}")
    return abs(v0 - v) / v0 * 100.0


def fit_normal(samples: Sequence[float]) -> NormalFit:
    """Moment fit of a normal distribution plus the Kolmogorov-Smirnov
    distance between the samples and the fitted CDF."""
    values = np.asarray(samples, dtype=float)
    if values.size < 8:
        raise MalformedInputError(
            f"At least 8 samples are needed for a fit, got {values.size}"
        )
    mu = float(values.mean())
    sigma = float(values.std())
    if sigma == 0:
        return NormalFit(mu, 0.0, 0.0)
    ks = scipy_stats.kstest(values, "norm", args=(mu, sigma)).statistic
    return NormalFit(mu, sigma, float(ks))


def cdf_samples(values: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted samples and their empirical CDF levels."""
    ordered = np.sort(np.asarray(values, dtype=float))
    return ordered, np.arange(1, ordered.size + 1) / ordered.size


def synth_measurement(
    count: int = MEASURED_PATH_COUNT,
    stream: Optional[RandomStream] = None,
    pl_db: Optional[float] = MEASURED_PL_DB,
    delay_mean_s: float = MEASURED_DELAY_MEAN_S,
    delay_std_s: float = MEASURED_DELAY_STD_S,
    dynamic_range_db: float = 30.0,
) -> PathList:
    """A stand-in for a measured path list.

    Delays are normal (negative draws clipped to 0), AoDs uniform on
    [0, 360), ZoDs 90 degrees. Powers are log-uniform over
    ``dynamic_range_db`` and rescaled so that :func:`estimate_pl` returns
    ``pl_db`` (skipped when ``pl_db`` is None).
    """
    if count < 1:
        raise MalformedInputError(f"At least one path is required, got {count}")
    stream = stream or RandomStream(0)
    delays = stream.child(DrawSite.DELAY).generator().normal(
        delay_mean_s, delay_std_s, count
    )
    aods = stream.child(DrawSite.AOD).generator().uniform(0.0, 360.0, count)
    levels_db = -dynamic_range_db * stream.child(DrawSite.POWER).generator().random(
        count
    )
    powers = 10 ** (levels_db / 10)
    if pl_db is not None:
        powers *= 10 ** (pl_db / 10) / powers.sum()
    return PathList.from_columns(
        delay_s=np.maximum(delays, 0.0),
        aod_deg=aods,
        zod_deg=np.full(count, 90.0),
        power_lin=powers,
    )


def log10_spreads(samples: Sequence[ChannelStats]) -> Tuple[np.ndarray, np.ndarray]:
    """log10(DS / 1 s) and log10(AS / 1 deg) per sample."""
    ds = np.array([s.ds_s for s in samples])
    az = np.array([s.as_az_deg for s in samples])
    with np.errstate(divide="ignore"):
        return np.log10(ds), np.log10(az)


def spread_summary(samples: Sequence[ChannelStats]) -> dict:
    """Log-domain means and log10 standard deviations of DS and AS, plus
    the linear means and standard deviations under their own keys."""
    ds = np.array([s.ds_s for s in samples])
    az = np.array([s.as_az_deg for s in samples])
    log_ds, log_az = log10_spreads(samples)
    return {
        "ds_mean_ns": _log_mean(ds) * 1e9,
        "ds_lg_std": float(log_ds.std()),
        "as_az_mean_deg": _log_mean(az),
        "as_az_lg_std": float(log_az.std()),
        "ds_linear_mean_ns": float(ds.mean() * 1e9),
        "ds_std_ns": float(ds.std() * 1e9),
        "as_az_linear_mean_deg": float(az.mean()),
        "as_az_std_deg": float(az.std()),
        "realizations": len(samples),
    }
