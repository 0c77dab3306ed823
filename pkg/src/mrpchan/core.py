"""Domain types shared by every mrpchan module.

A monostatic background channel is modelled as the superposition of
stochastic sub-channels between the co-located Tx&Rx and a handful of
reference points (RPs). An RP is described by its 3D distance, azimuth
departure angle (AoD) and zenith departure angle (ZoD), see
:class:`RpPlacement`.

Angles are stored in degrees everywhere and only converted to radians
inside trigonometric evaluation.
"""
import enum
import itertools
import math
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import constants

__all__ = (
    "SPEED_OF_LIGHT",
    "ChannelDomainError",
    "ConstraintSet",
    "DrawSite",
    "InfeasibleConstraintsError",
    "MalformedInputError",
    "MeasuredTargets",
    "MrpchanError",
    "Point3D",
    "RandomStream",
    "RpEntry",
    "RpPlacement",
    "ValidationReport",
    "Violation",
    "delays_from_distances",
    "placement_from_coordinates",
    "rp_coordinates",
    "validate_placement",
    "virtual_anchor",
    "wrap180",
    "wrap360",
)

SPEED_OF_LIGHT: float = constants.c

# Slack for float noise in bound and separation checks.
TOLERANCE = 1e-9


class MrpchanError(Exception):
    """Base class for all mrpchan errors."""


class MalformedInputError(MrpchanError, ValueError):
    """Input is empty, ragged or otherwise unusable."""


class ChannelDomainError(MrpchanError, ValueError):
    """A value is outside the mathematical domain of a channel formula."""


class InfeasibleConstraintsError(MrpchanError):
    """The constraint set cannot be satisfied within the retry budget.

    :attr:`constraint` names the constraint which failed most often.
    """

    def __init__(self, constraint: str, message: str) -> None:
        super().__init__(message)
        self.constraint = constraint


class DrawSite(enum.IntEnum):
    """Substream keys. Every random draw in the package happens under
    one of these, so streams never overlap between draw sites."""

    LSP = 1
    DELAY = 2
    POWER = 3
    AOD = 4
    ZOD = 5
    COUPLING = 6
    XPR = 7
    PHASE = 8
    EXCESS = 9
    INIT = 20
    SELECT = 21
    CROSSOVER = 22
    MUTATE = 23
    FITNESS = 24
    MEASUREMENT = 30


class RandomStream(NamedTuple):
    """Deterministic random stream addressed by a root seed and a path.

    Identical ``(root_seed, path)`` pairs produce bit-identical draws;
    distinct paths produce independent sequences.
    """

    root_seed: int
    path: Tuple[int, ...] = ()

    def child(self, *keys: int) -> "RandomStream":
        for key in keys:
            if int(key) < 0:
                raise ValueError(f"Substream keys must be nonnegative, got {key!r}")
        return self._replace(path=self.path + tuple(int(key) for key in keys))

    def generator(self) -> np.random.Generator:
        if self.root_seed < 0:
            raise ValueError(f"Root seed must be nonnegative, got {self.root_seed}")
        seed_seq = np.random.SeedSequence(self.root_seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seed_seq))


class Point3D(NamedTuple):
    x: float
    y: float
    z: float


class RpEntry(NamedTuple):
    distance_m: float
    aod_deg: float
    zod_deg: float


class RpPlacement(NamedTuple):
    """Per-RP 3D distances, AoDs and ZoDs."""

    distances_m: Tuple[float, ...]
    aod_deg: Tuple[float, ...]
    zod_deg: Tuple[float, ...]

    @classmethod
    def from_entries(
        cls, entries: Iterable[Tuple[float, float, float]]
    ) -> "RpPlacement":
        rows = [tuple(float(v) for v in entry) for entry in entries]
        if any(len(row) != 3 for row in rows):
            raise MalformedInputError(
                "Each RP entry must be a (distance, aod, zod) triple"
            )
        if not rows:
            return cls((), (), ())
        distances, aods, zods = zip(*rows)
        return cls(tuple(distances), tuple(aods), tuple(zods))

    @property
    def size(self) -> int:
        return len(self.distances_m)

    def entries(self) -> List[RpEntry]:
        self.check_shape()
        return [
            RpEntry(float(d), float(a), float(z))
            for d, a, z in zip(self.distances_m, self.aod_deg, self.zod_deg)
        ]

    def permuted(self, order: Sequence[int]) -> "RpPlacement":
        entries = self.entries()
        return RpPlacement.from_entries(entries[i] for i in order)

    def check_shape(self) -> None:
        lengths = {len(self.distances_m), len(self.aod_deg), len(self.zod_deg)}
        if len(lengths) != 1:
            raise MalformedInputError(
                f"Placement sequences differ in length: distances "
                f"{len(self.distances_m)}, aod {len(self.aod_deg)}, "
                f"zod {len(self.zod_deg)}"
            )
        if not self.distances_m:
            raise MalformedInputError("Placement must hold at least one RP")
        values = self.distances_m + self.aod_deg + self.zod_deg
        if not all(math.isfinite(v) for v in values):
            raise MalformedInputError(f"Placement holds non-finite values: {self}")


class ConstraintSet(NamedTuple):
    """Bounds and minimum separations for an RP placement.

    Defaults are the ones used for the indoor NLoS calibration: zenith
    fixed at 90 degrees, AoDs at least 20 degrees apart.
    """

    q_min: int = 1
    q_max: int = 5
    d_min_m: float = 0.1
    d_max_m: float = 100.0
    aod_min_deg: float = 0.0
    aod_max_deg: float = 360.0
    zod_min_deg: float = 90.0
    zod_max_deg: float = 90.0
    delta_d_m: float = 0.0
    delta_phi_deg: float = 20.0
    delta_theta_deg: float = 0.0

    def check(self) -> None:
        if not 1 <= self.q_min <= self.q_max:
            raise ValueError(
                f"Expected 1 <= q_min <= q_max, got q_min={self.q_min}, "
                f"q_max={self.q_max}"
            )
        for low, high in (
            ("d_min_m", "d_max_m"),
            ("aod_min_deg", "aod_max_deg"),
            ("zod_min_deg", "zod_max_deg"),
        ):
            if getattr(self, low) > getattr(self, high):
                raise ValueError(f"`{low}` must not exceed `{high}`: {self}")
        for name in ("delta_d_m", "delta_phi_deg", "delta_theta_deg"):
            if getattr(self, name) < 0:
                raise ValueError(f"`{name}` must be nonnegative: {self}")


class MeasuredTargets(NamedTuple):
    """Target channel statistics: PL [dB], DS [s], azimuth/zenith AS [deg]."""

    pl_db: float
    ds_s: float
    as_az_deg: float
    as_zen_deg: Optional[float] = None

    def check(self) -> None:
        if self.ds_s < 0:
            raise ValueError(f"Target DS must be nonnegative, got {self.ds_s}")
        for name in ("as_az_deg", "as_zen_deg"):
            value = getattr(self, name)
            if value is not None and not 0 <= value <= 360 / math.sqrt(3):
                raise ValueError(f"Target `{name}` out of range: {value}")


class Violation(NamedTuple):
    constraint: str
    indices: Tuple[int, ...]


class ValidationReport(NamedTuple):
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def constraints(self) -> Tuple[str, ...]:
        return tuple(sorted({v.constraint for v in self.violations}))


def wrap360(angle_deg):
    """Wrap angles to [0, 360)."""
    wrapped = np.mod(angle_deg, 360.0)
    # np.mod may round a tiny negative input up to exactly 360.0
    return np.where(wrapped >= 360.0, 0.0, wrapped)


def wrap180(angle_deg):
    """Wrap angles to [-180, 180)."""
    return np.mod(np.asarray(angle_deg, dtype=float) + 180.0, 360.0) - 180.0


def _circular_gap(a: float, b: float) -> float:
    diff = abs(a - b) % 360.0
    return min(diff, 360.0 - diff)


def validate_placement(p: RpPlacement, c: ConstraintSet) -> ValidationReport:
    """Check a placement against every constraint of ``c``.

    Bounds violations carry the offending RP index, separation
    violations carry the offending pair.
    """
    p.check_shape()
    violations: List[Violation] = []

    if not c.q_min <= p.size <= c.q_max:
        violations.append(Violation("q_range", ()))

    bounds = (
        ("distance_bounds", p.distances_m, c.d_min_m, c.d_max_m),
        ("aod_bounds", p.aod_deg, c.aod_min_deg, c.aod_max_deg),
        ("zod_bounds", p.zod_deg, c.zod_min_deg, c.zod_max_deg),
    )
    for name, values, low, high in bounds:
        for i, value in enumerate(values):
            if value < low - TOLERANCE or value > high + TOLERANCE:
                violations.append(Violation(name, (i,)))

    separations = (
        ("distance_separation", p.distances_m, c.delta_d_m, False),
        ("aod_separation", p.aod_deg, c.delta_phi_deg, True),
        ("zod_separation", p.zod_deg, c.delta_theta_deg, False),
    )
    for name, values, min_gap, circular in separations:
        if min_gap <= 0:
            continue
        for i, j in itertools.combinations(range(p.size), 2):
            if circular:
                gap = _circular_gap(values[i], values[j])
            else:
                gap = abs(values[i] - values[j])
            if gap < min_gap - TOLERANCE:
                violations.append(Violation(name, (i, j)))

    return ValidationReport(tuple(violations))


def rp_coordinates(tx: Point3D, p: RpPlacement) -> List[Point3D]:
    p.check_shape()
    d = np.asarray(p.distances_m, dtype=float)
    aod = np.radians(p.aod_deg)
    zod = np.radians(p.zod_deg)
    xs = tx.x + d * np.sin(zod) * np.cos(aod)
    ys = tx.y + d * np.sin(zod) * np.sin(aod)
    zs = tx.z + d * np.cos(zod)
    return [Point3D(float(x), float(y), float(z)) for x, y, z in zip(xs, ys, zs)]


def placement_from_coordinates(tx: Point3D, points: Sequence[Point3D]) -> RpPlacement:
    """Inverse of :func:`rp_coordinates` for RPs away from the Tx."""
    entries = []
    for point in points:
        dx, dy, dz = point.x - tx.x, point.y - tx.y, point.z - tx.z
        d = math.sqrt(dx * dx + dy * dy + dz * dz)
        if d == 0:
            raise ChannelDomainError(f"RP at {point} coincides with the Tx")
        aod = float(wrap360(math.degrees(math.atan2(dy, dx))))
        zod = math.degrees(math.acos(max(-1.0, min(1.0, dz / d))))
        entries.append((d, aod, zod))
    return RpPlacement.from_entries(entries)


def virtual_anchor(tx: Point3D, scatterer: Point3D) -> Point3D:
    """Mirror a single-hop scatterer so the round trip becomes a one-way
    link: the anchor sits at twice the scatterer distance."""
    return Point3D(
        2 * scatterer.x - tx.x, 2 * scatterer.y - tx.y, 2 * scatterer.z - tx.z
    )


def delays_from_distances(p: RpPlacement) -> Tuple[float, ...]:
    if any(d < 0 for d in p.distances_m):
        raise ChannelDomainError(f"Distances must be nonnegative: {p.distances_m}")
    return tuple(d / SPEED_OF_LIGHT for d in p.distances_m)
