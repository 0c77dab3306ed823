"""Compose the monostatic background channel from Q RP sub-channels."""
import math
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .antenna import AntennaArray
from .core import ChannelDomainError, MalformedInputError, RandomStream, RpPlacement
from .gbsm import (
    CirTaps,
    PathSet,
    SubChannelRealization,
    assemble_subchannel,
    render_cir,
)
from .pathloss import InhNlosPathloss, PathlossModel
from .scenario import ScenarioConfig

__all__ = (
    "ChannelRealization",
    "aggregate_pl",
    "aggregate_sf",
    "average_placement",
    "compose_channel",
    "equal_distance_for_pl",
    "path_weights",
    "render_channel_cir",
)


class ChannelRealization(NamedTuple):
    placement: RpPlacement
    subchannels: Tuple[SubChannelRealization, ...]
    pl_total_db: float
    sf_total_db: float
    weighted_paths: PathSet


def aggregate_pl(per_rp_pl_db: Sequence[float]) -> float:
    """Total gain of parallel sub-channels: the linear-domain sum."""
    values = np.asarray(per_rp_pl_db, dtype=float)
    if not values.size:
        raise MalformedInputError("Cannot aggregate an empty pathloss list")
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(np.sum(10 ** (values / 10))))


def aggregate_sf(per_rp_sf_linear: Sequence[float]) -> float:
    values = np.asarray(per_rp_sf_linear, dtype=float)
    if not values.size:
        raise MalformedInputError("Cannot aggregate an empty shadow fading list")
    if np.any(values <= 0):
        raise ChannelDomainError(f"Shadow fading must be positive: {values.tolist()}")
    return float(10 * np.log10(values.sum()))


def equal_distance_for_pl(
    q: int,
    pl_target_db: float,
    fc_ghz: float,
    model: Optional[PathlossModel] = None,
) -> float:
    """The distance at which ``q`` identical RPs aggregate to
    ``pl_target_db``."""
    if q < 1:
        raise MalformedInputError(f"At least one RP is required, got {q}")
    model = model or InhNlosPathloss()
    return model.distance_for_gain(fc_ghz, pl_target_db - 10 * math.log10(q))


def average_placement(
    q: int,
    pl_target_db: float,
    fc_ghz: float,
    zod_deg: float = 90.0,
    model: Optional[PathlossModel] = None,
) -> RpPlacement:
    """``q`` RPs at the equal distance meeting the PL target, with AoDs
    evenly spaced from 0."""
    distance = equal_distance_for_pl(q, pl_target_db, fc_ghz, model)
    return RpPlacement(
        distances_m=(distance,) * q,
        aod_deg=tuple(360.0 * k / q for k in range(q)),
        zod_deg=(float(zod_deg),) * q,
    )


def path_weights(ch: ChannelRealization, include_sf: bool = False) -> PathSet:
    """Global path weights: per-path power times the sub-channel's share
    of the total PL (and of the total SF when ``include_sf``)."""
    pl_lin = np.array([10 ** (sub.pl_db / 10) for sub in ch.subchannels])
    pl_share = pl_lin / pl_lin.sum()
    sf_lin = np.array([sub.lsp.sf_linear for sub in ch.subchannels])
    sf_share = sf_lin / sf_lin.sum()

    weighted = []
    for sub, pl_ratio, sf_ratio in zip(ch.subchannels, pl_share, sf_share):
        factor = pl_ratio * sf_ratio if include_sf else pl_ratio
        weighted.append(sub.paths._replace(power_lin=sub.paths.power_lin * factor))
    return PathSet.concat(weighted)


def compose_channel(
    placement: RpPlacement,
    sc: ScenarioConfig,
    stream: RandomStream,
    include_sf: bool = False,
    rp_keys: Optional[Sequence[int]] = None,
) -> ChannelRealization:
    """Realize one monostatic background channel.

    RP ``q`` draws from ``stream.child(rp_keys[q])`` (``q`` itself by
    default), so adding an RP never perturbs the others.
    """
    entries = placement.entries()
    if rp_keys is None:
        rp_keys = range(len(entries))
    if len(rp_keys) != len(entries):
        raise MalformedInputError(
            f"Got {len(rp_keys)} substream keys for {len(entries)} RPs"
        )

    subchannels = tuple(
        assemble_subchannel(q, entry, sc, stream.child(key))
        for q, (entry, key) in enumerate(zip(entries, rp_keys))
    )
    channel = ChannelRealization(
        placement=placement,
        subchannels=subchannels,
        pl_total_db=aggregate_pl([sub.pl_db for sub in subchannels]),
        sf_total_db=aggregate_sf([sub.lsp.sf_linear for sub in subchannels]),
        weighted_paths=PathSet.concat([sub.paths for sub in subchannels]),
    )
    return channel._replace(weighted_paths=path_weights(channel, include_sf))


def render_channel_cir(
    ch: ChannelRealization,
    fc_ghz: float,
    tx_array: AntennaArray,
    rx_array: AntennaArray,
    t: float = 0.0,
) -> CirTaps:
    """Superpose the sub-channel CIRs, each scaled by the square root of
    its own linear PL and SF."""
    scales = [
        math.sqrt(10 ** (sub.pl_db / 10) * sub.lsp.sf_linear) for sub in ch.subchannels
    ]
    return render_cir(
        ch.subchannels, tx_array, rx_array, fc_ghz, t, amplitude_scales=scales
    )
