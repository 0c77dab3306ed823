"""One stochastic Tx&Rx -> RP sub-channel, generated with the standard
GBSM flow: large-scale parameters, cluster delays, cluster powers,
cluster angles, rays, per-path polarization draws.

Every function which draws random numbers takes the
:class:`~mrpchan.core.RandomStream` of its own draw site;
:func:`assemble_subchannel` derives one substream per
:class:`~mrpchan.core.DrawSite` from the RP stream it receives.
"""
import enum
import math
from typing import Iterator, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .antenna import AntennaArray, spherical_unit_vector
from .core import (
    SPEED_OF_LIGHT,
    ChannelDomainError,
    DrawSite,
    MalformedInputError,
    RandomStream,
    RpEntry,
    wrap360,
)
from .pathloss import pathloss_inh_nlos
from .scenario import ScenarioConfig

__all__ = (
    "AngleKind",
    "CirTaps",
    "LspDraw",
    "PathRecord",
    "PathSet",
    "SubChannelRealization",
    "assemble_subchannel",
    "delays_from_uniforms",
    "draw_lsps",
    "gen_cluster_angles",
    "gen_cluster_delays",
    "gen_cluster_powers",
    "lsps_from_normals",
    "pathloss_inh_nlos",
    "render_cir",
)


class AngleKind(str, enum.Enum):
    AZIMUTH = "azimuth"
    ZENITH = "zenith"


class LspDraw(NamedTuple):
    ds_s: float
    asd_deg: float
    zsd_deg: float
    sf_linear: float


class PathRecord(NamedTuple):
    abs_delay_s: float
    aod_deg: float
    zod_deg: float
    aoa_deg: float
    zoa_deg: float
    power_lin: float
    xpr_lin: float
    phases: Tuple[float, float, float, float]
    doppler_hz: float
    rp_index: int
    cluster_index: int
    ray_index: int


class PathSet(NamedTuple):
    """Paths stored column-wise; ``phases`` has shape (P, 4) in the order
    theta-theta, theta-phi, phi-theta, phi-phi."""

    abs_delay_s: np.ndarray
    aod_deg: np.ndarray
    zod_deg: np.ndarray
    aoa_deg: np.ndarray
    zoa_deg: np.ndarray
    power_lin: np.ndarray
    xpr_lin: np.ndarray
    phases: np.ndarray
    doppler_hz: np.ndarray
    rp_index: np.ndarray
    cluster_index: np.ndarray
    ray_index: np.ndarray

    @property
    def size(self) -> int:
        return len(self.power_lin)

    def records(self) -> Iterator[PathRecord]:
        for i in range(self.size):
            yield PathRecord(
                abs_delay_s=float(self.abs_delay_s[i]),
                aod_deg=float(self.aod_deg[i]),
                zod_deg=float(self.zod_deg[i]),
                aoa_deg=float(self.aoa_deg[i]),
                zoa_deg=float(self.zoa_deg[i]),
                power_lin=float(self.power_lin[i]),
                xpr_lin=float(self.xpr_lin[i]),
                phases=tuple(float(v) for v in self.phases[i]),  # type: ignore
                doppler_hz=float(self.doppler_hz[i]),
                rp_index=int(self.rp_index[i]),
                cluster_index=int(self.cluster_index[i]),
                ray_index=int(self.ray_index[i]),
            )

    @classmethod
    def concat(cls, path_sets: Sequence["PathSet"]) -> "PathSet":
        if not path_sets:
            raise MalformedInputError("Nothing to concatenate")
        return cls(*(np.concatenate(columns) for columns in zip(*path_sets)))


class SubChannelRealization(NamedTuple):
    rp_index: int
    lsp: LspDraw
    pl_db: float
    paths: PathSet
    excess_delay_s: float


class CirTaps(NamedTuple):
    """One tap per path: ``coefficients`` has shape (U, S, P) for U
    receive and S transmit elements."""

    delays_s: np.ndarray
    coefficients: np.ndarray


def lsps_from_normals(sc: ScenarioConfig, normals: Sequence[float]) -> LspDraw:
    """Map four standard normal deviates to (DS, ASD, ZSD, SF)."""
    z_ds, z_asd, z_zsd, z_sf = normals
    return LspDraw(
        ds_s=10 ** (sc.lg_ds_mu + sc.lg_ds_sigma * z_ds),
        asd_deg=min(10 ** (sc.lg_asd_mu + sc.lg_asd_sigma * z_asd), sc.asd_max_deg),
        zsd_deg=min(10 ** (sc.lg_zsd_mu + sc.lg_zsd_sigma * z_zsd), sc.zsd_max_deg),
        sf_linear=10 ** (sc.sf_sigma_db * z_sf / 10),
    )


def draw_lsps(sc: ScenarioConfig, stream: RandomStream) -> LspDraw:
    # Independent draws: no cross-correlation between DS, ASD, ZSD and SF.
    return lsps_from_normals(sc, stream.generator().standard_normal(4))


def delays_from_uniforms(
    ds_s: float, r_tau: float, uniforms: Union[Sequence[float], np.ndarray]
) -> np.ndarray:
    """Exponential delay law for uniforms in (0, 1]: sorted, shifted so
    the first cluster arrives at 0."""
    delays = np.sort(-r_tau * ds_s * np.log(np.asarray(uniforms, dtype=float)))
    return delays - delays[0]


def gen_cluster_delays(
    ds_s: float, sc: ScenarioConfig, stream: RandomStream
) -> np.ndarray:
    if ds_s <= 0:
        raise ChannelDomainError(f"Delay spread must be positive, got {ds_s}")
    uniforms = 1.0 - stream.generator().random(sc.n_clusters)
    return delays_from_uniforms(ds_s, sc.r_tau, uniforms)


def gen_cluster_powers(
    delays: np.ndarray, ds_s: float, sc: ScenarioConfig, stream: RandomStream
) -> np.ndarray:
    if ds_s <= 0:
        raise ChannelDomainError(f"Delay spread must be positive, got {ds_s}")
    delays = np.asarray(delays, dtype=float)
    shadowing_db = sc.cluster_shadow_db * stream.generator().standard_normal(
        len(delays)
    )
    powers = np.exp(-delays * (sc.r_tau - 1) / (sc.r_tau * ds_s)) * 10 ** (
        -shadowing_db / 10
    )
    return powers / powers.sum()


def gen_cluster_angles(
    spread_deg: float,
    powers: np.ndarray,
    center_deg: float,
    kind: Union[AngleKind, str],
    sc: ScenarioConfig,
    stream: RandomStream,
) -> np.ndarray:
    """Cluster angles around ``center_deg``: inverse Gaussian mapping for
    azimuth, inverse Laplacian for zenith, each with a random sign and a
    Gaussian perturbation of one seventh of the spread."""
    if spread_deg <= 0:
        raise ChannelDomainError(f"Angular spread must be positive, got {spread_deg}")
    kind = AngleKind(kind)
    powers = np.asarray(powers, dtype=float)
    relative = np.maximum(powers / powers.max(), np.finfo(float).tiny)

    rng = stream.generator()
    signs = rng.integers(0, 2, len(powers)) * 2 - 1
    perturbation = rng.standard_normal(len(powers)) * spread_deg / 7

    if kind is AngleKind.AZIMUTH:
        base = 2 * (spread_deg / 1.4) * np.sqrt(-np.log(relative)) / sc.c_phi
        return wrap360(signs * base + perturbation + center_deg)
    base = -spread_deg * np.log(relative) / sc.c_theta
    return np.clip(signs * base + perturbation + center_deg, 0.0, 180.0)


def assemble_subchannel(
    q: int,
    placement_entry: Union[RpEntry, Tuple[float, float, float]],
    sc: ScenarioConfig,
    stream: RandomStream,
) -> SubChannelRealization:
    """Generate the sub-channel between the Tx&Rx and RP ``q``.

    Arrival angles equal departure angles: the RP stands in for the
    receiver co-located with the transmitter.
    """
    distance_m, aod_deg, zod_deg = placement_entry
    n, m = sc.n_clusters, sc.m_rays
    pl_db = sc.pathloss.gain_db(sc.fc_ghz, distance_m)

    lsp = draw_lsps(sc, stream.child(DrawSite.LSP))
    delays = gen_cluster_delays(lsp.ds_s, sc, stream.child(DrawSite.DELAY))
    powers = gen_cluster_powers(delays, lsp.ds_s, sc, stream.child(DrawSite.POWER))
    cluster_aod = gen_cluster_angles(
        lsp.asd_deg,
        powers,
        aod_deg,
        AngleKind.AZIMUTH,
        sc,
        stream.child(DrawSite.AOD),
    )

    offsets = np.asarray(sc.ray_offset_table, dtype=float)
    ray_aod = wrap360(cluster_aod[:, None] + sc.c_asd_deg * offsets[None, :])

    if sc.zsd_enabled:
        cluster_zod = gen_cluster_angles(
            lsp.zsd_deg,
            powers,
            zod_deg,
            AngleKind.ZENITH,
            sc,
            stream.child(DrawSite.ZOD),
        )
        # Random coupling of zenith offsets to the azimuth rays.
        coupling_rng = stream.child(DrawSite.COUPLING).generator()
        coupled = np.stack([offsets[coupling_rng.permutation(m)] for _ in range(n)])
        ray_zod = np.clip(cluster_zod[:, None] + sc.c_zsd_deg * coupled, 0.0, 180.0)
    else:
        ray_zod = np.full((n, m), float(zod_deg))

    xpr_db = stream.child(DrawSite.XPR).generator().normal(
        sc.xpr_mu_db, sc.xpr_sigma_db, (n, m)
    )
    phases = stream.child(DrawSite.PHASE).generator().uniform(0, 2 * math.pi, (n, m, 4))

    excess_delay_s = 0.0
    if sc.excess_delay_enabled:
        excess_delay_s = 10 ** stream.child(DrawSite.EXCESS).generator().normal(
            sc.excess_delay_lg_mu, sc.excess_delay_lg_sigma
        )

    abs_delay = delays[:, None] + distance_m / SPEED_OF_LIGHT + excess_delay_s
    aod = ray_aod.ravel()
    zod = ray_zod.ravel()
    paths = PathSet(
        abs_delay_s=np.repeat(abs_delay, m, axis=1).ravel(),
        aod_deg=aod,
        zod_deg=zod,
        aoa_deg=aod.copy(),
        zoa_deg=zod.copy(),
        power_lin=np.repeat(powers / m, m),
        xpr_lin=10 ** (xpr_db.ravel() / 10),
        phases=phases.reshape(n * m, 4),
        doppler_hz=np.zeros(n * m),
        rp_index=np.full(n * m, q),
        cluster_index=np.repeat(np.arange(n), m),
        ray_index=np.tile(np.arange(m), n),
    )
    return SubChannelRealization(
        rp_index=q,
        lsp=lsp,
        pl_db=pl_db,
        paths=paths,
        excess_delay_s=float(excess_delay_s),
    )


def render_cir(
    subchannels: Sequence[SubChannelRealization],
    tx_array: AntennaArray,
    rx_array: AntennaArray,
    fc_ghz: float,
    t: float = 0.0,
    amplitude_scales: Optional[Sequence[float]] = None,
) -> CirTaps:
    """Complex tap per path and per (receive, transmit) element pair.

    Each tap combines the polarization matrix with the element field
    patterns at both ends, the array phase terms and the Doppler term.
    ``amplitude_scales`` multiplies the taps of each sub-channel.
    """
    if amplitude_scales is None:
        amplitude_scales = [1.0] * len(subchannels)
    if len(amplitude_scales) != len(subchannels):
        raise MalformedInputError(
            f"Got {len(amplitude_scales)} amplitude scales for "
            f"{len(subchannels)} sub-channels"
        )
    if not subchannels:
        raise MalformedInputError("No sub-channels to render")

    paths = PathSet.concat([sub.paths for sub in subchannels])
    scales = np.concatenate(
        [
            np.full(sub.paths.size, float(scale))
            for sub, scale in zip(subchannels, amplitude_scales)
        ]
    )
    wavelength = SPEED_OF_LIGHT / (fc_ghz * 1e9)

    rx_theta, rx_phi = rx_array.fields(paths.zoa_deg, paths.aoa_deg)  # (U, P)
    tx_theta, tx_phi = tx_array.fields(paths.zod_deg, paths.aod_deg)  # (S, P)

    cross = np.sqrt(1.0 / paths.xpr_lin)
    phase_terms = np.exp(1j * paths.phases)  # (P, 4)
    m_tt = phase_terms[:, 0]
    m_tp = cross * phase_terms[:, 1]
    m_pt = cross * phase_terms[:, 2]
    m_pp = phase_terms[:, 3]

    # [F_rx_theta, F_rx_phi] @ M @ [F_tx_theta, F_tx_phi]^T for each (u, s, p)
    theta_row = m_tt * tx_theta[None, :, :] + m_tp * tx_phi[None, :, :]
    phi_row = m_pt * tx_theta[None, :, :] + m_pp * tx_phi[None, :, :]
    polar = rx_theta[:, None, :] * theta_row + rx_phi[:, None, :] * phi_row

    rx_hat = spherical_unit_vector(paths.zoa_deg, paths.aoa_deg)  # (P, 3)
    tx_hat = spherical_unit_vector(paths.zod_deg, paths.aod_deg)
    rx_phase = np.exp(2j * np.pi * (rx_array.positions_m @ rx_hat.T) / wavelength)
    tx_phase = np.exp(2j * np.pi * (tx_array.positions_m @ tx_hat.T) / wavelength)
    doppler = np.exp(2j * np.pi * paths.doppler_hz * t)

    amplitude = scales * np.sqrt(paths.power_lin) * doppler
    coefficients = (
        amplitude[None, None, :]
        * polar
        * rx_phase[:, None, :]
        * tx_phase[None, :, :]
    )
    return CirTaps(delays_s=paths.abs_delay_s.copy(), coefficients=coefficients)
