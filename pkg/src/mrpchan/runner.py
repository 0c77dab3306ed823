"""Drivers behind the ``mrpchan`` commands.

Every driver is a pure function of its configuration and seed, writes
its artifacts plus a ``manifest.json`` and returns what the command
reports. :func:`replay` re-runs a driver from a manifest.
"""
import functools
import json
import logging
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Union

import click
import numpy as np
import pandas as pd

from .antenna import AntennaArray
from .artifacts import (
    read_path_list,
    stats_to_dict,
    write_channel_paths,
    write_channel_summary,
    write_cir,
    write_csv,
    write_json,
    write_layout,
    write_optimization_result,
    write_padp,
    write_path_list,
    write_rp_coordinates,
)
from .config import RunConfig, run_config_from_dict
from .core import MalformedInputError, MeasuredTargets, RandomStream, RpPlacement
from .monostatic import ChannelRealization, compose_channel, render_channel_cir
from .optimizer import OptimizationResult, run_ga
from .reproduce import (
    SPREAD_REFERENCE_LOG10,
    ComparisonRow,
    SpreadFit,
    compare_spreads,
    equal_distances,
    spread_fits,
)
from .stats import (
    MEASURED_PATH_COUNT,
    MEASURED_PL_DB,
    ChannelStats,
    PathList,
    cdf_samples,
    channel_stats,
    log10_spreads,
    mean_stats,
    padp_from_paths,
    path_layout,
    sounder_view,
    spread_summary,
    synth_measurement,
)

__all__ = (
    "MANIFEST_NAME",
    "REPRODUCE_ALIASES",
    "REPRODUCE_TARGETS",
    "RunManifest",
    "absolute_paths",
    "optimize",
    "padp",
    "read_manifest",
    "replay",
    "reproduce",
    "simulate",
    "stats",
    "synth_measure",
    "tool_version",
)

logger = logging.getLogger("mrpchan")

MANIFEST_NAME = "manifest.json"
REPRODUCE_TARGETS = ("distances", "table2", "fig7")
# Descriptive names accepted for the targets above.
REPRODUCE_ALIASES = {"spread-table": "table2", "spread-fits": "fig7"}

PathLike = Union[str, Path]


class RunManifest(NamedTuple):
    command: str
    params: Dict[str, Any]
    config: Dict[str, Any]
    root_seed: int
    artifacts: List[str]
    tool_version: str

    def to_dict(self) -> Dict[str, Any]:
        return self._asdict()


def tool_version() -> str:
    try:
        return metadata.version("mrpchan")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "unknown"


def _manifest_path(out: Path, is_file: bool) -> Path:
    if is_file:
        return out.with_name(out.name + ".manifest.json")
    return out / MANIFEST_NAME


def _write_manifest(
    manifest_path: Path,
    command: str,
    params: Mapping[str, Any],
    config: RunConfig,
    seed: int,
    artifacts: Sequence[Path],
) -> RunManifest:
    base = manifest_path.parent.resolve()
    manifest = RunManifest(
        command=command,
        params=dict(params),
        config=config.snapshot,
        root_seed=seed,
        artifacts=sorted(str(p.resolve().relative_to(base)) for p in artifacts),
        tool_version=tool_version(),
    )
    write_json(manifest_path, manifest.to_dict())
    return manifest


def read_manifest(path: PathLike) -> RunManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return RunManifest(**data)
    except (json.JSONDecodeError, TypeError) as e:
        raise MalformedInputError(f"{path} is not a run manifest: {e}") from e


def _placement_to_dict(placement: RpPlacement) -> Dict[str, List[float]]:
    return {
        "distances_m": [float(d) for d in placement.distances_m],
        "aod_deg": [float(a) for a in placement.aod_deg],
        "zod_deg": [float(z) for z in placement.zod_deg],
    }


def _placement_from_dict(data: Mapping[str, Sequence[float]]) -> RpPlacement:
    placement = RpPlacement(
        distances_m=tuple(data["distances_m"]),
        aod_deg=tuple(data["aod_deg"]),
        zod_deg=tuple(data["zod_deg"]),
    )
    placement.check_shape()
    return placement


def _stats_frame(
    samples: Sequence[ChannelStats], channels: Sequence[ChannelRealization]
) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "realization": np.arange(len(samples)),
            "q": [ch.placement.size for ch in channels],
            "pl_total_db": [ch.pl_total_db for ch in channels],
            "sf_total_db": [ch.sf_total_db for ch in channels],
            "ds_ns": [s.ds_s * 1e9 for s in samples],
            "as_az_deg": [s.as_az_deg for s in samples],
            "as_zen_deg": [s.as_zen_deg for s in samples],
        }
    )


def _cdf_frame(samples: Sequence[ChannelStats]) -> pd.DataFrame:
    log_ds, log_as = log10_spreads(samples)
    sorted_ds, levels = cdf_samples(log_ds)
    sorted_as, _ = cdf_samples(log_as)
    return pd.DataFrame(
        {"cdf": levels, "log10_ds_s": sorted_ds, "log10_as_az_deg": sorted_as}
    )


def absolute_paths(channel: ChannelRealization, include_sf: bool = False) -> PathList:
    """The paths of every sub-channel at absolute power: each RP's paths
    scaled by its own linear PL (and SF with ``include_sf``)."""
    per_rp = [
        PathList.from_path_set(sub.paths).scaled(
            10 ** (sub.pl_db / 10) * (sub.lsp.sf_linear if include_sf else 1.0)
        )
        for sub in channel.subchannels
    ]
    return functools.reduce(PathList.merged, per_rp)


def simulate(
    config: RunConfig,
    out_dir: PathLike,
    *,
    placement: RpPlacement,
    seed: int = 0,
    realizations: int = 1,
    include_sf: bool = False,
    cir: bool = False,
    layout: bool = False,
) -> Dict[str, Any]:
    """Realize the channel of ``placement`` ``realizations`` times.

    Writes ``paths/realization_NNNN.csv`` (weighted paths) with a
    ``.json`` summary of the realization's total PL, SF and RP count,
    ``stats.csv``, ``cdf_samples.csv`` and ``summary.json``; with ``cir``
    also ``cir/realization_NNNN.csv`` for single-element arrays of the
    configured field pattern; with ``layout`` the RP coordinates in
    ``layout/rps.csv`` and, per realization, the scatterers and virtual
    anchors of the paths a sounder would extract in
    ``layout/realization_NNNN.csv``. Returns the summary.
    """
    if realizations < 1:
        raise MalformedInputError(f"At least one realization, got {realizations}")
    placement.check_shape()
    out = Path(out_dir)
    sc = config.scenario
    root = RandomStream(seed)
    array = AntennaArray.single(config.field_pattern())

    artifacts: List[Path] = []
    samples = []
    channels = []
    if layout:
        artifacts.append(write_rp_coordinates(out / "layout" / "rps.csv", placement))
    for r in range(realizations):
        channel = compose_channel(placement, sc, root.child(r), include_sf)
        channels.append(channel)
        paths = PathList.from_path_set(channel.weighted_paths)
        samples.append(channel_stats(paths, pl_db=channel.pl_total_db))
        name = f"realization_{r:04d}"
        artifacts += [
            write_channel_paths(out / "paths" / f"{name}.csv", channel.weighted_paths),
            write_channel_summary(out / "paths" / f"{name}.json", channel),
        ]
        if cir:
            taps = render_channel_cir(channel, sc.fc_ghz, array, array)
            artifacts.append(write_cir(out / "cir" / f"{name}.csv", taps))
        if layout:
            seen = sounder_view(absolute_paths(channel, include_sf))
            artifacts.append(
                write_layout(out / "layout" / f"{name}.csv", seen, path_layout(seen))
            )

    summary = {
        **spread_summary(samples),
        "q": placement.size,
        "mean": stats_to_dict(mean_stats(samples)),
        "placement": _placement_to_dict(placement),
    }
    artifacts += [
        write_csv(out / "stats.csv", _stats_frame(samples, channels)),
        write_csv(out / "cdf_samples.csv", _cdf_frame(samples)),
        write_json(out / "summary.json", summary),
    ]
    params = {
        "placement": _placement_to_dict(placement),
        "realizations": realizations,
        "include_sf": include_sf,
        "cir": cir,
        "layout": layout,
    }
    _write_manifest(
        _manifest_path(out, False), "simulate", params, config, seed, artifacts
    )
    return summary


def _targets_to_dict(targets: MeasuredTargets) -> Dict[str, Any]:
    return {
        "pl_db": targets.pl_db,
        "ds_s": targets.ds_s,
        "as_az_deg": targets.as_az_deg,
        "as_zen_deg": targets.as_zen_deg,
    }


def optimize(
    config: RunConfig,
    out_dir: PathLike,
    *,
    seed: int = 0,
    targets: Optional[MeasuredTargets] = None,
) -> OptimizationResult:
    """Run the GA against ``targets`` (the configured ones by default).

    Writes ``result.json``, ``fitness_trace.csv`` and
    ``top_individuals.csv``.
    """
    out = Path(out_dir)
    targets = targets or config.targets
    cfg = config.ga._replace(root_seed=seed)
    result = run_ga(cfg, targets, config.scenario)
    artifacts = write_optimization_result(out, result)
    params = {"targets": _targets_to_dict(targets)}
    _write_manifest(
        _manifest_path(out, False), "optimize", params, config, seed, artifacts
    )
    return result


def stats(
    config: RunConfig,
    path_list: PathLike,
    out_dir: Optional[PathLike] = None,
    *,
    layout: bool = False,
) -> ChannelStats:
    """PL, DS and AS of a path list CSV, written to ``stats.json`` when
    ``out_dir`` is given; ``layout`` adds the single-hop geometry of the
    paths in ``layout.csv``."""
    paths = read_path_list(path_list)
    result = channel_stats(paths)
    if out_dir is not None:
        out = Path(out_dir)
        artifacts = [write_json(out / "stats.json", stats_to_dict(result))]
        if layout:
            layout_path = out / "layout.csv"
            artifacts.append(write_layout(layout_path, paths, path_layout(paths)))
        params = {"path_list": str(Path(path_list).resolve()), "layout": layout}
        _write_manifest(
            _manifest_path(out, False), "stats", params, config, 0, artifacts
        )
    return result


def synth_measure(
    config: RunConfig,
    out_path: PathLike,
    *,
    count: int = MEASURED_PATH_COUNT,
    pl_db: Optional[float] = MEASURED_PL_DB,
    seed: int = 0,
) -> PathList:
    """Write a synthetic measured path list to ``out_path``."""
    out = Path(out_path)
    paths = synth_measurement(count=count, stream=RandomStream(seed), pl_db=pl_db)
    artifact = write_path_list(out, paths)
    params = {"count": count, "pl_db": pl_db}
    _write_manifest(
        _manifest_path(out, True), "synth_measure", params, config, seed, [artifact]
    )
    return paths


def padp(
    config: RunConfig,
    path_list: PathLike,
    out_path: PathLike,
    *,
    angle_step_deg: float = 5.0,
    delay_step_ns: float = 1.0,
) -> Path:
    """Bin a path list CSV onto a rotation/delay grid and write the
    nonzero cells."""
    out = Path(out_path)
    grid = padp_from_paths(
        read_path_list(path_list), angle_step_deg, delay_step_ns * 1e-9
    )
    artifact = write_padp(out, grid)
    params = {
        "path_list": str(Path(path_list).resolve()),
        "angle_step_deg": angle_step_deg,
        "delay_step_ns": delay_step_ns,
    }
    _write_manifest(_manifest_path(out, True), "padp", params, config, 0, [artifact])
    return artifact


def _comparison_frame(rows: Sequence[ComparisonRow]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=ComparisonRow._fields)


def _fits_frames(fits: Sequence[SpreadFit]):
    cdf_rows = []
    fit_rows = []
    for fit in fits:
        for quantity, values, normal in (
            ("log10_ds_s", fit.log10_ds, fit.ds_fit),
            ("log10_as_az_deg", fit.log10_as_az, fit.as_az_fit),
        ):
            ordered, levels = cdf_samples(values)
            cdf_rows.append(
                pd.DataFrame(
                    {
                        "placement": fit.label,
                        "quantity": quantity,
                        "value": ordered,
                        "cdf": levels,
                    }
                )
            )
            fit_rows.append(
                {
                    "placement": fit.label,
                    "quantity": quantity,
                    "mu": normal.mu,
                    "sigma": normal.sigma,
                    "ks_distance": normal.ks_distance,
                }
            )
    return pd.concat(cdf_rows, ignore_index=True), pd.DataFrame(fit_rows)


def reproduce(
    config: RunConfig,
    target: str,
    out_dir: PathLike,
    *,
    seed: int = 0,
    realizations: int = 200,
) -> Any:
    """Regenerate one of the published results.

    ``distances`` returns ``[(q, distance_m)]``, ``table2`` (alias
    ``spread-table``) the comparison rows and ``fig7`` (alias
    ``spread-fits``) the spread fits.
    """
    target = REPRODUCE_ALIASES.get(target, target)
    if target not in REPRODUCE_TARGETS:
        raise MalformedInputError(
            f"Unknown reproduction target {target!r}, expected one of "
            f"{', '.join(REPRODUCE_TARGETS + tuple(REPRODUCE_ALIASES))}"
        )
    out = Path(out_dir)
    sc, targets = config.scenario, config.targets
    artifacts: List[Path]
    result: Any
    if target == "distances":
        result = equal_distances(targets, sc)
        frame = pd.DataFrame(result, columns=["q", "distance_m"])
        artifacts = [write_csv(out / "distances.csv", frame)]
    elif target == "table2":
        result = compare_spreads(targets, sc, seed, realizations)
        artifacts = [write_csv(out / "spread_table.csv", _comparison_frame(result))]
    else:
        result = spread_fits(targets, sc, seed, realizations)
        cdf_frame, fit_frame = _fits_frames(result)
        artifacts = [
            write_csv(out / "spread_cdf.csv", cdf_frame),
            write_csv(out / "spread_fits.csv", fit_frame),
            write_json(
                out / "spread_reference.json",
                {
                    "log10_ds_s": SPREAD_REFERENCE_LOG10[0],
                    "log10_as_az_deg": SPREAD_REFERENCE_LOG10[1],
                },
            ),
        ]
    params = {"target": target, "realizations": realizations}
    _write_manifest(
        _manifest_path(out, False), "reproduce", params, config, seed, artifacts
    )
    return result


def replay(manifest_path: PathLike, out: PathLike) -> RunManifest:
    """Re-run the command recorded in a manifest, writing to ``out`` (a
    directory, or a file for ``synth_measure`` and ``padp``)."""
    manifest = read_manifest(manifest_path)
    config = run_config_from_dict(manifest.config)
    params, seed = manifest.params, manifest.root_seed
    logger.info("replaying %s from %s", manifest.command, manifest_path)

    if manifest.command == "simulate":
        simulate(
            config,
            out,
            placement=_placement_from_dict(params["placement"]),
            seed=seed,
            realizations=params["realizations"],
            include_sf=params["include_sf"],
            cir=params["cir"],
            layout=params.get("layout", False),
        )
    elif manifest.command == "optimize":
        t = params["targets"]
        targets = MeasuredTargets(
            pl_db=t["pl_db"],
            ds_s=t["ds_s"],
            as_az_deg=t["as_az_deg"],
            as_zen_deg=t["as_zen_deg"],
        )
        optimize(config, out, seed=seed, targets=targets)
    elif manifest.command == "stats":
        stats(
            config, params["path_list"], out, layout=params.get("layout", False)
        )
    elif manifest.command == "synth_measure":
        synth_measure(
            config, out, count=params["count"], pl_db=params["pl_db"], seed=seed
        )
    elif manifest.command == "padp":
        padp(
            config,
            params["path_list"],
            out,
            angle_step_deg=params["angle_step_deg"],
            delay_step_ns=params["delay_step_ns"],
        )
    elif manifest.command == "reproduce":
        reproduce(
            config,
            params["target"],
            out,
            seed=seed,
            realizations=params["realizations"],
        )
    else:
        raise MalformedInputError(f"Cannot replay command {manifest.command!r}")
    click.echo(f"Replayed `{manifest.command}` into {out}", err=True)
    return manifest
