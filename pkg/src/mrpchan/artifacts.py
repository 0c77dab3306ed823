"""Reading and writing of CSV and JSON artifacts.

Numbers are written in fixed formats with units in the column names, so
re-running a command with the same inputs yields byte-identical files.
"""
import json
import logging
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from .core import MalformedInputError, Point3D, RpPlacement, rp_coordinates
from .gbsm import CirTaps, PathSet
from .monostatic import ChannelRealization
from .optimizer import OptimizationResult
from .stats import ChannelStats, PadpGrid, PathLayout, PathList

__all__ = (
    "read_path_list",
    "stats_to_dict",
    "write_channel_paths",
    "write_channel_summary",
    "write_cir",
    "write_csv",
    "write_json",
    "write_layout",
    "write_optimization_result",
    "write_padp",
    "write_path_list",
    "write_rp_coordinates",
)

logger = logging.getLogger("mrpchan")

FLOAT_FORMAT = "%.9f"
PATH_LIST_COLUMNS = ("delay_ns", "aod_deg", "zod_deg", "power_db")

PathLike = Union[str, Path]


def write_csv(path: PathLike, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("wrote %s", path)
    return path


def write_json(path: PathLike, data: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    logger.debug("wrote %s", path)
    return path


def stats_to_dict(stats: ChannelStats) -> dict:
    return {
        "pl_db": stats.pl_db,
        "ds_ns": stats.ds_s * 1e9,
        "as_az_deg": stats.as_az_deg,
        "as_zen_deg": stats.as_zen_deg,
    }


def write_channel_paths(path: PathLike, paths: PathSet) -> Path:
    """One row per weighted path."""
    frame = pd.DataFrame(
        {
            "rp": paths.rp_index,
            "cluster": paths.cluster_index,
            "ray": paths.ray_index,
            "abs_delay_ns": paths.abs_delay_s * 1e9,
            "aod_deg": paths.aod_deg,
            "zod_deg": paths.zod_deg,
            "power_lin": paths.power_lin,
        }
    )
    # Weights span many decades: keep them in scientific notation.
    frame["power_lin"] = frame["power_lin"].map("{:.9e}".format)
    return write_csv(path, frame)


def write_channel_summary(path: PathLike, channel: ChannelRealization) -> Path:
    return write_json(
        path,
        {
            "pl_total_db": channel.pl_total_db,
            "sf_total_db": channel.sf_total_db,
            "q": channel.placement.size,
        },
    )


def write_cir(path: PathLike, taps: CirTaps) -> Path:
    """Long-form CIR: one row per (rx element, tx element, tap)."""
    u, s, p = taps.coefficients.shape
    rx, tx, tap = np.meshgrid(np.arange(u), np.arange(s), np.arange(p), indexing="ij")
    coefficients = taps.coefficients.ravel()
    frame = pd.DataFrame(
        {
            "rx": rx.ravel(),
            "tx": tx.ravel(),
            "delay_ns": taps.delays_s[tap.ravel()] * 1e9,
            "real": coefficients.real,
            "imag": coefficients.imag,
        }
    )
    for column in ("real", "imag"):
        frame[column] = frame[column].map("{:.9e}".format)
    return write_csv(path, frame)


def write_path_list(path: PathLike, paths: PathList) -> Path:
    frame = pd.DataFrame(
        {
            "delay_ns": paths.delay_s * 1e9,
            "aod_deg": paths.aod_deg,
            "zod_deg": paths.zenith(),
            "power_db": 10 * np.log10(paths.power_lin),
        }
    )
    return write_csv(path, frame)


def write_layout(path: PathLike, paths: PathList, layout: PathLayout) -> Path:
    """One row per path: the path itself plus its scatterer and virtual
    anchor coordinates."""
    frame = pd.DataFrame(
        {
            "delay_ns": paths.delay_s * 1e9,
            "aod_deg": paths.aod_deg,
            "zod_deg": paths.zenith(),
            "power_db": 10 * np.log10(paths.power_lin),
        }
    )
    for name, points in (("scatterer", layout.scatterers), ("anchor", layout.anchors)):
        for axis, column in zip("xyz", points.T):
            frame[f"{name}_{axis}_m"] = column
    return write_csv(path, frame)


def write_rp_coordinates(
    path: PathLike, placement: RpPlacement, tx: Point3D = Point3D(0.0, 0.0, 0.0)
) -> Path:
    points = rp_coordinates(tx, placement)
    frame = pd.DataFrame(points, columns=["x_m", "y_m", "z_m"])
    frame.insert(0, "rp", np.arange(len(points)))
    return write_csv(path, frame)


def read_path_list(path: PathLike) -> PathList:
    """Read a ``delay_ns,aod_deg,zod_deg,power_db`` CSV.

    A blank ``zod_deg`` means 90 degrees. Rows with unparseable, missing
    or out-of-range values are reported by line number.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise MalformedInputError(f"{path}: the file is empty")
    missing = [c for c in PATH_LIST_COLUMNS if c != "zod_deg" and c not in frame]
    if missing:
        raise MalformedInputError(f"{path}: missing columns {', '.join(missing)}")
    if "zod_deg" not in frame:
        frame["zod_deg"] = ""
    if frame.empty:
        raise MalformedInputError(f"{path}: no paths")

    zod_text = frame["zod_deg"].str.strip()
    values = {
        column: pd.to_numeric(frame[column].str.strip(), errors="coerce")
        for column in ("delay_ns", "aod_deg", "power_db")
    }
    values["zod_deg"] = pd.to_numeric(
        zod_text.where(zod_text != "", "90"), errors="coerce"
    )

    bad = np.zeros(len(frame), dtype=bool)
    for column, series in values.items():
        bad |= ~np.isfinite(series.to_numpy(dtype=float))
    bad |= values["delay_ns"].to_numpy(dtype=float) < 0
    if bad.any():
        # +2: one for the header, one for 1-based numbering
        lines = ", ".join(str(i + 2) for i in np.flatnonzero(bad))
        raise MalformedInputError(f"{path}: malformed rows at lines {lines}")

    return PathList.from_columns(
        delay_s=values["delay_ns"].to_numpy(dtype=float) * 1e-9,
        aod_deg=values["aod_deg"].to_numpy(dtype=float),
        zod_deg=values["zod_deg"].to_numpy(dtype=float),
        power_lin=10 ** (values["power_db"].to_numpy(dtype=float) / 10),
    )


def write_padp(path: PathLike, grid: PadpGrid) -> Path:
    """Long-form PADP, nonzero cells only."""
    angle_idx, delay_idx = np.nonzero(grid.power)
    frame = pd.DataFrame(
        {
            "angle_deg": grid.angles_deg[angle_idx],
            "delay_ns": grid.delays_s[delay_idx] * 1e9,
            "power_db": 10 * np.log10(grid.power[angle_idx, delay_idx]),
        }
    )
    return write_csv(path, frame)


def write_optimization_result(
    out_dir: PathLike, result: OptimizationResult
) -> Sequence[Path]:
    out_dir = Path(out_dir)
    best = result.best_placement
    summary = {
        "q": best.size,
        "best_placement": {
            "distances_m": list(best.distances_m),
            "aod_deg": list(best.aod_deg),
            "zod_deg": list(best.zod_deg),
        },
        "best_fitness": result.best_fitness,
        "best_stats": stats_to_dict(result.best_stats),
        "generations": result.generations,
        "fitness_trace": list(result.fitness_trace),
    }
    trace = pd.DataFrame(
        {
            "generation": np.arange(len(result.fitness_trace)),
            "best_fitness": result.fitness_trace,
            "mean_fitness": result.mean_fitness_trace,
        }
    )
    rows = []
    for rank, ranked in enumerate(result.top_individuals, start=1):
        for slot, entry in enumerate(ranked.placement.entries()):
            rows.append(
                {
                    "rank": rank,
                    "slot": slot,
                    "distance_m": entry.distance_m,
                    "aod_deg": entry.aod_deg,
                    "zod_deg": entry.zod_deg,
                    "fitness": ranked.fitness,
                }
            )
    top = pd.DataFrame(
        rows,
        columns=["rank", "slot", "distance_m", "aod_deg", "zod_deg", "fitness"],
    )
    return [
        write_json(out_dir / "result.json", summary),
        write_csv(out_dir / "fitness_trace.csv", trace),
        write_csv(out_dir / "top_individuals.csv", top),
    ]
