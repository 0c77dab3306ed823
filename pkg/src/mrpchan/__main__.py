import contextlib
import logging
from typing import Iterator, Optional, Sequence

import click
from marshmallow import ValidationError

from mrpchan.config import RunConfig, load_run_config, load_targets
from mrpchan.core import (
    InfeasibleConstraintsError,
    MrpchanError,
    RpEntry,
    RpPlacement,
)
from mrpchan.monostatic import average_placement
from mrpchan.runner import REPRODUCE_ALIASES, REPRODUCE_TARGETS
from mrpchan.runner import optimize as _optimize
from mrpchan.runner import padp as _padp
from mrpchan.runner import replay as _replay
from mrpchan.runner import reproduce as _reproduce
from mrpchan.runner import simulate as _simulate
from mrpchan.runner import stats as _stats
from mrpchan.runner import synth_measure as _synth_measure

EXIT_INFEASIBLE = 3


class InfeasibleError(click.ClickException):
    exit_code = EXIT_INFEASIBLE


@contextlib.contextmanager
def reported_errors() -> Iterator[None]:
    """Turn library errors into click errors with nonzero exit codes."""
    try:
        yield
    except InfeasibleConstraintsError as e:
        raise InfeasibleError(f"Infeasible constraint `{e.constraint}`: {e}")
    except ValidationError as e:
        raise click.ClickException(f"Invalid configuration: {e.messages}")
    except (MrpchanError, OSError, ValueError) as e:
        raise click.ClickException(str(e))


def validate_rp(ctx, param, value):
    """Validate repeated ``D,AOD[,ZOD]`` RP specs."""
    entries = []
    for s in value:
        parts = s.split(",")
        try:
            numbers = [float(part) for part in parts]
        except ValueError:
            numbers = []
        if len(numbers) not in (2, 3):
            raise click.BadParameter(
                "RP should look like `distance_m,aod_deg[,zod_deg]`; "
                "'{}' doesn't match that form".format(s)
            )
        if len(numbers) == 2:
            numbers.append(90.0)
        entries.append(RpEntry(*numbers))
    return tuple(entries)


def _load_config(config_path: Optional[str]) -> RunConfig:
    with reported_errors():
        return load_run_config(config_path)


config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Run configuration YAML, merged over the packaged defaults.",
)
seed_option = click.option(
    "--seed", type=click.IntRange(min=0), default=0, show_default=True
)


@click.group()
@click.version_option()
@click.option("--verbose", "-v", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    if verbose:
        logging.basicConfig(
            level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s"
        )


@main.command()
@config_option
@seed_option
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option(
    "--realizations", type=click.IntRange(min=1), default=1, show_default=True
)
@click.option("--include-sf", is_flag=True, help="Weight sub-channels by SF too.")
@click.option(
    "--rp",
    "rps",
    multiple=True,
    callback=validate_rp,
    help="An RP as `distance_m,aod_deg[,zod_deg]`; repeat for every RP.",
)
@click.option(
    "--average",
    type=click.IntRange(min=1),
    help="Q RPs at the equal distance meeting the PL target, evenly spread.",
)
@click.option("--cir", is_flag=True, help="Also write the channel impulse responses.")
@click.option(
    "--layout",
    is_flag=True,
    help="Also write the RP coordinates and the single-hop path geometry.",
)
def simulate(
    *,
    config_path: Optional[str],
    seed: int,
    out: str,
    realizations: int,
    include_sf: bool,
    rps: Sequence[RpEntry],
    average: Optional[int],
    cir: bool,
    layout: bool,
) -> None:
    """Simulate the monostatic background channel of an RP placement.

    The placement is either given RP by RP with `--rp` or as the
    Q-RP average placement with `--average Q`.
    """
    if bool(rps) == (average is not None):
        raise click.UsageError("Pass either `--rp` (repeatable) or `--average`")
    config = _load_config(config_path)
    with reported_errors():
        if average is not None:
            placement = average_placement(
                average,
                config.targets.pl_db,
                config.scenario.fc_ghz,
                model=config.scenario.pathloss,
            )
        else:
            placement = RpPlacement.from_entries(rps)
        summary = _simulate(
            config,
            out,
            placement=placement,
            seed=seed,
            realizations=realizations,
            include_sf=include_sf,
            cir=cir,
            layout=layout,
        )
    click.echo(
        f"DS {summary['ds_mean_ns']:.2f} ns (log10 std {summary['ds_lg_std']:.3f}), "
        f"AS {summary['as_az_mean_deg']:.2f} deg "
        f"(log10 std {summary['as_az_lg_std']:.3f}) "
        f"over {summary['realizations']} realizations"
    )


@main.command()
@config_option
@seed_option
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option(
    "--targets",
    "targets_path",
    type=click.Path(exists=True, dir_okay=False),
    help="YAML or JSON with pl_db, ds_ns, as_az_deg and optional as_zen_deg.",
)
def optimize(
    *, config_path: Optional[str], seed: int, out: str, targets_path: Optional[str]
) -> None:
    """Extract the RP count and placement matching the targets."""
    config = _load_config(config_path)
    with reported_errors():
        targets = load_targets(targets_path) if targets_path else None
        result = _optimize(config, out, seed=seed, targets=targets)
    best = result.best_placement
    click.echo(
        f"Q*={best.size} after {result.generations} generations, "
        f"fitness {result.best_fitness:.6g}"
    )
    for entry in best.entries():
        click.echo(
            f"  d={entry.distance_m:.2f} m  aod={entry.aod_deg:.2f} deg  "
            f"zod={entry.zod_deg:.2f} deg"
        )


@main.command()
@config_option
@click.argument("path_list", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False))
@click.option(
    "--layout", is_flag=True, help="Also write the single-hop path geometry."
)
def stats(
    *, config_path: Optional[str], path_list: str, out: Optional[str], layout: bool
) -> None:
    """Print the PL, DS and AS of a path list CSV.

    PATH_LIST has the columns delay_ns, aod_deg, zod_deg (may be blank)
    and power_db.
    """
    if layout and out is None:
        raise click.UsageError("`--layout` needs `--out`")
    config = _load_config(config_path)
    with reported_errors():
        result = _stats(config, path_list, out, layout=layout)
    click.echo(f"PL {result.pl_db:.4f} dB")
    click.echo(f"DS {result.ds_s * 1e9:.4f} ns")
    click.echo(f"AS {result.as_az_deg:.4f} deg")
    if result.as_zen_deg is not None:
        click.echo(f"ZS {result.as_zen_deg:.4f} deg")


@main.command()
@config_option
@seed_option
@click.argument(
    "target", type=click.Choice(REPRODUCE_TARGETS + tuple(REPRODUCE_ALIASES))
)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option(
    "--realizations", type=click.IntRange(min=8), default=200, show_default=True
)
def reproduce(
    *,
    config_path: Optional[str],
    seed: int,
    target: str,
    out: str,
    realizations: int,
) -> None:
    """Regenerate a published result: the equal-distance table
    (`distances`), the DS/AS comparison (`table2`, also `spread-table`) or
    the spread CDFs with normal fits (`fig7`, also `spread-fits`)."""
    config = _load_config(config_path)
    target = REPRODUCE_ALIASES.get(target, target)
    with reported_errors():
        result = _reproduce(config, target, out, seed=seed, realizations=realizations)

    if target == "distances":
        for q, distance in result:
            click.echo(f"Q={q}: {distance:.2f} m")
    elif target == "table2":
        for row in result:
            errors = (
                ""
                if row.ds_error_pct is None
                else f"  errors {row.ds_error_pct:.2f}% / {row.as_error_pct:.2f}%"
            )
            click.echo(
                f"{row.label:>10}: DS {row.ds_ns:.2f} ns, "
                f"AS {row.as_az_deg:.2f} deg{errors}"
            )
    else:
        for fit in result:
            click.echo(
                f"{fit.label:>10}: log10 DS ~ N({fit.ds_fit.mu:.3f}, "
                f"{fit.ds_fit.sigma:.3f}) KS {fit.ds_fit.ks_distance:.3f}; "
                f"log10 AS ~ N({fit.as_az_fit.mu:.3f}, {fit.as_az_fit.sigma:.3f}) "
                f"KS {fit.as_az_fit.ks_distance:.3f}"
            )


@main.command("synth-measure")
@config_option
@seed_option
@click.option("--count", type=click.IntRange(min=1), default=302, show_default=True)
@click.option("--pl-db", type=float, default=-80.8125, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def synth_measure(
    *, config_path: Optional[str], seed: int, count: int, pl_db: float, out: str
) -> None:
    """Write a synthetic measured path list CSV."""
    config = _load_config(config_path)
    with reported_errors():
        paths = _synth_measure(config, out, count=count, pl_db=pl_db, seed=seed)
    click.echo(f"Wrote {paths.size} paths to {out}")


@main.command()
@config_option
@click.argument("path_list", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option(
    "--angle-step-deg",
    type=click.FloatRange(min=0, min_open=True),
    default=5.0,
    show_default=True,
)
@click.option(
    "--delay-step-ns",
    type=click.FloatRange(min=0, min_open=True),
    default=1.0,
    show_default=True,
)
def padp(
    *,
    config_path: Optional[str],
    path_list: str,
    out: str,
    angle_step_deg: float,
    delay_step_ns: float,
) -> None:
    """Bin a path list CSV into a power-angular-delay profile."""
    config = _load_config(config_path)
    with reported_errors():
        _padp(
            config,
            path_list,
            out,
            angle_step_deg=angle_step_deg,
            delay_step_ns=delay_step_ns,
        )
    click.echo(f"Wrote {out}")


@main.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(), required=True)
def replay(*, manifest: str, out: str) -> None:
    """Re-run the command recorded in MANIFEST, writing to OUT."""
    with reported_errors():
        _replay(manifest, out)


if __name__ == "__main__":
    main(prog_name="mrpchan")
