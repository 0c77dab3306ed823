"""Scenario tables.

A scenario table is a YAML mapping of the GBSM parameters for one
propagation scenario. Any numeric value may be a jinja2 expression in
``fc`` (carrier frequency in GHz), evaluated once at load time:

::

    lg_ds_mu: "-0.28 * log10(1 + max(fc, 6)) - 7.173"

Tables shipped with the package live in ``mrpchan/scenarios/`` and are
addressed by name (``inh_nlos``); any other value is treated as a path
to a YAML file.
"""
from pathlib import Path
from typing import Any, Dict, Mapping, NamedTuple, Optional, Tuple, Union

import yaml
from marshmallow import Schema, fields

from . import fields as mrpchan_fields
from .core import SPEED_OF_LIGHT
from .pathloss import PathlossModel

__all__ = ("ScenarioConfig", "load_scenario", "scenario_table_path")

SCENARIOS_DIR = Path(__file__).parent / "scenarios"


class ScenarioConfig(NamedTuple):
    name: str
    fc_ghz: float
    pathloss: PathlossModel
    n_clusters: int
    m_rays: int
    r_tau: float
    cluster_shadow_db: float
    c_asd_deg: float
    c_zsd_deg: float
    lg_ds_mu: float
    lg_ds_sigma: float
    lg_asd_mu: float
    lg_asd_sigma: float
    lg_zsd_mu: float
    lg_zsd_sigma: float
    asd_max_deg: float
    zsd_max_deg: float
    zsd_enabled: bool
    sf_sigma_db: float
    xpr_mu_db: float
    xpr_sigma_db: float
    c_phi: float
    c_theta: float
    ray_offset_table: Tuple[float, ...]
    excess_delay_enabled: bool
    excess_delay_lg_mu: float
    excess_delay_lg_sigma: float

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / (self.fc_ghz * 1e9)

    def check(self) -> None:
        if self.fc_ghz <= 0:
            raise ValueError(f"Carrier frequency must be positive: {self.fc_ghz}")
        if self.n_clusters < 1 or self.m_rays < 1:
            raise ValueError(
                f"Expected at least one cluster and one ray, got "
                f"N={self.n_clusters}, M={self.m_rays}"
            )
        if self.r_tau <= 1:
            raise ValueError(f"Delay scaling factor must exceed 1: {self.r_tau}")
        if len(self.ray_offset_table) != self.m_rays:
            raise ValueError(
                f"`ray_offset_table` must hold {self.m_rays} offsets, "
                f"got {len(self.ray_offset_table)}"
            )
        for name in _SIGMAS:
            if getattr(self, name) < 0:
                raise ValueError(f"`{name}` must be nonnegative: {getattr(self, name)}")


_SIGMAS = (
    "cluster_shadow_db",
    "c_asd_deg",
    "c_zsd_deg",
    "lg_ds_sigma",
    "lg_asd_sigma",
    "lg_zsd_sigma",
    "sf_sigma_db",
    "xpr_sigma_db",
    "excess_delay_lg_sigma",
)


class ScenarioTableSchema(Schema):
    name = fields.String(required=True)
    pathloss_model = mrpchan_fields.ClassRef(base=PathlossModel, required=True)
    n_clusters = fields.Integer(required=True)
    m_rays = fields.Integer(required=True)
    r_tau = mrpchan_fields.Expression(required=True)
    cluster_shadow_db = mrpchan_fields.Expression(required=True)
    c_asd_deg = mrpchan_fields.Expression(required=True)
    c_zsd_deg = mrpchan_fields.Expression(required=True)
    lg_ds_mu = mrpchan_fields.Expression(required=True)
    lg_ds_sigma = mrpchan_fields.Expression(required=True)
    lg_asd_mu = mrpchan_fields.Expression(required=True)
    lg_asd_sigma = mrpchan_fields.Expression(required=True)
    lg_zsd_mu = mrpchan_fields.Expression(required=True)
    lg_zsd_sigma = mrpchan_fields.Expression(required=True)
    asd_max_deg = mrpchan_fields.Expression(required=True)
    zsd_max_deg = mrpchan_fields.Expression(required=True)
    zsd_enabled = fields.Boolean(required=True)
    sf_sigma_db = mrpchan_fields.Expression(required=True)
    xpr_mu_db = mrpchan_fields.Expression(required=True)
    xpr_sigma_db = mrpchan_fields.Expression(required=True)
    c_phi = mrpchan_fields.Expression(required=True)
    c_theta = mrpchan_fields.Expression(required=True)
    ray_offset_table = fields.List(fields.Float(), required=True)
    excess_delay_enabled = fields.Boolean(required=True)
    excess_delay_lg_mu = mrpchan_fields.Expression(required=True)
    excess_delay_lg_sigma = mrpchan_fields.Expression(required=True)


def scenario_table_path(table: Union[str, Path]) -> Path:
    packaged = SCENARIOS_DIR / f"{table}.yaml"
    if isinstance(table, str) and "/" not in table and packaged.exists():
        return packaged
    path = Path(table)
    if not path.exists():
        raise ValueError(
            f"Unknown scenario table {str(table)!r}: neither a packaged table "
            f"nor an existing file"
        )
    return path


def load_scenario(
    table: Union[str, Path] = "inh_nlos",
    fc_ghz: float = 28.0,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ScenarioConfig:
    """Load a scenario table and evaluate it at ``fc_ghz``.

    ``overrides`` replace table entries before validation, so they accept
    the same values (numbers or expressions) as the table itself.

    Raises :class:`marshmallow.ValidationError` for malformed tables and
    :class:`ValueError` for values out of their range.
    """
    raw = yaml.safe_load(scenario_table_path(table).read_text())
    if not isinstance(raw, dict):
        raise ValueError(f"Scenario table {str(table)!r} must be a mapping")
    loaded: Dict[str, Any] = ScenarioTableSchema().load({**raw, **(overrides or {})})

    values: Dict[str, Any] = {}
    for key, value in loaded.items():
        if key == "pathloss_model":
            values["pathloss"] = value()
        elif callable(value):
            values[key] = value(fc_ghz)
        else:
            values[key] = value
    values["ray_offset_table"] = tuple(values["ray_offset_table"])

    scenario = ScenarioConfig(fc_ghz=float(fc_ghz), **values)
    scenario.check()
    return scenario
