"""Run configuration.

A run configuration file is YAML with up to five sections; anything
left out is taken from the packaged ``default_run.yaml``:

::

    scenario:
      table: inh_nlos        # packaged table name or path to a YAML file
      fc_ghz: 28
      overrides: {zsd_enabled: false}
    constraints: {q_min: 1, q_max: 5, delta_phi_deg: 20, ...}
    ga: {population_size: 40, w_pl: hard, w_ds: 1.0e+8, ...}
    targets: {pl_db: -80.8125, ds_ns: 32.92, as_az_deg: 89.98}
    antenna: {pattern: mrpchan.antenna.Isotropic}
"""
import copy
import importlib
from pathlib import Path
from typing import Any, Dict, Mapping, NamedTuple, Optional, Type, Union

import yaml
from marshmallow import Schema, fields, post_load
from marshmallow.validate import Range

from . import fields as mrpchan_fields
from .antenna import FieldPattern
from .core import ConstraintSet, MeasuredTargets
from .optimizer import GaConfig
from .scenario import ScenarioConfig, load_scenario

__all__ = (
    "RunConfig",
    "class_from_str",
    "load_run_config",
    "load_targets",
    "run_config_from_dict",
)

DEFAULT_RUN_CONFIG = Path(__file__).parent / "default_run.yaml"


class RunConfig(NamedTuple):
    scenario: ScenarioConfig
    constraints: ConstraintSet
    ga: GaConfig
    targets: MeasuredTargets
    field_pattern: Type[FieldPattern]
    snapshot: Dict[str, Any]


class ScenarioRefSchema(Schema):
    table = fields.String(required=True)
    fc_ghz = fields.Float(required=True, validate=Range(min=0, min_inclusive=False))
    overrides = fields.Dict(keys=fields.String(), required=True)


class ConstraintSetSchema(Schema):
    q_min = fields.Integer(required=True, validate=Range(min=1))
    q_max = fields.Integer(required=True, validate=Range(min=1))
    d_min_m = fields.Float(required=True, validate=Range(min=0))
    d_max_m = fields.Float(required=True)
    aod_min_deg = fields.Float(required=True)
    aod_max_deg = fields.Float(required=True)
    zod_min_deg = fields.Float(required=True)
    zod_max_deg = fields.Float(required=True)
    delta_d_m = fields.Float(required=True, validate=Range(min=0))
    delta_phi_deg = fields.Float(required=True, validate=Range(min=0))
    delta_theta_deg = fields.Float(required=True, validate=Range(min=0))

    @post_load
    def make_constraints(self, data, **kwargs):
        constraints = ConstraintSet(**data)
        constraints.check()
        return constraints


class GaSchema(Schema):
    max_iterations = fields.Integer(required=True, validate=Range(min=0))
    convergence_eps = fields.Float(required=True, validate=Range(min=0))
    population_size = fields.Integer(required=True, validate=Range(min=2))
    crossover_rate = fields.Float(required=True, validate=Range(min=0, max=1))
    mutation_rate = fields.Float(required=True, validate=Range(min=0, max=1))
    w_pl = mrpchan_fields.Weight(required=True)
    w_ds = mrpchan_fields.Weight(required=True)
    w_as_az = mrpchan_fields.Weight(required=True)
    w_as_zen = mrpchan_fields.Weight(required=True)
    fitness_realizations = fields.Integer(required=True, validate=Range(min=1))
    include_sf = fields.Boolean(required=True)
    top_fraction = fields.Float(
        required=True, validate=Range(min=0, max=1, min_inclusive=False)
    )
    repair_attempts = fields.Integer(required=True, validate=Range(min=1))
    init_attempts = fields.Integer(required=True, validate=Range(min=1))
    patience = fields.Integer(required=True, validate=Range(min=1))


class TargetsSchema(Schema):
    pl_db = fields.Float(required=True)
    ds_ns = fields.Float(required=True, validate=Range(min=0))
    as_az_deg = fields.Float(required=True, validate=Range(min=0))
    as_zen_deg = fields.Float(allow_none=True, validate=Range(min=0))

    @post_load
    def make_targets(self, data, **kwargs):
        targets = MeasuredTargets(
            pl_db=data["pl_db"],
            ds_s=data["ds_ns"] * 1e-9,
            as_az_deg=data["as_az_deg"],
            as_zen_deg=data.get("as_zen_deg"),
        )
        targets.check()
        return targets


class AntennaSchema(Schema):
    pattern = mrpchan_fields.ClassRef(base=FieldPattern, required=True)


class RunConfigSchema(Schema):
    scenario = fields.Nested(ScenarioRefSchema, required=True)
    constraints = fields.Nested(ConstraintSetSchema, required=True)
    ga = fields.Nested(GaSchema, required=True)
    targets = fields.Nested(TargetsSchema, required=True)
    antenna = fields.Nested(AntennaSchema, required=True)


def _deep_merge(base: Mapping[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(copy.deepcopy(base))
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _read_mapping(path: Path) -> Dict[str, Any]:
    data = yaml.safe_load(path.read_text())
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"{path} must hold a mapping, got {type(data).__name__}")
    return data


def run_config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    """Validate a complete configuration mapping (e.g. a manifest
    snapshot) and resolve the scenario table."""
    loaded = RunConfigSchema().load(data)
    scenario_ref = loaded["scenario"]
    return RunConfig(
        scenario=load_scenario(
            scenario_ref["table"], scenario_ref["fc_ghz"], scenario_ref["overrides"]
        ),
        constraints=loaded["constraints"],
        ga=GaConfig(constraints=loaded["constraints"], **loaded["ga"]),
        targets=loaded["targets"],
        field_pattern=loaded["antenna"]["pattern"],
        snapshot=copy.deepcopy(dict(data)),
    )


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Load the packaged defaults, deep-merged with the file at ``path``.

    Raises :class:`marshmallow.ValidationError` for malformed files.
    """
    data = _read_mapping(DEFAULT_RUN_CONFIG)
    if path is not None:
        data = _deep_merge(data, _read_mapping(Path(path)))
    return run_config_from_dict(data)


def load_targets(path: Union[str, Path]) -> MeasuredTargets:
    """Read targets (``pl_db``, ``ds_ns``, ``as_az_deg``, optional
    ``as_zen_deg``) from a YAML or JSON file."""
    return TargetsSchema().load(_read_mapping(Path(path)))


def class_from_str(ref: str, *, ensure_subclass: Optional[Type] = None) -> Type[object]:
    if not isinstance(ref, str) or "." not in ref:
        raise ValueError(
            f"A Python class reference must look like "
            f"`mypackage.mymodule.MyClass`, got {ref!r}"
        )
    obj = object_from_str(ref)
    if not isinstance(obj, type):
        raise ValueError(f"`{ref}` is not a class")
    if ensure_subclass is not None and (
        not issubclass(obj, ensure_subclass) or obj is ensure_subclass
    ):
        raise ValueError(f"`{obj}` is not a subclass of {ensure_subclass}")
    return obj


def object_from_str(ref: str) -> Any:
    module_s, attr_s = ref.rsplit(".", 1)
    module = importlib.import_module(module_s)
    return getattr(module, attr_s)
