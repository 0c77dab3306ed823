import math
import numbers
from typing import Callable, Optional, Type

import jinja2
from marshmallow import ValidationError, fields

env = jinja2.Environment(undefined=jinja2.StrictUndefined)
env.globals.update(
    log10=math.log10, log=math.log, sqrt=math.sqrt, exp=math.exp, max=max, min=min
)

ExpressionFunc = Callable[[float], float]


def _constant(value: float) -> ExpressionFunc:
    return lambda fc: value


def compile_expression(source: str) -> ExpressionFunc:
    """Compile a jinja2 expression in the carrier frequency ``fc`` [GHz]."""
    try:
        expression = env.compile_expression(source, undefined_to_none=False)
    except jinja2.TemplateSyntaxError as exc:
        raise ValidationError(f"Unable to compile expression {source!r}: {exc}")

    def evaluate(fc: float) -> float:
        try:
            return float(expression(fc=fc))
        except (jinja2.UndefinedError, ArithmeticError, TypeError, ValueError) as exc:
            raise ValueError(f"Unable to evaluate {source!r} at fc={fc}: {exc}")

    return evaluate


class Expression(fields.Field):
    """A number or a frequency-dependent expression string.

    Deserializes to a callable taking the carrier frequency in GHz.
    """

    def _serialize(self, value, attr, obj, **kwargs):
        raise NotImplementedError

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, bool):
            raise ValidationError("A number or an expression string is expected")
        if isinstance(value, numbers.Real):
            return _constant(float(value))
        if isinstance(value, str):
            return compile_expression(value)
        raise ValidationError("A number or an expression string is expected")


class ClassRef(fields.Field):
    """Dotted path to a subclass of ``base``."""

    def __init__(self, base: Optional[Type] = None, **kwargs) -> None:
        super().__init__(**kwargs)
        self.base = base

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return f"{value.__module__}.{value.__qualname__}"

    def _deserialize(self, value, attr, data, **kwargs):
        from .config import class_from_str

        try:
            return class_from_str(value, ensure_subclass=self.base)
        except (ValueError, ImportError, AttributeError) as exc:
            raise ValidationError(str(exc))


class Weight(fields.Field):
    """A nonnegative fitness weight, or ``hard`` for an equality constraint."""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is not None and math.isinf(value):
            return "hard"
        return value

    def _deserialize(self, value, attr, data, **kwargs):
        if value == "hard":
            return math.inf
        if isinstance(value, bool) or not isinstance(value, numbers.Real):
            raise ValidationError('A number or "hard" is expected')
        if not 0 <= value < math.inf:
            raise ValidationError(f"Weights must be finite and nonnegative: {value}")
        return float(value)
