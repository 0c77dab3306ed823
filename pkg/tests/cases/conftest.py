from contextlib import ExitStack
from typing import Any, List, Optional

import numpy as np
import pytest
import yaml

from mrpchan.config import class_from_str, object_from_str


def pytest_collect_file(parent, file_path):
    # https://docs.pytest.org/en/latest/example/nonpython.html
    if file_path.suffix == ".yml" and file_path.name.startswith("test"):
        return YamlFile.from_parent(parent, path=file_path)


class YamlFile(pytest.File):
    def collect(self):
        spec = yaml.safe_load(self.path.open())
        operation = spec["operation"]
        testcases = spec["testcases"]

        for testcase in testcases:
            yield YamlItem.from_parent(
                self, name=testcase["name"], operation=operation, testcase=testcase
            )


class YamlItem(pytest.Item):
    def __init__(self, *, operation, testcase, **kwargs):
        super().__init__(**kwargs)
        self.operation = operation
        self.testcase = testcase

    def runtest(self):
        run_operation_test(
            operation=self.operation,
            args=self.testcase.get("args", []),
            out=self.testcase.get("out"),
            abs_tol=self.testcase.get("abs", 1e-9),
            raises=self.testcase.get("raises"),
        )

    def reportinfo(self):
        return self.path, 0, f"name: {self.name}"


def build_arg(arg: Any) -> Any:
    """Plain YAML values pass through; ``{type: dotted.path, value: [...]}``
    calls the referenced class or factory with ``value``."""
    if isinstance(arg, dict) and "type" in arg:
        return _resolve(arg["type"])(*arg.get("value", []))
    return arg


def _resolve(ref: str) -> Any:
    """Like ``object_from_str`` but also follows nested attributes such as
    ``package.module.Class.factory``."""
    parts = ref.split(".")
    for i in range(len(parts) - 1, 0, -1):
        try:
            obj = object_from_str(".".join(parts[: i + 1]))
        except (ImportError, AttributeError):
            continue
        for attr in parts[i + 1 :]:
            obj = getattr(obj, attr)
        return obj
    return object_from_str(ref)


def run_operation_test(
    operation: str,
    args: List[Any],
    out: Optional[Any],
    abs_tol: float,
    raises: Optional[str],
):
    func = object_from_str(operation)
    raises_cls = class_from_str(raises) if raises is not None else None
    with ExitStack() as stack:
        if raises_cls is not None:
            assert out is None
            stack.enter_context(pytest.raises(raises_cls))

        result = func(*[build_arg(arg) for arg in args])

        np.testing.assert_allclose(
            np.ravel(np.asarray(result, dtype=float)),
            np.ravel(np.asarray(out, dtype=float)),
            rtol=0,
            atol=abs_tol,
        )
