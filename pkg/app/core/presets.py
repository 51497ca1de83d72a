"""Named Monte Carlo experiments and the YAML experiment file loader.

Level presets build an ExperimentSpec (one CSV row per cell), sweep presets
build a PowerSpec (one CSV row per swept value). Replication counts default
to 2000 and are usually lowered with ``--reps``.
"""
from typing import Callable, Dict, List, Union
from pathlib import Path
import logging

import numpy as np
import yaml
from pydantic import ValidationError

from app.core.errors import ConfigurationError
from app.schemas.excess import Side
from app.schemas.simulation import (
    BandwidthMode,
    ErrorModel,
    ErrorModelName,
    ExperimentCell,
    ExperimentSpec,
    MeanModel,
    PowerSpec,
)

logger = logging.getLogger(__name__)

Experiment = Union[ExperimentSpec, PowerSpec]

PRESET_REPS = 2000

# (mean, c) pairs with T_c^+ = Delta at the boundary of the null hypothesis
BOUNDARY_LEVELS = {
    0.3: {"a": 1.82, "b": 1.672},
    0.15: {"a": 1.955, "b": 1.78},
}
LEVEL_MODELS = [("a", "I"), ("b", "I"), ("a", "II"), ("b", "II")]
BANDWIDTH_OFFSETS = [-0.05, 0.0, 0.05]
H_D_VALUES = [0.0224, 0.0112, 0.0056]


def _cell(mean: str, error: str, **kwargs) -> ExperimentCell:
    return ExperimentCell(
        mean=MeanModel(name=mean),
        error=ErrorModel(name=ErrorModelName(error)),
        reps=kwargs.pop("reps", PRESET_REPS),
        **kwargs,
    )


def table1() -> ExperimentSpec:
    """Bias and sd of the excess estimators at c = 1.8"""
    cells = [_cell(mean, error, n=500, level_c=1.8) for mean, error in
             [("a", "I"), ("a", "II"), ("b", "I"), ("b", "II")]]
    return ExperimentSpec(name="table1", cells=cells)


def table2() -> ExperimentSpec:
    """Level at the boundary of the null, n = 500, GCV bandwidth"""
    cells = [
        _cell(mean, error, n=500, level_c=BOUNDARY_LEVELS[delta][mean], delta=delta)
        for delta in (0.3, 0.15)
        for mean, error in LEVEL_MODELS
    ]
    return ExperimentSpec(name="table2", cells=cells)


def table2_full() -> ExperimentSpec:
    """Level at the boundary for n in {200, 500} and GCV bandwidth shifted by -0.05, 0, +0.05"""
    cells = [
        _cell(mean, error, n=n, level_c=BOUNDARY_LEVELS[delta][mean], delta=delta, b_offset=offset)
        for n in (200, 500)
        for delta in (0.3, 0.15)
        for offset in BANDWIDTH_OFFSETS
        for mean, error in LEVEL_MODELS
    ]
    return ExperimentSpec(name="table2-full", cells=cells)


def table3() -> ExperimentSpec:
    """Sensitivity of the level to h_d"""
    cells = [
        _cell(mean, error, n=500, level_c=BOUNDARY_LEVELS[delta][mean], delta=delta, h_d=h_d)
        for delta in (0.3, 0.15)
        for h_d in H_D_VALUES
        for mean, error in LEVEL_MODELS
    ]
    return ExperimentSpec(name="table3", cells=cells)


def _fixed_cell(**kwargs) -> ExperimentCell:
    defaults = dict(n=500, level_c=1.82, delta=0.3, alpha=0.1,
                    b_mode=BandwidthMode.FIXED, bandwidth=0.2)
    defaults.update(kwargs)
    return _cell("a", "I", **defaults)


def fig3_left() -> PowerSpec:
    """Rejection rate against Delta at c = 1.82"""
    values = [round(v, 2) for v in np.linspace(0.05, 0.4, 8)]
    return PowerSpec(name="fig3-left", base=_fixed_cell(), parameter="delta", values=values)


def fig3_right() -> PowerSpec:
    """Rejection rate against c at Delta = 0.3"""
    values = [round(v, 2) for v in np.linspace(1.44, 2.0, 8)]
    return PowerSpec(name="fig3-right", base=_fixed_cell(), parameter="c", values=values)


def fig4() -> PowerSpec:
    """Power against the parabola coefficient a, boundary at a = 8"""
    values = [round(v, 2) for v in np.linspace(7.5, 9.5, 9)]
    return PowerSpec(name="fig4", base=_fixed_cell(), parameter="a", values=values)


def _comparison(mean: str) -> PowerSpec:
    base = ExperimentCell(
        mean=MeanModel(name=mean),
        error=ErrorModel(name=ErrorModelName.IID, scale=0.25),
        n=500,
        level_c=1.0,
        delta=0.1,
        alpha=0.1,
        side=Side.TWO_SIDED,
        reps=PRESET_REPS,
    )
    values = [round(v, 3) for v in np.linspace(0.5, 2.75, 10)]
    return PowerSpec(name=f"fig5-{mean}", base=base, parameter="c", values=values)


PRESETS: Dict[str, Callable[[], Experiment]] = {
    "table1": table1,
    "table2": table2,
    "table2-full": table2_full,
    "table3": table3,
    "fig3-left": fig3_left,
    "fig3-right": fig3_right,
    "fig4": fig4,
    "fig5-III": lambda: _comparison("III"),
    "fig5-IV": lambda: _comparison("IV"),
}


def available_presets() -> List[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> Experiment:
    """Build a named experiment"""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown preset '{name}'. Available: {', '.join(available_presets())}",
            details={"preset": name},
        ) from None
    return factory()


def _expand_values(raw) -> List[float]:
    """Explicit list, or {start, stop, num} for an evenly spaced grid"""
    if isinstance(raw, dict):
        try:
            return [float(v) for v in np.linspace(float(raw["start"]), float(raw["stop"]), int(raw["num"]))]
        except KeyError as e:
            raise ConfigurationError(f"Value grid is missing '{e.args[0]}'") from None
    return [float(v) for v in raw]


def load_experiment_file(path: Union[str, Path]) -> Experiment:
    """Read a YAML experiment description.

    A file with ``cells`` describes a level experiment; a file with ``base``,
    ``parameter`` and ``values`` describes a power sweep.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Experiment file not found: {path}")

    try:
        with open(path, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Malformed YAML in {path}: {e}") from None

    if not isinstance(document, dict):
        raise ConfigurationError(f"Experiment file {path} must contain a mapping")

    name = str(document.get("name", path.stem))
    try:
        if "cells" in document:
            spec = ExperimentSpec(name=name, cells=document["cells"])
        elif "base" in document:
            spec = PowerSpec(
                name=name,
                base=document["base"],
                parameter=document.get("parameter"),
                values=_expand_values(document.get("values", [])),
            )
        else:
            raise ConfigurationError(f"Experiment file {path} needs 'cells' or 'base'")
    except ValidationError as e:
        raise ConfigurationError(
            f"Invalid experiment description in {path}",
            details={"errors": [{"loc": list(err["loc"]), "msg": err["msg"]} for err in e.errors()]},
        ) from None

    logger.info(f"Loaded experiment '{name}' from {path}")
    return spec
