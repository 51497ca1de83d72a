"""Mean functions and tvAR(1) coefficient functions of the simulation models"""
from typing import Callable, Dict
import math

import numpy as np

MeanFunction = Callable[[np.ndarray], np.ndarray]

# Location of the jump of the step model inside its unspecified middle third
STEP_JUMP = 0.5
STEP_HEIGHT = 2.5


def parabola(a_coef: float = 8.0) -> MeanFunction:
    """a(-(t - 0.5)^2 + 0.25); a = 8 is model (a)"""
    def mean(t):
        t = np.asarray(t, dtype=float)
        return a_coef * (-(t - 0.5) ** 2 + 0.25)
    return mean


def kinked_sine(t):
    """Model (b): sin(2|t - 0.6| pi)(1 + 0.4 t)"""
    t = np.asarray(t, dtype=float)
    return np.sin(2.0 * np.abs(t - 0.6) * math.pi) * (1.0 + 0.4 * t)


def half_sine(t):
    """Model (III): 2.5 sin(pi t)"""
    t = np.asarray(t, dtype=float)
    return 2.5 * np.sin(math.pi * t)


def step(t):
    """Model (IV): 0 before the jump, 2.5 after"""
    t = np.asarray(t, dtype=float)
    return np.where(t < STEP_JUMP, 0.0, STEP_HEIGHT)


def flat(t):
    return np.zeros_like(np.asarray(t, dtype=float))


MEAN_FUNCTIONS: Dict[str, Callable[..., MeanFunction]] = {
    "a": lambda a_coef=None: parabola(8.0 if a_coef is None else a_coef),
    "parametric": lambda a_coef=None: parabola(8.0 if a_coef is None else a_coef),
    "b": lambda a_coef=None: kinked_sine,
    "III": lambda a_coef=None: half_sine,
    "IV": lambda a_coef=None: step,
    "flat": lambda a_coef=None: flat,
}


def coefficient_model_one(t):
    """tvAR coefficient 0.25|sin(2 pi t)|"""
    t = np.asarray(t, dtype=float)
    return 0.25 * np.abs(np.sin(2.0 * math.pi * t))


def coefficient_model_two(t):
    """tvAR coefficient 0.6(1 - 4(t - 0.5)^2)"""
    t = np.asarray(t, dtype=float)
    return 0.6 * (1.0 - 4.0 * (t - 0.5) ** 2)


def constant_coefficient(phi: float) -> MeanFunction:
    def coefficient(t):
        return np.full_like(np.asarray(t, dtype=float), phi)
    return coefficient


# Suprema over [0, 1], used for the truncation length of the MA representation
COEFFICIENT_SUPREMA = {"I": 0.25, "II": 0.6}
