"""Exact feedback linearization of the rocket plants.

Both plants become the double integrator

    dp/dt = v,   dv/dt = b * w,   y = p,   b = -vbar/m0

under the input map u = g(v) * w, where

    classical:     g(v) = exp(-v/vbar)
    relativistic:  g(v) = [(c - v)/(c + v)]^(c/(2 vbar)) * (1 - v^2/c^2)^(-3/2)

The map is smooth and invertible for |v| < c (everywhere for the classical
plant), so the relativistic plant is linearizable wherever it can be.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .dynamics import RocketParams, _finite, check_speed


@dataclass(frozen=True)
class LinearStateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def b(self) -> float:
        return float(self.B[1, 0])


@dataclass(frozen=True)
class CompensatorGain:
    """Multiplier ``g`` such that u = g * w."""

    g: float

    def __float__(self):
        return self.g


def log_compensator_gain(v: float, params: RocketParams) -> float:
    v = check_speed(v, params)
    return K.log_compensator(v, params.kernel_model, params.c, params.vbar, params.half_exponent)


def compensator_gain(v: float, params: RocketParams) -> CompensatorGain:
    return CompensatorGain(math.exp(log_compensator_gain(v, params)))


def to_physical(w: float, v: float, params: RocketParams) -> float:
    """Mass rate u = g(v) * w commanded for a virtual input ``w``."""
    w = _finite(w, "w")
    return compensator_gain(v, params).g * w


def to_virtual(u: float, v: float, params: RocketParams) -> float:
    """Virtual input w = u / g(v) equivalent to the mass rate ``u``."""
    u = _finite(u, "u")
    return u / compensator_gain(v, params).g


def linearized_system(params: RocketParams) -> LinearStateSpace:
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [params.b]])
    C = np.array([[1.0, 0.0]])
    return LinearStateSpace(A, B, C)
