"""Propellant accounting ``m(t) = m(0) + int c1 |f| dt``."""

from dataclasses import dataclass

import numpy as np

from .. import algebra as dqa
from ..errors import ContractError

C1 = 1.3e-3  # kg / (N s)


@dataclass(frozen=True)
class FuelModel:
    c1: float = C1
    m0: float = 0.0

    def __post_init__(self):
        if not self.c1 > 0:
            raise ContractError("c1 must be positive")


def fuel_consumed(t, wrench, model=FuelModel()):
    """Cumulative propellant use (kg) by trapezoidal quadrature of ``c1 |f|``.

    ``|f|`` is the scalar norm of the whole dual wrench.
    """
    t = np.asarray(t, dtype=float)
    rate = model.c1 * dqa.norm(wrench)
    out = np.zeros_like(t)
    if t.size > 1:
        out[1:] = np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))
    return out


def fuel_mass(t, wrench, model=FuelModel()):
    return model.m0 + fuel_consumed(t, wrench, model)
