"""Key-point losses, consistency losses, and the composite objective.

Consumes already-computed reconstructions and key-point predictions as
plain values; no model code lives here, which keeps the objective testable
in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .loss import masked_mse
from .volume import KeyPointSet, PatchMask, Volume3D


@dataclass(frozen=True)
class LossWeights:
    """Mixing weights (l1, l2, l3) of the composite objective.

    Constraints: 0 <= l1 <= 1, 0 <= l2 <= 0.5 (so 1 - 2*l2 >= 0), l3 >= 0.
    """

    l1: float = 0.5
    l2: float = 0.1
    l3: float = 0.1

    def __post_init__(self):
        for name in ("l1", "l2", "l3"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (0.0 <= self.l1 <= 1.0):
            raise ConfigError(f"l1 must be in [0, 1], got {self.l1}")
        if not (0.0 <= self.l2 <= 0.5):
            raise ConfigError(f"l2 must be in [0, 0.5], got {self.l2}")
        if not (self.l3 >= 0.0):
            raise ConfigError(f"l3 must be >= 0, got {self.l3}")

    def coefficients(self) -> tuple[float, ...]:
        """The eight term coefficients, in LossBreakdown field order."""
        a, b, c = self.l1, self.l2, self.l3
        return (
            (1.0 - a) * (1.0 - 2.0 * b),
            (1.0 - a) * b,
            (1.0 - a) * b,
            a * (1.0 - 2.0 * b),
            a * b,
            a * b,
            c,
            c,
        )


_TERM_FIELDS = (
    "mse_vit",
    "topo_vit",
    "spa_vit",
    "mse_unetrpp",
    "topo_unetrpp",
    "spa_unetrpp",
    "spa_consis",
    "rec_consis",
)


@dataclass(frozen=True)
class LossBreakdown:
    """The eight raw objective terms plus their weighted total."""

    mse_vit: float
    topo_vit: float
    spa_vit: float
    mse_unetrpp: float
    topo_unetrpp: float
    spa_unetrpp: float
    spa_consis: float
    rec_consis: float
    total: float

    def terms(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in _TERM_FIELDS)


def spatial_loss(p: KeyPointSet, q: KeyPointSet) -> float:
    """Mean squared difference over all 27 key-point coordinates."""
    a = p.as_array()
    b = q.as_array()
    d = (a - b).ravel()
    return float(np.dot(d, d) / d.size)


def spatial_consistency(p: KeyPointSet, q: KeyPointSet) -> float:
    """Same contract as spatial_loss, applied to two predicted sets."""
    return spatial_loss(p, q)


def rec_consistency(recon_a: Volume3D, recon_b: Volume3D, mask: PatchMask) -> float:
    """Masked-patch MSE between two reconstructions of the same input."""
    return masked_mse(recon_a, recon_b, mask)


def overall_loss(
    mse_vit: float,
    topo_vit: float,
    spa_vit: float,
    mse_unetrpp: float,
    topo_unetrpp: float,
    spa_unetrpp: float,
    spa_consis: float,
    rec_consis: float,
    weights: LossWeights | None = None,
) -> LossBreakdown:
    """Combines the eight terms into the weighted composite objective.

    total = (1-l1)(1-2*l2)*mse_vit + (1-l1)*l2*topo_vit + (1-l1)*l2*spa_vit
          + l1*(1-2*l2)*mse_unetrpp + l1*l2*topo_unetrpp + l1*l2*spa_unetrpp
          + l3*spa_consis + l3*rec_consis

    Raises:
        ConfigError: invalid weights or a negative term.
    """
    w = weights if weights is not None else LossWeights()
    terms = (
        mse_vit,
        topo_vit,
        spa_vit,
        mse_unetrpp,
        topo_unetrpp,
        spa_unetrpp,
        spa_consis,
        rec_consis,
    )
    vals = []
    for name, t in zip(_TERM_FIELDS, terms):
        tf = float(t)
        if tf < 0.0:
            raise ConfigError(f"loss term {name} must be non-negative, got {tf}")
        vals.append(tf)
    total = 0.0
    for c, t in zip(w.coefficients(), vals):
        total += c * t
    return LossBreakdown(*vals, total=total)
