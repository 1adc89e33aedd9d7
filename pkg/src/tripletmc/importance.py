"""Dynamic-norm surrogates and the harmonic importance-sampling bias."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import FermionConfig


class SectorMismatchError(ValueError):
    """The two states do not share the conserved quantum numbers."""


@dataclass(frozen=True)
class BiasParams:
    kappa: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ValueError("kappa must be nonnegative")

    @property
    def active(self) -> bool:
        return self.enabled and self.kappa > 0


def spin_exchange_norm(i: int, j: int) -> int:
    """Number of pairwise spin exchanges separating two equal-magnetization words."""
    diff = (int(i) ^ int(j)).bit_count()
    if diff & 1 or int(i).bit_count() != int(j).bit_count():
        raise SectorMismatchError("spin configurations differ in magnetization")
    return diff // 2


def fermion_norm(i: FermionConfig, j: FermionConfig) -> int:
    """Sum over spin species of half the differing occupation bits.

    This lower-bounds the number of hops between the two configurations.
    """
    total = 0
    for a, b in zip(i, j):
        if int(a).bit_count() != int(b).bit_count():
            raise SectorMismatchError("particle numbers differ")
        total += (int(a) ^ int(b)).bit_count() // 2
    return total


def bias(n: int, params: BiasParams) -> float:
    if not params.active:
        return 1.0
    try:
        return math.exp(0.5 * params.kappa * n * n)
    except OverflowError:
        return math.inf


def bias_table(max_norm: int, params: BiasParams) -> np.ndarray:
    """``bias(n)`` for ``n = 0 .. max_norm``; index it with an integer norm array."""
    n = np.arange(max_norm + 1, dtype=float)
    if not params.active:
        return np.ones_like(n)
    with np.errstate(over="ignore"):
        return np.exp(0.5 * params.kappa * n * n)
