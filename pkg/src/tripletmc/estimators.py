"""Ensemble observables and error analysis of correlated loop series."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_SERIES = 64
RELIABLE_BINS = 32


def trace_estimate(ensemble) -> float:
    """Sum of the weights of diagonal triplets."""
    return float(ensemble.c[ensemble.ket == ensemble.bra].sum())


def energy_numerator(ensemble, model) -> float:
    return float(np.dot(ensemble.c, model.element_codes(ensemble.ket, ensemble.bra)))


def expectation(ensemble, model, observable: str = "H") -> tuple[float, float]:
    """``(sum_n c_n a_{ket,bra}, sum_n c_n delta_{ket,bra})`` for ``H`` or the identity.

    The ratio is left to the caller so numerators and denominators can be
    averaged separately over loops.
    """
    den = trace_estimate(ensemble)
    if observable == "H":
        return energy_numerator(ensemble, model), den
    if observable in ("I", "identity"):
        return den, den
    raise ValueError(f"unsupported observable {observable!r}")


@dataclass
class BinningResult:
    mean: float
    naive_error: float
    binned_error: float
    correlation_time_estimate: float
    bin_levels: list[tuple[int, float]] = field(default_factory=list)
    reliable: list[bool] = field(default_factory=list)


def binning_analysis(series) -> BinningResult:
    """Blocking analysis: repeatedly average neighbouring pairs.

    The error reported is the largest standard error among levels that still
    have at least 32 bins; the integrated correlation time follows from the
    ratio of binned to naive error.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < MIN_SERIES:
        raise ValueError(f"binning needs a 1-d series of at least {MIN_SERIES} samples")
    mean = float(x.mean())
    levels, reliable = [], []
    size = 1
    block = x - mean
    while len(block) >= 2:
        n = len(block)
        err = float(block.std(ddof=1) / math.sqrt(n))
        levels.append((size, err))
        reliable.append(n >= RELIABLE_BINS)
        m = n // 2
        block = 0.5 * (block[: 2 * m : 2] + block[1 : 2 * m : 2])
        size *= 2
    naive = levels[0][1]
    binned = max(e for (_, e), ok in zip(levels, reliable) if ok)
    tau = 0.5 * (binned / naive) ** 2 if naive > 0 else 0.0
    return BinningResult(mean, naive, binned, tau, levels, reliable)


def energy_series_estimate(records) -> tuple[float, float]:
    """Ratio-of-means energy with a binning error from the per-loop ratios.

    Loops with a zero trace are left out of the ratio series. Series shorter
    than 64 usable loops fall back to the naive standard error.
    """
    num = np.array([r.energy_numerator for r in records], dtype=float)
    den = np.array([r.trace for r in records], dtype=float)
    mask = den != 0
    if not mask.any():
        raise ValueError("every sampled trace is zero; the energy is undefined")
    energy = float(num.mean() / den.mean())
    ratios = num[mask] / den[mask]
    if len(ratios) >= MIN_SERIES:
        err = binning_analysis(ratios).binned_error
    elif len(ratios) > 1:
        err = float(ratios.std(ddof=1) / math.sqrt(len(ratios)))
    else:
        err = math.nan
    return energy, err


@dataclass
class Plateau:
    found: bool
    initial_rate: float
    start: int | None = None
    stop: int | None = None
    renewed_at: int | None = None
    height: float | None = None


def growth_rate(population, window: int = 20) -> np.ndarray:
    """Smoothed ``d log P / d loop``; entry ``k`` covers loops ``k .. k + window``."""
    logp = np.log(np.asarray(population, dtype=float))
    return (logp[window:] - logp[:-window]) / window


def detect_plateau(population, *, min_length: int = 200, fraction: float = 0.1, window: int = 20,
                   probe: int = 100) -> Plateau:
    """Find a stall in population growth that is followed by renewed growth.

    The initial rate is the largest smoothed growth rate within the first
    ``probe`` loops. A plateau is a run of at least ``min_length`` loops whose
    smoothed rate stays below ``fraction`` of it in magnitude; it only counts
    if a later loop grows faster than that threshold again. ``start`` and
    ``stop`` bound the plateau loops; ``renewed_at`` is the end of the first
    fast window after it.
    """
    rate = growth_rate(population, window)
    if len(rate) == 0:
        return Plateau(False, math.nan)
    g0 = float(rate[:probe].max())
    if not g0 > 0:
        return Plateau(False, g0)
    flat = np.abs(rate) < fraction * g0
    # runs of consecutive flat entries
    edges = np.diff(np.concatenate([[0], flat.astype(np.int8), [0]]))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    for a, b in zip(starts, stops):
        if b - a < min_length:
            continue
        later = np.flatnonzero(rate[b:] > fraction * g0)
        if len(later):
            stop = int(b + window)  # loops a .. stop - 1 lie inside the flat run
            height = float(np.exp(np.log(np.asarray(population, dtype=float)[a:stop]).mean()))
            return Plateau(True, g0, int(a), stop, int(b + later[0] + window), height)
    return Plateau(False, g0)
