"""Triplet ensemble and the stochastic fixed-point loop.

The ensemble is stored column-wise (ket codes, bra codes, physical weights,
initiator flags) and kept sorted by ``(ket, bra)`` with at most one entry per
pair. One loop runs:

    promote initiators -> copy -> decompress the copy -> one spawn attempt per
    child -> compress survivors and spawns -> resolvent free evolution ->
    measure -> shift update

Physical weights ``c`` enter every average; weight factors ``w = c / b(norm)``
set the number of spawn attempts and define the controlled population.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._random import STREAM_DECOMPRESS, STREAM_SPAWN, LoopStream
from .estimators import binning_analysis, energy_numerator, energy_series_estimate, trace_estimate
from .hamiltonians import ModelHamiltonian
from .importance import BiasParams, bias_table

log = logging.getLogger(__name__)

U64 = np.uint64
SURVIVOR, SPAWNED_BY_INITIATOR, SPAWNED_BY_NONINITIATOR = "survivor", "spawned_by_initiator", "spawned_by_noninitiator"
SPAWN_CHUNK = 1 << 16


class EngineError(RuntimeError):
    pass


class FreeEvolutionError(EngineError):
    """The resolvent denominator ``r - S + (h_i + h_j)/2`` is not positive."""


class EnsembleExtinctError(EngineError):
    pass


@dataclass(frozen=True)
class Triplet:
    c: float
    ket: object
    bra: object
    is_initiator: bool = False
    spawn_origin: str = SURVIVOR


@dataclass(frozen=True)
class EngineConfig:
    r: float
    initial_shift: float = 0.0
    xi: float = 0.1
    target_population: float = math.inf
    shift_update_period: int = 1
    c_init_threshold: float = 1.0
    n_init_threshold: int = 1
    use_initiators: bool = True
    stochastic_survivors: bool = True
    initial_weight: float = 1.0
    initial_triplet_count: int = 1
    n_thermalization: int = 0
    n_sampling: int = 0
    rng_seed: int = 0
    bias: BiasParams = field(default_factory=BiasParams)
    initial_states: tuple | None = None

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if not self.c_init_threshold > 0:
            raise ValueError("c_init_threshold must be positive")
        if self.n_init_threshold < 0:
            raise ValueError("n_init_threshold must be nonnegative")
        if self.initial_triplet_count < 1:
            raise ValueError("initial_triplet_count must be at least 1")
        if not self.initial_weight > 0:
            raise ValueError("initial_weight must be positive")
        if self.shift_update_period < 1:
            raise ValueError("shift_update_period must be at least 1")
        if self.n_thermalization < 0 or self.n_sampling < 0:
            raise ValueError("loop counts must be nonnegative")
        if not self.target_population > 0:
            raise ValueError("target_population must be positive")


@dataclass(frozen=True)
class SampleRecord:
    loop: int
    shift: float
    population: float
    trace: float
    energy_numerator: float
    triplet_count: int

    @property
    def energy(self) -> float:
        return self.energy_numerator / self.trace if self.trace != 0 else math.nan


@dataclass
class ShiftState:
    shift: float
    armed: bool = False
    armed_at: int | None = None
    reference_population: float | None = None


@dataclass
class Ensemble:
    ket: np.ndarray
    bra: np.ndarray
    c: np.ndarray
    initiator: np.ndarray
    loop_index: int = 0

    def __len__(self):
        return len(self.c)

    @classmethod
    def empty(cls, loop_index: int = 0) -> "Ensemble":
        z = np.zeros(0, dtype=U64)
        return cls(z, z.copy(), np.zeros(0), np.zeros(0, dtype=bool), loop_index)

    @classmethod
    def from_triplets(cls, triplets, model: ModelHamiltonian, loop_index: int = 0) -> "Ensemble":
        triplets = list(triplets)
        ket = np.array([model.encode(t.ket) for t in triplets], dtype=U64)
        bra = np.array([model.encode(t.bra) for t in triplets], dtype=U64)
        c = np.array([t.c for t in triplets], dtype=float)
        init = np.array([t.is_initiator for t in triplets], dtype=bool)
        return compress(cls(ket, bra, c, init, loop_index), None)

    def copy(self) -> "Ensemble":
        return Ensemble(self.ket.copy(), self.bra.copy(), self.c.copy(), self.initiator.copy(), self.loop_index)

    def triplets(self, model: ModelHamiltonian) -> list[Triplet]:
        return [
            Triplet(float(c), model.decode(int(k)), model.decode(int(b)), bool(i))
            for k, b, c, i in zip(self.ket, self.bra, self.c, self.initiator)
        ]

    def norms(self, model: ModelHamiltonian) -> np.ndarray:
        return model.norm_codes(self.ket, self.bra)

    def weight_factors(self, model: ModelHamiltonian, bias: BiasParams) -> np.ndarray:
        if not bias.active:
            return self.c.copy()
        return self.c / bias_table(model.max_norm, bias)[self.norms(model)]

    def population(self, model: ModelHamiltonian, bias: BiasParams) -> float:
        return float(np.abs(self.weight_factors(model, bias)).sum())

    def to_matrix(self, basis) -> np.ndarray:
        """Dense ``M[ket, bra]`` over a sector basis (see :mod:`tripletmc.ed`)."""
        M = np.zeros((len(basis), len(basis)))
        np.add.at(M, (basis.index(self.ket), basis.index(self.bra)), self.c)
        return M


@dataclass
class Children:
    ket: np.ndarray
    bra: np.ndarray
    c: np.ndarray
    initiator: np.ndarray

    def __len__(self):
        return len(self.c)


@dataclass
class Spawns:
    ket: np.ndarray
    bra: np.ndarray
    c: np.ndarray
    from_initiator: np.ndarray

    def __len__(self):
        return len(self.c)

    @classmethod
    def concat(cls, parts) -> "Spawns":
        parts = list(parts)
        if not parts:
            z = np.zeros(0, dtype=U64)
            return cls(z, z.copy(), np.zeros(0), np.zeros(0, dtype=bool))
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("ket", "bra", "c", "from_initiator")))


# ---------------------------------------------------------------------------
# loop stages
# ---------------------------------------------------------------------------


def init_ensemble(model: ModelHamiltonian, config: EngineConfig) -> Ensemble:
    if config.initial_states is not None:
        codes = np.unique(np.array([model.encode(s) for s in config.initial_states], dtype=U64))
        if not model.in_sector(codes).all():
            raise ValueError("initial states must lie in the model's conserved sector")
    else:
        codes = model.free_ground_codes()
    n = config.initial_triplet_count
    if n > len(codes):
        log.warning("requested %d initial triplets but only %d free ground states exist; clamping", n, len(codes))
        n = len(codes)
    rng = np.random.default_rng(config.rng_seed)
    chosen = np.sort(rng.choice(codes, size=n, replace=False))
    return Ensemble(chosen, chosen.copy(), np.full(n, float(config.initial_weight)), np.ones(n, dtype=bool), 0)


def promote_initiators(ensemble: Ensemble, config: EngineConfig, model: ModelHamiltonian) -> Ensemble:
    """Recompute initiator flags: small dynamic norm or large physical weight."""
    if not config.use_initiators:
        flags = np.ones(len(ensemble), dtype=bool)
    else:
        flags = (ensemble.norms(model) < config.n_init_threshold) | (np.abs(ensemble.c) > config.c_init_threshold)
    return Ensemble(ensemble.ket, ensemble.bra, ensemble.c, flags, ensemble.loop_index)


def decompress(ensemble: Ensemble, model: ModelHamiltonian, bias: BiasParams, u: np.ndarray) -> Children:
    """Split each triplet into unit-weight-factor children.

    A triplet with weight factor ``w`` gives ``floor(|w|)`` children of
    physical weight ``c / |w|`` plus one more with probability
    ``|w| - floor(|w|)``, decided by ``u < frac`` for its uniform ``u``.
    """
    counts, unit = _child_counts(ensemble, model, bias, u)
    return _expand(ensemble, counts, unit)


def _expand(ensemble: Ensemble, counts: np.ndarray, unit: np.ndarray) -> Children:
    parent = np.repeat(np.arange(len(ensemble)), counts)
    return Children(ensemble.ket[parent], ensemble.bra[parent], unit[parent], ensemble.initiator[parent])


def _child_counts(ensemble: Ensemble, model: ModelHamiltonian, bias: BiasParams, u: np.ndarray):
    w = np.abs(ensemble.weight_factors(model, bias))
    whole = np.floor(w)
    counts = (whole + (u < (w - whole))).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(w > 0, ensemble.c / w, 0.0)
    return counts, unit


def rounded_survivors(ensemble: Ensemble, model: ModelHamiltonian, bias: BiasParams, u: np.ndarray) -> Ensemble:
    """The decompressed ensemble merged back per pair: ``c -> n_children * c / |w|``.

    Uses the same uniforms as :func:`decompress`, so survivors and spawning
    parents describe one realization. Pairs whose rest child died vanish.
    """
    return _merge_children(ensemble, *_child_counts(ensemble, model, bias, u))


def _merge_children(ensemble: Ensemble, counts: np.ndarray, unit: np.ndarray) -> Ensemble:
    keep = counts > 0
    return Ensemble(ensemble.ket[keep], ensemble.bra[keep], counts[keep] * unit[keep],
                    ensemble.initiator[keep], ensemble.loop_index)


def spawn(children: Children, model: ModelHamiltonian, r: float, u_side: np.ndarray, u_move: np.ndarray) -> Spawns:
    """One attempt per child: pick ket or bra with probability 1/2, then a connected state uniformly.

    The spawned physical weight is ``-c * H_int[k, s] * n_s / r``; children
    whose chosen state has no connections spawn nothing.
    """
    on_ket = u_side < 0.5
    chosen = np.where(on_ket, children.ket, children.bra)
    target, elem, n_s = model.pick_connections(chosen, u_move)
    ok = n_s > 0
    on_ket, target, elem, n_s = on_ket[ok], target[ok], elem[ok], n_s[ok]
    ket = np.where(on_ket, target, children.ket[ok])
    bra = np.where(on_ket, children.bra[ok], target)
    c = -children.c[ok] * elem * n_s / r
    keep = c != 0
    return Spawns(ket[keep], bra[keep], c[keep], children.initiator[ok][keep])


def spawn_one(child: Triplet, model: ModelHamiltonian, r: float, rng) -> Triplet | None:
    """Scalar convenience wrapper around :func:`spawn`."""
    rng = np.random.default_rng(rng)
    kids = Children(
        np.array([model.encode(child.ket)], dtype=U64),
        np.array([model.encode(child.bra)], dtype=U64),
        np.array([child.c]),
        np.array([child.is_initiator]),
    )
    out = spawn(kids, model, r, rng.random(1), rng.random(1))
    if len(out) == 0:
        return None
    origin = SPAWNED_BY_INITIATOR if child.is_initiator else SPAWNED_BY_NONINITIATOR
    return Triplet(float(out.c[0]), model.decode(int(out.ket[0])), model.decode(int(out.bra[0])), False, origin)


def _sort_order(ket: np.ndarray, bra: np.ndarray, code_bits: int | None) -> np.ndarray:
    if code_bits is not None and code_bits <= 32:
        return np.argsort((ket << U64(32)) | bra)
    return np.lexsort((bra, ket))


def compress(survivors: Ensemble, spawned: Spawns | None, code_bits: int | None = None) -> Ensemble:
    """Merge all members of each ``(ket, bra)`` class into one triplet.

    A class made of exactly one spawn from a non-initiator is discarded, as is
    any class whose weights cancel to zero. Initiator flags of the output are
    provisional; :func:`promote_initiators` recomputes them.
    """
    # tag: 0 survivor, 1 initiator survivor, 2 spawn from an initiator, 3 spawn from a non-initiator
    tag = survivors.initiator.astype(np.uint8)
    if spawned is None or len(spawned) == 0:
        ket, bra, c = survivors.ket, survivors.bra, survivors.c
    else:
        ket = np.concatenate([survivors.ket, spawned.ket])
        bra = np.concatenate([survivors.bra, spawned.bra])
        c = np.concatenate([survivors.c, spawned.c])
        tag = np.concatenate([tag, np.where(spawned.from_initiator, 2, 3).astype(np.uint8)])
    if len(c) == 0:
        return Ensemble.empty(survivors.loop_index)
    order = _sort_order(ket, bra, code_bits)
    ket, bra, c, tag = ket[order], bra[order], c[order], tag[order]
    new_class = np.empty(len(c), dtype=bool)
    new_class[0] = True
    np.not_equal(ket[1:], ket[:-1], out=new_class[1:])
    new_class[1:] |= bra[1:] != bra[:-1]
    starts = np.flatnonzero(new_class)
    sums = np.add.reduceat(c, starts)
    counts = np.diff(starts, append=len(c))
    lone_noninit_spawn = (counts == 1) & (tag[starts] == 3)
    keep = ~lone_noninit_spawn & (sums != 0)
    first = starts[keep]
    return Ensemble(ket[first], bra[first], sums[keep], tag[first] == 1, survivors.loop_index)


def apply_free_evolution(ensemble: Ensemble, shift: float, r: float, model: ModelHamiltonian) -> Ensemble:
    """Multiply each weight by ``r / (r - S + (h_ket + h_bra) / 2)``."""
    mean_h = 0.5 * (model.diagonal_codes(ensemble.ket) + model.diagonal_codes(ensemble.bra))
    denom = r - shift + mean_h
    if len(denom) and denom.min() <= 0:
        bad = int(np.argmin(denom))
        raise FreeEvolutionError(
            f"resolvent denominator r - S + (h_i + h_j)/2 = {denom[bad]:.6g} <= 0 "
            f"(r={r}, S={shift}, (h_i + h_j)/2={mean_h[bad]:.6g}); increase r"
        )
    return Ensemble(ensemble.ket, ensemble.bra, ensemble.c * (r / denom), ensemble.initiator, ensemble.loop_index)


def update_shift(s_prev: float, p_now: float, p_prev: float, r: float, xi: float) -> float:
    if not (p_now > 0 and p_prev > 0):
        raise EnsembleExtinctError(f"population reached {p_now if p_now <= 0 else p_prev}; the ensemble died")
    return s_prev - r * xi * math.log(p_now / p_prev)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _spawn_stage(children: Children, model, r, stream: LoopStream, threads: int) -> Spawns:
    n = len(children)
    bounds = list(range(0, n, SPAWN_CHUNK)) + [n]
    chunks = list(zip(bounds[:-1], bounds[1:]))

    def work(lo_hi):
        lo, hi = lo_hi
        idx = np.arange(lo, hi, dtype=U64)
        part = Children(children.ket[lo:hi], children.bra[lo:hi], children.c[lo:hi], children.initiator[lo:hi])
        u = stream.uniforms(idx)
        return spawn(part, model, r, u[:, 0], u[:, 1])

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(ch) for ch in chunks]
    return parts[0] if len(parts) == 1 else Spawns.concat(parts)


def run_loop(ensemble: Ensemble, model: ModelHamiltonian, config: EngineConfig,
             shift_state: ShiftState, *, threads: int = 1) -> tuple[Ensemble, SampleRecord]:
    """Advance the ensemble by one loop; ``shift_state`` is updated in place."""
    loop = ensemble.loop_index
    ens = promote_initiators(ensemble, config, model)
    u_rest = LoopStream(config.rng_seed, loop, STREAM_DECOMPRESS).uniform(np.arange(len(ens), dtype=U64))
    counts, unit = _child_counts(ens, model, config.bias, u_rest)
    children = _expand(ens, counts, unit)
    spawned = _spawn_stage(children, model, config.r, LoopStream(config.rng_seed, loop, STREAM_SPAWN, 2), threads)
    if config.stochastic_survivors:
        ens = _merge_children(ens, counts, unit)
    ens = compress(ens, spawned, model.code_bits)
    population = ens.population(model, config.bias)
    if population <= 0:
        raise EnsembleExtinctError(f"all triplets annihilated at loop {loop}")
    shift_used = shift_state.shift
    ens = apply_free_evolution(ens, shift_used, config.r, model)
    record = SampleRecord(loop, shift_used, population, trace_estimate(ens),
                          energy_numerator(ens, model), len(ens))

    if not shift_state.armed:
        if population >= config.target_population:
            shift_state.armed = True
            shift_state.armed_at = loop
            shift_state.reference_population = population
    elif loop % config.shift_update_period == 0:
        shift_state.shift = update_shift(shift_state.shift, population, shift_state.reference_population,
                                         config.r, config.xi)
        shift_state.reference_population = population
    ens.loop_index = loop + 1
    return ens, record


@dataclass
class SimulationSummary:
    energy_mean: float
    energy_error: float
    shift_mean: float
    shift_error: float
    final_shift: float
    final_population: float
    final_triplet_count: int
    shift_armed_at: int | None
    n_sampling: int
    wall_time: float


def run_simulation(model: ModelHamiltonian, config: EngineConfig, *, threads: int = 1,
                   ensemble: Ensemble | None = None, callback=None):
    """Thermalization followed by sampling; returns every loop's record and a summary."""
    start = time.perf_counter()
    ens = init_ensemble(model, config) if ensemble is None else ensemble
    state = ShiftState(config.initial_shift)
    records: list[SampleRecord] = []
    total = config.n_thermalization + config.n_sampling
    for _ in range(total):
        ens, rec = run_loop(ens, model, config, state, threads=threads)
        records.append(rec)
        if callback is not None:
            callback(rec, ens)
    sampled = records[config.n_thermalization:]
    e_mean = e_err = s_mean = s_err = math.nan
    if sampled:
        try:
            e_mean, e_err = energy_series_estimate(sampled)
        except ValueError:
            log.warning("no sampled loop had a nonzero trace; energy undefined")
        shifts = np.array([r.shift for r in sampled])
        s_mean = float(shifts.mean())
        if len(shifts) >= 64:
            s_err = binning_analysis(shifts).binned_error
        elif len(shifts) > 1:
            s_err = float(shifts.std(ddof=1) / math.sqrt(len(shifts)))
    summary = SimulationSummary(
        energy_mean=e_mean,
        energy_error=e_err,
        shift_mean=s_mean,
        shift_error=s_err,
        final_shift=state.shift,
        final_population=records[-1].population if records else ens.population(model, config.bias),
        final_triplet_count=len(ens),
        shift_armed_at=state.armed_at,
        n_sampling=len(sampled),
        wall_time=time.perf_counter() - start,
    )
    return records, summary


def with_seed(config: EngineConfig, seed: int) -> EngineConfig:
    return replace(config, rng_seed=int(seed))
