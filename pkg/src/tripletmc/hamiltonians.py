"""Lattice model Hamiltonians split into a diagonal free part and an off-diagonal interaction.

Both models act on integer *codes*. A Heisenberg code is the spin word itself;
a Hubbard code packs ``up | down << n_sites``. Every interaction move is a
row of a :class:`MoveTable`: it applies to a code that has all ``req_set``
bits set and all ``req_clear`` bits clear, toggles the ``flip`` bits and
carries the element ``amp * (-1) ** popcount(code & sign_mask)``.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    DOWN,
    UP,
    CapacityError,
    FermionConfig,
    InvalidMoveError,
    LatticeSpec,
    build_lattice,
)

U64 = np.uint64
SECTOR_ENUMERATION_CAP = 10**7
# Sector-indexed connection tables are built below these sizes.
CACHE_MAX_CODE_BITS = 24
CACHE_MAX_ENTRIES = 2 * 10**7


def popcount(x) -> np.ndarray:
    return np.bitwise_count(np.asarray(x, dtype=U64))


def _as_codes(codes) -> np.ndarray:
    return np.ascontiguousarray(codes, dtype=U64)


def _words_with_popcount(n_bits: int, k: int) -> np.ndarray:
    """All ``n_bits``-bit words with exactly ``k`` set bits, ascending."""
    if k < 0 or k > n_bits:
        return np.zeros(0, dtype=U64)
    if n_bits <= 24:
        words = np.arange(1 << n_bits, dtype=U64)
        return words[popcount(words) == k]
    count = math.comb(n_bits, k)
    if count > SECTOR_ENUMERATION_CAP:
        raise CapacityError(f"sector of {count} states exceeds the enumeration cap")
    words = [sum(1 << b for b in combo) for combo in itertools.combinations(range(n_bits), k)]
    return np.sort(np.array(words, dtype=U64))


@dataclass(frozen=True)
class MoveTable:
    req_set: np.ndarray
    req_clear: np.ndarray
    flip: np.ndarray
    sign_mask: np.ndarray
    amp: np.ndarray

    def __len__(self):
        return len(self.flip)

    def valid(self, codes: np.ndarray) -> np.ndarray:
        """Boolean ``(len(codes), n_moves)`` applicability matrix."""
        c = _as_codes(codes)[:, None]
        return ((c & self.req_set) == self.req_set) & ((c & self.req_clear) == 0) & (self.amp != 0)

    def elements(self, codes: np.ndarray, moves: np.ndarray) -> np.ndarray:
        parity = popcount(_as_codes(codes) & self.sign_mask[moves]) & 1
        return self.amp[moves] * (1.0 - 2.0 * parity)


@dataclass
class _SectorCache:
    """Connection lists for every state of a small conserved sector."""

    codes: np.ndarray
    index_of: np.ndarray
    diagonal: np.ndarray
    n_conn: np.ndarray
    targets: np.ndarray
    elements: np.ndarray


class ModelHamiltonian:
    """Common machinery; subclasses define the basis, sector and move table."""

    n_sites: int
    code_bits: int
    edges: list[tuple[int, int]]
    moves: MoveTable

    def __init__(self):
        flips, first = np.unique(self.moves.flip, return_index=True)
        self._flips = flips
        self._flip_amp = self.moves.amp[first]
        self._flip_sign = self.moves.sign_mask[first]
        self._cache: _SectorCache | None = None
        self._cache_built = False

    # -- basis ------------------------------------------------------------
    def encode(self, state) -> int:
        raise NotImplementedError

    def decode(self, code: int):
        raise NotImplementedError

    def sector_codes(self) -> np.ndarray:
        """Ascending codes of the conserved sector."""
        raise NotImplementedError

    def in_sector(self, codes) -> np.ndarray:
        raise NotImplementedError

    # -- diagonal ---------------------------------------------------------
    def diagonal_codes(self, codes) -> np.ndarray:
        raise NotImplementedError

    def diagonal_energy(self, state) -> float:
        return float(self.diagonal_codes(np.array([self.encode(state)], dtype=U64))[0])

    # -- off-diagonal -----------------------------------------------------
    def connections(self, state) -> list:
        """Interaction-connected states of ``state`` and their elements ``<k|H|state>``."""
        code = self.encode(state)
        codes = np.array([code], dtype=U64)
        moves = np.flatnonzero(self.moves.valid(codes)[0])
        elems = self.moves.elements(np.repeat(codes, len(moves)), moves)
        return [
            (self.decode(int(code ^ int(self.moves.flip[m]))), float(e))
            for m, e in zip(moves, elems)
        ]

    def element_codes(self, kets, bras) -> np.ndarray:
        """Vectorised ``<bra|H|ket>``."""
        kets = _as_codes(kets)
        bras = _as_codes(bras)
        x = kets ^ bras
        diag = x == 0
        out = np.where(diag, self.diagonal_codes(kets), 0.0)
        cand = np.flatnonzero(popcount(x) == 2)
        if len(cand):
            xc = x[cand]
            pos = np.searchsorted(self._flips, xc)
            pos = np.minimum(pos, len(self._flips) - 1)
            hit = self._flips[pos] == xc
            # A connected pair has exactly one of the two flipped bits set in the ket.
            hit &= popcount(kets[cand] & xc) == 1
            cand, pos = cand[hit], pos[hit]
            parity = popcount(kets[cand] & self._flip_sign[pos]) & 1
            out[cand] = self._flip_amp[pos] * (1.0 - 2.0 * parity)
        return out

    def element(self, i, j) -> float:
        """``<j|H|i>`` for basis states ``i`` (ket) and ``j`` (bra)."""
        return float(
            self.element_codes(
                np.array([self.encode(i)], dtype=U64), np.array([self.encode(j)], dtype=U64)
            )[0]
        )

    def norm_codes(self, kets, bras) -> np.ndarray:
        """Exchange-count norm: half the number of differing bits."""
        return (popcount(_as_codes(kets) ^ _as_codes(bras)) >> 1).astype(np.int64)

    @property
    def max_norm(self) -> int:
        return self.code_bits // 2

    # -- free ground states -----------------------------------------------
    def degenerate_free_ground_states(self, cap: int | None = None, rng=None) -> list:
        codes = self.free_ground_codes()
        if cap is not None and len(codes) > cap:
            rng = np.random.default_rng(rng)
            codes = np.sort(rng.choice(codes, size=cap, replace=False))
        return [self.decode(int(c)) for c in codes]

    def free_ground_codes(self) -> np.ndarray:
        codes = self.sector_codes()
        if len(codes) == 0:
            raise ValueError("the conserved sector is empty")
        h = self.diagonal_codes(codes)
        low = h.min()
        return codes[np.abs(h - low) <= 1e-12 * max(1.0, abs(low))]

    # -- spawning ---------------------------------------------------------
    def sector_cache(self) -> _SectorCache | None:
        if not self._cache_built:
            self._cache_built = True
            self._cache = self._build_cache()
        return self._cache

    def _build_cache(self) -> _SectorCache | None:
        if self.code_bits > CACHE_MAX_CODE_BITS:
            return None
        try:
            codes = self.sector_codes()
        except CapacityError:
            return None
        if len(codes) * len(self.moves) > CACHE_MAX_ENTRIES:
            return None
        index_of = np.full(1 << self.code_bits, -1, dtype=np.int32)
        index_of[codes] = np.arange(len(codes), dtype=np.int32)
        valid = self.moves.valid(codes)
        n_conn = valid.sum(axis=1).astype(np.int64)
        width = max(int(n_conn.max(initial=0)), 1)
        targets = np.zeros((len(codes), width), dtype=U64)
        elements = np.zeros((len(codes), width), dtype=float)
        rows, moves = np.nonzero(valid)
        slot = np.arange(len(rows)) - np.repeat(np.cumsum(n_conn) - n_conn, n_conn)
        targets[rows, slot] = codes[rows] ^ self.moves.flip[moves]
        elements[rows, slot] = self.moves.elements(codes[rows], moves)
        return _SectorCache(codes, index_of, self.diagonal_codes(codes), n_conn, targets, elements)

    def pick_connections(self, codes, u, use_cache: bool = True):
        """Choose one connected state uniformly for each code.

        Returns ``(targets, elements, n_s)``; entries with ``n_s == 0`` are
        meaningless and must be discarded by the caller.
        """
        codes = _as_codes(codes)
        cache = self.sector_cache() if use_cache else None
        if cache is not None:
            idx = cache.index_of[codes]
            if (idx < 0).any():
                raise ValueError("state outside the conserved sector")
            n_s = cache.n_conn[idx]
            pick = np.minimum((u * n_s).astype(np.int64), np.maximum(n_s - 1, 0))
            return cache.targets[idx, pick], cache.elements[idx, pick], n_s
        valid = self.moves.valid(codes)
        n_s = valid.sum(axis=1).astype(np.int64)
        pick = np.minimum((u * n_s).astype(np.int64), np.maximum(n_s - 1, 0))
        # index of the (pick+1)-th applicable move in each row
        move = np.argmax(np.cumsum(valid, axis=1) > pick[:, None], axis=1)
        elems = self.moves.elements(codes, move)
        return codes ^ self.moves.flip[move], elems, n_s

    def count_connections(self, codes) -> np.ndarray:
        cache = self.sector_cache()
        codes = _as_codes(codes)
        if cache is not None:
            return cache.n_conn[cache.index_of[codes]]
        return self.moves.valid(codes).sum(axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# Heisenberg XXZ
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeisenbergParams:
    J: float = 1.0
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    n_up: int | None = None  # defaults to the Sz = 0 sector

    def __post_init__(self):
        if self.J == 0 or not math.isfinite(self.J):
            raise ValueError("J must be real and nonzero")


class HeisenbergXXZ(ModelHamiltonian):
    """``H_free = J/2 sum sz sz``, ``H_int = J/2 sum (s+ s- + s- s+)`` with unit ladder elements."""

    kind = "heisenberg"

    def __init__(self, params: HeisenbergParams):
        self.params = params
        self.n_sites = params.lattice.n_sites
        self.code_bits = self.n_sites
        self.edges = build_lattice(params.lattice)
        n_up = params.n_up
        if n_up is None:
            if self.n_sites % 2:
                raise ValueError("Sz = 0 needs an even number of sites; pass n_up")
            n_up = self.n_sites // 2
        if not 0 <= n_up <= self.n_sites:
            raise ValueError("n_up out of range")
        self.n_up = n_up
        self._word_mask = (1 << self.n_sites) - 1
        self.moves = self._build_moves()
        self._edge_a = np.array([a for a, _ in self.edges], dtype=U64)
        self._edge_b = np.array([b for _, b in self.edges], dtype=U64)
        self._diag_table = None
        if self.n_sites <= 20:
            self._diag_table = self._diagonal_loop(np.arange(1 << self.n_sites, dtype=U64))
        super().__init__()

    def _build_moves(self) -> MoveTable:
        rows = []
        half_j = 0.5 * self.params.J
        for a, b in self.edges:
            for up, down in ((a, b), (b, a)):
                rows.append((1 << up, 1 << down, (1 << a) | (1 << b), 0, half_j))
        return _move_table(rows)

    def encode(self, state) -> int:
        code = int(state)
        if code < 0 or code & ~self._word_mask:
            raise ValueError(f"spin word {state:#b} has bits beyond site {self.n_sites - 1}")
        return code

    def decode(self, code: int) -> int:
        return int(code)

    def sector_codes(self) -> np.ndarray:
        return _words_with_popcount(self.n_sites, self.n_up)

    def in_sector(self, codes) -> np.ndarray:
        codes = _as_codes(codes)
        return (popcount(codes) == self.n_up) & ((codes >> U64(self.n_sites)) == 0) if self.n_sites < 64 else (
            popcount(codes) == self.n_up
        )

    def _diagonal_loop(self, codes: np.ndarray) -> np.ndarray:
        anti = np.zeros(codes.shape, dtype=np.int64)
        for a, b in zip(self._edge_a, self._edge_b):
            anti += (((codes >> a) ^ (codes >> b)) & U64(1)).astype(np.int64)
        return 0.5 * self.params.J * (len(self.edges) - 2 * anti)

    def diagonal_codes(self, codes) -> np.ndarray:
        codes = _as_codes(codes)
        if self._diag_table is not None:
            return self._diag_table[codes]
        return self._diagonal_loop(codes)


# ---------------------------------------------------------------------------
# Fermi-Hubbard
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HubbardParams:
    t: float = 1.0
    U: float = 4.0
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    n_up: int = 1
    n_down: int = 1

    def __post_init__(self):
        n = self.lattice.n_sites
        if not (0 <= self.n_up <= n and 0 <= self.n_down <= n):
            raise ValueError("particle numbers must lie in [0, n_sites]")
        if not (math.isfinite(self.t) and math.isfinite(self.U)):
            raise ValueError("t and U must be finite")


def fermion_hop_sign(occ: int, source: int, target: int) -> int:
    """``(-1) ** m`` with ``m`` the occupied sites strictly between ``source`` and ``target``."""
    if source == target:
        raise InvalidMoveError("source and target coincide")
    if not (occ >> source) & 1:
        raise InvalidMoveError(f"site {source} is empty")
    if (occ >> target) & 1:
        raise InvalidMoveError(f"site {target} is occupied")
    lo, hi = min(source, target), max(source, target)
    between = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    return -1 if (occ & between).bit_count() & 1 else 1


class FermiHubbard(ModelHamiltonian):
    """``H_free = U sum n_up n_down``, ``H_int = -t sum_sigma sum_<a,b> c+_a c_b`` (both directions)."""

    kind = "hubbard"

    def __init__(self, params: HubbardParams):
        self.params = params
        self.n_sites = params.lattice.n_sites
        if 2 * self.n_sites > 64:
            raise CapacityError("packed Hubbard codes hold at most 32 sites")
        self.code_bits = 2 * self.n_sites
        self.edges = build_lattice(params.lattice)
        self._site_mask = (1 << self.n_sites) - 1
        self.moves = self._build_moves()
        super().__init__()

    def _build_moves(self) -> MoveTable:
        rows = []
        n = self.n_sites
        for offset in (0, n):
            for a, b in self.edges:
                between = ((1 << b) - 1) & ~((1 << (a + 1)) - 1)
                for src, dst in ((a, b), (b, a)):
                    rows.append(
                        (
                            1 << (src + offset),
                            1 << (dst + offset),
                            (1 << (src + offset)) | (1 << (dst + offset)),
                            between << offset,
                            -self.params.t,
                        )
                    )
        return _move_table(rows)

    def encode(self, state) -> int:
        up, down = state
        if up < 0 or down < 0 or (up | down) & ~self._site_mask:
            raise ValueError("occupation word has bits beyond the lattice")
        return int(up) | (int(down) << self.n_sites)

    def decode(self, code: int) -> FermionConfig:
        code = int(code)
        return FermionConfig(code & self._site_mask, code >> self.n_sites)

    def split_codes(self, codes):
        codes = _as_codes(codes)
        return codes & U64(self._site_mask), codes >> U64(self.n_sites)

    def sector_codes(self) -> np.ndarray:
        ups = _words_with_popcount(self.n_sites, self.params.n_up)
        downs = _words_with_popcount(self.n_sites, self.params.n_down)
        if len(ups) * len(downs) > SECTOR_ENUMERATION_CAP:
            raise CapacityError(f"sector of {len(ups) * len(downs)} states exceeds the enumeration cap")
        return ((downs[:, None] << U64(self.n_sites)) | ups[None, :]).ravel()

    def in_sector(self, codes) -> np.ndarray:
        up, down = self.split_codes(codes)
        return (popcount(up) == self.params.n_up) & (popcount(down) == self.params.n_down)

    def diagonal_codes(self, codes) -> np.ndarray:
        up, down = self.split_codes(codes)
        return self.params.U * popcount(up & down).astype(float)


def _move_table(rows) -> MoveTable:
    if not rows:
        empty = np.zeros(0, dtype=U64)
        return MoveTable(empty, empty, empty, empty, np.zeros(0))
    req_set, req_clear, flip, sign, amp = zip(*rows)
    return MoveTable(
        np.array(req_set, dtype=U64),
        np.array(req_clear, dtype=U64),
        np.array(flip, dtype=U64),
        np.array(sign, dtype=U64),
        np.array(amp, dtype=float),
    )


# ---------------------------------------------------------------------------
# functional front-end
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _heisenberg(params: HeisenbergParams) -> HeisenbergXXZ:
    return HeisenbergXXZ(params)


@functools.lru_cache(maxsize=32)
def _hubbard(params: HubbardParams) -> FermiHubbard:
    return FermiHubbard(params)


def make_model(params) -> ModelHamiltonian:
    if isinstance(params, HeisenbergParams):
        return _heisenberg(params)
    if isinstance(params, HubbardParams):
        return _hubbard(params)
    raise TypeError(f"no model for {type(params).__name__}")


def heis_diagonal(config: int, params: HeisenbergParams) -> float:
    return make_model(params).diagonal_energy(config)


def heis_connections(config: int, params: HeisenbergParams) -> list[tuple[int, float]]:
    return make_model(params).connections(config)


def hub_diagonal(config: FermionConfig, params: HubbardParams) -> float:
    return make_model(params).diagonal_energy(FermionConfig(*config))


def hub_connections(config: FermionConfig, params: HubbardParams) -> list[tuple[FermionConfig, float]]:
    return make_model(params).connections(FermionConfig(*config))


def element(i, j, model: ModelHamiltonian) -> float:
    return model.element(i, j)


def degenerate_free_ground_states(model: ModelHamiltonian, cap: int | None = None, rng=None) -> list:
    return model.degenerate_free_ground_states(cap, rng)


__all__ = [
    "UP",
    "DOWN",
    "MoveTable",
    "ModelHamiltonian",
    "HeisenbergParams",
    "HeisenbergXXZ",
    "HubbardParams",
    "FermiHubbard",
    "fermion_hop_sign",
    "make_model",
    "heis_diagonal",
    "heis_connections",
    "hub_diagonal",
    "hub_connections",
    "element",
    "degenerate_free_ground_states",
    "popcount",
]
