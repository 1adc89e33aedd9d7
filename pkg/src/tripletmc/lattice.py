"""Lattice geometry and bit-packed basis configurations.

Sites are indexed row-major, ``site(x, y) = y * lx + x``. A spin configuration
is a plain integer whose bit ``a`` is set when spin ``a`` points up. A fermion
configuration holds one occupation word per spin species.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

MAX_SITES = 64

GEOMETRIES = ("chain", "square", "triangular")

UP = "up"
DOWN = "down"


class CapacityError(ValueError):
    """A lattice or sector is larger than the representation allows."""


class InvalidMoveError(ValueError):
    """A move whose matrix element vanishes was requested."""


@dataclass(frozen=True)
class LatticeSpec:
    geometry: str = "chain"
    lx: int = 2
    ly: int = 1
    periodic: tuple[bool, bool] = (False, False)

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}; expected one of {GEOMETRIES}")
        if self.lx < 1 or self.ly < 1:
            raise ValueError("lattice extents must be positive")
        if self.geometry == "chain" and self.ly != 1:
            raise ValueError("a chain has ly == 1")
        if self.geometry == "triangular" and self.ly < 2:
            raise ValueError("triangular lattice needs ly >= 2")
        periodic = self.periodic
        if isinstance(periodic, bool):
            periodic = (periodic, periodic)
        object.__setattr__(self, "periodic", tuple(bool(p) for p in periodic))
        if len(self.periodic) != 2:
            raise ValueError("periodic takes one flag per direction")

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    def site(self, x: int, y: int = 0) -> int:
        return y * self.lx + x


class FermionConfig(NamedTuple):
    up: int
    down: int


def build_lattice(spec: LatticeSpec) -> list[tuple[int, int]]:
    """Nearest-neighbour edges ``(a, b)`` with ``a < b``, sorted, without duplicates.

    Periodic images that land on an already present pair (extent 2 along a
    periodic direction) are merged rather than counted twice.
    """
    if spec.n_sites > MAX_SITES:
        raise CapacityError(f"{spec.n_sites} sites exceed the {MAX_SITES}-site word capacity")
    px, py = spec.periodic
    offsets = [(1, 0)]
    if spec.geometry in ("square", "triangular"):
        offsets.append((0, 1))
    if spec.geometry == "triangular":
        offsets.append((1, 1))

    edges = set()
    for y in range(spec.ly):
        for x in range(spec.lx):
            for dx, dy in offsets:
                nx, ny = x + dx, y + dy
                if nx >= spec.lx:
                    if not px:
                        continue
                    nx %= spec.lx
                if ny >= spec.ly:
                    if not py:
                        continue
                    ny %= spec.ly
                a, b = spec.site(x, y), spec.site(nx, ny)
                if a == b:
                    continue
                edges.add((min(a, b), max(a, b)))
    return sorted(edges)


def _check_site(a: int, n_sites: int | None = None):
    if a < 0 or a >= (MAX_SITES if n_sites is None else n_sites):
        raise ValueError(f"site {a} out of range")


def magnetization(config: int, n_sites: int) -> int:
    return 2 * int(config).bit_count() - n_sites


def flip_pair(config: int, a: int, b: int) -> int:
    """Exchange the antiparallel spins on sites ``a`` and ``b``."""
    _check_site(a)
    _check_site(b)
    if ((config >> a) ^ (config >> b)) & 1 == 0:
        raise InvalidMoveError(f"spins on sites {a} and {b} are parallel")
    return config ^ ((1 << a) | (1 << b))


def hop(config: FermionConfig, spin: str, source: int, target: int) -> FermionConfig:
    """Move one fermion of the given spin from ``source`` to ``target``."""
    _check_site(source)
    _check_site(target)
    if spin not in (UP, DOWN):
        raise ValueError(f"spin must be {UP!r} or {DOWN!r}")
    word = config.up if spin == UP else config.down
    if source == target:
        raise InvalidMoveError("source and target coincide")
    if not (word >> source) & 1:
        raise InvalidMoveError(f"site {source} is empty")
    if (word >> target) & 1:
        raise InvalidMoveError(f"site {target} is Pauli blocked")
    word ^= (1 << source) | (1 << target)
    if spin == UP:
        return FermionConfig(word, config.down)
    return FermionConfig(config.up, word)
