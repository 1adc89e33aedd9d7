"""Exact reference results on a conserved sector.

Matrices follow the walker convention: ``M[k, b]`` is the coefficient of
``|ket_k><bra_b|``, so the Hamiltonian acts on the row index from the left.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hamiltonians import SECTOR_ENUMERATION_CAP, ModelHamiltonian
from .lattice import CapacityError

DENSE_CAP = 10**5
DENSE_SOLVER_MAX_DIM = 4096
ONE_STEP_MAX_DIM = 200


class ConvergenceError(RuntimeError):
    pass


class DivergenceError(OverflowError):
    pass


@dataclass(frozen=True)
class SectorBasis:
    codes: np.ndarray

    def __len__(self):
        return len(self.codes)

    @property
    def states(self) -> np.ndarray:
        return self.codes

    def index(self, codes) -> np.ndarray:
        """Positions of ``codes`` in the basis; raises for states outside it."""
        codes = np.asarray(codes, dtype=np.uint64)
        pos = np.searchsorted(self.codes, codes)
        pos_c = np.minimum(pos, len(self.codes) - 1)
        if np.any(self.codes[pos_c] != codes):
            raise KeyError("state outside the sector basis")
        return pos_c


def enumerate_sector(model: ModelHamiltonian, cap: int = SECTOR_ENUMERATION_CAP) -> SectorBasis:
    codes = model.sector_codes()
    if len(codes) > cap:
        raise CapacityError(f"sector dimension {len(codes)} exceeds cap {cap}")
    return SectorBasis(codes)


def sector_hamiltonian(model: ModelHamiltonian, basis: SectorBasis | None = None, *,
                       interaction_only: bool = False) -> sp.csr_matrix:
    """Sparse sector Hamiltonian with ``H[k, i] = <k|H|i>``."""
    if basis is None:
        basis = enumerate_sector(model)
    codes = basis.codes
    valid = model.moves.valid(codes)
    cols, moves = np.nonzero(valid)
    targets = codes[cols] ^ model.moves.flip[moves]
    rows = basis.index(targets)
    data = model.moves.elements(codes[cols], moves)
    if not interaction_only:
        diag = np.arange(len(codes))
        rows = np.concatenate([rows, diag])
        cols = np.concatenate([cols, diag])
        data = np.concatenate([data, model.diagonal_codes(codes)])
    n = len(codes)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def dense_hamiltonian(model: ModelHamiltonian, basis: SectorBasis | None = None) -> np.ndarray:
    if basis is None:
        basis = enumerate_sector(model)
    if len(basis) > DENSE_CAP:
        raise CapacityError(f"dense matrix of dimension {len(basis)} exceeds cap {DENSE_CAP}")
    return sector_hamiltonian(model, basis).toarray()


def ground_state_energy(model: ModelHamiltonian, *, tol: float = 1e-10,
                        method: str = "auto", basis: SectorBasis | None = None):
    """Lowest eigenpair of the sector Hamiltonian.

    ``method`` is ``"dense"``, ``"iterative"`` or ``"auto"`` (dense up to
    dimension 4096).
    """
    if basis is None:
        basis = enumerate_sector(model)
    n = len(basis)
    if method == "auto":
        method = "dense" if n <= DENSE_SOLVER_MAX_DIM else "iterative"
    if method == "dense" or n < 3:
        vals, vecs = np.linalg.eigh(dense_hamiltonian(model, basis))
        return float(vals[0]), vecs[:, 0]
    if method != "iterative":
        raise ValueError(f"unknown method {method!r}")
    H = sector_hamiltonian(model, basis)
    v0 = np.random.default_rng(12345).standard_normal(n)
    try:
        vals, vecs = spla.eigsh(H, k=1, which="SA", tol=tol * 1e-2, v0=v0, maxiter=50 * n)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge: {exc}") from exc
    vec = vecs[:, 0]
    residual = np.linalg.norm(H @ vec - vals[0] * vec)
    if residual > 1e-6 * max(1.0, abs(vals[0])):
        raise ConvergenceError(f"eigenpair residual {residual:.3e} too large")
    return float(vals[0]), vec


def ground_state_degeneracy(model: ModelHamiltonian, k: int = 6, atol: float = 1e-8) -> int:
    """Number of eigenvalues within ``atol`` of the ground energy (at most ``k``)."""
    basis = enumerate_sector(model)
    n = len(basis)
    if n <= DENSE_SOLVER_MAX_DIM:
        vals = np.linalg.eigvalsh(dense_hamiltonian(model, basis))
    else:
        vals = spla.eigsh(sector_hamiltonian(model, basis), k=min(k, n - 1), which="SA",
                          return_eigenvectors=False)
    vals = np.sort(vals)
    return int(np.sum(vals - vals[0] <= atol * max(1.0, abs(vals[0]))))


def _split(model: ModelHamiltonian, basis: SectorBasis):
    H = dense_hamiltonian(model, basis)
    h = np.diag(H).copy()
    return h, H - np.diag(h)


def exact_one_step(matrix: np.ndarray, model: ModelHamiltonian, r: float, S: float, *,
                   basis: SectorBasis | None = None, symmetrize: bool = False,
                   _split_cache=None) -> np.ndarray:
    """Deterministic loop map: resolvent-weighted ``M - (H_int M + M H_int) / 2r``."""
    if basis is None:
        basis = enumerate_sector(model)
    n = len(basis)
    if n > ONE_STEP_MAX_DIM:
        raise CapacityError(f"dense one-step map limited to dimension {ONE_STEP_MAX_DIM}")
    h, Hint = _split_cache if _split_cache is not None else _split(model, basis)
    denom = r - S + 0.5 * (h[:, None] + h[None, :])
    if np.any(denom <= 0):
        raise ValueError(f"resolvent denominator nonpositive (min {denom.min():.4g}); increase r")
    M = np.asarray(matrix, dtype=float)
    out = (r / denom) * (M - (Hint @ M + M @ Hint) / (2.0 * r))
    if symmetrize:
        out = 0.5 * (out + out.T)
    return out


def free_ground_matrix(model: ModelHamiltonian, basis: SectorBasis | None = None) -> np.ndarray:
    """Unit-trace equal mixture of the degenerate free ground-state dyads."""
    if basis is None:
        basis = enumerate_sector(model)
    idx = basis.index(model.free_ground_codes())
    M = np.zeros((len(basis), len(basis)))
    M[idx, idx] = 1.0 / len(idx)
    return M


def projected_energy(matrix: np.ndarray, H: np.ndarray) -> float:
    # Tr(H M) / Tr(M)
    return float(np.sum(H.T * matrix) / np.trace(matrix))


def fixed_point_iterate(model: ModelHamiltonian, r: float, shift, n: int, *,
                        initial: np.ndarray | None = None, renormalize: bool = True):
    """Iterate the exact loop map ``n`` times.

    ``shift`` is a constant or a callable ``shift(iteration) -> S``. Returns the
    final matrix and the projected energy before the first and after every step.
    """
    basis = enumerate_sector(model)
    h, Hint = _split(model, basis)
    H = Hint + np.diag(h)
    M = free_ground_matrix(model, basis) if initial is None else np.array(initial, dtype=float)
    energies = [projected_energy(M, H)]
    schedule = shift if callable(shift) else (lambda _it: shift)
    for it in range(n):
        M = exact_one_step(M, model, r, schedule(it), basis=basis, symmetrize=True,
                           _split_cache=(h, Hint))
        scale = np.abs(M).max()
        if not np.isfinite(scale) or scale > 1e250:
            raise DivergenceError("iterated matrix overflowed; use a shift closer to E0 or renormalize")
        if renormalize:
            M = M / np.trace(M)
        energies.append(projected_energy(M, H))
    return M, np.array(energies)
