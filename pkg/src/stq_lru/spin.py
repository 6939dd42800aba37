"""Dense linear algebra on small spin-1/2 registers.

Basis convention: a register of ``n`` spins is indexed by big-endian
bitstrings, spin 0 (QD1) is the most significant bit and a set bit means
spin up.  So for two spins ``|↑↓>`` is index ``0b10 == 2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12

_UP_CHARS = frozenset("↑u1+")
_DOWN_CHARS = frozenset("↓d0-")

# single-site operators in the (↓, ↑) = (index 0, index 1) basis
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class SpinError(ValueError):
    """Invalid register, site list or operator."""


def _check_square(matrix: np.ndarray, n_spins: int) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    dim = 2**n_spins
    if matrix.shape != (dim, dim):
        raise SpinError(f"expected {dim}x{dim} matrix for {n_spins} spins, got {matrix.shape}")
    return matrix


@dataclass(frozen=True, eq=False)
class PureState:
    n_spins: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_spins < 1:
            raise SpinError("n_spins must be positive")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.n_spins:
            raise SpinError(f"state of {self.n_spins} spins needs {2**self.n_spins} amplitudes, got {amps.size}")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise SpinError(f"state is not normalized (norm={np.linalg.norm(amps)!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "PureState":
        vector = np.asarray(vector, dtype=complex).reshape(-1)
        n = int(round(np.log2(vector.size)))
        return cls(n, vector / np.linalg.norm(vector))

    def overlap(self, other: "PureState") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    n_spins: int
    matrix: np.ndarray

    def __post_init__(self):
        matrix = _check_square(self.matrix, self.n_spins)
        err = unitarity_error(matrix)
        if err > UNITARY_TOL:
            raise SpinError(f"matrix is not unitary (max |U^dag U - I| = {err:.3e})")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, n_spins: int) -> "UnitaryOp":
        return cls(n_spins, np.eye(2**n_spins, dtype=complex))

    def dag(self) -> "UnitaryOp":
        return UnitaryOp(self.n_spins, self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, UnitaryOp):
            _same_register(self, other)
            return UnitaryOp(self.n_spins, self.matrix @ other.matrix)
        if isinstance(other, PureState):
            _same_register(self, other)
            return PureState(self.n_spins, self.matrix @ other.amplitudes)
        return NotImplemented


@dataclass(frozen=True, eq=False)
class HermitianGenerator:
    n_spins: int
    matrix: np.ndarray

    def __post_init__(self):
        matrix = _check_square(self.matrix, self.n_spins)
        err = float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0
        if err > HERMITIAN_TOL:
            raise SpinError(f"generator is not Hermitian (max |H - H^dag| = {err:.3e})")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def __add__(self, other: "HermitianGenerator") -> "HermitianGenerator":
        _same_register(self, other)
        return HermitianGenerator(self.n_spins, self.matrix + other.matrix)

    def __mul__(self, scalar: float) -> "HermitianGenerator":
        return HermitianGenerator(self.n_spins, float(scalar) * self.matrix)

    __rmul__ = __mul__


Operator = Union[UnitaryOp, HermitianGenerator]


def _same_register(a, b) -> None:
    if a.n_spins != b.n_spins:
        raise SpinError(f"register size mismatch: {a.n_spins} vs {b.n_spins}")


def unitarity_error(matrix: np.ndarray) -> float:
    """Max-norm of ``U^dag U - I``."""
    matrix = np.asarray(matrix)
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))


def _parse_bits(bits: Union[str, Sequence[int]]) -> list[int]:
    if isinstance(bits, str):
        out = []
        for ch in bits:
            if ch in _UP_CHARS:
                out.append(1)
            elif ch in _DOWN_CHARS:
                out.append(0)
            else:
                raise SpinError(f"unrecognised spin symbol {ch!r}")
        return out
    return [int(b) for b in bits]


def basis_index(bits: Union[str, Sequence[int]]) -> int:
    return reduce(lambda acc, b: (acc << 1) | b, _parse_bits(bits), 0)


def basis_state(bits: Union[str, Sequence[int]], n: int | None = None) -> PureState:
    """Product state from a spin string such as ``"↑↓↑↓"`` (or ``"udud"``, ``[1, 0, 1, 0]``).

    ``n`` is optional; when given it must match the length of ``bits``.
    """
    parsed = _parse_bits(bits)
    if not parsed:
        raise SpinError("empty bitstring")
    if n is not None and n != len(parsed):
        raise SpinError(f"bitstring has length {len(parsed)}, register has {n} spins")
    vec = np.zeros(2 ** len(parsed), dtype=complex)
    vec[basis_index(parsed)] = 1.0
    return PureState(len(parsed), vec)


def site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Single-site matrix ``op`` placed on ``site`` of an ``n``-spin register."""
    factors = [IDENTITY_2] * n
    factors[site] = np.asarray(op, dtype=complex)
    return reduce(np.kron, factors)


def embed_matrix(local: np.ndarray, sites: Sequence[int], n: int) -> np.ndarray:
    """Embed a ``2^k x 2^k`` matrix acting on ``sites`` (in that order) into ``n`` spins."""
    sites = [int(s) for s in sites]
    k = len(sites)
    local = np.asarray(local, dtype=complex)
    if local.shape != (2**k, 2**k):
        raise SpinError(f"local operator shape {local.shape} does not match {k} sites")
    if len(set(sites)) != k:
        raise SpinError(f"duplicate sites in {sites}")
    if any(s < 0 or s >= n for s in sites):
        raise SpinError(f"sites {sites} out of range for {n} spins")
    rest = [s for s in range(n) if s not in sites]
    full = np.kron(local, np.eye(2 ** len(rest), dtype=complex))
    # full acts on the axis order sites + rest; permute back to 0..n-1
    order = sites + rest
    inv = np.argsort(order)
    tensor = full.reshape([2] * (2 * n))
    tensor = tensor.transpose(list(inv) + [n + i for i in inv])
    return tensor.reshape(2**n, 2**n)


def embed(local: Operator, sites: Sequence[int], n: int) -> Operator:
    """Place a ``k``-spin operator on ``sites`` of an ``n``-spin register."""
    if len(sites) != local.n_spins:
        raise SpinError(f"operator acts on {local.n_spins} spins but {len(sites)} sites given")
    return type(local)(n, embed_matrix(local.matrix, sites, n))


def exp_generator(H: HermitianGenerator) -> UnitaryOp:
    """``exp(-iH)`` by Hermitian eigendecomposition."""
    if not isinstance(H, HermitianGenerator):
        raise SpinError("exp_generator needs a HermitianGenerator")
    evals, evecs = np.linalg.eigh(H.matrix)
    return UnitaryOp(H.n_spins, (evecs * np.exp(-1j * evals)) @ evecs.conj().T)


def compose(gates: Iterable[UnitaryOp], n_spins: int | None = None) -> UnitaryOp:
    """Time-ordered product: ``gates[0]`` acts first, so it sits rightmost.

    An empty list gives the identity on ``n_spins`` spins.
    """
    gates = list(gates)
    if not gates:
        if n_spins is None:
            raise SpinError("compose() of an empty list needs n_spins")
        return UnitaryOp.identity(n_spins)
    n = gates[0].n_spins
    if n_spins is not None and n_spins != n:
        raise SpinError(f"register size mismatch: {n_spins} vs {n}")
    out = np.eye(2**n, dtype=complex)
    for g in gates:
        if g.n_spins != n:
            raise SpinError(f"register size mismatch: {g.n_spins} vs {n}")
        out = g.matrix @ out
    return UnitaryOp(n, out)


def _as_matrix(op) -> np.ndarray:
    return op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=complex)


def equal_up_to_global_phase(U, V, tol: float = 1e-8) -> tuple[bool, float]:
    """Whether ``U = exp(i theta) V`` entrywise within ``tol``; returns ``(ok, theta)``."""
    u, v = _as_matrix(U), _as_matrix(V)
    if u.shape != v.shape:
        return False, 0.0
    overlap = np.trace(v.conj().T @ u)
    if abs(overlap) < 1e-300:
        return False, 0.0
    theta = float(np.angle(overlap))
    ok = bool(np.max(np.abs(u - np.exp(1j * theta) * v)) <= tol)
    return ok, theta


def total_sz(n: int) -> np.ndarray:
    """Diagonal of ``sum_i sigma^z_i / 2`` in the computational basis."""
    idx = np.arange(2**n)
    ups = np.array([bin(i).count("1") for i in idx])
    return ups - n / 2.0


def sz_sectors(n: int) -> dict[float, np.ndarray]:
    """Basis indices grouped by total s_z."""
    sz = total_sz(n)
    return {float(v): np.flatnonzero(sz == v) for v in np.unique(sz)}


def sector_phase_equivalent(U, V, tol: float = 1e-8) -> bool:
    """Whether ``V^dag U`` is diagonal and constant on each total-s_z sector."""
    u, v = _as_matrix(U), _as_matrix(V)
    if u.shape != v.shape:
        return False
    n = int(round(np.log2(u.shape[0])))
    w = v.conj().T @ u
    diag = np.diag(w)
    if np.max(np.abs(w - np.diag(diag))) > tol:
        return False
    for idx in sz_sectors(n).values():
        block = diag[idx]
        ref = block.mean()
        if np.max(np.abs(block - ref)) > tol or abs(abs(ref) - 1.0) > tol:
            return False
    return True


def check_sz_conservation(U, tol: float = 1e-12) -> bool:
    """``[U, S_z^total] = 0`` within ``tol`` (max-norm)."""
    u = _as_matrix(U)
    n = int(round(np.log2(u.shape[0])))
    sz = total_sz(n)
    comm = u * sz[None, :] - sz[:, None] * u
    return bool(np.max(np.abs(comm)) <= tol)


def pauli_dot(i: int, j: int, n: int) -> np.ndarray:
    """``sigma_i . sigma_j`` on an ``n``-spin register."""
    return sum(site_operator(p, i, n) @ site_operator(p, j, n) for p in (SIGMA_X, SIGMA_Y, SIGMA_Z))


def sz_difference(i: int, j: int, n: int) -> np.ndarray:
    """``sigma^z_i - sigma^z_j``."""
    return site_operator(SIGMA_Z, i, n) - site_operator(SIGMA_Z, j, n)


def swap_matrix(i: int, j: int, n: int) -> np.ndarray:
    """Permutation matrix exchanging spins ``i`` and ``j``, built by relabelling bits."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - k)) & 1 for k in range(n)]
        bits[i], bits[j] = bits[j], bits[i]
        out[basis_index(bits), col] = 1.0
    return out
