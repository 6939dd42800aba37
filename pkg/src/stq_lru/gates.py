"""Gate set of two singlet-triplet qubits on four quantum dots.

Spins 0..3 are QD1..QD4.  The data qubit D lives on (QD1, QD2), the
ancilla A on (QD3, QD4) and the entangling gate couples QD2 and QD3.
All angles are dimensionless (``J t / h`` or ``dE t / h``), one unit is a
full rotation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np
from scipy.linalg import expm

from .spin import (
    HermitianGenerator,
    PureState,
    SpinError,
    UnitaryOp,
    basis_index,
    embed_matrix,
    exp_generator,
    pauli_dot,
    swap_matrix,
    sz_difference,
)

N_SPINS = 4
DQD_PAIRS = {"D": (0, 1), "A": (2, 3)}
INTER_PAIR = (1, 2)

Pair = Union[str, Sequence[int]]

_INV_SQRT2 = 1 / np.sqrt(2)


def resolve_pair(pair: Pair, n: int = N_SPINS) -> tuple[int, int]:
    """Accept ``"D"``, ``"A"`` or an explicit ``(i, j)`` spin pair."""
    if isinstance(pair, str):
        try:
            return DQD_PAIRS[pair.upper()]
        except KeyError:
            raise SpinError(f"unknown DQD {pair!r}; expected 'D' or 'A'") from None
    i, j = (int(p) for p in pair)
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise SpinError(f"invalid spin pair {(i, j)} for {n} spins")
    return i, j


# ---------------------------------------------------------------------------
# two-spin encoding


def _two_spin(bits: str) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[basis_index(bits)] = 1.0
    return v


SINGLET = (_two_spin("↑↓") - _two_spin("↓↑")) * _INV_SQRT2
TRIPLET_0 = (_two_spin("↑↓") + _two_spin("↓↑")) * _INV_SQRT2
TRIPLET_PLUS = _two_spin("↑↑")
TRIPLET_MINUS = _two_spin("↓↓")

PAIR_STATES = {"S": SINGLET, "T0": TRIPLET_0, "T+": TRIPLET_PLUS, "T-": TRIPLET_MINUS}


@dataclass(frozen=True)
class DqdEncoding:
    """The singlet-triplet basis of one spin pair."""

    pair: tuple[int, int]

    @property
    def S(self) -> PureState:
        return PureState(2, SINGLET)

    @property
    def T0(self) -> PureState:
        return PureState(2, TRIPLET_0)

    @property
    def T_plus(self) -> PureState:
        return PureState(2, TRIPLET_PLUS)

    @property
    def T_minus(self) -> PureState:
        return PureState(2, TRIPLET_MINUS)

    def basis(self) -> np.ndarray:
        """Columns S, T0, T+, T-."""
        return np.column_stack([SINGLET, TRIPLET_0, TRIPLET_PLUS, TRIPLET_MINUS])


def product_state(first: str, second: str) -> PureState:
    """``|first^(QD1,QD2) second^(QD3,QD4)>`` for labels S, T0, T+, T-."""
    return PureState(N_SPINS, np.kron(PAIR_STATES[first], PAIR_STATES[second]))


# ---------------------------------------------------------------------------
# closed-form matrices (used on the hot path of the search)


def _phase_local(phi: float) -> np.ndarray:
    # exp(-i 2pi (phi/2)(sz_i - sz_j)) on (|dd>, |du>, |ud>, |uu>)
    return np.diag([1.0, np.exp(2j * np.pi * phi), np.exp(-2j * np.pi * phi), 1.0]).astype(complex)


def _entangle_local(phi: float, psi: float) -> np.ndarray:
    # antiparallel block: exp(i pi phi) exp(-i 2pi [(phi/2) X + psi Z]) in (|ud>, |du>)
    a, b = np.pi * phi, 2 * np.pi * psi
    r = np.hypot(a, b)
    c = np.cos(r)
    s = np.sinc(r / np.pi)  # sin(r)/r, finite at r = 0
    # Z in the (|ud>, |du>) block is diag(+1, -1)
    block = np.array([[c - 1j * s * b, -1j * s * a], [-1j * s * a, c + 1j * s * b]])
    block = block * np.exp(1j * np.pi * phi)
    m = np.eye(4, dtype=complex)
    m[2, 2], m[2, 1] = block[0, 0], block[0, 1]
    m[1, 2], m[1, 1] = block[1, 0], block[1, 1]
    return m


def _exchange_local(phi: float) -> np.ndarray:
    return _entangle_local(phi, 0.0)


def phase_matrix(pair: Pair, phi: float, n: int = N_SPINS) -> np.ndarray:
    return embed_matrix(_phase_local(phi), resolve_pair(pair, n), n)


def exchange_matrix(pair: Pair, phi: float, n: int = N_SPINS) -> np.ndarray:
    return embed_matrix(_exchange_local(phi), resolve_pair(pair, n), n)


def entangle_matrix(phi: float, psi: float, pair: Pair = INTER_PAIR, n: int = N_SPINS) -> np.ndarray:
    return embed_matrix(_entangle_local(phi, psi), resolve_pair(pair, n), n)


# ---------------------------------------------------------------------------
# generators and gate builders


def phase_generator(pair: Pair, phi: float, n: int = N_SPINS) -> HermitianGenerator:
    i, j = resolve_pair(pair, n)
    return HermitianGenerator(n, 2 * np.pi * (phi / 2) * sz_difference(i, j, n))


def exchange_generator(pair: Pair, phi: float, n: int = N_SPINS) -> HermitianGenerator:
    i, j = resolve_pair(pair, n)
    return HermitianGenerator(n, 2 * np.pi * (phi / 4) * (pauli_dot(i, j, n) - np.eye(2**n)))


def entangle_generator(phi: float, psi: float, pair: Pair = INTER_PAIR, n: int = N_SPINS) -> HermitianGenerator:
    i, j = resolve_pair(pair, n)
    h = (phi / 4) * (pauli_dot(i, j, n) - np.eye(2**n)) + (psi / 2) * sz_difference(i, j, n)
    return HermitianGenerator(n, 2 * np.pi * h)


def phase_gate(pair: Pair, phi: float, n: int = N_SPINS) -> UnitaryOp:
    """``Z_phi``: opposite phases ``exp(-/+ i 2 pi phi)`` on ``|↑↓>`` and ``|↓↑>`` of the pair."""
    return UnitaryOp(n, phase_matrix(pair, phi, n))


def exchange_gate(pair: Pair, phi: float, n: int = N_SPINS) -> UnitaryOp:
    """``X_phi``: identity on the triplets, ``exp(i 2 pi phi)`` on the singlet."""
    return UnitaryOp(n, exchange_matrix(pair, phi, n))


def entangle_gate(phi: float, psi: float, pair: Pair = INTER_PAIR, n: int = N_SPINS) -> UnitaryOp:
    """``U_{phi,psi}``: simultaneous exchange and field gradient across QD2-QD3."""
    return UnitaryOp(n, entangle_matrix(phi, psi, pair, n))


# ---------------------------------------------------------------------------
# logical operators on the qubit subspace span{S, T0}


def _logical_local(kind: str, as_printed: bool = False) -> np.ndarray:
    s, t0 = SINGLET[:, None], TRIPLET_0[:, None]
    if kind == "tau_z":
        return t0 @ t0.conj().T - s @ s.conj().T
    if kind == "tau_x":
        if as_printed:
            # |S><T0| + |S><T0|, not Hermitian
            return 2 * s @ t0.conj().T
        return s @ t0.conj().T + t0 @ s.conj().T
    if kind == "hadamard":
        # (tau_x + tau_z)/sqrt2 on span{S, T0}: S -> (T0 - S)/sqrt2, T0 -> (S + T0)/sqrt2;
        # identity on T+ and T-
        leak = np.outer(TRIPLET_PLUS, TRIPLET_PLUS) + np.outer(TRIPLET_MINUS, TRIPLET_MINUS)
        return _INV_SQRT2 * (_logical_local("tau_x") + _logical_local("tau_z")) + leak
    raise SpinError(f"unknown logical operator {kind!r}")


def tau_z(dqd: str) -> HermitianGenerator:
    """``|T0><T0| - |S><S|`` on one DQD; zero on T+ and T-."""
    return HermitianGenerator(N_SPINS, embed_matrix(_logical_local("tau_z"), resolve_pair(dqd), N_SPINS))


def tau_x(dqd: str) -> HermitianGenerator:
    """``|S><T0| + |T0><S|`` on one DQD; zero on T+ and T-."""
    return HermitianGenerator(N_SPINS, embed_matrix(_logical_local("tau_x"), resolve_pair(dqd), N_SPINS))


def tau_x_as_printed(dqd: str) -> np.ndarray:
    """The non-Hermitian ``2 |S><T0|`` variant, returned as a bare matrix."""
    return embed_matrix(_logical_local("tau_x", as_printed=True), resolve_pair(dqd), N_SPINS)


def hadamard(dqd: str) -> UnitaryOp:
    return UnitaryOp(N_SPINS, embed_matrix(_logical_local("hadamard"), resolve_pair(dqd), N_SPINS))


def logical_operator(kind: str, dqd: str):
    """``kind`` in {"tau_z", "tau_x", "hadamard"}.

    The tau operators come back as Hermitian generators, the Hadamard as a unitary.
    """
    key = kind.lower().replace("logical", "").strip("_")
    if key in ("tau_z", "tauz"):
        return tau_z(dqd)
    if key in ("tau_x", "taux"):
        return tau_x(dqd)
    if key in ("hadamard", "h"):
        return hadamard(dqd)
    raise SpinError(f"unknown logical operator {kind!r}")


def logical_rotation(kind: str, dqd: str, theta: float) -> UnitaryOp:
    """``exp(-i theta tau)`` for ``kind`` in {"tau_x", "tau_z"}."""
    return exp_generator(theta * logical_operator(kind, dqd))


def zz_generator() -> HermitianGenerator:
    return HermitianGenerator(N_SPINS, tau_z("D").matrix @ tau_z("A").matrix)


def zz_gate(theta: float) -> UnitaryOp:
    """``exp(-i theta tau_z^D tau_z^A)``."""
    return exp_generator(theta * zz_generator())


def sinl_longrange(as_printed: bool = False) -> np.ndarray | UnitaryOp:
    """SINL built from two ``tau_z tau_z`` couplings and logical rotations.

    Time order: ``H^A``, ``zz(pi/4)``, ``exp(-i 3pi/4 tau_x^A)``,
    ``exp(-i 3pi/4 tau_x^D)``, ``zz(pi/4)``, ``H^D``.  With ``as_printed``
    the rotations use ``tau_x = 2|S><T0|``; the product is then not unitary
    and is returned as a bare matrix.
    """
    zz = zz_gate(np.pi / 4).matrix
    if as_printed:
        rx_d = expm(-1j * (3 * np.pi / 4) * tau_x_as_printed("D"))
        rx_a = expm(-1j * (3 * np.pi / 4) * tau_x_as_printed("A"))
    else:
        rx_d = logical_rotation("tau_x", "D", 3 * np.pi / 4).matrix
        rx_a = logical_rotation("tau_x", "A", 3 * np.pi / 4).matrix
    m = hadamard("D").matrix @ zz @ rx_d @ rx_a @ zz @ hadamard("A").matrix
    return m if as_printed else UnitaryOp(N_SPINS, m)


# ---------------------------------------------------------------------------
# symbolic gates


class GateKind(str, Enum):
    PHASE = "Z"
    EXCHANGE = "X"
    ENTANGLE = "U"
    TAU_X = "TX"
    TAU_Z = "TZ"
    HADAMARD = "H"
    ZZ = "ZZ"


_PERIODIC = {GateKind.PHASE, GateKind.EXCHANGE}
_DQD_KINDS = {GateKind.PHASE, GateKind.EXCHANGE, GateKind.TAU_X, GateKind.TAU_Z, GateKind.HADAMARD}
_N_PARAMS = {
    GateKind.PHASE: 1,
    GateKind.EXCHANGE: 1,
    GateKind.ENTANGLE: 2,
    GateKind.TAU_X: 1,
    GateKind.TAU_Z: 1,
    GateKind.HADAMARD: 0,
    GateKind.ZZ: 1,
}
_DESCRIPTOR_RE = re.compile(r"^\s*([A-Za-z]+)\s*\(([^)]*)\)\s*$")


def reduce_angle(x: float) -> float:
    r = float(x) % 1.0
    return 0.0 if r == 1.0 else r


def _fmt(x: float) -> str:
    return format(float(x), ".15g")


@dataclass(frozen=True)
class GateDescriptor:
    """A symbolic gate with its target DQD (if any) and angles.

    ``Z``/``X`` angles are reduced mod 1 (the gates are 1-periodic).  The
    entangling gate is only periodic in an angle when the other one is zero,
    so its angles are reduced only in that case.
    """

    kind: GateKind
    target: str | None = None
    params: tuple[float, ...] = ()

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        params = tuple(float(p) for p in self.params)
        if len(params) != _N_PARAMS[kind]:
            raise SpinError(f"{kind.value} takes {_N_PARAMS[kind]} angle(s), got {len(params)}")
        if kind in _DQD_KINDS:
            if self.target is None or str(self.target).upper() not in DQD_PAIRS:
                raise SpinError(f"{kind.value} needs a target DQD 'D' or 'A', got {self.target!r}")
            object.__setattr__(self, "target", str(self.target).upper())
        elif self.target is not None:
            raise SpinError(f"{kind.value} takes no target")
        if kind in _PERIODIC:
            params = tuple(reduce_angle(p) for p in params)
        elif kind is GateKind.ENTANGLE:
            phi, psi = params
            if psi == 0.0:
                phi = reduce_angle(phi)
            if phi == 0.0:
                psi = reduce_angle(psi)
            params = (phi, psi)
        object.__setattr__(self, "params", params)

    def matrix(self) -> np.ndarray:
        k, p = self.kind, self.params
        if k is GateKind.PHASE:
            return phase_matrix(self.target, p[0])
        if k is GateKind.EXCHANGE:
            return exchange_matrix(self.target, p[0])
        if k is GateKind.ENTANGLE:
            return entangle_matrix(p[0], p[1])
        if k is GateKind.TAU_X:
            return logical_rotation("tau_x", self.target, p[0]).matrix
        if k is GateKind.TAU_Z:
            return logical_rotation("tau_z", self.target, p[0]).matrix
        if k is GateKind.HADAMARD:
            return hadamard(self.target).matrix
        return zz_gate(p[0]).matrix

    def unitary(self) -> UnitaryOp:
        return UnitaryOp(N_SPINS, self.matrix())

    def __str__(self) -> str:
        args = ([self.target] if self.target else []) + [_fmt(p) for p in self.params]
        return f"{self.kind.value}({','.join(args)})"

    @classmethod
    def parse(cls, text: str) -> "GateDescriptor":
        """Inverse of ``str``: ``X(D,0.5)``, ``U(0.5,0.4330127)``, ``H(A)``, ``ZZ(0.785)``."""
        m = _DESCRIPTOR_RE.match(text)
        if not m:
            raise SpinError(f"cannot parse gate {text!r}")
        name, body = m.group(1).upper(), m.group(2)
        try:
            kind = GateKind(name)
        except ValueError:
            raise SpinError(f"unknown gate kind {name!r}") from None
        args = [a.strip() for a in body.split(",")] if body.strip() else []
        target = None
        if kind in _DQD_KINDS:
            if not args:
                raise SpinError(f"{name} needs a target in {text!r}")
            target, args = args[0], args[1:]
        try:
            params = tuple(float(a) for a in args)
        except ValueError:
            raise SpinError(f"bad angle in {text!r}") from None
        return cls(kind, target, params)


# SWAP of QD2, QD3 built from gates with a nonzero gradient
_DECOMP_PHI = 1 / (2 * np.sqrt(2))
_DECOMP_PSI = 1 / (4 * np.sqrt(2))
SWAP23_DECOMPOSITION = (
    GateDescriptor(GateKind.ENTANGLE, None, (_DECOMP_PHI, _DECOMP_PSI)),
    GateDescriptor(GateKind.ENTANGLE, None, (0.0, 0.25)),
    GateDescriptor(GateKind.ENTANGLE, None, (_DECOMP_PHI, _DECOMP_PSI)),
)


def swap23_decomposition_phase(tol: float = 1e-10) -> float:
    """Phase ``chi`` with ``decomposition = SWAP23 * (P_par + e^{i chi} P_anti)``.

    Raises if the product is not of that form within ``tol``.
    """
    m = np.eye(2**N_SPINS, dtype=complex)
    for g in SWAP23_DECOMPOSITION:
        m = g.matrix() @ m
    w = swap_matrix(*INTER_PAIR, N_SPINS).T @ m
    i, j = (N_SPINS - 1 - q for q in INTER_PAIR)
    idx = np.arange(2**N_SPINS)
    anti = ((idx >> i) & 1) != ((idx >> j) & 1)
    chi_val = np.mean(np.diag(w)[anti])
    expected = np.diag(np.where(anti, chi_val, 1.0))
    if np.max(np.abs(w - expected)) > tol or abs(abs(chi_val) - 1) > tol:
        raise SpinError("decomposition is not SWAP23 up to an antiparallel-block phase")
    return float(np.angle(chi_val))


def substitute_swap23(sequence: Sequence["GateDescriptor"], tol: float = 1e-12) -> list["GateDescriptor"]:
    """Replace every ``U(1/2 + k, 0)`` (a bare SWAP23) by the three-gate decomposition."""
    out = []
    for g in sequence:
        is_swap = (
            g.kind is GateKind.ENTANGLE and abs(g.params[1]) < tol and abs(reduce_angle(g.params[0]) - 0.5) < tol
        )
        out.extend(SWAP23_DECOMPOSITION if is_swap else (g,))
    return out
