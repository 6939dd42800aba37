"""Truth tables of the SIL and SINL leakage reduction units, and a verifier.

Inputs are always ``|X^D S^A>`` with D on (QD1, QD2) and A on (QD3, QD4),
X in {S, T0, T+, T-}.  Outputs are written in physical position order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .gates import N_SPINS, PAIR_STATES, GateDescriptor
from .spin import SpinError, UnitaryOp, compose, unitarity_error

DEFAULT_TOL = 1e-8


class LruKind(str, Enum):
    SIL = "SIL"
    SINL = "SINL"

    @classmethod
    def parse(cls, value: Union[str, "LruKind"]) -> "LruKind":
        try:
            return cls(str(value.value if isinstance(value, LruKind) else value).upper())
        except ValueError:
            raise SpinError(f"unknown LRU kind {value!r}; expected SIL or SINL") from None


class NonUnitaryError(SpinError):
    """The operator handed to the verifier is not unitary."""


def _ket(first: str, second: str) -> np.ndarray:
    return np.kron(PAIR_STATES[first], PAIR_STATES[second])


@dataclass(frozen=True, eq=False)
class LruTruthTable:
    """Input states and output constraints of an LRU.

    ``inputs`` holds ``|S S>, |T0 S>, |T+ S>, |T- S>`` as columns.
    ``targets`` are the required images of the first two (up to one shared
    phase).  ``leak_spaces[k]`` is a 16x2 orthonormal basis of the allowed
    image of the k-th leaked input; its columns fix the order in which the
    free constants ``alpha_k, beta_k`` are read off.
    """

    kind: LruKind
    inputs: np.ndarray
    targets: np.ndarray
    leak_spaces: tuple[np.ndarray, np.ndarray]
    labels: tuple[str, ...] = field(default=("S S", "T0 S", "T+ S", "T- S"))

    @property
    def leak_projectors(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(b @ b.conj().T for b in self.leak_spaces)


def build_target(kind: Union[str, LruKind]) -> LruTruthTable:
    kind = LruKind.parse(kind)
    inputs = np.column_stack([_ket("S", "S"), _ket("T0", "S"), _ket("T+", "S"), _ket("T-", "S")])
    if kind is LruKind.SIL:
        # the leaked D is replaced, the leakage moves to the ancilla position
        targets = np.column_stack([_ket("S", "S"), _ket("T0", "S")])
        leak = (
            np.column_stack([_ket("S", "T+"), _ket("T0", "T+")]),
            np.column_stack([_ket("S", "T-"), _ket("T0", "T-")]),
        )
    else:
        # the qubit moves to the ancilla position, the leakage stays put
        targets = np.column_stack([_ket("S", "S"), _ket("S", "T0")])
        leak = (
            np.column_stack([_ket("T+", "S"), _ket("T+", "T0")]),
            np.column_stack([_ket("T-", "S"), _ket("T-", "T0")]),
        )
    return LruTruthTable(kind, inputs, targets, leak)


def _as_target(target) -> LruTruthTable:
    return target if isinstance(target, LruTruthTable) else build_target(target)


@dataclass
class LruVerdict:
    """Outcome of :func:`verify`.

    ``residuals`` are, in order: the two distances
    ``|| U|i_k> - exp(i theta)|t_k> ||`` of the computational inputs and
    the two leaked-output deficits ``1 - ||P_k U|i_k>||^2``.
    """

    passed: bool
    theta: float
    alpha1: complex
    beta1: complex
    alpha2: complex
    beta2: complex
    residuals: list[float]
    kind: str = ""
    tol: float = DEFAULT_TOL

    @property
    def moduli(self) -> tuple[float, float, float, float]:
        return tuple(abs(x) for x in (self.alpha1, self.beta1, self.alpha2, self.beta2))

    def to_dict(self) -> dict:
        def c(z: complex) -> list[float]:
            return [float(z.real), float(z.imag)]

        return {
            "kind": self.kind,
            "pass": bool(self.passed),
            "theta": float(self.theta),
            "alpha1": c(self.alpha1),
            "beta1": c(self.beta1),
            "alpha2": c(self.alpha2),
            "beta2": c(self.beta2),
            "residuals": [float(r) for r in self.residuals],
            "tol": float(self.tol),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LruVerdict":
        def z(pair) -> complex:
            return complex(pair[0], pair[1]) if isinstance(pair, (list, tuple)) else complex(pair)

        return cls(
            passed=bool(data["pass"]),
            theta=float(data["theta"]),
            alpha1=z(data["alpha1"]),
            beta1=z(data["beta1"]),
            alpha2=z(data["alpha2"]),
            beta2=z(data["beta2"]),
            residuals=[float(r) for r in data["residuals"]],
            kind=data.get("kind", ""),
            tol=float(data.get("tol", DEFAULT_TOL)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _matrix(U) -> np.ndarray:
    m = U.matrix if isinstance(U, UnitaryOp) else np.asarray(U, dtype=complex)
    if m.shape != (2**N_SPINS, 2**N_SPINS):
        raise SpinError(f"LRU verification needs a 16x16 operator, got {m.shape}")
    return m


def verify(U, target: Union[str, LruKind, LruTruthTable], tol: float = DEFAULT_TOL) -> LruVerdict:
    """Check a four-spin unitary against an LRU truth table.

    Passes iff one phase ``theta`` brings both computational outputs within
    ``tol`` of their targets and each leaked output has squared overlap at
    least ``1 - tol`` with its allowed subspace.
    """
    table = _as_target(target)
    m = _matrix(U)
    err = unitarity_error(m)
    if err > max(tol, 1e-10):
        raise NonUnitaryError(f"operator is not unitary (max |U^dag U - I| = {err:.3e})")

    out = m @ table.inputs
    a = [np.vdot(table.targets[:, k], out[:, k]) for k in range(2)]
    theta = float(np.angle(a[0] + a[1]))
    phase = np.exp(1j * theta)
    comp = [float(np.linalg.norm(out[:, k] - phase * table.targets[:, k])) for k in range(2)]

    coeffs, leak = [], []
    for k, basis in enumerate(table.leak_spaces):
        c = basis.conj().T @ out[:, 2 + k]
        coeffs.append(c)
        leak.append(float(1.0 - np.vdot(c, c).real))

    residuals = comp + leak
    passed = all(r <= tol for r in residuals)
    return LruVerdict(
        passed=passed,
        theta=theta,
        alpha1=complex(coeffs[0][0]),
        beta1=complex(coeffs[0][1]),
        alpha2=complex(coeffs[1][0]),
        beta2=complex(coeffs[1][1]),
        residuals=residuals,
        kind=table.kind.value,
        tol=tol,
    )


def reconstructed_outputs(verdict: LruVerdict, target) -> np.ndarray:
    """Ideal images of the four inputs implied by a verdict's phase and constants."""
    table = _as_target(target)
    phase = np.exp(1j * verdict.theta)
    plus, minus = table.leak_spaces
    return np.column_stack(
        [
            phase * table.targets[:, 0],
            phase * table.targets[:, 1],
            verdict.alpha1 * plus[:, 0] + verdict.beta1 * plus[:, 1],
            verdict.alpha2 * minus[:, 0] + verdict.beta2 * minus[:, 1],
        ]
    )


# ---------------------------------------------------------------------------
# gate sequences


def assemble(sequence: Iterable[Union[GateDescriptor, str]]) -> UnitaryOp:
    """Four-spin unitary of a gate list; the first gate acts first."""
    gates = []
    for g in sequence:
        if isinstance(g, str):
            g = GateDescriptor.parse(g)
        gates.append(g.unitary())
    return compose(gates, n_spins=N_SPINS)


def parse_sequence(text: str) -> list[GateDescriptor]:
    """One descriptor per line; ``#`` starts a comment, blank lines are ignored."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(GateDescriptor.parse(line))
        except SpinError as exc:
            raise SpinError(f"line {lineno}: {exc}") from None
    return out


def read_sequence(path: Union[str, Path]) -> list[GateDescriptor]:
    return parse_sequence(Path(path).read_text(encoding="utf-8"))


def format_sequence(sequence: Sequence[GateDescriptor], header: Sequence[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    lines += [str(g) for g in sequence]
    return "\n".join(lines) + "\n"
