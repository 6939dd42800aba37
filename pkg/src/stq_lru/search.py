"""Numerical synthesis of LRU gate sequences.

A template is a list of time steps; gates inside one step act on disjoint
spin pairs and therefore commute.  Each gate angle is either fixed or free,
and the optimizer searches the free angles from uniform random starts in
``[0, 1)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import least_squares, minimize

from .gates import (
    DQD_PAIRS,
    INTER_PAIR,
    N_SPINS,
    GateDescriptor,
    GateKind,
    _entangle_local,
    _phase_local,
    reduce_angle,
)
from .spin import SpinError
from .verify import DEFAULT_TOL, LruTruthTable, LruVerdict, build_target, verify

MAX_FREE_PARAMS = 16
MERGE_TOL = 1e-6


@dataclass(frozen=True)
class Slot:
    """One gate of a template; ``None`` entries of ``params`` are free."""

    kind: GateKind
    target: Optional[str] = None
    params: tuple = (None,)

    @property
    def n_free(self) -> int:
        return sum(p is None for p in self.params)

    @property
    def pair(self) -> tuple[int, int]:
        return INTER_PAIR if self.kind is GateKind.ENTANGLE else DQD_PAIRS[self.target]

    def describe(self) -> str:
        args = ([self.target] if self.target else []) + [
            "*" if p is None else format(p, ".15g") for p in self.params
        ]
        return f"{self.kind.value}({','.join(args)})"


def U(phi=None, psi=None) -> Slot:
    return Slot(GateKind.ENTANGLE, None, (phi, psi))


def Ug(phi=None) -> Slot:
    """Entangling slot without field gradient (``psi = 0``)."""
    return Slot(GateKind.ENTANGLE, None, (phi, 0.0))


def Z(dqd: str, phi=None) -> Slot:
    return Slot(GateKind.PHASE, dqd, (phi,))


def X(dqd: str, phi=None) -> Slot:
    return Slot(GateKind.EXCHANGE, dqd, (phi,))


@dataclass(frozen=True)
class SequenceTemplate:
    id: str
    steps: tuple
    gradient_allowed: bool
    note: str = ""

    def __post_init__(self):
        steps = tuple(tuple(s) if isinstance(s, (list, tuple)) else (s,) for s in self.steps)
        object.__setattr__(self, "steps", steps)
        for step in steps:
            used = [q for slot in step for q in slot.pair]
            if len(used) != len(set(used)):
                raise SpinError(f"template {self.id}: gates in one step must act on disjoint spins")
        if self.n_entangling < 1:
            raise SpinError(f"template {self.id}: needs at least one entangling slot")
        if self.n_free > MAX_FREE_PARAMS:
            raise SpinError(f"template {self.id}: {self.n_free} free parameters exceeds {MAX_FREE_PARAMS}")
        if not self.gradient_allowed:
            for slot in self.slots:
                if slot.kind is GateKind.ENTANGLE and slot.params[1] != 0.0:
                    raise SpinError(f"template {self.id}: gradient-free template has a psi != 0 slot")

    @property
    def slots(self) -> list[Slot]:
        return [slot for step in self.steps for slot in step]

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def n_entangling(self) -> int:
        return sum(slot.kind is GateKind.ENTANGLE for slot in self.slots)

    @property
    def n_free(self) -> int:
        return sum(slot.n_free for slot in self.slots)

    def periodic_mask(self) -> np.ndarray:
        """Which free angles may be reduced mod 1 without changing the unitary."""
        mask = []
        for slot in self.slots:
            for k, p in enumerate(slot.params):
                if p is not None:
                    continue
                if slot.kind is GateKind.ENTANGLE:
                    other = slot.params[1 - k]
                    mask.append(other == 0.0)
                else:
                    mask.append(True)
        return np.array(mask, dtype=bool)

    def gate_angles(self, params: Sequence[float]) -> list[tuple[Slot, tuple[float, ...]]]:
        params = np.asarray(params, dtype=float).reshape(-1)
        if params.size != self.n_free:
            raise SpinError(f"template {self.id} takes {self.n_free} parameters, got {params.size}")
        out, k = [], 0
        for slot in self.slots:
            vals = []
            for p in slot.params:
                if p is None:
                    vals.append(float(params[k]))
                    k += 1
                else:
                    vals.append(float(p))
            out.append((slot, tuple(vals)))
        return out

    def descriptors(self, params: Sequence[float]) -> list[GateDescriptor]:
        return [GateDescriptor(slot.kind, slot.target, vals) for slot, vals in self.gate_angles(params)]

    def describe(self) -> str:
        return " | ".join(" ".join(s.describe() for s in step) for step in self.steps)


def _pairs(kind, a=None, b=None) -> list[Slot]:
    return [Slot(kind, "D", (a,)), Slot(kind, "A", (b,))]


def ZZ(a=None, b=None) -> list[Slot]:
    return _pairs(GateKind.PHASE, a, b)


def XX(a=None, b=None) -> list[Slot]:
    return _pairs(GateKind.EXCHANGE, a, b)


# Named templates.  Each step is a list of gates on disjoint spins.
TEMPLATES: dict[str, SequenceTemplate] = {
    t.id: t
    for t in (
        SequenceTemplate(
            "SIL-5",
            ([U()], XX(), [U()], XX(), [U()]),
            gradient_allowed=True,
            note="three entangling gates separated by parallel exchange pulses on D and A",
        ),
        SequenceTemplate(
            "SINL-3",
            ([U()], XX(), [U()]),
            gradient_allowed=True,
            note="two entangling gates around one parallel exchange layer; three time steps",
        ),
        SequenceTemplate(
            "SIL-11",
            (ZZ(0.25, 0.25), [Ug()], XX(), ZZ(), [Ug()], ZZ(), XX(), [Ug()], XX(), ZZ(0.25, 0.25), [Ug()]),
            gradient_allowed=False,
            note="four gradient-free exchanges; the first and tenth steps are fixed quarter phase gates",
        ),
        SequenceTemplate(
            "SINL-9",
            ([Ug()], [Z("D", 0.5)], XX(), [Ug()], ZZ(0.25, 0.25), XX(0.25, 0.25), [Ug()], ZZ(0.75, 0.75), [Ug()]),
            gradient_allowed=False,
            note="four gradient-free exchanges plus one free exchange layer (6 free angles); "
            "the phase layers and the second exchange layer are fixed scaffolding",
        ),
        SequenceTemplate(
            "NEG-SIL-1",
            (ZZ(), XX(), ZZ(), [Ug()], ZZ(), XX(), ZZ()),
            gradient_allowed=False,
            note="negative control: a single exchange between D and A dressed by arbitrary single-qubit layers",
        ),
    )
}


def get_template(template_id: str) -> SequenceTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise SpinError(f"unknown template {template_id!r}; known: {', '.join(TEMPLATES)}") from None


# ---------------------------------------------------------------------------
# fast evaluation on the four input columns


@lru_cache(maxsize=None)
def _pair_permutation(pair: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    order = list(pair) + [q for q in range(N_SPINS) if q not in pair]
    perm = np.empty(2**N_SPINS, dtype=int)
    for new in range(2**N_SPINS):
        bits = [(new >> (N_SPINS - 1 - k)) & 1 for k in range(N_SPINS)]
        old_bits = [0] * N_SPINS
        for pos, q in enumerate(order):
            old_bits[q] = bits[pos]
        perm[new] = int("".join(map(str, old_bits)), 2)
    return perm, np.argsort(perm)


def _apply_local(local: np.ndarray, pair: tuple[int, int], cols: np.ndarray) -> np.ndarray:
    perm, inv = _pair_permutation(pair)
    moved = cols[perm].reshape(4, -1)
    return (local @ moved).reshape(cols.shape)[inv]


def _local_matrix(slot: Slot, vals: tuple[float, ...]) -> np.ndarray:
    if slot.kind is GateKind.PHASE:
        return _phase_local(vals[0])
    if slot.kind is GateKind.EXCHANGE:
        return _entangle_local(vals[0], 0.0)
    if slot.kind is GateKind.ENTANGLE:
        return _entangle_local(vals[0], vals[1])
    raise SpinError(f"templates support Z, X and U slots only, got {slot.kind.value}")


def evolve_columns(template: SequenceTemplate, params: Sequence[float], cols: np.ndarray) -> np.ndarray:
    out = np.array(cols, dtype=complex)
    for slot, vals in template.gate_angles(params):
        out = _apply_local(_local_matrix(slot, vals), slot.pair, out)
    return out


def template_unitary(template: SequenceTemplate, params: Sequence[float]) -> np.ndarray:
    return evolve_columns(template, params, np.eye(2**N_SPINS, dtype=complex))


def _table(target) -> LruTruthTable:
    return target if isinstance(target, LruTruthTable) else build_target(target)


def residual_vector(out: np.ndarray, table: LruTruthTable) -> np.ndarray:
    """Complex residuals whose squared norm is ``3 * cost``.

    Built so that every piece is a small quantity computed without
    cancellation: the parts of the computational outputs orthogonal to
    their targets, the mismatch of the two target amplitudes, and the parts
    of the leaked outputs outside their allowed subspaces.
    """
    parts = []
    amps = []
    for k in range(2):
        t = table.targets[:, k]
        a = np.vdot(t, out[:, k])
        amps.append(a)
        parts.append((out[:, k] - a * t) / np.sqrt(2))
    parts.append(np.array([(amps[0] - amps[1]) / 2]))
    for k, basis in enumerate(table.leak_spaces):
        v = out[:, 2 + k]
        parts.append(v - basis @ (basis.conj().T @ v))
    return np.concatenate(parts)


def cost_from_outputs(out: np.ndarray, table: LruTruthTable) -> float:
    r = residual_vector(out, table)
    return float(np.vdot(r, r).real / 3.0)


def cost_of_unitary(U, target) -> float:
    """``1 - (F_c + F_+ + F_-)/3`` for a full 16x16 unitary."""
    table = _table(target)
    m = U.matrix if hasattr(U, "matrix") else np.asarray(U, dtype=complex)
    return cost_from_outputs(m @ table.inputs, table)


def cost(params: Sequence[float], template: SequenceTemplate, target) -> float:
    """Truth-table infidelity of the template at ``params``, in ``[0, 1]``.

    ``F_c = |<t1|U|i1> + <t2|U|i2>|^2 / 4`` rewards both computational
    outputs with one shared phase, ``F_+-`` are the weights of the leaked
    outputs inside their allowed subspaces.
    """
    table = _table(target)
    return cost_from_outputs(evolve_columns(template, params, table.inputs), table)


def _real_residuals(params, template, table) -> np.ndarray:
    r = residual_vector(evolve_columns(template, params, table.inputs), table)
    return np.concatenate([r.real, r.imag])


# ---------------------------------------------------------------------------
# solutions


@dataclass
class SolutionSet:
    template_id: str
    params: np.ndarray
    cost: float
    verdict: LruVerdict
    restart: int = -1

    def to_dict(self) -> dict:
        return {
            "template": self.template_id,
            "params": [float(format(p, ".15g")) for p in self.params],
            "cost": float(self.cost),
            "restart": int(self.restart),
            "verdict": self.verdict.to_dict(),
        }


def canonicalize(solution: Union[SolutionSet, np.ndarray], template: Optional[SequenceTemplate] = None):
    """Reduce periodic angles mod 1.

    Without a template every angle is treated as periodic.
    """
    params = solution.params if isinstance(solution, SolutionSet) else np.asarray(solution, dtype=float)
    mask = template.periodic_mask() if template is not None else np.ones(params.size, dtype=bool)
    reduced = np.array([reduce_angle(p) if m else float(p) for p, m in zip(params, mask)])
    # values a hair below 1 are the same angle as 0
    reduced[mask & (reduced > 1 - 1e-12)] = 0.0
    if isinstance(solution, SolutionSet):
        return SolutionSet(solution.template_id, reduced, solution.cost, solution.verdict, solution.restart)
    return reduced


def _distance(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    d = np.abs(a - b)
    d[mask] = np.minimum(d[mask], 1 - d[mask])
    return float(d.max()) if d.size else 0.0


def merge_solutions(solutions: Iterable[SolutionSet], template: Optional[SequenceTemplate] = None, tol: float = MERGE_TOL) -> list[SolutionSet]:
    """Canonicalize, drop near-duplicates and sort lexicographically."""
    sols = [canonicalize(s, template) for s in solutions]
    n = sols[0].params.size if sols else 0
    mask = template.periodic_mask() if template is not None else np.ones(n, dtype=bool)
    kept: list[SolutionSet] = []
    for s in sorted(sols, key=lambda s: (s.cost, tuple(s.params))):
        if not any(_distance(s.params, k.params, mask) < tol for k in kept):
            kept.append(s)
    return sorted(kept, key=lambda s: tuple(np.round(s.params, 12)))


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(restart)]))


def local_search(template: SequenceTemplate, table: LruTruthTable, x0: np.ndarray, method: str = "lm") -> tuple[np.ndarray, float]:
    """One local descent from ``x0``; returns ``(params, cost)``."""
    if method == "lm":
        res = least_squares(
            _real_residuals, x0, args=(template, table), method="lm",
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000 * (x0.size + 1),
        )
        x = res.x
    elif method == "nelder-mead":
        res = minimize(
            cost, x0, args=(template, table), method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 1e-20, "maxiter": 40000, "maxfev": 40000, "adaptive": True},
        )
        x = res.x
    else:
        raise ValueError(f"unknown method {method!r}")
    return x, cost(x, template, table)


def optimize(
    template: SequenceTemplate,
    target,
    restarts: int = 100,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    method: str = "lm",
    stop_after: Optional[int] = None,
) -> list[SolutionSet]:
    """Multi-start local search for zeros of :func:`cost`.

    Restart ``r`` draws its start from an RNG seeded by ``(seed, r)``, so
    results do not depend on execution order.  A restart is kept when its
    cost is below ``tol`` and the assembled unitary passes :func:`verify`.
    ``stop_after`` ends the run once that many restarts have succeeded.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    table = _table(target)
    found = []
    for r in range(restarts):
        x0 = _restart_rng(seed, r).random(template.n_free)
        x, c = local_search(template, table, x0, method)
        if c >= tol:
            continue
        verdict = verify(template_unitary(template, x), table, tol)
        if verdict.passed:
            found.append(SolutionSet(template.id, x, c, verdict, r))
            if stop_after is not None and len(found) >= stop_after:
                break
    return merge_solutions(found, template)


def search_report(template: SequenceTemplate, target, restarts: int, seed: int, tol: float, solutions: list[SolutionSet]) -> dict:
    return {
        "template": template.id,
        "template_layout": template.describe(),
        "target": _table(target).kind.value,
        "seed": int(seed),
        "restarts": int(restarts),
        "tol": float(tol),
        "solutions": [s.to_dict() for s in solutions],
    }


# ---------------------------------------------------------------------------
# reference parameter sets


def load_reference_sets() -> dict[str, list[float]]:
    """The four tabulated SINL parameter sets, keyed "1".."4"."""
    text = resources.files("stq_lru").joinpath("data/reference_sets.json").read_text(encoding="utf-8")
    raw = json.loads(text)["sets"]
    return {k: [float(v) for v in vals] for k, vals in raw.items()}


REFERENCE_PAIRS = (("1", "2"), ("3", "4"))


def reference_set_consistency(sets: Optional[dict[str, list[float]]] = None) -> dict:
    """Pairwise component sums between sets (1, 2) and (3, 4).

    Each sum must be a multiple of 1/2 (0.5, 1.0 or 1.5): set (2) mirrors
    set (1) and (4) mirrors (3).  Reports each sum, its nearest half-integer
    and two residuals, against that half-integer and modulo 1/2.
    """
    sets = sets or load_reference_sets()
    rows = []
    for a, b in REFERENCE_PAIRS:
        for k, (x, y) in enumerate(zip(sets[a], sets[b]), 1):
            s = x + y
            expected = round(s * 2) / 2
            mod_half = s % 0.5
            rows.append(
                {
                    "component": k,
                    "sets": [a, b],
                    "values": [x, y],
                    "sum": s,
                    "expected": expected,
                    "residual": abs(s - expected),
                    "residual_mod_half": min(mod_half, 0.5 - mod_half),
                }
            )
    worst = max(max(r["residual"], r["residual_mod_half"]) for r in rows)
    return {"rows": rows, "max_residual": worst, "n_residuals": 2 * len(rows), "pass": worst < 1e-12}


def reference_scaffolds() -> dict[str, SequenceTemplate]:
    """Gradient-free nine-step scaffolds with six free exchange angles.

    Candidates tried when substituting a tabulated parameter set: the
    shipped SINL-9 template and layouts that place the six angles on four
    exchanges between D and A plus one parallel D/A exchange layer, with
    quarter phase gates as fixed scaffolding.
    """
    q = 0.25
    cands = [
        TEMPLATES["SINL-9"],
        SequenceTemplate("S9-a", ([Ug()], ZZ(q, q), XX(), [Ug()], ZZ(q, q), [Ug()], ZZ(q, q), [Ug()], ZZ(q, q)), False),
        SequenceTemplate("S9-b", (ZZ(q, q), [Ug()], ZZ(q, q), XX(), [Ug()], ZZ(q, q), [Ug()], ZZ(q, q), [Ug()]), False),
        SequenceTemplate("S9-c", (XX(), ZZ(q, q), [Ug()], ZZ(q, q), [Ug()], ZZ(q, q), [Ug()], ZZ(q, q), [Ug()]), False),
        SequenceTemplate("S9-d", ([Ug()], ZZ(q, q), [Ug()], ZZ(q, q), [Ug()], ZZ(q, q), [Ug()], ZZ(q, q), XX()), False),
    ]
    return {t.id: t for t in cands}


def reference_set_reconstruction(set_id: str = "1", tol: float = DEFAULT_TOL, scaffolds: Optional[dict] = None) -> list[dict]:
    """Substitute one tabulated set into each scaffold, in both angle orders.

    Returns one row per (scaffold, order) with the cost and whether the
    assembled unitary passes the SINL verifier.
    """
    values = load_reference_sets()[set_id]
    rows = []
    for tid, t in (scaffolds or reference_scaffolds()).items():
        if t.n_free != len(values):
            raise SpinError(f"scaffold {tid} has {t.n_free} free angles, the set has {len(values)}")
        for order, vals in (("forward", values), ("reversed", values[::-1])):
            c = cost(vals, t, "SINL")
            v = verify(template_unitary(t, vals), "SINL", tol)
            rows.append({"scaffold": tid, "layout": t.describe(), "order": order, "cost": c, "pass": v.passed})
    return rows
