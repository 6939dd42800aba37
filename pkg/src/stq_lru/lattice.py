"""Classical Monte Carlo of leakage on a surface-code patch with LRUs.

Every qubit carries a flag, OK or LEAKED.  Coordinates are doubled so the
layout is all integers: data qubits sit at even ``(2x, 2y)``, syndrome
ancillas on the odd dual lattice and the extra LRU ancillas in a column
at ``x = 2n - 1``, ``y`` even (horizontally next to the last data column).

One round is four parity-check slots followed, if enabled, by one LRU per
data qubit.  In each slot every data qubit and every syndrome ancilla
undergoes one operation (a two-qubit gate with the ancilla in the slot's
diagonal direction, or an idle slot at the boundary) and leaks with
probability ``p_leak``.  A two-qubit gate with exactly one leaked partner
counts a catalyzed error on the other and swaps the flags with probability
``transfer_prob``; it never creates a second leaked qubit.

Ancillas are re-initialized (leakage removed) only as part of the LRU
protocol, right after the LRUs of a round.  Without LRUs nothing removes
leakage.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

LRU_MODES = ("none", "SIL", "SINL")
PARITY_OPS_PER_ROUND = 4
LRU_OPS_PER_ROUND = 1
RELABEL_PERIOD = 2

# syndrome-extraction order, as offsets in doubled coordinates
SCHEDULE = ((1, -1), (-1, -1), (1, 1), (-1, 1))


class LatticeError(ValueError):
    pass


def _boundary_ancillas(n: int) -> list[tuple[int, int]]:
    out = []
    for i in range(n - 1):
        c = 2 * i + 1
        out.append((c, -1) if i % 2 == 0 else (c, 2 * n - 1))
        out.append((2 * n - 1, c) if i % 2 == 0 else (-1, c))
    return out


def max_bipartite_matching(adjacency: list[list[int]], n_right: int) -> list[int]:
    """Maximum matching by augmenting paths (Kuhn).

    ``adjacency[u]`` lists the right vertices of left vertex ``u``.  Returns
    ``match[u]``, the right partner of ``u`` or ``-1``.
    """
    match_right = [-1] * n_right

    def augment(u: int, seen: list[bool]) -> bool:
        for v in adjacency[u]:
            if seen[v]:
                continue
            seen[v] = True
            if match_right[v] == -1 or augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in range(len(adjacency)):
        augment(u, [False] * n_right)
    match_left = [-1] * len(adjacency)
    for v, u in enumerate(match_right):
        if u >= 0:
            match_left[u] = v
    return match_left


@dataclass
class LatticeConfig:
    """Layout plus Monte Carlo parameters.

    ``ancilla_sites`` lists the syndrome ancillas first (``n_syndrome`` of
    them) and then the extra edge column.  ``lru_partner[d]`` is the index
    of the ancilla used by the LRU of data qubit ``d``.
    """

    n: int
    p_leak: float = 1e-3
    lru_mode: str = "SIL"
    lru_failure: float = 0.0
    transfer_prob: float = 0.5
    seed: int = 0
    data_sites: list = field(default_factory=list)
    ancilla_sites: list = field(default_factory=list)
    n_syndrome: int = 0
    lru_partner: list = field(default_factory=list)
    slot_partner: list = field(default_factory=list)

    @property
    def n_data(self) -> int:
        return len(self.data_sites)

    @property
    def n_ancilla(self) -> int:
        return len(self.ancilla_sites)

    @property
    def overhead(self) -> int:
        """Ancillas beyond the ``n^2 - 1`` of the plain surface code."""
        return self.n_ancilla - (self.n**2 - 1)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "data_qubits": self.n_data,
            "ancilla_qubits": self.n_ancilla,
            "syndrome_ancillas": self.n_syndrome,
            "edge_ancillas": self.n_ancilla - self.n_syndrome,
            "p_leak": self.p_leak,
            "lru_mode": self.lru_mode,
            "lru_failure": self.lru_failure,
            "transfer_prob": self.transfer_prob,
            "seed": self.seed,
        }


def build_lattice(
    n: int,
    p_leak: float = 1e-3,
    lru_mode: str = "SIL",
    lru_failure: float = 0.0,
    seed: int = 0,
    transfer_prob: float = 0.5,
) -> LatticeConfig:
    if int(n) != n or n < 2:
        raise LatticeError(f"lattice side must be an integer >= 2, got {n!r}")
    n = int(n)
    mode = _normalise_mode(lru_mode)
    for name, p in (("p_leak", p_leak), ("lru_failure", lru_failure), ("transfer_prob", transfer_prob)):
        if not 0.0 <= p <= 1.0:
            raise LatticeError(f"{name} must lie in [0, 1], got {p!r}")

    data = [(2 * x, 2 * y) for y in range(n) for x in range(n)]
    interior = [(2 * x + 1, 2 * y + 1) for y in range(n - 1) for x in range(n - 1)]
    syndrome = interior + _boundary_ancillas(n)
    edge = [(2 * n - 1, 2 * y) for y in range(n)]
    ancillas = syndrome + edge
    index = {site: k for k, site in enumerate(ancillas)}

    adjacency = []
    for (x, y) in data:
        nbrs = [index[(x + dx, y + dy)] for dx, dy in SCHEDULE if (x + dx, y + dy) in index]
        if (x + 1, y) in index:
            nbrs.append(index[(x + 1, y)])
        adjacency.append(nbrs)
    if any(not nbrs for nbrs in adjacency):
        raise LatticeError("a data qubit has no adjacent ancilla")
    partner = max_bipartite_matching(adjacency, len(ancillas))
    if any(p < 0 for p in partner):
        raise LatticeError("no perfect data-to-ancilla matching exists for this layout")

    slots = []
    for dx, dy in SCHEDULE:
        slots.append([index.get((x + dx, y + dy), -1) for (x, y) in data])

    return LatticeConfig(
        n=n,
        p_leak=float(p_leak),
        lru_mode=mode,
        lru_failure=float(lru_failure),
        transfer_prob=float(transfer_prob),
        seed=int(seed),
        data_sites=data,
        ancilla_sites=ancillas,
        n_syndrome=len(syndrome),
        lru_partner=partner,
        slot_partner=slots,
    )


def _normalise_mode(mode: str) -> str:
    for m in LRU_MODES:
        if str(mode).lower() == m.lower():
            return m
    raise LatticeError(f"lru_mode must be one of {LRU_MODES}, got {mode!r}")


@dataclass
class LatticeState:
    data: np.ndarray
    ancilla: np.ndarray
    round: int = 0
    layout_offset: int = 0
    data_leak_events: int = 0
    ancilla_leak_events: int = 0
    transfers_to_data: int = 0
    transfers_from_data: int = 0
    lru_corrections: int = 0
    catalyzed_errors: int = 0
    parity_ops: int = 0
    lru_ops: int = 0
    pre_lru_leaked: int = 0

    @classmethod
    def fresh(cls, config: LatticeConfig) -> "LatticeState":
        return cls(np.zeros(config.n_data, dtype=bool), np.zeros(config.n_ancilla, dtype=bool))

    def copy(self) -> "LatticeState":
        out = LatticeState(**{k: v for k, v in self.__dict__.items()})
        out.data = self.data.copy()
        out.ancilla = self.ancilla.copy()
        return out

    def counters(self) -> dict:
        return {
            k: int(v)
            for k, v in self.__dict__.items()
            if k not in ("data", "ancilla")
        }

    def data_site_positions(self, config: LatticeConfig) -> list[tuple[int, int]]:
        """Physical positions currently holding the data qubits.

        After an odd number of SINL rounds every data qubit sits on its
        matched ancilla's position.
        """
        if self.layout_offset == 0:
            return list(config.data_sites)
        return [config.ancilla_sites[a] for a in config.lru_partner]


def step_round(state: LatticeState, config: LatticeConfig, rng: np.random.Generator) -> LatticeState:
    """Advance one round; returns a new state."""
    s = state.copy()
    p, t = config.p_leak, config.transfer_prob
    n_syn = config.n_syndrome
    for partners in config.slot_partner:
        new_d = ~s.data & (rng.random(config.n_data) < p)
        new_a = ~s.ancilla[:n_syn] & (rng.random(n_syn) < p)
        s.data |= new_d
        s.ancilla[:n_syn] |= new_a
        s.data_leak_events += int(new_d.sum())
        s.ancilla_leak_events += int(new_a.sum())
        s.parity_ops += config.n_data

        partners = np.asarray(partners)
        has = partners >= 0
        d_idx = np.flatnonzero(has)
        a_idx = partners[has]
        d_flag, a_flag = s.data[d_idx], s.ancilla[a_idx]
        one = d_flag ^ a_flag
        s.catalyzed_errors += int(one.sum())
        swap = one & (rng.random(d_idx.size) < t)
        if swap.any():
            s.transfers_to_data += int((swap & a_flag).sum())
            s.transfers_from_data += int((swap & d_flag).sum())
            s.data[d_idx[swap]] = ~s.data[d_idx[swap]]
            s.ancilla[a_idx[swap]] = ~s.ancilla[a_idx[swap]]

    s.pre_lru_leaked = int(s.data.sum())
    if config.lru_mode != "none":
        leaked = s.data.copy()
        fixed = leaked & (rng.random(config.n_data) >= config.lru_failure)
        s.data[fixed] = False
        s.lru_corrections += int(fixed.sum())
        s.lru_ops += config.n_data
        if config.lru_mode == "SINL":
            s.layout_offset = (s.layout_offset + 1) % RELABEL_PERIOD
        # ancillas are discarded and freshly initialized after the LRUs
        s.ancilla[:] = False
    s.round += 1
    return s


def analytic_steady_state(p_leak: float, k_ops: int = PARITY_OPS_PER_ROUND, lru_failure: float = 0.0) -> float:
    """Stationary pre-LRU leaked fraction of the per-qubit chain.

    With a perfect LRU every round starts clean, giving ``1 - (1-p)^k``.
    Otherwise ``x = 1 - (1 - f x)(1-p)^k`` which solves to
    ``x = (1 - q) / (1 - f q)`` with ``q = (1-p)^k``.  Exact for
    ``lru_failure = 0``; for ``lru_failure > 0`` it neglects flag transfers
    with the (cleaner) ancillas.
    """
    for name, v in (("p_leak", p_leak), ("lru_failure", lru_failure)):
        if not 0.0 <= v <= 1.0:
            raise LatticeError(f"{name} must lie in [0, 1], got {v!r}")
    q = (1.0 - p_leak) ** k_ops
    if lru_failure == 0.0:
        return -np.expm1(k_ops * np.log1p(-p_leak)) if p_leak < 1 else 1.0
    denom = 1.0 - lru_failure * q
    if denom == 0.0:
        # p = 0 and f = 1: nothing ever leaks
        return 0.0
    return (1.0 - q) / denom


@dataclass
class SimReport:
    rounds: int
    burn_in: int
    mean: float
    variance: float
    stderr: float
    analytic: float
    z_score: Optional[float]
    final_fraction: float
    layout: dict
    counters: dict
    series: list = field(repr=False, default_factory=list)

    def to_dict(self, include_series: bool = False) -> dict:
        d = asdict(self)
        if not include_series:
            d.pop("series")
        return d

    def to_json(self, **extra) -> str:
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)

    def series_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "leaked_fraction", "pre_lru_leaked_fraction"])
        for r, (post, pre) in enumerate(self.series, 1):
            w.writerow([r, repr(float(post)), repr(float(pre))])
        return buf.getvalue()


def run(config: LatticeConfig, rounds: int, burn_in: int = 0, state: LatticeState | None = None) -> SimReport:
    """Run ``rounds`` rounds and aggregate the pre-LRU data leakage fraction after ``burn_in``."""
    if rounds <= 0 or burn_in < 0 or rounds <= burn_in:
        raise LatticeError(f"need rounds > burn_in >= 0, got rounds={rounds}, burn_in={burn_in}")
    rng = np.random.default_rng(config.seed)
    state = state or LatticeState.fresh(config)
    series = []
    for _ in range(rounds):
        state = step_round(state, config, rng)
        series.append((state.data.mean(), state.pre_lru_leaked / config.n_data))
    window = np.array([pre for _, pre in series[burn_in:]])
    mean = float(window.mean())
    var = float(window.var(ddof=1)) if window.size > 1 else 0.0
    stderr = float(np.sqrt(var / window.size))
    # without LRUs leakage is absorbing: same chain with the LRU always failing
    failure = 1.0 if config.lru_mode == "none" else config.lru_failure
    analytic = float(analytic_steady_state(config.p_leak, PARITY_OPS_PER_ROUND, failure))
    z = (mean - analytic) / stderr if stderr > 0 and config.lru_mode != "none" else None
    counters = state.counters()
    counters["parity_ops_per_data_per_round"] = counters["parity_ops"] / (config.n_data * rounds)
    counters["lru_ops_per_data_per_round"] = counters["lru_ops"] / (config.n_data * rounds)
    return SimReport(
        rounds=rounds,
        burn_in=burn_in,
        mean=mean,
        variance=var,
        stderr=stderr,
        analytic=analytic,
        z_score=z,
        final_fraction=float(series[-1][0]),
        layout=config.summary(),
        counters=counters,
        series=series,
    )
