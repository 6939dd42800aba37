import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stq_lru.gates import GateKind, entangle_matrix
from stq_lru.search import (
    MAX_FREE_PARAMS,
    TEMPLATES,
    XX,
    ZZ,
    SequenceTemplate,
    SolutionSet,
    U,
    Ug,
    X,
    Z,
    reference_set_consistency,
    reference_set_reconstruction,
    canonicalize,
    cost,
    cost_of_unitary,
    get_template,
    load_reference_sets,
    merge_solutions,
    optimize,
    template_unitary,
)
from stq_lru.spin import SpinError, swap_matrix
from stq_lru.verify import assemble, build_target, verify


def naive_cost(m, kind):
    """1 - (F_c + F_+ + F_-)/3 straight from the overlaps."""
    t = build_target(kind)
    out = m @ t.inputs
    fc = abs(np.vdot(t.targets[:, 0], out[:, 0]) + np.vdot(t.targets[:, 1], out[:, 1])) ** 2 / 4
    fl = [np.linalg.norm(b.conj().T @ out[:, 2 + k]) ** 2 for k, b in enumerate(t.leak_spaces)]
    return 1 - (fc + fl[0] + fl[1]) / 3


def dqd_swap():
    """Physical exchange of the two DQDs: spins (0,1,2,3) -> (2,3,0,1)."""
    return swap_matrix(0, 2, 4) @ swap_matrix(1, 3, 4)


# -- cost -------------------------------------------------------------------


def test_identity_cost_vs_sil():
    assert cost_of_unitary(np.eye(16), "SIL") == pytest.approx(2 / 3, abs=1e-14)


def test_dqd_swap_cost_vs_sinl():
    assert cost_of_unitary(dqd_swap(), "SINL") == pytest.approx(2 / 3, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["SIL", "SINL"]))
def test_cost_matches_fidelity_formula(seed, kind):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
    c = cost_of_unitary(q, kind)
    assert 0.0 <= c <= 1.0
    assert c == pytest.approx(naive_cost(q, kind), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=10, max_size=10))
def test_template_fast_path_matches_assembly(params):
    t = TEMPLATES["SIL-5"]
    fast = template_unitary(t, params)
    slow = assemble(t.descriptors(params)).matrix
    np.testing.assert_allclose(fast, slow, atol=1e-11)
    assert cost(params, t, "SIL") == pytest.approx(naive_cost(slow, "SIL"), abs=1e-11)


def test_zero_cost_iff_verified():
    r3 = np.sqrt(3) / 4
    t = TEMPLATES["SINL-3"]
    good = [0.5, r3, 0.75, 0.75, 0.5, r3]
    assert cost(good, t, "SINL") < 1e-28
    assert verify(template_unitary(t, good), "SINL").passed
    bad = [0.5, r3, 0.75, 0.7, 0.5, r3]
    assert cost(bad, t, "SINL") > 1e-4
    assert not verify(template_unitary(t, bad), "SINL").passed


# -- templates --------------------------------------------------------------


def test_library_shapes():
    shapes = {tid: (t.n_steps, t.n_entangling, t.gradient_allowed) for tid, t in TEMPLATES.items()}
    assert shapes["SIL-5"] == (5, 3, True)
    assert shapes["SINL-3"] == (3, 2, True)
    assert shapes["SIL-11"] == (11, 4, False)
    assert shapes["SINL-9"] == (9, 4, False)
    assert shapes["NEG-SIL-1"][1:] == (1, False)
    assert TEMPLATES["SINL-9"].n_free == 6
    assert all(t.n_free <= MAX_FREE_PARAMS for t in TEMPLATES.values())


def test_get_template_unknown():
    with pytest.raises(SpinError):
        get_template("SIL-7")


@pytest.mark.parametrize(
    "steps, grad",
    [
        ([[X("D"), Z("D")], [U()]], True),  # two gates on one DQD in a step
        ([XX(), ZZ()], True),  # no entangling slot
        ([[U()], XX(), ZZ(), XX(), ZZ(), [U()], XX(), ZZ(), XX()], True),  # too many free angles
        ([[U()]], False),  # gradient in a gradient-free template
    ],
)
def test_template_validation(steps, grad):
    with pytest.raises(SpinError):
        SequenceTemplate("bad", steps, grad)


def test_periodic_mask():
    t = SequenceTemplate("m", [[U()], [Ug()], XX(), [U(0.5, None)]], True)
    assert t.periodic_mask().tolist() == [False, False, True, True, True, False]


def test_descriptor_kinds():
    kinds = [g.kind for g in TEMPLATES["SINL-3"].descriptors(np.zeros(6))]
    assert kinds == [GateKind.ENTANGLE, GateKind.EXCHANGE, GateKind.EXCHANGE, GateKind.ENTANGLE]


def test_wrong_parameter_count():
    with pytest.raises(SpinError):
        TEMPLATES["SINL-3"].gate_angles([0.1])


# -- solutions --------------------------------------------------------------


def test_canonicalize_reduces_periodic_only():
    t = TEMPLATES["SINL-3"]
    out = canonicalize(np.array([1.5, 1.25, -0.25, 2.0, 0.5, 0.4]), t)
    np.testing.assert_allclose(out, [1.5, 1.25, 0.75, 0.0, 0.5, 0.4])
    np.testing.assert_allclose(canonicalize(np.array([1.5, -0.25])), [0.5, 0.75])
    assert canonicalize(np.array([0.9999999999999])).tolist() == [0.0]


def test_merge_drops_duplicates():
    t = TEMPLATES["SINL-9"]
    v = verify(np.eye(16), "SINL")
    a = SolutionSet("SINL-9", np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]), 0.0, v)
    b = SolutionSet("SINL-9", np.array([1.1, 0.2, 0.3 + 1e-9, 0.4, 0.5, -0.4]), 0.0, v)
    c = SolutionSet("SINL-9", np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.7]), 0.0, v)
    merged = merge_solutions([c, b, a], t)
    assert len(merged) == 2
    assert merged[0].params[-1] == pytest.approx(0.6)


def test_optimize_finds_sinl3_and_is_deterministic():
    t = TEMPLATES["SINL-3"]
    first = optimize(t, "SINL", restarts=8, seed=11)
    second = optimize(t, "SINL", restarts=8, seed=11)
    assert first
    assert [s.params.tolist() for s in first] == [s.params.tolist() for s in second]
    for s in first:
        assert s.cost < 1e-8 and s.verdict.passed
        periodic = s.params[t.periodic_mask()]
        assert np.all((periodic >= 0) & (periodic < 1))


def test_restart_streams_independent_of_count():
    t = TEMPLATES["SINL-3"]
    few = optimize(t, "SINL", restarts=3, seed=5)
    more = optimize(t, "SINL", restarts=6, seed=5)
    few_keys = {tuple(np.round(s.params, 9)) for s in few}
    more_keys = {tuple(np.round(s.params, 9)) for s in more}
    assert few_keys <= more_keys


def test_optimize_rejects_zero_restarts():
    with pytest.raises(ValueError):
        optimize(TEMPLATES["SINL-3"], "SINL", restarts=0)


def test_nelder_mead_option_runs():
    sols = optimize(TEMPLATES["SINL-3"], "SINL", restarts=4, seed=0, method="nelder-mead", tol=1e-6)
    for s in sols:
        assert s.verdict.passed


def test_exchange_only_entangler_cannot_reach_sil():
    # U slots alone never touch QD1 or QD4, so |T+ S> keeps spin 1 up
    t = SequenceTemplate("u-only", [[U()], [U()], [U()]], True)
    assert optimize(t, "SIL", restarts=10, seed=0) == []


# -- tabulated sets ---------------------------------------------------------


def test_reference_set_sets_loaded_with_full_precision():
    sets = load_reference_sets()
    assert sorted(sets) == ["1", "2", "3", "4"]
    assert all(len(v) == 6 for v in sets.values())
    assert sets["1"][0] == 0.345073936796977


def test_reference_set_consistency():
    res = reference_set_consistency()
    assert res["n_residuals"] == 24
    assert res["pass"] and res["max_residual"] < 1e-12
    sums = [r["expected"] for r in res["rows"]]
    assert sums == [0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 0.5, 1.5, 1.0, 1.0, 1.0, 1.0]


def test_reference_set_consistency_detects_corruption():
    sets = load_reference_sets()
    sets["2"][3] += 1e-6
    assert not reference_set_consistency(sets)["pass"]


def test_reference_set_reconstruction_rows():
    rows = reference_set_reconstruction("1")
    assert {r["order"] for r in rows} == {"forward", "reversed"}
    assert any(r["scaffold"] == "SINL-9" for r in rows)
    for r in rows:
        assert 0 <= r["cost"] <= 1
        assert r["pass"] == (r["cost"] < 1e-8)


def test_dressed_swap_not_a_sil():
    m = entangle_matrix(0.5, 0.0)
    assert cost_of_unitary(m, "SIL") > 0.1
