import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from stq_lru.gates import (
    INTER_PAIR,
    PAIR_STATES,
    DqdEncoding,
    GateDescriptor,
    GateKind,
    entangle_gate,
    entangle_generator,
    exchange_gate,
    exchange_generator,
    hadamard,
    logical_operator,
    phase_gate,
    phase_generator,
    product_state,
    sinl_longrange,
    zz_gate,
    zz_generator,
)
from stq_lru.spin import (
    SpinError,
    check_sz_conservation,
    equal_up_to_global_phase,
    exp_generator,
    swap_matrix,
    unitarity_error,
)

S, T0, TP, TM = (PAIR_STATES[k] for k in ("S", "T0", "T+", "T-"))
angles = st.floats(min_value=-3, max_value=3, allow_nan=False)


def on_pair(u, vec):
    # gates built for two spins act on the 4-dim pair space
    return u.matrix @ vec


def two_spin(builder, *args):
    return builder((0, 1), *args, n=2)


# -- encoding ---------------------------------------------------------------


def test_encoding_orthonormal():
    b = DqdEncoding((0, 1)).basis()
    np.testing.assert_allclose(b.conj().T @ b, np.eye(4), atol=1e-12)


def test_computational_states_have_zero_sz():
    # |↑↓> = index 2, |↓↑> = index 1
    for v in (S, T0):
        assert np.flatnonzero(np.abs(v) > 0).tolist() == [1, 2]


# -- phase gate -------------------------------------------------------------


@pytest.mark.parametrize("phi", [0.0, 0.13, 0.5, 0.77])
def test_phase_gate_leaves_t_plus(phi):
    np.testing.assert_allclose(on_pair(two_spin(phase_gate, phi), TP), TP, atol=1e-15)


def test_phase_quarter_maps_singlet():
    np.testing.assert_allclose(on_pair(two_spin(phase_gate, 0.25), S), -1j * T0, atol=1e-12)


def test_phase_full_period():
    np.testing.assert_allclose(phase_gate("D", 1.0).matrix, np.eye(16), atol=1e-12)


# -- exchange gate ----------------------------------------------------------


def test_exchange_half():
    u = two_spin(exchange_gate, 0.5)
    np.testing.assert_allclose(on_pair(u, S), -S, atol=1e-12)
    np.testing.assert_allclose(on_pair(u, T0), T0, atol=1e-12)


def test_exchange_full_period():
    np.testing.assert_allclose(exchange_gate("A", 1.0).matrix, np.eye(16), atol=1e-12)


def test_exchange_half_is_swap_with_unit_phase():
    for pair in [(0, 1), (2, 3), INTER_PAIR]:
        np.testing.assert_allclose(exchange_gate(pair, 0.5).matrix, swap_matrix(*pair, 4), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(angles)
def test_exchange_is_singlet_phase(phi):
    u = two_spin(exchange_gate, phi)
    np.testing.assert_allclose(on_pair(u, S), np.exp(2j * np.pi * phi) * S, atol=1e-12)
    for v in (T0, TP, TM):
        np.testing.assert_allclose(on_pair(u, v), v, atol=1e-12)


# -- entangling gate --------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(angles)
def test_entangle_without_gradient_is_exchange(phi):
    np.testing.assert_allclose(entangle_gate(phi, 0.0).matrix, exchange_gate(INTER_PAIR, phi).matrix, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(angles)
def test_entangle_without_exchange_is_phase(psi):
    np.testing.assert_allclose(entangle_gate(0.0, psi).matrix, phase_gate(INTER_PAIR, psi).matrix, atol=1e-12)


def test_entangle_half_is_swap23():
    np.testing.assert_allclose(entangle_gate(0.5, 0.0).matrix, swap_matrix(1, 2, 4), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(angles, angles)
def test_closed_forms_match_generators(phi, psi):
    pairs = [(entangle_gate(phi, psi), entangle_generator(phi, psi)),
             (phase_gate("D", phi), phase_generator("D", phi)),
             (exchange_gate("A", psi), exchange_generator("A", psi))]
    for gate, gen in pairs:
        np.testing.assert_allclose(gate.matrix, expm(-1j * gen.matrix), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(angles, angles)
def test_entangle_block_form(phi, psi):
    u = entangle_gate(phi, psi, pair=(0, 1), n=2).matrix
    # parallel spins untouched
    np.testing.assert_allclose(u[[0, 3]][:, [0, 3]], np.eye(2), atol=1e-12)
    # antiparallel block in (|↑↓>, |↓↑>)
    xp = np.array([[0, 1], [1, 0]])
    zp = np.diag([1, -1])
    block = np.exp(1j * np.pi * phi) * expm(-2j * np.pi * ((phi / 2) * xp + psi * zp))
    np.testing.assert_allclose(u[np.ix_([2, 1], [2, 1])], block, atol=1e-10)


def test_entangle_generator_parallel_block_zero():
    h = entangle_generator(0.4, 0.3, pair=(0, 1), n=2).matrix
    np.testing.assert_allclose(h[[0, 3]], 0, atol=1e-15)
    np.testing.assert_allclose(h[:, [0, 3]], 0, atol=1e-15)


def test_phase_and_exchange_generators_do_not_commute():
    a, b = phase_generator("D", 0.3).matrix, exchange_generator("D", 0.3).matrix
    assert np.max(np.abs(a @ b - b @ a)) > 0.1


@settings(max_examples=30, deadline=None)
@given(angles)
def test_periodicity(phi):
    for build in (lambda x: phase_gate("D", x), lambda x: exchange_gate("A", x)):
        np.testing.assert_allclose(build(phi + 1).matrix, build(phi).matrix, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(angles, angles)
def test_gates_unitary_and_sz_conserving(phi, psi):
    for u in (phase_gate("D", phi), exchange_gate("A", phi), entangle_gate(phi, psi), zz_gate(psi)):
        assert unitarity_error(u.matrix) < 1e-10
        assert check_sz_conservation(u, 1e-12)


# -- logical operators ------------------------------------------------------


def test_tau_z_definition():
    tz = logical_operator("tau_z", "D").matrix
    np.testing.assert_allclose(tz @ product_state("S", "S").amplitudes, -product_state("S", "S").amplitudes, atol=1e-12)
    np.testing.assert_allclose(tz @ product_state("T+", "S").amplitudes, 0, atol=1e-12)


def test_tau_x_swaps_s_and_t0():
    tx = logical_operator("tau_x", "A").matrix
    np.testing.assert_allclose(tx @ product_state("S", "T0").amplitudes, product_state("S", "S").amplitudes, atol=1e-12)


def test_hadamard_action_and_involution():
    h = hadamard("D").matrix
    out = h @ product_state("S", "S").amplitudes
    np.testing.assert_allclose(out, np.kron((T0 - S) / np.sqrt(2), S), atol=1e-12)
    np.testing.assert_allclose(h @ h, np.eye(16), atol=1e-12)


def test_hadamard_is_normalised_tau_sum():
    tz, tx = logical_operator("tau_z", "A").matrix, logical_operator("tau_x", "A").matrix
    h = hadamard("A").matrix
    comp = np.kron(np.eye(4), np.outer(S, S) + np.outer(T0, T0))
    np.testing.assert_allclose(h @ comp, (tx + tz) / np.sqrt(2), atol=1e-12)


@pytest.mark.parametrize("dqd", ["D", "A"])
def test_logical_operators_on_leakage_states(dqd):
    labels = ["S", "T0", "T+", "T-"]
    tz, tx = logical_operator("tau_z", dqd).matrix, logical_operator("tau_x", dqd).matrix
    h = hadamard(dqd).matrix
    for a in labels:
        for b in labels:
            leaked = (a if dqd == "D" else b) in ("T+", "T-")
            v = product_state(a, b).amplitudes
            if leaked:
                np.testing.assert_allclose(tz @ v, 0, atol=1e-12)
                np.testing.assert_allclose(tx @ v, 0, atol=1e-12)
                np.testing.assert_allclose(h @ v, v, atol=1e-12)


def test_zz_identity_cases():
    np.testing.assert_allclose(zz_gate(0.0).matrix, np.eye(16), atol=1e-15)
    for b in ["S", "T0", "T+", "T-"]:
        v = product_state("T+", b).amplitudes
        np.testing.assert_allclose(zz_gate(0.9).matrix @ v, v, atol=1e-12)


def test_zz_generator_is_product():
    np.testing.assert_allclose(
        zz_generator().matrix,
        logical_operator("tau_z", "D").matrix @ logical_operator("tau_z", "A").matrix,
    )


def test_longrange_sinl_is_unitary_and_printed_variant_is_not():
    assert unitarity_error(sinl_longrange().matrix) < 1e-12
    assert unitarity_error(sinl_longrange(as_printed=True)) > 0.1


def test_zz_matches_exp_generator():
    np.testing.assert_allclose(zz_gate(0.3).matrix, exp_generator(0.3 * zz_generator()).matrix)


# -- descriptors ------------------------------------------------------------


@pytest.mark.parametrize(
    "text", ["X(D,0.5)", "Z(A,0.25)", "U(0.5,0.4330127)", "H(D)", "ZZ(0.7853982)", "TX(A,2.35619449019234)"]
)
def test_descriptor_round_trip(text):
    g = GateDescriptor.parse(text)
    assert GateDescriptor.parse(str(g)) == g
    assert str(g) == text


def test_descriptor_reduces_periodic_angles():
    assert GateDescriptor.parse("X(D,1.345073936796977)").params[0] == pytest.approx(0.345073936796977, abs=1e-15)
    assert GateDescriptor.parse("Z(A,-0.25)").params == (0.75,)
    # entangling gate with both angles set is not periodic in either
    assert GateDescriptor.parse("U(1.5,0.25)").params == (1.5, 0.25)
    assert GateDescriptor.parse("U(1.5,0)").params == (0.5, 0.0)


def test_descriptor_prints_fifteen_digits():
    g = GateDescriptor(GateKind.ENTANGLE, None, (0.5, np.sqrt(3) / 4))
    assert str(g) == "U(0.5,0.433012701892219)"


@pytest.mark.parametrize("text", ["Q(D,1)", "X(B,0.5)", "X(0.5)", "U(0.5)", "H(D,0.5)", "ZZ(D,0.1)", "X(D,abc)", "nonsense"])
def test_descriptor_errors(text):
    with pytest.raises(SpinError):
        GateDescriptor.parse(text)


def test_descriptor_matrix_matches_builders():
    assert np.allclose(GateDescriptor.parse("U(0.5,0)").matrix(), swap_matrix(1, 2, 4))
    ok, _ = equal_up_to_global_phase(GateDescriptor.parse("H(A)").matrix(), hadamard("A").matrix)
    assert ok
