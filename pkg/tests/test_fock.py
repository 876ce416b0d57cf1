import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ferdisc.errors import SuperselectionError, ValidationError
from ferdisc.fock import (
    EVEN,
    ODD,
    FockVector,
    ModePartition,
    fock_basis_state,
    jw_mode_operator,
    make_state,
    sector_projectors,
)

S = 2**-0.5


def test_single_mode_lowering():
    phi0 = jw_mode_operator(ModePartition(1, 1), 0)
    # on mode 0 of a 2-mode system: |1x> -> |0x>
    one = fock_basis_state(ModePartition(1, 1), "10")
    np.testing.assert_array_equal(phi0 @ one, fock_basis_state(ModePartition(1, 1), "00"))
    np.testing.assert_array_equal(phi0 @ fock_basis_state(ModePartition(1, 1), "00"), 0)


@pytest.mark.parametrize("na,nb", [(1, 1), (1, 2), (2, 2), (1, 3), (3, 1)])
def test_car_relations(na, nb):
    part = ModePartition(na, nb)
    ops = [jw_mode_operator(part, i) for i in range(part.n_modes)]
    eye = np.eye(part.dim)
    for i, j in itertools.product(range(part.n_modes), repeat=2):
        a, b = ops[i], ops[j]
        np.testing.assert_allclose(a @ b + b @ a, 0, atol=1e-12)
        np.testing.assert_allclose(a @ b.conj().T + b.conj().T @ a, eye * (i == j), atol=1e-12)


def test_creation_order_sign():
    part = ModePartition(1, 1)
    c0, c1 = (jw_mode_operator(part, i).conj().T for i in range(2))
    vac = fock_basis_state(part, "00")
    np.testing.assert_array_equal(c1 @ c0 @ vac, -(c0 @ c1 @ vac))


@pytest.mark.parametrize("na,nb", [(1, 1), (2, 2), (1, 3)])
def test_fock_states_are_unit_vectors(na, nb):
    part = ModePartition(na, nb)
    vac = np.zeros(part.dim)
    vac[0] = 1
    creators = [jw_mode_operator(part, i).conj().T for i in range(part.n_modes)]
    for idx in range(part.dim):
        bits = part.bitstring(idx)
        v = vac.astype(complex)
        for i in reversed(range(part.n_modes)):
            if bits[i] == "1":
                v = creators[i] @ v
        assert np.linalg.norm(v) == 1.0
        assert abs(v[idx]) == 1.0


def test_operator_index_out_of_range():
    with pytest.raises(ValidationError):
        jw_mode_operator(ModePartition(1, 1), 2)


def test_partition_bounds():
    with pytest.raises(ValidationError):
        ModePartition(0, 2)
    with pytest.raises(ValidationError):
        ModePartition(5, 4)
    assert ModePartition(5, 4, max_modes=9).dim == 512


def test_bitstring_roundtrip():
    part = ModePartition(2, 3)
    for idx in range(part.dim):
        assert part.index(part.bitstring(idx)) == idx
        a, b = part.split(idx)
        assert part.join(a, b) == idx
    assert part.bitstring(1) == "10000"


def test_make_state_examples():
    part = ModePartition(2, 2)
    psi = make_state(part, {"0000": S, "0101": S})
    assert psi.sector == EVEN and psi.is_normalized
    vac = make_state(ModePartition(1, 1), {"00": 1})
    assert vac.sector == EVEN
    with pytest.raises(SuperselectionError):
        make_state(ModePartition(1, 1), {"00": 0.6, "01": 0.8})
    with pytest.raises(ValidationError):
        make_state(part, {})
    with pytest.raises(ValidationError):
        make_state(part, {"000": 1})


def test_make_state_normalize():
    v = make_state(ModePartition(1, 1), {"10": 3, "01": 4j}, normalize=True)
    assert v.sector == ODD
    np.testing.assert_allclose(v.norm, 1.0, atol=1e-15)


def test_fock_vector_is_immutable():
    v = make_state(ModePartition(1, 1), {"00": 1})
    with pytest.raises(ValueError):
        v.amplitudes[0] = 2
    with pytest.raises(AttributeError):
        v.sector = ODD


def test_zero_vector_needs_sector():
    part = ModePartition(1, 1)
    with pytest.raises(ValidationError):
        FockVector(part, np.zeros(4))
    assert FockVector(part, np.zeros(4), ODD).sector == ODD


def test_bipartite_matrix_layout():
    part = ModePartition(2, 1)
    v = make_state(part, {"101": 1})
    M = v.bipartite_matrix()
    assert M.shape == (4, 2)
    # Alice bits "10" -> local index 1; Bob bit "1" -> 1
    assert M[1, 1] == 1 and np.count_nonzero(M) == 1


def test_projector_examples():
    proj = sector_projectors(ModePartition(1, 1))
    np.testing.assert_array_equal(np.flatnonzero(proj.mask_E), [0])
    np.testing.assert_array_equal(np.flatnonzero(proj.mask_O), [3])
    proj = sector_projectors(ModePartition(2, 2))
    assert np.linalg.matrix_rank(proj.P_E) == 4
    assert np.linalg.matrix_rank(proj.P_O) == 4
    assert np.linalg.matrix_rank(proj.P_e) == 8


@pytest.mark.parametrize("na,nb", [(1, 1), (2, 2), (3, 2), (4, 4)])
def test_projector_algebra(na, nb):
    proj = sector_projectors(ModePartition(na, nb))
    np.testing.assert_array_equal(proj.P_E + proj.P_O, proj.P_e)
    np.testing.assert_array_equal(proj.P_E @ proj.P_O, 0)
    np.testing.assert_array_equal(proj.P_e + proj.P_o, np.eye(proj.P_e.shape[0]))
    for P in (proj.P_e, proj.P_o, proj.P_E, proj.P_O):
        np.testing.assert_array_equal(P, P.conj().T)
        np.testing.assert_array_equal(P @ P, P)


@st.composite
def amplitude_maps(draw):
    na = draw(st.integers(1, 3))
    nb = draw(st.integers(1, 3))
    part = ModePartition(na, nb)
    idx = draw(st.lists(st.integers(0, part.dim - 1), min_size=1, max_size=8, unique=True))
    vals = draw(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=len(idx), max_size=len(idx)))
    return part, {part.bitstring(i): v for i, v in zip(idx, vals)}


@settings(max_examples=200, deadline=None)
@given(amplitude_maps())
def test_superselection_fuzz(data):
    part, amps = data
    try:
        v = make_state(part, amps)
    except SuperselectionError:
        parities = {b.count("1") % 2 for b, a in amps.items() if a != 0}
        assert len(parities) > 1
        return
    except ValidationError:
        assert all(a == 0 for a in amps.values())
        return
    want = 0 if v.sector == EVEN else 1
    for i in np.flatnonzero(v.amplitudes):
        assert bin(int(i)).count("1") % 2 == want
