import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _gen import S, critical_pair, pm_pair, random_orthogonal_pair, random_partition, random_state
from ferdisc.decomp import sector_overlaps
from ferdisc.discrim import (
    ALL_PRIORS,
    COMPLEMENTARY,
    DIFFERENT_PARITY,
    EO_ORTHOGONAL,
    MAX_ANCILLA,
    NO_PRIOR,
    NOT_PERFECT,
    SINGLE_SUBSPACE,
    UNIQUE_PRIOR,
    DiscriminationInstance,
    attach_ancilla,
    classify_perfect,
    critical_prior,
    default_tol,
    delta,
    helstrom_error,
    is_locc_optimal,
    locc_error,
    optimality_report,
    sector_compression,
    trace_norm,
)
from ferdisc.errors import SuperselectionError, ValidationError
from ferdisc.fock import FockVector, ModePartition, jw_mode_operator, make_state, sector_projectors
from ferdisc.sweep import appendix_states


def _inst(psi, phi, p=0.5):
    return DiscriminationInstance(psi, phi, p)


# -- classification -----------------------------------------------------------


def test_pm_pair_not_perfect():
    psi, phi = pm_pair()
    v = classify_perfect(psi, phi)
    assert v.case == NOT_PERFECT and not v.perfect
    assert abs(v.sigma_E - 0.5) < 1e-12


def test_different_parity():
    part = ModePartition(1, 1)
    v = classify_perfect(make_state(part, {"00": 1}), make_state(part, {"10": 1}))
    assert v.case == DIFFERENT_PARITY


def test_complementary_and_single_subspace():
    part = ModePartition(2, 2)
    v = classify_perfect(make_state(part, {"0000": 1}), make_state(part, {"0101": 1}))
    assert v.case == COMPLEMENTARY
    a, b = random_orthogonal_pair(np.random.default_rng(0), part, "E")
    assert classify_perfect(a, b).case == SINGLE_SUBSPACE


def test_one_null_component_is_eo_orthogonal():
    part = ModePartition(2, 2)
    psi = make_state(part, {"0000": 1})
    phi = make_state(part, {"1100": S, "0101": S})  # phi_E orthogonal to psi_E
    v = classify_perfect(psi, phi)
    assert v.case == EO_ORTHOGONAL and v.null_components == ("psi_O",)


def test_odd_pair_is_mapped():
    part = ModePartition(2, 2)
    psi = make_state(part, {"1000": S, "1101": S})
    phi = make_state(part, {"1000": S, "1101": -S})
    v = classify_perfect(psi, phi)
    assert v.mapped_to_even and v.case == NOT_PERFECT
    assert abs(abs(v.sigma_E) - 0.5) < 1e-12


def test_classify_requires_orthogonality():
    psi, _ = pm_pair()
    with pytest.raises(ValidationError):
        classify_perfect(psi, psi)


# -- Delta and error probabilities ----------------------------------------------


def test_delta_eigendata_matches_eigensolver():
    rng = np.random.default_rng(1)
    for _ in range(200):
        part = random_partition(rng)
        d = delta(_inst(random_state(rng, part), random_state(rng, part), rng.uniform(0.05, 0.95)))
        vals = np.linalg.eigvalsh(d.matrix)
        assert abs(vals[-1] - d.lam_plus) < 1e-12 and abs(vals[0] - d.lam_minus) < 1e-12
        for lam, v in ((d.lam_plus, d.vec_plus), (d.lam_minus, d.vec_minus)):
            np.testing.assert_allclose(d.matrix @ v, lam * v, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
def test_helstrom_closed_form(seed, p):
    rng = np.random.default_rng(seed)
    part = random_partition(rng)
    psi, phi = random_state(rng, part), random_state(rng, part)
    d = delta(_inst(psi, phi, p))
    ov = abs(psi.inner(phi)) ** 2
    expect = 0.5 * (1 - np.sqrt(1 - 4 * p * (1 - p) * ov))
    assert abs(helstrom_error(d) - expect) < 1e-12
    assert abs(d.trace_norm - trace_norm(d.matrix)) < 1e-12
    # restricting the measurement can only hurt
    assert locc_error(d) >= helstrom_error(d) - 1e-12


def test_pm_pair_errors():
    d = delta(_inst(*pm_pair()))
    assert abs(helstrom_error(d)) < 1e-12
    assert abs(locc_error(d) - 0.5) < 1e-12
    np.testing.assert_allclose(sector_compression(d), 0, atol=1e-15)


def test_sector_separated_errors():
    part = ModePartition(2, 2)
    d = delta(_inst(make_state(part, {"0000": 1}), make_state(part, {"0101": 1})))
    assert abs(helstrom_error(d)) < 1e-12 and abs(locc_error(d)) < 1e-12
    assert is_locc_optimal(d)


def test_locc_error_rejects_odd_support():
    part = ModePartition(1, 1)
    d = delta(_inst(make_state(part, {"10": 1}), make_state(part, {"01": 1})))
    with pytest.raises(SuperselectionError):
        locc_error(d)


def test_instance_validation():
    psi, phi = pm_pair()
    with pytest.raises(ValidationError):
        _inst(psi, phi, 1.0)
    with pytest.raises(ValidationError):
        _inst(psi, FockVector(psi.partition, 2 * phi.amplitudes))


# -- optimality tests -------------------------------------------------------------


def test_critical_pairs_are_optimal():
    rng = np.random.default_rng(2)
    for _ in range(100):
        psi, phi, p = critical_pair(rng, random_partition(rng))
        d = delta(_inst(psi, phi, p))
        rep = optimality_report(d)
        assert rep.commutator and rep.agree
        assert abs(locc_error(d) - helstrom_error(d)) < 1e-10


def test_generic_instances_are_not_optimal():
    rng = np.random.default_rng(3)
    for _ in range(100):
        part = random_partition(rng)
        d = delta(_inst(random_state(rng, part), random_state(rng, part), rng.uniform(0.1, 0.9)))
        rep = optimality_report(d)
        assert not rep.commutator and rep.agree
        assert locc_error(d) - helstrom_error(d) > 0


def test_commutator_is_stricter_than_eigenvector_tests():
    # with e, e' orthogonal in E and o, o' orthogonal in O, the pair
    # c|+> +- s|-> for |+> = (e + o)/sqrt2, |-> = (e' + o')/sqrt2 at p = 1/2 has
    # eigenvectors (|+> +- |->)/sqrt2 whose E parts are orthogonal: LOCC
    # reaches Helstrom even though [Delta, P_E] != 0
    part = ModePartition(2, 2)
    e, e2 = part.index("0000"), part.index("1100")
    o, o2 = part.index("0101"), part.index("1001")
    plus = np.zeros(part.dim, complex)
    minus = np.zeros(part.dim, complex)
    plus[[e, o]] = S
    minus[[e2, o2]] = S
    psi = FockVector(part, 0.8 * plus + 0.6 * minus)
    phi = FockVector(part, 0.8 * plus - 0.6 * minus)
    d = delta(_inst(psi, phi, 0.5))
    rep = optimality_report(d)
    assert rep.eigvec_sectors and rep.eigvec_difference
    assert not rep.commutator and not rep.agree
    assert helstrom_error(d) > 0.01
    assert abs(locc_error(d) - helstrom_error(d)) < 1e-12


def test_default_tol_env(monkeypatch):
    monkeypatch.setenv("FERDISC_TOL", "1e-8")
    assert default_tol() == 1e-8
    monkeypatch.setenv("FERDISC_TOL", "-1")
    with pytest.raises(ValidationError):
        default_tol()


# -- critical prior -----------------------------------------------------------------


@pytest.mark.parametrize("xi", [0.02, 0.1, 0.2])
def test_critical_prior_of_appendix_family(xi):
    psi, phi, p0 = appendix_states(xi)
    cp = critical_prior(psi, phi)
    assert cp.status == UNIQUE_PRIOR
    assert abs(cp.p - p0) < 1e-12
    assert is_locc_optimal(delta(_inst(psi, phi, cp.p)))


def test_critical_prior_statuses():
    part = ModePartition(2, 2)
    e = make_state(part, {"0000": 1})
    o = make_state(part, {"0101": 1})
    assert critical_prior(e, o).status == ALL_PRIORS
    psi, phi = pm_pair()
    # opposite signs: p/q would have to be negative
    assert critical_prior(psi, phi) == (NO_PRIOR, None)
    assert critical_prior(e, make_state(part, {"0000": S, "0101": S})).status == NO_PRIOR


def test_critical_prior_random():
    rng = np.random.default_rng(4)
    for _ in range(50):
        psi, phi, p = critical_pair(rng, random_partition(rng))
        cp = critical_prior(psi, phi)
        assert cp.status == UNIQUE_PRIOR and abs(cp.p - p) < 1e-10


# -- ancilla ----------------------------------------------------------------------------


def _attach_by_operators(psi, a, b):
    """Reference: (psi's monomials) (a + b c_A'^+ c_B'^+) |vac> via JW matrices."""
    old = psi.partition
    new = ModePartition(old.n_alice + 1, old.n_bob + 1)
    cre = [jw_mode_operator(new, i).conj().T for i in range(new.n_modes)]
    remap = list(range(old.n_alice)) + [old.n_alice + 1 + j for j in range(old.n_bob)]
    vac = np.zeros(new.dim, complex)
    vac[0] = 1
    anc = a * vac + b * (cre[old.n_alice] @ cre[new.n_modes - 1] @ vac)
    out = np.zeros(new.dim, complex)
    for bits, amp in psi.terms().items():
        v = anc
        for m in reversed(range(old.n_modes)):
            if bits[m] == "1":
                v = cre[remap[m]] @ v
        out += amp * v
    return out


def test_ancilla_sign_matches_operator_algebra():
    rng = np.random.default_rng(5)
    for _ in range(20):
        part = ModePartition(int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        psi = random_state(rng, part, rng.choice(["even", "odd"]))
        a, b = 0.6, 0.8j
        np.testing.assert_allclose(attach_ancilla(psi, a, b).amplitudes, _attach_by_operators(psi, a, b), atol=1e-14)


def test_ancilla_examples():
    psi, phi = pm_pair()
    a, b = MAX_ANCILLA
    v = classify_perfect(attach_ancilla(psi, a, b), attach_ancilla(phi, a, b))
    assert v.perfect and v.case == EO_ORTHOGONAL
    a, b = np.sqrt(0.7), np.sqrt(0.3)
    pa, fa = attach_ancilla(psi, a, b), attach_ancilla(phi, a, b)
    v = classify_perfect(pa, fa)
    assert v.case == NOT_PERFECT
    assert abs(v.sigma_E - 0.4 * 0.5) < 1e-10
    with pytest.raises(ValidationError):
        attach_ancilla(psi, 1, 1)


def test_ancilla_overlap_law():
    # general form: Sigma'_E = |a|^2 Sigma_E + |b|^2 Sigma_O
    rng = np.random.default_rng(6)
    for _ in range(100):
        part = random_partition(rng, 1, 2)
        psi, phi = random_state(rng, part), random_state(rng, part)
        t = rng.uniform(0, np.pi / 2)
        a, b = np.cos(t), np.sin(t) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        sE, sO = sector_overlaps(psi, phi)
        nE, nO = sector_overlaps(attach_ancilla(psi, a, b), attach_ancilla(phi, a, b))
        assert abs(nE - (abs(a) ** 2 * sE + abs(b) ** 2 * sO)) < 1e-12
        assert abs(nO - (abs(b) ** 2 * sE + abs(a) ** 2 * sO)) < 1e-12
        assert abs(attach_ancilla(psi, a, b).inner(attach_ancilla(phi, a, b)) - psi.inner(phi)) < 1e-12


def test_ancilla_keeps_sector_projectors_consistent():
    psi, _ = pm_pair()
    out = attach_ancilla(psi, *MAX_ANCILLA)
    proj = sector_projectors(out.partition)
    assert np.count_nonzero(out.amplitudes[proj.mask_E]) == 2
    assert np.count_nonzero(out.amplitudes[proj.mask_O]) == 2
