"""Random instance generators shared by the test modules."""

import numpy as np

from ferdisc.fock import FockVector, ModePartition, make_state, parity, sector_projectors

S = 2**-0.5


def pm_pair():
    part = ModePartition(2, 2)
    psi = make_state(part, {"0000": S, "0101": S})
    phi = make_state(part, {"0000": S, "0101": -S})
    return psi, phi


def _cgauss(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def support_mask(part, where):
    proj = sector_projectors(part)
    if where == "E":
        return proj.mask_E
    if where == "O":
        return proj.mask_O
    want = 0 if where == "even" else 1
    return np.array([parity(i) == want for i in range(part.dim)])


def random_state(rng, part, where="even"):
    mask = support_mask(part, where)
    v = np.where(mask, _cgauss(rng, part.dim), 0)
    return FockVector(part, v / np.linalg.norm(v))


def random_orthogonal_pair(rng, part, where="even"):
    mask = support_mask(part, where)
    a = np.where(mask, _cgauss(rng, part.dim), 0)
    b = np.where(mask, _cgauss(rng, part.dim), 0)
    a /= np.linalg.norm(a)
    b -= np.vdot(a, b) * a
    b /= np.linalg.norm(b)
    return FockVector(part, a), FockVector(part, b)


def random_partition(rng, lo=1, hi=3):
    return ModePartition(int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1)))


def critical_pair(rng, part):
    """States in span{e, o} whose commutators with P_E are proportional.

    Returns ``(psi, phi, p_crit)``.
    """
    e = random_state(rng, part, "E").amplitudes
    o = random_state(rng, part, "O").amplitudes
    a, b = rng.uniform(0.2, 1.0, 2)
    c, d = rng.uniform(0.2, 1.0, 2)
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    psi = (a * e + b * phase * o) / np.hypot(a, b)
    phi = (c * e + d * phase * o) / np.hypot(c, d)
    # [psi psi, P_E] = r [phi phi, P_E] with r = (a b / (a^2+b^2)) / (c d / (c^2+d^2))
    r = (a * b / (a * a + b * b)) / (c * d / (c * c + d * d))
    return FockVector(part, psi), FockVector(part, phi), 1.0 / (1.0 + r)
