"""Discriminability criteria and error probabilities for two pure states.

``Delta = p|psi><psi| - q|phi><phi|`` drives everything here: its trace norm
gives the unconstrained (Helstrom) error, and its compression onto the E and
O subspaces gives the best error reachable with separable, hence LOCC,
measurements.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .decomp import sector_overlaps, sector_split, to_even_sector
from .errors import SuperselectionError, ValidationError
from .fock import ATOL, EVEN, FockVector, ModePartition, SectorProjectors, sector_projectors

DEFAULT_TOL = 1e-10


def default_tol() -> float:
    """Tolerance for iff-style tests; ``FERDISC_TOL`` overrides it."""
    raw = os.environ.get("FERDISC_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise ValidationError(f"FERDISC_TOL={raw!r} is not a number") from None
    if not tol > 0:
        raise ValidationError("FERDISC_TOL must be positive")
    return tol


def trace_norm(H: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.abs(np.linalg.eigvalsh(H)).sum())


# -- instances --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscriminationInstance:
    psi: FockVector
    phi: FockVector
    prior_p: float = 0.5

    def __post_init__(self):
        if self.psi.partition != self.phi.partition:
            raise ValidationError("psi and phi live on different partitions")
        for name in ("psi", "phi"):
            v = getattr(self, name)
            if abs(v.norm - 1.0) > ATOL:
                raise ValidationError(f"{name} is not normalized (norm {v.norm:.15g})")
        if not 0.0 < self.prior_p < 1.0:
            raise ValidationError(f"prior p must lie in (0, 1), got {self.prior_p}")

    @property
    def prior_q(self) -> float:
        return 1.0 - self.prior_p

    @property
    def partition(self) -> ModePartition:
        return self.psi.partition


# -- perfect-discrimination case analysis ---------------------------------

DIFFERENT_PARITY = "different-global-parity"
COMPLEMENTARY = "complementary-components"
SINGLE_SUBSPACE = "single-subspace"
EO_ORTHOGONAL = "eo-orthogonal"
NOT_PERFECT = "not-perfectly-locc"


@dataclass(frozen=True)
class DiscriminabilityVerdict:
    """Outcome of the perfect-LOCC case analysis.

    ``sigma_E``/``sigma_O`` are the sector overlaps of the (even-mapped)
    states; ``null_components`` names the vanishing members of
    ``psi_E, psi_O, phi_E, phi_O``. The one-null-component case is reported
    as ``eo-orthogonal`` with exactly one entry in ``null_components``.
    """

    case: str
    sigma_E: complex = 0j
    sigma_O: complex = 0j
    null_components: tuple[str, ...] = ()
    mapped_to_even: bool = False

    @property
    def perfect(self) -> bool:
        return self.case != NOT_PERFECT


def classify_perfect(psi: FockVector, phi: FockVector, tol: float | None = None) -> DiscriminabilityVerdict:
    tol = default_tol() if tol is None else tol
    if psi.partition != phi.partition:
        raise ValidationError("psi and phi live on different partitions")
    if abs(psi.inner(phi)) >= tol:
        raise ValidationError(f"states are not orthogonal (|<psi|phi>| = {abs(psi.inner(phi)):.3e})")
    if psi.sector != phi.sector:
        return DiscriminabilityVerdict(DIFFERENT_PARITY)
    mapped = psi.sector != EVEN
    psi, phi = to_even_sector(psi), to_even_sector(phi)
    sigma_E, sigma_O = sector_overlaps(psi, phi)
    sp, sf = sector_split(psi), sector_split(phi)
    norms = {
        "psi_E": sp.norm_E,
        "psi_O": sp.norm_O,
        "phi_E": sf.norm_E,
        "phi_O": sf.norm_O,
    }
    null = tuple(k for k, v in norms.items() if v < tol)
    verdict = dict(sigma_E=sigma_E, sigma_O=sigma_O, null_components=null, mapped_to_even=mapped)
    if len(null) == 2:
        # each state has a single component
        psi_sub = "E" if "psi_O" in null else "O"
        phi_sub = "E" if "phi_O" in null else "O"
        case = COMPLEMENTARY if psi_sub != phi_sub else SINGLE_SUBSPACE
        return DiscriminabilityVerdict(case, **verdict)
    if len(null) == 1:
        return DiscriminabilityVerdict(EO_ORTHOGONAL, **verdict)
    if abs(sigma_E) < tol and abs(sigma_O) < tol:
        return DiscriminabilityVerdict(EO_ORTHOGONAL, **verdict)
    return DiscriminabilityVerdict(NOT_PERFECT, **verdict)


# -- Delta operator ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeltaOperator:
    """``p|psi><psi| - q|phi><phi|`` with its two extremal eigenpairs.

    Eigendata come from the 2x2 restriction to span{psi, phi}. When the
    operator has rank one, the missing eigenpair is ``(0, v)`` with ``v`` a
    unit vector of the same sector orthogonal to the span.
    """

    psi: FockVector
    phi: FockVector
    p: float
    matrix: np.ndarray = field(repr=False)
    lam_plus: float
    lam_minus: float
    vec_plus: np.ndarray = field(repr=False)
    vec_minus: np.ndarray = field(repr=False)

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def partition(self) -> ModePartition:
        return self.psi.partition

    @property
    def trace_norm(self) -> float:
        return self.lam_plus - self.lam_minus


def _orthogonal_unit(psi: np.ndarray, span: list[np.ndarray]) -> np.ndarray:
    """A unit vector in the sector of ``psi`` orthogonal to ``span``."""
    support = np.flatnonzero(psi)
    par = int(support[0]).bit_count() & 1 if support.size else 0
    for idx in range(psi.size):
        if (idx.bit_count() & 1) != par:
            continue
        v = np.zeros(psi.size, dtype=complex)
        v[idx] = 1.0
        for s in span:
            v -= np.vdot(s, v) * s
        n = np.linalg.norm(v)
        if n > 1e-6:
            return v / n
    return np.zeros(psi.size, dtype=complex)


def delta_from_weights(psi: FockVector, phi: FockVector, w_psi: float, w_phi: float, p: float) -> DeltaOperator:
    """``w_psi |psi><psi| - w_phi |phi><phi|`` with eigendata; ``p`` is recorded."""
    a, b = psi.amplitudes, phi.amplitudes
    matrix = w_psi * np.outer(a, a.conj()) - w_phi * np.outer(b, b.conj())
    e1 = a / np.linalg.norm(a)
    s = np.vdot(e1, b)
    resid = b - s * e1
    r = np.linalg.norm(resid)
    if r > 1e-12:
        e2 = resid / r
        # coordinates: psi -> (|a|, 0), phi -> (s, r)
        na = np.linalg.norm(a)
        H = w_psi * np.array([[na * na, 0], [0, 0]], dtype=complex) - w_phi * np.array(
            [[abs(s) ** 2, s * r], [np.conj(s) * r, r * r]], dtype=complex
        )
        vals, vecs = np.linalg.eigh(H)
        basis = np.stack([e1, e2], axis=1)
        lam_m, lam_p = float(vals[0]), float(vals[1])
        v_m, v_p = basis @ vecs[:, 0], basis @ vecs[:, 1]
    else:
        lam = w_psi * np.vdot(a, a).real - w_phi * abs(s) ** 2
        other = _orthogonal_unit(a, [e1])
        if lam >= 0:
            lam_p, v_p, lam_m, v_m = float(lam), e1, 0.0, other
        else:
            lam_p, v_p, lam_m, v_m = 0.0, other, float(lam), e1
    for arr in (matrix, v_p, v_m):
        arr.flags.writeable = False
    return DeltaOperator(psi, phi, p, matrix, lam_p, lam_m, v_p, v_m)


def delta(instance: DiscriminationInstance) -> DeltaOperator:
    p, q = instance.prior_p, instance.prior_q
    return delta_from_weights(instance.psi, instance.phi, p, q, p)


def helstrom_error(d: DeltaOperator) -> float:
    return 0.5 * (1.0 - d.trace_norm)


def compress_to_sectors(matrix: np.ndarray, projectors: SectorProjectors) -> np.ndarray:
    """``P_E X P_E + P_O X P_O``."""
    keep_E = np.outer(projectors.mask_E, projectors.mask_E)
    keep_O = np.outer(projectors.mask_O, projectors.mask_O)
    return np.where(keep_E | keep_O, matrix, 0)


def sector_compression(d: DeltaOperator, projectors: SectorProjectors | None = None) -> np.ndarray:
    """``Delta_E + Delta_O`` as a full matrix."""
    return compress_to_sectors(d.matrix, projectors or sector_projectors(d.partition))


def _check_even_support(d: DeltaOperator, proj: SectorProjectors):
    if np.abs(d.matrix[proj.mask_o]).max(initial=0.0) > ATOL:
        raise SuperselectionError("Delta has support outside the even sector")


def locc_error(d: DeltaOperator, projectors: SectorProjectors | None = None) -> float:
    proj = projectors or sector_projectors(d.partition)
    _check_even_support(d, proj)
    return 0.5 * (1.0 - trace_norm(sector_compression(d, proj)))


# -- optimality tests -------------------------------------------------------


class OptimalityReport(NamedTuple):
    """The three LOCC-optimality tests evaluated side by side.

    ``commutator`` is ``[Delta, P_E] = 0``; ``eigvec_sectors`` is
    ``<+_E|-_E> = <+_O|-_O> = 0``; ``eigvec_difference`` is
    ``<+|(P_E - P_O)|-> = 0``. The last two are equivalent to each other and
    to LOCC achieving the Helstrom error. The commutator test implies them,
    and is equivalent whenever the E and O subspaces seen by Delta are
    one-dimensional; in larger systems it can be stricter.
    """

    commutator: bool
    eigvec_sectors: bool
    eigvec_difference: bool
    commutator_norm: float
    overlap_E: complex
    overlap_O: complex

    @property
    def agree(self) -> bool:
        return self.commutator == self.eigvec_sectors == self.eigvec_difference


def optimality_report(d: DeltaOperator, projectors: SectorProjectors | None = None, tol: float | None = None) -> OptimalityReport:
    tol = default_tol() if tol is None else tol
    proj = projectors or sector_projectors(d.partition)
    mE = proj.mask_E.astype(float)
    comm = d.matrix * mE[None, :] - mE[:, None] * d.matrix
    comm_norm = float(np.linalg.norm(comm))
    scale = float(np.linalg.norm(d.matrix))
    commutes = comm_norm < tol * scale if scale > 0 else True
    vp, vm = d.vec_plus, d.vec_minus
    ov_E = complex(np.vdot(vp[proj.mask_E], vm[proj.mask_E]))
    ov_O = complex(np.vdot(vp[proj.mask_O], vm[proj.mask_O]))
    rank2 = d.lam_plus > tol * max(scale, 1.0) and -d.lam_minus > tol * max(scale, 1.0)
    if rank2:
        sectors = abs(ov_E) < tol and abs(ov_O) < tol
        difference = abs(ov_E - ov_O) < tol
    else:
        # a semidefinite Delta is optimally handled by a constant guess
        sectors = difference = True
    return OptimalityReport(commutes, sectors, difference, comm_norm, ov_E, ov_O)


def is_locc_optimal(d: DeltaOperator, projectors: SectorProjectors | None = None, tol: float | None = None) -> bool:
    """True iff ``||[Delta, P_E]||_F < tol * ||Delta||_F``."""
    return optimality_report(d, projectors, tol).commutator


# -- critical prior ---------------------------------------------------------

ALL_PRIORS = "all-priors"
NO_PRIOR = "none"
UNIQUE_PRIOR = "unique"


class CriticalPrior(NamedTuple):
    status: str
    p: float | None = None


def _commutator_with_PE(v: np.ndarray, mask_E: np.ndarray) -> np.ndarray:
    vE = np.where(mask_E, v, 0)
    # [|v><v|, P_E] = |v><v_E| - |v_E><v|
    return np.outer(v, vE.conj()) - np.outer(vE, v.conj())


def critical_prior(psi: FockVector, phi: FockVector, tol: float | None = None) -> CriticalPrior:
    """Prior making ``[Delta, P_E] = 0``, if one exists."""
    tol = default_tol() if tol is None else tol
    if psi.sector != EVEN or phi.sector != EVEN:
        psi, phi = to_even_sector(psi), to_even_sector(phi)
    if psi.sector != phi.sector:
        raise ValidationError("states of different global parity need no prior tuning")
    mask_E = sector_projectors(psi.partition).mask_E
    c_psi = _commutator_with_PE(psi.amplitudes, mask_E)
    c_phi = _commutator_with_PE(phi.amplitudes, mask_E)
    n_psi, n_phi = np.linalg.norm(c_psi), np.linalg.norm(c_phi)
    if n_psi < tol and n_phi < tol:
        return CriticalPrior(ALL_PRIORS)
    if n_psi < tol or n_phi < tol:
        return CriticalPrior(NO_PRIOR)
    pivot = np.unravel_index(np.argmax(np.abs(c_phi)), c_phi.shape)
    ratio = c_psi[pivot] / c_phi[pivot]
    if abs(ratio.imag) > tol * max(1.0, abs(ratio)) or ratio.real <= 0:
        return CriticalPrior(NO_PRIOR)
    r = ratio.real
    if np.linalg.norm(c_psi - r * c_phi) > tol * max(n_psi, r * n_phi):
        return CriticalPrior(NO_PRIOR)
    return CriticalPrior(UNIQUE_PRIOR, float(1.0 / (1.0 + r)))


# -- ancilla ----------------------------------------------------------------


def attach_ancilla(psi: FockVector, a: complex, b: complex) -> FockVector:
    """Return ``psi (x) (a|00> + b|11>)`` on an enlarged partition.

    Alice's ancilla mode goes right after her block, Bob's at the very end.
    The sign of each ``|11>`` term is the Fermionic reordering sign
    ``(-1)**(Bob occupation)`` from moving Alice's ancilla creator past
    Bob's original modes.
    """
    a, b = complex(a), complex(b)
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > ATOL:
        raise ValidationError("ancilla coefficients must satisfy |a|^2 + |b|^2 = 1")
    old = psi.partition
    new = ModePartition(old.n_alice + 1, old.n_bob + 1, max_modes=max(old.max_modes, old.n_modes + 2))
    out = np.zeros(new.dim, dtype=complex)
    for idx in np.flatnonzero(psi.amplitudes):
        amp = psi.amplitudes[idx]
        xa, xb = old.split(int(idx))
        out[new.join(xa, xb)] += a * amp
        sign = -1.0 if xb.bit_count() & 1 else 1.0
        anc_a = xa | (1 << old.n_alice)
        anc_b = xb | (1 << old.n_bob)
        out[new.join(anc_a, anc_b)] += sign * b * amp
    return FockVector(new, out, psi.sector)


MAX_ANCILLA = (2**-0.5, 2**-0.5)
