"""E/O splitting of even-sector states and the constructive Walgate basis.

``E`` is the part of the even sector where Alice and Bob both hold an even
number of excitations, ``O`` the part where both are odd.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SuperselectionError, ValidationError
from .fock import (
    EVEN,
    FockVector,
    ModePartition,
    flip_last_bob_mode,
    local_parity_mask,
    sector_projectors,
)

TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SectorSplit:
    psi_E: FockVector
    psi_O: FockVector

    @property
    def norm_E(self) -> float:
        return self.psi_E.norm

    @property
    def norm_O(self) -> float:
        return self.psi_O.norm


def to_even_sector(state: FockVector) -> FockVector:
    """Map an odd-sector vector into the even sector by a Bob-local flip."""
    return state if state.sector == EVEN else flip_last_bob_mode(state)


def sector_split(psi: FockVector) -> SectorSplit:
    if psi.sector != EVEN:
        raise SuperselectionError("sector_split needs an even-sector vector; map it with to_even_sector")
    proj = sector_projectors(psi.partition)
    amps = psi.amplitudes
    return SectorSplit(
        FockVector(psi.partition, np.where(proj.mask_E, amps, 0), EVEN),
        FockVector(psi.partition, np.where(proj.mask_O, amps, 0), EVEN),
    )


def sector_overlaps(psi: FockVector, phi: FockVector) -> tuple[complex, complex]:
    """Return ``(<psi_E|phi_E>, <psi_O|phi_O>)``."""
    if psi.sector != EVEN or phi.sector != EVEN:
        raise SuperselectionError("sector overlaps are defined for even-sector vectors")
    if psi.partition != phi.partition:
        raise ValidationError("partition mismatch")
    proj = sector_projectors(psi.partition)
    a, b = psi.amplitudes, phi.amplitudes
    sigma_E = complex(np.vdot(a[proj.mask_E], b[proj.mask_E]))
    sigma_O = complex(np.vdot(a[proj.mask_O], b[proj.mask_O]))
    return sigma_E, sigma_O


# -- zero-diagonal unitary -------------------------------------------------


def _plane_rotation(M, V, i, j, target):
    """Rotate the (i, j) plane so that M[i, i] becomes ``target``.

    ``target`` must lie on the segment [M[i, i], M[j, j]]. The new basis
    vector ``x = cos(t) e_i + exp(i theta) sin(t) e_j`` is chosen with theta
    making the cross term parallel to the segment, then t solves a scalar
    trigonometric equation in closed form.
    """
    zi, zj = M[i, i], M[j, j]
    d = zj - zi
    if abs(d) == 0.0:
        return
    lam = float(np.clip(((target - zi) / d).real, 0.0, 1.0))
    A = np.conj(d) * M[i, j]
    B = np.conj(d) * M[j, i]
    theta = np.arctan2(-(A.imag + B.imag), A.real - B.real)
    cross = np.exp(1j * theta) * M[i, j] + np.exp(-1j * theta) * M[j, i]
    s = (np.conj(d) * cross).real / abs(d) ** 2
    # x^+ M x = zi + d * (sin^2 t + s sin t cos t); with u = 2t:
    # (1 - cos u + s sin u) / 2 = lam  <=>  R sin(u - delta) = 2 lam - 1
    R = np.hypot(1.0, s)
    delta = np.arctan2(1.0, s)
    u = delta + np.arcsin(np.clip((2.0 * lam - 1.0) / R, -1.0, 1.0))
    c, sn = np.cos(u / 2), np.sin(u / 2)
    ph = np.exp(1j * theta)
    # columns x, y of the 2x2 block; x^+ y = 0
    W = np.array([[c, -np.conj(ph) * sn], [ph * sn, c]])
    idx = [i, j]
    M[:, idx] = M[:, idx] @ W
    M[idx, :] = W.conj().T @ M[idx, :]
    V[idx, :] = W.conj().T @ V[idx, :]


def _crossing_pair(z, active, i):
    """Find a point on the hull of the other active entries opposite z[i].

    Returns ``(j, k, w)``: ``w`` lies on segment [z[j], z[k]] and 0 lies on
    segment [z[i], w]. ``j == k`` when a single entry already sits on the ray.
    """
    rot = -np.conj(z[i]) / abs(z[i])  # z[i] -> negative real axis
    best = None
    others = [k for k in active if k != i]
    w = {k: z[k] * rot for k in others}
    for a in others:
        if abs(w[a].imag) <= 1e-12 * abs(z[i]) and w[a].real > 0:
            cand = (w[a].real, a, a)
            best = cand if best is None or cand[0] > best[0] else best
    for a in others:
        for b in others:
            if w[a].imag > 0 > w[b].imag:
                r = (w[a].real * -w[b].imag + w[b].real * w[a].imag) / (w[a].imag - w[b].imag)
                if r > 0 and (best is None or r > best[0]):
                    best = (r, a, b)
    if best is None:
        return None
    r, a, b = best
    return a, b, r / rot


def zero_diagonal_basis(C, tol: float = TOL) -> np.ndarray:
    """Unitary ``V`` such that ``V C V^+`` has an (almost) zero diagonal.

    ``C`` must be square with negligible trace. Each pass takes the active
    diagonal entry of largest magnitude (lowest index on ties), rotates a
    point of the opposite side of the diagonal's convex hull into a partner
    slot, then rotates the pair so the chosen entry becomes exactly zero and
    retires it. At most ``2 (d - 1)`` plane rotations are applied.
    """
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {C.shape}")
    d = C.shape[0]
    scale = np.linalg.norm(C)
    if abs(np.trace(C)) > tol * max(scale, 1e-300) and scale > 0:
        raise ValidationError("zero_diagonal_basis needs a traceless matrix")
    V = np.eye(d, dtype=complex)
    if scale == 0 or d == 1:
        return V
    M = C.copy()
    floor = 1e-15 * scale
    active = list(range(d))
    budget = 10 * d * d
    rotations = 0
    while len(active) > 1:
        z = np.diag(M)
        active = [k for k in active if abs(z[k]) > floor]
        if len(active) <= 1:
            break
        i = max(active, key=lambda k: (abs(z[k]), -k))
        found = _crossing_pair(z, active, i)
        if found is None:
            raise ConvergenceError("diagonal entries do not surround the origin")
        j, k, w = found
        if j != k:
            _plane_rotation(M, V, j, k, w)
            rotations += 1
        _plane_rotation(M, V, i, j, 0.0)
        rotations += 1
        M[i, i] = 0.0 if abs(M[i, i]) <= floor else M[i, i]
        active.remove(i)
        if rotations > budget:
            raise ConvergenceError("zero-diagonal rotation budget exhausted")
    final = np.abs(np.diag(V @ C @ V.conj().T)).max()
    if final > tol * scale:
        raise ConvergenceError(f"residual diagonal {final:.3e} above tolerance")
    return V


# -- Walgate decomposition -------------------------------------------------


@dataclass(frozen=True, eq=False)
class WalgateDecomposition:
    """``psi = sum_i |i>_A |eta_i>_B`` and ``phi = sum_i |i>_A |nu_i>_B``.

    ``alice_basis`` rows are orthonormal vectors on Alice's local space
    (dimension ``2**n_alice``), all of one local parity; ``bob_eta`` and
    ``bob_nu`` rows are unnormalized vectors on Bob's local space.
    """

    partition: ModePartition
    subspace: str
    alice_basis: np.ndarray
    bob_eta: np.ndarray
    bob_nu: np.ndarray

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        return _assemble(self.alice_basis, self.bob_eta), _assemble(self.alice_basis, self.bob_nu)

    def pair_overlaps(self) -> np.ndarray:
        """``<eta_i|nu_i>`` for every i."""
        return np.einsum("ij,ij->i", self.bob_eta.conj(), self.bob_nu)


def _assemble(alice, bob):
    return np.einsum("ia,ib->ba", alice, bob).reshape(-1)


def subspace_of(state: FockVector, atol: float = 0.0) -> str | None:
    """'E', 'O', or None when the support touches both (or neither)."""
    proj = sector_projectors(state.partition)
    amps = np.abs(state.amplitudes)
    in_E = bool(np.any(amps[proj.mask_E] > atol))
    in_O = bool(np.any(amps[proj.mask_O] > atol))
    if state.sector != EVEN or in_E == in_O:
        return None
    return "E" if in_E else "O"


def walgate_decompose(psi: FockVector, phi: FockVector, tol: float = TOL) -> WalgateDecomposition:
    if psi.partition != phi.partition:
        raise ValidationError("partition mismatch")
    sub_psi, sub_phi = subspace_of(psi), subspace_of(phi)
    if sub_psi is None or sub_phi is None or sub_psi != sub_phi:
        raise ValidationError("both vectors must be supported in the same single subspace (E or O)")
    scale = psi.norm * phi.norm
    if abs(psi.inner(phi)) > tol * max(scale, 1.0):
        raise ValidationError("walgate_decompose needs orthogonal vectors")
    p = psi.partition
    alice_par = 0 if sub_psi == "E" else 1
    rows = np.flatnonzero(local_parity_mask(p.n_alice, alice_par))
    Psi = psi.bipartite_matrix()[rows]
    Phi = phi.bipartite_matrix()[rows]
    C = Psi.conj() @ Phi.T
    # Tr C = <psi|phi> is zero up to round-off; remove that residue
    C_trace_free = C - np.trace(C) / C.shape[0] * np.eye(C.shape[0])
    V = zero_diagonal_basis(C_trace_free, tol=tol)
    alice = np.zeros((rows.size, p.dim_alice), dtype=complex)
    alice[:, rows] = V
    return WalgateDecomposition(
        partition=p,
        subspace=sub_psi,
        alice_basis=alice,
        bob_eta=V.conj() @ Psi,
        bob_nu=V.conj() @ Phi,
    )
