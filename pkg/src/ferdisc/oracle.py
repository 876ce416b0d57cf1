"""Independent checks of the closed-form error probabilities.

Separable effects on the even sector split as ``S_E + S_O``, so the best
separable bias ``max Tr[Pi Delta]`` is two independent eigenvalue problems.
The random sampler draws genuinely separable effects (sums of products of
local parity-block positive operators) and must never beat that value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrim import DeltaOperator
from .errors import ValidationError
from .fock import SectorProjectors, local_parity_mask, sector_projectors

SAMPLE_BATCH = 2048


def _positive_part(H: np.ndarray) -> float:
    if H.size == 0:
        return 0.0
    vals = np.linalg.eigvalsh(H)
    return float(vals[vals > 0].sum())


def best_sep_value(d: DeltaOperator, projectors: SectorProjectors | None = None) -> float:
    proj = projectors or sector_projectors(d.partition)
    if np.abs(d.matrix[proj.mask_o]).max(initial=0.0) > 1e-12:
        raise ValidationError("Delta has support outside the even sector")
    total = 0.0
    for idx in (proj.index_E, proj.index_O):
        total += _positive_part(d.matrix[np.ix_(idx, idx)])
    return total


def unconstrained_best_value(d: DeltaOperator) -> float:
    return _positive_part(d.matrix)


@dataclass(frozen=True, eq=False)
class SepEffectSample:
    S_E: np.ndarray
    S_O: np.ndarray
    score: float


def _block_indices(partition, par):
    """Global indices of the (par, par) local block, ordered Bob-major."""
    a_idx = np.flatnonzero(local_parity_mask(partition.n_alice, par))
    b_idx = np.flatnonzero(local_parity_mask(partition.n_bob, par))
    return (a_idx[None, :] | (b_idx[:, None] << partition.n_alice)).reshape(-1), a_idx.size, b_idx.size


def _random_psd(rng, n, dim, rank):
    G = rng.normal(size=(n, dim, rank)) + 1j * rng.normal(size=(n, dim, rank))
    return G @ G.conj().transpose(0, 2, 1)


def _random_separable_block(rng, n, da, db, terms):
    """``n`` random sums of ``terms`` products ``e (x) e'`` of local PSDs."""
    out = np.zeros((n, da * db, da * db), dtype=complex)
    for _ in range(terms):
        ra, rb = rng.integers(1, da + 1), rng.integers(1, db + 1)
        A = _random_psd(rng, n, da, ra)
        B = _random_psd(rng, n, db, rb)
        # Bob-major ordering matches np.kron(B, A)
        out += np.einsum("nij,nkl->nikjl", B, A).reshape(n, da * db, da * db)
    return out


def sample_sep_effects(d: DeltaOperator, trials: int, seed: int = 0, projectors: SectorProjectors | None = None):
    """Yield batches of ``(S_E, S_O, scores)`` with ``0 <= S_E + S_O <= I``."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    proj = projectors or sector_projectors(d.partition)
    if np.abs(d.matrix[proj.mask_o]).max(initial=0.0) > 1e-12:
        raise ValidationError("Delta has support outside the even sector")
    part = d.partition
    idx_E, da_E, db_E = _block_indices(part, 0)
    idx_O, da_O, db_O = _block_indices(part, 1)
    D_E = d.matrix[np.ix_(idx_E, idx_E)]
    D_O = d.matrix[np.ix_(idx_O, idx_O)]
    children = np.random.SeedSequence(seed).spawn(-(-trials // SAMPLE_BATCH))
    left = trials
    for child in children:
        n = min(SAMPLE_BATCH, left)
        left -= n
        rng = np.random.default_rng(child)
        terms = int(rng.integers(1, 4))
        S_E = _random_separable_block(rng, n, da_E, db_E, terms)
        S_O = _random_separable_block(rng, n, da_O, db_O, terms)
        top = np.maximum(np.linalg.eigvalsh(S_E)[:, -1], np.linalg.eigvalsh(S_O)[:, -1])
        # a uniform shrink keeps the sampler away from always touching I
        shrink = rng.uniform(0.5, 1.0, size=n) / top
        S_E *= shrink[:, None, None]
        S_O *= shrink[:, None, None]
        scores = (
            np.einsum("nij,ji->n", S_E, D_E).real + np.einsum("nij,ji->n", S_O, D_O).real
        )
        yield S_E, S_O, scores


def random_sep_sample(d: DeltaOperator, projectors: SectorProjectors | None = None, trials: int = 1000, seed: int = 0) -> SepEffectSample:
    """Best-scoring separable effect among ``trials`` random draws."""
    best = None
    for S_E, S_O, scores in sample_sep_effects(d, trials, seed, projectors):
        k = int(np.argmax(scores))
        if best is None or scores[k] > best.score:
            best = SepEffectSample(S_E[k], S_O[k], float(scores[k]))
    return best
