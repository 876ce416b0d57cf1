"""Explicit one-way LOCC protocols and their Monte Carlo simulation.

A protocol is a two-level tree: Alice measures a POVM on her modes and
announces the label; Bob then measures a label-dependent POVM whose effects
carry the final guess (``"psi"`` or ``"phi"``). Every effect must commute
with the local parity of its owner.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .decomp import sector_split, to_even_sector, walgate_decompose
from .discrim import (
    DIFFERENT_PARITY,
    NOT_PERFECT,
    DeltaOperator,
    DiscriminabilityVerdict,
    DiscriminationInstance,
    locc_error,
)
from .errors import ProtocolError, ValidationError
from .fock import EVEN, FockVector, ModePartition, SectorProjectors, local_parity_mask, sector_projectors

PSI, PHI = "psi", "phi"
EFFECT_TOL = 1e-10
SHARD_SHOTS = 1 << 16

Effect = tuple[str, np.ndarray]


def psd_sqrt(A: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(A)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def _check_povm(effects: Sequence[Effect], n_local: int, owner: str):
    dim = 1 << n_local
    if not effects:
        raise ProtocolError(f"{owner}: empty POVM")
    even = local_parity_mask(n_local, 0)
    off_block = np.not_equal.outer(even, even)
    total = np.zeros((dim, dim), dtype=complex)
    for label, E in effects:
        if E.shape != (dim, dim):
            raise ProtocolError(f"{owner}/{label}: effect has shape {E.shape}, expected {(dim, dim)}")
        if np.abs(E - E.conj().T).max() > EFFECT_TOL:
            raise ProtocolError(f"{owner}/{label}: effect is not Hermitian")
        if np.linalg.eigvalsh(E).min() < -EFFECT_TOL:
            raise ProtocolError(f"{owner}/{label}: effect is not positive semidefinite")
        if np.abs(E[off_block]).max(initial=0.0) > EFFECT_TOL:
            raise ProtocolError(f"{owner}/{label}: effect mixes local parity sectors")
        total += E
    if np.abs(total - np.eye(dim)).max() > EFFECT_TOL:
        raise ProtocolError(f"{owner}: effects do not sum to the identity")


@dataclass(frozen=True, eq=False)
class LoccProtocol:
    """Alice's POVM, Bob's POVM per Alice label, and the decisions.

    ``bob_flip`` marks protocols built for odd-sector inputs: the states are
    first moved to the even sector by Bob's local mode flip.
    """

    partition: ModePartition
    alice_povm: tuple[Effect, ...]
    bob_povms: Mapping[str, tuple[Effect, ...]]
    construction: str = ""
    bob_flip: bool = False
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = [label for label, _ in self.alice_povm]
        if len(set(labels)) != len(labels):
            raise ProtocolError("duplicate Alice labels")
        _check_povm(self.alice_povm, self.partition.n_alice, "alice")
        for label in labels:
            if label not in self.bob_povms:
                raise ProtocolError(f"no Bob POVM for Alice outcome {label!r}")
            entries = self.bob_povms[label]
            for decision, _ in entries:
                if decision not in (PSI, PHI):
                    raise ProtocolError(f"unknown decision {decision!r}")
            _check_povm(entries, self.partition.n_bob, f"bob[{label}]")

    def prepare(self, state: FockVector) -> FockVector:
        return to_even_sector(state) if self.bob_flip else state

    def global_effects(self):
        """Yield ``(alice_label, decision, A (x) B)`` in the global basis."""
        for label, A in self.alice_povm:
            for decision, B in self.bob_povms[label]:
                yield label, decision, np.kron(B, A)

    def global_povm(self) -> tuple[np.ndarray, np.ndarray]:
        dim = self.partition.dim
        out = {PSI: np.zeros((dim, dim), dtype=complex), PHI: np.zeros((dim, dim), dtype=complex)}
        for _, decision, E in self.global_effects():
            out[decision] += E
        return out[PSI], out[PHI]

    def analytic_error(self, instance: DiscriminationInstance) -> float:
        return self.weighted_error(instance.psi, instance.phi, instance.prior_p, instance.prior_q)

    def weighted_error(self, psi: FockVector, phi: FockVector, w_psi: float, w_phi: float) -> float:
        """``w_psi <psi|Pi_phi|psi> + w_phi <phi|Pi_psi|phi>``."""
        return povm_error(self.global_povm(), self.prepare(psi), self.prepare(phi), w_psi, w_phi)

    def branch_table(self, state: FockVector):
        """Born probabilities of Alice outcomes and Bob entries.

        Returns ``(alice_probs, bob_probs)`` where ``bob_probs[k]`` is the
        distribution of Bob's entries conditioned on Alice outcome ``k``
        (Lüders update with the PSD square root of Alice's effect).
        """
        M = self.prepare(state).bipartite_matrix()
        alice_probs = np.empty(len(self.alice_povm))
        bob_probs = []
        for k, (label, A) in enumerate(self.alice_povm):
            pa = float(np.vdot(M, A @ M).real)
            alice_probs[k] = pa
            entries = self.bob_povms[label]
            if pa <= 1e-15:
                bob_probs.append(np.full(len(entries), 1.0 / len(entries)))
                continue
            post = psd_sqrt(A) @ M / np.sqrt(pa)
            bob_probs.append(np.array([float(np.vdot(post, post @ B.T).real) for _, B in entries]))
        _check_distribution(alice_probs)
        for probs in bob_probs:
            _check_distribution(probs)
        return np.clip(alice_probs, 0, 1), [np.clip(b, 0, 1) for b in bob_probs]

    # -- serialization --

    def to_dict(self) -> dict:
        return {
            "format": "ferdisc-protocol/1",
            "partition": [self.partition.n_alice, self.partition.n_bob],
            "construction": self.construction,
            "bob_flip": self.bob_flip,
            "alice": [{"label": label, "effect": _encode(A)} for label, A in self.alice_povm],
            "bob": {
                label: [{"decision": d, "effect": _encode(B)} for d, B in self.bob_povms[label]]
                for label, _ in self.alice_povm
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "LoccProtocol":
        try:
            part = ModePartition(*data["partition"], max_modes=sum(data["partition"]))
            alice = tuple((e["label"], _decode(e["effect"])) for e in data["alice"])
            bob = {
                label: tuple((e["decision"], _decode(e["effect"])) for e in entries)
                for label, entries in data["bob"].items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed protocol document: {exc}") from exc
        return cls(part, alice, bob, data.get("construction", ""), bool(data.get("bob_flip", False)))

    @classmethod
    def from_json(cls, text: str) -> "LoccProtocol":
        return cls.from_dict(json.loads(text))


def povm_error(povm, psi: FockVector, phi: FockVector, w_psi: float, w_phi: float) -> float:
    """Error probability of a two-outcome POVM ``(Pi_psi, Pi_phi)``."""
    pi_psi, pi_phi = povm
    a, b = psi.amplitudes, phi.amplitudes
    err = w_psi * np.vdot(a, pi_phi @ a) + w_phi * np.vdot(b, pi_psi @ b)
    return float(err.real)


def _encode(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _decode(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("effect must be a square array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _check_distribution(probs: np.ndarray):
    if probs.min() < -EFFECT_TOL or probs.max() > 1 + EFFECT_TOL:
        raise ProtocolError(f"branch probabilities outside [0, 1]: {probs}")
    if abs(probs.sum() - 1.0) > EFFECT_TOL:
        raise ProtocolError(f"branch probabilities sum to {probs.sum():.12g}")


# -- builders ---------------------------------------------------------------


def _sector_branch(partition: ModePartition, sector: str, kind: str, pair=None):
    """Alice effects and Bob POVMs for one local-parity block.

    ``kind`` is ``"psi"``/``"phi"`` (constant guess), ``"coin"`` (fair coin)
    or ``"walgate"``, in which case ``pair`` holds two orthogonal vectors of
    the sector: the first is accepted as psi, the second as phi.
    """
    par = 0 if sector == "E" else 1
    mask_a = local_parity_mask(partition.n_alice, par).astype(float)
    eye_b = np.eye(partition.dim_bob, dtype=complex)
    if kind in (PSI, PHI):
        return [(sector, np.diag(mask_a).astype(complex))], {sector: ((kind, eye_b),)}
    if kind == "coin":
        return [(sector, np.diag(mask_a).astype(complex))], {sector: ((PSI, 0.5 * eye_b), (PHI, 0.5 * eye_b))}
    first, second = (FockVector(partition, v, EVEN) for v in pair)
    wd = walgate_decompose(first.normalized(), second.normalized())
    alice, bob = [], {}
    for i, (ai, eta) in enumerate(zip(wd.alice_basis, wd.bob_eta)):
        label = f"{sector}{i}"
        alice.append((label, np.outer(ai, ai.conj())))
        n = np.linalg.norm(eta)
        if n < 1e-12:
            bob[label] = ((PHI, eye_b),)
        else:
            P = np.outer(eta, eta.conj()) / n**2
            bob[label] = ((PSI, P), (PHI, eye_b - P))
    return alice, bob


def _assemble_protocol(partition, branches, construction, bob_flip, notes=None):
    alice, bob = [], {}
    for a, b in branches:
        alice.extend(a)
        bob.update(b)
    return LoccProtocol(partition, tuple(alice), bob, construction, bob_flip, notes or {})


def _parity_protocol(psi: FockVector, phi: FockVector) -> LoccProtocol:
    p = psi.partition
    even_guess = PSI if psi.sector == EVEN else PHI
    odd_guess = PHI if even_guess == PSI else PSI
    Ae = np.diag(local_parity_mask(p.n_alice, 0).astype(complex))
    Ao = np.eye(p.dim_alice) - Ae
    Be = np.diag(local_parity_mask(p.n_bob, 0).astype(complex))
    Bo = np.eye(p.dim_bob) - Be
    return LoccProtocol(
        p,
        (("even", Ae), ("odd", Ao)),
        {
            "even": ((even_guess, Be), (odd_guess, Bo)),
            "odd": ((even_guess, Bo), (odd_guess, Be)),
        },
        construction="parity",
    )


def build_perfect_protocol(verdict: DiscriminabilityVerdict, psi: FockVector, phi: FockVector, tol: float = 1e-10) -> LoccProtocol:
    """Zero-error protocol for a perfectly LOCC-discriminable orthogonal pair."""
    if verdict.case == NOT_PERFECT:
        raise ProtocolError("states are not perfectly LOCC-discriminable; attach an ancilla first")
    if verdict.case == DIFFERENT_PARITY:
        proto = _parity_protocol(psi, phi)
    else:
        e_psi, e_phi = to_even_sector(psi), to_even_sector(phi)
        sp, sf = sector_split(e_psi), sector_split(e_phi)
        branches = []
        for sector, u, v in (("E", sp.psi_E, sf.psi_E), ("O", sp.psi_O, sf.psi_O)):
            has_u, has_v = u.norm >= tol, v.norm >= tol
            if has_u and has_v:
                branches.append(_sector_branch(psi.partition, sector, "walgate", (u.amplitudes, v.amplitudes)))
            else:
                branches.append(_sector_branch(psi.partition, sector, PHI if has_v else PSI))
        proto = _assemble_protocol(psi.partition, branches, f"parity+walgate ({verdict.case})", verdict.mapped_to_even)
    err = proto.analytic_error(DiscriminationInstance(psi, phi, 0.5))
    if abs(err) > tol:
        raise ProtocolError(f"constructed protocol has analytic error {err:.3e}")
    return proto


def build_optimal_locc_protocol(d: DeltaOperator, projectors: SectorProjectors | None = None, tol: float = 1e-10) -> LoccProtocol:
    """LOCC protocol reaching ``locc_error(d)``.

    Inside each of E and O the block ``Delta_X`` has rank at most two. A
    definite block gets a constant guess, a zero block a fair coin, and an
    indefinite block a Walgate measurement separating its positive and
    negative eigenvectors.
    """
    proj = projectors or sector_projectors(d.partition)
    target = locc_error(d, proj)
    scale = max(1.0, float(np.abs(d.matrix).max()))
    branches = []
    for sector, idx in (("E", proj.index_E), ("O", proj.index_O)):
        block = d.matrix[np.ix_(idx, idx)]
        vals, vecs = np.linalg.eigh(block)
        thr = 1e-13 * scale
        pos, neg = vals > thr, vals < -thr
        if pos.any() and neg.any():
            lift = np.zeros((d.partition.dim, 2), dtype=complex)
            lift[idx, 0] = vecs[:, np.argmax(vals)]
            lift[idx, 1] = vecs[:, np.argmin(vals)]
            branches.append(_sector_branch(d.partition, sector, "walgate", (lift[:, 0], lift[:, 1])))
        elif pos.any():
            branches.append(_sector_branch(d.partition, sector, PSI))
        elif neg.any():
            branches.append(_sector_branch(d.partition, sector, PHI))
        else:
            branches.append(_sector_branch(d.partition, sector, "coin"))
    proto = _assemble_protocol(d.partition, branches, "optimal-locc", False)
    err = proto.weighted_error(d.psi, d.phi, d.p, d.q)
    if abs(err - target) > tol:
        raise ProtocolError(f"protocol error {err:.12g} differs from LOCC bound {target:.12g}")
    return proto


# -- simulation -------------------------------------------------------------


@dataclass(frozen=True)
class SimulationReport:
    shots: int
    errors: int
    seed: int | None = None

    @property
    def empirical_error(self) -> float:
        return self.errors / self.shots if self.shots else 0.0

    @property
    def std_err(self) -> float:
        e = self.empirical_error
        return float(np.sqrt(e * (1 - e) / self.shots)) if self.shots else 0.0

    def __add__(self, other: "SimulationReport") -> "SimulationReport":
        return SimulationReport(self.shots + other.shots, self.errors + other.errors, self.seed)


def _sample_categorical(rng, cdfs: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Draw one index per entry of ``rows`` from the row's CDF."""
    u = rng.random(rows.size)
    out = (u[:, None] >= cdfs[rows]).sum(axis=1)
    return np.minimum(out, cdfs.shape[1] - 1)


def _run_shard(tables, p: float, shots: int, seed_seq) -> int:
    rng = np.random.default_rng(seed_seq)
    alice_cdf, bob_cdf, bob_decision = tables
    truth = (rng.random(shots) >= p).astype(np.intp)  # 0: psi, 1: phi
    a = _sample_categorical(rng, alice_cdf, truth)
    rows = truth * alice_cdf.shape[1] + a
    k = _sample_categorical(rng, bob_cdf, rows)
    decided = bob_decision[a, k]
    return int(np.count_nonzero(decided != truth))


def _build_tables(protocol: LoccProtocol, instance: DiscriminationInstance):
    n_a = len(protocol.alice_povm)
    n_b = max(len(protocol.bob_povms[label]) for label, _ in protocol.alice_povm)
    alice_cdf = np.ones((2, n_a))
    bob_cdf = np.ones((2 * n_a, n_b))
    decision = np.zeros((n_a, n_b), dtype=np.intp)
    for s, state in enumerate((instance.psi, instance.phi)):
        pa, pb = protocol.branch_table(state)
        alice_cdf[s] = np.cumsum(pa)
        for k, probs in enumerate(pb):
            bob_cdf[s * n_a + k, : probs.size] = np.cumsum(probs)
    for k, (label, _) in enumerate(protocol.alice_povm):
        for j, (dec, _) in enumerate(protocol.bob_povms[label]):
            decision[k, j] = 0 if dec == PSI else 1
    # guard the last bin against CDF round-off
    alice_cdf[:, -1] = np.inf
    bob_cdf[:, -1] = np.inf
    for row in range(bob_cdf.shape[0]):
        n_entries = len(protocol.bob_povms[protocol.alice_povm[row % n_a][0]])
        bob_cdf[row, n_entries - 1 :] = np.inf
    return alice_cdf, bob_cdf, decision


def simulate(
    protocol: LoccProtocol,
    instance: DiscriminationInstance,
    shots: int,
    seed: int = 0,
    workers: int = 1,
) -> SimulationReport:
    """Sample ``shots`` rounds of the protocol on the instance.

    Shots are cut into shards of ``SHARD_SHOTS``; shard ``i`` draws from the
    ``i``-th child of ``SeedSequence(seed)``, so the report does not depend on
    ``workers``.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    if instance.partition != protocol.partition:
        raise ValidationError("protocol and instance partitions differ")
    tables = _build_tables(protocol, instance)
    n_shards = -(-shots // SHARD_SHOTS)
    sizes = [SHARD_SHOTS] * (n_shards - 1) + [shots - SHARD_SHOTS * (n_shards - 1)]
    children = np.random.SeedSequence(seed).spawn(n_shards)
    jobs = list(zip(sizes, children))
    run = lambda job: _run_shard(tables, instance.prior_p, *job)  # noqa: E731
    if workers > 1 and n_shards > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(run, jobs))
    else:
        counts = [run(job) for job in jobs]
    return SimulationReport(shots, sum(counts), seed)
