"""Few-mode Fermionic Fock space in the Jordan-Wigner occupation basis.

Basis index convention: bit ``i`` of the integer index is the occupation of
mode ``i``. Alice owns modes ``0 .. n_alice-1`` (the low bits), Bob owns the
rest. Bitstrings are written mode 0 first, so ``"0101"`` on a 2+2 partition
is ``|01>_A |01>_B``.

The annihilation operator of mode ``i`` carries the sign string of all lower
modes::

    phi_i |n> = (-1)**(n_0 + ... + n_{i-1}) * n_i |n - e_i>

With this ordering the Fock state ``(phi_0^+)^n_0 ... (phi_{N-1}^+)^n_{N-1}|0>``
is exactly the unit basis vector at ``n`` (no extra sign).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import SuperselectionError, ValidationError

MAX_MODES = 8
ATOL = 1e-12

EVEN = "even"
ODD = "odd"


def parity(index: int) -> int:
    """Occupation-number parity (0 even, 1 odd) of a basis index."""
    return int(index).bit_count() & 1


@dataclass(frozen=True)
class ModePartition:
    """Bipartition of ``n_alice + n_bob`` modes, Alice's modes first."""

    n_alice: int
    n_bob: int
    max_modes: int = field(default=MAX_MODES, compare=False, repr=False)

    def __post_init__(self):
        for name in ("n_alice", "n_bob"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValidationError(f"{name} must be an integer >= 1, got {value!r}")
        if self.n_alice + self.n_bob > self.max_modes:
            raise ValidationError(
                f"{self.n_alice}+{self.n_bob} modes exceeds the cap of {self.max_modes}"
            )

    @property
    def n_modes(self) -> int:
        return self.n_alice + self.n_bob

    @property
    def dim(self) -> int:
        return 1 << self.n_modes

    @property
    def dim_alice(self) -> int:
        return 1 << self.n_alice

    @property
    def dim_bob(self) -> int:
        return 1 << self.n_bob

    def split(self, index: int) -> tuple[int, int]:
        """Global index -> (Alice local index, Bob local index)."""
        return index & (self.dim_alice - 1), index >> self.n_alice

    def join(self, a: int, b: int) -> int:
        return a | (b << self.n_alice)

    def bitstring(self, index: int) -> str:
        return "".join(str((index >> i) & 1) for i in range(self.n_modes))

    def index(self, bits: str) -> int:
        if len(bits) != self.n_modes or set(bits) - {"0", "1"}:
            raise ValidationError(
                f"bitstring {bits!r} is not a {self.n_modes}-mode occupation string"
            )
        return sum(1 << i for i, c in enumerate(bits) if c == "1")

    def __str__(self):
        return f"{self.n_alice}+{self.n_bob}"


class FockVector:
    """Amplitude vector confined to one global parity sector.

    Instances are immutable: the amplitude array is copied and flagged
    read-only on construction.
    """

    __slots__ = ("partition", "amplitudes", "sector")

    def __init__(self, partition: ModePartition, amplitudes, sector: str | None = None):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (partition.dim,):
            raise ValidationError(
                f"expected {partition.dim} amplitudes for partition {partition}, got {amps.size}"
            )
        inferred = _infer_sector(amps)
        if inferred is None:
            # the zero vector only exists as a tagged component (e.g. psi_O = 0)
            if sector not in (EVEN, ODD):
                raise ValidationError("zero vector has no parity sector")
            inferred = sector
        elif sector is not None and sector != inferred:
            raise SuperselectionError(f"amplitudes live in the {inferred} sector, not {sector}")
        amps.flags.writeable = False
        object.__setattr__(self, "partition", partition)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "sector", inferred)

    def __setattr__(self, name, value):
        raise AttributeError("FockVector is immutable")

    def __eq__(self, other):
        if not isinstance(other, FockVector):
            return NotImplemented
        return (
            self.partition == other.partition
            and self.sector == other.sector
            and np.array_equal(self.amplitudes, other.amplitudes)
        )

    __hash__ = None

    def __repr__(self):
        terms = ", ".join(f"{b}: {a:.6g}" for b, a in self.terms().items())
        return f"FockVector({self.partition}, {self.sector}, {{{terms}}})"

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm**2 - 1.0) <= ATOL

    def normalized(self) -> "FockVector":
        return FockVector(self.partition, self.amplitudes / self.norm, self.sector)

    def inner(self, other: "FockVector") -> complex:
        """<self|other>."""
        _check_same_partition(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def terms(self, atol: float = 0.0) -> dict[str, complex]:
        """Nonzero amplitudes keyed by bitstring, in index order."""
        p = self.partition
        return {
            p.bitstring(i): complex(a)
            for i, a in enumerate(self.amplitudes)
            if abs(a) > atol
        }

    def bipartite_matrix(self) -> np.ndarray:
        """Amplitudes as a ``dim_alice x dim_bob`` matrix ``M[a, b]``."""
        p = self.partition
        return self.amplitudes.reshape(p.dim_bob, p.dim_alice).T


def _infer_sector(amps: np.ndarray) -> str | None:
    support = np.flatnonzero(amps)
    if support.size == 0:
        return None
    parities = {parity(i) for i in support}
    if len(parities) > 1:
        raise SuperselectionError(
            "amplitudes mix even and odd occupation parity (superselection violation)"
        )
    return ODD if parities.pop() else EVEN


def _check_same_partition(*vectors: FockVector):
    first = vectors[0].partition
    for v in vectors[1:]:
        if v.partition != first:
            raise ValidationError(f"partition mismatch: {first} vs {v.partition}")


def make_state(
    partition: ModePartition, amplitudes: Mapping[str, complex], normalize: bool = False
) -> FockVector:
    """Build a FockVector from a ``{bitstring: amplitude}`` map."""
    if not amplitudes:
        raise ValidationError("empty amplitude map")
    vec = np.zeros(partition.dim, dtype=complex)
    for bits, amp in amplitudes.items():
        vec[partition.index(bits)] += complex(amp)
    if not np.any(vec):
        raise ValidationError("all amplitudes are zero")
    state = FockVector(partition, vec)
    return state.normalized() if normalize else state


@functools.lru_cache(maxsize=None)
def _jw_annihilation(n_modes: int, i: int) -> np.ndarray:
    dim = 1 << n_modes
    op = np.zeros((dim, dim), dtype=complex)
    bit = 1 << i
    lower = bit - 1
    for idx in range(dim):
        if idx & bit:
            op[idx ^ bit, idx] = -1.0 if (idx & lower).bit_count() & 1 else 1.0
    op.flags.writeable = False
    return op


def jw_mode_operator(partition: ModePartition, i: int) -> np.ndarray:
    """Jordan-Wigner matrix of the annihilation operator of mode ``i``."""
    if not 0 <= i < partition.n_modes:
        raise ValidationError(f"mode index {i} out of range for {partition.n_modes} modes")
    return _jw_annihilation(partition.n_modes, i)


def fock_basis_state(partition: ModePartition, bits: str) -> np.ndarray:
    """Apply creation operators to the vacuum, highest mode first."""
    occ = [c == "1" for c in bits]
    if len(occ) != partition.n_modes:
        raise ValidationError(f"bitstring {bits!r} has wrong length")
    vec = np.zeros(partition.dim, dtype=complex)
    vec[0] = 1.0
    for i in reversed(range(partition.n_modes)):
        if occ[i]:
            vec = jw_mode_operator(partition, i).conj().T @ vec
    return vec


@dataclass(frozen=True, eq=False)
class SectorProjectors:
    """Diagonal projectors on the global and local-parity sectors.

    ``P_E`` keeps basis states where Alice and Bob are both even, ``P_O``
    where both are odd. The boolean masks are the diagonals.
    """

    partition: ModePartition
    mask_e: np.ndarray
    mask_o: np.ndarray
    mask_E: np.ndarray
    mask_O: np.ndarray

    @property
    def P_e(self) -> np.ndarray:
        return np.diag(self.mask_e.astype(float))

    @property
    def P_o(self) -> np.ndarray:
        return np.diag(self.mask_o.astype(float))

    @property
    def P_E(self) -> np.ndarray:
        return np.diag(self.mask_E.astype(float))

    @property
    def P_O(self) -> np.ndarray:
        return np.diag(self.mask_O.astype(float))

    @property
    def index_E(self) -> np.ndarray:
        return np.flatnonzero(self.mask_E)

    @property
    def index_O(self) -> np.ndarray:
        return np.flatnonzero(self.mask_O)


@functools.lru_cache(maxsize=64)
def sector_projectors(partition: ModePartition) -> SectorProjectors:
    masks = {k: np.zeros(partition.dim, dtype=bool) for k in ("e", "o", "E", "O")}
    for idx in range(partition.dim):
        a, b = partition.split(idx)
        pa, pb = parity(a), parity(b)
        masks["o" if pa ^ pb else "e"][idx] = True
        if pa == pb:
            masks["O" if pa else "E"][idx] = True
    for m in masks.values():
        m.flags.writeable = False
    return SectorProjectors(partition, masks["e"], masks["o"], masks["E"], masks["O"])


def local_parity_mask(n_local_modes: int, par: int) -> np.ndarray:
    """Boolean mask of local basis states with the given parity."""
    return np.array([parity(i) == par for i in range(1 << n_local_modes)])


def local_parity_projector(n_local_modes: int, par: int) -> np.ndarray:
    return np.diag(local_parity_mask(n_local_modes, par).astype(float))


def flip_last_bob_mode(state: FockVector) -> FockVector:
    """Apply the Majorana operator ``phi + phi^+`` of Bob's last mode.

    This is a unitary local to Bob that swaps the global parity sectors.
    """
    p = state.partition
    last = p.n_modes - 1
    op = jw_mode_operator(p, last)
    return FockVector(p, (op + op.conj().T) @ state.amplitudes)
