"""Sensitivity of LOCC discrimination to a perturbed prior.

At a prior ``p0`` where ``[Delta0, P_E] = 0`` the LOCC-optimal measurement
``P0`` is also globally optimal. Shifting the prior to ``p0 + eps`` opens two
gaps:

* ``delta_perr``: error of the stale ``P0`` minus the best LOCC error,
  bounded by ``k|eps| + g eps``;
* ``delta_perr_prime``: best LOCC error minus the Helstrom error, bounded by
  ``kappa |eps|``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence, TextIO

import numpy as np

from .discrim import (
    DeltaOperator,
    compress_to_sectors,
    delta_from_weights,
    helstrom_error,
    locc_error,
    sector_compression,
    trace_norm,
)
from .errors import ValidationError
from .fock import FockVector, ModePartition, SectorProjectors, make_state, sector_projectors
from .protocol import build_optimal_locc_protocol, povm_error

XI_MAX = 1.0 - math.sqrt(2.0) / 2.0
BOUND_SLACK = 1e-10


def appendix_states(xi: float) -> tuple[FockVector, FockVector, float]:
    """The one-parameter family on 1+1 modes with its critical prior."""
    if not 0.0 <= xi < XI_MAX:
        raise ValidationError(f"xi must lie in [0, {XI_MAX:.6f}), got {xi}")
    s = 1.0 / math.sqrt(2.0)
    gamma = math.sqrt(1.0 - 2.0 * math.sqrt(2.0) * xi - 2.0 * xi * xi)
    part = ModePartition(1, 1)
    psi = make_state(part, {"00": s, "11": s})
    phi = make_state(part, {"00": s + xi, "11": gamma * s})
    t = gamma + math.sqrt(2.0) * gamma * xi
    return psi, phi, t / (1.0 + t)


def perturbed_delta(psi: FockVector, phi: FockVector, p0: float, epsilon: float) -> DeltaOperator:
    """``(p0 + eps)|psi><psi| - (q0 - eps)|phi><phi|``."""
    p = p0 + epsilon
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"perturbed prior {p} is outside [0, 1]")
    return delta_from_weights(psi, phi, p, 1.0 - p, p)


def reference_povm(psi: FockVector, phi: FockVector, p0: float, projectors: SectorProjectors | None = None):
    """``(Pi_psi, Pi_phi)`` of the LOCC-optimal protocol at the prior ``p0``."""
    d0 = perturbed_delta(psi, phi, p0, 0.0)
    return build_optimal_locc_protocol(d0, projectors).global_povm()


def delta_perr(
    psi: FockVector,
    phi: FockVector,
    p0: float,
    epsilon: float,
    projectors: SectorProjectors | None = None,
    povm=None,
) -> float:
    """Excess error of the ``eps = 0`` optimal POVM on the perturbed prior.

    Both terms are evaluated as errors of explicit POVMs: the stale ``P0``
    and the LOCC-optimal POVM rebuilt at ``p0 + eps`` (whose error equals
    ``(1 - ||Delta_E + Delta_O||_1) / 2``, checked at construction).
    """
    proj = projectors or sector_projectors(psi.partition)
    povm = povm if povm is not None else reference_povm(psi, phi, p0, proj)
    d = perturbed_delta(psi, phi, p0, epsilon)
    fresh = build_optimal_locc_protocol(d, proj).global_povm()
    stale_err = povm_error(povm, psi, phi, d.p, d.q)
    best_err = povm_error(fresh, psi, phi, d.p, d.q)
    return stale_err - best_err


def delta_perr_prime(psi, phi, p0, epsilon, projectors=None) -> float:
    """Best LOCC error minus the Helstrom error at ``p0 + eps``."""
    d = perturbed_delta(psi, phi, p0, epsilon)
    return locc_error(d, projectors) - helstrom_error(d)


@dataclass(frozen=True)
class BoundConstants:
    k: float
    g: float
    kappa: float


def bound_constants(psi, phi, p0, epsilon, povm, projectors=None) -> BoundConstants:
    """Slopes of the two perturbation bounds.

    ``k`` and ``kappa`` are the triangle-inequality slopes
    ``||Delta_E^eps + Delta_O^eps - Delta0||_1 / (2|eps|)`` and
    ``||Delta^eps - Delta_E^eps - Delta_O^eps||_1 / (2|eps|)``; at
    ``eps = 0`` their limits use ``|psi><psi| + |phi><phi|`` directly.
    """
    proj = projectors or sector_projectors(psi.partition)
    pi_psi, pi_phi = povm
    a, b = psi.amplitudes, phi.amplitudes
    both = np.outer(a, a.conj()) + np.outer(b, b.conj())
    g = 0.5 * float(np.trace(both @ (pi_phi - pi_psi)).real)
    if epsilon == 0.0:
        diag = compress_to_sectors(both, proj)
        k = 0.5 * trace_norm(diag)
        kappa = 0.5 * trace_norm(both - diag)
        return BoundConstants(k, g, kappa)
    d0 = perturbed_delta(psi, phi, p0, 0.0)
    de = perturbed_delta(psi, phi, p0, epsilon)
    de_diag = sector_compression(de, proj)
    k = 0.5 * trace_norm(de_diag - d0.matrix) / abs(epsilon)
    kappa = 0.5 * trace_norm(de.matrix - de_diag) / abs(epsilon)
    return BoundConstants(k, g, kappa)


@dataclass(frozen=True)
class PerturbationPoint:
    xi: float
    epsilon: float
    p0: float
    delta_perr: float
    delta_perr_prime: float
    k: float
    g: float
    kappa: float

    def bound_violations(self, slack: float = BOUND_SLACK) -> list[str]:
        eps = self.epsilon
        out = []
        if self.delta_perr < -slack:
            out.append("delta_perr < 0")
        if self.delta_perr_prime < -slack:
            out.append("delta_perr_prime < 0")
        if self.delta_perr > self.k * abs(eps) + self.g * eps + slack:
            out.append("delta_perr > k|eps| + g eps")
        if self.delta_perr_prime > self.kappa * abs(eps) + slack:
            out.append("delta_perr_prime > kappa |eps|")
        return out


CSV_FIELDS = [f.name for f in fields(PerturbationPoint)]


def perturbation_point(xi: float, epsilon: float, projectors=None, states=None, povm=None) -> PerturbationPoint:
    psi, phi, p0 = states or appendix_states(xi)
    proj = projectors or sector_projectors(psi.partition)
    povm = povm if povm is not None else reference_povm(psi, phi, p0, proj)
    consts = bound_constants(psi, phi, p0, epsilon, povm, proj)
    return PerturbationPoint(
        xi=xi,
        epsilon=epsilon,
        p0=p0,
        delta_perr=delta_perr(psi, phi, p0, epsilon, proj, povm),
        delta_perr_prime=delta_perr_prime(psi, phi, p0, epsilon, proj),
        k=consts.k,
        g=consts.g,
        kappa=consts.kappa,
    )


def linspace(start: float, stop: float, n: int) -> list[float]:
    """Evenly spaced points; a symmetric range hits 0.0 exactly at its middle."""
    if n < 1:
        raise ValidationError("a range needs at least one point")
    if n == 1:
        return [float(start)]
    return [(start * (n - 1 - i) + stop * i) / (n - 1) for i in range(n)]


def fig1_grid(xi_values: Sequence[float], epsilon_values: Sequence[float]) -> list[PerturbationPoint]:
    """Evaluate every (xi, eps) cell, ordered by xi index then eps index."""
    if not len(xi_values) or not len(epsilon_values):
        raise ValidationError("empty xi or epsilon range")
    points = []
    for xi in xi_values:
        psi, phi, p0 = appendix_states(xi)
        proj = sector_projectors(psi.partition)
        povm = reference_povm(psi, phi, p0, proj)
        for eps in epsilon_values:
            points.append(perturbation_point(xi, eps, proj, (psi, phi, p0), povm))
    return points


def one_sided_slopes(points: Iterable[PerturbationPoint]) -> dict[float, tuple[float, float]]:
    """Per xi: ``(max_{eps<0} dP/|eps|, max_{eps>0} dP/eps)`` over the grid."""
    left: dict[float, float] = {}
    right: dict[float, float] = {}
    for pt in points:
        left.setdefault(pt.xi, 0.0)
        right.setdefault(pt.xi, 0.0)
        if pt.epsilon > 0:
            right[pt.xi] = max(right[pt.xi], pt.delta_perr / pt.epsilon)
        elif pt.epsilon < 0:
            left[pt.xi] = max(left[pt.xi], pt.delta_perr / -pt.epsilon)
    return {xi: (left[xi], right[xi]) for xi in left}


def corner_sharpens(points: Iterable[PerturbationPoint]) -> bool:
    """True when both one-sided slopes strictly grow as xi decreases."""
    slopes = one_sided_slopes(points)
    ladder = sorted(slopes, reverse=True)
    for side in (0, 1):
        vals = [slopes[xi][side] for xi in ladder]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            return False
    return True


def k_sup(points: Iterable[PerturbationPoint]) -> dict[float, float]:
    """Largest ``k`` seen per xi over the epsilon range."""
    out: dict[float, float] = {}
    for pt in points:
        out[pt.xi] = max(out.get(pt.xi, 0.0), pt.k)
    return out


def write_csv(points: Iterable[PerturbationPoint], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for pt in points:
        writer.writerow([f"{v:.12g}" for v in asdict(pt).values()])


def read_csv(fh: TextIO) -> list[PerturbationPoint]:
    reader = csv.DictReader(fh)
    return [PerturbationPoint(**{k: float(row[k]) for k in CSV_FIELDS}) for row in reader]


def gnuplot_script(csv_path: str, output: str = "fig1.png") -> str:
    """Gnuplot script drawing the delta_perr surface over (eps, xi)."""
    return "\n".join(
        [
            "# delta_perr(eps, xi) surface from a ferdisc sweep CSV",
            "set datafile separator ','",
            "set terminal pngcairo size 900,700",
            f"set output '{output}'",
            "set xlabel 'epsilon'",
            "set ylabel 'xi'",
            "set zlabel 'delta P_err'",
            "set ticslevel 0",
            f"splot '{csv_path}' every ::1 using 2:1:4 with points pt 7 ps 0.4 title 'delta P_err'",
            "",
        ]
    )
