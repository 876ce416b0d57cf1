"""Command-line front end: ``ferdisc <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import discrim, oracle, protocol, sweep
from .decomp import sector_split, subspace_of, to_even_sector, walgate_decompose
from .errors import ConvergenceError, FerdiscError, ProtocolError, ValidationError
from .fock import FockVector, ModePartition, make_state

DEFAULT_SEED = 12345
DEFAULT_SHOTS = 100_000
DEFAULT_TRIALS = 10_000
EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 2, 3
SUBCOMMANDS = ("check", "error", "prior", "protocol", "simulate", "oracle", "sweep")

STATE_GRAMMAR = """\
state files:
  UTF-8 text, one basis term per line as "<bitstring>: <re>,<im>".
  Bit i of the bitstring is the occupation of mode i; Alice's modes come
  first. A header "modes: <n_alice>+<n_bob>" declares the partition and
  "#" starts a comment. "state: psi" / "state: phi" open the two blocks
  of a pair file; a file without "state:" lines holds one state (use
  --psi and --phi). Numbers are plain decimals, no expressions.

  example (the +/- pair on 2+2 modes):
    modes: 2+2
    state: psi
    0000: 0.7071067811865476,0
    0101: 0.7071067811865476,0
    state: phi
    0000: 0.7071067811865476,0
    0101: -0.7071067811865476,0

  ferdisc check --in pair.txt               -> not-perfectly-locc
  ferdisc check --in pair.txt --ancilla max -> eo-orthogonal
  ferdisc sweep --xi 0.02,0.05,0.1,0.2 --eps -0.1:0.1:41 --out grid.csv
"""


class StateFileError(ValidationError):
    def __init__(self, message: str, line: int | None = None, source: str = "<input>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


# -- state files --------------------------------------------------------------


def _parse_complex(text: str, line: int, source: str) -> complex:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise StateFileError(f"expected '<re>,<im>', got {text.strip()!r}", line, source)
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise StateFileError(f"not a number pair: {text.strip()!r}", line, source) from None


def parse_state_text(text: str, source: str = "<input>") -> tuple[ModePartition, dict[str, FockVector]]:
    """Parse a state file. Returns the partition and ``{name: FockVector}``.

    A file without ``state:`` lines yields a single entry named ``""``.
    """
    partition = None
    blocks: dict[str, dict[str, complex]] = {}
    block_lines: dict[str, int] = {}
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise StateFileError(f"expected 'key: value', got {line!r}", n, source)
        key, value = (s.strip() for s in line.split(":", 1))
        if key == "modes":
            if partition is not None:
                raise StateFileError("duplicate 'modes' header", n, source)
            try:
                na, nb = (int(x) for x in value.split("+"))
                partition = ModePartition(na, nb)
            except (ValueError, ValidationError) as exc:
                raise StateFileError(f"bad modes header {value!r}: {exc}", n, source) from None
            continue
        if key == "state":
            if not value or value in blocks:
                raise StateFileError(f"missing or repeated state name {value!r}", n, source)
            current = value
            blocks[current] = {}
            block_lines[current] = n
            continue
        if partition is None:
            raise StateFileError("basis term before the 'modes' header", n, source)
        if current is None:
            if blocks and "" not in blocks:
                raise StateFileError("basis term outside a state block", n, source)
            current = ""
            blocks[""] = {}
            block_lines[""] = n
        if len(key) != partition.n_modes or set(key) - {"0", "1"}:
            raise StateFileError(f"bitstring {key!r} does not match {partition.n_modes} modes", n, source)
        if key in blocks[current]:
            raise StateFileError(f"repeated bitstring {key}", n, source)
        blocks[current][key] = _parse_complex(value, n, source)
    if partition is None:
        raise StateFileError("missing 'modes: <a>+<b>' header", None, source)
    if not blocks:
        raise StateFileError("no basis terms", None, source)
    states = {}
    for name, amps in blocks.items():
        try:
            states[name] = make_state(partition, amps)
        except ValidationError as exc:
            raise StateFileError(f"state {name or '(unnamed)'}: {exc}", block_lines[name], source) from None
    return partition, states


def _fmt_float(x: float) -> str:
    return repr(float(x))


def format_state_text(states: dict[str, FockVector]) -> str:
    """Inverse of :func:`parse_state_text`; floats are written exactly."""
    partitions = {v.partition for v in states.values()}
    if len(partitions) != 1:
        raise ValidationError("all states in one file must share a partition")
    part = partitions.pop()
    out = [f"modes: {part.n_alice}+{part.n_bob}"]
    for name, vec in states.items():
        if name:
            out.append(f"state: {name}")
        for bits, amp in vec.terms().items():
            out.append(f"{bits}: {_fmt_float(amp.real)},{_fmt_float(amp.imag)}")
    return "\n".join(out) + "\n"


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def load_pair(args) -> tuple[FockVector, FockVector]:
    if args.input:
        _, states = parse_state_text(_read(args.input), args.input)
        missing = {"psi", "phi"} - set(states)
        if missing:
            raise StateFileError(f"missing state block(s): {', '.join(sorted(missing))}", None, args.input)
        return states["psi"], states["phi"]
    if args.psi and args.phi:
        pair = []
        for path in (args.psi, args.phi):
            _, states = parse_state_text(_read(path), path)
            if len(states) != 1:
                raise StateFileError("expected a single state", None, path)
            pair.append(next(iter(states.values())))
        return pair[0], pair[1]
    raise ValidationError("give --in FILE or both --psi FILE and --phi FILE")


def parse_ancilla(text: str) -> tuple[complex, complex]:
    if text == "max":
        return discrim.MAX_ANCILLA
    try:
        a, b = (complex(s.strip().replace(" ", "")) for s in text.split(","))
    except ValueError:
        raise ValidationError(f"--ancilla expects 'max' or 'a,b', got {text!r}") from None
    return a, b


def parse_range(text: str, name: str) -> list[float]:
    """``a:b:n`` -> n evenly spaced values from a to b; ``x,y,z`` -> that list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return sweep.linspace(float(a), float(b), int(n))
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"{name} expects 'start:stop:count' or a comma list, got {text!r}") from None


# -- run configuration --------------------------------------------------------


@dataclass
class RunConfig:
    subcommand: str
    args: argparse.Namespace
    tol: float
    seed: int
    fmt: str
    out: str | None = None
    extra: dict = field(default_factory=dict)


def _tolerance(value: float | None) -> float:
    if value is None:
        return discrim.default_tol()
    if not value > 0:
        raise ValidationError(f"--tol must be positive, got {value}")
    return value


def _prepared_pair(cfg: RunConfig):
    psi, phi = load_pair(cfg.args)
    if cfg.args.ancilla:
        a, b = parse_ancilla(cfg.args.ancilla)
        psi, phi = discrim.attach_ancilla(psi, a, b), discrim.attach_ancilla(phi, a, b)
    if cfg.args.normalize:
        psi, phi = psi.normalized(), phi.normalized()
    return psi, phi


# -- output -------------------------------------------------------------------


def _plain(value):
    """Turn numpy/complex values into JSON-friendly objects."""
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def _text_value(value) -> str:
    if isinstance(value, (complex, np.complexfloating)):
        if value.imag == 0:
            return f"{value.real:.12g}"
        return f"{value.real:.12g}{value.imag:+.12g}j"
    if isinstance(value, (float, np.floating)):
        return f"{value:.12g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_text_value(v) for v in value) or "-"
    if value is None:
        return "-"
    return str(value)


def render(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_plain(record), indent=1) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("key,value\n")
        for k, v in record.items():
            if isinstance(v, dict):
                continue
            buf.write(f"{k},\"{_text_value(v)}\"\n")
        return buf.getvalue()
    lines = []
    for k, v in record.items():
        if isinstance(v, dict):
            lines.append(f"{k}:")
            lines.extend(f"  {kk}: {_text_value(vv)}" for kk, vv in v.items())
        else:
            lines.append(f"{k}: {_text_value(v)}")
    return "\n".join(lines) + "\n"


# -- subcommands --------------------------------------------------------------


def _explain(psi: FockVector, phi: FockVector) -> dict:
    e_psi, e_phi = to_even_sector(psi), to_even_sector(phi)
    out = {}
    for name, vec in (("psi", e_psi), ("phi", e_phi)):
        split = sector_split(vec)
        out[f"{name}_E"] = " + ".join(f"({_text_value(a)})|{b}>" for b, a in split.psi_E.terms(1e-15).items()) or "0"
        out[f"{name}_O"] = " + ".join(f"({_text_value(a)})|{b}>" for b, a in split.psi_O.terms(1e-15).items()) or "0"
    sub = subspace_of(e_psi)
    if sub is not None and sub == subspace_of(e_phi):
        wd = walgate_decompose(e_psi, e_phi)
        out["walgate_pair_overlaps"] = [complex(z) for z in wd.pair_overlaps()]
    return {"decomposition": out}


def cmd_check(cfg: RunConfig) -> dict:
    psi, phi = _prepared_pair(cfg)
    v = discrim.classify_perfect(psi, phi, cfg.tol)
    record = {
        "partition": str(psi.partition),
        "verdict": v.case,
        "perfect": v.perfect,
        "sigma_E": v.sigma_E,
        "sigma_O": v.sigma_O,
        "null_components": list(v.null_components),
        "mapped_to_even": v.mapped_to_even,
    }
    if cfg.args.explain:
        record.update(_explain(psi, phi))
    return record


def _delta(cfg: RunConfig):
    psi, phi = _prepared_pair(cfg)
    inst = discrim.DiscriminationInstance(to_even_sector(psi), to_even_sector(phi), cfg.args.prior)
    return psi, phi, inst, discrim.delta(inst)


def cmd_error(cfg: RunConfig) -> dict:
    _, _, inst, d = _delta(cfg)
    rep = discrim.optimality_report(d, tol=cfg.tol)
    h, l = discrim.helstrom_error(d), discrim.locc_error(d)
    return {
        "prior_p": inst.prior_p,
        "helstrom_error": h,
        "locc_error": l,
        "gap": l - h,
        "locc_optimal": rep.commutator,
        "commutator_norm": rep.commutator_norm,
        "eigvec_sector_test": rep.eigvec_sectors,
        "eigvec_difference_test": rep.eigvec_difference,
        "tests_agree": rep.agree,
    }


def cmd_prior(cfg: RunConfig) -> dict:
    psi, phi = _prepared_pair(cfg)
    cp = discrim.critical_prior(psi, phi, cfg.tol)
    return {"status": cp.status, "p": cp.p}


def _build_protocol(cfg: RunConfig, psi, phi):
    kind = cfg.args.kind
    if kind == "auto":
        orthogonal = abs(psi.inner(phi)) < cfg.tol
        kind = "perfect" if orthogonal and discrim.classify_perfect(psi, phi, cfg.tol).perfect else "optimal"
    if kind == "perfect":
        return protocol.build_perfect_protocol(discrim.classify_perfect(psi, phi, cfg.tol), psi, phi)
    inst = discrim.DiscriminationInstance(to_even_sector(psi), to_even_sector(phi), cfg.args.prior)
    return protocol.build_optimal_locc_protocol(discrim.delta(inst))


def cmd_protocol(cfg: RunConfig) -> dict | str:
    psi, phi = _prepared_pair(cfg)
    proto = _build_protocol(cfg, psi, phi)
    inst = discrim.DiscriminationInstance(psi, phi, cfg.args.prior)
    if cfg.fmt == "json" or cfg.out:
        return proto.to_json() + "\n"
    return {
        "construction": proto.construction,
        "alice_outcomes": [label for label, _ in proto.alice_povm],
        "bob_flip": proto.bob_flip,
        "analytic_error": proto.analytic_error(inst),
    }


def cmd_simulate(cfg: RunConfig) -> dict:
    psi, phi = _prepared_pair(cfg)
    if cfg.args.protocol:
        proto = protocol.LoccProtocol.from_json(_read(cfg.args.protocol))
    else:
        proto = _build_protocol(cfg, psi, phi)
    inst = discrim.DiscriminationInstance(psi, phi, cfg.args.prior)
    rep = protocol.simulate(proto, inst, cfg.args.shots, cfg.seed, cfg.args.workers)
    return {
        "construction": proto.construction,
        "shots": rep.shots,
        "errors": rep.errors,
        "empirical_error": rep.empirical_error,
        "std_err": rep.std_err,
        "analytic_error": proto.analytic_error(inst),
        "seed": rep.seed,
    }


def cmd_oracle(cfg: RunConfig) -> dict:
    _, _, inst, d = _delta(cfg)
    sample = oracle.random_sep_sample(d, trials=cfg.args.trials, seed=cfg.seed)
    sep = oracle.best_sep_value(d)
    full = oracle.unconstrained_best_value(d)
    p = inst.prior_p
    return {
        "trials": cfg.args.trials,
        "seed": cfg.seed,
        "random_sep_sample": sample.score,
        "best_sep_value": sep,
        "unconstrained_best_value": full,
        "sandwich_holds": sample.score <= sep + 1e-10 and sep <= full + 1e-10,
        "p_minus_best_sep": p - sep,
        "locc_error": discrim.locc_error(d),
        "p_minus_unconstrained": p - full,
        "helstrom_error": discrim.helstrom_error(d),
    }


def cmd_sweep(cfg: RunConfig) -> dict | str:
    xi = parse_range(cfg.args.xi, "--xi")
    eps = parse_range(cfg.args.eps, "--eps")
    points = sweep.fig1_grid(xi, eps)
    buf = io.StringIO()
    sweep.write_csv(points, buf)
    grid_csv = buf.getvalue()
    if cfg.args.emit_plot and not cfg.out:
        raise ValidationError("--emit-plot needs --out so the script can point at the CSV")
    if cfg.out:
        cfg.extra["side_output"] = grid_csv
    elif cfg.fmt != "json":
        return grid_csv
    slopes = sweep.one_sided_slopes(points)
    violations = sum(1 for pt in points if pt.bound_violations())
    zero_row = [pt.delta_perr for pt in points if pt.epsilon == 0.0]
    record = {
        "points": len(points),
        "bound_violations": violations,
        "delta_perr_at_zero_max": max(zero_row) if zero_row else None,
        "min_delta_perr": min(pt.delta_perr for pt in points),
        "corner_sharpens": sweep.corner_sharpens(points) if len(xi) > 1 else None,
        "one_sided_slopes": {f"xi={x:.12g}": list(s) for x, s in slopes.items()},
    }
    if cfg.args.emit_plot:
        stem = os.path.splitext(cfg.out)[0]
        _write(stem + ".gp", sweep.gnuplot_script(cfg.out, stem + ".png"))
        record["plot_script"] = stem + ".gp"
    if cfg.fmt == "json" and not cfg.out:
        record["grid"] = [dict(zip(sweep.CSV_FIELDS, (getattr(pt, f) for f in sweep.CSV_FIELDS))) for pt in points]
    return record


COMMANDS = {
    "check": cmd_check,
    "error": cmd_error,
    "prior": cmd_prior,
    "protocol": cmd_protocol,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
}


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ferdisc",
        description="Discrimination of pure bipartite Fermionic states under LOCC.",
        epilog=STATE_GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="tolerance for zero tests (default 1e-10 or $FERDISC_TOL)")
    common.add_argument("--format", dest="fmt", choices=("text", "json", "csv"), default="text")
    common.add_argument("--out", help="write the main output to this file")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")

    states = argparse.ArgumentParser(add_help=False)
    states.add_argument("--in", dest="input", metavar="FILE", help="pair file with psi and phi blocks")
    states.add_argument("--psi", metavar="FILE", help="single-state file for psi")
    states.add_argument("--phi", metavar="FILE", help="single-state file for phi")
    states.add_argument("--ancilla", metavar="max|a,b", help="attach a|00>+b|11> before anything else")
    states.add_argument("--normalize", action="store_true", help="normalize both states after loading")
    states.add_argument("--prior", type=float, default=0.5, help="prior probability of psi (default 0.5)")
    states.add_argument("--dump", action="store_true", help="print the loaded states in file format and exit")

    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    helps = {
        "check": "perfect-LOCC verdict with the sector overlaps",
        "error": "Helstrom and LOCC error probabilities",
        "prior": "critical prior making LOCC optimal",
        "protocol": "build a protocol and print or save it",
        "simulate": "Monte Carlo run of a protocol",
        "oracle": "separable-effect sandwich check",
    }
    subs = {}
    for name, text in helps.items():
        subs[name] = sub.add_parser(name, parents=[common, states], help=text, description=text)
    subs["check"].add_argument("--explain", action="store_true", help="also print the E/O decomposition")
    for name in ("protocol", "simulate"):
        subs[name].add_argument("--kind", choices=("auto", "perfect", "optimal"), default="auto")
    subs["simulate"].add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    subs["simulate"].add_argument("--workers", type=int, default=1)
    subs["simulate"].add_argument("--protocol", metavar="FILE", help="protocol JSON from 'ferdisc protocol'")
    subs["oracle"].add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    sw = sub.add_parser("sweep", parents=[common], help="prior-perturbation grid (CSV)")
    sw.add_argument("--xi", default="0.02,0.05,0.1,0.2", help="xi values: start:stop:count or a comma list")
    sw.add_argument("--eps", default="-0.1:0.1:41", help="epsilon range start:stop:count")
    sw.add_argument("--emit-plot", choices=("gnuplot",), help="also write <out stem>.gp rendering the surface")
    return parser


def _glue_ranges(argv: list[str]) -> list[str]:
    """Let ``--eps -0.1:0.1:41`` through: argparse would read the value as an option."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in ("--xi", "--eps") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_ranges(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = RunConfig(args.subcommand, args, _tolerance(args.tol), args.seed, args.fmt, args.out)
        if getattr(args, "dump", False):
            psi, phi = _prepared_pair(cfg)
            stdout.write(format_state_text({"psi": psi, "phi": phi}))
            return EXIT_OK
        result = COMMANDS[args.subcommand](cfg)
        text = result if isinstance(result, str) else render(result, cfg.fmt)
        if "side_output" in cfg.extra:
            _write(cfg.out, cfg.extra["side_output"])
            stdout.write(text)
        elif cfg.out:
            _write(cfg.out, text)
        else:
            stdout.write(text)
    except ConvergenceError as exc:
        stderr.write(f"ferdisc: no convergence: {exc}\n")
        return EXIT_NONCONVERGENCE
    except (ValidationError, ProtocolError) as exc:
        stderr.write(f"ferdisc: {exc}\n")
        return EXIT_INVALID
    except FerdiscError as exc:
        stderr.write(f"ferdisc: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


def _write(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror}") from None


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
