"""Command-line front end.

Subcommands
-----------
photocount-test
    Tight-inequality margins for photocount statistics, optionally scanned
    over the displacement ``alpha0`` and estimated from finite samples.
uhd-test
    Triangle-inequality verdicts for unbalanced homodyne detection with
    two local-oscillator settings, optionally scanned over ``eta``.
oracle-check
    Agreement between tight verdicts and the hull LP on random points.

Exit codes: 0 ran and found nothing nonclassical, 2 nonclassicality
detected, 1 runtime error or oracle disagreement, 64 usage error.
Every run writes a JSON manifest (see README) next to its CSV output.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .detectors import DetectorModel
from .oracle import BAND, oracle_check
from .photocount import DegeneracyError, max_violation
from .sampling import estimate_test_function, make_rng, sample_counts
from .states import (TruncationError, coherent, fock, phase_squeezed, photocount_dist,
                     squeezed_vacuum_antisqueezed_real)
from .uhd import (D_MAX, UhdConfig, boundary_curve, crossover_eta, max_linear_margin, mismatch_factor,
                  triangle_test, uhd_analyze)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NONCLASSICAL = 2
EXIT_USAGE = 64

SEED_ENV = "TIGHTINEQ_SEED"
# classical inputs reach margins at rounding level; only larger ones count
CLASSICAL_TOL = 1e-9
CSV_SCHEMA = {
    "photocount-test": "photocount-test/1",
    "uhd-test": "uhd-test/1",
    "uhd-boundary": "uhd-boundary/1",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _parse_scan(text: str, name: str) -> np.ndarray:
    key, _, rng = text.partition("=")
    if key.strip() != name:
        raise UsageError(f"--scan must look like {name}=start:stop:count, got {text!r}")
    parts = rng.split(":")
    if len(parts) != 3:
        raise UsageError(f"--scan must look like {name}=start:stop:count, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"cannot parse scan range {rng!r}")
    if n < 1:
        raise UsageError("scan count must be at least 1")
    return np.linspace(lo, hi, n)


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise UsageError(f"cannot parse complex amplitude {text!r}")


def _state_factory(args):
    """Return ``(build(alpha0) -> StateSpec, alpha0 default, accepts_alpha0)``."""
    text = args.state.strip().lower()
    kind, _, val = text.partition(":")
    eta = args.eta_state
    if kind == "vacuum":
        return (lambda a: fock(0, eta)), 0.0, False
    if kind == "fock":
        try:
            n = int(val)
        except ValueError:
            raise UsageError(f"fock state needs an integer, e.g. fock:1, got {text!r}")
        return (lambda a: fock(n, eta)), 0.0, False
    if kind == "coherent":
        a0 = _parse_complex(val) if val else (args.alpha0 or 0.0)
        return (lambda a: coherent(a, eta)), a0, True
    if kind in ("sq-coh", "sq-vac"):
        if args.r is None:
            raise UsageError(f"state {kind} needs --r")
        if kind == "sq-vac":
            return (lambda a: squeezed_vacuum_antisqueezed_real(args.r, eta)), 0.0, False
        return (lambda a: phase_squeezed(float(np.real(a)), args.r, eta)), (args.alpha0 or 0.0), True
    raise UsageError(f"unknown state {args.state!r}; use vacuum, fock:n, coherent:A, sq-coh or sq-vac")


def _row_seeds(seed: int, n: int):
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _write_csv(path, header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    data = buf.getvalue().encode()
    if path is None:
        sys.stdout.write(data.decode())
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)
    return data


def _manifest(args, command, seed, outputs, extra=None):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "argv")}
    man = {
        "manifest_version": 1,
        "command": command,
        "argv": args.argv,
        "config": config,
        "seed": seed,
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "outputs": [{"path": p if p else "<stdout>", "schema": s,
                     "sha256": hashlib.sha256(d).hexdigest()} for p, s, d in outputs],
    }
    if extra:
        man.update(extra)
    text = json.dumps(man, indent=2, sort_keys=True, default=_fmt)
    target = args.manifest or (f"{args.out}.manifest.json" if getattr(args, "out", None) else None)
    if target:
        Path(target).write_text(text + "\n")
    else:
        sys.stderr.write(text + "\n")
    return man


# --- photocount-test ----------------------------------------------------------


def cmd_photocount_test(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        det = DetectorModel.parse(args.detector)
    except ValueError as e:
        raise UsageError(str(e))
    N = det.N
    if N != 2 and N % 2 == 0:
        raise UsageError(f"tight inequalities are constructed for N = 2 and odd N, got N = {N}")
    m = 1 if N == 2 else (N - 1) // 2
    if args.m is not None and args.m != m:
        raise UsageError(f"--m {args.m} does not match {det.label} (m = {m})")
    build, a0, takes_alpha = _state_factory(args)
    if args.scan:
        if not takes_alpha:
            raise UsageError(f"--scan alpha0 needs a displaced state (coherent or sq-coh), got {args.state}")
        alphas = _parse_scan(args.scan, "alpha0")
    else:
        alphas = np.array([a0])
    if args.samples is not None and args.samples < 1:
        raise UsageError("--samples must be positive")
    seeds = _row_seeds(seed, len(alphas))
    header = ["alpha0", "margin", "std_error"] + [f"t{i + 1}" for i in range(m)] + ["tau", "detector"]
    rows, detected = [], False
    for a, rs in zip(alphas, seeds):
        P = photocount_dist(build(a), det)
        rep = max_violation(P, det, n_restarts=args.restarts, seed=seed)
        if args.samples:
            margin, se = estimate_test_function(sample_counts(P, args.samples, rs), rep.test_function)
            hit = margin - 2.0 * se > 0
        else:
            margin, se = rep.margin, 0.0
            hit = margin > args.threshold
        detected |= hit
        alpha_out = float(np.real(a)) if np.imag(a) == 0 else complex(a)
        rows.append([alpha_out, margin, se, *rep.nodes, rep.tau, det.label])
    data = _write_csv(args.out, header, rows)
    _manifest(args, "photocount-test", seed, [(args.out, CSV_SCHEMA["photocount-test"], data)],
              {"nonclassical": bool(detected)})
    return EXIT_NONCLASSICAL if detected else EXIT_OK


# --- uhd-test -------------------------------------------------------------------


def cmd_uhd_test(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    g1, g2 = _parse_complex(args.gamma1), _parse_complex(args.gamma2)
    if g1 == g2:
        raise UsageError("the two local-oscillator settings must differ")
    if args.state.strip().lower() == "sq-vac" and args.r is None:
        raise UsageError("state sq-vac needs --r")
    args.eta_state = 1.0
    build, a0, _ = _state_factory(args)
    state = build(a0)
    etas = _parse_scan(args.scan, "eta") if args.scan else np.array([args.eta])
    if np.any(etas <= 0) or np.any(etas > 1):
        raise UsageError("eta must lie in (0, 1]")
    if not 0 < args.xi <= 1:
        raise UsageError("--xi must lie in (0, 1]")
    base = UhdConfig(g1, g2, 1.0, args.xi)
    if base.d_eff > D_MAX:
        print(f"warning: d = {base.d:.4g} exceeds 1/sqrt(2); tangent family not guaranteed tight, "
              "triangle verdicts still exact", file=sys.stderr)
    seeds = _row_seeds(seed, len(etas))
    header = ["eta", "P1", "P2", "verdict", "violated_inequality", "t_star"]
    rows, detected = [], False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for eta, rs in zip(etas, seeds):
            cfg = base.with_eta(float(eta))
            rep = uhd_analyze(state, cfg)
            P = rep.P
            if args.samples:
                rng = make_rng(rs)
                P = np.maximum(rng.binomial(args.samples, np.clip(P, 0, 1)) / args.samples,
                               0.5 / args.samples)
                g = mismatch_factor([cfg.gamma1, cfg.gamma2], cfg.eta, cfg.xi)
                Pid = np.minimum(P / g, 1.0)
                tri = triangle_test(Pid, cfg.d_eff)
                _, t_star = max_linear_margin(Pid, cfg.d_eff, warn=False)
            else:
                tri, t_star = rep.triangle, rep.t_star
            if tri.violated:
                which = "+".join(tri.violated)
            elif tri.saturated:
                which = "saturated:" + "+".join(tri.saturated)
            else:
                which = ""
            detected |= tri.nonclassical
            rows.append([float(eta), float(P[0]), float(P[1]), tri.verdict, which, t_star])
    data = _write_csv(args.out, header, rows)
    outputs = [(args.out, CSV_SCHEMA["uhd-test"], data)]
    if args.boundary_csv:
        # the boundary for a single eta uses its effective half-distance
        d = math.sqrt(float(etas[0])) * base.d if len(etas) == 1 else base.d
        ts = np.linspace(-(d + 4), d + 4, 801)
        B = boundary_curve(ts, d)
        bdata = _write_csv(args.boundary_csv, ["t", "P1", "P2"], [[t, b[0], b[1]] for t, b in zip(ts, B)])
        outputs.append((args.boundary_csv, CSV_SCHEMA["uhd-boundary"], bdata))
    extra = {"nonclassical": bool(detected)}
    if args.scan and not args.samples:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eta_star = crossover_eta(state, base.with_eta(1.0), lo=float(etas.min()), hi=float(etas.max()))
        extra["crossover_eta"] = eta_star
        if eta_star is not None:
            print(f"crossover eta* = {eta_star:.6f}", file=sys.stderr)
    _manifest(args, "uhd-test", seed, outputs, extra)
    return EXIT_NONCLASSICAL if detected else EXIT_OK


# --- oracle-check -----------------------------------------------------------------


def cmd_oracle_check(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    kinds = ["pnr", "click"] if args.kind == "both" else [args.kind]
    if args.N < 2 or (args.N > 3 and args.N % 2 == 0):
        raise UsageError("oracle-check supports N = 2, N = 3 and odd N >= 5")
    reports = []
    for i, kind in enumerate(kinds):
        rep = oracle_check(DetectorModel(kind, args.N), args.trials, seed + i, args.band, args.restarts)
        reports.append(rep)
    out = {"seed": seed, "band": args.band, "reports": [r.as_dict() for r in reports],
           "examples": [d for r in reports for d in r.disagreements[:5]]}
    text = json.dumps(out, indent=2, sort_keys=True)
    data = (text + "\n").encode()
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(text + "\n")
    _manifest(args, "oracle-check", seed, [(args.out, "oracle-check/1", data)])
    return EXIT_OK if all(r.ok for r in reports) else EXIT_ERROR


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tightineq", description="Tight nonclassicality inequalities for "
                "photocounting and unbalanced homodyne detection.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help=f"64-bit seed (default: ${SEED_ENV} or 0)")
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--manifest", default=None,
                        help="manifest path (default: OUT.manifest.json, or stderr when OUT is stdout)")

    pc = sub.add_parser("photocount-test", help="tight-inequality margins for photocounts")
    pc.add_argument("--state", required=True, help="vacuum | fock:n | coherent:A | sq-coh | sq-vac")
    pc.add_argument("--alpha0", type=float, default=None, help="displacement for sq-coh / coherent")
    pc.add_argument("--r", type=float, default=None, help="squeezing parameter")
    pc.add_argument("--eta", dest="eta_state", type=float, default=1.0, help="efficiency (loss on the state)")
    pc.add_argument("--detector", required=True, help="pnr:N or click:N")
    pc.add_argument("--m", type=int, default=None, help="node count m (checked against N = 2m + 1)")
    pc.add_argument("--scan", default=None, help="alpha0=start:stop:count")
    pc.add_argument("--samples", type=int, default=None, help="estimate margins from this many events")
    pc.add_argument("--restarts", type=int, default=2, help="local refinements per tau")
    pc.add_argument("--threshold", type=float, default=CLASSICAL_TOL,
                    help="exact margins above this count as nonclassical (default 1e-9)")
    common(pc)
    pc.set_defaults(func=cmd_photocount_test)

    pu = sub.add_parser("uhd-test", help="unbalanced homodyne triangle test")
    pu.add_argument("--state", default="sq-vac", help="sq-vac | vacuum | coherent:A | fock:n")
    pu.add_argument("--r", type=float, default=None, help="squeezing parameter")
    pu.add_argument("--alpha0", type=float, default=None, help=argparse.SUPPRESS)
    pu.add_argument("--gamma1", default=repr(-D_MAX), help="first setting (complex, default -1/sqrt(2))")
    pu.add_argument("--gamma2", default=repr(D_MAX), help="second setting (complex, default 1/sqrt(2))")
    pu.add_argument("--eta", type=float, default=1.0, help="detection efficiency")
    pu.add_argument("--xi", type=float, default=1.0, help="mode-mismatch parameter")
    pu.add_argument("--scan", default=None, help="eta=start:stop:count")
    pu.add_argument("--samples", type=int, default=None, help="events per setting")
    pu.add_argument("--boundary-csv", default=None, help="also write the classical boundary curve")
    common(pu)
    pu.set_defaults(func=cmd_uhd_test)

    po = sub.add_parser("oracle-check", help="tight verdicts versus the hull LP")
    po.add_argument("--N", type=int, required=True)
    po.add_argument("--kind", choices=["pnr", "click", "both"], default="both")
    po.add_argument("--trials", type=int, default=1000)
    po.add_argument("--band", type=float, default=BAND, help="ignore margins smaller than this")
    po.add_argument("--restarts", type=int, default=2, help="local refinements per tau (odd N >= 5)")
    common(po)
    po.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # usage errors exit 64 via _Parser.error; --help and --version exit 0
        return int(e.code or 0)
    args.argv = argv
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"tightineq: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TruncationError, DegeneracyError, ValueError, RuntimeError) as e:
        print(f"tightineq: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
