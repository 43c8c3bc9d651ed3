"""Command-line front end: ``stellarprep synth ...``.

Exit codes: 0 success, 1 synthesis failure, 2 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .circuit import SCHEMA_VERSION, Circuit, PNRProject
from .fock import CoreState, StellarPolynomial, polynomial_to_state, state_to_polynomial
from .simulator import (
    ProbabilityCurve,
    emit_probability_curve,
    execute,
    fidelity,
    graded_probability,
    heralding_weights,
    write_atomic,
)
from .states import builtin_state, ghz_state, random_two_photon_state, state_names
from .synthesis import (
    LinearForm,
    SynthesisError,
    synthesize_e2,
    synthesize_ghz,
    synthesize_product,
    synthesize_waring,
)
from .tensor import AdamOptions, RankSearchError

__all__ = ["JobSpec", "InputError", "run_job", "run_benchmark", "heralding_curve", "main"]

logger = logging.getLogger(__name__)

METHODS = ("waring", "e2", "ghz", "product", "auto")

# Published figures for the earlier single-ancilla scheme, carried as a
# reference column only: (#Add, PNR, p_min, p_med, p_max, F); None marks "<0.01".
LITERATURE_BASELINE = {
    "psi1": (3, 1, 0.01, 0.18, 0.28, 1.0),
    "psi2": (4, 1, 0.04, 0.09, 0.25, 1.0),
    "psi3": (5, 1, 0.03, 0.14, 0.40, 1.0),
    "psi4": (3, 1, 0.06, 0.19, 0.26, 0.75),
    "psi5": (4, 1, 0.08, 0.14, 0.29, 1.0),
    "psi6": (3, 1, 0.01, 0.14, 0.27, 1.0),
    "psi7": (5, 1, 0.01, 0.09, 0.30, 1.0),
    "psi8": (3, 1, 0.02, 0.15, 0.25, 0.83),
    "psi9": (4, 1, 0.15, 0.15, 0.15, 0.87),
    "psi10": (5, 1, None, None, None, 0.97),
    "r2": (4, 1, 0.05, 0.31, 0.66, 1.0),
    "r4": (4, 1, 0.02, 0.18, 0.29, 1.0),
    "r5": (4, 1, None, 0.10, 0.23, 1.0),
    "k3": (4, 1, 0.01, 0.20, 0.26, 0.95),
}


class InputError(ValueError):
    """Bad user input (exit code 2)."""


@dataclass
class JobSpec:
    state: str
    method: str = "auto"
    restarts: int = 25
    seed: int = 0
    threshold: float = 1e-6
    lr: float = 0.05
    max_iter: int = 5000
    out: str = "out"
    curve: tuple | None = None

    def adam(self) -> AdamOptions:
        return AdamOptions(lr=self.lr, max_iter=self.max_iter)


# -- inputs -------------------------------------------------------------------


def load_target(ref: str):
    """Built-in name or path to a JSON file.

    The file may hold a state (``terms`` keyed by ``n``), a stellar polynomial
    (``terms`` keyed by ``exponents``) or a list of linear ``forms`` given as
    ``[re, im]`` pairs.  Returns ``(CoreState, forms or None)``.
    """
    if not os.path.exists(ref):
        try:
            return builtin_state(ref), None
        except KeyError:
            raise InputError(f"{ref!r} is neither a file nor a built-in state ({', '.join(state_names())}, ghz-M)")
    try:
        with open(ref, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {ref}: {exc}") from exc
    try:
        if "forms" in data:
            forms = [LinearForm(np.array(f, dtype=float) @ np.array([1, 1j])) for f in data["forms"]]
            poly = StellarPolynomial.constant(1.0, len(forms[0]))
            for f in forms:
                poly = poly * f.polynomial()
            return polynomial_to_state(poly).normalized(), forms
        terms = data["terms"]
        if terms and "exponents" in terms[0]:
            state = polynomial_to_state(StellarPolynomial.from_json(data))
        else:
            state = CoreState.from_json(data)
        return state.normalized(), None
    except (KeyError, TypeError, ValueError, IndexError, SynthesisError) as exc:
        raise InputError(f"malformed state file {ref}: {exc}") from exc


def parse_curve(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise InputError(f"--curve expects wmin:wmax:steps, got {text!r}") from None
    if steps < 2 or hi <= lo or lo < 0:
        raise InputError("--curve needs 0 <= wmin < wmax and at least two steps")
    return lo, hi, steps


def _is_ghz(state: CoreState) -> int | None:
    M = state.modes
    if M >= 2 and len(state) == 2:
        if fidelity(state, ghz_state(M)) > 1 - 1e-12:
            return M
    return None


# -- jobs ---------------------------------------------------------------------


def heralding_curve(circuit: Circuit, alpha: float):
    """Probability of the circuit's PNR outcome as a function of the scale ``w``.

    The seed before the PNR detection is graded by the number of photons
    outside the ancilla; rescaling ``alpha -> w`` multiplies grade ``s`` by
    ``(w / alpha)**s``.
    """
    idx = next((i for i, op in enumerate(circuit.ops) if isinstance(op, PNRProject)), None)
    if idx is None:
        raise SynthesisError("circuit has no PNR detection to sweep")
    pnr = circuit.ops[idx]
    prefix = Circuit(circuit.total_modes, circuit.ops[:idx])
    seed = execute(prefix, normalize=False).polynomial
    total = circuit.additions
    weights = {total - n: w for n, w in heralding_weights(seed, pnr.mode).items()}
    target = total - pnr.n
    return lambda w: graded_probability(weights, target, w / alpha)


def _resolve_method(method: str, state: CoreState, forms) -> str:
    if method != "auto":
        return method
    if forms is not None:
        return "product"
    if _is_ghz(state):
        return "ghz"
    if state_to_polynomial(state).degree == 2:
        return "e2"
    return "waring"


def _synthesize(spec: JobSpec, state: CoreState, forms):
    method = _resolve_method(spec.method, state, forms)
    if method == "waring":
        return synthesize_waring(state, restarts=spec.restarts, seed=spec.seed, threshold=spec.threshold, opts=spec.adam())
    if method == "e2":
        return synthesize_e2(state)
    if method == "ghz":
        M = _is_ghz(state)
        if M is None:
            raise InputError("the ghz method needs a GHZ target")
        return synthesize_ghz(M)
    if method == "product":
        if forms is None:
            raise InputError("the product method needs a JSON file with linear 'forms'")
        return synthesize_product(forms, state)
    raise InputError(f"unknown method {method!r}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_job(spec: JobSpec) -> dict:
    """Synthesize, verify, and write ``circuit.json``, ``report.json`` and optionally ``curve.csv``."""
    if spec.method not in METHODS:
        raise InputError(f"unknown method {spec.method!r}")
    state, forms = load_target(spec.state)
    circuit, report = _synthesize(spec, state, forms)
    # serialization round trip: the written circuit must reproduce the report
    reloaded = Circuit.from_json(circuit.to_json())
    sim = execute(reloaded)
    audit_fid = fidelity(sim.polynomial, state_to_polynomial(state))
    if abs(audit_fid - report.fidelity) > 1e-9 or abs(sim.accumulated_probability - report.total_probability) > 1e-9:
        raise SynthesisError("reloaded circuit does not reproduce the report")
    out = {
        "schema_version": SCHEMA_VERSION,
        "state": spec.state,
        "settings": {
            "method": spec.method,
            "restarts": spec.restarts,
            "seed": spec.seed,
            "threshold": spec.threshold,
            "lr": spec.lr,
            "max_iter": spec.max_iter,
        },
        "report": report.to_dict(),
        "version": __version__,
    }
    os.makedirs(spec.out, exist_ok=True)
    write_atomic(os.path.join(spec.out, "circuit.json"), circuit.to_json() + "\n")
    write_atomic(os.path.join(spec.out, "report.json"), _dump(out))
    if spec.curve is not None:
        lo, hi, steps = spec.curve
        curve = emit_probability_curve(heralding_curve(circuit, report.alpha), np.linspace(lo, hi, steps))
        curve.write(os.path.join(spec.out, "curve.csv"))
    return out


# -- benchmarks ---------------------------------------------------------------


def _fmt(p):
    if p is None:
        return "<0.01"
    return f"{p:.2f}" if p >= 0.01 else "<0.01"


def run_benchmark(suite: str, seed: int = 0, restarts: int = 25, out: str = "out", n_random: int = 100) -> list[dict]:
    """Write ``<suite>.csv`` and ``<suite>.txt`` to ``out`` and return the rows."""
    if suite == "table4":
        rows = _table4(seed, restarts)
        columns = [
            "state", "method", "d", "M", "rank", "additions", "pnr", "p_min", "p_med", "p_max", "fidelity",
            "literature_baseline_additions", "literature_baseline_pnr", "literature_baseline_p_med",
            "literature_baseline_fidelity", "error",
        ]
    elif suite == "table5":
        rows = _table5(seed, n_random)
        columns = ["d", "M", "additions", "pnr", "f_min", "f_avg", "f_max", "samples", "distribution", "error"]
    else:
        raise InputError(f"unknown benchmark {suite!r}")
    os.makedirs(out, exist_ok=True)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    write_atomic(os.path.join(out, f"{suite}.csv"), buf.getvalue())
    write_atomic(os.path.join(out, f"{suite}.txt"), _render(rows, columns))
    return rows


def _render(rows, columns) -> str:
    cols = [c for c in columns if c != "error"]
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    for row, r in zip(cells, rows):
        line = "  ".join(v.ljust(w) for v, w in zip(row, widths))
        if r.get("error"):
            line += f"  FAILED: {r['error']}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}" if abs(v) >= 1e-4 or v == 0 else f"{v:.1e}"
    return str(v)


def _table4(seed: int, restarts: int) -> list[dict]:
    rows = []
    for name in state_names():
        state = builtin_state(name)
        poly = state_to_polynomial(state)
        base = LITERATURE_BASELINE.get(name)
        common = {
            "state": name,
            "d": poly.degree,
            "M": poly.nvars,
            "literature_baseline_additions": base[0] if base else None,
            "literature_baseline_pnr": base[1] if base else None,
            "literature_baseline_p_med": _fmt(base[3]) if base else None,
            "literature_baseline_fidelity": base[5] if base else None,
        }
        try:
            _, rep = synthesize_waring(state, restarts=restarts, seed=seed)
            p = np.array(rep.restart_probabilities)
            rows.append({**common, "method": "waring", "rank": rep.rank, "additions": rep.additions,
                         "pnr": rep.pnr_order, "p_min": float(p.min()), "p_med": float(np.median(p)),
                         "p_max": float(p.max()), "fidelity": rep.fidelity})
        except (RankSearchError, SynthesisError, FloatingPointError) as exc:
            rows.append({**common, "method": "waring", "error": str(exc)})
        logger.info("table4 %s waring done", name)
        if poly.degree == 2:
            try:
                _, rep = synthesize_e2(state)
                rows.append({**common, "method": "e2", "rank": rep.rank, "additions": rep.additions,
                             "pnr": rep.pnr_order, "p_min": rep.success_probability,
                             "p_med": rep.success_probability, "p_max": rep.success_probability,
                             "fidelity": rep.fidelity})
            except SynthesisError as exc:
                rows.append({**common, "method": "e2", "error": str(exc)})
    return rows


def _table5(seed: int, n_random: int) -> list[dict]:
    rows = []
    rng = np.random.default_rng(seed)
    for M in (3, 4, 5, 6):
        fids, adds, pnrs, errors = [], set(), set(), []
        for _ in range(n_random):
            state = random_two_photon_state(M, rng)
            try:
                _, rep = synthesize_e2(state)
                fids.append(rep.fidelity)
                adds.add(rep.additions)
                pnrs.add(rep.pnr_order)
            except SynthesisError as exc:
                errors.append(str(exc))
        rows.append({
            "d": 2, "M": M,
            "additions": "/".join(map(str, sorted(adds))),
            "pnr": "/".join(map(str, sorted(pnrs))),
            "f_min": min(fids) if fids else None,
            "f_avg": float(np.mean(fids)) if fids else None,
            "f_max": max(fids) if fids else None,
            "samples": n_random,
            "distribution": "complex normal (independent standard normal real and imaginary parts)",
            "error": "; ".join(errors) or None,
        })
    return rows


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stellarprep", description="Synthesize and verify core-state preparation circuits.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    synth = sub.add_parser("synth", help="synthesize a circuit or run a benchmark suite")
    target = synth.add_mutually_exclusive_group(required=True)
    target.add_argument("--state", help="built-in name (psi1..psi10, r2, r4, r5, k3, ghz-M) or JSON file")
    target.add_argument("--benchmark", choices=("table4", "table5"))
    synth.add_argument("--method", choices=METHODS, default="auto")
    synth.add_argument("--restarts", type=int, default=25)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--threshold", type=float, default=1e-6)
    synth.add_argument("--lr", type=float, default=0.05)
    synth.add_argument("--max-iter", type=int, default=5000)
    synth.add_argument("--curve", help="probability sweep wmin:wmax:steps written to curve.csv")
    synth.add_argument("--out", default="out")
    return parser


def _fail(code: int, kind: str, message: str, out_dir: str | None) -> int:
    payload = {"schema_version": SCHEMA_VERSION, "error": {"type": kind, "message": message}}
    text = _dump(payload)
    sys.stderr.write(text)
    if out_dir:
        try:
            os.makedirs(out_dir, exist_ok=True)
            write_atomic(os.path.join(out_dir, "error.json"), text)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.restarts < 1 or args.max_iter < 1 or args.threshold <= 0 or args.lr <= 0:
            raise InputError("restarts, max-iter, threshold and lr must be positive")
        if args.benchmark:
            t0 = time.time()
            rows = run_benchmark(args.benchmark, seed=args.seed, restarts=args.restarts, out=args.out)
            with open(os.path.join(args.out, f"{args.benchmark}.txt"), encoding="utf-8") as fh:
                sys.stdout.write(fh.read())
            logger.info("benchmark finished in %.1fs", time.time() - t0)
            return 1 if any(r.get("error") for r in rows) else 0
        spec = JobSpec(
            state=args.state, method=args.method, restarts=args.restarts, seed=args.seed,
            threshold=args.threshold, lr=args.lr, max_iter=args.max_iter, out=args.out,
            curve=parse_curve(args.curve) if args.curve else None,
        )
        result = run_job(spec)
        sys.stdout.write(_dump(result["report"]))
        return 0
    except InputError as exc:
        return _fail(2, "input", str(exc), getattr(args, "out", None))
    except (SynthesisError, RankSearchError, FloatingPointError) as exc:
        return _fail(1, "synthesis", str(exc), getattr(args, "out", None))
    except OSError as exc:
        return _fail(2, "io", str(exc), None)


if __name__ == "__main__":
    sys.exit(main())
