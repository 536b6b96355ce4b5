"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 vanishing post-selected state.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import catalog, optimize
from .detlike import Statistics
from .errors import EmptyResult, SloccError, VanishingState
from .scheme import load_scheme, matching_sign, parse_sigma, perfect_matchings, save_scheme
from .slocc import ClassTag, fidelity, genuine_threshold, make_target, post_select, state_to_dict

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_VANISHING = 3

TARGET_CHOICES = [tag.value for tag in ClassTag]


def fmt(x: float) -> str:
    return f"{x:.12g}"


def fmt_complex(z: complex) -> str:
    return f"{z.real:.12g}{z.imag:+.12g}j"


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    label: str
    statistics: str
    probability: float
    fidelities: dict[str, float] = field(default_factory=dict)
    vanishing: bool = False
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "statistics": self.statistics,
            "probability": self.probability,
            "fidelities": self.fidelities,
            "vanishing": self.vanishing,
            "seconds": self.seconds,
        }


REPORT_SCHEMA = {
    "type": "object",
    "required": ["report"],
    "properties": {
        "report": {
            "type": "object",
            "required": ["label", "statistics", "probability", "fidelities", "vanishing", "seconds"],
            "properties": {
                "label": {"type": "string"},
                "statistics": {"enum": ["boson", "fermion"]},
                "probability": {"type": "number", "minimum": 0, "maximum": 1},
                "fidelities": {"type": "object", "additionalProperties": {"type": "number"}},
                "vanishing": {"type": "boolean"},
                "seconds": {"type": "number", "minimum": 0},
            },
        },
        "state": {"type": ["object", "null"]},
    },
}


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


# --- simulate ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    scheme = load_scheme(args.file)
    start = time.perf_counter()
    report = RunReport(scheme.label, scheme.stats.value, 0.0)
    state = None
    try:
        out = post_select(scheme)
    except VanishingState:
        report.vanishing = True
    else:
        state = out
        report.probability = out.probability
        for name in args.target or []:
            target = catalog.resolve_target(name, scheme.n, scheme.stats)
            report.fidelities[name] = fidelity(out, target)
    report.seconds = time.perf_counter() - start

    if args.json:
        doc = {"report": report.to_dict(), "state": state_to_dict(state) if state else None}
        print(json.dumps(doc, indent=2))
    else:
        print(f"label: {report.label}")
        print(f"statistics: {report.statistics}")
        print(f"probability: {fmt(report.probability)}")
        for name, f in report.fidelities.items():
            print(f"fidelity[{name}]: {fmt(f)}")
        if report.vanishing:
            print("post-selection never succeeds: every amplitude vanishes")
        else:
            print("state:")
            for entry in state_to_dict(state)["amplitudes"]:
                print(f"  {entry['config']}  {fmt_complex(complex(entry['re'], entry['im']))}")
    return EXIT_VANISHING if report.vanishing else EXIT_OK


# --- catalog -----------------------------------------------------------------

def cmd_catalog(args) -> int:
    try:
        scheme = catalog.build(args.name, args.n, args.stats)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    except (ValueError, SloccError) as exc:
        raise UsageError(str(exc)) from None
    save_scheme(scheme, args.out)
    print(f"wrote {scheme.label} ({scheme.stats.value}, n={scheme.n}) to {args.out}")
    return EXIT_OK


# --- verify ------------------------------------------------------------------

def _fmt_opt(x) -> str:
    return "-" if x is None else fmt(x)


def cmd_verify(args) -> int:
    start = time.perf_counter()
    rows = [catalog.evaluate(entry) for entry in catalog.verify_cases()]
    header = f"{'name':<18} {'stats':<8} {'exp F':>14} {'exp P':>14} {'F':>14} {'P':>14}  result"
    print(header)
    failures = 0
    for row in rows:
        e = row.entry
        status = "PASS" if row.passed else "FAIL"
        failures += not row.passed
        print(f"{e.name:<18} {e.stats.value:<8} {_fmt_opt(e.expected.fidelity):>14} "
              f"{fmt(e.expected.probability):>14} {_fmt_opt(row.fidelity):>14} {fmt(row.probability):>14}  {status}")
    chain = next((r for r in rows if r.entry.name == "dicke-chain4" and r.entry.stats is Statistics.BOSON), None)
    if chain is not None:
        vals = catalog.PUBLISHED_CHAIN_DICKE_BOSON_P
        closest = min(vals, key=lambda k: abs(vals[k] - chain.probability))
        print(f"INFO dicke-chain4 boson: published P = {vals['tabulated']} (tabulated) and {vals['derived']} (worked derivation); "
              f"computed P = {fmt(chain.probability)}, matching the {closest} value")
    elapsed = time.perf_counter() - start
    print(f"{len(rows) - failures}/{len(rows)} rows pass in {elapsed:.3f} s")
    return EXIT_VERIFY_FAIL if failures else EXIT_OK


# --- tradeoff ----------------------------------------------------------------

def _parse_fraction(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def cmd_tradeoff(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    if args.n < 2:
        raise UsageError("--n must be >= 2")
    try:
        template = optimize.templates_for(args.cls, args.n, args.stats)
        target = make_target(args.cls, args.n)
        threshold = args.threshold if args.threshold is not None else genuine_threshold(args.cls, args.n)
        anneal = None
        if args.anneal_steps > 0:
            anneal = optimize.AnnealConfig(steps=args.anneal_steps, chains=args.anneal_chains)
        cfg = optimize.SearchConfig(args.samples, args.seed, args.bin_width, anneal, args.workers)
    except (ValueError, SloccError) as exc:
        raise UsageError(str(exc)) from None
    if not 0 <= threshold < 1:
        raise UsageError("--threshold must lie in [0, 1)")
    try:
        points = optimize.sample_tradeoff(template, target, threshold, cfg)
    except EmptyResult as exc:
        optimize.write_tradeoff_csv(args.out, template, [])
        print(f"warning: {exc}; wrote header only to {args.out}")
        return EXIT_OK
    optimize.write_tradeoff_csv(args.out, template, points)
    top = max(points, key=lambda p: p.max_probability)
    print(f"global max probability: {fmt(top.max_probability)} "
          f"in fidelity bin [{fmt(top.fidelity_bin_low)}, {fmt(top.fidelity_bin_high)}]")
    print(f"wrote {len(points)} bins to {args.out}")
    return EXIT_OK


# --- matchings ---------------------------------------------------------------

def cmd_matchings(args) -> int:
    scheme = load_scheme(args.file)
    try:
        sigma = parse_sigma(args.sigma, scheme.n)
    except (ValueError, SloccError) as exc:
        raise UsageError(str(exc)) from None
    total = 0j
    found = perfect_matchings(scheme, sigma)
    for perm, product in found:
        sign = matching_sign(perm, scheme.stats)
        total += sign * product
        print(f"perm {' '.join(map(str, perm))}  product {fmt_complex(product)}  sign {sign:+d}")
    print(f"matchings: {len(found)}")
    print(f"total: {fmt_complex(total)}")
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sloccgen", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="post-select a scheme file and report P and fidelities")
    s.add_argument("file")
    s.add_argument("--target", action="append", choices=TARGET_CHOICES + ["bell-psi"])
    s.add_argument("--json", action="store_true", help="emit one JSON document")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("catalog", help="write a named scheme to a JSON file")
    c.add_argument("name")
    c.add_argument("--n", type=int)
    c.add_argument("--stats", choices=["boson", "fermion"], required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_catalog)

    v = sub.add_parser("verify", help="reproduce the reference values of every catalog scheme")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tradeoff", help="sample the fidelity/probability trade-off")
    t.add_argument("--class", dest="cls", choices=["w", "dicke", "ghz", "cluster"], required=True)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--stats", choices=["boson", "fermion"], required=True)
    t.add_argument("--threshold", type=_parse_fraction, help="default: genuine-entanglement threshold")
    t.add_argument("--samples", type=int, required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--bin-width", type=float, default=0.01)
    t.add_argument("--anneal-steps", type=int, default=0, help="per-bin annealing steps (0: off)")
    t.add_argument("--anneal-chains", type=int, default=16)
    t.add_argument("--workers", type=int, default=1)
    t.set_defaults(func=cmd_tradeoff)

    m = sub.add_parser("matchings", help="list the perfect matchings behind one amplitude")
    m.add_argument("file")
    m.add_argument("--sigma", required=True, help="spin string such as 'udd', region 0 first")
    m.set_defaults(func=cmd_matchings)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except SloccError as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
