"""Command-line front end.

Exit status: 0 success, 1 input error, 2 hypotheses violated,
3 inconclusive, 4 criterion and oracle disagree.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .chain import DEFAULT_EPSILON, ChainSpec, validate
from .criterion import classify_chain
from .documents import SpecFormatError, load_spec
from .families import BUILTINS, builtin
from .oracle import DEFAULT_LEVELS, mc_return, oracle_classify
from .series import Classification, SeriesConfig, Verdict
from .tables import balance_rows, mc_rows, ruin_rows, trace_rows, write_table
from .verifier import (
    check_balance_bd,
    check_balance_general,
    check_balance_one_or_three,
    check_balance_twins,
    check_global_balance,
    stationary_truncated,
)

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_INPUT", "EXIT_VIOLATED", "EXIT_INCONCLUSIVE",
           "EXIT_DISAGREE"]

EXIT_OK, EXIT_INPUT, EXIT_VIOLATED, EXIT_INCONCLUSIVE, EXIT_DISAGREE = 0, 1, 2, 3, 4

COMMANDS = ("validate", "classify", "oracle", "verify", "compare", "builtin-list")

# specialized balance systems keyed by family name
_SPECIAL_BALANCE = {"ex1-A": check_balance_bd, "ex1-B": check_balance_twins, "ex2-C": check_balance_one_or_three}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _fraction_list(text: str) -> list[Fraction]:
    return [_fraction(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="markov-recurrence", description="Recurrence classification for chains on the nonnegative integers.")
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--spec", metavar="PATH", help="JSON chain document")
    src.add_argument("--builtin", metavar="NAME", help="named chain family (see builtin-list)")
    fam = p.add_argument_group("family parameters")
    fam.add_argument("--eps", type=_fraction, help="counterexample parameter; also the lazy bound for validation")
    fam.add_argument("--lambda", dest="lam", type=_fraction, help="birth rate")
    fam.add_argument("--mu", type=_fraction, help="death rate")
    fam.add_argument("--r", type=_fraction, help="geometric upward ratio")
    fam.add_argument("--s", type=_fraction, help="geometric downward ratio")
    fam.add_argument("--q", type=_fraction_list, help="birth-death down probabilities, comma separated")
    fam.add_argument("--p", type=_fraction_list, help="birth-death up probabilities, comma separated")
    cfg = p.add_argument_group("series test")
    cfg.add_argument("--nmax", type=lambda s: int(float(s)), default=SeriesConfig.n_max)
    cfg.add_argument("--window", type=int, default=SeriesConfig.window)
    cfg.add_argument("--delta", type=float, default=SeriesConfig.delta)
    cfg.add_argument("--ratio-margin", type=float, default=SeriesConfig.ratio_margin)
    cfg.add_argument("--raabe-margin", type=float, default=SeriesConfig.raabe_margin)
    cfg.add_argument("--force", action="store_true", help="evaluate the series even if validation fails")
    orc = p.add_argument_group("oracle")
    orc.add_argument("--levels", type=_int_list, default=list(DEFAULT_LEVELS), help="comma separated ruin levels")
    orc.add_argument("--trials", type=int, default=0, help="Monte Carlo trials (0 = skip)")
    orc.add_argument("--horizon", type=lambda s: int(float(s)), default=10**6)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--workers", type=int, default=1)
    ver = p.add_argument_group("verify")
    ver.add_argument("--truncation", type=int, default=80, help="truncation level N")
    ver.add_argument("--upto", type=int, default=None, help="largest state checked")
    p.add_argument("--out", metavar="DIR", help="directory for report.txt and the tables")
    return p


def _load(args) -> ChainSpec:
    if args.spec is None and args.builtin is None:
        raise InputError("one of --spec or --builtin is required")
    if args.spec is not None:
        if not Path(args.spec).is_file():
            raise InputError(f"spec file not found: {args.spec}")
        return load_spec(args.spec)
    params = {"eps": args.eps, "lam": args.lam, "mu": args.mu, "r": args.r, "s": args.s,
              "q": args.q, "p": args.p}
    if args.builtin not in BUILTINS:
        raise InputError(f"unknown builtin {args.builtin!r}; choose from {', '.join(BUILTINS)}")
    return builtin(args.builtin, **params)


def _epsilon(args, spec: ChainSpec) -> float:
    # counterexample families use --eps as their own parameter
    if args.eps is None or "eps" in spec.params:
        return DEFAULT_EPSILON
    return float(args.eps)


def _config(args) -> SeriesConfig:
    return SeriesConfig(n_max=args.nmax, window=args.window, delta=args.delta,
                        ratio_margin=args.ratio_margin, raabe_margin=args.raabe_margin)


class _Output:
    def __init__(self, out: str | None):
        self.dir = None
        if out is not None:
            self.dir = Path(out)
            self.dir.mkdir(parents=True, exist_ok=True)
        self.lines: list[str] = []

    def say(self, line: str = "") -> None:
        print(line)
        self.lines.append(line)

    def table(self, name: str, header_rows) -> None:
        if self.dir is not None:
            header, rows = header_rows
            write_table(self.dir / name, header, rows)

    def close(self) -> None:
        if self.dir is not None:
            (self.dir / "report.txt").write_text("\n".join(self.lines) + "\n")


def _assoc_lines(cls: Classification) -> list[str]:
    rates = cls.diagnostics.get("rates") or []
    out = []
    for d in rates[:12]:
        tot = d.e_minus + d.e_plus
        q = d.e_minus / tot if tot else None
        qs = "undefined" if q is None else f"{q}"
        ps = "undefined" if q is None else f"{1 - q}"
        out.append(f"  n={d.i}: e-={d.e_minus} e+={d.e_plus} q={qs} p={ps}")
    if len(rates) > 12:
        out.append(f"  ... {len(rates) - 12} more states before the periodic regime ends")
    return out


def _violation_reason(cls: Classification) -> str:
    rep = cls.validation
    reasons = []
    if rep is not None:
        if not rep.connected_domain:
            reasons.append("connected domain violated")
        if not rep.lazy_ok:
            reasons.append("lazy bound violated")
        if not rep.stochastic:
            reasons.append("rows not stochastic")
        if not rep.e0_plus_finite:
            reasons.append("first moment out of 0 diverges")
        if rep.negative_targets:
            reasons.append("negative targets")
    return ", ".join(reasons) or "hypotheses violated"


def _cmd_validate(args, spec, out) -> int:
    rep = validate(spec, _epsilon(args, spec))
    out.say(f"chain: {spec.name or '(unnamed)'}")
    out.say(f"stochastic: {rep.stochastic} (worst deviation {rep.worst_row_deviation:.3g})")
    out.say(f"connected_domain: {rep.connected_domain}")
    for i, k in rep.witnesses[:10]:
        out.say(f"  zero entry p[{i},{k}] inside the support span")
    out.say(f"lazy bound: min 1 - p_ii = {rep.lazy_epsilon:.6g} (epsilon {rep.epsilon:g}) ok={rep.lazy_ok}")
    out.say(f"first moment out of 0: {rep.e0_plus} finite={rep.e0_plus_finite}")
    out.say(f"states checked: {rep.checked_range}")
    out.say("OK" if rep.ok else "VIOLATED: " + "; ".join(rep.failures()))
    return EXIT_OK if rep.ok else EXIT_VIOLATED


def _classification_lines(cls: Classification, spec: ChainSpec, out: _Output) -> None:
    out.say(f"chain: {spec.name or '(unnamed)'}")
    out.say(f"verdict: {cls.verdict.value}")
    out.say(f"rule: {cls.test_fired}")
    out.say(f"terms examined: {cls.n_examined}")
    if cls.verdict is Verdict.ASSUMPTION_VIOLATED:
        for f in cls.diagnostics.get("failures", []):
            out.say(f"  {f}")
        return
    d = cls.diagnostics
    if d.get("forced"):
        out.say(f"forced: hypotheses failed, series started at state {d.get('series_start')}")
    if d.get("approx_error"):
        out.say(f"rate approximation error: {d['approx_error']:.3g}")
    lines = _assoc_lines(cls)
    if lines:
        out.say("associated birth-death chain:")
        for ln in lines:
            out.say(ln)


def _classify(args, spec):
    return classify_chain(spec, _config(args), epsilon=_epsilon(args, spec), enforce_hypotheses=not args.force)


def _exit_for(verdict: Verdict) -> int:
    if verdict is Verdict.ASSUMPTION_VIOLATED:
        return EXIT_VIOLATED
    if verdict is Verdict.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _cmd_classify(args, spec, out) -> int:
    cls = _classify(args, spec)
    _classification_lines(cls, spec, out)
    out.table("trace.csv", trace_rows(cls))
    return _exit_for(cls.verdict)


def _oracle(args, spec, out, say):
    rep = oracle_classify(spec, args.levels)
    say(f"oracle verdict: {rep.verdict.value} ({rep.rule})")
    for L, h, g in rep.ruin_curve.rows():
        say(f"  L={int(L)}: h={h:.15g} 1-h={g:.6g}")
    out.table("ruin.csv", ruin_rows(rep.ruin_curve))
    if args.trials > 0:
        mc = mc_return(spec, args.trials, args.horizon, args.seed, args.workers)
        rep.mc = mc
        say(f"monte carlo: {mc.successes}/{mc.trials} returned within {mc.horizon} steps, "
                f"Wilson 95% [{mc.lo:.6f}, {mc.hi:.6f}] seed {mc.seed}")
        out.table("mc.csv", mc_rows(mc))
    return rep


def _cmd_oracle(args, spec, out) -> int:
    out.say(f"chain: {spec.name or '(unnamed)'}")
    rep = _oracle(args, spec, out, out.say)
    return EXIT_INCONCLUSIVE if rep.verdict is Verdict.INCONCLUSIVE else EXIT_OK


def _cmd_verify(args, spec, out) -> int:
    law = stationary_truncated(spec, args.truncation)
    top = law.N - law.span if args.upto is None else args.upto
    n_range = range(0, top + 1)
    reports = [check_global_balance(spec, law, n_range), check_balance_general(spec, law, n_range)]
    special = _SPECIAL_BALANCE.get(spec.name)
    if special is not None and "lambda" in spec.params:
        reports.append(special(spec, law, n_range))
    out.say(f"chain: {spec.name or '(unnamed)'}")
    out.say(f"truncation N={law.N} span={law.span} tail mass={law.tail_mass:.3g}")
    for rep in reports:
        note = f" [{'; '.join(rep.notes)}]" if rep.notes else ""
        out.say(f"  {rep.name}: max residual {rep.max_residual:.3g} over n<={top}{note}")
    out.table("balance.csv", balance_rows(reports))
    return EXIT_OK


def _cmd_compare(args, spec, out) -> int:
    cls = _classify(args, spec)
    out.table("trace.csv", trace_rows(cls))
    detail: list[str] = []
    rep = _oracle(args, spec, out, detail.append)
    ov = rep.verdict.value
    if cls.verdict is Verdict.ASSUMPTION_VIOLATED:
        out.say(f"CRITERION-INAPPLICABLE ({_violation_reason(cls)}); oracle: {ov}")
        code = EXIT_VIOLATED
    elif Verdict.INCONCLUSIVE in (cls.verdict, rep.verdict):
        out.say(f"INCONCLUSIVE; criterion: {cls.verdict.value}; oracle: {ov}")
        code = EXIT_INCONCLUSIVE
    elif cls.verdict is rep.verdict:
        out.say(f"AGREE: {ov}")
        code = EXIT_OK
    else:
        out.say(f"DISAGREE; criterion: {cls.verdict.value}; oracle: {ov}")
        code = EXIT_DISAGREE
    out.say(f"criterion rule: {cls.test_fired}")
    for ln in detail:
        out.say(ln)
    return code


def _cmd_list(out) -> int:
    for name in BUILTINS:
        out.say(name)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = _Output(args.out)
        if args.command == "builtin-list":
            code = _cmd_list(out)
        else:
            spec = _load(args)
            if args.command == "validate":
                code = _cmd_validate(args, spec, out)
            elif args.command == "classify":
                code = _cmd_classify(args, spec, out)
            elif args.command == "oracle":
                code = _cmd_oracle(args, spec, out)
            elif args.command == "verify":
                code = _cmd_verify(args, spec, out)
            else:
                code = _cmd_compare(args, spec, out)
        out.close()
        return code
    except (InputError, SpecFormatError, KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
