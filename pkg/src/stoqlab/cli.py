"""Command-line front end.

Output is line-oriented ``key=value`` records by default (``--format text``
for a friendlier layout). Exit codes: 0 success, 1 promise violation or a
NONE / EQUIVALENT verdict, 2 input errors, 3 resource caps.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import gadgets, setcsp, tester
from .errors import CapExceeded, ConvergenceError, ParseError, PromiseViolation, StoqlabError
from .states import NonNegState, parse_witness, subset_state
from .verifier import (Basis, accept_prob, max_accept, max_accept_computational,
                       parse_verifier, serialize_verifier)

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    fmt: str = "kv"
    seed: Optional[int] = None
    jobs: int = 1
    records: list = field(default_factory=list)

    def emit(self, **kv):
        self.records.append(kv)

    def render(self) -> str:
        lines = []
        for rec in self.records:
            if self.fmt == "text":
                lines.extend(f"{k.replace('_', ' ')}: {_fmt(v)}" for k, v in rec.items())
            else:
                lines.append(" ".join(f"{k}={_fmt(v)}" for k, v in rec.items()))
        return "\n".join(lines) + ("\n" if lines else "")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12f}"
    return str(v)


def _read(path: str) -> str:
    return Path(path).read_text()


def _witness_entries(cfg: RunConfig, w):
    for bits, amp in w.to_dict().items():
        cfg.emit(witness=bits, amplitude=float(amp))


# -- subcommands ------------------------------------------------------------------

def cmd_simulate(a, cfg: RunConfig) -> int:
    v = parse_verifier(_read(a.verifier))
    w = parse_witness(_read(a.witness))
    cfg.emit(accept=accept_prob(v, w, cap=a.cap))
    return EXIT_OK


def cmd_maxaccept(a, cfg: RunConfig) -> int:
    v = parse_verifier(_read(a.verifier))
    if v.basis is Basis.COMPUTATIONAL:
        p, s = max_accept_computational(v, cap=a.cap)
        cfg.emit(max_accept=p, witness=s)
        return EXIT_OK
    p, w = max_accept(v, cap=a.cap)
    cfg.emit(max_accept=p, support=len(w))
    _witness_entries(cfg, w)
    return EXIT_OK


def _load_rcd(a):
    return gadgets.parse_rcd(_read(a.instance), a.alpha, a.beta)


def cmd_rcd(a, cfg: RunConfig) -> int:
    if a.rcd_cmd == "build":
        v = parse_verifier(_read(a.verifier))
        inst = gadgets.rcd_from_verifier(v, a.a, a.b)
        text = gadgets.serialize_rcd(inst)
        if a.output:
            Path(a.output).write_text(text)
            cfg.emit(written=a.output, alpha=inst.alpha, beta=inst.beta)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    inst = _load_rcd(a)
    if a.rcd_cmd == "distance":
        w = parse_witness(_read(a.witness))
        d = gadgets.rcd_distance(inst, w)
        cfg.emit(distance=d, accept=accept_prob(gadgets.rcd_verifier(inst), w))
        return EXIT_OK
    if a.rcd_cmd == "witness-search":
        pair = gadgets.exact_rcd_witness_search(inst, cap=a.cap)
        if pair is None:
            cfg.emit(result="NONE")
            return EXIT_VERDICT
        cfg.emit(result="FOUND", pair=f'"{pair}"')
        return EXIT_OK
    if a.rcd_cmd == "decide":
        try:
            verdict, d, w = gadgets.rcd_decide(inst)
        except PromiseViolation:
            d, _ = gadgets.rcd_extremal_distance(inst)
            cfg.emit(verdict="PROMISE_VIOLATION", extremal_distance=d, alpha=inst.alpha,
                     beta=inst.beta)
            return EXIT_VERDICT
        cfg.emit(verdict=verdict, extremal_distance=d, alpha=inst.alpha, beta=inst.beta)
        return EXIT_OK
    if a.rcd_cmd == "norandom":
        rep = gadgets.no_random_bits_decision(inst.c0, inst.c1, inst.layout, cap=a.cap)
        if rep.pair is None:
            cfg.emit(verdict=rep.verdict.value, accept=rep.accept)
            return EXIT_VERDICT
        cfg.emit(verdict=rep.verdict.value, s_i=rep.pair[0], s_j=rep.pair[1], accept=rep.accept)
        return EXIT_OK
    raise AssertionError(a.rcd_cmd)


def cmd_amplify(a, cfg: RunConfig) -> int:
    v = parse_verifier(_read(a.verifier))
    rep = gadgets.soundness_amplify_check(v, a.r)
    cfg.emit(r=rep.r, lam=rep.lam, lam_rep=rep.lam_rep, lam_pow=rep.lam_pow,
             rel_error=rep.rel_error, accept=rep.accept, accept_rep=rep.accept_rep)
    return EXIT_OK


def cmd_test(a, cfg: RunConfig) -> int:
    v = parse_verifier(_read(a.verifier))
    w = parse_witness(_read(a.witness))
    tcfg = tester.TesterConfig(a.a, a.b, c_m=a.c_m, c_m_prime=a.c_m, seed=a.seed)
    summary = tester.run_trials(v, w, tcfg, a.trials, jobs=a.jobs)
    for t, r in enumerate(summary.reports):
        cfg.emit(trial=t, verdict=r.verdict, z_hat=r.z_hat, x_hat=r.x_hat, product=r.product,
                 samples=r.sample_calls, queries=r.query_calls)
    cfg.emit(trials=a.trials, accepts=summary.accepts, rate=summary.rate, m=tcfg.m,
             m_prime=tcfg.m_prime)
    return EXIT_OK


def _subset_arg(text: str, n: int) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    for s in items:
        if len(s) != n or set(s) - {"0", "1"}:
            raise ParseError(f"subset member {s!r} is not an {n}-bit string")
    return items


def cmd_setcsp(a, cfg: RunConfig) -> int:
    inst = setcsp.parse_instance(_read(a.instance))
    if a.setcsp_cmd == "frustration":
        S = _subset_arg(a.subset, inst.n)
        for i, c in enumerate(inst.constraints):
            cfg.emit(constraint=i + 1, frustration=setcsp.frustration(c, S, inst.n),
                     longing=setcsp.longing_mass(c, S, inst.n))
        cfg.emit(total=setcsp.total_frustration(inst, S))
        return EXIT_OK
    if a.setcsp_cmd == "compile":
        comp = setcsp.compile_to_stoqma(inst)
        lay = comp.verifier.layout
        cfg.emit(width=comp.verifier.width, n_w=lay.n_w, n_0=lay.n_0, n_plus=lay.n_plus,
                 branches=len(comp.branches), selection_bits=comp.selection_bits,
                 c0=str(comp.c0), c1=str(comp.c1))
        if a.output:
            Path(a.output).write_text(serialize_verifier(comp.verifier))
            cfg.emit(written=a.output)
        if a.subset:
            S = _subset_arg(a.subset, inst.n)
            raw = accept_prob(comp.verifier, subset_state(S, inst.n))
            cfg.emit(raw_accept=raw, corrected=comp.corrected(raw),
                     expected=1.0 - 0.5 * setcsp.total_frustration(inst, S))
        return EXIT_OK
    if a.setcsp_cmd == "minimize":
        if a.heuristic and a.seed is None:
            raise ParseError("--heuristic needs --seed")
        res = setcsp.min_frustration(inst, heuristic=a.heuristic, seed=a.seed or 0)
        cfg.emit(value=res.value, heuristic=res.heuristic, subset=",".join(res.subset))
        return EXIT_OK
    raise AssertionError(a.setcsp_cmd)


def cmd_cstoqma_ma(a, cfg: RunConfig) -> int:
    v = parse_verifier(_read(a.verifier))
    if len(a.s) != v.layout.n_w or set(a.s) - {"0", "1"}:
        raise ParseError(f"--s must be a {v.layout.n_w}-bit string")
    t = gadgets.cstoqma_to_ma(v, a.s)
    w = NonNegState.basis(a.s)
    p_v = accept_prob(v, w)
    p_ma = accept_prob(t.verifier, w)
    cfg.emit(accept=p_v, accept_ma=p_ma, residual=abs(p_v - (0.5 + 0.5 * p_ma)))
    if a.output:
        Path(a.output).write_text(serialize_verifier(t.verifier))
        cfg.emit(written=a.output)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("kv", "text"), default="kv",
                     help="key=value records (default) or readable text")
    fmt.add_argument("--cap", type=int, default=1 << 22,
                     help="support / enumeration cap (default 2^22)")

    p = argparse.ArgumentParser(prog="stoqlab", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[fmt],
                       help="exact acceptance probability of a witness")
    s.add_argument("--verifier", required=True)
    s.add_argument("--witness", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("maxaccept", parents=[fmt],
                       help="optimal acceptance: top eigenpair of the verifier matrix "
                            "(Hadamard basis) or best classical witness (computational)")
    s.add_argument("--verifier", required=True)
    s.set_defaults(func=cmd_maxaccept)

    s = sub.add_parser("rcd", help="reversible circuit distinguishability")
    rsub = s.add_subparsers(dest="rcd_cmd", required=True)
    r = rsub.add_parser("build", parents=[fmt],
                        help="instance C0 = V^-1 X_out V, C1 = I from a verifier")
    r.add_argument("--verifier", required=True)
    r.add_argument("--a", type=float, help="completeness; sets alpha = 2(1-a)")
    r.add_argument("--b", type=float, help="soundness; sets beta = 2(1-b)")
    r.add_argument("-o", "--output")
    for name, hlp in (("distance", "1/2 ||R0 - R1||^2 for one witness"),
                      ("witness-search", "exact search for a colliding pair of inputs"),
                      ("decide", "YES / NO from the extremal distance"),
                      ("norandom", "decision for instances without |+> ancillas")):
        r = rsub.add_parser(name, parents=[fmt], help=hlp)
        r.add_argument("--instance", required=True)
        r.add_argument("--alpha", type=float, default=0.0)
        r.add_argument("--beta", type=float, default=1.0)
        if name == "distance":
            r.add_argument("--witness", required=True)
    s.set_defaults(func=cmd_rcd)

    s = sub.add_parser("amplify", parents=[fmt],
                       help="AND-type repetition: compare lambda_max of r copies with lambda^r")
    s.add_argument("--verifier", required=True)
    s.add_argument("--r", type=int, default=2)
    s.set_defaults(func=cmd_amplify)

    s = sub.add_parser("test", parents=[fmt],
                       help="dual-access tester driven by sampling and querying a verifier")
    s.add_argument("--verifier", required=True)
    s.add_argument("--witness", required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--c-m", dest="c_m", type=float, default=8.0,
                   help="sample-size constant: m = m' = ceil(c / eps^2)")
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("setcsp", help="set-constraint instances")
    csub = s.add_subparsers(dest="setcsp_cmd", required=True)
    c = csub.add_parser("frustration", parents=[fmt], help="frustration of a subset")
    c.add_argument("--instance", required=True)
    c.add_argument("--subset", required=True, help="comma-separated n-bit strings")
    c = csub.add_parser("compile", parents=[fmt], help="compile to a single verifier")
    c.add_argument("--instance", required=True)
    c.add_argument("--subset", help="also report acceptance on this subset state")
    c.add_argument("-o", "--output")
    c = csub.add_parser("minimize", parents=[fmt], help="minimum frustration over subsets")
    c.add_argument("--instance", required=True)
    c.add_argument("--heuristic", action="store_true")
    c.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_setcsp)

    s = sub.add_parser("cstoqma-ma", parents=[fmt],
                       help="computational-basis verifier V, X_out, V^-1 for a classical witness")
    s.add_argument("--verifier", required=True)
    s.add_argument("--s", required=True, help="classical witness bitstring")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_cstoqma_ma)
    return p


def validate_thresholds(a) -> None:
    """Reject inconsistent thresholds before any work is done."""
    ta, tb = getattr(a, "a", None), getattr(a, "b", None)
    if a.command == "test" and not 0.5 <= tb < ta <= 1.0:
        raise ValueError(f"need 1/2 <= b < a <= 1, got a={ta}, b={tb}")
    if ta is not None and tb is not None and not tb < ta:
        raise ValueError(f"need b < a, got a={ta}, b={tb}")
    al, be = getattr(a, "alpha", None), getattr(a, "beta", None)
    if al is not None and not 0.0 <= al < be <= 2.0:
        raise ValueError(f"need 0 <= alpha < beta <= 2, got alpha={al}, beta={be}")
    if getattr(a, "trials", 1) < 1 or getattr(a, "jobs", 1) < 1:
        raise ValueError("--trials and --jobs must be positive")


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    cfg = RunConfig(a.command, fmt=getattr(a, "format", "kv"), seed=getattr(a, "seed", None),
                    jobs=getattr(a, "jobs", 1))
    if not hasattr(a, "cap"):
        a.cap = 1 << 22
    try:
        validate_thresholds(a)
        code = a.func(a, cfg)
    except (CapExceeded, ConvergenceError) as e:
        sys.stderr.write(f"stoqlab: resource limit: {e}\n")
        return EXIT_CAP
    except (ParseError, ValueError, OSError) as e:
        sys.stderr.write(f"stoqlab: input error: {e}\n")
        return EXIT_INPUT
    except StoqlabError as e:
        sys.stderr.write(f"stoqlab: {e}\n")
        return EXIT_INPUT
    sys.stdout.write(cfg.render())
    return code


if __name__ == "__main__":
    sys.exit(main())
