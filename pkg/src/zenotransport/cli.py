"""Command-line front end: cnot, transport, sweep, trace, verify.

Exit codes: 0 success, 1 usage/validation error, 2 I/O error,
3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, fields, replace

import numpy as np

from . import analysis
from .amplitudes import ConfigError, ContractViolation, CycleConfig, LONG_RUN_TOL, Outcome, QubitAmplitudes, total_norm
from .dualcnot import Branch, Splitter, dual_cqze_cnot, ideal_cnot_output, infidelity
from .protocol import BranchPolicy, circuit_swap_oracle, circuit_swap_z_oracle, run_transport

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3
TRACE_COLUMNS = ("round", "outer_cycle", "inner_step", "channel_prob", "cum_d3", "cum_bob_absorbed")
_R2 = 1 / math.sqrt(2)
_EMPTY_BRANCH = 1e-20  # cos(pi/2) rounding residue squared sits far below this


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    """``"re,im"`` or a single real number."""
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise UsageError(f"cannot parse complex amplitude {text!r} (expected re,im)")


def format_complex(z: complex) -> str:
    return f"{z.real!r},{z.imag!r}"


def parse_grid(text: str) -> tuple:
    """``start:stop:step`` (inclusive) or a comma list of positive integers."""
    try:
        if ":" in text:
            start, stop, step = (int(x) for x in text.split(":"))
            values = tuple(range(start, stop + 1, step))
        else:
            values = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None
    if not values or min(values) < 1:
        raise UsageError(f"grid {text!r} must hold positive integers")
    return values


@dataclass(frozen=True)
class RunConfig:
    command: str
    m: int = 50
    n: int = 1250
    alpha: complex | None = None
    beta: complex | None = None
    lam: complex | None = None
    mu: complex | None = None
    m_grid: tuple = (5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75)
    n_grid: tuple = tuple(range(100, 1501, 100))
    quantity: str = "efficiency"
    output: str | None = None
    sim_cost_cap: int = analysis.SIM_COST_CAP
    branch: str = BranchPolicy.FOLLOW.value
    splitter: str = Splitter.BS50.value
    jobs: int = 1
    fast: bool = False

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, complex):
                v = format_complex(v)
            elif isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, command: str | None = None) -> "RunConfig":
        """Parse ``key=value`` lines; ``command`` overrides any command line in the text."""
        kv = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line without '=': {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.replace("-", "_")
            kv["lam" if k == "lambda" else k] = v
        if command is not None:
            kv["command"] = command
        if "command" not in kv:
            raise UsageError("config text names no command")
        return cls(**{k: _coerce(k, v) for k, v in kv.items()})

    def qubit(self, first: str, second: str) -> QubitAmplitudes:
        """Resolve an amplitude pair; a lone value fixes its partner as sqrt(1-|x|^2)."""
        a, b = getattr(self, first), getattr(self, second)
        if a is None and b is None:
            a = b = complex(_R2)
        elif a is None:
            a = complex(math.sqrt(max(0.0, 1 - abs(b) ** 2)))
        elif b is None:
            b = complex(math.sqrt(max(0.0, 1 - abs(a) ** 2)))
        norm = abs(a) ** 2 + abs(b) ** 2
        if abs(norm - 1) > LONG_RUN_TOL:
            raise ConfigError(f"--{first}/--{second} not normalized: |{first}|^2+|{second}|^2 = {norm!r}")
        return QubitAmplitudes.normalized(a, b)


_FIELD_NAMES = {f.name for f in fields(RunConfig)}
_CHOICES = {
    "quantity": ("efficiency", "fidelity"),
    "branch": tuple(b.value for b in BranchPolicy),
    "splitter": tuple(s.value for s in Splitter),
    "command": ("cnot", "transport", "sweep", "trace", "verify"),
}


def _coerce(key: str, value: str):
    if key not in _FIELD_NAMES:
        raise UsageError(f"unknown config key {key!r}")
    if key in ("alpha", "beta", "lam", "mu"):
        return parse_complex(value)
    if key in ("m_grid", "n_grid"):
        return parse_grid(value)
    if key in ("m", "n", "sim_cost_cap", "jobs"):
        try:
            return int(value)
        except ValueError:
            raise UsageError(f"{key} must be an integer") from None
    if key == "fast":
        return value.lower() in ("1", "true", "yes")
    choices = _CHOICES.get(key)
    if choices is not None and value not in choices:
        raise UsageError(f"{key} must be one of {', '.join(choices)}")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zenotransport", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, amps=("alpha", "beta")):
        sp.add_argument("--config", help="key=value file; flags given on the command line win")
        sp.add_argument("--m", type=int, help="outer cycles M")
        sp.add_argument("--n", type=int, help="inner cycles N")
        for a in amps:
            sp.add_argument(f"--{a}", type=parse_complex, help="amplitude as re,im")

    c = sub.add_parser("cnot", help="run the dual-CQZE counterfactual CNOT")
    common(c, ("alpha", "beta", "lambda", "mu"))
    c.add_argument("--splitter", choices=[s.value for s in Splitter])

    t = sub.add_parser("transport", help="run the qubit transport protocol")
    common(t)
    t.add_argument("--branch", choices=[b.value for b in BranchPolicy])

    s = sub.add_parser("sweep", help="closed-form vs simulated values over an (M, N) grid, as CSV")
    common(s)
    s.add_argument("--m-grid", type=parse_grid, help="start:stop:step or comma list")
    s.add_argument("--n-grid", type=parse_grid, help="start:stop:step or comma list")
    s.add_argument("--quantity", choices=["efficiency", "fidelity"])
    s.add_argument("--sim-cost-cap", type=int, help="simulate only cells with M*N <= cap")
    s.add_argument("--jobs", type=int)
    s.add_argument("--output", "-o")

    tr = sub.add_parser("trace", help="per-step channel occupancy of a transport run, as CSV")
    common(tr)
    tr.add_argument("--branch", choices=[b.value for b in BranchPolicy])
    tr.add_argument("--output", "-o")

    v = sub.add_parser("verify", help="run the invariant and checkpoint suite")
    v.add_argument("--config")
    v.add_argument("--fast", action="store_true", default=None, help="skip checks above the cost cap")
    return p


def config_from_args(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    base = RunConfig(command=args.command)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read config: {exc}") from None
        base = RunConfig.from_text(text, command=args.command)
    updates = {}
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        updates["lam" if key == "lambda" else key] = value
    return replace(base, **updates)


# -- commands ------------------------------------------------------------------

def _fmt_vec(vec) -> str:
    labels = ("pass,H", "pass,V", "block,H", "block,V")
    return "  ".join(f"{l}: {z.real:+.12f}{z.imag:+.12f}j" for l, z in zip(labels, vec))


def cmd_cnot(cfg: RunConfig, out) -> int:
    cc = CycleConfig(cfg.m, cfg.n)
    bob = cfg.qubit("alpha", "beta")
    photon = cfg.qubit("lam", "mu")
    outcomes = dual_cqze_cnot(photon, bob, cc, Splitter(cfg.splitter), record=False)
    any_o = next(iter(outcomes.values()))
    s = any_o.unnormalized.terminal
    survival = sum(o.probability for o in outcomes.values())
    print(f"M={cc.M} N={cc.N} splitter={cfg.splitter}", file=out)
    print(f"survival: {survival!r}", file=out)
    print(f"loss: {any_o.loss_probability!r} (D3 {s[Outcome.D3]!r}, "
          f"Bob absorbed {s[Outcome.BOB_ABSORBED]!r})", file=out)
    ideal = ideal_cnot_output(photon, bob)
    for branch, o in outcomes.items():
        print(f"branch {branch.value}: probability {o.probability!r}", file=out)
        if o.probability <= _EMPTY_BRANCH:
            print("  no surviving amplitude", file=out)
        else:
            target = ideal if branch is Branch.MAIN else ideal * np.array([1, -1, -1, 1])
            print(f"  output: {_fmt_vec(o.output_vector())}", file=out)
            print(f"  infidelity vs ideal CNOT: {infidelity(o.output_vector(), target)!r}", file=out)
    return EXIT_OK


def cmd_transport(cfg: RunConfig, out) -> int:
    bob = cfg.qubit("alpha", "beta")
    r = run_transport(bob, CycleConfig(cfg.m, cfg.n), BranchPolicy(cfg.branch), record=False)
    print(f"M={cfg.m} N={cfg.n} branch={r.branch.value}", file=out)
    print(f"branch probabilities: main {r.branch_probabilities[Branch.MAIN]!r}, "
          f"d0 {r.branch_probabilities[Branch.D0]!r}", file=out)
    print(f"success probability: {r.success_probability!r}", file=out)
    print(f"fidelity: {r.fidelity!r}", file=out)
    print(f"overlap fidelity (unnormalized convention): {r.overlap_fidelity!r}", file=out)
    a = r.alice_output
    print(f"alice output: H {format_complex(a.a0)}  V {format_complex(a.a1)}", file=out)
    pops = r.bob_residual_populations
    print(f"bob residual populations: |0> {float(pops[0])!r}  |1> {float(pops[1])!r}", file=out)
    return EXIT_OK


def _open_output(path):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def cmd_sweep(cfg: RunConfig, out) -> int:
    bob = cfg.qubit("alpha", "beta")
    grid = analysis.sweep(cfg.m_grid, cfg.n_grid, bob.a0, bob.a1, cfg.quantity,
                          cfg.sim_cost_cap, cfg.jobs)
    fh, close = _open_output(cfg.output) if cfg.output else (out, False)
    try:
        grid.to_csv(fh)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def trace_rows(cfg: RunConfig):
    bob = cfg.qubit("alpha", "beta")
    r = run_transport(bob, CycleConfig(cfg.m, cfg.n), BranchPolicy(cfg.branch), record=True)
    for h in r.histories:
        yield from h.rows()


def cmd_trace(cfg: RunConfig, out) -> int:
    fh, close = _open_output(cfg.output) if cfg.output else (out, False)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for rnd, m, k, occ, d3, bob in trace_rows(cfg):
            w.writerow([rnd, m, k, repr(occ), repr(d3), repr(bob)])
    finally:
        if close:
            fh.close()
    return EXIT_OK


# -- verify ----------------------------------------------------------------------

def _check_norm():
    from .cqze import cqze_outer_run
    worst = 0.0
    for m, n in ((1, 1), (3, 7), (10, 40), (20, 50)):
        for a, b in ((1, 0), (0, 1), (0.6, 0.8j), (_R2, _R2)):
            s, _ = cqze_outer_run(QubitAmplitudes(a, b), m, n, record=False)
            worst = max(worst, abs(total_norm(s) - 1))
    return worst < LONG_RUN_TOL, f"max |norm-1| = {worst:.2e}"


def _check_recursion():
    from .amplitudes import Bob, Pol
    from .cqze import H_MODULE, michelson_run
    worst = 0.0
    block = QubitAmplitudes(0, 1)
    for m in range(1, 11):
        for n in range(1, 41):
            _, h = michelson_run(Pol.H, block, CycleConfig(m, n))
            snap = h.states[-1]
            r = analysis.recursion_eps_eta(m, n)
            worst = max(worst, abs(snap.amp(Bob.BLOCK, H_MODULE.outer) - r.eps),
                        abs(snap.amp(Bob.BLOCK, H_MODULE.inner) - r.eta))
    return worst < 1e-12, f"max deviation over M<=10, N<=40 = {worst:.2e}"


def _check_circuits():
    inv = _R2
    plus, minus = np.array([inv, inv]), np.array([inv, -inv])
    zero, one = np.array([1, 0]), np.array([0, 1])
    worst = 0.0
    for a, b in ((1, 0), (0, 1), (_R2, _R2), (0.6, 0.8j), (0.28, -0.96)):
        q = QubitAmplitudes(a, b)
        k = np.kron
        expect_main = [k(q.vector, zero), a * k(zero, zero) + b * k(one, one),
                       a * k(plus, plus) + b * k(minus, minus), a * k(plus, plus) + b * k(plus, minus),
                       k(zero, q.vector)]
        expect_z = [k(q.vector, zero), a * k(zero, zero) + b * k(one, one),
                    a * k(plus, plus) + b * k(minus, minus), a * k(plus, minus) + b * k(minus, plus),
                    a * k(minus, minus) + b * k(minus, plus), a * k(one, one) + b * k(one, zero),
                    k(one, q.vector)]
        for got, exp in zip(circuit_swap_oracle(q) + circuit_swap_z_oracle(q), expect_main + expect_z):
            worst = max(worst, float(np.abs(got - exp).max()))
    return worst <= 1e-15, f"max line deviation = {worst:.2e}"


def _check_efficiency():
    e = analysis.efficiency_closed_form(50, 1250, _R2, _R2)
    return abs(e - 0.95) <= 0.005, f"closed-form efficiency(50,1250) = {e:.6f}"


def _check_fidelity_closed():
    f = analysis.fidelity_closed_form(25, 320, _R2, _R2, Branch.MAIN)
    return f > 0.86, f"closed-form fidelity(25,320) = {f:.6f} (threshold 0.86)"


def _check_fidelity_postselected():
    r = run_transport(QubitAmplitudes(_R2, _R2), CycleConfig(25, 320), BranchPolicy.MAIN, record=False)
    return r.fidelity > 0.86, f"post-selected fidelity(25,320) = {r.fidelity:.6f}"


def _check_fidelity_cross():
    worst = 0.0
    for m, n in ((5, 20), (10, 80), (15, 300)):
        r = run_transport(QubitAmplitudes(_R2, _R2), CycleConfig(m, n), BranchPolicy.MAIN, record=False)
        worst = max(worst, abs(r.overlap_fidelity - analysis.fidelity_closed_form(m, n, _R2, _R2)))
    return worst <= 1e-6, f"max |simulated - closed form| = {worst:.2e}"


def _check_trace():
    cfg = RunConfig("trace", m=50, n=1250)
    peak = max(row[3] for row in trace_rows(cfg))
    return peak < 1e-3, f"peak channel occupancy (50,1250) = {peak:.3e}"


def _check_asymptotic_cnot():
    cc = CycleConfig(100, 5000)
    worst = 0.0
    for lam, mu, a, b in ((1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1), (0.6, 0.8j, _R2, -_R2)):
        ph, bob = QubitAmplitudes(lam, mu), QubitAmplitudes(a, b)
        o = dual_cqze_cnot(ph, bob, cc, record=False)[Branch.MAIN]
        worst = max(worst, infidelity(o.output_vector(), ideal_cnot_output(ph, bob)))
    return worst < 1e-3, f"max CNOT infidelity at (100,5000) = {worst:.2e}"


# (name, function, heavy)
CHECKS = [
    ("norm_conservation", _check_norm, False),
    ("recursion_oracle_equivalence", _check_recursion, False),
    ("circuit_oracles", _check_circuits, False),
    ("efficiency_checkpoint", _check_efficiency, False),
    ("fidelity_checkpoint_closed_form", _check_fidelity_closed, False),
    ("fidelity_checkpoint_postselected", _check_fidelity_postselected, False),
    ("fidelity_cross_validation", _check_fidelity_cross, False),
    ("counterfactuality_trace", _check_trace, True),
    ("asymptotic_cnot", _check_asymptotic_cnot, True),
]


def cmd_verify(cfg: RunConfig, out) -> int:
    failed = 0
    for name, fn, heavy in CHECKS:
        if heavy and cfg.fast:
            print(f"SKIP {name} (--fast)", file=out)
            continue
        t0 = time.perf_counter()
        ok, detail = fn()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail} [{time.perf_counter() - t0:.2f}s]", file=out)
    print(f"{failed} check(s) failed" if failed else "all checks passed", file=out)
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"cnot": cmd_cnot, "transport": cmd_transport, "sweep": cmd_sweep,
            "trace": cmd_trace, "verify": cmd_verify}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg, out)
    except (UsageError, ConfigError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
