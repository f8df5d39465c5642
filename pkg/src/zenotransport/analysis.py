"""Closed-form efficiency, eps/eta recursion, transport fidelity and grid sweeps.

Also an effective-gate description of one CQZE module: its action on Alice's
photon reduces to four numbers (pass/correct, pass/wrong, block/wrong,
block/correct), which lets the transport protocol be re-evaluated with plain
4x4 matrices.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .amplitudes import Bob, CycleConfig, QubitAmplitudes
from .cqze import cqze_outer_run, michelson_run, module_arm
from .dualcnot import Branch
from .amplitudes import Pol

SIM_COST_CAP = 10**7
CSV_COLUMNS = ("M", "N", "alpha_sq", "beta_sq", "quantity", "closed_form", "simulated", "skipped")


def _sq(z) -> float:
    return abs(complex(z)) ** 2


def efficiency_closed_form(M: int, N: int, alpha, beta) -> float:
    """Ideal CNOT efficiency: D3 avoidance times Bob-absorption avoidance."""
    cfg = CycleConfig(M, N)
    a2, b2 = _sq(alpha), _sq(beta)
    d3 = (1.0 - a2 * math.sin(cfg.theta_m) ** 2) ** M
    sn2 = math.sin(cfg.theta_n) ** 2
    bob = 1.0
    for m in range(1, M + 1):
        bob *= (1.0 - b2 * math.sin(m * cfg.theta_m) ** 2 * sn2) ** N
    return d3 * bob


@dataclass(frozen=True)
class RecursionState:
    eps: float
    eta: float
    m: int


def recursion_trajectory(M: int, N: int) -> list:
    """Wrong-exit (eps) and correct-exit (eta) amplitudes for m = 0..M, Bob blocking."""
    CycleConfig(M, N)
    c, s = math.cos(math.pi / (2 * M)), math.sin(math.pi / (2 * M))
    k = math.cos(math.pi / (2 * N)) ** N
    eps, eta = 1.0, 0.0
    out = [RecursionState(eps, eta, 0)]
    for m in range(1, M + 1):
        eps, eta = c * eps - s * k * eta, s * eps + c * k * eta
        out.append(RecursionState(eps, eta, m))
    return out


def recursion_eps_eta(M: int, N: int) -> RecursionState:
    return recursion_trajectory(M, N)[-1]


def fidelity_closed_form(M: int, N: int, alpha, beta, branch: Branch = Branch.MAIN) -> float:
    """Closed-form transport fidelity; the main branch takes the upper signs."""
    cfg = CycleConfig(M, N)
    r = recursion_eps_eta(M, N)
    p = math.cos(cfg.theta_m) ** M
    sign = 1.0 if Branch(branch) is Branch.MAIN else -1.0
    a2, b2 = _sq(alpha), _sq(beta)
    amp = a2 / 2 * p * (p + r.eta + sign * r.eps) + b2 / 2 * r.eta * (p + r.eta - sign * r.eps)
    return amp * amp


# -- effective gate model ----------------------------------------------------

@dataclass(frozen=True)
class ModuleResponse:
    """Exit amplitudes of one module: pass branch (correct, wrong), block branch (wrong, correct)."""

    pass_correct: float
    pass_wrong: float
    block_wrong: float
    block_correct: float


def simulated_module_response(cfg: CycleConfig) -> ModuleResponse:
    """Read the four exit amplitudes off step simulations of the H-input module."""
    arm = module_arm(Pol.H)
    sp, _ = michelson_run(Pol.H, QubitAmplitudes(1, 0), cfg, record=False)
    sb, _ = michelson_run(Pol.H, QubitAmplitudes(0, 1), cfg, record=False)
    return ModuleResponse(
        sp.amp(Bob.PASS, arm.outer).real, sp.amp(Bob.PASS, arm.inner).real,
        sb.amp(Bob.BLOCK, arm.outer).real, sb.amp(Bob.BLOCK, arm.inner).real,
    )


def recursion_module_response(cfg: CycleConfig) -> ModuleResponse:
    """Same four numbers from closed forms.

    The recursion gives the block amplitudes right after the last outer
    rotation; the final inner chain then scales the inner arm by
    cos^N(pi/2N) and empties the pass branch's inner arm into D3.
    """
    r = recursion_eps_eta(cfg.M, cfg.N)
    k = math.cos(cfg.theta_n) ** cfg.N
    return ModuleResponse(math.cos(cfg.theta_m) ** cfg.M, 0.0, r.eps, k * r.eta)


def effective_cnot_matrix(resp: ModuleResponse) -> np.ndarray:
    """4x4 map on ``[pass H, pass V, block H, block V]`` for either module."""
    i2 = np.eye(2)
    x2 = np.array([[0, 1], [1, 0]])
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    return (np.kron(p0, resp.pass_correct * i2 + resp.pass_wrong * x2)
            + np.kron(p1, resp.block_correct * x2 + resp.block_wrong * i2)).astype(complex)


def effective_transport_vector(u1: np.ndarray, u2: np.ndarray, bob: QubitAmplitudes,
                               branch: Branch = Branch.MAIN) -> np.ndarray:
    """Unnormalized final Bob/photon vector of the protocol built from gate matrices."""
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    hh = np.kron(h, h)
    i2 = np.eye(2)
    psi = np.kron(bob.vector, np.array([1, 0], dtype=complex))
    psi = hh @ (u1 @ psi)
    if Branch(branch) is Branch.D0:
        psi = np.kron(i2, np.diag([1, -1])) @ psi
    psi = hh @ (u2 @ psi) / math.sqrt(2)
    if Branch(branch) is Branch.D0:
        psi = np.kron(i2, np.array([[0, 1], [1, 0]])) @ psi
    return psi


def overlap_fidelity(vec: np.ndarray, bob: QubitAmplitudes, branch: Branch = Branch.MAIN) -> float:
    expected_bob = np.array([1, 0] if Branch(branch) is Branch.MAIN else [0, 1], dtype=complex)
    return float(2 * abs(np.vdot(np.kron(expected_bob, bob.vector), vec)) ** 2)


# -- sweeps --------------------------------------------------------------------

@dataclass
class SweepCell:
    M: int
    N: int
    closed_form: float
    simulated: float | None
    skipped: bool


@dataclass
class SweepGrid:
    m_values: list
    n_values: list
    alpha: complex
    beta: complex
    quantity: str
    cells: dict = field(default_factory=dict)

    def closed_form_surface(self) -> np.ndarray:
        return np.array([[self.cells[(m, n)].closed_form for n in self.n_values] for m in self.m_values])

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        a2, b2 = _sq(self.alpha), _sq(self.beta)
        for m in self.m_values:
            for n in self.n_values:
                c = self.cells[(m, n)]
                w.writerow([m, n, repr(a2), repr(b2), self.quantity, repr(c.closed_form),
                            "" if c.simulated is None else repr(c.simulated), int(c.skipped)])
        return buf.getvalue() if fh is None else ""


def _simulate_cell(args):
    quantity, m, n, alpha, beta = args
    bob = QubitAmplitudes(alpha, beta)
    if quantity == "efficiency":
        state, _ = cqze_outer_run(bob, m, n, record=False)
        return state.live_norm()
    from .protocol import BranchPolicy, run_transport
    return run_transport(bob, CycleConfig(m, n), BranchPolicy.MAIN, record=False).overlap_fidelity


def sweep(m_values, n_values, alpha=1 / math.sqrt(2), beta=1 / math.sqrt(2),
          quantity: str = "efficiency", sim_cost_cap: int = SIM_COST_CAP, jobs: int = 1) -> SweepGrid:
    """Fill closed-form values on every cell and step-simulated values where ``M*N <= sim_cost_cap``."""
    m_values, n_values = [int(m) for m in m_values], [int(n) for n in n_values]
    if not m_values or not n_values:
        raise ValueError("sweep grid is empty")
    if quantity not in ("efficiency", "fidelity"):
        raise ValueError(f"unknown quantity {quantity!r}")
    QubitAmplitudes(alpha, beta)
    grid = SweepGrid(m_values, n_values, complex(alpha), complex(beta), quantity)
    closed = efficiency_closed_form if quantity == "efficiency" else fidelity_closed_form
    todo = []
    for m in m_values:
        for n in n_values:
            skip = m * n > sim_cost_cap
            grid.cells[(m, n)] = SweepCell(m, n, closed(m, n, alpha, beta), None, skip)
            if not skip:
                todo.append((quantity, m, n, complex(alpha), complex(beta)))
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            values = list(ex.map(_simulate_cell, todo))
    else:
        values = [_simulate_cell(t) for t in todo]
    for (_, m, n, _, _), v in zip(todo, values):
        grid.cells[(m, n)].simulated = v
    return grid
