"""Dual CQZE counterfactual CNOT: two Michelson modules run coherently.

Alice's photon is split by polarization (H -> upper path / H-input module,
V -> lower path / V-input module).  Both modules share Bob's channel, so a
single Bob basis label covers both.  On the way out the paths either stay
apart (``Splitter.PBS``, valid only when one path is occupied) or are
recombined on a 50:50 beamsplitter followed by the nondemolition path
measurement at D0 (``Splitter.BS50``).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .amplitudes import (
    Bob,
    ContractViolation,
    CycleConfig,
    JointState,
    Outcome,
    Path,
    PhotonMode,
    Pol,
    QubitAmplitudes,
    project_to_sink,
    renormalize,
    rotate_pair,
)
from .cqze import H_MODULE, V_MODULE, ChainHistory, run_cycles


class Splitter(enum.Enum):
    PBS = "pbs"
    BS50 = "bs50"


class Branch(enum.Enum):
    MAIN = "main"
    D0 = "d0"


ALICE_H = PhotonMode(Path.ALICE, Pol.H)
ALICE_V = PhotonMode(Path.ALICE, Pol.V)

_PBS_IN = {ALICE_H: PhotonMode(Path.UPPER, Pol.H), ALICE_V: PhotonMode(Path.LOWER, Pol.V)}
_PATH_MODES = {
    Path.UPPER: (PhotonMode(Path.UPPER, Pol.H), PhotonMode(Path.UPPER, Pol.V)),
    Path.LOWER: (PhotonMode(Path.LOWER, Pol.H), PhotonMode(Path.LOWER, Pol.V)),
}
# D0 sits on the upper path after the recombining beamsplitter.
_BRANCH_PATH = {Branch.MAIN: Path.LOWER, Branch.D0: Path.UPPER}
_DISCARD_LABEL = {Branch.MAIN: Outcome.D0, Branch.D0: Outcome.MAIN}


@dataclass
class CnotOutcome:
    branch: Branch
    probability: float
    state: JointState
    unnormalized: JointState
    loss_probability: float
    history: ChainHistory | None = None

    def output_vector(self) -> np.ndarray:
        """Renormalized ``[pass H, pass V, block H, block V]`` amplitudes."""
        return self.state.two_qubit_vector()


def split_input(state: JointState, splitter: Splitter) -> JointState:
    """Act with the input/exit optic on Alice's photon, in place.

    ``PBS`` sends H on Alice's port to the upper path and V to the lower path.
    ``BS50`` rotates the path qubit by pi/4 per polarization, so
    ``|upper> -> (|upper> + |lower>)/sqrt2`` and
    ``|lower> -> (|lower> - |upper>)/sqrt2``.
    """
    splitter = Splitter(splitter)
    if splitter is Splitter.PBS:
        stray = [m for m in state.modes() if m.path not in (Path.ALICE, Path.UPPER, Path.LOWER)]
        if stray:
            raise ContractViolation(f"photon not at the splitter: {stray}")
        return state.relabel(_PBS_IN)
    for pol in (Pol.H, Pol.V):
        rotate_pair(state, PhotonMode(Path.UPPER, pol), PhotonMode(Path.LOWER, pol), math.pi / 4)
    return state


def _path_population(state: JointState, path: Path) -> float:
    return sum(state.population(m) for m in _PATH_MODES[path])


def _to_alice(state: JointState, path: Path) -> JointState:
    return state.relabel({m: PhotonMode(Path.ALICE, m.pol) for m in _PATH_MODES[path]})


def _loss(state: JointState) -> float:
    return state.terminal[Outcome.D3] + state.terminal[Outcome.BOB_ABSORBED]


def measure_d0(state: JointState, history: ChainHistory | None = None) -> dict:
    """Ideal nondemolition path measurement after the recombining BS.

    Returns one ``CnotOutcome`` per branch.  In each, the other path's
    amplitude is moved to the terminal ledger and the kept photon is
    relabelled onto Alice's port; polarization is untouched.
    """
    loss = _loss(state)
    out = {}
    for branch, path in _BRANCH_PATH.items():
        s = state.copy()
        other = Path.UPPER if path is Path.LOWER else Path.LOWER
        for m in _PATH_MODES[other]:
            project_to_sink(s, m, _DISCARD_LABEL[branch])
        _to_alice(s, path)
        p = s.live_norm()
        out[branch] = CnotOutcome(branch, p, renormalize(s) if p > 0 else s.copy(), s, loss, history)
    return out


def dual_cqze_cnot_state(state: JointState, cfg: CycleConfig, splitter: Splitter = Splitter.BS50,
                         history: ChainHistory | None = None, *, round_index: int = 1) -> dict:
    """Run the dual CQZE on a (possibly entangled) Bob/photon state on Alice's port.

    ``state`` is not modified.  Returns ``{Branch: CnotOutcome}``; with
    ``Splitter.PBS`` only the main branch exists.
    """
    s = split_input(state.copy(), Splitter.PBS)
    run_cycles(s, cfg, (H_MODULE, V_MODULE), history, round_index=round_index)
    if Splitter(splitter) is Splitter.BS50:
        split_input(s, Splitter.BS50)
        return measure_d0(s, history)
    occupied = [p for p in (Path.UPPER, Path.LOWER) if _path_population(s, p) > 0]
    if len(occupied) > 1:
        raise ContractViolation("PBS exit needs a single occupied path; use BS50 to recombine")
    if occupied:
        _to_alice(s, occupied[0])
    p = s.live_norm()
    return {Branch.MAIN: CnotOutcome(Branch.MAIN, p, renormalize(s) if p > 0 else s.copy(),
                                     s, _loss(s), history)}


def dual_cqze_cnot(photon: QubitAmplitudes, bob: QubitAmplitudes, cfg: CycleConfig,
                   splitter: Splitter = Splitter.BS50, *, record: bool = True) -> dict:
    """Counterfactual CNOT on product input ``bob (x) photon``; Bob is the control."""
    state = JointState.product(bob, {ALICE_H: photon.a0, ALICE_V: photon.a1})
    history = ChainHistory() if record else None
    return dual_cqze_cnot_state(state, cfg, splitter, history)


def ideal_cnot_output(photon: QubitAmplitudes, bob: QubitAmplitudes) -> np.ndarray:
    """``[pass H, pass V, block H, block V]`` of the ideal CNOT (block flips H<->V)."""
    a, b = bob
    lam, mu = photon
    return np.array([a * lam, a * mu, b * mu, b * lam], dtype=complex)


def infidelity(psi: np.ndarray, target: np.ndarray) -> float:
    """``1 - |<target|psi>|^2`` for normalized vectors."""
    return max(0.0, float(1.0 - abs(np.vdot(target, psi)) ** 2))


def trace_distance_pure(psi: np.ndarray, phi: np.ndarray) -> float:
    return float(math.sqrt(max(0.0, 1.0 - abs(np.vdot(psi, phi)) ** 2)))
