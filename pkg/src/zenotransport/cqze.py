"""Zeno evolution engines: single Mach-Zehnder chain, chained CQZE, Michelson CQZE.

Each outer cycle is: outer rotation by pi/2M, then ``N`` inner steps (inner
rotation by pi/2N followed by Bob's interaction with the channel mode),
then the channel mode is discarded to D3.  Bob's object absorbs the channel
amplitude of the ``block`` branch after every inner rotation.
"""
from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field

import numpy as np

from .amplitudes import (
    Bob,
    ConfigError,
    ContractViolation,
    CycleConfig,
    JointState,
    Outcome,
    Path,
    PhotonMode,
    Pol,
    QubitAmplitudes,
    project_to_sink,
    rotate_pair,
)


@dataclass(frozen=True)
class ZenoArm:
    """The three live modes one CQZE module cycles through."""

    outer: PhotonMode
    inner: PhotonMode
    channel: PhotonMode


# chained-CQZE labels: |100>, |010>, |001>
MZ_ARM = ZenoArm(
    PhotonMode(Path.LEFT_OF_BSM),
    PhotonMode(Path.RIGHT_OF_BSM_LEFT_OF_BSN),
    PhotonMode(Path.CHANNEL),
)
# Michelson modules: H-input on the upper path, V-input on the lower path.
H_MODULE = ZenoArm(PhotonMode(Path.UPPER, Pol.H), PhotonMode(Path.UPPER, Pol.V), PhotonMode(Path.CHANNEL, Pol.H))
V_MODULE = ZenoArm(PhotonMode(Path.LOWER, Pol.V), PhotonMode(Path.LOWER, Pol.H), PhotonMode(Path.CHANNEL, Pol.V))

# single chain: |10> stays with Alice, |01> is the channel arm.
SINGLE_CHAIN_MODES = (PhotonMode(Path.LEFT_OF_BSM), PhotonMode(Path.CHANNEL))


@dataclass
class ChainHistory:
    """Per-operation trace of a run.

    One row per elementary operation: ``inner_step == 0`` marks an outer
    rotation, ``1..N`` the inner steps.  ``channel_occupancy`` is the
    channel population conditioned on the photon not yet being lost, taken
    right after the rotation and before Bob's interaction.  ``states`` holds
    snapshots after every outer rotation (every beamsplitter for
    ``mz_chain``), or after every row when ``full_states`` is requested.
    """

    full_states: bool = False
    states: list = field(default_factory=list)
    round_index: array = field(default_factory=lambda: array("l"))
    outer_cycle: array = field(default_factory=lambda: array("l"))
    inner_step: array = field(default_factory=lambda: array("l"))
    _occupancy: array = field(default_factory=lambda: array("d"))
    _cum_d3: array = field(default_factory=lambda: array("d"))
    _cum_bob: array = field(default_factory=lambda: array("d"))

    def record(self, rnd, cycle, step, occupancy, cum_d3, cum_bob):
        self.round_index.append(rnd)
        self.outer_cycle.append(cycle)
        self.inner_step.append(step)
        self._occupancy.append(occupancy)
        self._cum_d3.append(cum_d3)
        self._cum_bob.append(cum_bob)

    def __len__(self) -> int:
        return len(self._occupancy)

    @property
    def channel_occupancy(self) -> np.ndarray:
        return np.frombuffer(self._occupancy, dtype=float) if len(self) else np.zeros(0)

    @property
    def cum_d3(self) -> np.ndarray:
        return np.frombuffer(self._cum_d3, dtype=float) if len(self) else np.zeros(0)

    @property
    def cum_bob_absorbed(self) -> np.ndarray:
        return np.frombuffer(self._cum_bob, dtype=float) if len(self) else np.zeros(0)

    def rows(self):
        return zip(self.round_index, self.outer_cycle, self.inner_step,
                   self._occupancy, self._cum_d3, self._cum_bob)

    def peak_occupancy(self) -> float:
        return float(self.channel_occupancy.max()) if len(self) else 0.0


def _channel_population(state: JointState, arms) -> float:
    return sum(state.population(a.channel) for a in arms)


def _record_row(history, state, arms, rnd, cycle, step):
    if history is None:
        return
    live = state.live_norm()
    occ = _channel_population(state, arms) / live if live > 0 else 0.0
    history.record(rnd, cycle, step, occ,
                   state.terminal[Outcome.D3], state.terminal[Outcome.BOB_ABSORBED])
    if history.full_states:
        history.states.append(state.copy())


def _inner_steps_reference(state, arms, n, theta, history, rnd, cycle):
    # Step-by-step composition of the primitive operations; used when full
    # per-step snapshots are requested.
    for step in range(1, n + 1):
        for arm in arms:
            rotate_pair(state, arm.inner, arm.channel, theta)
        live = state.live_norm()
        occ = _channel_population(state, arms) / live if live > 0 else 0.0
        for arm in arms:
            project_to_sink(state, arm.channel, Outcome.BOB_ABSORBED, bob=Bob.BLOCK)
        if step == n:
            for arm in arms:
                project_to_sink(state, arm.channel, Outcome.D3)
        if history is not None:
            history.record(rnd, cycle, step, occ,
                           state.terminal[Outcome.D3], state.terminal[Outcome.BOB_ABSORBED])
            if history.full_states:
                history.states.append(state.copy())


def _inner_steps_fast(state, arms, n, theta, history, rnd, cycle):
    # Same arithmetic as the reference path with the 2x2 blocks held in locals.
    c, s = math.cos(theta), math.sin(theta)
    keys, xs, ys, blocking = [], [], [], []
    for arm in arms:
        for b in Bob:
            x = state.amps.get((b, arm.inner), 0j)
            y = state.amps.get((b, arm.channel), 0j)
            if x == 0 and y == 0:
                continue
            keys.append(((b, arm.inner), (b, arm.channel)))
            xs.append(x)
            ys.append(y)
            blocking.append(b is Bob.BLOCK)
    idx = range(len(xs))
    live = state.live_norm()
    absorbed = state.terminal[Outcome.BOB_ABSORBED]
    d3 = state.terminal[Outcome.D3]
    rec = history.record if history is not None else None
    for step in range(1, n + 1):
        chan = 0.0
        lost = 0.0
        for k in idx:
            x = xs[k]
            y = ys[k]
            x, y = c * x - s * y, s * x + c * y
            py = y.real * y.real + y.imag * y.imag
            chan += py
            if blocking[k]:
                lost += py
                y = 0j
            xs[k] = x
            ys[k] = y
        occ = chan / live if live > 0 else 0.0
        live -= lost
        absorbed += lost
        if step == n:
            for k in idx:
                y = ys[k]
                d3 += y.real * y.real + y.imag * y.imag
                ys[k] = 0j
        if rec is not None:
            rec(rnd, cycle, step, occ, d3, absorbed)
    for (kx, ky), x, y in zip(keys, xs, ys):
        state.amps[kx] = x
        state.amps.pop(ky, None)
    state.terminal[Outcome.BOB_ABSORBED] = absorbed
    state.terminal[Outcome.D3] = d3


def _check_channels_empty(state, arms):
    for arm in arms:
        if arm.channel in state.modes() and state.population(arm.channel) > 0:
            raise ContractViolation(f"channel mode {arm.channel} is occupied at cycle start")


def cqze_inner_cycle(state: JointState, N: int, arms=(MZ_ARM,), history: ChainHistory | None = None,
                     *, round_index: int = 1, cycle: int = 1):
    """Run one inner chain of ``N`` steps, then discard the channel to D3. In place."""
    if N < 1:
        raise ConfigError("N must be a positive integer")
    _check_channels_empty(state, arms)
    theta = math.pi / (2 * N)
    if history is not None and history.full_states:
        _inner_steps_reference(state, arms, N, theta, history, round_index, cycle)
    else:
        _inner_steps_fast(state, arms, N, theta, history, round_index, cycle)
    return state, history


def run_cycles(state: JointState, cfg: CycleConfig, arms, history: ChainHistory | None = None,
               *, round_index: int = 1) -> JointState:
    """Drive ``state`` through ``cfg.M`` outer cycles of every arm in ``arms``, in place."""
    _check_channels_empty(state, arms)
    for m in range(1, cfg.M + 1):
        for arm in arms:
            rotate_pair(state, arm.outer, arm.inner, cfg.theta_m)
        _record_row(history, state, arms, round_index, m, 0)
        if history is not None and not history.full_states:
            history.states.append(state.copy())
        cqze_inner_cycle(state, cfg.N, arms, history, round_index=round_index, cycle=m)
    return state


def mz_chain(bob: QubitAmplitudes, N: int, *, record: bool = True):
    """Single Mach-Zehnder Zeno chain of ``N`` beamsplitters.

    History snapshots are taken right after each beamsplitter, before Bob's
    object acts on the channel arm.
    """
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 1:
        raise ConfigError(f"N must be a positive integer, got {N!r}")
    ten, zero_one = SINGLE_CHAIN_MODES
    state = JointState.product(bob, {ten: 1.0})
    history = ChainHistory() if record else None
    theta = math.pi / (2 * N)
    for n in range(1, N + 1):
        rotate_pair(state, ten, zero_one, theta)
        live = state.live_norm()
        occ = state.population(zero_one) / live if live > 0 else 0.0
        if history is not None:
            history.states.append(state.copy())
        project_to_sink(state, zero_one, Outcome.BOB_ABSORBED, bob=Bob.BLOCK)
        if history is not None:
            history.record(1, 1, n, occ, state.terminal[Outcome.D3],
                           state.terminal[Outcome.BOB_ABSORBED])
    return state, history


def cqze_outer_run(bob: QubitAmplitudes, M: int, N: int, *, record: bool = True,
                   full_states: bool = False):
    """Chained CQZE with the photon starting in ``|100>``."""
    cfg = CycleConfig(M, N)
    state = JointState.product(bob, {MZ_ARM.outer: 1.0})
    history = ChainHistory(full_states=full_states) if record else None
    run_cycles(state, cfg, (MZ_ARM,), history)
    return state, history


def module_arm(input_pol: Pol) -> ZenoArm:
    if input_pol is Pol.H:
        return H_MODULE
    if input_pol is Pol.V:
        return V_MODULE
    raise ContractViolation("Michelson module input must be H or V")


def michelson_run(input_pol: Pol, bob: QubitAmplitudes, cfg: CycleConfig, *, record: bool = True,
                  full_states: bool = False):
    """Polarization-encoded CQZE module fed with a definite ``input_pol`` photon.

    The H-input module lives on the upper path (outer arm H, inner arm V,
    channel photon H); the V-input module mirrors it on the lower path.
    """
    arm = module_arm(Pol(input_pol))
    state = JointState.product(bob, {arm.outer: 1.0})
    history = ChainHistory(full_states=full_states) if record else None
    run_cycles(state, cfg, (arm,), history)
    return state, history
