"""Joint amplitude bookkeeping for Bob's object and Alice's single photon.

The state is a sparse map ``(bob basis, photon mode) -> complex`` plus a
ledger of probability that has left the live state through absorbing
outcomes (detectors, absorption by Bob's object).  Amplitudes along
post-selected branches are kept unnormalized; ``renormalize`` is the only
place the live norm is reset to one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

EXACT_TOL = 1e-12
LONG_RUN_TOL = 1e-9


class ContractViolation(ValueError):
    """An operation was called outside its precondition."""


class ConfigError(ValueError):
    """Invalid cycle counts or unnormalized input amplitudes."""


class Bob(enum.IntEnum):
    PASS = 0
    BLOCK = 1


class Path(enum.Enum):
    ALICE = "alice"
    LEFT_OF_BSM = "100"
    RIGHT_OF_BSM_LEFT_OF_BSN = "010"
    CHANNEL = "001"
    UPPER = "upper"
    LOWER = "lower"
    SINK_D0 = "sink_d0"
    SINK_D3 = "sink_d3"
    SINK_BOB_ABSORBED = "sink_bob_absorbed"


class Pol(enum.Enum):
    H = "H"
    V = "V"
    NONE = "none"


class Outcome(enum.Enum):
    """Terminal outcomes. ``MAIN`` is the complement of ``D0`` when the D0 branch is kept."""

    D0 = "D0"
    D3 = "D3"
    BOB_ABSORBED = "BobAbsorbed"
    MAIN = "Main"


_SINK_PATHS = {Path.SINK_D0, Path.SINK_D3, Path.SINK_BOB_ABSORBED}


@dataclass(frozen=True)
class PhotonMode:
    path: Path
    pol: Pol = Pol.H

    def __post_init__(self):
        if self.pol is Pol.NONE and self.path not in _SINK_PATHS:
            raise ContractViolation(f"live mode {self.path.value} needs a polarization")

    @property
    def is_sink(self) -> bool:
        return self.path in _SINK_PATHS

    def __str__(self) -> str:
        return f"{self.path.value}:{self.pol.value}"


SINK_MODES = {
    Outcome.D0: PhotonMode(Path.SINK_D0, Pol.NONE),
    Outcome.D3: PhotonMode(Path.SINK_D3, Pol.NONE),
    Outcome.BOB_ABSORBED: PhotonMode(Path.SINK_BOB_ABSORBED, Pol.NONE),
}


@dataclass(frozen=True)
class QubitAmplitudes:
    """Normalized pair ``a0|0> + a1|1>``.

    Used for Bob's object (``|0> = pass``, ``|1> = block``) and for Alice's
    polarization (``|0> = H``, ``|1> = V``).
    """

    a0: complex
    a1: complex

    def __post_init__(self):
        a0, a1 = complex(self.a0), complex(self.a1)
        if not all(math.isfinite(x) for x in (a0.real, a0.imag, a1.real, a1.imag)):
            raise ConfigError("amplitudes must be finite")
        norm = abs(a0) ** 2 + abs(a1) ** 2
        if abs(norm - 1.0) > EXACT_TOL:
            raise ConfigError(f"qubit amplitudes are not normalized (|a0|^2+|a1|^2 = {norm!r})")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)

    @classmethod
    def normalized(cls, a0: complex, a1: complex) -> "QubitAmplitudes":
        n = math.sqrt(abs(a0) ** 2 + abs(a1) ** 2)
        if n == 0.0:
            raise ConfigError("cannot normalize the zero vector")
        return cls(a0 / n, a1 / n)

    @classmethod
    def from_vector(cls, v) -> "QubitAmplitudes":
        return cls.normalized(complex(v[0]), complex(v[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=complex)

    def __iter__(self):
        yield self.a0
        yield self.a1


@dataclass(frozen=True)
class CycleConfig:
    """Outer/inner cycle counts; rotation angles follow as pi/2M and pi/2N."""

    M: int
    N: int

    def __post_init__(self):
        for name in ("M", "N"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")

    @property
    def theta_m(self) -> float:
        return math.pi / (2 * self.M)

    @property
    def theta_n(self) -> float:
        return math.pi / (2 * self.N)


Key = tuple  # (Bob, PhotonMode)


@dataclass
class JointState:
    amps: dict = field(default_factory=dict)
    terminal: dict = field(default_factory=lambda: {o: 0.0 for o in Outcome})
    renormalized: bool = False

    @classmethod
    def product(cls, bob: QubitAmplitudes, photon: dict) -> "JointState":
        """Build ``bob (x) photon`` where ``photon`` maps live modes to amplitudes."""
        state = cls()
        for b, ab in zip(Bob, bob):
            for mode, am in photon.items():
                if mode.is_sink:
                    raise ContractViolation("initial photon amplitude on a sink mode")
                if ab * am != 0:
                    state.amps[(b, mode)] = complex(ab * am)
        return state

    def amp(self, bob: Bob, mode: PhotonMode) -> complex:
        return self.amps.get((bob, mode), 0j)

    def copy(self) -> "JointState":
        return JointState(dict(self.amps), dict(self.terminal), self.renormalized)

    def live_norm(self) -> float:
        return sum(z.real * z.real + z.imag * z.imag for z in self.amps.values())

    def modes(self) -> set:
        return {m for (_, m) in self.amps}

    def population(self, mode: PhotonMode, bob: Bob | None = None) -> float:
        bobs = Bob if bob is None else (bob,)
        return sum(abs(self.amp(b, mode)) ** 2 for b in bobs)

    def relabel(self, mapping: dict) -> "JointState":
        """Move amplitudes between live modes (a permutation, hence unitary)."""
        out = {}
        for (b, m), z in self.amps.items():
            key = (b, mapping.get(m, m))
            if key in out:
                raise ContractViolation(f"relabel collides on {key[1]}")
            out[key] = z
        self.amps = out
        return self

    def two_qubit_vector(self, path: Path = Path.ALICE) -> np.ndarray:
        """Amplitudes ``[pass H, pass V, block H, block V]`` on one path."""
        return np.array(
            [self.amp(b, PhotonMode(path, p)) for b in Bob for p in (Pol.H, Pol.V)],
            dtype=complex,
        )


def _bobs(bob: Bob | None) -> Iterable[Bob]:
    return Bob if bob is None else (bob,)


def rotate_pair(state: JointState, mode_a: PhotonMode, mode_b: PhotonMode, theta: float,
                bob: Bob | None = None) -> JointState:
    """Beamsplitter / polarization-rotator action on two live modes, in place.

    ``|a> -> cos|a> + sin|b>`` and ``|b> -> cos|b> - sin|a>``.
    """
    if mode_a == mode_b:
        raise ContractViolation("rotate_pair needs two distinct modes")
    if mode_a.is_sink or mode_b.is_sink:
        raise ContractViolation("cannot rotate amplitude out of a sink mode")
    c, s = math.cos(theta), math.sin(theta)
    for b in _bobs(bob):
        x = state.amps.get((b, mode_a), 0j)
        y = state.amps.get((b, mode_b), 0j)
        if x == 0 and y == 0:
            continue
        state.amps[(b, mode_a)] = c * x - s * y
        state.amps[(b, mode_b)] = s * x + c * y
    return state


def project_to_sink(state: JointState, mode: PhotonMode, sink: Outcome,
                    bob: Bob | None = None) -> JointState:
    """Send the amplitude on ``mode`` to an absorbing outcome, in place.

    The removed probability is added to ``state.terminal[sink]``; the live
    state is not renormalized.
    """
    if not isinstance(sink, Outcome):
        raise ContractViolation(f"unknown sink {sink!r}")
    for b in _bobs(bob):
        z = state.amps.pop((b, mode), None)
        if z is not None:
            state.terminal[sink] += z.real * z.real + z.imag * z.imag
    return state


def total_norm(state: JointState) -> float:
    return state.live_norm() + sum(state.terminal.values())


def renormalize(state: JointState) -> JointState:
    """Return a copy with unit live norm and an empty terminal ledger."""
    n = state.live_norm()
    if n == 0.0:
        raise ContractViolation("cannot renormalize a state with no live amplitude")
    k = 1.0 / math.sqrt(n)
    return JointState({key: z * k for key, z in state.amps.items()},
                      {o: 0.0 for o in Outcome}, renormalized=True)


class Gate(enum.Enum):
    I = "I"
    H = "H"
    X = "X"
    Z = "Z"


_R2 = 1 / math.sqrt(2)
GATES = {
    Gate.I: np.array([[1, 0], [0, 1]], dtype=complex),
    Gate.H: np.array([[_R2, _R2], [_R2, -_R2]], dtype=complex),
    Gate.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Gate.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


def _apply_2x2(state: JointState, key0, key1, u: np.ndarray):
    x = state.amps.get(key0, 0j)
    y = state.amps.get(key1, 0j)
    if x == 0 and y == 0:
        return
    state.amps[key0] = complex(u[0, 0] * x + u[0, 1] * y)
    state.amps[key1] = complex(u[1, 0] * x + u[1, 1] * y)


def apply_single_qubit_gate(obj: Union[JointState, QubitAmplitudes], gate: Gate,
                            target: str = "bob") -> Union[JointState, QubitAmplitudes]:
    """Apply H, X, Z or I.

    On a ``QubitAmplitudes`` the gate acts on the pair and a new value is
    returned (``target`` is ignored).  On a ``JointState`` it acts in place on
    ``target``: ``"bob"`` (pass/block), ``"polarization"`` (H/V of every live
    non-channel path) or ``"path"`` (upper/lower, per polarization).
    """
    u = GATES[Gate(gate)]
    if isinstance(obj, QubitAmplitudes):
        v = u @ obj.vector
        return QubitAmplitudes(v[0], v[1])
    state = obj
    if target == "bob":
        for m in state.modes():
            _apply_2x2(state, (Bob.PASS, m), (Bob.BLOCK, m), u)
    elif target == "polarization":
        paths = {m.path for m in state.modes()} - {Path.CHANNEL}
        for b in Bob:
            for p in paths:
                _apply_2x2(state, (b, PhotonMode(p, Pol.H)), (b, PhotonMode(p, Pol.V)), u)
    elif target == "path":
        for b in Bob:
            for pol in (Pol.H, Pol.V):
                _apply_2x2(state, (b, PhotonMode(Path.UPPER, pol)), (b, PhotonMode(Path.LOWER, pol)), u)
    else:
        raise ContractViolation(f"unknown gate target {target!r}")
    return state
