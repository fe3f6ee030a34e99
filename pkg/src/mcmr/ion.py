"""Level scheme, drives, dissipation, and detection for a single ion.

The model keeps the eight levels that matter for metastable-shelving
measurement and reset: the S ground qubit and its F=1 Zeeman partners,
the three D (F=2) sublevels reachable by the optical quadrupole beam,
and one aggregate sink for the D (F=1) manifold fed by repumping leaks.
Excited electronic states are adiabatically eliminated; everything
dissipative appears as effective jumps between these levels.

Ions never couple to each other here. A register is a list of per-ion
states sharing one scheme; global beams drive every ion, individual
beams drive their target at full strength and neighbors at the
crosstalk fraction.

Units: level offsets in the scheme are plain Hz (cycles); Hamiltonians,
Rabi frequencies, and detunings are angular (rad/s); rates are 1/s.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from mcmr.quantum import (
    LindbladSystem,
    Operator,
    QuantumState,
    propagate_lindblad,
)

__all__ = [
    "MANIFOLD_S",
    "MANIFOLD_D",
    "MANIFOLD_SINK",
    "KIND_RAMAN",
    "KIND_QUAD",
    "SHAPE_RECTANGULAR",
    "SHAPE_BLACKMAN",
    "TARGET_GLOBAL",
    "Level",
    "Transition",
    "LevelScheme",
    "Pulse",
    "NoiseModel",
    "IonRegister",
    "FrameHamiltonian",
    "build_drive_hamiltonian",
    "build_frame_hamiltonian",
    "build_repump_dissipator",
    "noise_collapse_ops",
    "apply_noise_window",
    "detect",
    "blackman_envelope",
    "blackman_slice_means",
]

MANIFOLD_S = "S_ground"
MANIFOLD_D = "D_metastable"
MANIFOLD_SINK = "D_repump_sink"

KIND_RAMAN = "raman_qubit"
KIND_QUAD = "optical_quadrupole"

SHAPE_RECTANGULAR = "rectangular"
SHAPE_BLACKMAN = "blackman"

TARGET_GLOBAL = "global"

# Default cutoff for keeping a beam's off-resonant couplings: anything
# detuned by more than this is dropped from the static frame (the 5 MHz
# Zeeman partners fall far outside; residual transfer ~(Omega/Delta)^2).
DEFAULT_COUPLING_CUTOFF = 2.0 * np.pi * 1.0e6


@dataclass(frozen=True)
class Level:
    id: str
    manifold: str
    f: int
    m_f: int
    zeeman_shift_hz: float = 0.0

    def __post_init__(self) -> None:
        if self.manifold not in (MANIFOLD_S, MANIFOLD_D, MANIFOLD_SINK):
            raise ValueError(f"unknown manifold {self.manifold!r}")


@dataclass(frozen=True)
class Transition:
    id: str
    lower: str
    upper: str
    kind: str
    allowed: bool = True

    def __post_init__(self) -> None:
        if self.kind not in (KIND_RAMAN, KIND_QUAD):
            raise ValueError(f"unknown transition kind {self.kind!r}")


_REQUIRED_LEVELS = ("0", "1", "2", "3", "D0", "Dm1", "Dp1", "sink")


@dataclass(frozen=True)
class LevelScheme:
    """Ordered levels plus the declared driveable transitions."""

    levels: tuple[Level, ...]
    transitions: tuple[Transition, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        ids = [lv.id for lv in self.levels]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate level ids")
        missing = [lid for lid in _REQUIRED_LEVELS if lid not in ids]
        if missing:
            raise ValueError(f"scheme is missing required levels {missing}")
        tids = [t.id for t in self.transitions]
        if len(set(tids)) != len(tids):
            raise ValueError("duplicate transition ids")
        for t in self.transitions:
            if t.lower not in ids or t.upper not in ids:
                raise ValueError(f"transition {t.id} references unknown level")

    @property
    def dim(self) -> int:
        return len(self.levels)

    def index(self, level_id: str) -> int:
        for i, lv in enumerate(self.levels):
            if lv.id == level_id:
                return i
        raise KeyError(f"no level {level_id!r}")

    def level(self, level_id: str) -> Level:
        return self.levels[self.index(level_id)]

    def transition(self, transition_id: str) -> Transition:
        for t in self.transitions:
            if t.id == transition_id:
                return t
        raise KeyError(f"no transition {transition_id!r}")

    def labels(self) -> tuple[str, ...]:
        return tuple(lv.id for lv in self.levels)

    def zeeman_rad(self) -> np.ndarray:
        return 2.0 * np.pi * np.array(
            [lv.zeeman_shift_hz for lv in self.levels])

    def manifold_indices(self, manifold: str) -> tuple[int, ...]:
        return tuple(i for i, lv in enumerate(self.levels)
                     if lv.manifold == manifold)

    def bright_indices(self) -> tuple[int, ...]:
        """Levels that scatter detection light: the S (F=1) manifold."""
        return tuple(i for i, lv in enumerate(self.levels)
                     if lv.manifold == MANIFOLD_S and lv.f == 1)

    def dark_metastable_indices(self) -> tuple[int, ...]:
        return tuple(i for i, lv in enumerate(self.levels)
                     if lv.manifold in (MANIFOLD_D, MANIFOLD_SINK))

    def basis_state(self, level_id: str) -> QuantumState:
        return QuantumState.basis(self.dim, self.index(level_id),
                                  labels=self.labels())

    @classmethod
    def default(cls, zeeman_split_hz: float = 5.0e6) -> "LevelScheme":
        """Standard eight-level scheme.

        Level offsets are chosen so adjacent-m quadrupole lines split by
        ``zeeman_split_hz``: the S (F=1) partners sit at -+ half of it
        and the D (F=2) partners at -+ 1.5x, giving each m = -+1 line a
        full split from the m = 0 line.
        """
        half = zeeman_split_hz / 2.0
        levels = (
            Level("0", MANIFOLD_S, f=0, m_f=0),
            Level("1", MANIFOLD_S, f=1, m_f=0),
            Level("2", MANIFOLD_S, f=1, m_f=-1, zeeman_shift_hz=-half),
            Level("3", MANIFOLD_S, f=1, m_f=+1, zeeman_shift_hz=+half),
            Level("D0", MANIFOLD_D, f=2, m_f=0),
            Level("Dm1", MANIFOLD_D, f=2, m_f=-1,
                  zeeman_shift_hz=-3.0 * half),
            Level("Dp1", MANIFOLD_D, f=2, m_f=+1,
                  zeeman_shift_hz=+3.0 * half),
            Level("sink", MANIFOLD_SINK, f=1, m_f=0),
        )
        transitions = (
            Transition("raman_0_1", "0", "1", KIND_RAMAN),
            Transition("quad_0_D0", "0", "D0", KIND_QUAD),
            Transition("quad_1_D0", "1", "D0", KIND_QUAD),
            Transition("quad_2_Dm1", "2", "Dm1", KIND_QUAD),
            Transition("quad_3_Dp1", "3", "Dp1", KIND_QUAD),
        )
        return cls(levels, transitions)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "levels": [
                {"id": lv.id, "manifold": lv.manifold, "f": lv.f,
                 "m_f": lv.m_f, "zeeman_shift_hz": lv.zeeman_shift_hz}
                for lv in self.levels
            ],
            "transitions": [
                {"id": t.id, "lower": t.lower, "upper": t.upper,
                 "kind": t.kind, "allowed": t.allowed}
                for t in self.transitions
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LevelScheme":
        levels = tuple(Level(**entry) for entry in payload["levels"])
        transitions = tuple(
            Transition(**entry) for entry in payload["transitions"])
        return cls(levels, transitions)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LevelScheme":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Pulse:
    """One coherent drive tone.

    ``detuning`` is measured from the actual (Zeeman-shifted) line of the
    driven transition, positive above it. ``target`` is "global" or an
    integer ion index for individually addressed beams.
    """

    drive: str
    rabi: float
    duration: float
    detuning: float = 0.0
    phase: float = 0.0
    shape: str = SHAPE_RECTANGULAR
    target: str | int = TARGET_GLOBAL

    def __post_init__(self) -> None:
        if self.rabi < 0:
            raise ValueError("rabi must be nonnegative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.shape not in (SHAPE_RECTANGULAR, SHAPE_BLACKMAN):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.target != TARGET_GLOBAL and not isinstance(self.target, int):
            raise ValueError("target must be 'global' or an ion index")


@dataclass(frozen=True)
class NoiseModel:
    """Decoherence, misclassification, and addressing imperfections.

    ``d_lifetime`` is the effective metastable lifetime while repumping
    tones run (they shorten it); ``d_lifetime_detection`` applies during
    detection windows, where the F=2 repump sideband is gated off and
    the natural lifetime is recovered. The S-D dephasing rate is fixed
    by (t2_optical, d_lifetime) so the modeled coherence time matches
    the measured one under normal conditions.
    """

    t2_optical: float = 10.0e-3
    d_lifetime: float = 15.0e-3
    d_lifetime_detection: float = 53.0e-3
    spam_dark_error: float = 0.002
    spam_bright_error: float = 0.005
    crosstalk_fraction: float = 0.02
    detection_time: float = 140.0e-6
    repump_rate: float = 2.0 * np.pi * 100.0e3
    detection_leak_rate: float = 0.0

    def __post_init__(self) -> None:
        for name in ("t2_optical", "d_lifetime", "d_lifetime_detection",
                     "detection_time"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("spam_dark_error", "spam_bright_error",
                     "crosstalk_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if self.repump_rate < 0 or self.detection_leak_rate < 0:
            raise ValueError("rates must be nonnegative")
        if self.t2_optical > 2.0 * self.d_lifetime:
            raise ValueError(
                "t2_optical above 2x d_lifetime implies a negative "
                "dephasing rate")

    @property
    def dephasing_rate(self) -> float:
        """Jump rate of the D-manifold projector channel.

        Chosen so S-D coherences decay at exactly 1/t2_optical once the
        metastable decay contributes its 1/(2 d_lifetime) share.
        """
        return 2.0 / self.t2_optical - 1.0 / self.d_lifetime

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "t2_optical_s": self.t2_optical,
            "d_lifetime_s": self.d_lifetime,
            "d_lifetime_detection_s": self.d_lifetime_detection,
            "spam_dark_error": self.spam_dark_error,
            "spam_bright_error": self.spam_bright_error,
            "crosstalk_fraction": self.crosstalk_fraction,
            "detection_time_s": self.detection_time,
            "repump_rate_per_s": self.repump_rate,
            "detection_leak_rate_per_s": self.detection_leak_rate,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NoiseModel":
        mapping = {
            "t2_optical_s": "t2_optical",
            "d_lifetime_s": "d_lifetime",
            "d_lifetime_detection_s": "d_lifetime_detection",
            "spam_dark_error": "spam_dark_error",
            "spam_bright_error": "spam_bright_error",
            "crosstalk_fraction": "crosstalk_fraction",
            "detection_time_s": "detection_time",
            "repump_rate_per_s": "repump_rate",
            "detection_leak_rate_per_s": "detection_leak_rate",
        }
        kwargs = {attr: payload[key] for key, attr in mapping.items()
                  if key in payload}
        return cls(**kwargs)


ROLE_DATA = "data"
ROLE_AUXILIARY = "auxiliary"


@dataclass(frozen=True)
class IonRegister:
    """Per-ion states sharing one scheme; no inter-ion coupling exists."""

    scheme: LevelScheme
    roles: tuple[str, ...]
    states: tuple[QuantumState, ...]

    def __post_init__(self) -> None:
        if len(self.roles) != len(self.states):
            raise ValueError("one role per state required")
        for role in self.roles:
            if role not in (ROLE_DATA, ROLE_AUXILIARY):
                raise ValueError(f"unknown role {role!r}")
        for state in self.states:
            if state.dim != self.scheme.dim:
                raise ValueError("state dimension does not match scheme")

    @property
    def n_ions(self) -> int:
        return len(self.states)

    def with_state(self, ion: int, state: QuantumState) -> "IonRegister":
        states = list(self.states)
        states[ion] = state
        return replace(self, states=tuple(states))


def blackman_envelope(x: np.ndarray | float) -> np.ndarray | float:
    """Blackman window on [0, 1]; its mean is exactly 0.42."""
    return (0.42 - 0.5 * np.cos(2.0 * np.pi * np.asarray(x))
            + 0.08 * np.cos(4.0 * np.pi * np.asarray(x)))


def blackman_slice_means(n_slices: int) -> np.ndarray:
    """Exact average of the Blackman window over n uniform slices."""
    edges = np.linspace(0.0, 1.0, n_slices + 1)

    def antiderivative(x: np.ndarray) -> np.ndarray:
        return (0.42 * x - 0.5 * np.sin(2 * np.pi * x) / (2 * np.pi)
                + 0.08 * np.sin(4 * np.pi * x) / (4 * np.pi))

    prim = antiderivative(edges)
    return (prim[1:] - prim[:-1]) * n_slices


@dataclass(frozen=True)
class FrameHamiltonian:
    """Static rotating-frame Hamiltonian plus shaped coupling terms.

    ``offsets`` holds each level's frame rotation relative to the
    co-rotating (bare interaction) frame; converting a state between the
    two frames at absolute time t multiplies amplitudes by
    exp(+-i offsets t). Shaped tones contribute envelope(t/duration) *
    coupling on top of the static part.
    """

    scheme: LevelScheme
    offsets: np.ndarray
    static: np.ndarray
    shaped: tuple[tuple[str, float, np.ndarray], ...]

    @property
    def is_static(self) -> bool:
        return not self.shaped

    def static_operator(self) -> Operator:
        return Operator.hermitian_op(self.static)

    def sampled(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for shape, duration, coupling in self.shaped:
            if shape == SHAPE_BLACKMAN:
                h = h + float(blackman_envelope(t / duration)) * coupling
            else:
                h = h + coupling
        return h

    def enter(self, state: QuantumState, t0: float) -> QuantumState:
        return _apply_diag_phase(state, +self.offsets * t0)

    def leave(self, state: QuantumState, t1: float) -> QuantumState:
        return _apply_diag_phase(state, -self.offsets * t1)


def _apply_diag_phase(state: QuantumState, angles: np.ndarray,
                      ) -> QuantumState:
    phases = np.exp(1j * angles)
    if state.kind == "pure":
        return QuantumState(phases * state.data, "pure", state.labels)
    rho = phases[:, None] * state.data * phases.conj()[None, :]
    return QuantumState(rho, "mixed", state.labels)


def _beam_couplings(scheme: LevelScheme, pulse: Pulse,
                    cutoff: float | None) -> list[tuple[int, int, float]]:
    """Transitions one physical beam drives, with its offset per pair.

    Returns (lower index, upper index, tone frequency offset) for the
    targeted transition plus every allowed transition of the same kind
    between the same hyperfine manifolds (anything else sits a hyperfine
    gap away from the tone) whose Zeeman detuning from the tone falls
    within the cutoff.
    """
    target = scheme.transition(pulse.drive)
    zee = scheme.zeeman_rad()
    lo0, up0 = scheme.index(target.lower), scheme.index(target.upper)
    t_lo, t_up = scheme.levels[lo0], scheme.levels[up0]
    tone = zee[up0] - zee[lo0] + pulse.detuning
    pairs = [(lo0, up0, tone)]
    for tr in scheme.transitions:
        if tr.id == target.id or tr.kind != target.kind or not tr.allowed:
            continue
        lo, up = scheme.index(tr.lower), scheme.index(tr.upper)
        lo_lv, up_lv = scheme.levels[lo], scheme.levels[up]
        if (lo_lv.manifold, lo_lv.f) != (t_lo.manifold, t_lo.f):
            continue
        if (up_lv.manifold, up_lv.f) != (t_up.manifold, t_up.f):
            continue
        if cutoff is not None and abs(tone - (zee[up] - zee[lo])) > cutoff:
            continue
        pairs.append((lo, up, tone))
    return pairs


def build_frame_hamiltonian(
    scheme: LevelScheme,
    tones: Sequence[tuple[Pulse, float]],
    coupling_cutoff: float | None = DEFAULT_COUPLING_CUTOFF,
) -> FrameHamiltonian:
    """Rotating frame in which every kept coupling is time-independent.

    Each kept (tone, transition) pair pins the frame-rotation difference
    of the two levels it couples; the constraint graph is solved per
    connected component, anchoring the component that contains |1> at
    |1>'s own rotation (so the qubit drive lands detuning on |0>, the
    usual two-level layout) and other components at their first upper
    level. Levels untouched by any tone co-rotate at their bare energy
    and carry zero diagonal. Conflicting constraints (two tones pinning
    the same pair differently) raise: such drive sets have no static
    frame and none of the in-scope protocols produce one.
    """
    dim = scheme.dim
    zee = scheme.zeeman_rad()
    edges: list[tuple[int, int, float, Pulse, float]] = []
    for pulse, scale in tones:
        for lo, up, tone in _beam_couplings(scheme, pulse, coupling_cutoff):
            edges.append((lo, up, tone, pulse, scale))

    # Solve k[up] - k[lo] = tone offset over the constraint graph.
    adjacency: dict[int, list[tuple[int, float]]] = {}
    for lo, up, tone, _, _ in edges:
        adjacency.setdefault(lo, []).append((up, +tone))
        adjacency.setdefault(up, []).append((lo, -tone))

    k = np.array(zee, dtype=float)  # default: co-rotate at bare energy
    assigned = np.zeros(dim, dtype=bool)
    qubit_upper = scheme.index("1")

    def flood(root: int, value: float) -> None:
        stack = [(root, value)]
        while stack:
            node, val = stack.pop()
            if assigned[node]:
                if abs(k[node] - val) > 1e-6:
                    raise ValueError(
                        "conflicting frame constraints: no static rotating "
                        "frame exists for these tones")
                continue
            assigned[node] = True
            k[node] = val
            for nbr, delta in adjacency.get(node, ()):
                stack.append((nbr, val + delta))

    # Flooding covers whole connected components, so every edge either
    # lies in an already-anchored component or anchors a fresh one.
    if qubit_upper in adjacency:
        flood(qubit_upper, zee[qubit_upper])
    for lo, up, tone, _, _ in edges:
        if not assigned[up]:
            flood(up, zee[up])

    static = np.diag(zee - k).astype(complex)
    shaped: dict[tuple[str, float], np.ndarray] = {}
    for lo, up, tone, pulse, scale in edges:
        amp = pulse.rabi * scale / 2.0
        coupling = np.zeros((dim, dim), dtype=complex)
        coupling[up, lo] = amp * np.exp(1j * pulse.phase)
        coupling[lo, up] = amp * np.exp(-1j * pulse.phase)
        if pulse.shape == SHAPE_BLACKMAN:
            key = (pulse.shape, pulse.duration)
            shaped[key] = shaped.get(
                key, np.zeros((dim, dim), dtype=complex)) + coupling
        else:
            static = static + coupling

    shaped_terms = tuple(
        (shape, duration, mat)
        for (shape, duration), mat in sorted(
            shaped.items(), key=lambda item: item[0][1]))
    return FrameHamiltonian(scheme=scheme, offsets=k - zee, static=static,
                            shaped=shaped_terms)


def build_drive_hamiltonian(scheme: LevelScheme, pulse: Pulse,
                            rabi_scale: float = 1.0) -> Operator:
    """Static Hamiltonian of a single beam in its own rotating frame.

    The driven transition carries the detuning on its lower level and
    the coupling (rabi*scale/2) e^{i phase}|upper><lower| + h.c.; other
    levels the beam reaches appear at their Zeeman detunings relative to
    the tone. Shaped pulses return their peak-amplitude Hamiltonian.
    """
    frame = build_frame_hamiltonian(scheme, [(pulse, rabi_scale)],
                                    coupling_cutoff=None)
    return Operator.hermitian_op(frame.sampled(pulse.duration / 2.0)
                                 if frame.shaped else frame.static)


def build_repump_dissipator(
    scheme: LevelScheme,
    repump_rate: float,
    include_sink_channel: bool = True,
    branching: dict[str, dict[str, float]] | None = None,
) -> tuple[tuple[Operator, float], ...]:
    """Jump operators for optical pumping out of the metastable manifold.

    Each D (F=2) sublevel decays at the full repump rate, split
    uniformly over the S (F=1) sublevels with m differing by at most
    one (the two-photon path scrambles m by one unit at most); the
    aggregate F=1 sink empties uniformly into S (F=1) when its fixed
    tone is included. ``branching`` overrides the per-source weights,
    keyed by source level id then destination id.
    """
    if repump_rate < 0:
        raise ValueError("repump rate must be nonnegative")
    if repump_rate == 0:
        return ()
    s_f1 = [scheme.levels[i] for i in scheme.bright_indices()]
    ops: list[tuple[Operator, float]] = []
    sources = [scheme.levels[i] for i in scheme.manifold_indices(MANIFOLD_D)]
    if include_sink_channel:
        sources += [scheme.levels[i]
                    for i in scheme.manifold_indices(MANIFOLD_SINK)]
    for src in sources:
        if branching and src.id in branching:
            weights = dict(branching[src.id])
        elif src.manifold == MANIFOLD_SINK:
            weights = {lv.id: 1.0 for lv in s_f1}
        else:
            weights = {lv.id: 1.0 for lv in s_f1
                       if abs(lv.m_f - src.m_f) <= 1}
        total = sum(weights.values())
        if total <= 0:
            raise ValueError(f"no repump destinations for {src.id}")
        for dest_id, weight in sorted(weights.items()):
            if weight == 0:
                continue
            jump = np.zeros((scheme.dim, scheme.dim), dtype=complex)
            jump[scheme.index(dest_id), scheme.index(src.id)] = 1.0
            ops.append((Operator(jump), repump_rate * weight / total))
    return tuple(ops)


def noise_collapse_ops(scheme: LevelScheme, noise: NoiseModel,
                       during_detection: bool = False,
                       ) -> tuple[tuple[Operator, float], ...]:
    """Always-on decoherence channels.

    S-D dephasing (a projector jump on the metastable side) plus decay
    of each D (F=2) sublevel, branching uniformly to the four S levels.
    During detection the F=2 repump sideband is off, so decay runs at
    the natural (longer) lifetime while the dephasing rate stays fixed.
    Optionally, bright levels leak into the sink at a configured rate
    while detection light scatters.
    """
    dim = scheme.dim
    ops: list[tuple[Operator, float]] = []
    dark = scheme.dark_metastable_indices()
    projector = np.zeros((dim, dim), dtype=complex)
    for i in dark:
        projector[i, i] = 1.0
    if noise.dephasing_rate > 0:
        ops.append((Operator(projector), noise.dephasing_rate))
    lifetime = (noise.d_lifetime_detection if during_detection
                else noise.d_lifetime)
    decay_rate = 1.0 / lifetime
    s_levels = scheme.manifold_indices(MANIFOLD_S)
    for src in scheme.manifold_indices(MANIFOLD_D):
        for dest in s_levels:
            jump = np.zeros((dim, dim), dtype=complex)
            jump[dest, src] = 1.0
            ops.append((Operator(jump), decay_rate / len(s_levels)))
    if during_detection and noise.detection_leak_rate > 0:
        sink = scheme.manifold_indices(MANIFOLD_SINK)[0]
        for src in scheme.bright_indices():
            jump = np.zeros((dim, dim), dtype=complex)
            jump[sink, src] = 1.0
            ops.append((Operator(jump), noise.detection_leak_rate))
    return tuple(ops)


def apply_noise_window(state: QuantumState, noise: NoiseModel,
                       duration: float,
                       during_detection: bool = False,
                       scheme: LevelScheme | None = None) -> QuantumState:
    """Free decoherence for the given time, no coherent drive."""
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    if duration == 0:
        return state
    scheme = scheme or LevelScheme.default()
    if state.dim != scheme.dim:
        raise ValueError("state dimension does not match scheme")
    system = LindbladSystem(
        Operator.hermitian_op(np.zeros((scheme.dim, scheme.dim))),
        noise_collapse_ops(scheme, noise, during_detection))
    return propagate_lindblad(state, system, duration)


def detect(state: QuantumState, noise: NoiseModel,
           scheme: LevelScheme | None = None,
           ) -> tuple[float, tuple[QuantumState, QuantumState]]:
    """Instantaneous bright/dark classification of one ion.

    Returns the probability of classifying bright and the conditional
    post-measurement states for (classified bright, classified dark).
    Scattering destroys coherences inside and out of the bright
    manifold; the dark block stays coherent. Misclassification mixes
    the true-manifold conditional states into both outcomes.
    """
    scheme = scheme or LevelScheme.default()
    if state.dim != scheme.dim:
        raise ValueError("state dimension does not match scheme")
    rho = state.density()
    bright = list(scheme.bright_indices())
    p_b = float(sum(np.real(rho[i, i]) for i in bright))
    p_b = min(1.0, max(0.0, p_b))
    p_d = 1.0 - p_b

    dim = scheme.dim
    rho_b = np.zeros((dim, dim), dtype=complex)
    for i in bright:
        rho_b[i, i] = np.real(rho[i, i])
    dark = [i for i in range(dim) if i not in bright]
    rho_d = np.zeros((dim, dim), dtype=complex)
    for i in dark:
        for j in dark:
            rho_d[i, j] = rho[i, j]

    eps_b = noise.spam_bright_error
    eps_d = noise.spam_dark_error
    p_bright = p_b * (1.0 - eps_b) + p_d * eps_d

    def conditional(w_b: float, w_d: float) -> QuantumState:
        # The blocks are unnormalized (traces p_b, p_d), so the weights
        # are just the per-manifold classification probabilities.
        rho_c = w_b * rho_b + w_d * rho_d
        tr = np.trace(rho_c).real
        if tr <= 1e-300:
            # Zero-probability branch; return the fully decohered
            # unconditional state so callers never see a bogus value.
            rho_c, tr = rho_b + rho_d, 1.0
        rho_c = 0.5 * (rho_c + rho_c.conj().T)
        return QuantumState(rho_c / tr, "mixed", state.labels)

    given_bright = conditional(1.0 - eps_b, eps_d)
    given_dark = conditional(eps_b, 1.0 - eps_d)
    return p_bright, (given_bright, given_dark)
