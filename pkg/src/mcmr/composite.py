"""Three-pulse composite sequences for robust bare-to-dressed rotations.

A single detuned pulse maps the bare qubit basis onto the dressed basis
only at one exact Rabi frequency. The sequences here are tuned numerically
so the same mapping holds across two operating bands at once: the
crosstalk band (neighbor ions seeing 0 to 5 % of the addressed Rabi
frequency must end up in their own, nearly-bare dressed basis) and the
fluctuation band (the addressed ion itself at 90 to 105 % of nominal).

All pulse parameters are dimensionless: detunings as fractions of the
nominal Rabi frequency, durations as Rabi-angle products. The physical
coupling strength enters only through the actual-to-nominal ratio, so one
optimized sequence serves any hardware Rabi frequency.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from mcmr.quantum import Operator

__all__ = [
    "SequencePulse",
    "CompositePulse",
    "RobustnessSpec",
    "ErrorReport",
    "sequence_unitary",
    "xy_error",
    "evaluate",
    "optimize",
    "time_reversal",
    "save_sequence",
    "load_sequence",
    "bundled_sequence_path",
]

_DATA_DIR = Path(__file__).parent / "data" / "sequences"


@dataclass(frozen=True)
class SequencePulse:
    """One pulse of a composite sequence, in nominal-Rabi units.

    detuning_ratio = delta / omega_nominal, duration_product =
    tau * omega_nominal (radians of nominal Rabi angle), phase in rad.
    """

    detuning_ratio: float
    duration_product: float
    phase: float

    def __post_init__(self) -> None:
        if self.duration_product < 0:
            raise ValueError("pulse duration must be nonnegative")


@dataclass(frozen=True)
class CompositePulse:
    """Exactly three pulses plus the detuning ratio of the target dressing.

    Degenerate shorter sequences are expressed with zero-duration slots.
    """

    pulses: tuple[SequencePulse, SequencePulse, SequencePulse]
    nominal_detuning_ratio: float

    def __post_init__(self) -> None:
        pulses = tuple(self.pulses)
        if len(pulses) != 3:
            raise ValueError("a composite sequence has exactly 3 pulses")
        object.__setattr__(self, "pulses", pulses)

    @classmethod
    def from_rows(cls, rows, nominal_detuning_ratio: float,
                  ) -> "CompositePulse":
        pulses = tuple(SequencePulse(*row) for row in rows)
        return cls(pulses, nominal_detuning_ratio)


@dataclass(frozen=True)
class RobustnessSpec:
    """Sampling bands for the two error figures.

    e0 aggregates over the crosstalk band, e1 over the fluctuation band;
    aggregation is "max" (default) or "mean" over a uniform grid.
    """

    crosstalk_band: tuple[float, float] = (0.0, 0.05)
    crosstalk_samples: int = 21
    fluctuation_band: tuple[float, float] = (0.90, 1.05)
    fluctuation_samples: int = 21
    aggregation: str = "max"

    def __post_init__(self) -> None:
        for band in (self.crosstalk_band, self.fluctuation_band):
            if band[1] < band[0] or band[0] < 0:
                raise ValueError("bands must be ordered and nonnegative")
        if self.crosstalk_samples < 1 or self.fluctuation_samples < 1:
            raise ValueError("bands need at least one sample")
        if self.aggregation not in ("max", "mean"):
            raise ValueError("aggregation must be 'max' or 'mean'")

    def crosstalk_fractions(self) -> np.ndarray:
        return np.linspace(*self.crosstalk_band, self.crosstalk_samples)

    def fluctuation_fractions(self) -> np.ndarray:
        return np.linspace(*self.fluctuation_band, self.fluctuation_samples)


@dataclass(frozen=True)
class ErrorReport:
    """Band errors plus the per-sample profile behind them.

    per_sample lists (rabi fraction, xy_error) for every grid point,
    crosstalk band first. xy_error is the squared transverse Pauli
    weight, so samples compare directly with e0/e1.
    """

    e0: float
    e1: float
    per_sample: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.e0 < 0 or self.e1 < 0:
            raise ValueError("band errors are nonnegative")

    def combined(self, weights: tuple[float, float] = (1.0, 1.0)) -> float:
        return weights[0] * self.e0 + weights[1] * self.e1


def _sequence_unitaries(seq: CompositePulse,
                        fractions: np.ndarray) -> np.ndarray:
    """Sequence unitaries at each Rabi fraction, shape (n, 2, 2).

    Each pulse generator is delta |0><0| + (f/2)(cos(phi) sx +
    sin(phi) sy) in nominal-Rabi units; its propagator is written in
    closed axis-angle form so band scans cost a few vectorized array ops
    instead of eigendecompositions.
    """
    f = np.asarray(fractions, dtype=float)
    u = np.zeros((f.size, 2, 2), dtype=complex)
    u[:, 0, 0] = 1.0
    u[:, 1, 1] = 1.0
    for pulse in seq.pulses:
        half_z = pulse.detuning_ratio * pulse.duration_product / 2.0
        wx = np.cos(pulse.phase) * f * pulse.duration_product / 2.0
        wy = np.sin(pulse.phase) * f * pulse.duration_product / 2.0
        angle = np.sqrt(wx * wx + wy * wy + half_z * half_z)
        cos_a = np.cos(angle)
        sinc_a = np.sinc(angle / np.pi)  # sin(angle)/angle, safe at 0
        phase = np.exp(-1j * half_z)  # global part of the detuning term
        p00 = phase * (cos_a - 1j * sinc_a * half_z)
        p11 = phase * (cos_a + 1j * sinc_a * half_z)
        p01 = phase * (-1j * sinc_a * (wx - 1j * wy))
        p10 = phase * (-1j * sinc_a * (wx + 1j * wy))
        out = np.empty_like(u)
        out[:, 0, 0] = p00 * u[:, 0, 0] + p01 * u[:, 1, 0]
        out[:, 0, 1] = p00 * u[:, 0, 1] + p01 * u[:, 1, 1]
        out[:, 1, 0] = p10 * u[:, 0, 0] + p11 * u[:, 1, 0]
        out[:, 1, 1] = p10 * u[:, 0, 1] + p11 * u[:, 1, 1]
        u = out
    return u


def _target_columns(fractions: np.ndarray,
                    detuning_ratio: float) -> np.ndarray:
    """Dressed-basis rotations at each fraction, shape (n, 2, 2).

    At fraction f the dressing drive on that ion has strength f (nominal
    units) and the shared detuning, so the wanted rotation is the dressed
    basis of exactly that drive; at f = 0 it collapses to the bare basis.
    """
    f = np.asarray(fractions, dtype=float)
    omega_g = np.hypot(f, detuning_ratio)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(omega_g > 0, detuning_ratio / omega_g, 1.0)
    cp = np.sqrt((1.0 + r) / 2.0)
    cm = np.sqrt((1.0 - r) / 2.0)
    t = np.zeros((f.size, 2, 2), dtype=complex)
    t[:, 0, 0] = cp
    t[:, 1, 0] = cm
    t[:, 0, 1] = cm
    t[:, 1, 1] = -cp
    return t


def _xy_profile(seq: CompositePulse, fractions: np.ndarray) -> np.ndarray:
    """Transverse Pauli error at each fraction against the local target.

    By the parallelogram law, |dx|^2 + |dy|^2 of d = t^dag u equals
    (|d01|^2 + |d10|^2)/2, the mean squared off-diagonal weight.
    """
    u = _sequence_unitaries(seq, fractions)
    t = _target_columns(fractions, seq.nominal_detuning_ratio)
    d01 = (t[:, 0, 0].conj() * u[:, 0, 1] + t[:, 1, 0].conj() * u[:, 1, 1])
    d10 = (t[:, 0, 1].conj() * u[:, 0, 0] + t[:, 1, 1].conj() * u[:, 1, 0])
    return 0.5 * (np.abs(d01) ** 2 + np.abs(d10) ** 2)


def sequence_unitary(seq: CompositePulse, rabi: float,
                     nominal_rabi: float = 1.0) -> Operator:
    """Net unitary of the sequence at the given actual Rabi frequency.

    Detunings and durations are fixed by the nominal Rabi frequency; only
    the coupling strength scales with the actual one, which is how both
    crosstalk (small fractions) and slow drifts (near 1) are modeled. The
    result depends on rabi and nominal_rabi only through their ratio.
    """
    if rabi < 0 or nominal_rabi <= 0:
        raise ValueError("rabi must be >= 0 and nominal_rabi > 0")
    u = _sequence_unitaries(seq, np.array([rabi / nominal_rabi]))[0]
    return Operator.unitary_op(u)


def xy_error(achieved: Operator | np.ndarray,
             target: Operator | np.ndarray) -> float:
    """Squared transverse Pauli weight of the deviation target^dag achieved.

    Writing d = target^dagger achieved = d0 I + dx sx + dy sy + dz sz,
    this returns |dx|^2 + |dy|^2. Phase (Z) errors are deliberately
    invisible: the protocols cancel them with spin echoes, so only the
    basis-mapping error counts. The value is invariant under global
    phases and under Z rotations multiplied onto either side.
    """
    a = achieved.entries if isinstance(achieved, Operator) else \
        np.asarray(achieved, dtype=complex)
    t = target.entries if isinstance(target, Operator) else \
        np.asarray(target, dtype=complex)
    for mat in (a, t):
        if mat.shape != (2, 2):
            raise ValueError("xy_error needs 2x2 unitaries")
        if np.max(np.abs(mat.conj().T @ mat - np.eye(2))) > 1e-8:
            raise ValueError("xy_error inputs must be unitary")
    d = t.conj().T @ a
    dx = (d[0, 1] + d[1, 0]) / 2.0
    dy = (d[0, 1] - d[1, 0]) / 2.0
    return float(abs(dx) ** 2 + abs(dy) ** 2)


def evaluate(seq: CompositePulse, spec: RobustnessSpec = RobustnessSpec(),
             nominal_rabi: float = 1.0) -> ErrorReport:
    """Band errors of a sequence against the fraction-local dressed targets.

    ``nominal_rabi`` only sets physical units and cancels out of the
    dimensionless result; it is accepted so callers can keep everything
    in hardware units.
    """
    if nominal_rabi <= 0:
        raise ValueError("nominal_rabi must be positive")
    cross = spec.crosstalk_fractions()
    fluct = spec.fluctuation_fractions()
    xy_cross = _xy_profile(seq, cross)
    xy_fluct = _xy_profile(seq, fluct)
    agg = np.max if spec.aggregation == "max" else np.mean
    per_sample = tuple(
        (float(f), float(v))
        for f, v in zip(np.concatenate([cross, fluct]),
                        np.concatenate([xy_cross, xy_fluct])))
    return ErrorReport(e0=float(agg(xy_cross)), e1=float(agg(xy_fluct)),
                       per_sample=per_sample)


def time_reversal(seq: CompositePulse) -> CompositePulse:
    """Sequence whose unitary inverts the input at every Rabi fraction.

    Reversing the pulse order while negating each pulse generator
    (detuning sign flip plus a pi phase offset) inverts each factor
    exactly, independent of the actual Rabi frequency; the inversion is
    checked numerically at construction.
    """
    reversed_pulses = tuple(
        SequencePulse(-p.detuning_ratio, p.duration_product,
                      (p.phase + np.pi) % (2.0 * np.pi))
        for p in reversed(seq.pulses))
    rev = CompositePulse(reversed_pulses, seq.nominal_detuning_ratio)
    for fraction in (0.0, 0.37, 1.0):
        f = np.array([fraction])
        prod = _sequence_unitaries(rev, f)[0] @ _sequence_unitaries(seq, f)[0]
        if np.max(np.abs(prod - prod[0, 0] * np.eye(2))) > 1e-10 or \
                abs(abs(prod[0, 0]) - 1.0) > 1e-10:
            raise AssertionError("time reversal failed to invert")
    return rev


class _BandScorer:
    """Weighted band error as a fast function of the raw 9-parameter vector.

    Precomputes the fraction grids and target columns once; a single call
    then runs the closed-form pulse algebra on one fused array covering
    both bands. This sits in the optimizer's innermost loop.
    """

    def __init__(self, detuning_ratio: float, spec: RobustnessSpec,
                 weights: tuple[float, float]) -> None:
        cross = spec.crosstalk_fractions()
        fluct = spec.fluctuation_fractions()
        self._split = cross.size
        self._f = np.concatenate([cross, fluct])
        self._f2 = self._f * self._f
        t = _target_columns(self._f, detuning_ratio)
        self._cp = t[:, 0, 0].real.copy()
        self._cm = t[:, 1, 0].real.copy()
        self._use_max = spec.aggregation == "max"
        self._weights = weights

    def profile(self, params: np.ndarray) -> np.ndarray:
        u00 = np.ones_like(self._f, dtype=complex)
        u01 = np.zeros_like(u00)
        u10 = np.zeros_like(u00)
        u11 = np.ones_like(u00)
        for i in range(3):
            ratio, dur, phi = params[3 * i:3 * i + 3]
            half_z = ratio * dur / 2.0
            half_dur = dur / 2.0
            angle = np.sqrt(self._f2 * half_dur * half_dur
                            + half_z * half_z)
            cos_a = np.cos(angle)
            sf = np.sinc(angle / np.pi) * self._f * half_dur
            zpart = np.sinc(angle / np.pi) * half_z
            gphase = complex(np.exp(-1j * half_z))
            p00 = gphase * (cos_a - 1j * zpart)
            p11 = gphase * (cos_a + 1j * zpart)
            c01 = gphase * (-1j * complex(np.cos(phi), -np.sin(phi)))
            c10 = gphase * (-1j * complex(np.cos(phi), np.sin(phi)))
            p01 = c01 * sf
            p10 = c10 * sf
            u00, u01, u10, u11 = (
                p00 * u00 + p01 * u10,
                p00 * u01 + p01 * u11,
                p10 * u00 + p11 * u10,
                p10 * u01 + p11 * u11,
            )
        d01 = self._cp * u01 + self._cm * u11
        d10 = self._cm * u00 - self._cp * u10
        return 0.5 * (np.abs(d01) ** 2 + np.abs(d10) ** 2)

    def __call__(self, params: np.ndarray) -> float:
        xy = self.profile(params)
        agg = np.max if self._use_max else np.mean
        return (self._weights[0] * float(agg(xy[:self._split]))
                + self._weights[1] * float(agg(xy[self._split:])))


def optimize(nominal_detuning_ratio: float,
             spec: RobustnessSpec = RobustnessSpec(),
             seed: int = 0, budget: int = 200,
             weights: tuple[float, float] = (1.0, 1.0),
             threads: int = 1,
             ) -> tuple[CompositePulse, ErrorReport]:
    """Multi-start simplex search over the nine sequence parameters.

    ``budget`` counts independent restarts; each draws its start from a
    child of ``seed`` and runs a bounded Nelder-Mead on the weighted band
    error. Restarts may run on several threads; the winner is merged
    deterministically (lowest score, then lowest restart index), so the
    result depends only on the seed and budget.
    """
    if budget < 1:
        raise ValueError("budget must be at least one restart")
    if threads < 1:
        raise ValueError("threads must be positive")
    if weights[0] < 0 or weights[1] < 0 or weights == (0.0, 0.0):
        raise ValueError("weights must be nonnegative and not both zero")

    score = _BandScorer(nominal_detuning_ratio, spec, weights)
    bounds = [(-3.0, 3.0), (1e-3, 12.0), (0.0, 2.0 * np.pi)] * 3
    children = np.random.SeedSequence(seed).spawn(budget)

    def run_restart(index: int) -> tuple[float, int, np.ndarray]:
        rng = np.random.default_rng(children[index])
        x0 = np.empty(9)
        x0[0::3] = rng.uniform(-2.0, 2.0, 3)
        x0[1::3] = rng.uniform(0.5, 8.0, 3)
        x0[2::3] = rng.uniform(0.0, 2.0 * np.pi, 3)
        res = minimize(score, x0, method="Nelder-Mead", bounds=bounds,
                       options={"maxfev": 1200, "xatol": 1e-10,
                                "fatol": 1e-13, "adaptive": True})
        return float(res.fun), index, res.x

    if threads == 1:
        results = [run_restart(i) for i in range(budget)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_restart, range(budget)))

    results.sort(key=lambda item: (item[0], item[1]))
    # Polish the few best starts with a tighter simplex.
    finalists = results[:min(3, len(results))]
    best_fun, _, best_x = finalists[0]
    for fun, _, x in finalists:
        res = minimize(score, x, method="Nelder-Mead", bounds=bounds,
                       options={"maxfev": 4000, "xatol": 1e-12,
                                "fatol": 1e-15, "adaptive": True})
        if res.fun < best_fun:
            best_fun, best_x = float(res.fun), res.x

    best_seq = _params_to_sequence(best_x, nominal_detuning_ratio)
    return best_seq, evaluate(best_seq, spec)


def _params_to_sequence(params: np.ndarray,
                        nominal_detuning_ratio: float) -> CompositePulse:
    rows = [(float(params[3 * i]), float(params[3 * i + 1]),
             float(params[3 * i + 2])) for i in range(3)]
    return CompositePulse.from_rows(rows, nominal_detuning_ratio)


def sequence_to_dict(seq: CompositePulse) -> dict:
    return {
        "schema": 1,
        "nominal_detuning_ratio": seq.nominal_detuning_ratio,
        "pulses": [
            {"delta_over_omega": p.detuning_ratio,
             "tau_omega": p.duration_product,
             "phi": p.phase}
            for p in seq.pulses
        ],
    }


def sequence_from_dict(payload: dict) -> CompositePulse:
    rows = [(p["delta_over_omega"], p["tau_omega"], p["phi"])
            for p in payload["pulses"]]
    return CompositePulse.from_rows(rows, payload["nominal_detuning_ratio"])


def save_sequence(seq: CompositePulse, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sequence_to_dict(seq), indent=2)
                          + "\n")


def load_sequence(path: str | Path) -> CompositePulse:
    return sequence_from_dict(json.loads(Path(path).read_text()))


def bundled_sequence_path(name: str) -> Path:
    """Path of a sequence file shipped with the package.

    Available names: "shelving" (target detuning ratio 0.1) and
    "hands_off" (target detuning ratio 0.5).
    """
    path = _DATA_DIR / f"{name}.json"
    if not path.exists():
        known = sorted(p.stem for p in _DATA_DIR.glob("*.json"))
        raise FileNotFoundError(
            f"no bundled sequence {name!r}; known: {known}")
    return path
