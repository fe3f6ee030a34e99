"""Dense state/operator types and time evolution for small Hilbert spaces.

Everything here is plain dense numpy: the systems of interest have dimension
at most 16, so Hermitian eigendecomposition is the exact and cheapest route
to every propagator, and the Lindblad integrator works on the vectorized
density matrix with a precomputed superoperator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuantumState",
    "Operator",
    "LindbladSystem",
    "propagate_unitary",
    "propagate_lindblad",
    "fidelity",
    "rotation_vector",
    "rotation_from_vector",
]

_NORM_TOL = 1e-12
_EIG_TOL = 1e-10


@dataclass(frozen=True)
class QuantumState:
    """Pure state vector or density matrix over an ordered level space.

    ``kind`` is "pure" (``data`` is a normalized complex vector) or "mixed"
    (``data`` is a Hermitian, unit-trace, positive matrix). ``labels`` names
    the basis levels; defaults to stringified indices.
    """

    data: np.ndarray
    kind: str
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", arr)
        if self.kind == "pure":
            if arr.ndim != 1:
                raise ValueError("pure state needs a vector")
            norm = float(np.linalg.norm(arr))
            if abs(norm - 1.0) > _NORM_TOL:
                raise ValueError(f"state norm {norm} is not 1")
        elif self.kind == "mixed":
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ValueError("mixed state needs a square matrix")
            if abs(np.trace(arr) - 1.0) > _NORM_TOL:
                raise ValueError("density matrix trace is not 1")
            if np.max(np.abs(arr - arr.conj().T)) > _NORM_TOL:
                raise ValueError("density matrix is not Hermitian")
            if float(np.linalg.eigvalsh(arr).min()) < -1e-10:
                raise ValueError("density matrix has a negative eigenvalue")
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")
        if not self.labels:
            object.__setattr__(
                self, "labels", tuple(str(i) for i in range(self.dim))
            )
        elif len(self.labels) != self.dim:
            raise ValueError("label count does not match dimension")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @classmethod
    def pure(cls, amplitudes: Sequence[complex],
             labels: Sequence[str] = ()) -> "QuantumState":
        vec = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("zero vector")
        return cls(vec / norm, "pure", tuple(labels))

    @classmethod
    def basis(cls, dim: int, index: int,
              labels: Sequence[str] = ()) -> "QuantumState":
        vec = np.zeros(dim, dtype=complex)
        vec[index] = 1.0
        return cls(vec, "pure", tuple(labels))

    @classmethod
    def mixed(cls, matrix: np.ndarray,
              labels: Sequence[str] = ()) -> "QuantumState":
        return cls(np.asarray(matrix, dtype=complex), "mixed", tuple(labels))

    def density(self) -> np.ndarray:
        """Density matrix view of the state, whatever its kind."""
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_mixed(self) -> "QuantumState":
        if self.kind == "mixed":
            return self
        return QuantumState(self.density(), "mixed", self.labels)

    def population(self, index: int) -> float:
        if self.kind == "pure":
            return float(abs(self.data[index]) ** 2)
        return float(np.real(self.data[index, index]))


@dataclass(frozen=True)
class Operator:
    """A dense complex matrix with optional structural flags.

    Flags are promises checked at construction: ``hermitian`` within 1e-12
    max-norm, ``unitary`` within 1e-10 max-norm of U†U - I.
    """

    entries: np.ndarray
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self) -> None:
        mat = np.asarray(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("operator must be a square matrix")
        object.__setattr__(self, "entries", mat)
        if self.hermitian and np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise ValueError("matrix is not Hermitian within 1e-12")
        if self.unitary:
            resid = mat.conj().T @ mat - np.eye(mat.shape[0])
            if np.max(np.abs(resid)) > _EIG_TOL:
                raise ValueError("matrix is not unitary within 1e-10")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def hermitian_op(cls, entries: np.ndarray) -> "Operator":
        mat = np.asarray(entries, dtype=complex)
        return cls(0.5 * (mat + mat.conj().T), hermitian=True)

    @classmethod
    def unitary_op(cls, entries: np.ndarray) -> "Operator":
        return cls(entries, unitary=True)

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls(np.eye(dim, dtype=complex), hermitian=True, unitary=True)

    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T,
                        hermitian=self.hermitian, unitary=self.unitary)

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(self.entries @ other.entries)


@dataclass(frozen=True)
class LindbladSystem:
    """Hamiltonian plus weighted collapse channels.

    ``hamiltonian`` is an Operator, or a callable t -> ndarray for drives
    with a time-dependent envelope. Rates are in 1/s and the collapse
    operators are applied as sqrt(rate) * L in the dissipator.
    """

    hamiltonian: Operator | Callable[[float], np.ndarray]
    collapse_ops: tuple[tuple[Operator, float], ...] = ()

    def __post_init__(self) -> None:
        for op, rate in self.collapse_ops:
            if rate < 0:
                raise ValueError("collapse rates must be nonnegative")
            if op.dim != self.dim:
                raise ValueError("collapse operator dimension mismatch")

    @property
    def dim(self) -> int:
        if isinstance(self.hamiltonian, Operator):
            return self.hamiltonian.dim
        return self.hamiltonian(0.0).shape[0]


def _expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h via eigendecomposition."""
    vals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * vals * t)
    return (vecs * phases) @ vecs.conj().T


def propagate_unitary(state: QuantumState, hamiltonian: Operator,
                      duration: float) -> QuantumState:
    """Evolve a state under a constant Hermitian Hamiltonian.

    The propagator is exp(-iHt) computed exactly by eigendecomposition.
    """
    if not hamiltonian.hermitian:
        raise ValueError("propagate_unitary needs a Hermitian Hamiltonian")
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    if hamiltonian.dim != state.dim:
        raise ValueError("dimension mismatch")
    if duration == 0.0:
        return state
    u = _expm_hermitian(hamiltonian.entries, duration)
    if state.kind == "pure":
        return QuantumState(u @ state.data, "pure", state.labels)
    rho = u @ state.data @ u.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return QuantumState(rho, "mixed", state.labels)


def _dissipator_superop(collapse_ops: Sequence[tuple[Operator, float]],
                        dim: int) -> np.ndarray:
    """Vectorized (column-stacking) dissipator: sum of rate * D[L]."""
    eye = np.eye(dim)
    s = np.zeros((dim * dim, dim * dim), dtype=complex)
    for op, rate in collapse_ops:
        if rate == 0.0:
            continue
        l = op.entries
        ldl = l.conj().T @ l
        s += rate * (np.kron(l.conj(), l)
                     - 0.5 * np.kron(eye, ldl)
                     - 0.5 * np.kron(ldl.T, eye))
    return s


def _hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def _operator_norm(h: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(h)))) if h.size else 0.0


def propagate_lindblad(state: QuantumState, system: LindbladSystem,
                       duration: float, dt_max: float | None = None,
                       ) -> QuantumState:
    """Fixed-step RK4 integration of the Lindblad master equation.

    The step size satisfies (max rate + ||H||) * dt <= 0.05 and never
    exceeds ``dt_max`` when given. Integration runs on the vectorized
    density matrix with the dissipator superoperator built once; a
    time-dependent Hamiltonian contributes a fresh Hamiltonian term at each
    RK4 stage time. Trace drift beyond 1e-6 raises instead of being
    silently accepted.
    """
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    if dt_max is not None and dt_max <= 0:
        raise ValueError("dt_max must be positive")
    if system.dim != state.dim:
        raise ValueError("dimension mismatch")
    rho_state = state.to_mixed()
    if duration == 0.0:
        return rho_state

    dim = state.dim
    diss = _dissipator_superop(system.collapse_ops, dim)
    max_rate = max((r for _, r in system.collapse_ops), default=0.0)

    time_dependent = not isinstance(system.hamiltonian, Operator)
    if time_dependent:
        hfun = system.hamiltonian
        hnorm = max(_operator_norm(np.asarray(hfun(duration * k / 64)))
                    for k in range(65))
    else:
        h0 = system.hamiltonian.entries
        hnorm = _operator_norm(h0)

    scale = max_rate + hnorm
    dt = duration if scale == 0.0 else min(duration, 0.05 / scale)
    if dt_max is not None:
        dt = min(dt, dt_max)
    steps = max(1, int(np.ceil(duration / dt)))
    dt = duration / steps

    v = rho_state.data.reshape(-1, order="F").copy()
    if time_dependent:
        def rhs(t: float, vec: np.ndarray) -> np.ndarray:
            sup = _hamiltonian_superop(np.asarray(hfun(t))) + diss
            return sup @ vec

        t = 0.0
        for _ in range(steps):
            k1 = rhs(t, v)
            k2 = rhs(t + dt / 2, v + dt / 2 * k1)
            k3 = rhs(t + dt / 2, v + dt / 2 * k2)
            k4 = rhs(t + dt, v + dt * k3)
            v = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += dt
    else:
        sup = _hamiltonian_superop(h0) + diss
        for _ in range(steps):
            k1 = sup @ v
            k2 = sup @ (v + dt / 2 * k1)
            k3 = sup @ (v + dt / 2 * k2)
            k4 = sup @ (v + dt * k3)
            v = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    rho = v.reshape(dim, dim, order="F")
    drift = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
    if drift > 1e-6:
        raise RuntimeError(
            f"trace drifted by {drift:.2e} over {duration} s; "
            "reduce dt_max")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    # RK4 can leave eigenvalues a hair negative; repair within the
    # integrator's own error budget, never beyond it.
    vals, vecs = np.linalg.eigh(rho)
    if vals.min() < -1e-8:
        raise RuntimeError(
            f"state left the physical cone (min eigenvalue {vals.min():.2e})")
    if vals.min() < 0.0:
        vals = np.clip(vals, 0.0, None)
        rho = (vecs * vals) @ vecs.conj().T
        rho = rho / np.trace(rho).real
        rho = 0.5 * (rho + rho.conj().T)
    return QuantumState(rho, "mixed", rho_state.labels)


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """State fidelity: overlap form for pure inputs, Uhlmann for mixed.

    Conventions are squared so that all cases agree on pure states:
    F(psi, rho) = <psi|rho|psi> and F(rho, sigma) = (tr sqrt(sqrt(rho)
    sigma sqrt(rho)))^2.
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if a.kind == "pure" and b.kind == "pure":
        return float(abs(np.vdot(a.data, b.data)) ** 2)
    if a.kind == "pure":
        val = float(np.real(np.vdot(a.data, b.data @ a.data)))
        return min(1.0, max(0.0, val))
    if b.kind == "pure":
        val = float(np.real(np.vdot(b.data, a.data @ b.data)))
        return min(1.0, max(0.0, val))
    sqrt_a = _matrix_sqrt(a.data)
    inner = _matrix_sqrt(sqrt_a @ b.data @ sqrt_a)
    val = np.trace(inner).real
    return float(min(1.0, max(0.0, val * val)))


def _matrix_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def rotation_vector(u: Operator | np.ndarray) -> np.ndarray:
    """Axis-angle vector of a 2x2 unitary, global phase removed.

    Returns theta * n_hat with theta in [0, pi], where
    u = exp(-i theta n.sigma / 2) up to global phase. The identity maps to
    the zero vector.
    """
    mat = u.entries if isinstance(u, Operator) else np.asarray(u, complex)
    if mat.shape != (2, 2):
        raise ValueError("rotation_vector needs a 2x2 matrix")
    resid = mat.conj().T @ mat - np.eye(2)
    if np.max(np.abs(resid)) > 1e-8:
        raise ValueError("matrix is not unitary")
    su = mat / np.sqrt(np.linalg.det(mat))
    # su = c*I - i (sx*X + sy*Y + sz*Z) with c = cos(theta/2), |s| = sin(theta/2)
    c = float(np.real(su[0, 0] + su[1, 1]) / 2)
    s = np.array([
        -np.imag(su[0, 1] + su[1, 0]) / 2,
        (np.real(su[1, 0]) - np.real(su[0, 1])) / 2,
        -np.imag(su[0, 0] - su[1, 1]) / 2,
    ])
    sn = float(np.linalg.norm(s))
    if sn < 1e-15:
        return np.zeros(3)
    theta = 2.0 * np.arctan2(sn, c)
    axis = s / sn
    if theta > np.pi:
        # Equivalent rotation with angle in [0, pi] about the flipped axis.
        theta = 2.0 * np.pi - theta
        axis = -axis
    return theta * axis


def rotation_from_vector(vec: Sequence[float]) -> Operator:
    """Inverse of rotation_vector: exp(-i (v.sigma) / 2)."""
    v = np.asarray(vec, dtype=float)
    theta = float(np.linalg.norm(v))
    if theta == 0.0:
        return Operator.identity(2)
    n = v / theta
    sigma = np.array([[n[2], n[0] - 1j * n[1]],
                      [n[0] + 1j * n[1], -n[2]]])
    mat = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * sigma
    return Operator.unitary_op(mat)
