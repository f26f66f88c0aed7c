"""Plant models and stage costs.

The central object is :class:`SystemModel`, a discrete-time plant
``x_next = f(x, u)`` together with a nonnegative stage cost ``l(x, u)``
and an equilibrium pair at which both the dynamics are at rest and the
cost vanishes.  :class:`LinearQuadraticInstance` is the concrete family
used throughout the experiments: linear dynamics with quadratic cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AdmissibilityError, ConfigError, PlantFormatError

_EQUILIBRIUM_TOL = 1e-12


def _as_vector(value, dim: int, name: str) -> np.ndarray:
    vec = np.asarray(value, dtype=float)
    if vec.shape != (dim,):
        raise ConfigError(f"{name} must have shape ({dim},), got {vec.shape}")
    return vec


@dataclass(frozen=True)
class SystemModel:
    """Discrete-time plant with stage cost and equilibrium.

    Attributes
    ----------
    state_dim, control_dim : int
        Dimensions of the state and control vectors.
    dynamics : callable
        Map ``(x, u) -> x_next``.
    stage_cost : callable
        Map ``(x, u) -> float``, nonnegative, zero at the equilibrium.
    equilibrium_state, equilibrium_control : ndarray
        Pair ``(x*, u*)`` with ``f(x*, u*) = x*`` and ``l(x*, u*) = 0``.
    state_admissible, control_admissible : callable or None
        Optional predicates; ``None`` means unconstrained.
    min_stage_cost : callable or None
        Optional map ``x -> min_u l(x, u)``.  Supplied analytically by
        the linear-quadratic family; ``None`` if unavailable.
    """

    state_dim: int
    control_dim: int
    dynamics: Callable[[np.ndarray, np.ndarray], np.ndarray]
    stage_cost: Callable[[np.ndarray, np.ndarray], float]
    equilibrium_state: np.ndarray
    equilibrium_control: np.ndarray
    state_admissible: Callable[[np.ndarray], bool] | None = None
    control_admissible: Callable[[np.ndarray], bool] | None = None
    min_stage_cost: Callable[[np.ndarray], float] | None = None

    def __post_init__(self):
        if self.state_dim < 1 or self.control_dim < 1:
            raise ConfigError("state_dim and control_dim must be positive")
        xe = _as_vector(self.equilibrium_state, self.state_dim, "equilibrium_state")
        ue = _as_vector(self.equilibrium_control, self.control_dim, "equilibrium_control")
        object.__setattr__(self, "equilibrium_state", xe)
        object.__setattr__(self, "equilibrium_control", ue)
        residual = np.asarray(self.dynamics(xe, ue), dtype=float) - xe
        if np.max(np.abs(residual)) > _EQUILIBRIUM_TOL:
            raise ConfigError(
                "equilibrium pair is not a fixed point of the dynamics "
                f"(residual {residual})"
            )
        cost = float(self.stage_cost(xe, ue))
        if abs(cost) > _EQUILIBRIUM_TOL:
            raise ConfigError(f"stage cost at the equilibrium is {cost!r}, expected 0")


def step(model: SystemModel, x, u) -> np.ndarray:
    """Apply one control step, checking admissibility of both arguments."""
    x = _as_vector(x, model.state_dim, "state")
    u = _as_vector(u, model.control_dim, "control")
    if model.state_admissible is not None and not model.state_admissible(x):
        raise AdmissibilityError(f"inadmissible state {x}")
    if model.control_admissible is not None and not model.control_admissible(u):
        raise AdmissibilityError(f"inadmissible control {u}")
    return np.asarray(model.dynamics(x, u), dtype=float)


def trajectory_cost(model: SystemModel, x0, controls) -> tuple[float, np.ndarray]:
    """Roll the plant forward under a control sequence.

    Returns the accumulated stage cost and the visited states as an
    array of shape ``(len(controls) + 1, state_dim)`` including the
    initial state.
    """
    x = _as_vector(x0, model.state_dim, "x0")
    controls = np.asarray(controls, dtype=float)
    if controls.ndim == 1:
        controls = controls.reshape(-1, model.control_dim)
    states = [x]
    total = 0.0
    for u in controls:
        total += float(model.stage_cost(x, u))
        x = step(model, x, u)
        states.append(x)
    return total, np.array(states)


def _check_symmetric(mat: np.ndarray, name: str) -> None:
    if not np.allclose(mat, mat.T, atol=1e-12, rtol=0.0):
        raise ConfigError(f"{name} must be symmetric")


@dataclass(frozen=True)
class LinearQuadraticInstance:
    """Linear plant ``x+ = A x + B u`` with cost ``x'Qx + u'Ru``.

    ``Q`` must be symmetric positive semidefinite and ``R`` symmetric
    positive definite.  The equilibrium is the origin.

    Attributes
    ----------
    A : ndarray, shape (n, n)
    B : ndarray, shape (n, m)
    Q : ndarray, shape (n, n)
    R : ndarray, shape (m, m)
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_2d(np.asarray(self.B, dtype=float))
        q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        r = np.atleast_2d(np.asarray(self.R, dtype=float))
        n = a.shape[0]
        if a.shape != (n, n):
            raise ConfigError(f"A must be square, got shape {a.shape}")
        if b.shape[0] != n:
            raise ConfigError(f"B must have {n} rows, got shape {b.shape}")
        m = b.shape[1]
        if q.shape != (n, n):
            raise ConfigError(f"Q must have shape ({n}, {n}), got {q.shape}")
        if r.shape != (m, m):
            raise ConfigError(f"R must have shape ({m}, {m}), got {r.shape}")
        _check_symmetric(q, "Q")
        _check_symmetric(r, "R")
        if np.min(np.linalg.eigvalsh(q)) < -1e-12:
            raise ConfigError("Q must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(r)) <= 0.0:
            raise ConfigError("R must be positive definite")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "R", r)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def control_dim(self) -> int:
        return self.B.shape[1]

    def dynamics(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ u

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float:
        return float(x @ self.Q @ x + u @ self.R @ u)

    def min_stage_cost(self, x: np.ndarray) -> float:
        # R is positive definite, so the minimiser over u is u = 0.
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x)

    def to_model(self) -> SystemModel:
        return SystemModel(
            state_dim=self.state_dim,
            control_dim=self.control_dim,
            dynamics=self.dynamics,
            stage_cost=self.stage_cost,
            equilibrium_state=np.zeros(self.state_dim),
            equilibrium_control=np.zeros(self.control_dim),
            min_stage_cost=self.min_stage_cost,
        )


_SCALAR_KEYS = ("state_dim", "control_dim")
_BLOCK_KEYS = ("A", "B", "Q", "R", "equilibrium_state", "equilibrium_control")


def load_plant(path) -> LinearQuadraticInstance:
    """Parse a plant description file.

    The format is line oriented.  ``state_dim`` and ``control_dim`` are
    scalars on one line; ``A``, ``B``, ``Q`` and ``R`` are section
    headers followed by one matrix row per line.  Optional sections
    ``equilibrium_state`` and ``equilibrium_control`` each take a single
    row (the linear-quadratic family requires these to be zero, so they
    exist mostly for documentation).  ``#`` starts a comment.  Errors
    carry the offending 1-based line number.
    """
    scalars: dict[str, int] = {}
    blocks: dict[str, list[list[float]]] = {}
    current: str | None = None

    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise PlantFormatError(f"cannot read plant file {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            tokens = text.split()
            if tokens[0] in _SCALAR_KEYS:
                key = tokens[0]
                if key in scalars:
                    raise PlantFormatError(f"duplicate {key}", line=lineno)
                if len(tokens) != 2:
                    raise PlantFormatError(f"expected '{key} <int>'", line=lineno)
                try:
                    scalars[key] = int(tokens[1])
                except ValueError:
                    raise PlantFormatError(
                        f"invalid integer {tokens[1]!r} for {key}", line=lineno
                    ) from None
                current = None
                continue
            if tokens[0] in _BLOCK_KEYS:
                if len(tokens) != 1:
                    raise PlantFormatError(
                        f"section header {tokens[0]!r} takes no values on its line",
                        line=lineno,
                    )
                if tokens[0] in blocks:
                    raise PlantFormatError(f"duplicate section {tokens[0]}", line=lineno)
                current = tokens[0]
                blocks[current] = []
                continue
            # Anything else must be a numeric row of the current section.
            if current is None:
                raise PlantFormatError(f"unexpected content {text!r}", line=lineno)
            try:
                row = [float(tok) for tok in tokens]
            except ValueError:
                raise PlantFormatError(
                    f"invalid number in row {text!r}", line=lineno
                ) from None
            rows = blocks[current]
            if rows and len(rows[0]) != len(row):
                raise PlantFormatError(
                    f"row has {len(row)} entries, expected {len(rows[0])}",
                    line=lineno,
                )
            rows.append(row)

    for key in _SCALAR_KEYS:
        if key not in scalars:
            raise PlantFormatError(f"missing {key}")
    for key in ("A", "B", "Q", "R"):
        if key not in blocks or not blocks[key]:
            raise PlantFormatError(f"missing section {key}")

    n, m = scalars["state_dim"], scalars["control_dim"]
    shapes = {"A": (n, n), "B": (n, m), "Q": (n, n), "R": (m, m)}
    mats = {}
    for key, want in shapes.items():
        mat = np.array(blocks[key], dtype=float)
        if mat.shape != want:
            raise PlantFormatError(f"section {key} has shape {mat.shape}, expected {want}")
        mats[key] = mat
    for key, dim in (("equilibrium_state", n), ("equilibrium_control", m)):
        if key in blocks:
            vec = np.array(blocks[key], dtype=float).ravel()
            if vec.shape != (dim,):
                raise PlantFormatError(f"section {key} must have {dim} entries")
            if np.max(np.abs(vec)) > 0.0:
                raise PlantFormatError(
                    f"{key} must be zero for a linear-quadratic plant"
                )

    return LinearQuadraticInstance(A=mats["A"], B=mats["B"], Q=mats["Q"], R=mats["R"])
