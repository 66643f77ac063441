"""Discretised vector equilibrium problems with the logarithmic kernel.

Measures are midpoint-discretised on their intervals; every cell pair uses
the exact double integral of log|x - y| (the log singularity would otherwise
bias self-cells), so the energy of a discretised measure matches the
continuum value to second order.  Minimisation is conditional-gradient with
exact line search on the quadratic model, followed by an active-set polish
that solves the stationarity system on the identified support.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConstructionError, ValidationError

ANGELESCO = "angelesco"
NIKISHIN = "nikishin"


def _G(t):
    """Second antiderivative of log|t| vanishing to second order at 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.5 * t * t * (np.log(np.abs(t)) - 1.5)
    return np.where(t == 0.0, 0.0, out)


def _g(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = t * (np.log(np.abs(t)) - 1.0)
    return np.where(t == 0.0, 0.0, out)


def log_kernel_matrix(x, hx, y, hy):
    """Cell-averaged values of log(1/|x - y|) between two midpoint grids.

    Degenerate cell widths fall back to single integrals or point values;
    coincident point pairs are a configuration error (infinite energy).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    D = x[:, None] - y[None, :]
    if hx > 0 and hy > 0:
        s, d = (hx + hy) / 2.0, (hx - hy) / 2.0
        mean = (_G(D + s) - _G(D + d) - _G(D - d) + _G(D - s)) / (hx * hy)
    elif hx > 0:
        mean = (_g(D + hx / 2.0) - _g(D - hx / 2.0)) / hx
    elif hy > 0:
        mean = (_g(D + hy / 2.0) - _g(D - hy / 2.0)) / hy
    else:
        if np.any(D == 0.0):
            raise ConstructionError("coincident point cells give infinite energy")
        mean = np.log(np.abs(D))
    return -mean


@dataclass(frozen=True, eq=False)
class DiscretizedMeasure:
    """Nonnegative weights on a midpoint grid (cell_width 0 = point masses)."""

    grid: np.ndarray
    weights: np.ndarray
    cell_width: float
    interval: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if len(self.grid) != len(self.weights):
            raise ValidationError("grid and weights must have equal length")
        if np.any(np.asarray(self.weights) < 0):
            raise ValidationError("weights must be nonnegative")

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def moments(self, ell_max: int):
        """Cell-averaged power moments up to ell_max."""
        x = np.asarray(self.grid, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        h = self.cell_width
        out = []
        for ell in range(ell_max + 1):
            if h > 0:
                vals = ((x + h / 2) ** (ell + 1) - (x - h / 2) ** (ell + 1)) / ((ell + 1) * h)
            else:
                vals = x**ell
            out.append(float(np.dot(w, vals)))
        return out

    @staticmethod
    def uniform_cells(a: float, b: float, m: int, mass: float) -> "DiscretizedMeasure":
        if not a < b:
            raise ValidationError(f"interval requires a < b, got [{a}, {b}]", code="E_INTERVAL")
        if m < 2:
            raise ValidationError(f"need at least 2 cells, got {m}")
        h = (b - a) / m
        grid = a + (np.arange(m) + 0.5) * h
        return DiscretizedMeasure(grid=grid, weights=np.full(m, mass / m), cell_width=h,
                                  interval=(float(a), float(b)))

    @staticmethod
    def from_points(locations, weights) -> "DiscretizedMeasure":
        return DiscretizedMeasure(
            grid=np.asarray(locations, dtype=float),
            weights=np.asarray(weights, dtype=float),
            cell_width=0.0,
        )


def mutual_energy(eta: DiscretizedMeasure, nu: DiscretizedMeasure) -> float:
    """Double integral of log(1/|x - y|) between two discretised measures."""
    L = log_kernel_matrix(eta.grid, eta.cell_width, nu.grid, nu.cell_width)
    return float(eta.weights @ L @ nu.weights)


@dataclass(frozen=True)
class InteractionSpec:
    """Coupled energy: sum of self-energies plus coupling[j][k] times the
    mutual energy of components j < k, with prescribed component masses."""

    coupling: np.ndarray
    masses: Tuple[float, ...]
    limit_rule: str = "sum"

    def __post_init__(self):
        C = np.asarray(self.coupling, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValidationError("coupling must be square")
        if not np.allclose(C, C.T):
            raise ValidationError("coupling must be symmetric")
        if not np.allclose(np.diag(C), 1.0):
            raise ValidationError("coupling diagonal must be 1")
        if len(self.masses) != C.shape[0]:
            raise ValidationError("one mass per component required")
        object.__setattr__(self, "coupling", C)

    @property
    def r(self) -> int:
        return len(self.masses)

    @staticmethod
    def angelesco(s: Sequence[float]) -> "InteractionSpec":
        r = len(s)
        C = np.ones((r, r))
        return InteractionSpec(coupling=C, masses=tuple(float(v) for v in s), limit_rule="sum")

    @staticmethod
    def nikishin(s: Sequence[float]) -> "InteractionSpec":
        r = len(s)
        C = np.eye(r)
        for j in range(r - 1):
            C[j, j + 1] = C[j + 1, j] = -1.0
        masses = tuple(float(sum(s[i:])) for i in range(r))
        return InteractionSpec(coupling=C, masses=masses, limit_rule="first")


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    measures: Tuple[DiscretizedMeasure, ...]
    energy: float
    fw_gap: float
    frostman_residual: float
    iterations: int
    converged: bool
    polished: bool
    energy_trace: Tuple[float, ...]


def _gradient(blocks, C, ws):
    r = len(ws)
    out = []
    for j in range(r):
        g = 2.0 * (blocks[(j, j)] @ ws[j])
        for k in range(r):
            if k == j:
                continue
            c = C[j, k]
            if c != 0.0:
                jk = blocks[(j, k)] if (j, k) in blocks else blocks[(k, j)].T
                g = g + c * (jk @ ws[k])
        out.append(g)
    return out


def _energy(blocks, C, ws):
    r = len(ws)
    e = 0.0
    for j in range(r):
        e += float(ws[j] @ blocks[(j, j)] @ ws[j])
        for k in range(j + 1, r):
            if C[j, k] != 0.0:
                e += C[j, k] * float(ws[j] @ blocks[(j, k)] @ ws[k])
    return e


def _polish_active_set(blocks, C, masses, ws, rounds: int = 40):
    """Solve the stationarity system on the strictly positive support.

    Returns refined weights and multipliers, or None when the reduced system
    is singular or keeps producing negative cells.
    """
    r = len(ws)
    sizes = [len(w) for w in ws]
    active = [np.ones(m, dtype=bool) for m in sizes]
    for _ in range(rounds):
        idx = [np.flatnonzero(a) for a in active]
        counts = [len(i) for i in idx]
        dim = sum(counts) + r
        A = np.zeros((dim, dim))
        b = np.zeros(dim)
        offs = np.cumsum([0] + counts)
        for j in range(r):
            rows = slice(offs[j], offs[j + 1])
            for k in range(r):
                cols = slice(offs[k], offs[k + 1])
                if k == j:
                    A[rows, cols] = 2.0 * blocks[(j, j)][np.ix_(idx[j], idx[j])]
                elif C[j, k] != 0.0:
                    jk = blocks[(j, k)] if (j, k) in blocks else blocks[(k, j)].T
                    A[rows, cols] = C[j, k] * jk[np.ix_(idx[j], idx[k])]
            A[rows, sum(counts) + j] = -1.0
            A[sum(counts) + j, rows] = 1.0
            b[sum(counts) + j] = masses[j]
        try:
            sol = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            return None
        new_ws = []
        negative = False
        for j in range(r):
            w = np.zeros(sizes[j])
            w[idx[j]] = sol[offs[j] : offs[j + 1]]
            floor = -1e-12 * max(masses[j], 1.0)
            if np.any(w < floor):
                active[j] = active[j] & (w > 0)
                negative = True
            w = np.maximum(w, 0.0)
            s = w.sum()
            if s > 0:
                w *= masses[j] / s
            new_ws.append(w)
        if not negative:
            return new_ws
    return None


def minimize(spec: InteractionSpec, intervals, grid_size: int, tol: float = 1e-10,
             max_iter: int = 100_000, polish: bool = True) -> EquilibriumResult:
    """Minimise the coupled log energy over the product of scaled simplices.

    Conditional gradient: each step moves toward the single-cell vertex
    minimising the gradient field per component, with the exact quadratic
    line search; stops when the relative energy decrease drops below tol or
    the iteration cap is reached.  The optional polish solves the equality
    KKT system on the support found (kept only if feasible and at least as
    good).  The returned gap and Frostman residual are computed from the
    final weights, whichever stage produced them.
    """
    r = spec.r
    if len(intervals) != r:
        raise ValidationError(f"need {r} intervals, got {len(intervals)}")
    if grid_size < 2:
        raise ValidationError("grid_size must be at least 2")
    C = spec.coupling
    meas = [DiscretizedMeasure.uniform_cells(float(a), float(b), grid_size, spec.masses[j])
            for j, (a, b) in enumerate(intervals)]
    grids = [m.grid for m in meas]
    widths = [m.cell_width for m in meas]
    blocks = {}
    for j in range(r):
        for k in range(j, r):
            if j == k or C[j, k] != 0.0:
                blocks[(j, k)] = log_kernel_matrix(grids[j], widths[j], grids[k], widths[k])
    ws = [m.weights.copy() for m in meas]
    masses = list(spec.masses)

    grad = _gradient(blocks, C, ws)
    energy = _energy(blocks, C, ws)
    trace = [energy]
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        mins = [int(np.argmin(g)) for g in grad]
        minvals = [float(g[b]) for g, b in zip(grad, mins)]
        gw = [float(g @ w) for g, w in zip(grad, ws)]
        gap = sum(gw) - sum(m * v for m, v in zip(masses, minvals))
        # quadratic pieces of the segment toward the vertex
        qnv = 0.5 * sum(m * v for m, v in zip(masses, minvals))
        vqv = 0.0
        for j in range(r):
            vqv += masses[j] ** 2 * blocks[(j, j)][mins[j], mins[j]]
            for k in range(j + 1, r):
                if C[j, k] != 0.0:
                    vqv += C[j, k] * masses[j] * masses[k] * blocks[(j, k)][mins[j], mins[k]]
        slope = 2.0 * (qnv - energy)
        qdd = vqv - 2.0 * qnv + energy
        if qdd > 0:
            gamma = min(1.0, max(0.0, -slope / (2.0 * qdd)))
        else:
            gamma = 1.0 if slope < 0 else 0.0
        if gamma == 0.0:
            converged = True
            break
        for j in range(r):
            ws[j] *= 1.0 - gamma
            ws[j][mins[j]] += gamma * masses[j]
        new_energy = (1 - gamma) ** 2 * energy + 2 * gamma * (1 - gamma) * qnv + gamma**2 * vqv
        if it % 512 == 0:
            grad = _gradient(blocks, C, ws)
            new_energy = _energy(blocks, C, ws)
        else:
            for j in range(r):
                col = 2.0 * masses[j] * blocks[(j, j)][:, mins[j]]
                grad[j] = (1 - gamma) * grad[j] + gamma * col
                for k in range(r):
                    if k == j or C[j, k] == 0.0:
                        continue
                    jk = blocks[(j, k)] if (j, k) in blocks else blocks[(k, j)].T
                    grad[j] += gamma * C[j, k] * masses[k] * jk[:, mins[k]]
        rel_drop = (energy - new_energy) / max(1.0, abs(new_energy))
        energy = new_energy
        trace.append(energy)
        if 0 <= rel_drop < tol:
            converged = True
            break

    polished = False
    if polish:
        refined = _polish_active_set(blocks, C, masses, ws)
        if refined is not None:
            e2 = _energy(blocks, C, refined)
            if e2 <= energy + 1e-12 * max(1.0, abs(energy)):
                ws = refined
                energy = e2
                trace.append(energy)
                polished = True

    grad = _gradient(blocks, C, ws)
    mins = [float(np.min(g)) for g in grad]
    gap = sum(float(g @ w) for g, w in zip(grad, ws)) - sum(m * v for m, v in zip(masses, mins))
    frostman = 0.0
    for j in range(r):
        support = ws[j] > 1e-12 * masses[j] / len(ws[j])
        if np.any(support):
            lam = float(grad[j] @ ws[j]) / masses[j]
            dev = float(np.max(np.abs(grad[j][support] - lam)))
            off = max(0.0, lam - mins[j])
            frostman = max(frostman, dev, off)
    out = tuple(
        DiscretizedMeasure(grid=grids[j], weights=ws[j], cell_width=widths[j],
                           interval=meas[j].interval)
        for j in range(r)
    )
    step = max(1, len(trace) // 256)
    return EquilibriumResult(
        measures=out, energy=energy, fw_gap=gap, frostman_residual=frostman,
        iterations=it, converged=converged, polished=polished,
        energy_trace=tuple(trace[::step]) + (energy,),
    )


def limit_measure(omegas: Sequence[DiscretizedMeasure], spec: InteractionSpec, ell_max: int):
    """Moments of the candidate weak limit: the sum of the components, or the
    first component alone under the 'first' rule."""
    if spec.limit_rule == "first":
        return omegas[0].moments(ell_max)
    sums = [0.0] * (ell_max + 1)
    for om in omegas:
        for i, v in enumerate(om.moments(ell_max)):
            sums[i] += v
    return sums
