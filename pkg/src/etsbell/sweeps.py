"""Grid sweeps of Bell functionals over (V, d, η) and crossing searches.

Grid points evaluate concurrently against the immutable plan; results are
assembled serially in grid order so a sweep is a pure function of its plan.
A point that fails to converge is recorded and skipped, never fatal.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .errors import NoCrossingError, NonconvergenceError
from .inequalities import (AngleSet, InequalitySpec, canonical_angles,
                           evaluate_with_error, optimize_angles, worker_limit)
from .integration import QuadratureConfig
from .measurement import DetectorModel
from .states import FamilyKind, StateFamily


def _validated_grid(name: str, values: Sequence[float], lower: float,
                    upper: float | None = None) -> tuple[float, ...]:
    grid = tuple(float(v) for v in values)
    if not grid:
        raise ValueError(f"{name} grid must be nonempty")
    for v in grid:
        if v < lower or (upper is not None and v > upper):
            raise ValueError(f"{name} value {v} out of range")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"{name} grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class SweepPlan:
    """A functional, a family and the grids to scan it over."""

    family: FamilyKind
    spec: InequalitySpec
    V_grid: tuple[float, ...]
    d_grid: tuple[float, ...]
    eta_grid: tuple[float, ...] = (1.0,)
    angles: AngleSet | str = "canonical"
    cfg: QuadratureConfig = field(default_factory=QuadratureConfig)
    optimizer_restarts: int = 4
    optimizer_seed: int = 20260815

    def __post_init__(self):
        object.__setattr__(self, "V_grid", _validated_grid("V", self.V_grid, 1.0))
        object.__setattr__(self, "d_grid", _validated_grid("d", self.d_grid, 0.0))
        object.__setattr__(self, "eta_grid", _validated_grid("eta", self.eta_grid, 0.0, 1.0))
        if any(eta <= 0.0 for eta in self.eta_grid):
            raise ValueError("eta values must be positive")
        if isinstance(self.angles, str) and self.angles not in ("canonical", "optimize"):
            raise ValueError(
                f"angles must be an angle set, 'canonical' or 'optimize', got {self.angles!r}")


@dataclass(frozen=True)
class SweepRow:
    """One grid point: the functional value, its error and the verdict."""

    V: float
    d: float
    eta: float
    value: float
    err: float
    violated: bool
    failed: bool
    angles_used: AngleSet
    provenance: str


@dataclass(frozen=True)
class SweepResult:
    plan: SweepPlan
    rows: tuple[SweepRow, ...]


def _resolve_angles(plan: SweepPlan) -> dict[tuple[float, float], tuple[AngleSet, str]]:
    """Angle set per (V, eta) cell.

    Canonical and explicit sets are shared across the grid.  Optimization runs
    once per (V, eta) at the largest displacement of the plan, where the
    functional sits on its plateau, and the result is reused along d.
    """
    if not isinstance(plan.angles, str):
        shared = (tuple(tuple(p) for p in plan.angles), "explicit")
        return {(V, eta): shared for V in plan.V_grid for eta in plan.eta_grid}
    if plan.angles == "canonical":
        stored = canonical_angles(plan.spec, plan.family)
        shared = (stored.angles, stored.provenance)
        return {(V, eta): shared for V in plan.V_grid for eta in plan.eta_grid}

    resolved = {}
    d_ref = plan.d_grid[-1]
    for V in plan.V_grid:
        for eta in plan.eta_grid:
            found = optimize_angles(
                plan.spec, StateFamily(plan.family, V=V, d=d_ref),
                detector=DetectorModel(eta),
                restarts=plan.optimizer_restarts, seed=plan.optimizer_seed)
            resolved[(V, eta)] = (found.angles, found.provenance)
    return resolved


def run_sweep(plan: SweepPlan) -> SweepResult:
    """Evaluate the plan's functional at every grid point.

    Rows come back ordered lexicographically by (V, d, eta).  Nonconvergent
    points carry NaN values and the failed flag; every other row is exact to
    its error estimate and marks violation only when the value clears the
    local bound by more than that error.
    """
    angle_map = _resolve_angles(plan)
    points = [(V, d, eta)
              for V in plan.V_grid for d in plan.d_grid for eta in plan.eta_grid]

    def solve(point: tuple[float, float, float]) -> SweepRow:
        V, d, eta = point
        angles, provenance = angle_map[(V, eta)]
        family = StateFamily(plan.family, V=V, d=d)
        detector = DetectorModel(eta)
        try:
            value, err = evaluate_with_error(plan.spec, family, angles, detector, plan.cfg)
        except NonconvergenceError:
            return SweepRow(V=V, d=d, eta=eta, value=math.nan, err=math.nan,
                            violated=False, failed=True,
                            angles_used=angles, provenance=provenance)
        return SweepRow(V=V, d=d, eta=eta, value=value, err=err,
                        violated=value > plan.spec.lr_bound + err, failed=False,
                        angles_used=angles, provenance=provenance)

    workers = worker_limit(len(points))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(solve, points))
    else:
        rows = tuple(solve(p) for p in points)
    return SweepResult(plan=plan, rows=rows)


def crossing_displacement(
    family: FamilyKind,
    spec: InequalitySpec,
    V: float,
    eta: float,
    cfg: QuadratureConfig | None = None,
    angles: AngleSet | str = "canonical",
    d_max: float | None = None,
) -> float:
    """Smallest displacement at which the functional reaches its local bound.

    Bisection to absolute tolerance 10⁻³ on d ∈ [0, 20√V] after checking that
    the sampled profile increases with d.  Raises :class:`NoCrossingError`
    when the bound is never reached on that interval.
    """
    if isinstance(angles, str):
        if angles != "canonical":
            raise ValueError("crossing search supports explicit or canonical angles")
        angles = canonical_angles(spec, family).angles
    detector = DetectorModel(eta)

    def measure(d: float) -> tuple[float, float]:
        return evaluate_with_error(
            spec, StateFamily(family, V=V, d=d), angles, detector, cfg)

    hi = d_max if d_max is not None else 20.0 * math.sqrt(V)
    probes = [hi * k / 8.0 for k in range(9)]
    sampled = [measure(d) for d in probes]
    for (va, ea), (vb, eb) in zip(sampled, sampled[1:]):
        if vb < va - 3.0 * (ea + eb) - 1e-9:
            raise NoCrossingError(
                f"functional is not increasing in d on [0, {hi:.3g}]; "
                "bisection would be unreliable")

    bracket = None
    for k, (value, err) in enumerate(sampled):
        if value - spec.lr_bound > 0.0:
            if k == 0:
                return 0.0
            bracket = (probes[k - 1], probes[k])
            break
    if bracket is None:
        raise NoCrossingError(
            f"functional stays below the bound {spec.lr_bound} up to d = {hi:.3g}")

    lo, up = bracket
    while up - lo > 1e-3:
        mid = 0.5 * (lo + up)
        value, _err = measure(mid)
        if value - spec.lr_bound > 0.0:
            up = mid
        else:
            lo = mid
    return 0.5 * (lo + up)
