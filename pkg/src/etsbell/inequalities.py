"""Multipartite Bell functionals, canonical settings and bound checks.

Each inequality is a signed sum of correlation terms.  A term assigns every
party one of its setting indices, or leaves the party out entirely (the
stabilizer-derived four-party functional does this with its second party).
Evaluation plugs any correlator in, so the same tables drive the thermal-state
engine, closed forms and spin-model cross-checks.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import NonconvergenceError, UnsupportedAngleSetError
from .integration import QuadratureConfig, converged_correlation, estimate_correlation
from .measurement import IGNORE, DetectorModel, EffectiveRotation, PartySetting, zx_rotation
from .states import FamilyKind, StateFamily

#: Index tuple entry marking a party an inequality term does not measure.
UNMEASURED = None

TermIndices = tuple[int | None, ...]
AngleSet = tuple[tuple[EffectiveRotation, ...], ...]


@dataclass(frozen=True)
class InequalitySpec:
    """A Bell functional: signed correlation terms plus its two bounds."""

    name: str
    parties: int
    settings_per_party: tuple[int, ...]
    terms: tuple[tuple[int, TermIndices], ...]
    lr_bound: float
    quantum_max: float

    def __post_init__(self):
        if len(self.settings_per_party) != self.parties:
            raise ValueError("settings_per_party must list every party")
        for sign, indices in self.terms:
            if sign not in (-1, 1):
                raise ValueError(f"term sign must be ±1, got {sign}")
            if len(indices) != self.parties:
                raise ValueError("term index tuples must cover every party")
            for p, idx in enumerate(indices):
                if idx is not UNMEASURED and not (0 <= idx < self.settings_per_party[p]):
                    raise ValueError(f"party {p} has no setting {idx}")


def _uniform_terms(parties: int, sign_by_flips: Sequence[int]) -> tuple:
    """All-settings term table with the sign keyed by the count of 1-indices."""
    terms = []
    for indices in itertools.product((0, 1), repeat=parties):
        terms.append((sign_by_flips[sum(indices)], indices))
    return tuple(terms)


MERMIN3 = InequalitySpec(
    name="mermin3",
    parties=3,
    settings_per_party=(2, 2, 2),
    terms=((1, (0, 0, 1)), (1, (0, 1, 0)), (1, (1, 0, 0)), (-1, (1, 1, 1))),
    lr_bound=2.0,
    quantum_max=4.0,
)

SVETLICHNY3 = InequalitySpec(
    name="svetlichny3",
    parties=3,
    settings_per_party=(2, 2, 2),
    terms=(
        (1, (0, 0, 1)), (1, (0, 1, 0)), (1, (1, 0, 0)), (1, (0, 0, 0)),
        (-1, (1, 1, 0)), (-1, (1, 0, 1)), (-1, (0, 1, 1)), (-1, (1, 1, 1)),
    ),
    lr_bound=4.0,
    quantum_max=4.0 * math.sqrt(2.0),
)

SVETLICHNY4 = InequalitySpec(
    name="svetlichny4",
    parties=4,
    settings_per_party=(2, 2, 2, 2),
    terms=(
        (1, (0, 0, 0, 0)), (-1, (1, 0, 0, 0)), (-1, (0, 1, 0, 0)), (-1, (0, 0, 1, 0)),
        (1, (1, 1, 0, 1)), (1, (1, 0, 1, 1)), (1, (0, 1, 1, 1)), (1, (1, 1, 1, 1)),
        (-1, (0, 0, 0, 1)), (-1, (1, 1, 0, 0)), (-1, (1, 0, 1, 0)), (-1, (1, 0, 0, 1)),
        (-1, (0, 1, 1, 0)), (-1, (0, 1, 0, 1)), (-1, (0, 0, 1, 1)), (1, (1, 1, 1, 0)),
    ),
    lr_bound=8.0,
    quantum_max=8.0 * math.sqrt(2.0),
)

WWZB4 = InequalitySpec(
    name="wwzb4",
    parties=4,
    settings_per_party=(2, 2, 2, 2),
    terms=_uniform_terms(4, (1, 1, -1, -1, 1)),
    lr_bound=4.0,
    quantum_max=4.0 * math.sqrt(2.0),
)

SASA = InequalitySpec(
    name="sasa",
    parties=4,
    settings_per_party=(2, 1, 2, 2),
    terms=(
        (1, (0, UNMEASURED, 0, 0)),
        (-1, (0, UNMEASURED, 1, 1)),
        (1, (1, 0, 1, 0)),
        (1, (1, 0, 0, 1)),
    ),
    lr_bound=2.0,
    quantum_max=4.0,
)

INEQUALITIES: dict[str, InequalitySpec] = {
    spec.name: spec for spec in (MERMIN3, SVETLICHNY3, SVETLICHNY4, WWZB4, SASA)
}


def get_inequality(name: str) -> InequalitySpec:
    try:
        return INEQUALITIES[name]
    except KeyError:
        raise ValueError(
            f"unknown inequality {name!r}; choose from {sorted(INEQUALITIES)}") from None


def functional_value(spec: InequalitySpec,
                     correlator: Callable[[TermIndices], float]) -> float:
    """Signed sum Σ sign·correlator(indices) without the closing modulus."""
    return math.fsum(sign * correlator(indices) for sign, indices in spec.terms)


def term_settings(spec: InequalitySpec, angles: AngleSet,
                  indices: TermIndices) -> tuple[PartySetting, ...]:
    """Per-party measurement settings for one term of the functional."""
    if len(angles) != spec.parties:
        raise ValueError(f"expected angle tuples for {spec.parties} parties")
    settings = []
    for p, idx in enumerate(indices):
        if idx is UNMEASURED:
            settings.append(IGNORE)
            continue
        if idx >= len(angles[p]):
            raise ValueError(f"party {p} angle set lacks setting {idx}")
        settings.append(PartySetting(angles[p][idx]))
    return tuple(settings)


def evaluate(
    spec: InequalitySpec,
    family: StateFamily,
    angles: AngleSet,
    detector: DetectorModel | None = None,
    config: QuadratureConfig | None = None,
) -> float:
    """|functional| of the thermal-state family at the given settings."""

    def corr(indices: TermIndices) -> float:
        return converged_correlation(
            family, term_settings(spec, angles, indices), detector, config)

    return abs(functional_value(spec, corr))


def evaluate_with_error(
    spec: InequalitySpec,
    family: StateFamily,
    angles: AngleSet,
    detector: DetectorModel | None = None,
    config: QuadratureConfig | None = None,
) -> tuple[float, float]:
    """|functional| plus the summed per-term error estimates (conservative)."""
    total = 0.0
    err = 0.0
    for sign, indices in spec.terms:
        value, term_err = estimate_correlation(
            family, term_settings(spec, angles, indices), detector, config)
        total += sign * value
        err += term_err
    return abs(total), err


@dataclass(frozen=True)
class CanonicalAngles:
    """A stored angle set together with how it was obtained."""

    angles: AngleSet
    provenance: str


def _equatorial(*phase_pairs: tuple[float, float]) -> AngleSet:
    return tuple(
        (EffectiveRotation(math.pi / 2.0, p0), EffectiveRotation(math.pi / 2.0, p1))
        for p0, p1 in phase_pairs
    )


def _repeated_equatorial(parties: int, p0: float, p1: float) -> AngleSet:
    return _equatorial(*(((p0, p1),) * parties))


_W_THETA_A = math.pi + math.atan(1.0 / math.sqrt(2.0))
_W_THETA_B = 2.0 * math.pi - math.atan(1.0 / math.sqrt(2.0))

_PAULI_X = EffectiveRotation(math.pi / 2.0, 0.0)
_PAULI_Y = EffectiveRotation(math.pi / 2.0, math.pi / 2.0)
_PAULI_Z = EffectiveRotation(math.pi, 0.0)

_SASA_ANGLES: AngleSet = (
    (_PAULI_Z, _PAULI_X),
    (_PAULI_Y,),
    (_PAULI_X, _PAULI_Y),
    (_PAULI_X, _PAULI_Y),
)

_GHZ3_PHASES = ((3.0 * math.pi / 4.0, math.pi / 4.0),
                (math.pi / 2.0, 0.0),
                (0.0, 3.0 * math.pi / 2.0))

_CANONICAL: dict[tuple[str, FamilyKind], CanonicalAngles] = {}


def _register(names, kinds, angles: AngleSet, provenance: str):
    for name in names:
        for kind in kinds:
            _CANONICAL[(name, kind)] = CanonicalAngles(angles, provenance)


_register(
    ("svetlichny3", "mermin3"),
    (FamilyKind.GHZ3_CONDITIONAL, FamilyKind.GHZ3_BEAM_SPLITTER),
    _equatorial(*_GHZ3_PHASES),
    "phase combination maximizing the equatorial closed form",
)
_register(
    ("svetlichny3",),
    (FamilyKind.GHZ3_KERR,),
    _repeated_equatorial(3, math.pi / 12.0, 7.0 * math.pi / 12.0),
    "numerical optimization",
)
_register(
    ("svetlichny3",),
    (FamilyKind.W3,),
    tuple((zx_rotation(_W_THETA_A), zx_rotation(_W_THETA_B)) for _ in range(3)),
    "zx-plane spin optimum mapped to effective rotations",
)
_register(
    ("svetlichny4",),
    (FamilyKind.GHZ4_CONDITIONAL,),
    _repeated_equatorial(4, 31.0 * math.pi / 16.0, 23.0 * math.pi / 16.0),
    "numerical optimization",
)
_register(
    ("wwzb4",),
    (FamilyKind.CLUSTER4_CONDITIONAL, FamilyKind.CLUSTER4_CROSS_KERR),
    _repeated_equatorial(4, 3.0 * math.pi / 16.0, 11.0 * math.pi / 16.0),
    "uniform phase pair saturating the functional",
)
_register(
    ("sasa",),
    (FamilyKind.CLUSTER4_CONDITIONAL, FamilyKind.CLUSTER4_CROSS_KERR),
    _SASA_ANGLES,
    "stabilizer readouts",
)


def canonical_angles(inequality: str | InequalitySpec,
                     kind: FamilyKind) -> CanonicalAngles:
    """Stored angle set for an inequality/family pair.

    Raises :class:`UnsupportedAngleSetError` when no set is on file; the
    optimizer covers those combinations.
    """
    name = inequality if isinstance(inequality, str) else inequality.name
    try:
        return _CANONICAL[(name, kind)]
    except KeyError:
        raise UnsupportedAngleSetError(
            f"no canonical angles for inequality {name!r} on family {kind.value!r}")


def worker_limit(task_count: int) -> int:
    """Worker count for parallel evaluation, capped by ETS_THREADS."""
    limit = os.cpu_count() or 1
    env = os.environ.get("ETS_THREADS")
    if env:
        try:
            limit = max(1, int(env))
        except ValueError:
            raise ValueError(f"ETS_THREADS must be an integer, got {env!r}") from None
    return max(1, min(limit, task_count))


@dataclass(frozen=True)
class OptimizationResult:
    """Best functional value found and the settings achieving it."""

    value: float
    angles: AngleSet
    start_index: int
    provenance: str = "optimizer"


def _angles_from_vector(spec: InequalitySpec, x: np.ndarray) -> AngleSet:
    angles = []
    pos = 0
    for count in spec.settings_per_party:
        party = []
        for _ in range(count):
            party.append(EffectiveRotation(float(x[pos]), float(x[pos + 1])))
            pos += 2
        angles.append(tuple(party))
    return tuple(angles)


def _vector_from_angles(spec: InequalitySpec, angles: AngleSet) -> np.ndarray:
    flat = []
    for party in angles:
        for rotation in party:
            flat.extend((rotation.theta, rotation.phase))
    return np.array(flat)


def optimize_angles(
    spec: InequalitySpec,
    family: StateFamily,
    detector: DetectorModel | None = None,
    config: QuadratureConfig | None = None,
    restarts: int = 20,
    seed: int = 20260815,
) -> OptimizationResult:
    """Maximize |functional| over all measurement angles with Nelder-Mead.

    Restart 0 is seeded from the canonical angle set when one exists; the
    remaining starts draw uniformly from [0, 2π).  Restarts run concurrently
    (bounded by ETS_THREADS) and ties resolve to the lowest start index so
    results stay reproducible.
    """
    if config is None:
        config = QuadratureConfig(rel_tol=1e-5)
    nparams = 2 * sum(spec.settings_per_party)
    rng = np.random.default_rng(seed)
    starts = [rng.uniform(0.0, 2.0 * math.pi, size=nparams) for _ in range(restarts)]
    try:
        canonical = canonical_angles(spec, family.kind)
        starts[0] = _vector_from_angles(spec, canonical.angles)
    except UnsupportedAngleSetError:
        pass

    def objective(x: np.ndarray) -> float:
        angles = _angles_from_vector(spec, x)
        try:
            return -evaluate(spec, family, angles, detector, config)
        except NonconvergenceError:
            return 0.0

    def solve(start: np.ndarray):
        result = minimize(
            objective, start, method="Nelder-Mead",
            options={"xatol": 1e-3, "fatol": 1e-7, "maxiter": 150 * nparams})
        return -float(result.fun), result.x

    workers = worker_limit(len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(solve, starts))
    else:
        outcomes = [solve(s) for s in starts]

    best_index = 0
    best_value, best_x = outcomes[0]
    for index, (value, x) in enumerate(outcomes[1:], start=1):
        if value > best_value:
            best_index = index
            best_value, best_x = value, x
    return OptimizationResult(
        value=best_value,
        angles=_angles_from_vector(spec, best_x),
        start_index=best_index,
    )


def deterministic_bound(spec: InequalitySpec,
                        terms: Sequence[tuple[int, TermIndices]] | None = None) -> float:
    """Exhaustive maximum of |functional| over local deterministic models.

    Every party assigns a fixed ±1 outcome to each of its settings; parties a
    term leaves unmeasured contribute a factor of one.
    """
    terms = tuple(terms) if terms is not None else spec.terms
    per_party = [
        list(itertools.product((1, -1), repeat=count))
        for count in spec.settings_per_party
    ]
    best = 0.0
    for assignment in itertools.product(*per_party):
        total = 0
        for sign, indices in terms:
            prod = sign
            for p, idx in enumerate(indices):
                if idx is not UNMEASURED:
                    prod *= assignment[p][idx]
            total += prod
        best = max(best, abs(total))
    return float(best)


def hybrid_partition_bound(spec: InequalitySpec,
                           terms: Sequence[tuple[int, TermIndices]] | None = None) -> float:
    """Exhaustive maximum over two-group models with arbitrary in-group strategies.

    Parties split into two nonempty groups; each group's joint outcome is an
    arbitrary ±1 function of the group's joint settings.  This is the bound a
    genuine-multipartite test must beat.  Terms must measure every party.
    """
    terms = tuple(terms) if terms is not None else spec.terms
    for _sign, indices in terms:
        if UNMEASURED in indices:
            raise ValueError("partition bounds need every party measured in every term")
    n = spec.parties
    best = 0.0
    for mask in range(1, 1 << n):
        if not mask & 1 or mask == (1 << n) - 1:
            continue
        group_a = [p for p in range(n) if mask >> p & 1]
        group_b = [p for p in range(n) if not mask >> p & 1]
        combos_a = list(itertools.product(*(range(spec.settings_per_party[p]) for p in group_a)))
        combos_b = list(itertools.product(*(range(spec.settings_per_party[p]) for p in group_b)))
        index_a = {c: k for k, c in enumerate(combos_a)}
        index_b = {c: k for k, c in enumerate(combos_b)}
        term_keys = [
            (sign,
             index_a[tuple(indices[p] for p in group_a)],
             index_b[tuple(indices[p] for p in group_b)])
            for sign, indices in terms
        ]
        for f_a in itertools.product((1, -1), repeat=len(combos_a)):
            for f_b in itertools.product((1, -1), repeat=len(combos_b)):
                total = 0
                for sign, ka, kb in term_keys:
                    total += sign * f_a[ka] * f_b[kb]
                best = max(best, abs(total))
    return float(best)


def verify_lr_bound(spec: InequalitySpec, flip_term: int | None = None) -> bool:
    """Check the stored local bound by exhaustive enumeration.

    Svetlichny functionals bound two-group hybrid models, the others bound
    fully local ones.  ``flip_term`` negates one term's sign first, the
    mutation hook used to prove the check can fail.
    """
    terms = list(spec.terms)
    if flip_term is not None:
        sign, indices = terms[flip_term]
        terms[flip_term] = (-sign, indices)
    if spec.name.startswith("svetlichny"):
        bound = hybrid_partition_bound(spec, terms)
    else:
        bound = deterministic_bound(spec, terms)
    return bound == spec.lr_bound
