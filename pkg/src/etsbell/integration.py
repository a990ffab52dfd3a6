"""Quadrature engine for thermal averages and correlation estimates.

Two entry points.  :func:`thermal_average` integrates an arbitrary function of
the sampled mixture variables against their Gaussian weights.  The correlation
estimators exploit the structure of sign-of-x statistics on ± amplitude
lattices: the integrand factorizes over mixture variables, each contributing a
two-axis integral of per-mode 2x2 node matrices, so even four-variable
mixtures reduce to a handful of planar quadratures.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.special import dawsn, erf

from .errors import NonconvergenceError
from .measurement import DetectorModel, PartySetting
from .states import StateFamily, family_structure

_SQRT2 = math.sqrt(2.0)
_SQRT_PI = math.sqrt(math.pi)

# Gauss-Hermite handles the Gaussian-weighted node functions exactly up to
# this axis spread; wider weights need the windowed composite rule because
# the erf and Dawson factors stop resembling polynomials over the support.
_GH_SIGMA_MAX = 1.55
_RANGE_SIGMAS = 8.5
_FINE_ERF_HALFWIDTH = 4.5
_FINE_DAWSON_HALFWIDTH = 5.0
_FINE_PANEL_FRACTION = 0.4
_COMPOSITE_BASE_ORDER = 12
_MAX_AXIS_NODES = 200
_MC_BATCHES = 8
_EVAL_CHUNK = 1 << 20


class Method(enum.Enum):
    """Integration backend selection."""

    GAUSS_HERMITE = "gauss-hermite"
    MONTE_CARLO = "monte-carlo"
    AUTO = "auto"


@dataclass(frozen=True)
class QuadratureConfig:
    """Resolution and tolerance knobs shared by all integration routines.

    ``nodes_per_axis`` seeds the deterministic ladders (refinement may double
    it up to 200 nodes per axis), ``mc_samples`` is the starting Monte Carlo
    budget, and estimates count as converged once the refinement difference
    drops below ``rel_tol`` relative to max(|value|, 1).
    """

    nodes_per_axis: int = 40
    mc_samples: int = 200_000
    mc_seed: int = 20260815
    method: Method = Method.AUTO
    rel_tol: float = 1e-7

    def __post_init__(self):
        if not (1 <= self.nodes_per_axis <= _MAX_AXIS_NODES):
            raise ValueError(
                f"nodes_per_axis must lie in [1, {_MAX_AXIS_NODES}], got {self.nodes_per_axis}")
        if self.mc_samples < _MC_BATCHES:
            raise ValueError(f"mc_samples must be at least {_MC_BATCHES}, got {self.mc_samples}")
        if not (math.isfinite(self.rel_tol) and self.rel_tol > 0.0):
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")


@lru_cache(maxsize=None)
def _gh_rule(n: int):
    return hermgauss(n)


@lru_cache(maxsize=None)
def _gl_rule(n: int):
    return leggauss(n)


def _gauss_axis(mu: float, sigma: float, n: int):
    t, w = _gh_rule(n)
    return mu + _SQRT2 * sigma * t, w / _SQRT_PI


def _composite_axis(mu: float, sigma: float, order: int, smax: float, eta_min: float):
    """Panelled Gauss-Legendre rule with the Gaussian weight folded in.

    Fine panels cover the window around the origin where the erf and Dawson
    node functions vary on the 1/smax scale; panels of width sigma cover the
    rest of the weight's support.
    """
    lo = mu - _RANGE_SIGMAS * sigma
    hi = mu + _RANGE_SIGMAS * sigma
    zf = max(_FINE_ERF_HALFWIDTH / smax,
             _FINE_DAWSON_HALFWIDTH / (_SQRT2 * max(eta_min, 1e-3) * smax))
    fine_lo = max(lo, -zf)
    fine_hi = min(hi, zf)
    fine_width = _FINE_PANEL_FRACTION / smax

    edges: list[float] = [lo]

    def extend(stop: float, width: float):
        start = edges[-1]
        if stop <= start:
            return
        count = max(1, int(math.ceil((stop - start) / width)))
        step = (stop - start) / count
        for k in range(1, count + 1):
            edges.append(start + k * step)

    if fine_hi > fine_lo:
        extend(fine_lo, sigma)
        extend(fine_hi, fine_width)
    extend(hi, sigma)

    t, w = _gl_rule(order)
    xs = []
    ws = []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        xs.append(mid + half * t)
        ws.append(half * w)
    x = np.concatenate(xs)
    weight = np.concatenate(ws)
    density = np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
    return x, weight * density


def _axis_rule(mu: float, sigma: float, smax: float, eta_min: float,
               level: int, config: QuadratureConfig):
    """Refinement ladder for one axis.

    Narrow weights climb three Gauss-Hermite node doublings and then switch
    to the windowed composite rule, which handles integrands the Hermite
    polynomials resolve slowly; wide weights use the composite rule from the
    start with panel-order doubling.
    """
    if sigma == 0.0:
        return np.array([mu]), np.array([1.0])
    if sigma <= _GH_SIGMA_MAX:
        if level <= 2:
            n = min(config.nodes_per_axis * (1 << level), _MAX_AXIS_NODES)
            return _gauss_axis(mu, sigma, n)
        order = _COMPOSITE_BASE_ORDER * (1 << (level - 3))
        return _composite_axis(mu, sigma, order, smax, eta_min)
    order = _COMPOSITE_BASE_ORDER * (1 << min(level, 2))
    return _composite_axis(mu, sigma, order, smax, eta_min)


def _variable_sigma(V: float) -> float:
    return math.sqrt(max(V - 1.0, 0.0) / 4.0)


def _engine_pass(coeffs, signs, variables, matrices, detector: DetectorModel,
                 grids) -> tuple[float, float]:
    """One evaluation of the factorized numerator and denominator.

    ``grids`` supplies (X, Y, W) per variable, either tensor axes for
    deterministic rules or flat sampled pairs for Monte Carlo.  Both the
    rotated product and the bare Gram product accumulate per branch pair;
    their branch-coefficient contractions give the unnormalized correlation
    and the state trace.
    """
    nb = len(coeffs)
    numf = np.ones((nb, nb), dtype=complex)
    denf = np.ones((nb, nb), dtype=complex)

    for (V, _center, scales), (X, Y, W) in zip(variables, grids):
        modes = sorted(scales)
        f_blocks = {}
        g_blocks = {}
        for m in modes:
            s = scales[m]
            eta = detector.eta_for(m)
            sx = s * X
            sy = s * Y
            e = erf(_SQRT2 * eta * sx)
            gauss_x = np.exp(-2.0 * sx ** 2)
            gauss_y = np.exp(-2.0 * sy ** 2)
            o = gauss_x * (1j * (2.0 / _SQRT_PI)
                           * np.exp(-2.0 * (1.0 - eta * eta) * sy ** 2)
                           * dawsn(_SQRT2 * eta * sy))
            ov = gauss_x * gauss_y
            g_blocks[m] = ((1.0, ov), (ov, 1.0))
            mat = matrices[m]
            if mat is None:
                f_blocks[m] = g_blocks[m]
                continue
            d = ((e, -o), (o, -e))
            f_blocks[m] = tuple(
                tuple(
                    sum(mat[b, t] * d[t][tp] * mat[tp, k]
                        for t in (0, 1) for tp in (0, 1))
                    for k in (0, 1))
                for b in (0, 1))

        n_mat = np.empty((nb, nb), dtype=complex)
        g_mat = np.empty((nb, nb), dtype=complex)
        for j in range(nb):
            for i in range(nb):
                prod_f = W
                prod_g = W
                for m in modes:
                    bi = (1 - signs[j][m]) // 2
                    ki = (1 - signs[i][m]) // 2
                    prod_f = prod_f * f_blocks[m][bi][ki]
                    prod_g = prod_g * g_blocks[m][bi][ki]
                n_mat[j, i] = np.sum(prod_f)
                g_mat[j, i] = np.sum(prod_g)
        numf *= n_mat
        denf *= g_mat

    num = 0.0 + 0.0j
    den = 0.0 + 0.0j
    for j in range(nb):
        for i in range(nb):
            w = coeffs[j].conjugate() * coeffs[i]
            num += w * numf[j, i]
            den += w * denf[j, i]
    return num.real, den.real


def _deterministic_grids(variables, detector: DetectorModel, level: int,
                         config: QuadratureConfig):
    grids = []
    for V, center, scales in variables:
        sigma = _variable_sigma(V)
        smax = max(abs(s) for s in scales.values())
        eta_min = min(detector.eta_for(m) for m in scales)
        x, wx = _axis_rule(center, sigma, smax, eta_min, level, config)
        y, wy = _axis_rule(0.0, sigma, smax, eta_min, level, config)
        grids.append((x[:, None], y[None, :], wx[:, None] * wy[None, :]))
    return grids


def _sampled_grids(variables, rng: np.random.Generator, count: int):
    grids = []
    for V, center, _scales in variables:
        sigma = _variable_sigma(V)
        if sigma == 0.0:
            x = np.full(count, center)
            y = np.zeros(count)
        else:
            x = rng.normal(center, sigma, size=count)
            y = rng.normal(0.0, sigma, size=count)
        grids.append((x, y, np.full(count, 1.0 / count)))
    return grids


def _resolve_settings(family: StateFamily, settings: Sequence[PartySetting]):
    if len(settings) != family.num_modes:
        raise ValueError(
            f"family has {family.num_modes} modes but got {len(settings)} settings")
    return [None if s.ignored else s.rotation.matrix for s in settings]


def estimate_correlation(
    family: StateFamily,
    settings: Sequence[PartySetting],
    detector: DetectorModel | None = None,
    config: QuadratureConfig | None = None,
) -> tuple[float, float]:
    """Correlation of outcome signs with a refinement-based error estimate.

    Deterministic quadrature refines the per-axis resolution until two
    successive levels agree to ``rel_tol`` (relative, floored at one, since
    correlations are order one).  The Monte Carlo backend reports the batch
    spread instead and doubles the sample budget up to twice.  Raises
    :class:`NonconvergenceError` when the ladder is exhausted.
    """
    detector = detector or DetectorModel()
    config = config or QuadratureConfig()
    coeffs, signs, variables = family_structure(family)
    matrices = _resolve_settings(family, settings)

    # Every mixture variable contributes an independent planar integral here,
    # so deterministic rules stay affordable at any party count; only an
    # explicit request routes the estimate through sampling.
    if config.method is Method.MONTE_CARLO:
        return _mc_estimate(coeffs, signs, variables, matrices, detector, config)

    # Wide-weight variables are on the composite rule from level 0 and have
    # no levels past 2; narrow ones may still need the composite tail.
    max_level = 2
    for V, _center, _scales in variables:
        sigma = _variable_sigma(V)
        if 0.0 < sigma <= _GH_SIGMA_MAX:
            max_level = 4
            break

    value = math.nan
    err = math.inf
    previous = None
    for level in range(max_level + 1):
        grids = _deterministic_grids(variables, detector, level, config)
        num, den = _engine_pass(coeffs, signs, variables, matrices, detector, grids)
        value = num / den
        if previous is not None:
            err = abs(value - previous)
            if err <= config.rel_tol * max(abs(value), 1.0):
                return value, err
        previous = value
    raise NonconvergenceError(
        f"correlation refinement stalled at {value!r} with error {err:.3g}",
        value=value, err_estimate=err)


def _mc_estimate(coeffs, signs, variables, matrices, detector, config):
    rng = np.random.default_rng(config.mc_seed)
    samples = config.mc_samples
    for _attempt in range(3):
        per_batch = max(1, samples // _MC_BATCHES)
        batch_values = []
        num_total = 0.0
        den_total = 0.0
        for _b in range(_MC_BATCHES):
            grids = _sampled_grids(variables, rng, per_batch)
            num, den = _engine_pass(coeffs, signs, variables, matrices, detector, grids)
            batch_values.append(num / den)
            num_total += num
            den_total += den
        value = num_total / den_total
        err = float(np.std(batch_values, ddof=1) / math.sqrt(_MC_BATCHES))
        if err <= config.rel_tol * max(abs(value), 1.0):
            return value, err
        samples *= 2
    raise NonconvergenceError(
        f"sampling stalled at {value!r} with batch error {err:.3g}",
        value=value, err_estimate=err)


def converged_correlation(
    family: StateFamily,
    settings: Sequence[PartySetting],
    detector: DetectorModel | None = None,
    config: QuadratureConfig | None = None,
) -> float:
    """Correlation of outcome signs, converged to the configured tolerance."""
    value, _err = estimate_correlation(family, settings, detector, config)
    return value


def _evaluate_pointwise(f: Callable, columns, count: int) -> np.ndarray:
    """Evaluate f over sample columns, vectorized when f cooperates."""
    try:
        out = np.asarray(f(tuple(columns)))
        if out.shape == (count,):
            return out.astype(complex)
    except Exception:
        pass
    values = np.empty(count, dtype=complex)
    for k in range(count):
        values[k] = f(tuple(col[k] for col in columns))
    return values


def thermal_average(
    f: Callable[[tuple[complex, ...]], complex],
    variables: Sequence[tuple[float, float]],
    config: QuadratureConfig | None = None,
) -> complex:
    """Average f over the Gaussian mixture variables.

    ``variables`` lists (V, center) pairs; each variable with V > 1 carries an
    isotropic complex Gaussian weight of per-axis variance (V−1)/4 centered on
    the real axis, while V = 1 pins the variable at its center.  ``f``
    receives one complex value per variable (or equal-length arrays when it
    vectorizes).  Auto method uses tensor Gauss-Hermite for up to two free
    variables and sampling beyond that.
    """
    config = config or QuadratureConfig()
    variables = [(float(V), float(center)) for V, center in variables]
    free = [k for k, (V, _c) in enumerate(variables) if _variable_sigma(V) > 0.0]

    if not free:
        point = tuple(complex(center) for _V, center in variables)
        return complex(f(point))

    method = config.method
    if method is Method.AUTO:
        method = Method.GAUSS_HERMITE if len(free) <= 2 else Method.MONTE_CARLO

    if method is Method.GAUSS_HERMITE:
        return _thermal_average_gh(f, variables, free, config)
    return _thermal_average_mc(f, variables, free, config)


def _thermal_average_gh(f, variables, free, config):
    previous = None
    value = None
    err = math.inf
    n = config.nodes_per_axis
    for _level in range(3):
        axes = []
        for k in free:
            V, center = variables[k]
            sigma = _variable_sigma(V)
            axes.append(_gauss_axis(center, sigma, n))
            axes.append(_gauss_axis(0.0, sigma, n))
        shape = tuple(nodes.size for nodes, _w in axes)
        count = int(np.prod(shape))

        # The tensor grid is never materialized; each chunk of flat indices
        # is unraveled into per-axis node positions on demand, so memory
        # stays bounded regardless of how many variables are free.
        total = 0.0 + 0.0j
        for start in range(0, count, _EVAL_CHUNK):
            stop = min(start + _EVAL_CHUNK, count)
            idx = np.unravel_index(np.arange(start, stop), shape)
            weight = np.ones(stop - start)
            columns = []
            pos = 0
            for k, (V, center) in enumerate(variables):
                if k in free:
                    xn, xw = axes[pos]
                    yn, yw = axes[pos + 1]
                    columns.append(xn[idx[pos]] + 1j * yn[idx[pos + 1]])
                    weight = weight * xw[idx[pos]] * yw[idx[pos + 1]]
                    pos += 2
                else:
                    columns.append(np.full(stop - start, complex(center)))
            vals = _evaluate_pointwise(f, columns, stop - start)
            total += np.sum(vals * weight)

        value = complex(total)
        if previous is not None:
            err = abs(value - previous)
            if err <= config.rel_tol * max(abs(value), 1.0):
                return value
        previous = value
        if n >= _MAX_AXIS_NODES:
            break
        n = min(2 * n, _MAX_AXIS_NODES)
    raise NonconvergenceError(
        f"thermal average stalled at {value!r} with error {err:.3g}",
        value=abs(value), err_estimate=err)


def _thermal_average_mc(f, variables, free, config):
    rng = np.random.default_rng(config.mc_seed)
    samples = config.mc_samples
    value = None
    err = math.inf
    for _attempt in range(3):
        per_batch = max(1, samples // _MC_BATCHES)
        batch_means = []
        for _b in range(_MC_BATCHES):
            columns = []
            for k, (V, center) in enumerate(variables):
                sigma = _variable_sigma(V)
                if k in free:
                    xs = rng.normal(center, sigma, size=per_batch)
                    ys = rng.normal(0.0, sigma, size=per_batch)
                    columns.append(xs + 1j * ys)
                else:
                    columns.append(np.full(per_batch, complex(center)))
            vals = _evaluate_pointwise(f, columns, per_batch)
            batch_means.append(complex(np.mean(vals)))
        value = complex(np.mean(batch_means))
        deviations = np.abs(np.array(batch_means) - value)
        err = float(np.sqrt(np.sum(deviations ** 2) / (_MC_BATCHES - 1) / _MC_BATCHES))
        if err <= config.rel_tol * max(abs(value), 1.0):
            return value
        samples *= 2
    raise NonconvergenceError(
        f"thermal average sampling stalled at {value!r} with batch error {err:.3g}",
        value=abs(value), err_estimate=err)
