"""Correlation engine and thermal averaging against analytic references."""

import math

import numpy as np
import pytest

import qubit_oracle
from etsbell.errors import NonconvergenceError
from etsbell.integration import (
    Method,
    QuadratureConfig,
    converged_correlation,
    estimate_correlation,
    thermal_average,
)
from etsbell.measurement import (
    IGNORE,
    PAULI_ROTATIONS,
    DetectorModel,
    EffectiveRotation,
    PartySetting,
    apply_rotation,
    correlation,
)
from etsbell.oracles import ghz_correlation_closed, gram_decay
from etsbell.states import FamilyKind, StateFamily, make_family

EQUATORIAL = [
    PartySetting(EffectiveRotation(math.pi / 2, g)) for g in (0.3, 1.1, 2.4)
]


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(nodes_per_axis=0)
    with pytest.raises(ValueError):
        QuadratureConfig(nodes_per_axis=500)
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(mc_samples=4)


def test_ghz_matches_closed_form():
    for V, d, eta in ((1.0, 1.0, 1.0), (5.0, 1.5, 1.0), (10.0, 2.0, 0.4),
                      (3.0, 0.7, 0.75)):
        fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, V, d)
        got = converged_correlation(fam, EQUATORIAL, DetectorModel(eta))
        want = ghz_correlation_closed(
            V, d, [s.rotation.phase for s in EQUATORIAL], eta)
        assert got == pytest.approx(want, abs=5e-9), (V, d, eta)


def test_beam_splitter_equals_conditional_at_unit_variance():
    # at V = 1 every mixture variable collapses to its centre, making the
    # rescaled preparation identical to the direct one
    settings = EQUATORIAL
    a = converged_correlation(
        StateFamily(FamilyKind.GHZ3_BEAM_SPLITTER, 1.0, 1.3), settings)
    b = converged_correlation(
        StateFamily(FamilyKind.GHZ3_CONDITIONAL, 1.0, 1.3), settings)
    assert a == pytest.approx(b, abs=1e-12)


def test_engine_matches_spin_oracle_at_large_displacement():
    rng = np.random.default_rng(7)
    states = {
        FamilyKind.GHZ3_CONDITIONAL: qubit_oracle.ghz_state(3),
        FamilyKind.GHZ4_CONDITIONAL: qubit_oracle.ghz_state(4),
        FamilyKind.W3: qubit_oracle.w_state(),
        FamilyKind.CLUSTER4_CONDITIONAL: qubit_oracle.cluster_state(),
    }
    for kind, state in states.items():
        fam = StateFamily(kind, V=10.0, d=40.0)
        pairs = [(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
                 for _ in range(fam.num_modes)]
        settings = [PartySetting(EffectiveRotation(t, g)) for t, g in pairs]
        got = converged_correlation(fam, settings)
        want = qubit_oracle.correlation(state, pairs)
        assert got == pytest.approx(want, abs=1e-9), kind


def test_kerr_phase_shifts_spin_limit():
    # branch coefficients (1, i) turn the GHZ phase sum into sum + pi/2
    rng = np.random.default_rng(11)
    state = np.zeros(8, dtype=complex)
    state[0], state[7] = 1.0, 1.0j
    state /= math.sqrt(2.0)
    fam = StateFamily(FamilyKind.GHZ3_KERR, V=10.0, d=40.0)
    pairs = [(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
             for _ in range(3)]
    settings = [PartySetting(EffectiveRotation(t, g)) for t, g in pairs]
    got = converged_correlation(fam, settings)
    want = qubit_oracle.correlation(state, pairs)
    assert got == pytest.approx(want, abs=1e-9)


def test_ignored_party_marginals():
    fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, 10.0, 40.0)
    z = PartySetting(PAULI_ROTATIONS["z"])
    assert converged_correlation(fam, [z, z, IGNORE]) == pytest.approx(
        1.0, abs=1e-9)
    x = PartySetting(PAULI_ROTATIONS["x"])
    assert converged_correlation(fam, [x, x, IGNORE]) == pytest.approx(
        0.0, abs=1e-9)


def test_zero_displacement_kills_equatorial_correlation():
    fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, 5.0, 0.0)
    assert converged_correlation(fam, EQUATORIAL) == pytest.approx(
        0.0, abs=1e-10)


def test_engine_agrees_with_measurement_layer_when_separated():
    # both normalization conventions coincide once the branches separate
    fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, 1.0, 2.5)
    rotations = [s.rotation for s in EQUATORIAL]
    spec, template = make_family(fam)
    state = template(tuple(c for _V, c in spec.variables))
    det = DetectorModel(0.8)
    direct = correlation(apply_rotation(state, rotations), det)
    engine = converged_correlation(fam, EQUATORIAL, det)
    assert engine == pytest.approx(direct, abs=1e-9)


def test_estimate_is_deterministic():
    fam = StateFamily(FamilyKind.W3, 5.0, 1.2)
    first = estimate_correlation(fam, EQUATORIAL)
    second = estimate_correlation(fam, EQUATORIAL)
    assert first == second


def test_node_doubling_stability():
    fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, 5.0, 1.5)
    coarse = converged_correlation(fam, EQUATORIAL,
                                   config=QuadratureConfig(nodes_per_axis=40))
    fine = converged_correlation(fam, EQUATORIAL,
                                 config=QuadratureConfig(nodes_per_axis=60))
    assert coarse == pytest.approx(fine, abs=1e-8)


def test_uniform_detector_tuple_matches_scalar():
    fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, 5.0, 1.5)
    a = converged_correlation(fam, EQUATORIAL, DetectorModel(0.55))
    b = converged_correlation(fam, EQUATORIAL, DetectorModel((0.55,) * 3))
    assert a == pytest.approx(b, abs=1e-12)


def test_monte_carlo_agrees_with_quadrature():
    for V, d in ((5.0, 1.0), (10.0, 2.0)):
        fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, V, d)
        gh_value, gh_err = estimate_correlation(fam, EQUATORIAL)
        cfg = QuadratureConfig(method=Method.MONTE_CARLO, rel_tol=5e-3,
                               mc_samples=200_000)
        mc_value, mc_err = estimate_correlation(fam, EQUATORIAL, config=cfg)
        assert abs(mc_value - gh_value) <= 3.0 * (mc_err + gh_err + 1e-12)


def test_monte_carlo_is_seeded():
    fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, 5.0, 1.0)
    cfg = QuadratureConfig(method=Method.MONTE_CARLO, rel_tol=5e-3)
    assert estimate_correlation(fam, EQUATORIAL, config=cfg) == \
        estimate_correlation(fam, EQUATORIAL, config=cfg)
    other = QuadratureConfig(method=Method.MONTE_CARLO, rel_tol=5e-3,
                             mc_seed=1)
    assert estimate_correlation(fam, EQUATORIAL, config=other) != \
        estimate_correlation(fam, EQUATORIAL, config=cfg)


def test_nonconvergence_carries_partial_result():
    fam = StateFamily(FamilyKind.GHZ3_CONDITIONAL, 5.0, 1.0)
    cfg = QuadratureConfig(method=Method.MONTE_CARLO, rel_tol=1e-12,
                           mc_samples=1000)
    with pytest.raises(NonconvergenceError) as info:
        estimate_correlation(fam, EQUATORIAL, config=cfg)
    assert info.value.value is not None
    assert info.value.err_estimate is not None
    assert info.value.err_estimate > 0.0


def test_thermal_average_frozen_variables():
    value = thermal_average(lambda z: abs(z[0]) ** 2 + z[1].real,
                            ((1.0, 2.0), (1.0, -0.5)))
    assert value == pytest.approx(3.5)


def test_thermal_average_single_variable_gaussian():
    want = gram_decay(5.0, 1.0)
    value = thermal_average(lambda z: np.exp(-2.0 * np.abs(z[0]) ** 2),
                            ((5.0, 1.0),))
    assert value == pytest.approx(want, abs=1e-12)


def test_thermal_average_scalar_fallback():
    want = gram_decay(5.0, 1.0)
    value = thermal_average(
        lambda z: float(np.exp(-2.0 * abs(complex(z[0])) ** 2)), ((5.0, 1.0),))
    assert value == pytest.approx(want, abs=1e-12)


def test_thermal_average_two_variables():
    want = gram_decay(5.0, 1.0) * gram_decay(3.0, 0.5)
    value = thermal_average(
        lambda z: np.exp(-2.0 * (np.abs(z[0]) ** 2 + np.abs(z[1]) ** 2)),
        ((5.0, 1.0), (3.0, 0.5)))
    assert value == pytest.approx(want, abs=1e-12)


def test_thermal_average_routes_many_variables_to_sampling():
    want = gram_decay(5.0, 1.0) ** 3
    f = lambda z: np.exp(-2.0 * sum(np.abs(v) ** 2 for v in z))
    variables = ((5.0, 1.0),) * 3
    value = thermal_average(f, variables, QuadratureConfig(rel_tol=5e-3))
    assert value == pytest.approx(want, rel=2e-2)
    with pytest.raises(NonconvergenceError):
        thermal_average(f, variables, QuadratureConfig())


def test_thermal_average_forced_tensor_rule_stays_bounded():
    # six tensor axes would be enormous if materialized; the chunked grid
    # keeps this case cheap and Gauss-Hermite is exact on polynomials
    value = thermal_average(
        lambda z: z[0].real * z[1].real * z[2].real,
        ((5.0, 1.0), (5.0, 0.5), (5.0, 2.0)),
        QuadratureConfig(method=Method.GAUSS_HERMITE, nodes_per_axis=8))
    assert value == pytest.approx(1.0, abs=1e-12)
