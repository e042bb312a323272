import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from landscape_lab import TOL
from landscape_lab import classical as C
from landscape_lab.controls import FrozenControl, KrausControl, StochasticControl
from landscape_lab.errors import RegimeMismatch, SingularState
from landscape_lab.objectives import (
    ObjectiveSpec,
    evaluate,
    finite_difference_gradient,
    gradient_controls,
    gradient_state,
    state_gradient_array,
    tangent_projection,
    value_and_gradient,
    value_array,
)
from landscape_lab.quantum import (
    SIGMA_Z,
    DensityMatrix,
    Observable,
    free_energy_optimum,
    gibbs_state,
    maximally_mixed,
    random_density,
    random_hermitian,
)

seeds = st.integers(0, 2**32 - 1)


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


# -- spec ---------------------------------------------------------------------


def test_spec_validation():
    ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    with pytest.raises(ValueError):
        ObjectiveSpec("quantum", "typeTwo", SIGMA_Z)
    with pytest.raises(ValueError):
        ObjectiveSpec("quantum", "typeOne", SIGMA_Z, temperature=1.0)
    with pytest.raises(ValueError):
        ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, temperature=-1.0)
    with pytest.raises(ValueError):
        ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, temperature=1.0, entropy="renyi")
    with pytest.raises(ValueError):
        ObjectiveSpec("plasma", "typeOne", SIGMA_Z)
    assert ObjectiveSpec("classical", "typeTwo", [1, 2], 1.0).entropy == "shannon"
    assert ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0).entropy == "vonNeumann"


def test_spec_json_round_trip():
    spec = ObjectiveSpec("quantum", "typeTwo", random_hermitian(np.random.default_rng(0), 3), 0.7, "tsallis:2")
    back = ObjectiveSpec.from_json(spec.to_json())
    assert back.to_json() == spec.to_json()
    cspec = ObjectiveSpec("classical", "typeOne", C.random_function([1.0, 2.0], ["a", "b"]))
    assert ObjectiveSpec.from_json(cspec.to_json()).observable.space.labels == ("a", "b")


# -- evaluate -------------------------------------------------------------------


def test_evaluate_examples():
    spec1 = ObjectiveSpec("quantum", "typeOne", np.diag([1.0, -1.0]))
    assert evaluate(spec1, np.diag([1.0, 0.0])) == pytest.approx(1.0)
    spec2 = ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0)
    expected = np.log(np.e + np.exp(-1))
    assert expected == pytest.approx(1.126928, abs=1e-6)
    assert evaluate(spec2, gibbs_state(Observable(SIGMA_Z), 1.0)) == pytest.approx(expected, abs=1e-12)
    cspec = ObjectiveSpec("classical", "typeTwo", [2.0, 2.0, 2.0], 0.5)
    assert evaluate(cspec, C.uniform(3)) == pytest.approx(-2.0 + 0.5 * np.log(3))
    assert evaluate(cspec, C.distribution([0.5, 0.5, 0.0])) < evaluate(cspec, C.uniform(3))


def test_regime_mismatch():
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    with pytest.raises(RegimeMismatch):
        evaluate(spec, C.uniform(2))
    with pytest.raises(RegimeMismatch):
        evaluate(spec, maximally_mixed(3))
    cspec = ObjectiveSpec("classical", "typeOne", [1.0, 2.0])
    with pytest.raises(RegimeMismatch):
        evaluate(cspec, maximally_mixed(2))
    with pytest.raises(RegimeMismatch):
        evaluate(cspec, C.uniform(3))


@given(seeds, st.integers(2, 5))
def test_linearity_and_bounds(seed, n):
    rng = np.random.default_rng(seed)
    o = random_hermitian(rng, n)
    spec = ObjectiveSpec("quantum", "typeOne", o)
    a, b = random_density(rng, n, 2)
    lam = rng.uniform()
    mixed = value_array(spec, (1 - lam) * a + lam * b)
    assert abs(mixed - (1 - lam) * value_array(spec, a) - lam * value_array(spec, b)) <= 1e-10
    assert value_array(spec, a) <= np.linalg.eigvalsh(o)[-1] + 1e-10
    t = rng.uniform(0.1, 3)
    spec2 = ObjectiveSpec("quantum", "typeTwo", o, t)
    assert value_array(spec2, a) <= free_energy_optimum(o, t) + 1e-9


@given(seeds, st.integers(2, 8))
def test_classical_bounds(seed, m):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m)
    d = C.random_distribution(rng, m)
    assert value_array(ObjectiveSpec("classical", "typeOne", v), d) <= v.max() + 1e-10
    t = rng.uniform(0.1, 3)
    bound = -v.min() + t * np.log(np.sum(np.exp(-(v - v.min()) / t)))
    assert value_array(ObjectiveSpec("classical", "typeTwo", v, t), d) <= bound + 1e-9


def test_concavity_many_triples():
    rng = np.random.default_rng(1)
    cases = [
        ("quantum", random_hermitian(rng, 3), "vonNeumann"),
        ("quantum", random_hermitian(rng, 3), "tsallis:2"),
        ("classical", rng.standard_normal(5), "shannon"),
        ("classical", rng.standard_normal(5), "tsallis:2"),
    ]
    for regime, obs, ent in cases:
        spec = ObjectiveSpec(regime, "typeTwo", obs, 0.8, ent)
        n = spec.dim
        if regime == "quantum":
            a, b = random_density(rng, n, 10_000), random_density(rng, n, 10_000)
            lam = rng.uniform(size=10_000)
            mix = (1 - lam)[:, None, None] * a + lam[:, None, None] * b
        else:
            a, b = C.random_distribution(rng, n, 10_000), C.random_distribution(rng, n, 10_000)
            lam = rng.uniform(size=10_000)
            mix = (1 - lam)[:, None] * a + lam[:, None] * b
        margin = value_array(spec, mix) - (1 - lam) * value_array(spec, a) - lam * value_array(spec, b)
        assert margin.min() >= -TOL.property_slack


# -- state gradients -------------------------------------------------------------


def test_type_one_gradient_is_observable():
    o = random_hermitian(np.random.default_rng(2), 3)
    spec = ObjectiveSpec("quantum", "typeOne", o)
    np.testing.assert_array_equal(gradient_state(spec, random_density(np.random.default_rng(3), 3)), o)


def test_gibbs_gradient_is_proportional_to_identity():
    o = random_hermitian(np.random.default_rng(4), 3)
    t = 0.7
    spec = ObjectiveSpec("quantum", "typeTwo", o, t)
    g = gradient_state(spec, gibbs_state(Observable(o), t))
    ln_z = free_energy_optimum(o, t) / t
    np.testing.assert_allclose(g, (t * ln_z - t) * np.eye(3), atol=1e-9)
    assert np.max(np.abs(tangent_projection(spec, g))) <= 1e-9


def test_classical_uniform_with_constant_observable():
    spec = ObjectiveSpec("classical", "typeTwo", [1.5] * 4, 2.0)
    g = gradient_state(spec, C.uniform(4))
    assert np.max(np.abs(tangent_projection(spec, g))) <= 1e-12


def test_singular_state_and_regularisation():
    spec = ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0)
    pure = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(SingularState):
        gradient_state(spec, pure)
    g, reg = state_gradient_array(spec, pure)
    assert reg and np.all(np.isfinite(g))
    # the Tsallis q = 2 gradient is finite on the boundary and needs no floor
    spec_t = ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0, "tsallis:2")
    np.testing.assert_allclose(gradient_state(spec_t, pure), -SIGMA_Z + np.diag([-2.0, 0.0]))
    cspec = ObjectiveSpec("classical", "typeTwo", [0.0, 1.0], 1.0)
    with pytest.raises(SingularState):
        gradient_state(cspec, C.point_mass(2, 0))


@pytest.mark.parametrize(
    "regime,entropy", [("quantum", "vonNeumann"), ("quantum", "tsallis:2"), ("quantum", "tsallis:0.5"),
                       ("classical", "shannon"), ("classical", "tsallis:3")]
)
def test_state_gradient_against_tangent_differences(regime, entropy):
    rng = np.random.default_rng(5)
    n = 3
    obs = random_hermitian(rng, n) if regime == "quantum" else rng.standard_normal(n)
    spec = ObjectiveSpec(regime, "typeTwo", obs, 0.9, entropy)
    s = random_density(rng, n) if regime == "quantum" else C.random_distribution(rng, n)
    g = gradient_state(spec, s)
    scale = np.linalg.norm(tangent_projection(spec, g))
    h = 1e-5
    for _ in range(20):
        if regime == "quantum":
            d = random_hermitian(rng, n)
            d -= np.trace(d) / n * np.eye(n)
            d /= np.linalg.norm(d)
            exact = np.sum(g.conj() * d).real
        else:
            d = rng.standard_normal(n)
            d -= d.mean()
            d /= np.linalg.norm(d)
            exact = g @ d
        fd = (value_array(spec, s + h * d) - value_array(spec, s - h * d)) / (2 * h)
        # error measured relative to the size of the tangential gradient
        assert abs(fd - exact) <= 1e-5 * scale


# -- control gradients ---------------------------------------------------------------


def test_frozen_map_has_zero_gradient():
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    cmap = FrozenControl(maximally_mixed(2), 4)
    np.testing.assert_array_equal(gradient_controls(spec, cmap, np.ones(4)), 0.0)
    np.testing.assert_allclose(gradient_controls(spec, cmap, np.ones(4), method="fd"), 0.0)


def test_gradient_vanishes_at_projector_channel():
    o = random_hermitian(np.random.default_rng(6), 3)
    w, v = np.linalg.eigh(o)
    cmap = KrausControl(3, 9)
    params = cmap.projector_params(v[:, -1])
    spec = ObjectiveSpec("quantum", "typeOne", o)
    assert evaluate(spec, cmap.state(params)) == pytest.approx(w[-1], abs=1e-12)
    assert np.linalg.norm(gradient_controls(spec, cmap, params)) <= 1e-6
    assert np.linalg.norm(gradient_controls(spec, cmap, params, method="fd")) <= 1e-6


def test_step_halving_self_consistency():
    rng = np.random.default_rng(7)
    spec = ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0)
    cmap = KrausControl(2, 4)
    x = cmap.sample(rng)
    g1 = gradient_controls(spec, cmap, x, method="fd", h=1e-5)
    g2 = gradient_controls(spec, cmap, x, method="fd", h=5e-6)
    assert rel_err(g1, g2) <= 1e-4


def make_cases(rng):
    cases = []
    for n in (2, 3):
        o = random_hermitian(rng, n)
        cases.append((ObjectiveSpec("quantum", "typeOne", o), KrausControl(n, n * n)))
        cases.append((ObjectiveSpec("quantum", "typeTwo", o, 0.8), KrausControl(n, n)))
        rho_i = DensityMatrix(random_density(rng, n))
        cases.append((ObjectiveSpec("quantum", "typeTwo", o, 1.3, "tsallis:2"), KrausControl(n, 2, rho_i)))
    for m in (3, 5):
        v = rng.standard_normal(m)
        d = C.distribution(C.random_distribution(rng, m))
        cases.append((ObjectiveSpec("classical", "typeOne", v), StochasticControl(m, d)))
        cases.append((ObjectiveSpec("classical", "typeTwo", v, 0.6), StochasticControl(m)))
        cases.append((ObjectiveSpec("classical", "typeTwo", v, 0.6), StochasticControl(m, d, "softmax")))
    return cases


def test_analytic_control_gradients_match_finite_differences():
    rng = np.random.default_rng(8)
    for spec, cmap in make_cases(rng):
        for _ in range(5):
            x = cmap.sample(rng)
            exact = gradient_controls(spec, cmap, x, method="analytic")
            fd = gradient_controls(spec, cmap, x, method="fd")
            assert rel_err(exact, fd) <= 1e-5, (spec.to_json()["kind"], type(cmap).__name__)


def test_batched_value_and_gradient():
    rng = np.random.default_rng(9)
    spec = ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0)
    cmap = KrausControl(2, 2)
    xs = np.array([cmap.sample(rng) for _ in range(4)])
    vals, grads, reg, errors = value_and_gradient(spec, cmap, xs)
    assert errors == [None] * 4 and not reg.any()
    for k in range(4):
        assert vals[k] == pytest.approx(evaluate(spec, cmap.state(xs[k])))
        np.testing.assert_allclose(grads[k], gradient_controls(spec, cmap, xs[k]))
    # a rank-deficient row fails on its own without poisoning the batch
    xs[1] = 0.0
    vals, grads, reg, errors = value_and_gradient(spec, cmap, xs)
    assert np.isnan(vals[1]) and errors[1] and all(errors[k] is None for k in (0, 2, 3))


def test_finite_difference_helper():
    g = finite_difference_gradient(lambda x: x[0] ** 2 + 3 * x[1], np.array([2.0, 1.0]))
    np.testing.assert_allclose(g, [4.0, 3.0], atol=1e-8)
