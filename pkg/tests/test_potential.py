from __future__ import annotations

import numpy as np
import pytest

from cpflow import (
    Background,
    ConfigError,
    MaxIterationsError,
    NoDescentError,
    PackingMetric,
    QuadratureError,
    curvature,
    extended_curvature,
    newton_solve,
    potential_gradient,
    potential_value,
)
from cpflow.packing import UCoords, radii_to_u_array, u_to_radii_array
from cpflow.potential import PotentialContext, _adaptive_simpson, segment_integral

from conftest import random_admissible_metric

HYP = Background.HYPERBOLIC
EUC = Background.EUCLIDEAN


def _u(radii, background=HYP):
    return UCoords(radii_to_u_array(np.asarray(radii, float), background), background)


def _random_u(rng, n, low=0.4, high=2.2):
    return _u(np.exp(rng.uniform(np.log(low), np.log(high), n)))


@pytest.fixture(scope="module")
def ctx_genus2():
    from cpflow import genus2_surface

    complex = genus2_surface()
    rng = np.random.default_rng(99)
    inversive = rng.uniform(0.0, 1.0, complex.edge_count)
    basepoint = _u(np.full(complex.vertex_count, 1.0))
    return PotentialContext(complex, inversive, basepoint)


def test_value_at_basepoint(ctx_genus2):
    assert potential_value(ctx_genus2, ctx_genus2.basepoint) == 0.0


def test_short_segment_matches_riemann_sum(ctx_genus2, rng):
    # refine-and-compare oracle: a dense midpoint sum over the same segment
    n = ctx_genus2.complex.vertex_count
    u_from = _random_u(rng, n)
    direction = rng.normal(0, 0.02, n)
    u_to = UCoords(u_from.values + direction, HYP)
    quad = segment_integral(ctx_genus2, u_from.values, u_to.values)
    ts = (np.arange(2000) + 0.5) / 2000
    total = 0.0
    for t in ts:
        point = u_from.values + t * direction
        k = extended_curvature(
            ctx_genus2.complex,
            PackingMetric(HYP, ctx_genus2.inversive, u_to_radii_array(point, HYP)),
        ).values
        total += float(k @ direction) / 2000
    assert quad == pytest.approx(total, abs=1e-7)


def test_path_independence(ctx_genus2, rng):
    n = ctx_genus2.complex.vertex_count
    for _ in range(5):
        u_a, u_b, u_c = (_random_u(rng, n) for _ in range(3))
        direct = segment_integral(ctx_genus2, u_a.values, u_b.values)
        two_leg = segment_integral(ctx_genus2, u_a.values, u_c.values) + \
            segment_integral(ctx_genus2, u_c.values, u_b.values)
        assert abs(direct - two_leg) <= 1e-8


def test_gradient_is_curvature_minus_target(ctx_genus2, rng):
    n = ctx_genus2.complex.vertex_count
    u = _random_u(rng, n)
    grad = potential_gradient(ctx_genus2, u)
    metric = PackingMetric(HYP, ctx_genus2.inversive, u_to_radii_array(u.values, HYP))
    expected = extended_curvature(ctx_genus2.complex, metric).values
    assert grad == pytest.approx(expected, rel=1e-12)


def test_gradient_matches_finite_differences(ctx_genus2, rng):
    n = ctx_genus2.complex.vertex_count
    u = _random_u(rng, n, 0.7, 1.5)
    grad = potential_gradient(ctx_genus2, u)
    step = 1e-6
    for i in range(0, n, 4):
        up, um = u.values.copy(), u.values.copy()
        up[i] += step
        um[i] -= step
        fd = (
            potential_value(ctx_genus2, UCoords(up, HYP))
            - potential_value(ctx_genus2, UCoords(um, HYP))
        ) / (2 * step)
        assert fd == pytest.approx(grad[i], rel=1e-6, abs=1e-8)


def test_midpoint_convexity(ctx_genus2, rng):
    n = ctx_genus2.complex.vertex_count
    for _ in range(20):
        u_a, u_b = (_random_u(rng, n) for _ in range(2))
        phi_a = potential_value(ctx_genus2, u_a)
        phi_b = potential_value(ctx_genus2, u_b)
        for lam in (0.25, 0.5, 0.75):
            mid = UCoords(lam * u_a.values + (1 - lam) * u_b.values, HYP)
            phi_mid = potential_value(ctx_genus2, mid)
            assert phi_mid <= lam * phi_a + (1 - lam) * phi_b + 1e-8


def test_newton_round_trip(genus2, rng):
    metric = random_admissible_metric(genus2, rng, HYP, (0.5, 2.0), (0.0, 1.0))
    target = curvature(genus2, metric).values
    start = _random_u(rng, genus2.vertex_count)
    ctx = PotentialContext(genus2, metric.inversive, start, target)
    u_star, report = newton_solve(ctx, start, tol=1e-11)
    recovered = u_to_radii_array(u_star.values, HYP)
    assert np.max(np.abs(recovered - metric.radii)) <= 1e-8
    assert report.residual <= 1e-11
    assert report.iterations <= 40


def test_newton_starts_agree(genus2, rng):
    # the realizing metric is unique, so different starts land together
    metric = random_admissible_metric(genus2, rng, HYP, (0.5, 2.0), (0.0, 1.0))
    target = curvature(genus2, metric).values
    solutions = []
    for _ in range(2):
        start = _random_u(rng, genus2.vertex_count)
        ctx = PotentialContext(genus2, metric.inversive, start, target)
        u_star, _ = newton_solve(ctx, start, tol=1e-11)
        solutions.append(u_star.values)
    assert np.max(np.abs(solutions[0] - solutions[1])) <= 1e-7


def test_newton_zero_iterations_at_solution(genus2, rng):
    metric = random_admissible_metric(genus2, rng, HYP, (0.5, 2.0), (0.0, 1.0))
    target = curvature(genus2, metric).values
    from cpflow import to_u

    solution = to_u(metric)
    ctx = PotentialContext(genus2, metric.inversive, solution, target)
    u_star, report = newton_solve(ctx, solution, tol=1e-9)
    assert report.iterations == 0
    assert u_star.values.tolist() == solution.values.tolist()


def test_newton_rejects_bad_configs(genus2):
    n = genus2.vertex_count
    inversive = np.ones(genus2.edge_count)
    u_euclid = UCoords(np.zeros(n), EUC)
    ctx = PotentialContext(genus2, inversive, u_euclid)
    with pytest.raises(ConfigError):
        newton_solve(ctx, u_euclid)
    u_hyp = _u(np.ones(n))
    ctx = PotentialContext(genus2, inversive, u_hyp, np.full(n, 2 * np.pi))
    with pytest.raises(ConfigError):
        newton_solve(ctx, u_hyp)


def test_newton_unreachable_target(genus2):
    # a target below every subset bound cannot be realized; the minimum
    # does not exist and the iterates run toward the boundary
    n = genus2.vertex_count
    inversive = np.ones(genus2.edge_count)
    start = _u(np.full(n, 1.0))
    ctx = PotentialContext(genus2, inversive, start, np.full(n, -10.0))
    with pytest.raises((MaxIterationsError, NoDescentError)) as err:
        newton_solve(ctx, start, tol=1e-10, max_iter=60)

    # the iterates escaped toward the boundary of the u-domain
    last = err.value.last_u
    assert np.linalg.norm(last.values) > 2 * np.linalg.norm(start.values)

    # a zero-curvature metric exists here (tangency packing), so the
    # zero-target potential is proper: it climbs along the escape ray
    # (sampled on the near half of the ray; further out the geometry mixes
    # scales beyond what the quadrature resolves)
    zero_ctx = PotentialContext(genus2, inversive, start)
    direction = last.values - start.values
    values = [
        potential_value(zero_ctx, UCoords(start.values + t * direction, HYP))
        for t in (0.1, 0.2, 0.3, 0.4, 0.5)
    ]
    assert all(b > a for a, b in zip(values, values[1:]))
    assert values[-1] > 2 * max(1.0, values[0])


def test_potential_proper_along_rays(genus2):
    # from the zero-curvature metric the potential increases strictly along
    # every ray toward the domain boundary
    n = genus2.vertex_count
    inversive = np.ones(genus2.edge_count)
    seed = _u(np.full(n, 1.0))
    u_star, _ = newton_solve(PotentialContext(genus2, inversive, seed), seed, tol=1e-12)
    ctx = PotentialContext(genus2, inversive, u_star)

    rng = np.random.default_rng(7)
    for _ in range(10):
        direction = rng.normal(0, 1, n)
        direction /= np.linalg.norm(direction)
        # distance to the boundary u = 0 along this ray (may be infinite)
        positive = direction > 0
        reach = np.min(-u_star.values[positive] / direction[positive]) if positive.any() else np.inf
        if np.isfinite(reach):
            ts = reach * (1.0 - 0.5 ** np.arange(1, 7))
        else:
            ts = 2.0 ** np.arange(0, 6)
        values = [
            potential_value(ctx, UCoords(u_star.values + t * direction, HYP))
            for t in ts
        ]
        assert all(b > a for a, b in zip(values[1:], values[2:]))
        assert values[-1] > values[0] >= 0.0


def test_euclidean_potential_computes(octa, rng):
    metric = random_admissible_metric(octa, rng, EUC, (0.5, 2.0), (0.0, 1.0))
    from cpflow import to_u

    basepoint = to_u(metric)
    ctx = PotentialContext(octa, metric.inversive, basepoint)
    shifted = UCoords(basepoint.values + 0.05, EUC)
    value = potential_value(ctx, shifted)
    grad = potential_gradient(ctx, shifted)
    assert np.isfinite(value)
    assert np.all(np.isfinite(grad))


def test_adaptive_simpson_basics():
    assert _adaptive_simpson(lambda s: s * s, 1e-12) == pytest.approx(1 / 3, abs=1e-12)
    assert _adaptive_simpson(np.cos, 1e-12) == pytest.approx(np.sin(1.0), abs=1e-12)
    # square-root kink converges with the default depth budget
    value = _adaptive_simpson(lambda s: np.sqrt(abs(s - 0.3)), 1e-10)
    exact = (0.3 ** 1.5 + 0.7 ** 1.5) * 2 / 3
    assert value == pytest.approx(exact, abs=1e-9)
    with pytest.raises(QuadratureError):
        _adaptive_simpson(lambda s: np.sqrt(abs(s - 0.3)), 1e-10, max_depth=8)
