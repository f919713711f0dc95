import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lawson_sde.model import (
    LinearInvariant,
    LinearMap,
    MergedMap,
    QuadraticInvariant,
    SplitSde,
    SplittingMode,
    ZeroMap,
    evaluate_invariant,
    resplit,
    validate_commutativity,
    validate_linear_assumptions,
    validate_quadratic_assumptions,
)
from lawson_sde.problems import (
    FputParams,
    KuboParams,
    RigidBodyParams,
    build_fput,
    build_kubo,
    build_rigid_body,
)

BENCHMARKS = [
    build_kubo(KuboParams.example()),
    build_rigid_body(RigidBodyParams(10.0, 10.0)),
    build_fput(FputParams()),
]


def test_split_sde_validates_shapes():
    with pytest.raises(ValueError):
        SplitSde([np.eye(2)], [ZeroMap(), ZeroMap()], [1.0, 0.0])
    with pytest.raises(ValueError):
        SplitSde([np.eye(3)], [ZeroMap()], [1.0, 0.0])
    with pytest.raises(ValueError):
        SplitSde([], [], [1.0])
    p = SplitSde([np.eye(2), np.zeros((2, 2))], [ZeroMap(), ZeroMap()], [1.0, 2.0])
    assert (p.d, p.M) == (2, 1)
    with pytest.raises(ValueError):
        p.x0[0] = 3.0
    assert p.with_initial([0.0, 1.0]).x0.tolist() == [0.0, 1.0]


@pytest.mark.parametrize("p", BENCHMARKS, ids=lambda p: p.name)
@pytest.mark.parametrize("mode", list(SplittingMode))
def test_resplit_keeps_vector_field(p, mode, rng):
    q = resplit(p, mode)
    for _ in range(100):
        x = rng.uniform(-2, 2, size=p.d)
        for m in range(p.M + 1):
            before, after = p.field(m, x), q.field(m, x)
            scale = max(np.abs(before).max(), 1e-300)
            assert np.abs(before - after).max() <= 1e-15 * scale


def test_resplit_moves_the_right_parts():
    p = build_rigid_body(RigidBodyParams(2.0, 3.0))
    assert resplit(p, SplittingMode.FULL) is p
    drift = resplit(p, SplittingMode.DRIFT_ONLY)
    assert drift.A[0].any() and not drift.A[1].any()
    assert isinstance(drift.g[1], LinearMap) and drift.g[0] is p.g[0]
    none = resplit(p, SplittingMode.NONE)
    assert not any(a.any() for a in none.A)
    assert isinstance(none.g[0], MergedMap)


def test_resplit_leaves_zero_channels_alone():
    p = build_kubo(KuboParams.example())
    q = resplit(p, SplittingMode.NONE)
    assert isinstance(q.g[1], LinearMap)  # sigma S, g_1 = 0
    assert q.g[2] is p.g[2]  # omega_2 = 0: nothing to fold


@pytest.mark.parametrize("p", BENCHMARKS, ids=lambda p: p.name)
def test_benchmarks_commute(p):
    rep = validate_commutativity(p, 1e-12)
    assert rep.passed and rep.max_residual <= 1e-12


def test_commutativity_reports_failing_pairs():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    p = SplitSde([A, A.T, A], [ZeroMap()] * 3, [1.0, 0.0])
    rep = validate_commutativity(p)
    assert not rep.passed
    assert rep.failing_pairs == [(0, 1), (1, 2)]
    assert rep.max_residual == 1.0


@pytest.mark.parametrize("p", BENCHMARKS[:2], ids=lambda p: p.name)
def test_quadratic_assumptions_hold_on_benchmarks(p):
    rep = validate_quadratic_assumptions(p, np.eye(p.d))
    assert rep.passed, rep.lines()


def test_quadratic_assumptions_flag_violations():
    p = build_fput(FputParams())
    rep = validate_quadratic_assumptions(p, np.eye(12))
    assert not rep.passed
    assert "skew" in rep.failed_checks()
    bad_g = SplitSde([np.zeros((2, 2))], [lambda x: x], [1.0, 0.0])
    rep = validate_quadratic_assumptions(bad_g, np.eye(2))
    assert rep.failed_checks() == ["tangential_g"]
    assert any("FAIL" in line for line in rep.lines())
    with pytest.raises(ValueError):
        validate_quadratic_assumptions(p, np.triu(np.ones((12, 12))))


def test_quadratic_assumptions_commutation_with_D():
    S = np.array([[0.0, -1.0], [1.0, 0.0]])
    p = SplitSde([S], [ZeroMap()], [1.0, 0.0])
    rep = validate_quadratic_assumptions(p, np.diag([1.0, 2.0]))
    assert rep.failed_checks() == ["commutes_with_D"]


def test_linear_assumptions():
    # dX = (X2 - X1, X1 - X2) dt conserves X1 + X2.
    A = np.array([[-1.0, 1.0], [1.0, -1.0]])
    g = lambda x: np.array([x[1] ** 2, -x[1] ** 2])  # noqa: E731
    p = SplitSde([A], [g], [1.0, 0.0])
    assert validate_linear_assumptions(p, [1.0, 1.0]).passed
    rep = validate_linear_assumptions(p, [1.0, 0.0])
    assert set(rep.failed_checks()) == {"r_in_left_null_space", "r_orthogonal_g"}


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_invariant_evaluation(xs):
    x = np.array(xs)
    D = np.diag([1.0, 2.0, 3.0])
    q = QuadraticInvariant(D)
    assert q(x) == pytest.approx(x[0] ** 2 + 2 * x[1] ** 2 + 3 * x[2] ** 2, abs=1e-12)
    assert evaluate_invariant(q, x) == q(x)
    lin = LinearInvariant([1.0, -1.0, 0.5])
    assert lin(x) == pytest.approx(x[0] - x[1] + 0.5 * x[2], abs=1e-12)
    states = np.stack([x, 2 * x])
    np.testing.assert_allclose(q.along(states), [q(x), q(2 * x)], atol=1e-12)
    np.testing.assert_allclose(lin.along(states), [lin(x), lin(2 * x)], atol=1e-12)


def test_quadratic_invariant_needs_symmetric_matrix():
    with pytest.raises(ValueError):
        QuadraticInvariant([[1.0, 1.0], [0.0, 1.0]])
