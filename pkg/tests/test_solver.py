import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waxman.errors import RayleighZero, RefOrthogonal, StartVectorDegenerate, UsageError
from waxman.green import apply_sym, dense_sym, lambda_exact, make_green
from waxman.linalg import eig_sym_dense
from waxman.model import ModelSpec, generate, standard_grid
from waxman.solver import (
    SolverConfig,
    Status,
    count_applications,
    modified_solve,
    power_solve,
    power_solve_ref,
    solve,
)

from conftest import identity_problem, random_problem

SQ = 1 / math.sqrt(2)


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.mark.parametrize(
    "kwargs",
    [dict(tol=0.0), dict(tol=1.0), dict(max_iter=0), dict(branch="middle"), dict(start="basis_x"),
     dict(start="random"), dict(breakdown_tol=-1.0), dict(residual_tol=0.0)],
)
def test_config_validation(kwargs):
    with pytest.raises(UsageError):
        SolverConfig(**kwargs)


def test_power_identity_examples():
    g = make_green(identity_problem(), 1.0)
    rep = power_solve(g, SolverConfig(start=(SQ, SQ)))
    assert rep.converged and rep.lambda_final == pytest.approx(1.0, rel=1e-9)
    np.testing.assert_allclose(np.abs(rep.eigenvector), [1.0, 0.0], atol=1e-4)
    # exact subdominant eigenvector is invariant: the iteration sits at lam = 2
    stuck = power_solve(g, SolverConfig(start=(0.0, 1.0)))
    assert stuck.status is Status.CONVERGED and stuck.lambda_final == pytest.approx(2.0, rel=1e-15)


def test_power_matches_oracle_easy20(easy20):
    g = make_green(easy20, easy20.t_min - 1.0)
    assert rel(power_solve(g).lambda_final, lambda_exact(g)) <= 1e-8


def test_power_ref_examples():
    g = make_green(identity_problem(), 1.0)
    rep = power_solve_ref(g, [1.0, 0.0], SolverConfig(start=(1.0, 1.0)))
    assert rep.converged and rep.lambda_final == pytest.approx(1.0, rel=1e-9)
    np.testing.assert_allclose(np.abs(rep.eigenvector), [1.0, 0.0], atol=1e-4)
    # ref orthogonal to the dominant direction, start on that direction
    with pytest.raises(RefOrthogonal):
        power_solve_ref(g, [0.0, 1.0], SolverConfig(start=(1.0, 0.0)))
    with pytest.raises(UsageError):
        power_solve_ref(g, [1.0, 0.0, 0.0])


def test_power_ref_agrees_with_power_and_oracle():
    p = random_problem(10, 17)
    g = make_green(p, p.t_min - 1.0)
    ref = np.random.default_rng(5).uniform(0.5, 1.5, 10)
    a = power_solve_ref(g, ref)
    b = power_solve(g)
    assert a.converged and b.converged
    assert rel(a.lambda_final, b.lambda_final) <= 1e-9
    assert rel(a.lambda_final, lambda_exact(g)) <= 1e-8


def test_modified_one_step_identity():
    g = make_green(identity_problem(), 1.0)
    rep = modified_solve(g, SolverConfig(start=(SQ, SQ)))
    first = rep.trace.steps[1].subspace
    assert (first.eps_n, first.v_n, first.alpha_n) == pytest.approx((0.75, 0.25, 0.75), abs=1e-15)
    assert first.high == pytest.approx(1.0, abs=1e-15)
    assert rep.trace.steps[1].lambda_n == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(np.abs(rep.eigenvector), [1.0, 0.0], atol=1e-15)
    # matches the dense solver on the projected matrix
    evals, _ = eig_sym_dense(dense_sym(g))
    assert first.high == pytest.approx(evals[-1], abs=1e-15)


def test_modified_breakdown_on_exact_eigenvector():
    g = make_green(identity_problem(3), 0.5)
    rep = modified_solve(g, SolverConfig(start="basis_0"))
    assert rep.converged and rep.iterations == 1 and count_applications(rep) == 1
    assert len(rep.trace.steps) == 1 and rep.trace.steps[0].subspace is None
    assert rep.lambda_final == pytest.approx(1.5, rel=1e-15)


def test_modified_matches_oracle_hard20(hard20):
    for eps in standard_grid(hard20):
        g = make_green(hard20, eps)
        m = modified_solve(g)
        pw = power_solve(g)
        assert m.converged and rel(m.lambda_final, lambda_exact(g)) <= 1e-8
        assert m.iterations <= pw.iterations


def test_count_applications():
    g = make_green(random_problem(12, 4), 0.0)
    pw = power_solve(g, SolverConfig(max_iter=12, tol=1e-15))
    assert pw.iterations == 12 and count_applications(pw) == 12
    md = modified_solve(g, SolverConfig(max_iter=6, tol=1e-15))
    assert md.iterations == 6 and count_applications(md) == 7
    for rep in (power_solve(g), modified_solve(g)):
        apps = [s.op_applications for s in rep.trace.steps]
        assert all(b > a for a, b in zip(apps, apps[1:]))


def test_start_vector_errors():
    g = make_green(identity_problem(), 0.0)
    with pytest.raises(StartVectorDegenerate):
        power_solve(g, SolverConfig(start=(0.0, 0.0)))
    with pytest.raises(UsageError):
        power_solve(g, SolverConfig(start="basis_5"))
    with pytest.raises(UsageError):
        power_solve(g, SolverConfig(start=(1.0, 0.0, 0.0)))


def test_rayleigh_zero():
    # V with zero diagonal: <e0|A|e0> = 0 for the first iterate
    spec = ModelSpec(2, (1.0, 2.0), 1.0, seed=1)
    p = generate(spec)
    v = p.v.array.copy()
    v[0, 0] = v[1, 1] = 0.0
    from waxman.linalg import SymMatrix
    from waxman.model import ModelProblem

    q = ModelProblem(p.t_diag, SymMatrix.from_array(v), spec)
    g = make_green(q, 0.0)
    for fn in (power_solve, modified_solve):
        with pytest.raises(RayleighZero):
            fn(g, SolverConfig(start="basis_0"))


def test_max_iterations_status():
    g = make_green(random_problem(10, 2), 0.0)
    rep = power_solve(g, SolverConfig(max_iter=3))
    assert rep.status is Status.MAX_ITERATIONS and rep.iterations == 3 and not rep.converged


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(3, 16), st.floats(0.2, 5.0))
def test_trace_invariants(seed, dim, gap):
    p = random_problem(dim, seed)
    g = make_green(p, p.t_min - gap)
    for rep in (power_solve(g), modified_solve(g)):
        for s in rep.trace.steps:
            assert abs(s.eps_n * s.lambda_n - 1.0) <= 1e-14
        if rep.converged and len(rep.trace.steps) > 1:
            a, b = rep.trace.steps[-2].lambda_n, rep.trace.steps[-1].lambda_n
            assert abs(a - b) <= 1e-10 * abs(b)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 20))
def test_power_normalization_identity(seed, dim):
    p = random_problem(dim, seed)
    g = make_green(p, p.t_min - 1.0)
    rep = power_solve(g, SolverConfig(max_iter=50))
    assert rep.trace.shift == 0.0 or rep.trace.shift < 0
    for s in rep.trace.steps:
        assert abs(s.overlap - 1.0) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 20), st.floats(0.1, 5.0), st.sampled_from(["highest", "lowest"]))
def test_modified_bracketing_and_monotonicity(seed, dim, gap, branch):
    p = random_problem(dim, seed)
    g = make_green(p, p.t_min - gap)
    rep = modified_solve(g, SolverConfig(branch=branch))
    evals, _ = eig_sym_dense(dense_sym(g))
    for s in rep.trace.steps[1:]:
        sub = s.subspace
        if abs(sub.v_n) > 0:
            assert sub.low < sub.eps_n < sub.high
        assert sub.v_mismatch <= 1e-12 * max(1.0, abs(sub.v_n))
    eps = rep.trace.eps()
    if branch == "highest":
        assert np.all(np.diff(eps) >= -1e-12 * np.abs(eps[1:]))
        assert eps.max() <= evals[-1] + 1e-10
    else:
        assert np.all(np.diff(eps) <= 1e-12 * np.abs(eps[1:]))
        assert eps.min() >= evals[0] - 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([5, 10, 20, 40]))
def test_fixed_point_and_scheme_agreement(seed, dim):
    p = random_problem(dim, seed)
    g = make_green(p, p.t_min - 1.0)
    exact = lambda_exact(g)
    reports = [power_solve(g), modified_solve(g)]
    try:
        reports.append(power_solve_ref(g, np.ones(dim)))
    except RefOrthogonal:
        pass
    for rep in reports:
        assert rep.converged
        assert rel(rep.lambda_final, exact) <= 1e-8
        y = rep.eigenvector / g.sqrt_inv_diag
        y /= np.linalg.norm(y)
        assert np.linalg.norm(apply_sym(g, y) - y / rep.lambda_final) <= 1e-6
    lams = [r.lambda_final for r in reports]
    assert max(lams) - min(lams) <= 1e-8 * abs(exact)


def test_lowest_branch_matches_oracle():
    for seed in range(5):
        p = random_problem(12, 100 + seed)
        g = make_green(p, p.t_min - 1.0)
        exact = lambda_exact(g, "lowest")
        for rep in (power_solve(g, SolverConfig(branch="lowest")), modified_solve(g, SolverConfig(branch="lowest"))):
            assert rep.converged and rel(rep.lambda_final, exact) <= 1e-8
        assert power_solve(g, SolverConfig(branch="lowest")).trace.shift > 0


def test_eigenvector_in_original_coordinates():
    p = random_problem(8, 21)
    g = make_green(p, p.t_min - 1.0)
    rep = modified_solve(g)
    u = rep.eigenvector
    assert abs(np.linalg.norm(u) - 1.0) <= 1e-15
    gv = g.inv_diag[:, None] * p.v.array
    assert np.linalg.norm(gv @ u - u / rep.lambda_final) <= 1e-6


def test_solve_dispatch():
    g = make_green(identity_problem(), 0.0)
    assert solve(g, "power").trace.scheme == "power"
    assert solve(g, "2x2").trace.scheme == "2x2"
    with pytest.raises(UsageError):
        solve(g, "lanczos")


def test_trace_csv(tmp_path):
    g = make_green(random_problem(6, 8), 0.0)
    rep = modified_solve(g)
    path = tmp_path / "trace.csv"
    rep.trace.write_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "lambda", "eps_n", "residual", "op_apps"]
    assert len(rows) == len(rep.trace.steps) + 1
    assert float(rows[-1][1]) == rep.lambda_final
    assert int(rows[-1][4]) == rep.op_applications
