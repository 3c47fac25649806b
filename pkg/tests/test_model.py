import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waxman.errors import UsageError
from waxman.green import dense_sym, make_green
from waxman.linalg import eig_sym_dense
from waxman.model import (
    HARD20_PAIR_COUPLING,
    ModelSpec,
    SplitMix64,
    dumps,
    fixture,
    generate,
    linear_spectrum,
    load,
    loads,
    save,
    standard_grid,
)
from waxman.solver import SolverConfig, power_solve

from conftest import random_problem


def test_splitmix64_reference_outputs():
    # first outputs for seed 0 from the reference C implementation
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_uniform_range():
    rng = SplitMix64(123)
    xs = [rng.uniform() for _ in range(1000)]
    assert min(xs) >= 0.0 and max(xs) < 1.0


def test_generate_is_deterministic():
    spec = ModelSpec(2, (2.0, 3.0), 1.0, seed=42)
    a, b = generate(spec), generate(spec)
    np.testing.assert_array_equal(a.v.array, b.v.array)
    assert a == b
    assert generate(ModelSpec(2, (2.0, 3.0), 1.0, seed=43)) != a


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**64 - 1), st.floats(1e-3, 10.0))
def test_generate_symmetric_and_in_range(dim, seed, scale):
    p = generate(ModelSpec(dim, linear_spectrum(dim), scale, seed=seed))
    np.testing.assert_array_equal(p.v.array, p.v.array.T)
    assert np.all(np.abs(p.v.array) <= scale)


def test_unit_scale_bound_dim20():
    p = generate(ModelSpec(20, linear_spectrum(20, 10.0), 1.0, seed=1))
    assert np.all(np.abs(p.v.array) <= 1.0)
    np.testing.assert_array_equal(p.t_diag, np.arange(10.0, 30.0))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dim=0, t_spectrum=(), v_scale=1.0),
        dict(dim=2, t_spectrum=(1.0,), v_scale=1.0),
        dict(dim=2, t_spectrum=(2.0, 1.0), v_scale=1.0),
        dict(dim=2, t_spectrum=(1.0, 1.0), v_scale=1.0),
        dict(dim=2, t_spectrum=(1.0, 2.0), v_scale=0.0),
        dict(dim=2, t_spectrum=(1.0, 2.0), v_scale=-1.0),
        dict(dim=2, t_spectrum=(1.0, 2.0), v_scale=1.0, label="two words"),
        dict(dim=2, t_spectrum=(1.0, 2.0), v_scale=1.0, seed=-1),
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(UsageError):
        ModelSpec(**kwargs)


def test_fixture_identity():
    p = fixture("identityV", dim=2)
    np.testing.assert_array_equal(p.v.array, np.eye(2))
    np.testing.assert_array_equal(p.t_diag, [2.0, 3.0])
    g = make_green(p, 1.0)
    np.testing.assert_array_equal(g.inv_diag[:, None] * p.v.array, np.diag([1.0, 0.5]))


def test_fixture_shapes(easy20, hard20):
    assert easy20.dim == hard20.dim == 20
    assert np.min(np.diff(easy20.t_diag)) >= 1.0
    assert hard20.t_diag[1] - hard20.t_diag[0] <= 1e-3
    assert hard20.v.array[0, 1] == HARD20_PAIR_COUPLING
    with pytest.raises(UsageError):
        fixture("nope")


def test_easy20_power_within_200(easy20):
    for eps in standard_grid(easy20):
        rep = power_solve(make_green(easy20, eps), SolverConfig(tol=1e-10))
        assert rep.converged and rep.iterations <= 200


def test_hard20_needs_5x_easy20(easy20, hard20):
    ratios = []
    for de in standard_grid(easy20, 8):
        offset = de - easy20.t_min
        e_it = power_solve(make_green(easy20, easy20.t_min + offset)).iterations
        h_it = power_solve(make_green(hard20, hard20.t_min + offset)).iterations
        ratios.append(h_it / e_it)
    assert max(ratios) >= 5.0


@pytest.mark.parametrize("dim,seed", [(5, 1), (10, 2), (20, 3), (64, 4)])
def test_symmetrized_spectrum_real_and_finite(dim, seed):
    p = random_problem(dim, seed)
    for eps in (p.t_min - 0.1, p.t_min - 1.0, p.t_min - 10.0):
        evals, _ = eig_sym_dense(dense_sym(make_green(p, eps)))
        assert np.all(np.isfinite(evals))


def test_serialization_round_trip(tmp_path, easy20):
    for p in (easy20, random_problem(7, 99), fixture("identityV", dim=3)):
        text = dumps(p)
        q = loads(text)
        assert q == p
        np.testing.assert_array_equal(q.v.array, p.v.array)
        assert q.spec.seed == p.spec.seed and q.label == p.label
        assert dumps(q) == text
    save(easy20, tmp_path / "m.txt")
    assert load(tmp_path / "m.txt") == easy20
    first = (tmp_path / "m.txt").read_text().splitlines()[0]
    assert first.startswith("dim=20 seed=20 label=easy20")


def test_loads_rejects_malformed():
    with pytest.raises(UsageError):
        loads("dim=2\nT 1 2\n1 0\n")
    with pytest.raises(UsageError):
        loads("dim=2\nT 1 2\n1 0\n0.5 1\n")
    with pytest.raises(UsageError):
        loads("dim=2\nX 1 2\n1 0\n0 1\n")
