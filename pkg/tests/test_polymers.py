import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wickflow import polymers as PM
from wickflow.rng import normals

TWO_STATE = ((-1.0, 1.0), (1.0, -1.0))


def test_two_state_exponential():
    P = PM.chain_transition_exact(PM.ChainModel(TWO_STATE, 0, 1.0))
    assert P[0, 1] == pytest.approx((1 - math.exp(-2)) / 2, abs=1e-14)
    assert P[0, 1] == pytest.approx(0.432332, abs=1e-6)


@pytest.mark.parametrize("K", [TWO_STATE, PM.random_generator(3, 1), PM.random_generator(4, 2)])
def test_chain_mean_matches_exponential(K):
    model = PM.ChainModel(K, 0, 1.0)
    P = PM.chain_transition_exact(model)
    for y, est in enumerate(PM.chain_mean_solution(model, 50_000, seed=3)):
        assert est.within(P[0, y])


def test_chain_fixed_field_zero_horizon():
    model = PM.ChainModel(TWO_STATE, 1, 0.0)
    assert PM.chain_partition_mc(model, np.zeros(2), 1, 10, seed=0).mean == 1.0
    assert PM.chain_partition_mc(model, np.zeros(2), 0, 10, seed=0).mean == 0.0


def test_chain_fixed_field_positive():
    model = PM.ChainModel(PM.random_generator(3, 4), 0, 1.0)
    xi = normals(5, 3)
    total = sum(PM.chain_partition_mc(model, xi, y, 5000, seed=6).mean for y in range(3))
    assert total > 0


def test_lattice_mean_one():
    for n in range(7):
        assert abs(PM.lattice_mean_exact(PM.LatticeModel(n)) - 1) <= 1e-10


def test_lattice_single_site():
    m = PM.LatticeModel(1)
    lhs, rhs = PM.lattice_shift_identity_exact(m, {(m.site_index(1, 1),): 1.0})
    assert lhs == pytest.approx(0.5, abs=1e-12) and rhs == pytest.approx(0.5, abs=1e-12)


def test_lattice_pair_of_sites_against_enumeration():
    m = PM.LatticeModel(2)
    s1, s2 = m.site_index(1, 1), m.site_index(2, 2)
    lhs, rhs = PM.lattice_shift_identity_exact(m, {(s1, s2): 1.0})
    # enumeration: E[(xi1 + a)(xi2 + b)] = a b for visits a, b
    occ = m.occupation()
    brute = float(np.mean(occ[:, s1] * occ[:, s2]))
    assert brute == 0.25
    assert lhs == pytest.approx(brute, abs=1e-12) and rhs == pytest.approx(brute, abs=1e-12)


def test_lattice_identity_quadratic_and_quartic():
    m = PM.LatticeModel(3)
    for F in ({(1, 1): 1.0, (): 2.0}, {(2, 4, 4, 7): 1.5}, {(0, 0, 0, 0): 1.0, (3,): -2.0}):
        lhs, rhs = PM.lattice_shift_identity_exact(m, F)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_lattice_partition_brute_force():
    m = PM.LatticeModel(3)
    xi = normals(7, m.n_sites)
    total = 0.0
    for steps in itertools.product((-1, 1), repeat=3):
        x, logw = 0, xi[0] - 0.5
        for t, s in enumerate(steps, start=1):
            x += s
            logw += xi[m.site_index(x, t)] - 0.5
        total += math.exp(logw) / 8
    assert PM.lattice_partition_exact(m, xi) == pytest.approx(total, rel=1e-13)


@given(st.integers(0, 6), st.integers(0, 2**32))
def test_lattice_partition_positive(n, seed):
    m = PM.LatticeModel(n)
    assert PM.lattice_partition_exact(m, 5 * normals(seed, m.n_sites)) > 0


def test_lattice_paths_visit_one_site_per_time():
    m = PM.LatticeModel(5)
    occ = m.occupation()
    assert occ.shape == (32, m.n_sites)
    assert np.all(occ.sum(1) == 6)
    assert set(np.unique(occ)) <= {0.0, 1.0}


def test_sampler_draws_valid_paths():
    m = PM.LatticeModel(4)
    draws = PM.LatticeShift(m).draw(9, 100, m.n_sites)
    valid = {tuple(r) for r in m.occupation()}
    assert all(tuple(r) in valid for r in draws)


def test_errors():
    with pytest.raises(ValueError):
        PM.LatticeModel(21)
    with pytest.raises(ValueError):
        PM.ChainModel(((-1.0, 1.0), (1.0, -1.0)), 2, 1.0)
    with pytest.raises(ValueError):
        PM.LatticeModel(2).site_index(1, 2)
    with pytest.raises(ValueError):
        PM.lattice_partition_exact(PM.LatticeModel(2), np.zeros(3))
