import numpy as np
import pytest

from qthermo.errors import ValidationError
from qthermo.fluctuations import (
    crooks_check,
    dissipation_irreversibility,
    eigenprojectors,
    jarzynski_check,
    tpm_distribution,
)
from qthermo.linalg import SIGMA_X
from qthermo.sampling import random_hermitian, random_unital_mixture, random_unitary
from qthermo.states import gibbs_state

H0 = np.diag([0.0, 1.0])
LN2 = np.log(2)


def test_identity_point_mass(rng):
    h = random_hermitian(3, rng)
    dist = tpm_distribution(h, np.eye(3), h, 0.7)
    assert abs(dist.probability_of(0.0) - 1.0) < 1e-12
    rep = crooks_check(dist, h, np.eye(3), h)
    assert rep.max_residual < 1e-12


def test_swap_distribution():
    dist = tpm_distribution(H0, SIGMA_X, H0, LN2)
    assert abs(dist.probability_of(1.0) - 2 / 3) < 1e-15
    assert abs(dist.probability_of(-1.0) - 1 / 3) < 1e-15
    rep = jarzynski_check(dist)
    assert rep.residual < 1e-10
    assert abs(rep.lhs - 1.0) < 1e-10
    crooks = crooks_check(dist, H0, SIGMA_X, H0)
    pt = [p for p in crooks.points if abs(p[0] - 1.0) < 1e-12][0]
    assert abs(pt[3] - LN2) < 1e-12


def test_first_marginal_is_gibbs(rng):
    h_i, h_f = random_hermitian(4, rng), random_hermitian(4, rng)
    dist = tpm_distribution(h_i, random_unitary(4, rng), h_f, 1.1)
    pops = np.sort(np.linalg.eigvalsh(gibbs_state(h_i, 1.1)))
    assert np.abs(np.sort(dist.joint.sum(axis=1)) - pops).max() < 1e-12
    assert abs(dist.probability.sum() - 1.0) < 1e-12


def test_degenerate_spectrum_basis_independent(rng):
    h = np.diag([0.0, 1.0, 1.0])
    u = random_unitary(3, rng)
    v = np.eye(3, dtype=complex)
    v[1:, 1:] = random_unitary(2, rng)
    # rotating inside the degenerate block leaves H unchanged
    h_rot = v @ h @ v.conj().T
    a = tpm_distribution(h, u, h, 0.9)
    b = tpm_distribution(h_rot, u, h_rot, 0.9)
    assert np.abs(a.work - b.work).max() < 1e-12
    assert np.abs(a.probability - b.probability).max() < 1e-12
    levels, projs = eigenprojectors(h)
    assert len(levels) == 2 and abs(np.trace(projs[1]).real - 2) < 1e-12


def test_jarzynski_random(rng):
    for _ in range(100):
        d = int(rng.integers(2, 5))
        h_i, h_f = random_hermitian(d, rng), random_hermitian(d, rng)
        rep = jarzynski_check(tpm_distribution(h_i, random_unitary(d, rng), h_f, rng.uniform(0.1, 3)))
        assert rep.residual < 1e-10
        assert rep.jensen_gap >= -1e-12


def test_cyclic_jarzynski_is_one(rng):
    h = random_hermitian(3, rng)
    rep = jarzynski_check(tpm_distribution(h, random_unitary(3, rng), h, 1.0))
    assert abs(rep.lhs - 1.0) < 1e-10
    assert abs(rep.free_energy_change) < 1e-14


def test_unital_mixture(rng):
    h = random_hermitian(3, rng)
    rep = jarzynski_check(tpm_distribution(h, None, h, 0.8, kraus=random_unital_mixture(3, 3, rng)))
    assert rep.residual < 1e-10


def test_crooks_random_qutrits(rng):
    for _ in range(100):
        h_i, h_f = random_hermitian(3, rng), random_hermitian(3, rng)
        u = random_unitary(3, rng)
        rep = crooks_check(tpm_distribution(h_i, u, h_f, rng.uniform(0.2, 2)), h_i, u, h_f)
        assert rep.max_residual < 1e-8


def test_arrow_of_time():
    rep = dissipation_irreversibility(H0, np.eye(2), H0, 1.0)
    assert abs(rep.lhs) < 1e-14 and abs(rep.rhs) < 1e-14
    h_f = np.diag([0.0, 2.0])
    rep = dissipation_irreversibility(H0, np.eye(2), h_f, 1.0)
    # closed form: <W> = p1 (2 - 1), dF = -ln(Z_f/Z_i)
    p1 = np.exp(-1) / (1 + np.exp(-1))
    lhs = p1 * 1.0 + np.log((1 + np.exp(-2)) / (1 + np.exp(-1)))
    q = np.array([1 - p1, p1])
    g = np.array([1, np.exp(-2)]) / (1 + np.exp(-2))
    rhs = np.sum(q * np.log(q / g))
    assert abs(rep.lhs - lhs) < 1e-12
    assert abs(rep.rhs - rhs) < 1e-12
    assert rep.residual < 1e-10


def test_validation():
    with pytest.raises(ValidationError):
        tpm_distribution(H0, 2 * np.eye(2), H0, 1.0)
    with pytest.raises(ValidationError):
        tpm_distribution(H0, None, H0, 1.0, kraus=[np.eye(2), np.eye(2)])


def test_csv_and_sampling(tmp_path, rng):
    dist = tpm_distribution(H0, SIGMA_X, H0, LN2)
    path = tmp_path / "w.csv"
    dist.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "work,probability"
    assert len(lines) == 1 + len(dist.work)
    draws = dist.sample(2000, rng)
    assert set(np.unique(draws)) <= set(dist.work)
    assert abs(np.mean(draws == 1.0) - 2 / 3) < 0.05
