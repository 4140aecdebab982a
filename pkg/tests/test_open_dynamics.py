import numpy as np
import pytest

from qthermo.errors import ValidationError
from qthermo.linalg import SIGMA_MINUS, SIGMA_X, trace_distance
from qthermo.open_dynamics import (
    LindbladGenerator,
    apply_channel,
    bose_occupation,
    completely_depolarizing_kraus,
    data_processing_check,
    davies_generator,
    detailed_balance_residual,
    product_generator,
    propagate_lindblad,
)
from qthermo.sampling import random_density, random_hermitian, random_kraus
from qthermo.states import gibbs_state, mean_energy, relative_entropy, von_neumann_entropy

H0 = np.diag([0.0, 1.0])


def _rates(gen):
    return {round(f, 12): r for (_, r), f in zip(gen.jumps, gen.bohr_frequencies)}


def test_davies_qubit_rates():
    gen = davies_generator(H0, SIGMA_X, 1.0, 1.0)
    rates = _rates(gen)
    n = 1.0 / (np.e - 1.0)
    assert abs(rates[1.0] - (n + 1)) < 1e-14
    assert abs(rates[-1.0] - n) < 1e-14
    assert abs(rates[-1.0] / rates[1.0] - np.exp(-1.0)) < 1e-12
    assert detailed_balance_residual(gen) < 1e-12


def test_davies_zero_temperature():
    rates = _rates(davies_generator(H0, SIGMA_X, np.inf, 0.7))
    assert abs(rates[1.0] - 0.7) < 1e-15
    assert rates.get(-1.0, 0.0) == 0.0
    assert bose_occupation(1.0, np.inf) == 0.0


def test_davies_rejects_degenerate_bohr():
    h = np.diag([0.0, 1.0, 2.0])
    a = np.ones((3, 3)) - np.eye(3)
    with pytest.raises(ValidationError, match="jump"):
        davies_generator(h, a, 1.0, 1.0)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_davies_gibbs_fixed_point(d, rng):
    for _ in range(10):
        h = np.diag(np.sort(rng.uniform(0, 3, d)) + np.arange(d) * 1e-3)
        a = random_hermitian(d, rng)
        beta = rng.uniform(0.1, 3.0)
        gen = davies_generator(h, a, beta, rng.uniform(0.2, 2.0))
        assert np.abs(gen(gibbs_state(h, beta))).max() < 1e-10
        assert detailed_balance_residual(gen) < 1e-9


def test_superoperator_matches_action(rng):
    gen = davies_generator(np.diag([0.0, 0.6, 1.5]), random_hermitian(3, rng), 0.8, 1.0)
    rho = random_density(3, rng)
    assert np.abs((gen.superoperator() @ rho.reshape(-1)).reshape(3, 3) - gen(rho)).max() < 1e-13


def test_semigroup_property(rng):
    gen = davies_generator(H0, SIGMA_X, 0.5, 1.0)
    rho = random_density(2, rng)
    once = gen.evolve(rho, 1.3)
    twice = gen.evolve(gen.evolve(rho, 0.6), 0.7)
    assert np.abs(once - twice).max() < 1e-12


def test_negative_rate_rejected():
    with pytest.raises(ValidationError):
        LindbladGenerator(H0, ((SIGMA_MINUS, -1.0),))


def test_zero_duration_schedule(rng):
    rho = random_density(2, rng)
    gen = davies_generator(H0, SIGMA_X, 1.0, 1.0)
    traj = propagate_lindblad([(gen, 0.0)], rho)
    assert np.abs(traj.final_state - rho).max() == 0
    assert traj.total_heat == 0.0
    assert propagate_lindblad([], rho).total_heat == 0.0


def test_long_contact_relaxes_to_gibbs(rng):
    for beta in (0.3, 1.0, 2.5):
        gen = davies_generator(H0, SIGMA_X, beta, 1.0)
        traj = propagate_lindblad([(gen, 50.0)], random_density(2, rng))
        assert trace_distance(traj.final_state, gibbs_state(H0, beta)) < 1e-6
        assert abs(traj.first_law_residual) < 1e-6


def test_zero_temperature_heat_equals_gap():
    gen = davies_generator(H0, SIGMA_X, np.inf, 1.0)
    traj = propagate_lindblad([(gen, 40.0)], np.diag([0.0, 1.0]))
    assert abs(traj.heat_to_bath["R"] - 1.0) < 1e-6


def test_quadrature_heat_matches_energy_drop(rng):
    # single bath and fixed H: the heat must equal the energy lost by the system
    gen = davies_generator(np.diag([0.0, 0.4, 1.3]), random_hermitian(3, rng), 0.9, 0.8)
    rho = random_density(3, rng)
    traj = propagate_lindblad([(gen, 3.0)], rho)
    drop = mean_energy(rho, gen.hamiltonian) - mean_energy(traj.final_state, gen.hamiltonian)
    assert abs(traj.total_heat - drop) < 1e-7
    assert traj.heat_refinement_change < 1e-6 and not traj.flagged


def test_first_law_with_switches(rng):
    h1 = np.diag([0.0, 1.5])
    gen = davies_generator(h1, SIGMA_X, 0.7, 1.0)
    sched = [(H0 + 0.3 * SIGMA_X, 0.8), (gen, 2.0), (H0, 0.4)]
    traj = propagate_lindblad(sched, random_density(2, rng), origin=H0)
    assert abs(traj.first_law_residual) < 1e-6
    assert traj.work_accumulated != 0.0


def test_spohn_entropy_production(rng):
    for _ in range(10):
        d = int(rng.integers(2, 4))
        h = np.diag(np.sort(rng.uniform(0, 2, d)) + np.arange(d) * 1e-2)
        beta = rng.uniform(0.2, 2.0)
        gen = davies_generator(h, random_hermitian(d, rng), beta, 1.0)
        traj = propagate_lindblad([(gen, 5.0)], random_density(d, rng))
        assert min(traj.entropy_production_rates) >= -1e-8
        # integrated form: relative entropy to Gibbs never increases
        g = gibbs_state(h, beta)
        rel = [relative_entropy(s, g) for s in traj.states[::8]]
        assert np.all(np.diff(rel) <= 1e-10)


def test_product_generator_fixed_point():
    g1 = davies_generator(H0, SIGMA_X, 0.5, 1.0)
    g2 = davies_generator(np.diag([0.0, 2.0]), SIGMA_X, 0.5, 0.3)
    joint = product_generator(g1, g2)
    target = np.kron(gibbs_state(H0, 0.5), gibbs_state(np.diag([0.0, 2.0]), 0.5))
    assert np.abs(joint(target)).max() < 1e-12


def test_channels_and_dpi(rng):
    rho, mu = random_density(3, rng), random_density(3, rng)
    ident = data_processing_check([np.eye(3)], rho, mu)
    assert abs(ident.before - ident.after) < 1e-14
    dep = data_processing_check(completely_depolarizing_kraus(3), rho, mu)
    assert dep.after < 1e-12
    assert np.abs(apply_channel(completely_depolarizing_kraus(3), rho) - np.eye(3) / 3).max() < 1e-14
    for _ in range(200):
        d = int(rng.integers(2, 5))
        kraus = random_kraus(d, int(rng.integers(1, 4)), rng)
        res = data_processing_check(kraus, random_density(d, rng), random_density(d, rng))
        assert res.after <= res.before + 1e-9 and res.holds


def test_non_cptp_rejected():
    with pytest.raises(ValidationError):
        apply_channel([2 * np.eye(2)], np.eye(2) / 2)


def test_non_hermitian_segment_rejected():
    with pytest.raises(ValidationError):
        propagate_lindblad([(np.array([[0, 1j], [0, 0]]), 1.0)], np.eye(2) / 2)
