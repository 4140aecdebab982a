import numpy as np
import pytest

from qthermo.errors import DomainError, ValidationError
from qthermo.measurement import (
    POINTER_DECOHERED,
    PREMEASUREMENT,
    Instrument,
    apply_instrument,
    erasure_run,
    information_gain_bounds,
    joint_mutual_information,
    joint_state,
    landauer_erasure_experiment,
    memory_coupling,
    memory_hamiltonian,
    random_nondestructive_instrument,
    shannon_entropy,
)
from qthermo.open_dynamics import davies_generator, propagate_lindblad
from qthermo.sampling import random_density, random_kraus, random_unitary
from qthermo.states import pure_state, von_neumann_entropy


def test_instrument_validation():
    with pytest.raises(ValidationError):
        Instrument(((0.5 * np.eye(2),),))
    with pytest.raises(ValidationError):
        Instrument(((),))
    inst = Instrument.identity(3)
    assert inst.dim == 3 and inst.efficient


def test_eigenbasis_projective(rng):
    rho = random_density(3, rng)
    lam, v = np.linalg.eigh(rho)
    out = apply_instrument(rho, Instrument.projective(v))
    assert np.abs(out.probabilities - lam).max() < 1e-12
    assert out.non_destructive
    assert all(von_neumann_entropy(s) < 1e-10 for s in out.post_states)
    g = information_gain_bounds(rho, out)
    assert abs(g.gain - von_neumann_entropy(rho)) < 1e-10
    assert abs(g.upper - von_neumann_entropy(rho)) < 1e-10


def test_identity_instrument(rng):
    rho = random_density(2, rng)
    out = apply_instrument(rho, Instrument.identity(2))
    assert out.probabilities.tolist() == pytest.approx([1.0])
    g = information_gain_bounds(rho, out)
    assert abs(g.gain) < 1e-12 and g.upper == 0.0
    info = joint_mutual_information(rho, Instrument.identity(2))
    assert info.shannon == 0.0 and abs(info.c12) < 1e-12 and info.bound_holds


def test_non_efficient_reconstructs_channel(rng):
    rho = random_density(3, rng)
    kraus = random_kraus(3, 4, rng)
    inst = Instrument(((kraus[0], kraus[1]), (kraus[2], kraus[3])))
    assert not inst.efficient
    out = apply_instrument(rho, inst)
    direct = sum(k @ rho @ k.conj().T for k in kraus)
    rebuilt = sum(p * s for p, s in zip(out.probabilities, out.post_states))
    assert np.abs(rebuilt - direct).max() < 1e-12


def test_destructive_measurement_rejected(rng):
    rho = random_density(2, rng)
    out = apply_instrument(rho, Instrument.projective(random_unitary(2, rng)))
    assert not out.non_destructive
    with pytest.raises(DomainError):
        information_gain_bounds(rho, out)


def test_information_gain_sweep(rng):
    worst = np.inf
    for _ in range(300):
        d = int(rng.integers(2, 5))
        rho = random_density(d, rng)
        inst = random_nondestructive_instrument(rho, int(rng.integers(2, 5)), rng, int(rng.integers(1, 3)))
        out = apply_instrument(rho, inst)
        assert out.non_destructive
        g = information_gain_bounds(rho, out)
        assert g.lower - 1e-9 <= g.gain <= g.upper + 1e-9
        worst = min(worst, g.margin)
    assert worst > -1e-9


def test_mub_premeasurement():
    rho = pure_state([1, 0])
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    info = joint_mutual_information(rho, Instrument.projective(hadamard), PREMEASUREMENT)
    assert abs(info.shannon - np.log(2)) < 1e-12
    assert abs(info.c12 - 2 * np.log(2)) < 1e-12
    dec = joint_mutual_information(rho, Instrument.projective(hadamard), POINTER_DECOHERED)
    assert abs(dec.c12 - np.log(2)) < 1e-12


def test_premeasurement_projective_sweep(rng):
    for _ in range(200):
        d = int(rng.integers(2, 5))
        rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        info = joint_mutual_information(rho, Instrument.projective(random_unitary(d, rng)), PREMEASUREMENT)
        assert info.bound_holds


def test_joint_state_is_a_state(rng):
    rho = random_density(2, rng)
    inst = Instrument(tuple((k,) for k in random_kraus(2, 3, rng)))
    for mode in (PREMEASUREMENT, POINTER_DECOHERED):
        j = joint_state(rho, inst, mode)
        assert abs(np.trace(j) - 1) < 1e-12
        assert np.linalg.eigvalsh(j).min() > -1e-12
    with pytest.raises(ValidationError):
        joint_state(rho, inst, "bogus")


def test_shannon():
    assert abs(shannon_entropy([0.5, 0.5]) - np.log(2)) < 1e-15
    assert shannon_entropy([1.0, 0.0]) == 0.0


# ---------------------------------------------------------------------------
# Landauer erasure

def _dense_oracle(duration, n_steps, d=2, beta0=1.0, gamma0=1.0, gap_max=10.0):
    """Same schedule on the generic propagator, heat from Simpson quadrature."""
    sched = [
        (davies_generator(memory_hamiltonian(d, gap_max * i / n_steps), memory_coupling(d), beta0, gamma0), duration)
        for i in range(1, n_steps + 1)
    ]
    traj = propagate_lindblad(sched, np.eye(d) / d)
    return traj.final_state, traj.total_heat


@pytest.mark.parametrize("duration", [0.3, 1.0, 4.0])
def test_erasure_matches_dense_time_stepping(duration):
    rho, q = erasure_run(duration, n_steps=16)
    rho_o, q_o = _dense_oracle(duration, 16)
    assert np.abs(rho - rho_o).max() < 1e-10
    assert abs(q - q_o) < 1e-6


def test_erasure_qutrit_oracle():
    rho, q = erasure_run(2.0, memory_dim=3, n_steps=8)
    rho_o, q_o = _dense_oracle(2.0, 8, d=3)
    assert abs(q - q_o) < 1e-6


def test_erasure_short_time_limit():
    rep = landauer_erasure_experiment([0.0, 1e-7])
    p0, p1 = rep.points
    assert p0.heat == 0.0 and abs(p0.entropy_change) < 1e-15
    assert abs(p1.heat) < 1e-4 and abs(p1.entropy_change) < 1e-4
    assert rep.warnings


def test_landauer_ladder():
    rep = landauer_erasure_experiment([1, 2, 4, 8, 16, 32])
    assert all(p.landauer_margin >= -1e-6 for p in rep.points)
    excess = [p.excess_heat for p in rep.points]
    assert all(b < a for a, b in zip(excess, excess[1:]))
    slow = rep.points[-1]
    assert abs(slow.heat - abs(slow.entropy_change)) / abs(slow.entropy_change) < 0.05
    assert slow.total_duration == 128 * 32
    assert np.isfinite(rep.fit_C) and len(rep.fit_residuals) == 6
