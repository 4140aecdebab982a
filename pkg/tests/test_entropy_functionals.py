import math

import numpy as np
import pytest

from qthermo.entropy_functionals import (
    CERTIFICATE_SIZE,
    EPS_LADDER,
    MAX_CANDIDATES,
    BathContact,
    ProcessProtocol,
    ProtocolSearchSpace,
    availability_F,
    convexity_check,
    displacement,
    entropy_F,
    entropy_for_cycle,
    golden_section,
    independent_subsystems_check,
    min_accessible_energy,
    p_entropy,
    p_relative_entropy,
    resolve_targets,
    run_process,
)
from qthermo.errors import GibbsUnreachableError, ValidationError
from qthermo.linalg import SIGMA_X, SIGMA_Y
from qthermo.open_dynamics import davies_generator
from qthermo.protocols import ControlSet, WorkCycle, availability_unitary, propagate_unitary
from qthermo.sampling import random_density, random_unitary, stream
from qthermo.states import gibbs_state, gibbs_entropy_at_energy, mean_energy, thermal_entropy, von_neumann_entropy

H0 = np.diag([0.0, 1.0])
F = ControlSet((H0, SIGMA_X, SIGMA_Y))
GRID = tuple(0.2 + i * (math.pi - 0.2) / 7 for i in range(8))


def unitary_space(**kw):
    args = dict(k_max=2, duration_grid=GRID)
    args.update(kw)
    return ProtocolSearchSpace(F, **args)


def bath_space(durations=(5.0, 20.0, 40.0), beta=1.0, **kw):
    bath = BathContact(davies_generator(H0, SIGMA_X, beta, 1.0), durations)
    args = dict(k_max=1, duration_grid=GRID[::2] + (math.pi,), bath_contacts=(bath,))
    args.update(kw)
    return ProtocolSearchSpace(F, **args)


def rotated_gibbs(beta, angle):
    u = np.cos(angle) * np.eye(2) - 1j * np.sin(angle) * SIGMA_Y
    return u @ gibbs_state(H0, beta) @ u.conj().T


# ---------------------------------------------------------------------------
# search space

def test_space_validation():
    with pytest.raises(ValidationError, match="empty"):
        ProtocolSearchSpace(F, duration_grid=())
    with pytest.raises(ValidationError, match="cap"):
        ProtocolSearchSpace(F, k_max=6, duration_grid=tuple(range(1, 30)))
    with pytest.raises(ValidationError):
        ProtocolSearchSpace(F, controls=(0, 7))
    with pytest.raises(ValidationError):
        BathContact(davies_generator(H0, SIGMA_X, 1.0, 1.0), (-1.0,))
    assert MAX_CANDIDATES == 10 ** 7


def test_enumeration_sizes():
    s = unitary_space()
    assert s.cycle_count() == 1 + 24 + 24 ** 2
    b = bath_space()
    m = len(b.options)
    assert b.enumeration_size() == (1 + m) * 4
    bi = bath_space(interleave=True)
    assert bi.enumeration_size() == (1 + 3) + m * (1 + 2 * 3)
    assert set(s.duration_grid) <= set(s.refined_grid().duration_grid)
    assert len(s.refined_grid().duration_grid) == 2 * len(GRID)


def test_golden_section():
    x, fx = golden_section(lambda t: (t - 0.3) ** 2 + 1.0, 0.0, 2.0)
    assert abs(x - 0.3) < 1e-6 and abs(fx - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# closed-system functionals

def test_min_energy_population_swap():
    rho = np.diag([1 / 3, 2 / 3])
    res = min_accessible_energy(rho, unitary_space(), H0)
    assert abs(res.value - 1 / 3) < 1e-6
    # brute force over rotation angles about y
    brute = min(mean_energy(_rot(rho, a), H0) for a in np.linspace(0, np.pi, 401))
    assert res.value <= brute + 1e-6


def _rot(rho, a):
    u = np.cos(a / 2) * np.eye(2) - 1j * np.sin(a / 2) * SIGMA_Y
    return u @ rho @ u.conj().T


def test_min_energy_passive_and_single_control(rng):
    g = gibbs_state(H0, 0.6)
    assert abs(min_accessible_energy(g, unitary_space(), H0).value - mean_energy(g, H0)) < 1e-6
    rho = random_density(2, rng)
    single = ProtocolSearchSpace(ControlSet((H0,)), k_max=2, duration_grid=GRID)
    assert abs(min_accessible_energy(rho, single, H0).value - mean_energy(rho, H0)) < 1e-12


def test_certificate_revalidation(rng):
    rho = random_density(2, rng)
    res = min_accessible_energy(rho, unitary_space(), H0, refine=False)
    assert len(res.certificate) == CERTIFICATE_SIZE
    values = [v for _, v in res.certificate]
    assert values == sorted(values)
    for cyc, v in res.certificate:
        final = propagate_unitary(cyc, F, rho).states[-1]
        assert abs(mean_energy(final, H0) - v) < 1e-12
    assert res.stage == "enumeration" and res.details["examined"] == unitary_space().cycle_count()


def test_refinement_only_improves(rng):
    rho = random_density(2, rng)
    space = unitary_space(k_max=1, duration_grid=(0.3, 0.9))
    enum = min_accessible_energy(rho, space, H0, refine=False)
    ref = min_accessible_energy(rho, space, H0, refine=True)
    assert ref.value <= enum.value
    if ref.stage == "refined":
        final = propagate_unitary(ref.protocol, F, rho).states[-1]
        assert abs(mean_energy(final, H0) - ref.value) < 1e-12


def test_availability_gibbs_zero_and_attainment():
    assert abs(availability_F(gibbs_state(H0, 1.0), unitary_space(), H0)) < 1e-8
    for angle in (0.3, 0.7, 1.2):
        rho = rotated_gibbs(1.0, angle)
        bound = availability_unitary(rho, H0, 1.0)
        got = availability_F(rho, unitary_space(), H0)
        assert got >= 0.99 * bound and got <= bound + 1e-9


def test_availability_nested_monotone():
    full, sub = unitary_space(k_max=1), unitary_space(k_max=1, controls=(0, 1))
    for i in range(100):
        rho = random_density(2, stream(5, i))
        a_sub = availability_F(rho, sub, H0, refine=False)
        a_full = availability_F(rho, full, H0, refine=False)
        assert a_sub <= a_full + 1e-9


def test_entropy_for_cycle():
    g = gibbs_state(H0, 0.9)
    triv = WorkCycle.trivial(0, 1.0)
    assert abs(entropy_for_cycle(g, triv, F, H0) - thermal_entropy(H0, 0.9)) < 1e-10
    val = entropy_for_cycle(np.diag([2 / 3, 1 / 3]), triv, F, H0)
    assert abs(val - (np.log(3) - 2 / 3 * np.log(2))) < 1e-10
    rng = stream(8, 0)
    for _ in range(50):
        rho = random_density(2, rng)
        cyc = WorkCycle.sandwich(0, [(int(rng.integers(0, 3)), rng.uniform(0, 3)) for _ in range(2)])
        e = mean_energy(propagate_unitary(cyc, F, rho).states[-1], H0)
        if 1e-9 < e < 1 - 1e-9:
            assert entropy_for_cycle(rho, cyc, F, H0) >= von_neumann_entropy(rho) - 1e-9
            assert abs(entropy_for_cycle(rho, cyc, F, H0) - gibbs_entropy_at_energy(H0, e)) < 1e-12


def test_entropy_F_properties():
    g = gibbs_state(H0, 1.0)
    assert abs(entropy_F(g, unitary_space(), H0).value - von_neumann_entropy(g)) < 1e-6
    rho = rotated_gibbs(1.0, 0.7)
    assert abs(entropy_F(rho, unitary_space(), H0).value - von_neumann_entropy(rho)) < 1e-3
    rng = stream(9, 0)
    for _ in range(10):
        r = random_density(2, rng)
        big = entropy_F(r, unitary_space(k_max=1), H0, refine=False).value
        small = entropy_F(r, unitary_space(k_max=1, controls=(0, 1)), H0, refine=False).value
        assert big <= small + 1e-9
        assert big >= von_neumann_entropy(r) - 1e-6


def test_grid_halving_never_worse():
    rng = stream(10, 0)
    space = unitary_space(k_max=1, duration_grid=(0.4, 1.2, 2.0))
    for _ in range(10):
        r = random_density(2, rng)
        coarse = min_accessible_energy(r, space, H0, refine=False).value
        fine = min_accessible_energy(r, space.refined_grid(), H0, refine=False).value
        assert fine <= coarse + 1e-12


def test_longer_cycles_never_worse():
    # concatenation: k_max + 1 contains every k_max cycle
    rng = stream(11, 0)
    for _ in range(5):
        r = random_density(2, rng)
        short = entropy_F(r, unitary_space(k_max=1), H0, refine=False).value
        long = entropy_F(r, unitary_space(k_max=2), H0, refine=False).value
        assert long <= short + 1e-12


def test_origin_mismatch_rejected(rng):
    with pytest.raises(ValidationError):
        min_accessible_energy(random_density(2, rng), unitary_space(), SIGMA_X)


def test_determinism():
    rho = random_density(2, stream(12, 0))
    a = entropy_F(rho, unitary_space(k_max=1), H0)
    b = entropy_F(rho, unitary_space(k_max=1), H0)
    assert a.value == b.value and a.protocol == b.protocol


# ---------------------------------------------------------------------------
# P-entropy

def test_p_entropy_gibbs_self_consistency():
    g = gibbs_state(H0, 1.0)
    res = p_entropy(g, bath_space())
    assert abs(res.value - von_neumann_entropy(g)) <= 2e-3
    assert res.details["distance"] <= 1e-3
    assert set(res.details["eps_sensitivity"]) >= set(EPS_LADDER)


def test_p_entropy_lower_bound_and_certificate(rng):
    space = bath_space()
    targets = resolve_targets(space)
    for _ in range(3):
        r = random_density(2, rng)
        res = p_entropy(r, space, refine=False)
        assert res.value >= von_neumann_entropy(r) - 1e-6
        for proto, v in res.certificate:
            out = run_process(proto, space, r, targets)
            assert abs(out.objective - v) < 1e-9
            assert min(out.distances) <= 1e-3


def test_p_entropy_nested():
    rng = stream(13, 0)
    big = bath_space()
    small = bath_space(durations=(20.0, 40.0), controls=(0, 1))
    for _ in range(3):
        r = random_density(2, rng)
        assert p_entropy(r, big, refine=False).value <= p_entropy(r, small, refine=False).value + 1e-6


def test_p_entropy_unreachable():
    space = bath_space(durations=(0.1,))
    with pytest.raises(GibbsUnreachableError) as info:
        p_entropy(np.diag([0.0, 1.0]), space, eps_target=1e-6)
    assert info.value.best_distance > 1e-6


def test_p_entropy_requires_bath():
    with pytest.raises(ValidationError):
        p_entropy(np.eye(2) / 2, unitary_space())


def test_interleaved_contains_plain():
    r = random_density(2, stream(14, 0))
    plain = p_entropy(r, bath_space(), refine=False).value
    inter = p_entropy(r, bath_space(interleave=True), refine=False).value
    assert inter <= plain + 1e-12


def test_p_relative_and_displacement():
    g = gibbs_state(H0, 1.0)
    rel = p_relative_entropy(g, bath_space(), 1.0, H0)
    assert abs(rel.value) <= 2e-3
    value, target, _ = displacement(g, bath_space())
    assert abs(value) <= 2e-3 and target == (0, 1.0)
    rng = stream(15, 0)
    for _ in range(3):
        v, _, _ = displacement(random_density(2, rng), bath_space(), refine=False)
        assert v >= -1e-6


def test_displacement_decreases_under_relaxation():
    gen = davies_generator(H0, SIGMA_X, 1.0, 1.0)
    rho0 = rotated_gibbs(1.0, 0.9)
    rhoT = gen.evolve(rho0, 3.0)
    d0, _, _ = displacement(rho0, bath_space(), refine=False)
    dT, _, _ = displacement(rhoT, bath_space(), refine=False)
    assert d0 >= dT - 1e-6


def test_convexity():
    rng = stream(16, 0)
    space = unitary_space(k_max=1)
    r = random_density(2, rng)
    same = convexity_check([r, r], [0.4, 0.6], space, "F")
    assert abs(same.margin) < 1e-9
    for _ in range(20):
        states = [random_density(2, rng), random_density(2, rng)]
        w = rng.uniform()
        rep = convexity_check(states, [w, 1 - w], space, "F")
        assert rep.margin >= -1e-3
    rep = convexity_check([random_density(2, rng), gibbs_state(H0, 1.0)], [0.5, 0.5], bath_space(), "P")
    assert rep.holds
    with pytest.raises(ValidationError):
        convexity_check([r], [0.5], space)


def test_independent_subsystems():
    sp = bath_space(durations=(20.0, 40.0), k_max=0)
    r1 = random_density(2, stream(17, 0))
    r2 = random_density(2, stream(17, 1))
    rep = independent_subsystems_check(r1, sp, r2, sp)
    assert rep.residual <= 2e-3
    assert rep.joint_protocol


def test_process_protocol_durations():
    p = ProcessProtocol(WorkCycle.sandwich(0, [(1, 0.5), (2, 0.7)]), ((4, 0, 20.0),))
    assert p.durations() == [0.5, 0.7, 20.0]
    q = p.with_durations([0.1, 0.2, 3.0])
    assert q.durations() == [0.1, 0.2, 3.0]
    assert q.cycle.segments[0] == (0, 0.0)
