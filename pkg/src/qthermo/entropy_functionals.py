"""Constrained infima over an explicit, finite protocol family.

Every infimum here is taken over a :class:`ProtocolSearchSpace`: all sandwich
cycles with up to ``k_max`` interior segments drawn from (control, duration)
options on a grid, optionally followed by (or, with ``interleave``, interrupted
by) one bath contact.  The search has two stages:

1. exhaustive enumeration at grid resolution (vectorized kernels);
2. golden-section coordinate descent over the durations of the ten best
   candidates plus seeded random restarts, accepting only improvements.

Results are therefore upper bounds on the true infimum and carry a
certificate of the best candidates seen.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import GibbsUnreachableError, ValidationError
from .kernels import sequence_energies, sequence_final_states
from .linalg import check_hermitian, tensor
from .open_dynamics import LindbladGenerator
from .protocols import ControlSet, WorkCycle, validate_cycle, work_extracted_two_point
from .sampling import stream
from .states import (
    gibbs_entropies_for_energies,
    gibbs_entropy_at_energy,
    gibbs_state,
    mean_energy,
    thermal_entropy,
    validate_density,
)

MAX_CANDIDATES = 10 ** 7
CERTIFICATE_SIZE = 10
EPS_LADDER = (1e-2, 1e-3, 1e-4)
_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class BathContact:
    generator: LindbladGenerator
    durations: tuple
    name: str = "R"

    def __post_init__(self):
        object.__setattr__(self, "durations", tuple(float(t) for t in self.durations))
        if any(not np.isfinite(t) or t < 0 for t in self.durations):
            raise ValidationError(f"bath {self.name}: durations must be finite and >= 0")

    @property
    def beta(self) -> float:
        return float(self.generator.bath_beta)

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.generator.hamiltonian


@dataclass(frozen=True, eq=False)
class ProtocolSearchSpace:
    """Finite protocol family: ``K <= k_max`` interior segments on a duration grid.

    ``controls`` restricts which control indices may appear inside cycles
    (default: all).  ``duration_bounds`` limit the refinement stage; the
    default upper bound is twice the largest grid duration.
    """

    control_set: ControlSet
    origin: int = 0
    k_max: int = 2
    duration_grid: tuple = (0.5, 1.0, 1.5)
    bath_contacts: tuple = ()
    controls: tuple | None = None
    restarts: int = 2
    cd_iterations: int = 3
    duration_bounds: tuple | None = None
    interleave: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "duration_grid", tuple(float(t) for t in self.duration_grid))
        object.__setattr__(self, "bath_contacts", tuple(self.bath_contacts))
        if self.controls is not None:
            object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        if self.k_max < 0:
            raise ValidationError("k_max must be >= 0")
        if self.k_max > 0 and not self.duration_grid:
            raise ValidationError("empty search space: no durations on the grid")
        if any(not np.isfinite(t) or t < 0 for t in self.duration_grid):
            raise ValidationError("grid durations must be finite and >= 0")
        if not 0 <= self.origin < len(self.control_set):
            raise ValidationError(f"origin {self.origin} out of range")
        for c in self.allowed_controls:
            if not 0 <= c < len(self.control_set):
                raise ValidationError(f"control index {c} out of range")
        for b in self.bath_contacts:
            if b.generator.dim != self.control_set.dim:
                raise ValidationError(f"bath {b.name} acts on the wrong dimension")
        size = self.enumeration_size()
        if size > MAX_CANDIDATES:
            raise ValidationError(f"search space has {size} candidates, above the cap {MAX_CANDIDATES}")

    @property
    def allowed_controls(self) -> tuple:
        return tuple(range(len(self.control_set))) if self.controls is None else self.controls

    @property
    def options(self) -> list:
        return [(c, t) for c in self.allowed_controls for t in self.duration_grid]

    @property
    def bath_options(self) -> list:
        return [(j, t) for j, b in enumerate(self.bath_contacts) for t in b.durations]

    @property
    def bounds(self) -> tuple:
        if self.duration_bounds is not None:
            return tuple(float(x) for x in self.duration_bounds)
        top = max(self.duration_grid, default=1.0)
        return (0.0, 2.0 * top)

    def cycle_count(self) -> int:
        m = len(self.options)
        return sum(m ** k for k in range(self.k_max + 1))

    def enumeration_size(self, with_baths: bool = True) -> int:
        """Candidates examined by the enumeration stage."""
        m, nb = len(self.options), len(self.bath_options)
        if not with_baths or nb == 0:
            return self.cycle_count()
        if self.interleave:
            return sum(m ** k * (1 + (k + 1) * nb) for k in range(self.k_max + 1))
        return self.cycle_count() * (1 + nb)

    def size_report(self) -> dict:
        return {
            "controls": len(self.allowed_controls),
            "grid": len(self.duration_grid),
            "k_max": self.k_max,
            "bath_options": len(self.bath_options),
            "interleave": self.interleave,
            "cycles": self.cycle_count(),
            "candidates": self.enumeration_size(),
        }

    def with_changes(self, **kw) -> "ProtocolSearchSpace":
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields.update(kw)
        return ProtocolSearchSpace(**fields)

    def refined_grid(self) -> "ProtocolSearchSpace":
        """Same space with every grid spacing halved (a superset of candidates)."""
        g = sorted(set(self.duration_grid))
        extra = [0.5 * (a + b) for a, b in zip(g, g[1:])]
        if g and g[0] > 0:
            extra.append(0.5 * g[0])
        return self.with_changes(duration_grid=tuple(sorted(set(g) | set(extra))))


@dataclass(frozen=True)
class ProcessProtocol:
    """A work cycle plus bath contacts ``(after_segment, bath_index, duration)``.

    A contact with ``after_segment = n`` happens after the first ``n``
    segments of the cycle have run.
    """

    cycle: WorkCycle
    contacts: tuple = ()

    def sort_key(self):
        return self.cycle.sort_key() + (tuple(self.contacts),)

    def durations(self):
        interior = self.cycle.durations[1:-1] if len(self.cycle.segments) > 1 else []
        return list(interior) + [t for _, _, t in self.contacts]

    def with_durations(self, durations) -> "ProcessProtocol":
        durations = list(durations)
        segs = list(self.cycle.segments)
        n_int = len(segs) - 2 if len(segs) > 1 else 0
        for i in range(n_int):
            segs[i + 1] = (segs[i + 1][0], float(durations[i]))
        contacts = tuple((a, j, float(t)) for (a, j, _), t in zip(self.contacts, durations[n_int:]))
        return ProcessProtocol(WorkCycle(self.cycle.origin, tuple(segs)), contacts)


@dataclass
class InfimumResult:
    value: float
    protocol: object
    stage: str
    certificate: list
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# enumeration helpers

def _propagator_table(F: ControlSet, options):
    eig = {}
    out = np.empty((len(options), F.dim, F.dim), dtype=complex)
    for i, (c, t) in enumerate(options):
        if c not in eig:
            eig[c] = np.linalg.eigh(F[c])
        w, v = eig[c]
        out[i] = (v * np.exp(-1j * w * t)) @ v.conj().T
    return out


def _sequences(n_options: int, k_max: int) -> np.ndarray:
    """All option sequences, shortest first, padded with -1 to ``k_max`` columns."""
    blocks = []
    for k in range(k_max + 1):
        if k == 0:
            blocks.append(np.full((1, k_max), -1, dtype=np.int64))
            continue
        rows = np.array(list(itertools.product(range(n_options), repeat=k)), dtype=np.int64).reshape(-1, k)
        pad = np.full((rows.shape[0], k_max - k), -1, dtype=np.int64)
        blocks.append(np.hstack([rows, pad]))
    return np.vstack(blocks) if k_max else np.zeros((1, 0), dtype=np.int64)


def _cycle_from_row(space: ProtocolSearchSpace, row) -> WorkCycle:
    opts = space.options
    interior = [opts[s] for s in row if s >= 0]
    if not interior:
        return WorkCycle.trivial(space.origin)
    return WorkCycle.sandwich(space.origin, interior)


def _select(values: np.ndarray, key_of, n: int = CERTIFICATE_SIZE):
    """Indices of the best ``n`` finite values, ties broken by ``key_of(index)``.

    Values within ``_TIE`` (relative) of each other count as equal.
    """
    finite = np.flatnonzero(np.isfinite(values))
    if finite.size == 0:
        return []
    vals = values[finite]
    take = min(finite.size, max(4 * n, 64))
    pool = finite[np.argpartition(vals, take - 1)[:take]] if take < finite.size else finite
    cutoff = values[pool].max()
    # include every candidate tied with the pool boundary so tie-breaking is complete
    scale = max(1.0, abs(float(cutoff)))
    pool = finite[values[finite] <= cutoff + _TIE * scale]
    pool = sorted(pool.tolist(), key=lambda i: values[i])
    groups, cur = [], [pool[0]]
    for i in pool[1:]:
        if values[i] - values[cur[0]] <= _TIE * max(1.0, abs(values[cur[0]])):
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    out = []
    for g in groups:
        out.extend(sorted(g, key=key_of))
        if len(out) >= n:
            break
    return out[:n]


# ---------------------------------------------------------------------------
# refinement

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, tol: float = 1e-8, max_iter: int = 200):
    """Minimize ``f`` on [lo, hi] assuming unimodality; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _coordinate_descent(objective, x0, bounds_per_coord, iterations: int, tol: float = 1e-8):
    x = list(x0)
    best = objective(x)
    for _ in range(iterations):
        improved = False
        for j, (lo, hi) in enumerate(bounds_per_coord):
            def f(s, j=j):
                y = list(x)
                y[j] = s
                return objective(y)
            s, val = golden_section(f, lo, hi, tol)
            if val < best - 1e-15:
                x[j], best, improved = s, val, True
        if not improved:
            break
    return x, best


def _refine(space, candidates, evaluate, bounds_for, rng_stream_offset: int = 0):
    """Coordinate-descent over durations.  ``candidates`` = [(protocol, value)], best first."""
    starts = [p for p, _ in candidates]
    if starts:
        top = starts[0]
        for r in range(space.restarts):
            rng = stream(space.seed, rng_stream_offset + r)
            bnds = bounds_for(top)
            x = [rng.uniform(lo, hi) for lo, hi in bnds]
            starts.append(top.with_durations(x))
    best_p, best_v = None, math.inf
    for p in starts:
        bnds = bounds_for(p)
        if not bnds:
            continue

        def objective(x, p=p):
            return evaluate(p.with_durations(x))

        x, v = _coordinate_descent(objective, p.durations(), bnds, space.cd_iterations)
        if v < best_v:
            best_p, best_v = p.with_durations(x), v
    return best_p, best_v


def _interior(cycle: WorkCycle):
    return cycle.durations[1:-1] if len(cycle.segments) > 1 else []


class _CycleDurations:
    """Adapter so plain cycles refine only their interior durations."""

    def __init__(self, cycle: WorkCycle):
        self.cycle = cycle

    def durations(self):
        return _interior(self.cycle)

    def with_durations(self, durations):
        segs = list(self.cycle.segments)
        for i, t in enumerate(durations):
            segs[i + 1] = (segs[i + 1][0], float(t))
        return _CycleDurations(WorkCycle(self.cycle.origin, tuple(segs)))


# ---------------------------------------------------------------------------
# closed-system functionals

def _check_origin(space: ProtocolSearchSpace, H) -> np.ndarray:
    h = check_hermitian(H, "H")
    h0 = space.control_set[space.origin]
    if h.shape != h0.shape or np.max(np.abs(h - h0)) > 1e-10:
        raise ValidationError("H must be the origin Hamiltonian of the search space")
    return h


def _final_state(cycle: WorkCycle, F: ControlSet, rho) -> np.ndarray:
    u = np.eye(F.dim, dtype=complex)
    for c, t in cycle.segments:
        w, v = np.linalg.eigh(F[c])
        u = (v * np.exp(-1j * w * t)) @ v.conj().T @ u
    return u @ rho @ u.conj().T


def _closed_search(rho, space: ProtocolSearchSpace, score_energies, refine: bool, energy_h):
    """Shared two-stage search where the objective depends only on the final origin energy."""
    F = space.control_set
    options = space.options
    seqs = _sequences(len(options), space.k_max)
    energies = sequence_energies(_propagator_table(F, options), seqs, rho, energy_h)
    values = score_energies(energies)

    def key_of(i):
        return _cycle_from_row(space, seqs[i]).sort_key()

    top = _select(values, key_of)
    cert = [(_cycle_from_row(space, seqs[i]), float(values[i])) for i in top]
    best_cycle, best_val = cert[0]
    stage = "enumeration"
    if refine and space.k_max > 0:
        def evaluate(pc):
            e = mean_energy(_final_state(pc.cycle, F, rho), energy_h)
            return float(score_energies(np.array([e]))[0])

        lo, hi = space.bounds
        cands = [(_CycleDurations(c), v) for c, v in cert if len(c.segments) > 2]
        p, v = _refine(space, cands, evaluate, lambda pc: [(lo, hi)] * len(pc.durations()))
        if p is not None and v < best_val - _TIE * max(1.0, abs(best_val)):
            best_cycle, best_val, stage = p.cycle, v, "refined"
            cert = [(best_cycle, best_val)] + cert[: CERTIFICATE_SIZE - 1]
    details = {"size": space.size_report(), "examined": int(len(values))}
    return InfimumResult(float(best_val), best_cycle, stage, cert, details)


def min_accessible_energy(rho, space: ProtocolSearchSpace, H, refine: bool = True) -> InfimumResult:
    """Lowest origin energy ``Tr[H rho_final]`` reachable by cycles in the space."""
    rho = validate_density(rho)
    h = _check_origin(space, H)
    return _closed_search(rho, space, lambda e: e, refine, h)


def availability_F(rho, space: ProtocolSearchSpace, H, refine: bool = True) -> float:
    """Maximum work extractable by cycles in the space: ``Tr[rho H] - min energy``."""
    rho = validate_density(rho)
    res = min_accessible_energy(rho, space, H, refine)
    return mean_energy(rho, H) - res.value


def entropy_for_cycle(rho, cycle: WorkCycle, F: ControlSet, H) -> float:
    """Entropy of the Gibbs state with energy ``Tr[rho H] - W`` after the cycle."""
    validate_cycle(cycle, F)
    h = check_hermitian(H, "H")
    if np.max(np.abs(h - F[cycle.origin])) > 1e-10:
        raise ValidationError("H must be the origin Hamiltonian of the cycle")
    rho = validate_density(rho)
    energy = mean_energy(rho, h) - work_extracted_two_point(cycle, F, rho)
    return gibbs_entropy_at_energy(h, energy)


def entropy_F(rho, space: ProtocolSearchSpace, H, refine: bool = True) -> InfimumResult:
    """Infimum of :func:`entropy_for_cycle` over the unitary cycles of the space.

    Energies at a spectral endpoint score the limiting Gibbs entropy
    ln(degeneracy) rather than raising.
    """
    rho = validate_density(rho)
    h = _check_origin(space, H)
    w = np.linalg.eigvalsh(h)

    def score(e):
        e = np.clip(e, w[0], w[-1])
        return gibbs_entropies_for_energies(w, e, clip_endpoints=True)

    return _closed_search(rho, space, score, refine, h)


# ---------------------------------------------------------------------------
# open-system functionals

def _composites(unitaries, seqs):
    n, k = seqs.shape
    d = unitaries.shape[1]
    v = np.broadcast_to(np.eye(d, dtype=complex), (n, d, d)).copy()
    for j in range(k):
        idx = seqs[:, j]
        live = idx >= 0
        if np.any(live):
            v[live] = unitaries[idx[live]] @ v[live]
    return v


def _batched_entropy(states):
    lam = np.linalg.eigvalsh(0.5 * (states + np.conj(np.swapaxes(states, 1, 2))))
    lam = np.clip(lam, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.where(lam > 0, lam * np.log(lam), 0.0).sum(axis=1)


def _batched_trace_distance(states, target):
    diff = states - target
    lam = np.linalg.eigvalsh(0.5 * (diff + np.conj(np.swapaxes(diff, 1, 2))))
    return 0.5 * np.abs(lam).sum(axis=1)


def _energies(states, h):
    return np.einsum("ij,nji->n", h, states).real


def _apply_super(P, states):
    n, d, _ = states.shape
    return (states.reshape(n, d * d) @ P.T).reshape(n, d, d)


def resolve_targets(space: ProtocolSearchSpace, gibbs_targets=None):
    """Gibbs targets as ``[(control index, beta)]``; default: every control at every finite bath beta."""
    if gibbs_targets is None:
        betas = sorted({b.beta for b in space.bath_contacts if np.isfinite(b.beta)})
        gibbs_targets = [(c, b) for c in range(len(space.control_set)) for b in betas]
    out = []
    for c, beta in gibbs_targets:
        if not 0 <= int(c) < len(space.control_set):
            raise ValidationError(f"Gibbs target control {c} out of range")
        out.append((int(c), float(beta)))
    if not out:
        raise ValidationError("no Gibbs targets: the space needs a bath with finite beta")
    return out


@dataclass
class ProcessOutcome:
    final_state: np.ndarray
    heats: dict
    objective: float
    distances: list


def run_process(protocol: ProcessProtocol, space: ProtocolSearchSpace, rho, targets) -> ProcessOutcome:
    """Step-by-step evaluation of a process (independent of the batched search)."""
    F = space.control_set
    rho = np.asarray(rho, dtype=complex)
    by_slot = {}
    for a, j, t in protocol.contacts:
        by_slot.setdefault(a, []).append((j, t))
    heats = {}

    def contacts_at(slot, state):
        for j, t in by_slot.get(slot, []):
            b = space.bath_contacts[j]
            P = scipy.linalg.expm(b.generator.superoperator() * t)
            d = state.shape[0]
            out = (P @ state.reshape(d * d)).reshape(d, d)
            heats[j] = heats.get(j, 0.0) + mean_energy(state, b.hamiltonian) - mean_energy(out, b.hamiltonian)
            state = out
        return state

    state = contacts_at(0, rho)
    for n, (c, t) in enumerate(protocol.cycle.segments, start=1):
        w, v = np.linalg.eigh(F[c])
        u = (v * np.exp(-1j * w * t)) @ v.conj().T
        state = u @ state @ u.conj().T
        state = contacts_at(n, state)
    s = float(_batched_entropy(state[None])[0])
    obj = s + sum(space.bath_contacts[j].beta * q for j, q in heats.items())
    dists = [
        float(_batched_trace_distance(state[None], gibbs_state(F[c], beta))[0]) for c, beta in targets
    ]
    return ProcessOutcome(state, heats, float(obj), dists)


def _process_candidates(rho, space: ProtocolSearchSpace):
    """Yield ``(protocol_builder, final_states, objective)`` blocks over the whole space."""
    F = space.control_set
    d = F.dim
    options = space.options
    table = _propagator_table(F, options)
    seqs = _sequences(len(options), space.k_max)
    lengths = (seqs >= 0).sum(axis=1) if seqs.shape[1] else np.zeros(len(seqs), dtype=int)
    bath_opts = space.bath_options
    supers = [space.bath_contacts[j].generator.propagator(t) for j, t in bath_opts]

    # no contact at all: unitary cycles only
    finals = sequence_final_states(table, seqs, rho) if len(seqs) else np.empty((0, d, d))
    ent = _batched_entropy(finals)
    yield [(i, None) for i in range(len(seqs))], finals, ent

    for k in range(space.k_max + 1):
        rows = np.flatnonzero(lengths == k)
        if rows.size == 0:
            continue
        positions = range(k + 1) if space.interleave else (k,)
        for p in positions:
            pre = _composites(table, seqs[rows, :p]) if p else np.broadcast_to(np.eye(d), (rows.size, d, d))
            sub = seqs[rows, p:k]
            post = _composites(table, sub) if k - p else None
            mid = pre @ rho @ np.conj(np.swapaxes(pre, 1, 2))
            for b, (j, t) in enumerate(bath_opts):
                bath = space.bath_contacts[j]
                out = _apply_super(supers[b], mid)
                q = _energies(mid, bath.hamiltonian) - _energies(out, bath.hamiltonian)
                if post is not None:
                    out = post @ out @ np.conj(np.swapaxes(post, 1, 2))
                obj = _batched_entropy(out) + bath.beta * q
                yield [(int(i), (p, j, t)) for i in rows], out, obj


def _protocol_from(space, row, contact) -> ProcessProtocol:
    cycle = _cycle_from_row(space, row)
    if contact is None:
        return ProcessProtocol(cycle)
    p, j, t = contact
    k = len(cycle.segments) - 2 if len(cycle.segments) > 1 else 0
    after = len(cycle.segments) if p == k else 1 + p
    return ProcessProtocol(cycle, ((after, j, float(t)),))


def p_entropy(rho, space: ProtocolSearchSpace, gibbs_targets=None, eps_target: float = 1e-3,
              refine: bool = True) -> InfimumResult:
    """Infimum of ``S_I(rho_final) + sum_R beta_R Q_R`` over processes that land near a Gibbs target.

    A process lands when its final state is within trace distance
    ``eps_target`` of some ``Gibbs(beta, F[c])`` target.  ``Q_R`` is the heat
    delivered to bath R.  ``details`` carries the matched target, the achieved
    distance, the target entropy and the value for each epsilon in
    ``EPS_LADDER``.
    """
    rho = validate_density(rho)
    if not space.bath_contacts:
        raise ValidationError("the P-entropy needs at least one bath contact in the space")
    if any(not np.isfinite(b.beta) for b in space.bath_contacts):
        raise ValidationError("P-entropy bath ledgers need finite bath beta")
    targets = resolve_targets(space, gibbs_targets)
    gibbs = [gibbs_state(space.control_set[c], beta) for c, beta in targets]
    seqs = _sequences(len(space.options), space.k_max)

    labels, objs, dists, which = [], [], [], []
    for lab, finals, obj in _process_candidates(rho, space):
        if not lab:
            continue
        dd = np.stack([_batched_trace_distance(finals, g) for g in gibbs], axis=1)
        labels.extend(lab)
        objs.append(obj)
        dists.append(dd.min(axis=1))
        which.append(dd.argmin(axis=1))
    objs = np.concatenate(objs)
    dists = np.concatenate(dists)
    which = np.concatenate(which)

    def key_of(i):
        row, contact = labels[i]
        return _protocol_from(space, seqs[row], contact).sort_key()

    def best_for(eps):
        vals = np.where(dists <= eps, objs, np.inf)
        return _select(vals, key_of), vals

    sensitivity = {}
    for eps in sorted(set(EPS_LADDER) | {eps_target}):
        idx, vals = best_for(eps)
        sensitivity[eps] = float(vals[idx[0]]) if idx else None
    top, vals = best_for(eps_target)
    if not top:
        raise GibbsUnreachableError(
            f"no protocol lands within trace distance {eps_target:g} of a Gibbs target "
            f"(best achieved {float(dists.min()):.3e})",
            float(dists.min()),
        )
    cert = [(_protocol_from(space, seqs[labels[i][0]], labels[i][1]), float(vals[i])) for i in top]
    best_p, best_v = cert[0]
    best_i = top[0]
    stage = "enumeration"
    if refine:
        lo, hi = space.bounds
        contact_hi = 2.0 * max((t for _, t in space.bath_options), default=hi)

        def evaluate(p):
            out = run_process(p, space, rho, targets)
            return out.objective if min(out.distances) <= eps_target else math.inf

        def bounds_for(p):
            n_int = len(p.cycle.segments) - 2 if len(p.cycle.segments) > 1 else 0
            return [(lo, hi)] * n_int + [(0.0, contact_hi)] * len(p.contacts)

        p, v = _refine(space, cert, evaluate, bounds_for)
        if p is not None and v < best_v - _TIE * max(1.0, abs(best_v)):
            best_p, best_v, stage = p, v, "refined"
            cert = [(best_p, best_v)] + cert[: CERTIFICATE_SIZE - 1]
    outcome = run_process(best_p, space, rho, targets)
    ti = int(np.argmin(outcome.distances))
    c, beta = targets[ti]
    details = {
        "size": space.size_report(),
        "examined": int(len(objs)),
        "target": (c, beta),
        "distance": outcome.distances[ti],
        "target_entropy": thermal_entropy(space.control_set[c], beta),
        "eps_target": eps_target,
        "eps_sensitivity": sensitivity,
        "interleave": space.interleave,
        "enumeration_target": targets[int(which[best_i])],
    }
    return InfimumResult(float(best_v), best_p, stage, cert, details)


class PRelative(NamedTuple):
    value: float
    p_entropy: InfimumResult


def p_relative_entropy(rho, space: ProtocolSearchSpace, beta: float, H, eps_target: float = 1e-3,
                       refine: bool = True, result: InfimumResult | None = None) -> PRelative:
    """``S(beta,H) - S(rho;P) + beta (<H>_rho - <H>_Gibbs)``."""
    rho = validate_density(rho)
    h = check_hermitian(H, "H")
    res = result if result is not None else p_entropy(rho, space, None, eps_target, refine)
    g = gibbs_state(h, beta)
    val = thermal_entropy(h, beta) - res.value + beta * (mean_energy(rho, h) - mean_energy(g, h))
    return PRelative(float(val), res)


def displacement(rho, space: ProtocolSearchSpace, gibbs_targets=None, eps_target: float = 1e-3,
                 refine: bool = True):
    """Minimum P-relative entropy over the Gibbs targets; returns ``(value, (c, beta), p_entropy_result)``."""
    targets = resolve_targets(space, gibbs_targets)
    res = p_entropy(rho, space, targets, eps_target, refine)
    best = None
    for c, beta in targets:
        v = p_relative_entropy(rho, space, beta, space.control_set[c], result=res).value
        if best is None or v < best[0]:
            best = (v, (c, beta))
    return best[0], best[1], res


# ---------------------------------------------------------------------------
# convexity and independent subsystems

class ConvexityReport(NamedTuple):
    mixture_value: float
    weighted_sum: float
    margin: float
    holds: bool
    tolerance: float


def convexity_check(states: Sequence, weights: Sequence[float], space: ProtocolSearchSpace,
                    functional: str = "F", H=None, refine: bool = False,
                    tolerance: float = 1e-3, **kw) -> ConvexityReport:
    """``S(sum_k w_k rho_k) - sum_k w_k S(rho_k)`` with both sides on the same space.

    ``functional`` is ``"F"`` (cycle entropy) or ``"P"`` (P-entropy).
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValidationError("weights must be non-negative and sum to 1")
    if functional == "F":
        h = space.control_set[space.origin] if H is None else H

        def f(r):
            return entropy_F(r, space, h, refine).value
    elif functional == "P":
        def f(r):
            return p_entropy(r, space, refine=refine, **kw).value
    else:
        raise ValidationError(f"unknown functional {functional!r}")
    mix = sum(wk * np.asarray(r, dtype=complex) for wk, r in zip(w, states))
    lhs = f(mix)
    rhs = float(sum(wk * f(r) for wk, r in zip(w, states) if wk > 0))
    margin = lhs - rhs
    return ConvexityReport(float(lhs), rhs, float(margin), margin >= -tolerance, tolerance)


def _embed_protocol(p: ProcessProtocol, factor: int, F_joint_index, bath_offset: int) -> list:
    """Flatten a factor process into joint steps ``("u", joint control, t)`` / ``("b", joint bath, t)``."""
    steps = []
    by_slot = {}
    for a, j, t in p.contacts:
        by_slot.setdefault(a, []).append((j, t))
    for a in range(len(p.cycle.segments) + 1):
        if a:
            c, t = p.cycle.segments[a - 1]
            steps.append(("u", F_joint_index(factor, c), t))
        for j, t in by_slot.get(a, []):
            steps.append(("b", bath_offset + j, t))
    return steps


class IndependentReport(NamedTuple):
    joint: float
    separate: float
    residual: float
    first: InfimumResult
    second: InfimumResult
    joint_protocol: tuple


def independent_subsystems_check(rho1, space1: ProtocolSearchSpace, rho2, space2: ProtocolSearchSpace,
                                 eps_target: float = 1e-3, refine: bool = False) -> IndependentReport:
    """Compare ``S(rho1 x rho2; P)`` with ``S(rho1; P1) + S(rho2; P2)``.

    The joint process family runs a process of each factor side by side with
    no coupling.  Joint candidates are pairs from the ranked candidates of
    each factor; each pair is executed on the tensor-product space (unitaries
    ``U x I`` / ``I x U``, baths embedded factor-wise) and scored by the joint
    entropy plus both bath ledgers, landing against the product Gibbs targets.
    """
    r1 = p_entropy(rho1, space1, eps_target=eps_target, refine=refine)
    r2 = p_entropy(rho2, space2, eps_target=eps_target, refine=refine)
    d1, d2 = space1.control_set.dim, space2.control_set.dim
    t1 = resolve_targets(space1)
    t2 = resolve_targets(space2)
    targets = [
        tensor(gibbs_state(space1.control_set[a], ba), gibbs_state(space2.control_set[b], bb))
        for a, ba in t1 for b, bb in t2
    ]
    rho = tensor(np.asarray(rho1, dtype=complex), np.asarray(rho2, dtype=complex))
    gens = [b.generator.embed((d1, d2), 0) for b in space1.bath_contacts]
    gens += [b.generator.embed((d1, d2), 1) for b in space2.bath_contacts]
    betas = [b.beta for b in space1.bath_contacts] + [b.beta for b in space2.bath_contacts]

    def run(steps):
        state = rho
        score = 0.0
        for kind, idx, t in steps:
            if kind == "u":
                factor, c = idx
                if factor == 0:
                    h = tensor(space1.control_set[c], np.eye(d2))
                else:
                    h = tensor(np.eye(d1), space2.control_set[c])
                w, v = np.linalg.eigh(h)
                u = (v * np.exp(-1j * w * t)) @ v.conj().T
                state = u @ state @ u.conj().T
            else:
                g = gens[idx]
                P = scipy.linalg.expm(g.superoperator() * t)
                out = (P @ state.reshape(-1)).reshape(state.shape)
                score += betas[idx] * (mean_energy(state, g.hamiltonian) - mean_energy(out, g.hamiltonian))
                state = out
        score += float(_batched_entropy(state[None])[0])
        dist = min(float(_batched_trace_distance(state[None], g)[0]) for g in targets)
        return score, dist

    best = (math.inf, None)
    nb1 = len(space1.bath_contacts)
    pairs = sorted(
        ((v1 + v2, i, j) for i, (_, v1) in enumerate(r1.certificate) for j, (_, v2) in enumerate(r2.certificate)),
    )
    for _, i, j in pairs:
        p1, p2 = r1.certificate[i][0], r2.certificate[j][0]
        steps = _embed_protocol(p1, 0, lambda f, c: (f, c), 0) + _embed_protocol(p2, 1, lambda f, c: (f, c), nb1)
        val, dist = run(steps)
        if dist <= eps_target and val < best[0]:
            best = (val, steps)
    separate = r1.value + r2.value
    return IndependentReport(float(best[0]), float(separate), float(abs(best[0] - separate)), r1, r2,
                             tuple(best[1]) if best[1] else ())
