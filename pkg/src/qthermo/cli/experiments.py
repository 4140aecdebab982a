"""One runner per subcommand: config dict + context -> checks, results and artifacts."""
from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .. import sweeps
from ..entropy_functionals import (
    ProcessProtocol,
    ProtocolSearchSpace,
    availability_F,
    entropy_F,
    entropy_for_cycle,
    p_entropy,
    resolve_targets,
    run_process,
)
from ..errors import TemperatureDivergesError, ValidationError
from ..finite_bath import default_cycle, default_system_controls, finite_bath_experiment, finite_bath_sweep
from ..fluctuations import crooks_check, dissipation_irreversibility, jarzynski_check, tpm_distribution
from ..io import decode_matrix, encode_matrix, protocols_from_dict, space_from_dict
from ..linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, check_hermitian, unitary_propagator
from ..measurement import landauer_erasure_experiment
from ..open_dynamics import davies_generator, detailed_balance_residual
from ..protocols import (
    WorkCycle,
    availability_unitary,
    composite_propagator,
    propagate_unitary,
    work_extracted_integral,
    work_extracted_two_point,
    work_relative_entropy_identity,
)
from ..sampling import random_density, random_unital_mixture, random_unitary, stream
from ..states import gibbs_state, mean_energy, thermal_entropy, von_neumann_entropy

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def parse_matrix(spec, name="matrix") -> np.ndarray:
    """Nested ``[re, im]`` pairs or one of ``diag:a,b,..``, ``pauli:x``, ``eye:d``, ``zeros:d``."""
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        try:
            if kind == "diag":
                return np.diag([float(x) for x in arg.split(",") if x.strip()]).astype(complex)
            if kind == "pauli":
                return _PAULI[arg].copy()
            if kind == "eye":
                return np.eye(int(arg), dtype=complex)
            if kind == "zeros":
                d = int(arg)
                return np.zeros((d, d), dtype=complex)
        except (ValueError, KeyError):
            pass
        raise ValidationError(f"{name}: cannot parse matrix shorthand {spec!r}")
    return decode_matrix(spec)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Context:
    def __init__(self, out_dir, seed: int, tol_scale: float = 1.0, overrides=None, threads: int = 1):
        self.out_dir = out_dir
        self.seed = int(seed)
        self.tol_scale = float(tol_scale)
        self.overrides = dict(overrides or {})
        self.threads = max(1, int(threads))
        self.checks = []
        self.results = {}
        self.artifacts = []

    def tol(self, name: str, default: float) -> float:
        return self.overrides.get(name, default) * self.tol_scale

    def check(self, name, lhs, rhs, residual, tol):
        t = self.tol(name, tol)
        self.checks.append({
            "name": name,
            "lhs": float(lhs),
            "rhs": float(rhs),
            "residual": float(residual),
            "tolerance": float(t),
            "pass": bool(residual <= t),
        })

    def sweep_check(self, sweep, tol):
        i = sweep.worst
        self.check(sweep.name, sweep.lhs[i], sweep.rhs[i], sweep.max_residual, tol)

    def _path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        self.artifacts.append(name)
        return os.path.join(self.out_dir, name)

    def write_json(self, name, obj):
        with open(self._path(name), "w", newline="\n") as fh:
            json.dump(_jsonable(obj), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def write_csv(self, name, header, rows):
        with open(self._path(name), "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(header)
            for row in rows:
                out.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# config helpers

def _system(cfg):
    return cfg.get("system", {})


def _params(cfg):
    return cfg.get("params", {})


def _beta(cfg, default=1.0):
    return float(_system(cfg).get("beta", default))


def _hamiltonian(cfg, key="H", default=None):
    sysc = _system(cfg)
    if key not in sysc:
        if default is None:
            raise ValidationError(f"system.{key} is required for this experiment")
        return default
    return check_hermitian(parse_matrix(sysc[key], key), key)


def _rotation(theta: float, d: int) -> np.ndarray:
    """``exp(-i theta Y)`` on the two lowest levels."""
    u = np.eye(d, dtype=complex)
    u[:2, :2] = unitary_propagator(SIGMA_Y, theta)
    return u


def _state(cfg, h, beta):
    """``system.rho`` if given, else a Gibbs state rotated by ``rotation_angle`` (default 0)."""
    sysc = _system(cfg)
    if "rho" in sysc:
        return parse_matrix(sysc["rho"], "rho"), False
    theta = float(sysc.get("rotation_angle", 0.0))
    g = gibbs_state(h, beta)
    u = _rotation(theta, h.shape[0])
    return u @ g @ u.conj().T, theta == 0.0


def _space(cfg) -> ProtocolSearchSpace:
    if "search_space" not in cfg:
        raise ValidationError("this experiment needs a search_space")
    spec = json.loads(json.dumps(cfg["search_space"]))
    for c in spec["controls"]:
        c["matrix"] = encode_matrix(parse_matrix(c["matrix"], c.get("name", "control")))
    for b in spec.get("bath_contacts", []):
        b["coupling"] = encode_matrix(parse_matrix(b["coupling"], "coupling"))
    ref = spec.get("refinement", {})
    spec["refinement"] = {k: v for k, v in ref.items() if k != "enabled"}
    return space_from_dict(spec)


def _refine(cfg) -> bool:
    return bool(cfg.get("search_space", {}).get("refinement", {}).get("enabled", True))


def protocol_json(p):
    if isinstance(p, WorkCycle):
        return {"origin": p.origin, "segments": [list(s) for s in p.segments]}
    if isinstance(p, ProcessProtocol):
        d = protocol_json(p.cycle)
        d["contacts"] = [list(c) for c in p.contacts]
        return d
    return repr(p)


def _certificate(res):
    return [{"protocol": protocol_json(p), "value": v} for p, v in res.certificate]


def _driving(cfg, ctx):
    """``(H_i, U or None, kraus or None, H_f, beta)`` from the config."""
    beta = _beta(cfg)
    sysc = _system(cfg)
    if "protocol" in cfg:
        F, cycles = protocols_from_dict(_decoded_protocol(cfg["protocol"]))
        h_i = F[cycles[0].origin]
        u = composite_propagator(cycles[0], F)
        h_f = _hamiltonian(cfg, "H_final", h_i)
        return h_i, u, None, h_f, beta
    h_i = _hamiltonian(cfg, "H")
    h_f = _hamiltonian(cfg, "H_final", h_i)
    if "U" in sysc:
        return h_i, parse_matrix(sysc["U"], "U"), None, h_f, beta
    rng = stream(ctx.seed, 0)
    terms = int(_params(cfg).get("unital_terms", 1))
    if terms > 1:
        return h_i, None, random_unital_mixture(h_i.shape[0], terms, rng), h_f, beta
    return h_i, random_unitary(h_i.shape[0], rng), None, h_f, beta


def _decoded_protocol(spec):
    return {
        "control_set": [encode_matrix(parse_matrix(m, "control")) for m in spec["control_set"]],
        "cycles": spec["cycles"],
    }


# ---------------------------------------------------------------------------
# runners

def run_gibbs(cfg, ctx):
    h = _hamiltonian(cfg)
    beta = _beta(cfg)
    rho = gibbs_state(h, beta)
    d = h.shape[0]
    lam = np.linalg.eigvalsh(rho)
    ctx.check("unit_trace", np.trace(rho).real, 1.0, abs(np.trace(rho).real - 1.0), 1e-12)
    ctx.check("positivity", lam.min(), 0.0, max(0.0, -lam.min()), 1e-12)
    if beta == 0:
        dev = float(np.max(np.abs(rho - np.eye(d) / d)))
        ctx.check("infinite_temperature_state", dev, 0.0, dev, 1e-14)
    out = {
        "beta": beta,
        "state": encode_matrix(rho),
        "entropy": von_neumann_entropy(rho),
        "energy": mean_energy(rho, h),
    }
    if np.isfinite(beta):
        out["thermal_entropy"] = thermal_entropy(h, beta)
    ctx.results.update(out)
    ctx.write_json("gibbs.json", out)


def run_work_identities(cfg, ctx):
    p = _params(cfg)
    n = int(p.get("n_instances", 1000))
    dims = tuple(p.get("dims", (2, 3, 4)))
    rows = []
    for sw, tol, sweep_dims in (
        (sweeps.thermo_stability_sweep, 1e-9, tuple(range(2, 9))),
        (sweeps.work_equivalence_sweep, 1e-9, dims),
        (sweeps.gibbs_passivity_sweep, 1e-10, dims),
        (sweeps.work_entropy_sweep, 1e-9, dims),
    ):
        s = sw(n, ctx.seed, sweep_dims, threads=ctx.threads)
        ctx.sweep_check(s, tol)
        rows.extend((s.name, i, s.lhs[i], s.rhs[i], s.residual[i]) for i in range(n))
    if "protocol" in cfg:
        F, cycles = protocols_from_dict(_decoded_protocol(cfg["protocol"]))
        beta = _beta(cfg)
        for j, cyc in enumerate(cycles):
            rho, _ = _state(cfg, F[cyc.origin], beta)
            traj = propagate_unitary(cyc, F, rho)
            a, b = work_extracted_integral(cyc, F, traj), work_extracted_two_point(cyc, F, rho)
            ctx.check(f"cycle{j}_work_equivalence", a, b, abs(a - b), 1e-9)
            lhs, rhs = work_relative_entropy_identity(cyc, F, rho, beta)
            ctx.check(f"cycle{j}_work_entropy", lhs, rhs, abs(lhs - rhs), 1e-9)
    ctx.write_csv("work_identities.csv", ["sweep", "instance", "lhs", "rhs", "residual"], rows)


def run_finite_bath(cfg, ctx):
    p = _params(cfg)
    sizes = list(p.get("bath_sizes", [4]))
    beta = _beta(cfg)
    F = default_system_controls()
    cyc = default_cycle(float(p.get("cycle_duration", 2.0)))
    if "protocol" in cfg:
        F, cycles = protocols_from_dict(_decoded_protocol(cfg["protocol"]))
        cyc = cycles[0]
    records = []
    if len(sizes) >= 3:
        sw = finite_bath_sweep(F, cyc, sizes, beta, seed=ctx.seed)
        reports = sw["reports"]
        slope = sw["slope_asymmetry"]
        ctx.check("asymmetry_slope_negative", slope, 0.0, max(0.0, slope), 0.0)
        ctx.results["slope_asymmetry"] = slope
        ctx.results["slope_relative_entropy_gap"] = sw["slope_relative_entropy_gap"]
        ctx.write_csv(
            "finite_bath_sweep.csv",
            ["bath_size", "asymmetry_term", "relative_entropy_gap"],
            zip(sizes, sw["asymmetry_term"], sw["relative_entropy_gap"]),
        )
    else:
        reports = [finite_bath_experiment(F, cyc, n, beta, seed=ctx.seed) for n in sizes]
    for rep in reports:
        for r in rep.records:
            records.append(r.to_dict())
            ctx.check(f"{r.identity}_n{r.bath_size}", r.lhs, r.rhs, r.residual, 1e-8)
    ctx.write_json("finite_bath_records.json", records)


def run_availability(cfg, ctx):
    h = _hamiltonian(cfg)
    beta = _beta(cfg)
    rho, _ = _state(cfg, h, beta)
    space = _space(cfg)
    a_f = availability_F(rho, space, h, _refine(cfg))
    a_u = availability_unitary(rho, h, beta)
    ctx.check("availability_nonnegative", a_f, 0.0, max(0.0, -a_f), 1e-9)
    ctx.check("availability_below_unitary_bound", a_f, a_u, max(0.0, a_f - a_u), 1e-9)
    frac = _params(cfg).get("expect_attainment")
    if frac is not None:
        ctx.check("availability_attainment", a_f, frac * a_u, max(0.0, frac * a_u - a_f), 0.0)
    ctx.results.update({"availability": a_f, "unitary_bound": a_u})
    ctx.write_json("availability.json", ctx.results)


def run_entropy_f(cfg, ctx):
    h = _hamiltonian(cfg)
    beta = _beta(cfg)
    rho, is_gibbs = _state(cfg, h, beta)
    space = _space(cfg)
    res = entropy_F(rho, space, h, _refine(cfg))
    s_i = von_neumann_entropy(rho)
    ctx.check("entropy_lower_bound", res.value, s_i, max(0.0, s_i - res.value), 1e-6)
    if is_gibbs:
        ctx.check("gibbs_self_consistency", res.value, s_i, abs(res.value - s_i), 1e-6)
    try:
        again = entropy_for_cycle(rho, res.protocol, space.control_set, h)
        ctx.check("certificate_revalidation", again, res.value, abs(again - res.value), 1e-9)
    except TemperatureDivergesError:
        pass
    out = {"value": res.value, "stage": res.stage, "von_neumann": s_i, "size": res.details["size"],
           "protocol": protocol_json(res.protocol), "certificate": _certificate(res)}
    ctx.results.update({k: out[k] for k in ("value", "stage", "von_neumann")})
    ctx.write_json("entropy_f.json", out)


def run_p_entropy(cfg, ctx):
    h = _hamiltonian(cfg)
    beta = _beta(cfg)
    rho, is_gibbs = _state(cfg, h, beta)
    space = _space(cfg)
    eps = float(_params(cfg).get("eps_target", 1e-3))
    res = p_entropy(rho, space, eps_target=eps, refine=_refine(cfg))
    s_i = von_neumann_entropy(rho)
    ctx.check("p_entropy_lower_bound", res.value, s_i, max(0.0, s_i - res.value), 1e-6)
    bath_betas = {b.beta for b in space.bath_contacts}
    if is_gibbs and beta in bath_betas:
        ctx.check("gibbs_self_consistency", res.value, s_i, abs(res.value - s_i), 2e-3)
    again = run_process(res.protocol, space, rho, resolve_targets(space)).objective
    ctx.check("certificate_revalidation", again, res.value, abs(again - res.value), 1e-9)
    out = {
        "value": res.value,
        "stage": res.stage,
        "von_neumann": s_i,
        "target": res.details["target"],
        "distance": res.details["distance"],
        "target_entropy": res.details["target_entropy"],
        "eps_sensitivity": {repr(k): v for k, v in res.details["eps_sensitivity"].items()},
        "size": res.details["size"],
        "protocol": protocol_json(res.protocol),
        "certificate": _certificate(res),
    }
    ctx.results.update({k: out[k] for k in ("value", "stage", "von_neumann", "distance", "eps_sensitivity")})
    ctx.write_json("p_entropy.json", out)


def _distribution(cfg, ctx):
    h_i, u, kraus, h_f, beta = _driving(cfg, ctx)
    return tpm_distribution(h_i, u, h_f, beta, kraus=kraus), (h_i, u, h_f, beta)


def run_jarzynski(cfg, ctx):
    dist, _ = _distribution(cfg, ctx)
    rep = jarzynski_check(dist)
    total = float(dist.probability.sum())
    ctx.check("normalization", total, 1.0, abs(total - 1.0), 1e-10)
    ctx.check("jarzynski", rep.lhs, rep.rhs, rep.residual, 1e-10)
    ctx.check("jensen", rep.mean_work, rep.free_energy_change, max(0.0, -rep.jensen_gap), 1e-10)
    ctx.results.update(rep._asdict())
    ctx.results["distribution"] = [[float(w), float(p)] for w, p in zip(dist.work, dist.probability)]
    path = ctx._path("work_distribution.csv")
    dist.to_csv(path)


def run_crooks(cfg, ctx):
    dist, (h_i, u, h_f, beta) = _distribution(cfg, ctx)
    if u is None:
        raise ValidationError("the Crooks check needs a unitary protocol")
    rep = crooks_check(dist, h_i, u, h_f)
    ctx.check("crooks_pointwise", rep.max_residual, 0.0, rep.max_residual, 1e-8)
    ctx.results["points"] = [list(p) for p in rep.points]
    dist.to_csv(ctx._path("work_distribution_forward.csv"))
    rep.reverse.to_csv(ctx._path("work_distribution_reverse.csv"))


def run_arrow(cfg, ctx):
    h_i, u, kraus, h_f, beta = _driving(cfg, ctx)
    if u is None:
        raise ValidationError("the arrow-of-time identity needs a unitary protocol")
    rep = dissipation_irreversibility(h_i, u, h_f, beta)
    ctx.check("arrow_of_time", rep.lhs, rep.rhs, rep.residual, 1e-9)
    ctx.results.update(rep._asdict())
    ctx.write_json("arrow_of_time.json", rep._asdict())


def run_measurement(cfg, ctx):
    p = _params(cfg)
    n = int(p.get("n_instances", 1000))
    dims = tuple(p.get("dims", (2, 3, 4)))
    lower, upper = sweeps.information_gain_sweep(n, ctx.seed, dims, ctx.threads)
    ctx.sweep_check(lower, 1e-9)
    ctx.sweep_check(upper, 1e-9)
    pre = sweeps.premeasurement_sweep(n, ctx.seed, dims, ctx.threads)
    ctx.sweep_check(pre, 1e-9)
    tally = sweeps.c12_tally(n, ctx.seed, dims, ctx.threads)
    ctx.results["c12_tally_general_instruments"] = tally
    ctx.write_csv(
        "measurement_bounds.csv",
        ["instance", "gain", "shannon", "projective_shannon", "projective_c12"],
        ((i, upper.lhs[i], upper.rhs[i], pre.lhs[i], pre.rhs[i]) for i in range(n)),
    )
    ctx.write_json("measurement_summary.json", {"instances": n, "dims": list(dims), "c12_tally": tally})


def run_landauer(cfg, ctx):
    p = _params(cfg)
    durations = list(p.get("durations", [1, 2, 4, 8, 16, 32]))
    gamma0 = float(p.get("gamma0", 1.0))
    beta0 = float(p.get("beta0", 1.0))
    n_steps = int(p.get("n_steps", 128))
    rep = landauer_erasure_experiment(
        [t / gamma0 for t in durations], int(p.get("memory_dim", 2)), beta0, gamma0,
        float(p.get("gap_max", 10.0)), n_steps,
    )
    for pt in rep.points:
        ctx.check(f"landauer_t{pt.duration:g}", beta0 * pt.heat, -pt.entropy_change,
                  max(0.0, -pt.landauer_margin), 1e-6)
        if pt.duration == 0:
            ctx.check("no_evolution_heat", pt.heat, 0.0, abs(pt.heat), 1e-12)
            ctx.check("no_evolution_entropy", pt.entropy_change, 0.0, abs(pt.entropy_change), 1e-12)
    # monotone decrease is claimed on the standard ladder (contacts of at least 1/gamma0)
    if len(rep.points) >= 2 and min(durations) >= 1:
        steps = np.diff([pt.excess_heat for pt in rep.points])
        worst = float(steps.max())
        ctx.check("excess_heat_monotone", worst, 0.0, max(0.0, worst), 0.0)
        slow = rep.points[-1]
        if slow.total_duration * gamma0 >= 100:
            ratio = beta0 * slow.heat / abs(slow.entropy_change)
            ctx.check("quasi_static_ratio", ratio, 1.0, abs(ratio - 1.0), 0.05)
    ctx.write_csv("landauer.csv", ["duration", "heat", "entropy_change", "excess_heat"], rep.rows())
    summary = {
        "q_infinity": rep.q_infinity,
        "fit_C": rep.fit_C,
        "fit_residuals": rep.fit_residuals,
        "warnings": rep.warnings,
        "n_steps": n_steps,
        "total_durations": [pt.total_duration for pt in rep.points],
    }
    ctx.results.update(summary)
    ctx.write_json("landauer_summary.json", summary)


def run_property_suite(cfg, ctx):
    p = _params(cfg)
    n = int(p.get("n_instances", 100))
    seed, th = ctx.seed, ctx.threads
    battery = [
        (sweeps.thermo_stability_sweep(n, seed, tuple(range(2, 9)), th), 1e-9),
        (sweeps.work_equivalence_sweep(n, seed, threads=th), 1e-9),
        (sweeps.gibbs_passivity_sweep(n, seed, threads=th), 1e-10),
        (sweeps.work_entropy_sweep(n, seed, threads=th), 1e-9),
        (sweeps.jarzynski_sweep(n, seed, threads=th), 1e-10),
        (sweeps.unital_jarzynski_sweep(n, seed, threads=th), 1e-9),
        (sweeps.crooks_sweep(n, seed, threads=th), 1e-8),
        (sweeps.arrow_sweep(n, seed, threads=th), 1e-9),
        (sweeps.dpi_sweep(n, seed, threads=th), 1e-9),
        (sweeps.premeasurement_sweep(n, seed, threads=th), 1e-9),
    ]
    lower, upper = sweeps.information_gain_sweep(n, seed, threads=th)
    battery += [(lower, 1e-9), (upper, 1e-9)]
    rows = []
    for s, tol in battery:
        ctx.sweep_check(s, tol)
        rows.append((s.name, len(s.residual), s.max_residual))
    # Davies generator on a random qudit
    rng = stream(seed, 1 << 40)
    d = 3
    h = np.diag(np.sort(rng.uniform(0, 2, d))).astype(complex)
    a = np.zeros((d, d), dtype=complex)
    a[np.triu_indices(d, 1)] = 1.0
    gen = davies_generator(h, a + a.T, 0.7, 1.0)
    fixed = float(np.max(np.abs(gen(gibbs_state(h, 0.7)))))
    ctx.check("davies_gibbs_fixed_point", fixed, 0.0, fixed, 1e-10)
    db = detailed_balance_residual(gen)
    ctx.check("davies_detailed_balance", db, 0.0, db, 1e-10)
    # entropy functionals on a small qubit space
    space = _space({"search_space": {
        "controls": [{"matrix": "diag:0,1"}, {"matrix": "pauli:x"}],
        "k_max": 2, "duration_grid": [0.4, 0.8, 1.6],
    }})
    h0 = space.control_set[0]
    worst = (0.0, 0.0, 0.0)
    for i in range(4):
        r = random_density(2, stream(seed, (1 << 41) + i))
        v = entropy_F(r, space, h0, refine=False).value
        s_i = von_neumann_entropy(r)
        if s_i - v >= worst[2]:
            worst = (v, s_i, s_i - v)
    ctx.check("entropy_F_lower_bound", worst[0], worst[1], max(0.0, worst[2]), 1e-6)
    ctx.write_csv("property_suite.csv", ["sweep", "instances", "max_residual"], rows)
