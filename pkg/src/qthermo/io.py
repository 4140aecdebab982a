"""JSON encodings for matrices, protocols and search spaces."""
from __future__ import annotations

import json

import numpy as np

from .entropy_functionals import BathContact, ProtocolSearchSpace
from .errors import ValidationError
from .open_dynamics import LindbladGenerator, davies_generator
from .protocols import ControlSet, WorkCycle


def encode_matrix(m) -> list:
    """Nested ``[re, im]`` pairs, row by row."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValidationError("only 2-D matrices can be encoded")
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def decode_matrix(data) -> np.ndarray:
    try:
        a = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"matrix is not a nested list of [re, im] pairs: {exc}") from None
    if a.ndim != 3 or a.shape[2] != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square with [re, im] entries, got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def encode_vector(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).ravel()]


# ---------------------------------------------------------------------------
# protocol files

def protocols_to_dict(F: ControlSet, cycles) -> dict:
    return {
        "control_set": [encode_matrix(h) for h in F.hamiltonians],
        "cycles": [
            {"origin": c.origin, "segments": [[int(i), float(t)] for i, t in c.segments]} for c in cycles
        ],
    }


def protocols_from_dict(data: dict):
    if set(data) != {"control_set", "cycles"}:
        raise ValidationError("protocol file needs exactly the keys control_set and cycles")
    F = ControlSet(tuple(decode_matrix(m) for m in data["control_set"]))
    cycles = [WorkCycle(int(c["origin"]), tuple((int(i), float(t)) for i, t in c["segments"])) for c in data["cycles"]]
    return F, cycles


def save_protocols(path, F: ControlSet, cycles) -> None:
    with open(path, "w") as fh:
        json.dump(protocols_to_dict(F, cycles), fh, indent=1)
        fh.write("\n")


def load_protocols(path):
    with open(path) as fh:
        return protocols_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# search-space files
#
# {"controls": [{"name": str, "matrix": M}], "origin": int, "k_max": int,
#  "duration_grid": [t], "allowed": [int] | null,
#  "bath_contacts": [{"name": str, "control": int, "coupling": M, "beta": b,
#                     "gamma0": g, "durations": [t]}],
#  "refinement": {"restarts": n, "iterations": n, "bounds": [lo, hi] | null},
#  "interleave": bool, "seed": int}

def space_to_dict(space: ProtocolSearchSpace, bath_specs=None) -> dict:
    """Encode a space.  Bath contacts need their Davies parameters in ``bath_specs``."""
    F = space.control_set
    baths = []
    for j, b in enumerate(space.bath_contacts):
        spec = dict(bath_specs[j]) if bath_specs else {}
        spec.setdefault("name", b.name)
        spec["durations"] = list(b.durations)
        if "coupling" in spec:
            spec["coupling"] = encode_matrix(spec["coupling"])
        baths.append(spec)
    return {
        "controls": [{"name": f"{F.name}[{i}]", "matrix": encode_matrix(h)} for i, h in enumerate(F.hamiltonians)],
        "origin": space.origin,
        "k_max": space.k_max,
        "duration_grid": list(space.duration_grid),
        "allowed": list(space.controls) if space.controls is not None else None,
        "bath_contacts": baths,
        "refinement": {
            "restarts": space.restarts,
            "iterations": space.cd_iterations,
            "bounds": list(space.duration_bounds) if space.duration_bounds is not None else None,
        },
        "interleave": space.interleave,
        "seed": space.seed,
    }


def space_from_dict(data: dict) -> ProtocolSearchSpace:
    F = ControlSet(tuple(decode_matrix(c["matrix"]) for c in data["controls"]))
    baths = []
    for b in data.get("bath_contacts", []):
        h = F[int(b["control"])]
        gen: LindbladGenerator = davies_generator(
            h, decode_matrix(b["coupling"]), float(b["beta"]), float(b.get("gamma0", 1.0)), b.get("name", "R")
        )
        baths.append(BathContact(gen, tuple(b["durations"]), b.get("name", "R")))
    ref = data.get("refinement", {}) or {}
    bounds = ref.get("bounds")
    return ProtocolSearchSpace(
        control_set=F,
        origin=int(data.get("origin", 0)),
        k_max=int(data.get("k_max", 2)),
        duration_grid=tuple(data.get("duration_grid", ())),
        bath_contacts=tuple(baths),
        controls=tuple(data["allowed"]) if data.get("allowed") is not None else None,
        restarts=int(ref.get("restarts", 2)),
        cd_iterations=int(ref.get("iterations", 3)),
        duration_bounds=tuple(bounds) if bounds is not None else None,
        interleave=bool(data.get("interleave", False)),
        seed=int(data.get("seed", 0)),
    )


def load_space(path) -> ProtocolSearchSpace:
    with open(path) as fh:
        return space_from_dict(json.load(fh))
