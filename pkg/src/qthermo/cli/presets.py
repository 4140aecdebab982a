"""Named configurations, one per documented example."""
import copy
import math

_GRID = [round(0.2 + i * (math.pi - 0.2) / 7, 12) for i in range(8)]

QUBIT_SPACE = {
    "controls": [
        {"name": "H0", "matrix": "diag:0,1"},
        {"name": "X", "matrix": "pauli:x"},
        {"name": "Y", "matrix": "pauli:y"},
    ],
    "origin": 0,
    "k_max": 2,
    "duration_grid": _GRID,
}

QUBIT_BATH_SPACE = {
    "controls": QUBIT_SPACE["controls"],
    "origin": 0,
    "k_max": 1,
    "duration_grid": _GRID[::2] + [math.pi],
    "bath_contacts": [
        {"name": "R", "control": 0, "coupling": "pauli:x", "beta": 1.0, "gamma0": 1.0, "durations": [5.0, 20.0, 40.0]}
    ],
}

PRESETS = {
    "qubit-swap": {
        "experiment": "jarzynski",
        "system": {"H": "diag:0,1", "H_final": "diag:0,1", "U": "pauli:x", "beta": math.log(2)},
    },
    "jarzynski-random": {
        "experiment": "jarzynski",
        "seed": 11,
        "system": {"H": "diag:0,0.7,1.9", "H_final": "diag:0.2,1,1.4", "beta": 0.8},
        "params": {"unital_terms": 1},
    },
    "jarzynski-unital": {
        "experiment": "jarzynski",
        "seed": 12,
        "system": {"H": "diag:0,0.7,1.9", "H_final": "diag:0,0.7,1.9", "beta": 0.8},
        "params": {"unital_terms": 3},
    },
    "gibbs-infinite-temperature": {"experiment": "gibbs", "system": {"H": "diag:0,1", "beta": 0.0}},
    "gibbs-qubit": {"experiment": "gibbs", "system": {"H": "diag:0,1", "beta": 1.0}},
    "gibbs-negative-temperature": {"experiment": "gibbs", "system": {"H": "diag:0,1,2", "beta": -1.0}},
    "work-identities": {
        "experiment": "work-identities",
        "seed": 1,
        "params": {"n_instances": 1000, "dims": [2, 3, 4]},
    },
    "finite-bath-4": {"experiment": "finite-bath", "system": {"beta": 1.0}, "params": {"bath_sizes": [4]}},
    "finite-bath-sweep": {
        "experiment": "finite-bath",
        "system": {"beta": 1.0},
        "params": {"bath_sizes": [2, 3, 4, 5, 6, 7, 8]},
    },
    "availability-rotated-gibbs": {
        "experiment": "availability",
        "system": {"H": "diag:0,1", "beta": 1.0, "rotation_angle": 0.7},
        "search_space": QUBIT_SPACE,
        "params": {"expect_attainment": 0.99},
    },
    "availability-gibbs": {
        "experiment": "availability",
        "system": {"H": "diag:0,1", "beta": 1.0, "rotation_angle": 0.0},
        "search_space": QUBIT_SPACE,
    },
    "entropy-f-rotated-gibbs": {
        "experiment": "entropy-f",
        "system": {"H": "diag:0,1", "beta": 1.0, "rotation_angle": 0.7},
        "search_space": QUBIT_SPACE,
    },
    "entropy-f-gibbs": {
        "experiment": "entropy-f",
        "system": {"H": "diag:0,1", "beta": 1.0},
        "search_space": QUBIT_SPACE,
    },
    "p-entropy-gibbs": {
        "experiment": "p-entropy",
        "system": {"H": "diag:0,1", "beta": 1.0},
        "search_space": QUBIT_BATH_SPACE,
    },
    "p-entropy-rotated": {
        "experiment": "p-entropy",
        "system": {"H": "diag:0,1", "beta": 1.0, "rotation_angle": 0.7},
        "search_space": QUBIT_BATH_SPACE,
    },
    "crooks-qubit": {
        "experiment": "crooks",
        "seed": 5,
        "system": {"H": "diag:0,1", "H_final": "diag:0,1.5", "beta": 0.9},
    },
    "arrow-of-time": {
        "experiment": "arrow-of-time",
        "seed": 6,
        "system": {"H": "diag:0,0.5,1.3", "H_final": "diag:0.1,0.9,1.0", "beta": 1.2},
    },
    "measurement-bounds": {
        "experiment": "measurement-bounds",
        "seed": 7,
        "params": {"n_instances": 1000, "dims": [2, 3, 4]},
    },
    "landauer-ladder": {
        "experiment": "landauer",
        "params": {"durations": [1, 2, 4, 8, 16, 32], "memory_dim": 2, "beta0": 1.0, "gamma0": 1.0},
    },
    "landauer-short": {
        "experiment": "landauer",
        "params": {"durations": [0.0, 1e-6], "memory_dim": 2, "beta0": 1.0, "gamma0": 1.0},
    },
    "property-suite": {"experiment": "property-suite", "seed": 2024, "params": {"n_instances": 100}},
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(name)
    return copy.deepcopy(PRESETS[name])
