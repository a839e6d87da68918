"""Dataset generation and persistence.

Layout on disk:

    <root>/manifest.json        lattice dims, config, per-sample records
    <root>/states/<index>.lgsv  state vectors (format in loopgas.sim)

Each state file carries a 64-bit BLAKE2b checksum in the manifest.
"""
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lattice import LatticeGeometry, build_lattice
from .plgc import LoopBasisEnergy, PLGCParams, VQEConfig, vqe_ground_state
from .sim import StateVector, load_state, save_state

MANIFEST_VERSION = 1
DEFAULT_X_C_REF = 0.25
FERRO_OFFSET = 0.01  # ferromagnetic half starts at x_c_ref + 1e-2


@dataclass
class PhaseSample:
    x: float
    label: int               # -1 topological, +1 ferromagnetic
    thetas: np.ndarray
    vqe_energy: float
    state_path: str
    state: StateVector | None = None


@dataclass
class PhaseDataset:
    rows: int
    cols: int
    x_c_ref: float
    config: VQEConfig
    samples: list
    format_version: int = MANIFEST_VERSION

    @property
    def geometry(self) -> LatticeGeometry:
        return build_lattice(self.rows, self.cols)

    def xs(self) -> np.ndarray:
        return np.array([s.x for s in self.samples])

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples])


def phase_grid(x_c_ref: float = DEFAULT_X_C_REF, per_phase: int = 150):
    """Equidistant x grids for the two phases: [0, x_c] and [x_c + 0.01, 1]."""
    topo = np.linspace(0.0, x_c_ref, per_phase)
    ferro = np.linspace(x_c_ref + FERRO_OFFSET, 1.0, per_phase)
    return topo, ferro


def generate_dataset(geometry: LatticeGeometry, config: VQEConfig,
                     x_c_ref: float = DEFAULT_X_C_REF,
                     per_phase: int = 150,
                     progress=None) -> PhaseDataset:
    """Run one VQE per grid point and collect labeled ground states."""
    topo, ferro = phase_grid(x_c_ref, per_phase)
    evaluator = LoopBasisEnergy(geometry)
    samples = []
    for i, x in enumerate(np.concatenate([topo, ferro])):
        x = float(x)
        params, e, state = vqe_ground_state(geometry, x, config, evaluator=evaluator)
        label = -1 if x <= x_c_ref else 1
        samples.append(PhaseSample(
            x=x, label=label, thetas=params.thetas, vqe_energy=e,
            state_path=f"states/{i}.lgsv", state=state,
        ))
        if progress is not None:
            progress(i, len(topo) + len(ferro))
    return PhaseDataset(geometry.rows, geometry.cols, x_c_ref, config, samples)


def _checksum(path: Path) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(path.read_bytes())
    return h.hexdigest()


def save_dataset(dataset: PhaseDataset, root) -> None:
    root = Path(root)
    (root / "states").mkdir(parents=True, exist_ok=True)
    records = []
    for sample in dataset.samples:
        if sample.state is None:
            raise ValueError("cannot save a dataset with missing states")
        path = root / sample.state_path
        save_state(path, sample.state)
        records.append({
            "x": sample.x,
            "label": sample.label,
            "thetas": [float(t) for t in sample.thetas],
            "vqe_energy": sample.vqe_energy,
            "state_path": sample.state_path,
            "checksum": _checksum(path),
        })
    cfg = dataset.config
    manifest = {
        "format_version": dataset.format_version,
        "rows": dataset.rows,
        "cols": dataset.cols,
        "x_c_ref": dataset.x_c_ref,
        "vqe_config": {
            "iterations": cfg.iterations,
            "trials": cfg.trials,
            "learning_rate": cfg.learning_rate,
            "perturbation_scale": cfg.perturbation_scale,
            "seed": cfg.seed,
        },
        "samples": records,
    }
    with open(root / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)


def load_dataset(root, with_states: bool = True) -> PhaseDataset:
    root = Path(root)
    with open(root / "manifest.json") as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != MANIFEST_VERSION:
        raise ValueError(
            f"unsupported manifest version {manifest.get('format_version')}"
        )
    config = VQEConfig(**manifest["vqe_config"])
    samples = []
    for rec in manifest["samples"]:
        state = None
        path = root / rec["state_path"]
        if with_states:
            if _checksum(path) != rec["checksum"]:
                raise ValueError(f"checksum mismatch for {rec['state_path']}")
            state = load_state(path)
        samples.append(PhaseSample(
            x=rec["x"], label=rec["label"],
            thetas=np.asarray(rec["thetas"], dtype=float),
            vqe_energy=rec["vqe_energy"],
            state_path=rec["state_path"], state=state,
        ))
    return PhaseDataset(manifest["rows"], manifest["cols"], manifest["x_c_ref"],
                        config, samples, manifest["format_version"])


def split_random(dataset: PhaseDataset, train_fraction: float, seed: int):
    """Seeded shuffle split; always leaves at least one test sample."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train fraction must be in (0, 1)")
    n = len(dataset.samples)
    order = np.random.default_rng(seed).permutation(n)
    n_train = min(int(round(train_fraction * n)), n - 1)
    n_train = max(n_train, 1)
    train_idx = sorted(order[:n_train].tolist())
    test_idx = sorted(order[n_train:].tolist())
    return ([dataset.samples[i] for i in train_idx],
            [dataset.samples[i] for i in test_idx])


def split_physics_aware(dataset: PhaseDataset, lo: float = 0.2, hi: float = 0.4):
    """Train on |x| outside [lo, hi]; test inside the window (inclusive)."""
    if not lo < hi:
        raise ValueError("window must satisfy lo < hi")
    train = [s for s in dataset.samples if s.x < lo or s.x > hi]
    test = [s for s in dataset.samples if lo <= s.x <= hi]
    if not train:
        raise ValueError("physics-aware split leaves an empty training set")
    if not test:
        raise ValueError("physics-aware split leaves an empty test set")
    return train, test
