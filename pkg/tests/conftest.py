import os
from pathlib import Path

import numpy as np
import pytest

from msts import Dataset, load_uea

DATA = Path(__file__).parent / "data"

# criterion id -> (passed, detail); filled by test_acceptance, printed at the end
CRITERIA: dict[str, tuple[bool, str]] = {}


def synthetic(n_per_class=4, n_classes=3, n_features=4, length=5, seed=0, signal=(1.0, 0.5, 0.0, 0.0), noise=0.6):
    """Class-dependent offsets per feature plus Gaussian noise.

    ``signal[f]`` scales how far apart the classes sit on feature ``f``.
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), n_per_class)
    rng.shuffle(labels)
    scale = np.resize(np.asarray(signal, dtype=float), n_features)
    X = rng.normal(0.0, noise, size=(labels.size, n_features, length))
    X += labels[:, None, None] * scale[None, :, None]
    return Dataset(X, labels.astype(str), [str(c) for c in range(n_classes)], name=f"synthetic{seed}")


@pytest.fixture
def make_dataset():
    return synthetic


def uea_dir():
    d = os.environ.get("MSTS_UEA_DIR")
    return Path(d) if d else None


def load_archive(name: str):
    """Dataset ``name`` from ``$MSTS_UEA_DIR/<name>/``, or ``None`` if unavailable."""
    root = uea_dir()
    if root is None or not (root / name).is_dir():
        return None
    return load_uea(root / name)


def bundled(name: str):
    return load_uea(f"{DATA / (name + '_TRAIN.ts')},{DATA / (name + '_TEST.ts')}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: int(k.split()[0])):
        passed, detail = CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
