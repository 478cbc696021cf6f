"""Deterministic, order-independent seed derivation."""

from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    """Stable child seed from integer parts (e.g. master seed, fold, trial)."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def derive_rng(*parts: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
