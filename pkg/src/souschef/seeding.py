"""Deterministic RNG derivation from string labels.

Seeds are derived by hashing the label with SHA-256, so they are stable
across processes and immune to PYTHONHASHSEED.  Every stochastic component
takes a label like ``"human:42:pasta_pesto"`` and derives its own stream,
which keeps runs byte-for-byte reproducible.
"""

from __future__ import annotations

import hashlib
import random


def stable_seed(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stable_rng(label: str) -> random.Random:
    return random.Random(stable_seed(label))
