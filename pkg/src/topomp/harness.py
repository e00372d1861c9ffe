"""Executable geometric property checks for message-passing layers:
permutation equivariance, orientation equivariance and locality."""

from __future__ import annotations

import numpy as np

from .complex import Complex, FeatureStore, flip_orientation, permute
from .engine import forward_model

__all__ = [
    "random_permutations",
    "permutation_deviation",
    "orientation_deviation",
]


def random_permutations(complex: Complex, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {
        r: tuple(int(i) for i in rng.permutation(complex.n_cells(r)))
        for r in range(complex.max_rank + 1)
        if complex.n_cells(r) > 1
    }


def permutation_deviation(complex, layers, params, H: FeatureStore, seed: int = 0) -> float:
    """Max abs difference between forward-then-permute and permute-then-forward."""
    perms = random_permutations(complex, seed)
    out = forward_model(complex, layers, H, params)
    pcx, full = permute(complex, perms)
    pout = forward_model(pcx, layers, H.permuted(full), params)
    expected = out.permuted(full)
    dev = 0.0
    for r in pout:
        if r in expected:
            dev = max(dev, float(np.max(np.abs(pout[r] - expected[r]), initial=0.0)))
    return dev


def orientation_deviation(
    complex, layers, params, H: FeatureStore, rank: int, flip_indices, seed: int = 0
) -> float:
    """Max abs violation of orientation equivariance when the given rank-r
    cells are flipped: flipped rows must negate, every other feature row at
    every rank must be unchanged."""
    flip_indices = sorted(set(flip_indices))
    out = forward_model(complex, layers, H, params)
    fcx = flip_orientation(complex, rank, flip_indices)
    flipped_H = {}
    for r in H:
        arr = np.array(H[r])
        if r == rank:
            arr[flip_indices] = -arr[flip_indices]
        flipped_H[r] = arr
    fout = forward_model(fcx, layers, FeatureStore(flipped_H), params)
    dev = 0.0
    for r in fout:
        want = np.array(out[r])
        if r == rank:
            want[flip_indices] = -want[flip_indices]
        dev = max(dev, float(np.max(np.abs(fout[r] - want), initial=0.0)))
    return dev
