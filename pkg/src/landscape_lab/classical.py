"""Probability distributions and random functions on a finite phase space.

The continuous phase space of a classical system is represented by a
partition into ``m`` cells; the sigma-algebra is the power set of the cells.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .errors import InvalidDistribution, LambdaOutOfRange, SpaceMismatch
from .quantum import entropy_from_probabilities, gibbs_weights


@dataclass(frozen=True)
class PhaseSpace:
    cells: int
    labels: tuple = field(default=None)

    def __post_init__(self):
        if int(self.cells) < 1:
            raise ValueError(f"phase space needs at least one cell, got {self.cells}")
        object.__setattr__(self, "cells", int(self.cells))
        if self.labels is not None:
            labels = tuple(str(l) for l in self.labels)
            if len(labels) != self.cells:
                raise ValueError(f"{len(labels)} labels for {self.cells} cells")
            if len(set(labels)) != len(labels):
                raise ValueError("cell labels must be distinct")
            object.__setattr__(self, "labels", labels)

    def label_list(self):
        return list(self.labels) if self.labels is not None else [str(i) for i in range(self.cells)]


def _vector(values, space):
    v = np.array(values, dtype=float)
    if v.ndim != 1 or v.shape[0] != space.cells:
        raise SpaceMismatch(f"expected {space.cells} entries, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability weights per cell: nonnegative (A1) and normalised (A2).

    Additivity over disjoint cell sets (A3) holds because the probability of a
    set of cells is defined as the sum of its weights; see ``probability``.
    """

    space: PhaseSpace
    weights: np.ndarray

    def __post_init__(self):
        w = _vector(self.weights, self.space)
        if not np.all(np.isfinite(w)):
            raise InvalidDistribution("weights must be finite")
        low = float(np.min(w))
        if low < -TOL.distribution_clamp:
            raise InvalidDistribution(f"weight {low:.3e} violates nonnegativity", -low)
        w = np.clip(w, 0.0, None)
        err = abs(float(np.sum(w)) - 1.0)
        if err > TOL.validity:
            raise InvalidDistribution(f"|sum of weights - 1| = {err:.3e} exceeds {TOL.validity}", err)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def cells(self):
        return self.space.cells

    def probability(self, cells):
        """Measure of a set of cell indices."""
        idx = sorted(set(int(c) for c in cells))
        return float(np.sum(self.weights[idx])) if idx else 0.0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)


@dataclass(frozen=True, eq=False)
class RandomFunction:
    """A real observable O(omega), one value per cell."""

    space: PhaseSpace
    values: np.ndarray

    def __post_init__(self):
        v = _vector(self.values, self.space)
        if not np.all(np.isfinite(v)):
            raise ValueError("random function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def cells(self):
        return self.space.cells

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def distribution(weights, labels=None):
    w = np.asarray(weights, dtype=float)
    return Distribution(PhaseSpace(w.shape[0], labels), w)


def random_function(values, labels=None):
    v = np.asarray(values, dtype=float)
    return RandomFunction(PhaseSpace(v.shape[0], labels), v)


def point_mass(m, cell):
    w = np.zeros(m)
    w[cell] = 1.0
    return distribution(w)


def uniform(m):
    return distribution(np.full(m, 1.0 / m))


def _same_space(a, b):
    if a.space.cells != b.space.cells or (
        a.space.labels is not None and b.space.labels is not None and a.space.labels != b.space.labels
    ):
        raise SpaceMismatch(f"phase spaces differ: {a.space} vs {b.space}")


def expectation(dist, f):
    """Average of ``f`` under ``dist``: sum_i f_i p_i."""
    _same_space(dist, f)
    return float(np.dot(f.values, dist.weights))


def convex_combine_c(d0, d1, lam):
    if not 0.0 <= lam <= 1.0:
        raise LambdaOutOfRange(f"lambda = {lam} outside [0, 1]")
    _same_space(d0, d1)
    return Distribution(d0.space, (1.0 - lam) * d0.weights + lam * d1.weights)


def entropy_c(dist, family="shannon"):
    """Shannon (nats) or Tsallis entropy of a distribution."""
    if not isinstance(dist, Distribution):
        raise InvalidDistribution(f"expected a Distribution, got {type(dist).__name__}")
    return float(entropy_from_probabilities(dist.weights, family))


def gibbs_distribution(f, temperature):
    """Weights proportional to exp(-f_i / T)."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    w, _ = gibbs_weights(f.values, temperature)
    return Distribution(f.space, w)


def random_distribution(rng, m, size=None):
    """Flat Dirichlet sample(s), uniform over the simplex."""
    return rng.dirichlet(np.ones(m), size=size)


def vector_to_json(space, key, values):
    return {"labels": space.label_list(), key: [float(x) for x in values]}


def distribution_to_json(d):
    return vector_to_json(d.space, "weights", d.weights)


def random_function_to_json(f):
    return vector_to_json(f.space, "values", f.values)


def distribution_from_json(obj):
    return distribution(obj["weights"], obj.get("labels"))


def random_function_from_json(obj):
    return random_function(obj["values"], obj.get("labels"))
