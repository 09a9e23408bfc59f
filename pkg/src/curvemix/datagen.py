"""Seeded simulated curve datasets.

Uniforms come from numpy's PCG64 bit generator; normal variates are obtained
from them by the inverse normal CDF. Both choices are recorded in
``CurveSet.meta`` so an experiment can be re-run from its metadata.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .basis import BasisSpec, design_matrix
from .model import CurveSet, MixtureParams

RNG_NAME = "PCG64"
NORMAL_METHOD = "inverse-cdf"
SCENARIOS = ("two_class", "three_class")


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str
    n: int
    m: int
    seed: int

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.n < 1 or self.m < 2:
            raise ValueError("need n >= 1 and m >= 2")


def standard_normals(rng: np.random.Generator, size) -> np.ndarray:
    # 53-bit uniforms on the open interval (0, 1)
    u = (rng.integers(0, 2**53, size=size, dtype=np.int64) + 0.5) / 2.0**53
    return ndtri(u)


def _meta(scenario: str, seed: int) -> dict:
    return {"scenario": scenario, "seed": int(seed), "rng": RNG_NAME,
            "normal_method": NORMAL_METHOD}


def _stratified(templates, sigmas, counts, x, rng) -> CurveSet:
    ys, labels = [], []
    for label, (f, sigma, count) in enumerate(zip(templates, sigmas, counts), start=1):
        mean = f(x)
        ys.append(mean[None, :] + sigma * standard_normals(rng, (count, x.size)))
        labels.extend([label] * count)
    return CurveSet(x, np.vstack(ys), np.array(labels))


def two_class_templates():
    return (lambda x: 0.3 * x + 0.4, lambda x: 0.1 * x + 0.5), (0.02, 0.03)


def three_class_templates():
    templates = (
        lambda x: 0.8 + 0.5 * np.exp(-1.5 * x) * np.sin(1.3 * np.pi * x),
        lambda x: 0.5 + 0.8 * np.exp(-x) * np.sin(0.9 * np.pi * x),
        lambda x: 1.0 + 0.5 * np.exp(-x) * np.sin(1.2 * np.pi * x),
    )
    return templates, (0.04, 0.04, 0.05)


def generate_two_class(seed: int = 0) -> CurveSet:
    """20 linear curves on 50 points, 10 per class."""
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, 50)
    templates, sigmas = two_class_templates()
    data = _stratified(templates, sigmas, (10, 10), x, rng)
    data.meta = _meta("two_class", seed)
    return data


def generate_three_class(seed: int = 0) -> CurveSet:
    """100 non-linear curves on 50 points, split 40/30/30."""
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, 50)
    templates, sigmas = three_class_templates()
    data = _stratified(templates, sigmas, (40, 30, 30), x, rng)
    data.meta = _meta("three_class", seed)
    return data


def generate(scenario: str, seed: int = 0) -> CurveSet:
    if scenario == "two_class":
        return generate_two_class(seed)
    if scenario == "three_class":
        return generate_three_class(seed)
    raise ValueError(f"unknown scenario {scenario!r}")


def sample_from_mixture(params: MixtureParams, basis: BasisSpec, n: int, m: int,
                        x_grid=None, seed: int = 0) -> CurveSet:
    """Draw n curves from a regression mixture on a shared grid (default: m points on [0, 1])."""
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, m) if x_grid is None else np.asarray(x_grid, dtype=float)
    if x.size != m:
        raise ValueError("x_grid must have m points")
    X = design_matrix(basis, x).values
    cdf = np.cumsum(params.pi)
    u = (rng.integers(0, 2**53, size=n, dtype=np.int64) + 0.5) / 2.0**53
    z = np.minimum(np.searchsorted(cdf / cdf[-1], u, side="right"), params.K - 1)
    eps = standard_normals(rng, (n, m))
    y = (X @ params.beta.T).T[z] + np.sqrt(params.sigma2)[z, None] * eps
    data = CurveSet(x, y, z + 1)
    data.meta = {"scenario": "mixture", "seed": int(seed), "rng": RNG_NAME,
                 "normal_method": NORMAL_METHOD}
    return data
