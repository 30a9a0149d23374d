"""
Brute-force and sampling verifiers.

These are deliberately naive correctness witnesses used by the test suite:
random search over feasible sets, central finite differences and Monte-Carlo
expectations. They depend on numpy only and share no code with the
algorithms they check.
"""

from dataclasses import dataclass
from typing import Any, Callable, NamedTuple

import numpy as np

__all__ = [
    "Sphere",
    "Stiefel",
    "SearchResult",
    "MCEstimate",
    "sample_feasible",
    "random_feasible_search",
    "finite_diff_gradient",
    "mc_expectation",
    "gaussian_symbols",
]


@dataclass(frozen=True)
class Sphere:
    """Vectors of length ``dim`` with Euclidean norm ``radius``.

    With ``real=True`` the sphere is real; a real 1-dimensional sphere is the
    two points ``{-radius, +radius}``.
    """
    dim: int
    radius: float = 1.0
    real: bool = False


@dataclass(frozen=True)
class Stiefel:
    """``n x p`` complex matrices whose columns are orthogonal with norm
    ``scale`` (orthonormal for ``scale=1``)."""
    n: int
    p: int
    scale: float = 1.0


class SearchResult(NamedTuple):
    value: float
    point: Any


class MCEstimate(NamedTuple):
    mean: float
    stderr: float
    n: int


def gaussian_symbols(rng, shape):
    """Circularly-symmetric complex Gaussian entries with unit variance."""
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2.0)


def sample_feasible(constraint, samples, rng):
    """Draw ``samples`` uniformly distributed feasible points (stacked on a
    leading axis)."""
    if isinstance(constraint, Sphere):
        if constraint.real:
            x = rng.normal(size=(samples, constraint.dim))
        else:
            x = gaussian_symbols(rng, (samples, constraint.dim))
        x = x / np.linalg.norm(x, axis=1, keepdims=True)
        return constraint.radius * x
    if isinstance(constraint, Stiefel):
        Z = gaussian_symbols(rng, (samples, constraint.n, constraint.p))
        Q, R = np.linalg.qr(Z)
        d = np.diagonal(R, axis1=-2, axis2=-1)
        Q = Q * (d / np.abs(d))[:, None, :]   # Haar: make diag(R) positive
        return constraint.scale * Q
    raise TypeError(f"unsupported constraint {constraint!r}")


def random_feasible_search(objective, constraint, samples, rng, maximize=False,
                           vectorized=False):
    """Best objective value over ``samples`` random feasible points.

    Parameters
    ----------
    objective : callable
        Maps one feasible point to a real number, or, with
        ``vectorized=True``, a stack of points to an array of values.
    constraint : Sphere or Stiefel
    samples : int
    rng : numpy.random.Generator
    maximize : bool
        Keep the largest value instead of the smallest.

    Returns
    -------
    SearchResult
        ``(value, point)`` of the best sample.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    points = sample_feasible(constraint, samples, rng)
    if vectorized:
        values = np.asarray(objective(points), dtype=float)
    else:
        values = np.array([float(objective(p)) for p in points])
    i = int(np.argmax(values) if maximize else np.argmin(values))
    return SearchResult(float(values[i]), points[i])


def finite_diff_gradient(f, point, step=1e-6):
    """Central-difference gradient of a real scalar field.

    For complex ``point`` the real and imaginary parts are perturbed
    independently and the result is ``df/dRe + 1j * df/dIm`` entry-wise.
    For real input the ordinary gradient is returned.
    """
    x = np.array(point)
    is_complex = np.iscomplexobj(x)
    x = x.astype(complex if is_complex else float)
    grad = np.zeros(x.shape, dtype=x.dtype)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    directions = (1.0, 1j) if is_complex else (1.0,)
    for i in range(flat.size):
        for d in directions:
            orig = flat[i]
            flat[i] = orig + step * d
            fp = float(f(x))
            flat[i] = orig - step * d
            fm = float(f(x))
            flat[i] = orig
            g[i] += d * (fp - fm) / (2.0 * step)
    return grad


def mc_expectation(sampler, statistic, samples, rng, chunk=100_000):
    """Monte-Carlo estimate of ``E[statistic(sampler())]``.

    Parameters
    ----------
    sampler : callable
        ``sampler(rng, n)`` returns ``n`` stacked draws (any structure the
        statistic understands).
    statistic : callable
        Maps a stack of ``n`` draws to ``n`` real values.
    samples : int
    rng : numpy.random.Generator
    chunk : int
        Draws per call, to bound memory.

    Returns
    -------
    MCEstimate
        Sample mean, its standard error (sample std over sqrt(n); 0 for
        n=1) and the sample count.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        vals = np.asarray(statistic(sampler(rng, n)), dtype=float).reshape(n)
        total += vals.sum()
        total_sq += np.sum(vals ** 2)
        done += n
    mean = total / samples
    if samples == 1:
        return MCEstimate(float(mean), 0.0, 1)
    var = max(total_sq - samples * mean ** 2, 0.0) / (samples - 1)
    return MCEstimate(float(mean), float(np.sqrt(var / samples)), samples)
