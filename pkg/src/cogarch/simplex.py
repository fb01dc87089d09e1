"""Nelder-Mead simplex minimizer with the classic (1, 2, 1/2, 1/2)
reflection / expansion / contraction / shrink coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NelderMeadResult", "nelder_mead", "axis_simplex"]

_ALPHA = 1.0  # reflection
_GAMMA = 2.0  # expansion
_RHO = 0.5  # contraction
_SIGMA = 0.5  # shrink


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fval: float
    iterations: int
    n_evals: int
    converged: bool  # False when the iteration cap was hit first
    diameter: float


def axis_simplex(x0, scales) -> np.ndarray:
    """Simplex with vertex x0 and one axis-aligned edge per coordinate."""
    x0 = np.asarray(x0, dtype=float)
    scales = np.broadcast_to(np.asarray(scales, dtype=float), x0.shape)
    vertices = np.tile(x0, (x0.size + 1, 1))
    vertices[1:] += np.diag(scales)
    return vertices


def nelder_mead(fn, simplex, xtol: float = 1e-14, max_iter: int = 5000,
                args: tuple = ()) -> NelderMeadResult:
    """Minimize fn starting from the given (n+1) x n simplex.

    Deterministic given its inputs.  Stops when the simplex diameter (max
    pairwise sup-norm distance between vertices) falls below xtol, or at
    max_iter with converged=False.  Infinite objective values are allowed
    and treated as worst-possible.
    """
    vertices = np.array(simplex, dtype=float)
    if vertices.ndim != 2 or vertices.shape[0] != vertices.shape[1] + 1:
        raise ValueError("simplex must have n+1 vertices of dimension n")
    n = vertices.shape[1]
    edges = vertices[1:] - vertices[0]
    if np.linalg.matrix_rank(edges) < n:
        raise ValueError("degenerate simplex")

    n_evals = 0

    def evaluate(x):
        nonlocal n_evals
        n_evals += 1
        return float(fn(x, *args))

    fvals = np.array([evaluate(v) for v in vertices])
    iterations = 0
    while iterations < max_iter:
        order = np.argsort(fvals, kind="stable")
        vertices = vertices[order]
        fvals = fvals[order]
        if _diameter(vertices) <= xtol:
            return NelderMeadResult(vertices[0].copy(), fvals[0], iterations,
                                    n_evals, True, _diameter(vertices))
        iterations += 1

        centroid = vertices[:-1].mean(axis=0)
        worst = vertices[-1]
        reflected = centroid + _ALPHA * (centroid - worst)
        f_reflected = evaluate(reflected)

        if fvals[0] <= f_reflected < fvals[-2]:
            vertices[-1], fvals[-1] = reflected, f_reflected
            continue
        if f_reflected < fvals[0]:
            expanded = centroid + _GAMMA * (reflected - centroid)
            f_expanded = evaluate(expanded)
            if f_expanded < f_reflected:
                vertices[-1], fvals[-1] = expanded, f_expanded
            else:
                vertices[-1], fvals[-1] = reflected, f_reflected
            continue
        if f_reflected < fvals[-1]:  # outside contraction
            contracted = centroid + _RHO * (reflected - centroid)
            f_contracted = evaluate(contracted)
            if f_contracted <= f_reflected:
                vertices[-1], fvals[-1] = contracted, f_contracted
                continue
        else:  # inside contraction
            contracted = centroid + _RHO * (worst - centroid)
            f_contracted = evaluate(contracted)
            if f_contracted < fvals[-1]:
                vertices[-1], fvals[-1] = contracted, f_contracted
                continue
        # shrink toward the best vertex
        vertices[1:] = vertices[0] + _SIGMA * (vertices[1:] - vertices[0])
        fvals[1:] = [evaluate(v) for v in vertices[1:]]

    order = np.argsort(fvals, kind="stable")
    vertices = vertices[order]
    fvals = fvals[order]
    return NelderMeadResult(vertices[0].copy(), fvals[0], iterations, n_evals,
                            False, _diameter(vertices))


def _diameter(vertices) -> float:
    diff = vertices[:, None, :] - vertices[None, :, :]
    return float(np.abs(diff).max())
