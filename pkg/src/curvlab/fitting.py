"""Least-squares fits of one tensor against the span of others."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import res

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class FitResult:
    coefficients: dict[str, float]
    residual: float
    exact: bool
    rank: int = field(default=0, compare=False)

    def __getitem__(self, name: str) -> float:
        return self.coefficients[name]

    def as_dict(self) -> dict:
        return {"coefficients": dict(self.coefficients), "residual": self.residual,
                "exact": self.exact}


def fit_span(target, basis, tol: float = DEFAULT_TOL, names=None) -> FitResult:
    """Minimal-norm least-squares coefficients of ``target`` over ``basis``.

    ``basis`` is a sequence of tensors of the target's valence or a mapping
    from coefficient names to tensors. The residual is ``res(target, fit)``.
    """
    if isinstance(basis, dict):
        names = list(basis)
        basis = list(basis.values())
    basis = [np.asarray(b, dtype=float) for b in basis]
    if not basis:
        raise ValueError("empty basis")
    target = np.asarray(target, dtype=float)
    for b in basis:
        if b.shape != target.shape:
            raise ValueError(f"valence mismatch: {b.shape} vs {target.shape}")
    if names is None:
        names = [f"c{i}" for i in range(len(basis))]
    a = np.stack([b.ravel() for b in basis], axis=1)
    y = target.ravel()
    coef, _, rank, _ = np.linalg.lstsq(a, y, rcond=1e-12)
    fitted = a @ coef
    r = res(y, fitted)
    return FitResult(dict(zip(names, (float(c) for c in coef))), r, r <= tol, int(rank))
