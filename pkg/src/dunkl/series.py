"""Truncation policy shared by every infinite series in the package."""

from __future__ import annotations

import dataclasses

import numpy as np

import dunkl.errors


@dataclasses.dataclass(frozen=True)
class SeriesControl:
    """Stopping rule and term budgets for series evaluation.

    Attributes:
        tol: Relative size below which a term counts as small.
        max_terms: Term budget for spectral series and hypergeometric sums.
        consecutive_small: Number of consecutive small terms that end a sum.
        degree_max: Total-degree cutoff of the Hermite generating sum.
        hyper_terms: Term budget for confluent hypergeometric factors whose
            argument grows as the time parameter shrinks.
    """

    tol: float = 1e-12
    max_terms: int = 400
    consecutive_small: int = 3
    degree_max: int = 80
    hyper_terms: int = 20000

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise dunkl.errors.DomainError(f"tol must be positive: {self.tol}")
        if self.max_terms < 1:
            raise dunkl.errors.DomainError(
                f"max_terms must be at least 1: {self.max_terms}"
            )
        if self.consecutive_small < 1:
            raise dunkl.errors.DomainError(
                "consecutive_small must be at least 1: "
                f"{self.consecutive_small}"
            )
        if self.degree_max < 0:
            raise dunkl.errors.DomainError(
                f"degree_max must be nonnegative: {self.degree_max}"
            )


def resolve(control: SeriesControl | None) -> SeriesControl:
    """Return the given control, or the defaults."""
    return SeriesControl() if control is None else control


class SeriesAccumulator:
    """Running sum over an array of evaluation points.

    The sum is declared converged once `consecutive_small` consecutive terms
    are, at every point, no larger than tol times the running sum there.
    """

    def __init__(self, shape, control: SeriesControl, label: str):
        self.control = control
        self.label = label
        self.total = np.zeros(shape, dtype=float)
        self.last = np.zeros(shape, dtype=float)
        self.terms_used = 0
        self._small_run = 0

    def add(self, term) -> bool:
        """Add one term; return True when the stopping rule is met."""
        term = np.asarray(term, dtype=float)
        self.total = self.total + term
        self.last = np.abs(term)
        self.terms_used += 1
        bound = self.control.tol * np.abs(self.total)
        if np.all(self.last <= bound):
            self._small_run += 1
        else:
            self._small_run = 0
        return self._small_run >= self.control.consecutive_small

    @property
    def truncation_bound(self) -> float:
        return float(np.max(self.last)) if self.last.size else 0.0

    def fail(self):
        raise dunkl.errors.NonConvergenceError(
            f"{self.label}: no convergence within "
            f"{self.control.max_terms} terms",
            terms_used=self.terms_used,
        )
