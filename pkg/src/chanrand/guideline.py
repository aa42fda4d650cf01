"""Operating-point selection: pick (alpha, r) so guessing beats the attack.

A configuration is feasible when random guessing of the final key is at
least as successful as the modeled tree-search attack filtered by the
randomness test:

    P(RG) >= I_MLTS * P(accept | rho, alpha)

with key length M = ceil(r * L). Among feasible grid points the selected
optimum maximizes the efficiency E = P(accept) * r, preferring smaller
alpha and then larger r on ties. Because the accept probability is
non-increasing in alpha, feasibility along each r row is a frontier:
once a row becomes feasible it stays feasible for every larger alpha.

The attack term uses |rho|: the enumeration order adapts to the sign, so
only the correlation magnitude matters to the adversary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .mlts import mlts_success_prob_exact_budget, rg_success_prob
from .randtests import TestSpec, accept_probability
from .randtests.mc import collect_pvalues

__all__ = [
    "GridSpec",
    "GuidelineProblem",
    "GuidelineSolution",
    "efficiency",
    "constraint_slack",
    "feasible",
    "optimize",
    "empirical_accept_fn",
]

DEFAULT_ALPHA_GRID = (0.0001, 0.3, 0.001)
DEFAULT_R_GRID = (0.1, 1.0, 0.01)

# Grid values are accumulated floats; products like r * L can land a hair
# above an integer, so the ceiling is taken with this much forgiveness.
_CEIL_SLOP = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Closed arithmetic progression lo, lo+step, ..., up to hi."""

    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and math.isfinite(self.step)):
            raise DomainError("grid bounds and step must be finite")
        if self.step <= 0.0:
            raise DomainError(f"grid step must be > 0, got {self.step}")
        if self.hi < self.lo:
            raise DomainError(f"grid needs lo <= hi, got [{self.lo}, {self.hi}]")

    def values(self) -> np.ndarray:
        count = int(math.floor((self.hi - self.lo) / self.step + _CEIL_SLOP)) + 1
        return self.lo + self.step * np.arange(count)

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        try:
            return cls(float(data["lo"]), float(data["hi"]), float(data["step"]))
        except KeyError as exc:
            raise DomainError(f"grid is missing key {exc.args[0]!r}") from None

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "step": self.step}


def _default_alpha_grid() -> GridSpec:
    return GridSpec(*DEFAULT_ALPHA_GRID)


def _default_r_grid() -> GridSpec:
    return GridSpec(*DEFAULT_R_GRID)


@dataclass(frozen=True)
class GuidelineProblem:
    """One selection problem: source, adversary budget, test, and grids."""

    sequence_length: int
    adversary_searches: int
    rho: float
    test: TestSpec
    alpha_grid: GridSpec = field(default_factory=_default_alpha_grid)
    r_grid: GridSpec = field(default_factory=_default_r_grid)

    def __post_init__(self):
        if self.sequence_length < 2:
            raise DomainError(
                f"sequence_length must be >= 2, got {self.sequence_length}"
            )
        if self.adversary_searches < 2:
            raise DomainError(
                "adversary_searches must be >= 2 (the two constant candidates), "
                f"got {self.adversary_searches}"
            )
        if not -1.0 < self.rho < 1.0:
            raise DomainError(f"rho must lie in (-1, 1), got {self.rho!r}")
        a = self.alpha_grid
        if a.lo <= 0.0 or a.hi >= 1.0:
            raise DomainError("alpha grid must stay inside (0, 1)")
        r = self.r_grid
        if r.lo <= 0.0 or r.hi > 1.0:
            raise DomainError("r grid must stay inside (0, 1]")


@dataclass(frozen=True)
class GuidelineSolution:
    """Selected operating point and its security margin."""

    alpha_star: float
    r_star: float
    key_length: int
    efficiency: float
    p_accept: float
    i_mlts: float
    constraint_slack: float
    feasible: bool

    def as_dict(self) -> dict:
        return {
            "alpha_star": self.alpha_star,
            "r_star": self.r_star,
            "key_length": self.key_length,
            "efficiency": self.efficiency,
            "p_accept": self.p_accept,
            "i_mlts": self.i_mlts,
            "constraint_slack": self.constraint_slack,
            "feasible": self.feasible,
        }


def _key_length(problem: GuidelineProblem, r: float) -> int:
    return max(1, math.ceil(r * problem.sequence_length - _CEIL_SLOP))


def _attack_prob(problem: GuidelineProblem) -> float:
    return mlts_success_prob_exact_budget(
        problem.sequence_length, abs(problem.rho), problem.adversary_searches
    )


def _accept(problem: GuidelineProblem, alpha: float) -> float:
    return accept_probability(
        replace(problem.test, alpha=alpha), problem.rho, problem.sequence_length
    )


def efficiency(problem: GuidelineProblem, alpha: float, r: float) -> float:
    """E = P(accept) * r for one grid point."""
    return _accept(problem, alpha) * r


def constraint_slack(problem: GuidelineProblem, alpha: float, r: float) -> float:
    """P(RG) - I_MLTS * P(accept); non-negative means secure."""
    p_rg = rg_success_prob(problem.adversary_searches, _key_length(problem, r))
    return p_rg - _attack_prob(problem) * _accept(problem, alpha)


def feasible(problem: GuidelineProblem, alpha: float, r: float) -> bool:
    """Whether guessing beats the filtered attack at this grid point."""
    return constraint_slack(problem, alpha, r) >= 0.0


def optimize(
    problem: GuidelineProblem,
    accept_fn: Optional[Callable[[float], float]] = None,
) -> GuidelineSolution:
    """Scan the grid for the best feasible point.

    ``accept_fn(alpha)`` replaces the closed-form accept probability when
    given, e.g. with an empirical estimate (see ``empirical_accept_fn``);
    it is used for both the constraint and the efficiency. If no grid
    point is feasible the returned solution has feasible=False and
    reports the least-violating point (largest slack).
    """
    alphas = problem.alpha_grid.values()
    rs = problem.r_grid.values()
    if accept_fn is None:
        h = np.array([_accept(problem, a) for a in alphas])
    else:
        h = np.array([float(accept_fn(a)) for a in alphas])
    i_mlts = _attack_prob(problem)

    best = None  # (E, -alpha, r, index pair)
    fallback = None  # (slack, E, -alpha, r, index pair)
    for j, r in enumerate(rs):
        p_rg = rg_success_prob(
            problem.adversary_searches, _key_length(problem, r)
        )
        slack = p_rg - i_mlts * h
        feas = slack >= 0.0
        if accept_fn is None and feas.any():
            first = int(np.argmax(feas))
            if not feas[first:].all():
                raise RuntimeError(
                    "feasibility frontier is not monotone in alpha; "
                    "the accept probability model is inconsistent"
                )
        for i, a in enumerate(alphas):
            key = (h[i] * r, -a, r)
            if feas[i]:
                if best is None or key > best[0]:
                    best = (key, i, j, slack[i])
            else:
                fkey = (slack[i],) + key
                if fallback is None or fkey > fallback[0]:
                    fallback = (fkey, i, j)

    if best is not None:
        key, i, j, s = best
        return GuidelineSolution(
            alpha_star=float(alphas[i]),
            r_star=float(rs[j]),
            key_length=_key_length(problem, float(rs[j])),
            efficiency=float(key[0]),
            p_accept=float(h[i]),
            i_mlts=i_mlts,
            constraint_slack=float(s),
            feasible=True,
        )
    fkey, i, j = fallback
    return GuidelineSolution(
        alpha_star=float(alphas[i]),
        r_star=float(rs[j]),
        key_length=_key_length(problem, float(rs[j])),
        efficiency=float(fkey[1]),
        p_accept=float(h[i]),
        i_mlts=i_mlts,
        constraint_slack=float(fkey[0]),
        feasible=False,
    )


def _wilson_upper(successes: int, trials: int, z: float) -> float:
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = phat + z2 / (2.0 * trials)
    spread = z * math.sqrt(
        phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)
    )
    return min(1.0, (center + spread) / denom)


def empirical_accept_fn(
    problem: GuidelineProblem, trials: int, seed: int, z: float = 3.0
) -> Callable[[float], float]:
    """Monte Carlo substitute for the closed-form accept probability.

    Simulates one batch of p-values at the problem's rho and length and
    returns alpha -> Wilson upper confidence bound (z sigma) on the
    accept rate, so feasibility is not overstated by sampling noise. The
    same batch serves every alpha, which keeps the frontier monotone.
    """
    pvals = collect_pvalues(
        problem.test, problem.rho, problem.sequence_length, trials, seed
    )

    def fn(alpha: float) -> float:
        return _wilson_upper(int((pvals > alpha).sum()), trials, z)

    return fn
