"""Special functions used by the closed-form attack and test models.

Thin, contract-checked wrappers around scipy.special. scipy evaluates the
regularized incomplete beta/gamma functions with the usual continued
fractions and the a<->b symmetry switch, which is exactly the numerical
behaviour the rest of the package relies on; the wrappers add domain
validation and pin the argument conventions used everywhere else:

- reg_inc_beta(x, a, b)   = I_x(a, b), the regularized incomplete beta
- reg_inc_gamma(a, x)     = P(a, x) (lower) or Q(a, x) (upper)
- inv_reg_inc_gamma_upper(a, q) solves Q(a, x) = q for x

Probabilities are carried as plain floats; ``check_probability`` is the
constructor-side validator applied wherever a value is contractually a
probability.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

from .errors import DomainError

__all__ = [
    "erf",
    "erfc",
    "erfc_inv",
    "reg_inc_beta",
    "reg_inc_gamma",
    "inv_reg_inc_gamma_upper",
    "binomial_tail_sum",
    "log_binomial_term",
    "check_probability",
]


def check_probability(value: float, what: str = "probability") -> float:
    """Validate that ``value`` is a probability in [0, 1] and return it."""
    v = float(value)
    if math.isnan(v) or v < 0.0 or v > 1.0:
        raise DomainError(f"{what} must lie in [0, 1], got {value!r}")
    return v


def erf(x: float) -> float:
    """Error function."""
    return float(_sp.erf(x))


def erfc(x: float) -> float:
    """Complementary error function, accurate for large x."""
    return float(_sp.erfc(x))


def erfc_inv(q: float) -> float:
    """Inverse of erfc on (0, 2).

    erfc_inv(1) = 0; small q gives large positive values.
    """
    q = float(q)
    if not 0.0 < q < 2.0:
        raise DomainError(f"erfc_inv requires q in (0, 2), got {q!r}")
    return float(_sp.erfcinv(q))


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Satisfies I_x(a, b) = 1 - I_{1-x}(b, a) and the binomial tail-sum
    identity used by the attack model:

        sum_{i=0}^{k} C(L, i) p^i (1-p)^(L-i) = I_{1-p}(L-k, k+1)
    """
    x = float(x)
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"reg_inc_beta requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"reg_inc_beta requires x in [0, 1], got {x!r}")
    return float(_sp.betainc(a, b, x))


def reg_inc_gamma(a: float, x: float, *, upper: bool = False) -> float:
    """Regularized incomplete gamma: lower P(a, x), or upper Q(a, x)."""
    if a <= 0.0:
        raise DomainError(f"reg_inc_gamma requires a > 0, got {a!r}")
    if x < 0.0:
        raise DomainError(f"reg_inc_gamma requires x >= 0, got {x!r}")
    if upper:
        return float(_sp.gammaincc(a, x))
    return float(_sp.gammainc(a, x))


def inv_reg_inc_gamma_upper(a: float, q: float) -> float:
    """Solve Q(a, x) = q for x, the chi-square acceptance threshold map."""
    if a <= 0.0:
        raise DomainError(f"inv_reg_inc_gamma_upper requires a > 0, got {a!r}")
    if not 0.0 < q < 1.0:
        raise DomainError(
            f"inv_reg_inc_gamma_upper requires q in (0, 1), got {q!r}"
        )
    return float(_sp.gammainccinv(a, q))


def log_binomial_term(length: int, i: int, log_p: float, log_q: float) -> float:
    """log of C(length, i) * p^i * q^(length-i), from precomputed logs."""
    return (
        _log_comb(length, i) + i * log_p + (length - i) * log_q
    )


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def binomial_tail_sum(length: int, k: int, p: float) -> float:
    """sum_{i=0}^{k} C(length, i) p^i (1-p)^(length-i), computed in log space.

    Stable for length up to a few thousand; equals
    reg_inc_beta(1 - p, length - k, k + 1) when that call is in range.
    """
    if not 0 <= k <= length:
        raise DomainError(f"need 0 <= k <= length, got k={k}, length={length}")
    p = check_probability(p, "binomial p")
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 1.0 if k == length else 0.0
    log_p = math.log(p)
    log_q = math.log1p(-p)
    terms = [
        log_binomial_term(length, i, log_p, log_q) for i in range(k + 1)
    ]
    m = max(terms)
    if m == -math.inf:
        return 0.0
    s = m + math.log(sum(math.exp(t - m) for t in terms))
    return float(min(1.0, math.exp(s)))


def binomial_tail_log(length: int, k: int, p: float) -> float:
    """Natural log of binomial_tail_sum, kept in log space throughout."""
    if not 0 <= k <= length:
        raise DomainError(f"need 0 <= k <= length, got k={k}, length={length}")
    p = check_probability(p, "binomial p")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 0.0 if k == length else -math.inf
    log_p = math.log(p)
    log_q = math.log1p(-p)
    terms = np.array(
        [log_binomial_term(length, i, log_p, log_q) for i in range(k + 1)]
    )
    m = float(terms.max())
    return m + math.log(float(np.exp(terms - m).sum()))
