"""Renyi-DP bookkeeping for mechanisms with linear RDP curves.

Every mechanism used here is (alpha, alpha * rho)-RDP for all alpha >= 1, so a
ledger only needs to keep the per-mechanism ``rho`` values. Composition adds
them; the final conversion to (epsilon, delta)-DP is the only place where
``delta`` is spent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidDelta, InvalidParams, NonPositiveParameter

DEFAULT_DELTA = 2.2e-12


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidParams(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise InvalidParams(f"delta must lie in (0, 1), got {self.delta}")


@dataclass
class RdpLedger:
    entries: list[tuple[str, float]] = field(default_factory=list)

    def add(self, label: str, rho: float) -> float:
        if not rho >= 0:
            raise NonPositiveParameter(f"rho must be nonnegative, got {rho}")
        self.entries.append((label, float(rho)))
        return rho

    @property
    def total_rho(self) -> float:
        return math.fsum(r for _, r in self.entries)

    def epsilon(self, delta: float) -> float:
        return rdp_to_dp(self, delta)

    def to_list(self) -> list[dict]:
        return [{"label": lab, "rho": r} for lab, r in self.entries]


def _positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not (value > 0 and math.isfinite(value)):
            raise NonPositiveParameter(f"{name} must be positive, got {value}")


def gaussian_rho(sigma: float, sensitivity: float = 1.0) -> float:
    """RDP slope of the Gaussian mechanism: sensitivity**2 / (2 sigma**2)."""
    _positive(sigma=sigma, sensitivity=sensitivity)
    return sensitivity**2 / (2.0 * sigma**2)


def exponential_rho(eps_step: float, sensitivity: float = 1.0) -> float:
    """RDP slope of one exponential-mechanism draw with probabilities
    proportional to ``exp(eps_step * score)``: (2 eps_step sensitivity)**2 / 8."""
    _positive(eps_step=eps_step, sensitivity=sensitivity)
    return (2.0 * eps_step * sensitivity) ** 2 / 8.0


def optimal_alpha(rho: float, delta: float) -> float:
    """Renyi order minimizing ``alpha * rho + log(1/delta) / (alpha - 1)``."""
    if rho <= 0:
        return math.inf
    return 1.0 + math.sqrt(math.log(1.0 / delta) / rho)


def rdp_to_dp(ledger: RdpLedger | float, delta: float) -> float:
    """Smallest epsilon implied for ``delta`` by the ledger's total RDP slope."""
    if not 0 < delta < 1:
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta}")
    rho = ledger.total_rho if isinstance(ledger, RdpLedger) else float(ledger)
    if rho < 0:
        raise NonPositiveParameter(f"rho must be nonnegative, got {rho}")
    if rho == 0:
        return 0.0
    return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def calibrate_sigma(params: PrivacyParams, invocations: int = 2) -> float:
    """Noise scale for ``invocations`` composed sensitivity-1 Gaussian mechanisms.

    The two-invocation case is the closed form
    ``(sqrt(L) + sqrt(L + eps)) / eps`` with ``L = log(1/delta)``; other counts
    rescale it by ``sqrt(k / 2)``.
    """
    if not isinstance(params, PrivacyParams):
        raise InvalidParams("expected PrivacyParams")
    if invocations < 1 or int(invocations) != invocations:
        raise InvalidParams(f"invocations must be a positive integer, got {invocations}")
    eps, log_inv_delta = params.epsilon, math.log(1.0 / params.delta)
    base = (math.sqrt(log_inv_delta) + math.sqrt(log_inv_delta + eps)) / eps
    return math.sqrt(invocations / 2.0) * base


def calibrate_rho(params: PrivacyParams) -> float:
    """Largest rho whose (alpha, alpha * rho)-RDP guarantee implies (eps, delta)-DP."""
    if not isinstance(params, PrivacyParams):
        raise InvalidParams("expected PrivacyParams")
    eps, log_inv_delta = params.epsilon, math.log(1.0 / params.delta)
    # rho + 2 sqrt(rho L) = eps is a quadratic in sqrt(rho)
    root = eps / (math.sqrt(log_inv_delta) + math.sqrt(log_inv_delta + eps))
    rho = root * root
    while rdp_to_dp(rho, params.delta) > eps:
        rho = math.nextafter(rho, 0.0)
    return rho


def sigma_for_rho(rho: float, sensitivity: float = 1.0) -> float:
    """Smallest Gaussian scale whose RDP slope does not exceed ``rho``."""
    _positive(rho=rho, sensitivity=sensitivity)
    sigma = sensitivity / math.sqrt(2.0 * rho)
    while gaussian_rho(sigma, sensitivity) > rho:
        sigma = math.nextafter(sigma, math.inf)
    return sigma


def laplace_scale(epsilon: float, l1_sensitivity: float) -> tuple[float, float]:
    """Laplace scale ``b = l1_sensitivity / epsilon`` and its standard deviation ``sqrt(2) b``."""
    _positive(epsilon=epsilon, l1_sensitivity=l1_sensitivity)
    scale = l1_sensitivity / epsilon
    return scale, math.sqrt(2.0) * scale
