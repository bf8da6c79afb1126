"""Gaussian-approximation density evolution and theoretical SC error rates.

The GA tracks only the mean ``mu`` of each (consistent Gaussian) LLR. A
g-branch doubles the mean; an f-branch maps ``mu`` to
``phi^-1(1 - (1 - phi(mu))^2)`` where ``phi`` uses the usual piecewise
closed form:

    phi(x) = exp(0.0564 x^2 - 0.4856 x)                 x <  0.867861
           = exp(-0.4527 x^0.86 + 0.0218)               x <  10
           = sqrt(pi / x) exp(-x / 4) (1 - 10 / (7 x))  otherwise

Everything is evaluated on ``log(phi)`` so large means do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .construction import PolarCode

_C2, _C1 = 0.0564, -0.4856
_A, _B, _G = 0.4527, 0.86, 0.0218
_X1, _X2 = 0.867861, 10.0
_T1 = _C2 * _X1 * _X1 + _C1 * _X1
_T2 = -_A * _X2 ** _B + _G


def ebn0_to_sigma2(ebn0_db, rate):
    """Noise variance of unit-energy BPSK at the given Eb/N0 and code rate."""
    return 1.0 / (2.0 * rate * 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0))


def log_phi(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = _C2 * x * x + _C1 * x
        mid = -_A * np.power(x, _B) + _G
        large = 0.5 * np.log(np.pi / x) - x / 4.0 + np.log1p(-10.0 / (7.0 * x))
    return np.where(x < _X1, small, np.where(x < _X2, mid, large))


def log_phi_inv(t, iters=200):
    """Inverse of :func:`log_phi`; the large-x branch is solved by bisection."""
    t = np.asarray(t, dtype=float)
    small = (-_C1 - np.sqrt(np.maximum(_C1 * _C1 + 4.0 * _C2 * t, 0.0))) / (2.0 * _C2)
    mid = np.power(np.maximum(_G - t, 0.0) / _A, 1.0 / _B)
    lo = np.full(t.shape, _X2)
    hi = np.maximum(-4.0 * t, _X2) + 20.0
    for _ in range(iters):
        m = 0.5 * (lo + hi)
        above = log_phi(m) > t
        lo = np.where(above, m, lo)
        hi = np.where(above, hi, m)
    return np.where(t >= _T1, small, np.where(t >= _T2, mid, 0.5 * (lo + hi)))


def ga_check_node(mu):
    """Mean after an f-branch: ``phi^-1(1 - (1 - phi(mu))^2)``."""
    lp = log_phi(mu)
    # 1 - (1 - p)^2 = p (2 - p)
    return log_phi_inv(lp + np.log(2.0 - np.exp(lp)))


@dataclass
class GaProfile:
    mu: np.ndarray
    ebn0_db: float = float("nan")
    sigma2: float = float("nan")


def ga_means(n, mu_root):
    """Leaf means (natural leaf order) for a length-``2**n`` polar transform."""
    mu = np.array([float(mu_root)])
    for _ in range(n):
        nxt = np.empty(2 * mu.size)
        nxt[0::2] = ga_check_node(mu)
        nxt[1::2] = 2.0 * mu
        mu = nxt
    return mu


def ga_evolve(code: PolarCode, ebn0_db: float) -> GaProfile:
    """GA profile for BPSK/AWGN with ``sigma^2`` from the code rate K/N."""
    s2 = float(ebn0_to_sigma2(ebn0_db, code.rate))
    return GaProfile(ga_means(code.n, 2.0 / s2), float(ebn0_db), s2)


def pi_of(mu):
    """Error probability of a leaf with mean LLR ``mu``: erfc(sqrt(mu)/2)/2."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mean LLR must be non-negative")
    out = 0.5 * erfc(np.sqrt(mu) / 2.0)
    return out if out.ndim else float(out)


@dataclass
class FerEstimate:
    value: float
    kind: str = "theoretical"

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"FER must lie in [0, 1], got {self.value}")


def _union_fer(pi):
    return float(-np.expm1(np.sum(np.log1p(-np.asarray(pi, dtype=float)))))


def fer_theoretical(code: PolarCode, profile: GaProfile) -> FerEstimate:
    """``1 - prod_{i in A}(1 - pi_i)``."""
    if profile.mu.size != code.N:
        raise ValueError("profile length does not match the code")
    return FerEstimate(_union_fer(pi_of(profile.mu[code.info_positions])), "theoretical")


def fer_hypothetical(code: PolarCode, profile: GaProfile, cs) -> FerEstimate:
    """Same product restricted to a critical set ``cs``."""
    cs = np.asarray(sorted(int(i) for i in cs), dtype=np.int64)
    if profile.mu.size != code.N:
        raise ValueError("profile length does not match the code")
    if cs.size and np.any(code.frozen_mask[cs]):
        raise ValueError("critical set must be a subset of the non-frozen set")
    if cs.size == 0:
        return FerEstimate(0.0, "hypothetical")
    return FerEstimate(_union_fer(pi_of(profile.mu[cs])), "hypothetical")


@dataclass
class OmegaSweep:
    """FER against the flip threshold at one Eb/N0."""

    ebn0_db: float
    omegas: np.ndarray
    fer: np.ndarray
    frames: np.ndarray
    errors: np.ndarray
    loss: float = 0.1
    results: list = field(default_factory=list, repr=False)

    @property
    def best_omega(self) -> float:
        return float(self.omegas[int(np.argmin(self.fer))])

    @property
    def best_fer(self) -> float:
        return float(np.min(self.fer))

    @property
    def band(self) -> np.ndarray:
        """Thresholds whose FER is within ``(1 + loss)`` of the optimum."""
        return self.omegas[self.fer <= (1.0 + self.loss) * self.best_fer]

    def rows(self):
        return [
            {"omega": float(o), "fer": float(f), "frames": int(n), "errors": int(e)}
            for o, f, n, e in zip(self.omegas, self.fer, self.frames, self.errors)
        ]

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["omega", "fer", "frames", "errors"])
            w.writeheader()
            w.writerows(self.rows())


def omega_sweep(code: PolarCode, ebn0_db: float, omega_grid, t_max: int = 10,
                stop=None, seed: int = 0, fast: bool = False, loss: float = 0.1) -> OmegaSweep:
    """Simulate TSCF (or Fast-TSCF) FER at each threshold of ``omega_grid``.

    All grid points see the same channel realisations.
    """
    from .sim import DecoderSpec, StopRule, run_experiment

    grid = np.asarray(list(omega_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("omega grid is empty")
    stop = stop or StopRule()
    name = "FAST_TSCF" if fast else "TSCF"
    results = [run_experiment(code, DecoderSpec(name, t_max, float(om)), ebn0_db, stop, seed)
               for om in grid]
    return OmegaSweep(
        float(ebn0_db), grid,
        np.array([r.fer for r in results]),
        np.array([r.frames for r in results]),
        np.array([r.frame_errors for r in results]),
        loss, results,
    )
