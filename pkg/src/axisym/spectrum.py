"""Karhunen-Loeve coefficient families for axially symmetric processes.

The symmetric coefficients are

    f_m(n, n') = sqrt(xi_n xi_n') rho(n - n') lambda_m

and the antisymmetric (cross) coefficients, for m >= 1,

    g_m(n, n') = sqrt(xi_n xi_n') lambda_m / 4 * (rho(n - n' - kappa) - rho(n - n' + kappa)).

``kappa = 0`` gives a longitudinally reversible process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

TOL_PSD = 1e-10
N_CHECK = 4096


class AdmissibilityError(ValueError):
    """A coefficient model gives a covariance block that is not PSD."""

    def __init__(self, message: str, order: int | None = None, min_eig: float | None = None):
        super().__init__(message)
        self.order = order
        self.min_eig = min_eig


# --- xi families -----------------------------------------------------------

@dataclass(frozen=True)
class LegendreMatern:
    """xi_n = (tau2 + n^2)^(-nu - 1/2)."""

    tau2: float
    nu: float

    def __post_init__(self):
        if not (self.tau2 > 0 and self.nu > 0):
            raise ValueError("LegendreMatern needs tau2 > 0 and nu > 0")

    def values(self, n_max: int) -> np.ndarray:
        n = np.arange(n_max + 1, dtype=float)
        return (self.tau2 + n * n) ** (-self.nu - 0.5)

    @property
    def beta(self) -> float:
        return 2.0 * self.nu + 1.0

    def certificate(self) -> "DecayCertificate":
        # (tau2 + n^2)^(-nu-1/2) <= n^(-2nu-1) for every n >= 1
        return DecayCertificate(beta=self.beta, r=1.0, n0=1)


@dataclass(frozen=True)
class Multiquadric:
    """xi_n = (1 - delta) delta^n."""

    delta: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("Multiquadric needs 0 < delta < 1")

    def values(self, n_max: int) -> np.ndarray:
        n = np.arange(n_max + 1, dtype=float)
        return (1.0 - self.delta) * self.delta ** n


@dataclass(frozen=True)
class CustomXi:
    """An explicit nonnegative sequence xi_0, xi_1, ..., xi_{N_max}."""

    seq: tuple[float, ...]

    def __post_init__(self):
        seq = tuple(float(v) for v in self.seq)
        if not seq:
            raise ValueError("CustomXi needs at least one value")
        if any(not math.isfinite(v) or v < 0 for v in seq):
            raise ValueError("CustomXi values must be finite and nonnegative")
        object.__setattr__(self, "seq", seq)

    @property
    def n_max(self) -> int:
        return len(self.seq) - 1

    def values(self, n_max: int) -> np.ndarray:
        if n_max > self.n_max:
            raise ValueError(f"CustomXi defined up to n={self.n_max}, requested {n_max}")
        return np.array(self.seq[: n_max + 1])


XiFamily = Union[LegendreMatern, Multiquadric, CustomXi]


# --- rho families ----------------------------------------------------------

@dataclass(frozen=True)
class Kronecker:
    """rho(h) = 1 if h == 0 else 0; non-integer lags evaluate to 0."""

    def __call__(self, h):
        h = np.asarray(h, dtype=float)
        out = (h == 0.0).astype(float)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class Exponential:
    """rho(h) = exp(-phi |h|)."""

    phi: float

    def __post_init__(self):
        if not self.phi > 0:
            raise ValueError("Exponential needs phi > 0")

    def __call__(self, h):
        out = np.exp(-self.phi * np.abs(np.asarray(h, dtype=float)))
        return out if out.ndim else float(out)


RhoFamily = Union[Kronecker, Exponential]


# --- lambda families -------------------------------------------------------

@dataclass(frozen=True)
class Indicator:
    """lambda_m = 1 for m <= alpha, else 0."""

    alpha: int

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 0:
            raise ValueError("Indicator needs an integer alpha >= 0")
        object.__setattr__(self, "alpha", int(self.alpha))

    def values(self, m_max: int) -> np.ndarray:
        return (np.arange(m_max + 1) <= self.alpha).astype(float)


@dataclass(frozen=True)
class Rational:
    """lambda_m = 1 / (1 + gamma m^2)."""

    gamma: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("Rational needs gamma >= 0")

    def values(self, m_max: int) -> np.ndarray:
        m = np.arange(m_max + 1, dtype=float)
        return 1.0 / (1.0 + self.gamma * m * m)


@dataclass(frozen=True)
class Ones:
    def values(self, m_max: int) -> np.ndarray:
        return np.ones(m_max + 1)


LambdaFamily = Union[Indicator, Rational, Ones]


@dataclass(frozen=True)
class SpectrumModel:
    xi: XiFamily
    rho: RhoFamily = field(default_factory=Kronecker)
    lam: LambdaFamily = field(default_factory=Ones)
    kappa: float = 0.0

    @property
    def reversible(self) -> bool:
        return self.kappa == 0.0

    def replace(self, **changes) -> "SpectrumModel":
        return replace(self, **changes)


@dataclass(frozen=True)
class DecayCertificate:
    """Claim that xi_n <= r n^(-beta) for n > n0."""

    beta: float
    r: float
    n0: int

    def __post_init__(self):
        if not (self.beta > 2 and self.r > 0 and self.n0 >= 1):
            raise ValueError("certificate needs beta > 2, r > 0, n0 >= 1")

    def verify(self, xi: XiFamily, n_check: int = N_CHECK) -> bool:
        if isinstance(xi, CustomXi):
            n_check = min(n_check, xi.n_max)
        if n_check <= self.n0:
            return True
        vals = xi.values(n_check)[self.n0 + 1:]
        n = np.arange(self.n0 + 1, n_check + 1, dtype=float)
        bound = self.r * n ** (-self.beta)
        return bool(np.all(vals <= bound * (1.0 + 1e-12)))


# --- coefficient evaluation -----------------------------------------------

def f(model: SpectrumModel, m: int, n: int, n2: int) -> float:
    if m < 0 or n < m or n2 < m:
        raise ValueError("need n, n2 >= m >= 0")
    xi = model.xi.values(max(n, n2))
    lam = model.lam.values(m)[m]
    return math.sqrt(xi[n] * xi[n2]) * model.rho(n - n2) * lam


def g(model: SpectrumModel, m: int, n: int, n2: int) -> float:
    """Antisymmetric coefficient; only defined for m >= 1."""
    if m < 1:
        raise ValueError("g_m is only defined for m >= 1")
    if n < m or n2 < m:
        raise ValueError("need n, n2 >= m")
    if model.kappa == 0.0 or n == n2:
        return 0.0
    xi = model.xi.values(max(n, n2))
    lam = model.lam.values(m)[m]
    h = n - n2
    diff = model.rho(h - model.kappa) - model.rho(h + model.kappa)
    return math.sqrt(xi[n] * xi[n2]) * lam / 4.0 * diff


def lag_matrices(model: SpectrumModel, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-scale correlation and cross matrices ``R[i, j] = rho(i - j)`` and
    ``K[i, j] = (rho(i - j - kappa) - rho(i - j + kappa)) / 4`` of size k."""
    h = np.subtract.outer(np.arange(k), np.arange(k)).astype(float)
    R = np.asarray(model.rho(h), dtype=float)
    if model.kappa == 0.0:
        K = np.zeros_like(R)
    else:
        K = (np.asarray(model.rho(h - model.kappa)) - np.asarray(model.rho(h + model.kappa))) / 4.0
    return R, K


def fg_matrices(model: SpectrumModel, m: int, max_degree: int) -> tuple[np.ndarray, np.ndarray]:
    """F_m and G_m over degrees m..max_degree (G_0 is zero)."""
    if max_degree < m:
        raise ValueError("max_degree must be >= m")
    k = max_degree - m + 1
    s = np.sqrt(model.xi.values(max_degree)[m:])
    lam = model.lam.values(m)[m]
    R, K = lag_matrices(model, k)
    scale = lam * np.outer(s, s)
    F = scale * R
    G = scale * K if m >= 1 else np.zeros_like(F)
    return F, G


@dataclass(frozen=True)
class GammaBlock:
    """Covariance block ``[[F, G], [G^T, F]]`` of the order-m coefficient vector.

    Construction validates symmetry of F, antisymmetry of G and positive
    semidefiniteness of the full block; a violation raises AdmissibilityError.
    """

    order: int
    degrees: tuple[int, ...]
    F: np.ndarray
    G: np.ndarray
    tol_psd: float = TOL_PSD

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        G = np.asarray(self.G, dtype=float)
        k = len(self.degrees)
        if F.shape != (k, k) or G.shape != (k, k):
            raise ValueError("F and G must be k x k with k = len(degrees)")
        scale = max(1.0, float(np.max(np.abs(F)))) if F.size else 1.0
        if not np.allclose(F, F.T, rtol=0, atol=1e-14 * scale):
            raise AdmissibilityError(f"F_{self.order} is not symmetric", self.order)
        if not np.allclose(G, -G.T, rtol=0, atol=1e-14 * scale):
            raise AdmissibilityError(f"G_{self.order} is not antisymmetric", self.order)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)
        lo = self.min_eigenvalue
        if lo < -self.tol_psd * self.mean_diagonal:
            raise AdmissibilityError(
                f"Gamma block for order m={self.order} is not positive semidefinite "
                f"(min eigenvalue {lo:.3e})", self.order, lo)

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.F, self.G], [self.G.T, self.F]])

    @property
    def mean_diagonal(self) -> float:
        return float(np.trace(self.F)) / max(len(self.degrees), 1)

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def gamma_block(model: SpectrumModel, m: int, max_degree: int, tol_psd: float = TOL_PSD) -> GammaBlock:
    F, G = fg_matrices(model, m, max_degree)
    return GammaBlock(m, tuple(range(m, max_degree + 1)), F, G, tol_psd)


@dataclass(frozen=True)
class C4Report:
    passed: bool
    branch: str
    beta: float | None
    certificate_ok: bool
    variance_sum: float
    reason: str

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        beta = "n/a" if self.beta is None else f"{self.beta:g}"
        return (f"C4 [{self.branch}] {status}: {self.reason} "
                f"(beta={beta}, sum xi_n(2n+1) to n={N_CHECK}: {self.variance_sum:.6g})")


def check_c4(model: SpectrumModel, certificate: DecayCertificate | None = None,
             branch: str = "general", n_check: int = N_CHECK) -> C4Report:
    """Summability check for the model's xi sequence.

    ``branch="general"`` requires beta > 4; ``branch="kronecker"`` requires
    beta > 2 and a Kronecker rho. Multiquadric xi passes either branch.
    """
    if branch not in ("general", "kronecker"):
        raise ValueError("branch must be 'general' or 'kronecker'")
    xi = model.xi
    n_sum = min(n_check, xi.n_max) if isinstance(xi, CustomXi) else n_check
    vals = xi.values(n_sum)
    variance_sum = float(np.sum(vals * (2 * np.arange(n_sum + 1) + 1)))

    if isinstance(xi, Multiquadric):
        return C4Report(True, branch, None, True, variance_sum, "geometric decay")
    if certificate is None and isinstance(xi, LegendreMatern):
        certificate = xi.certificate()
    if certificate is None:
        return C4Report(False, branch, None, False, variance_sum, "no decay certificate")

    ok = certificate.verify(xi, n_check)
    beta = certificate.beta
    if not ok:
        return C4Report(False, branch, beta, False, variance_sum,
                        "xi_n <= r n^-beta violated on the checked range")
    if branch == "general":
        passed = beta > 4
        reason = "beta > 4" if passed else "general branch needs beta > 4"
    else:
        if not isinstance(model.rho, Kronecker):
            return C4Report(False, branch, beta, True, variance_sum,
                            "kronecker branch needs a Kronecker rho")
        passed = beta > 2
        reason = "beta > 2 with Kronecker rho" if passed else "needs beta > 2"
    return C4Report(passed, branch, beta, True, variance_sum, reason)
