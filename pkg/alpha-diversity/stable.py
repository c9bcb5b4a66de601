"""
Positive alpha-stable density, Pitman's alpha-diversity S_{alpha,theta}
(scaled Mittag-Leffler law) and the Laplace integral I_n(z).

f_alpha is the density with Laplace transform exp(-lambda**alpha). It is
evaluated through Zolotarev's representation over u in (0, pi):

    f_alpha(x) = alpha / ((1 - alpha) pi) * x**(-1/(1-alpha))
                 * int_0^pi A(u) exp(-A(u) x**(-alpha/(1-alpha))) du
    A(u) = [sin(alpha u)**alpha sin((1-alpha) u)**(1-alpha) / sin(u)]**(1/(1-alpha))

A is increasing from A(0+) to +inf, so every integrand below is unimodal in
u and the integration window can be located by root finding.
"""

import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import PchipInterpolator

from config import get_settings
from errors import DivergentMomentError, DomainError, QuadratureError
from models import ModelParams, PosteriorContext, QuadratureSpec

logger = logging.getLogger(__name__)

LOG_2_SQRT_PI = math.log(2.0 * math.sqrt(math.pi))
WINDOW_DROP = 60.0          # integrand below exp(-60) of its peak is dropped
WINDOW_MAX_STEP = 2.0 ** 20
U_EDGE = 1e-15
GRID_START_POINTS = 513
GRID_MAX_POINTS = 2 ** 17 + 1
GRID_MAX_DOUBLINGS = 200
TAIL_MASS = 1e-14
JACOBI_NODES = 200
SERIES_SWITCH = 5.0        # alpha*log(x) above which the convergent tail series is used


def default_quadrature() -> QuadratureSpec:
    settings = get_settings()
    return QuadratureSpec(
        abs_tol=settings.quad_abs_tol,
        rel_tol=settings.quad_rel_tol,
        max_subdivisions=settings.quad_limit,
    )


# ============================================================================
# Quadrature helpers
# ============================================================================


def _quad(func: Callable[[float], float], a: float, b: float, spec: QuadratureSpec,
          epsabs: Optional[float] = None) -> float:
    """scipy quad that raises QuadratureError when the error estimate is unacceptable."""
    result = integrate.quad(
        func, a, b,
        epsabs=spec.abs_tol if epsabs is None else epsabs,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3:
        # roundoff-limited runs still return a usable value
        if not math.isfinite(value) or abserr > max(1e3 * spec.abs_tol, 1e-6 * abs(value)):
            raise QuadratureError(
                f"quadrature on [{a}, {b}] did not converge: {result[3].splitlines()[0]} "
                f"(value={value:.6e}, error={abserr:.2e})"
            )
        logger.debug(f"quad warning accepted on [{a}, {b}]: error {abserr:.2e}")
    return value


def _quad_vec(func: Callable[[float], np.ndarray], a: float, b: float,
              spec: QuadratureSpec) -> np.ndarray:
    value, err, info = integrate.quad_vec(
        func, a, b,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        norm="max",
        limit=spec.max_subdivisions,
        full_output=True,
    )
    if info.status != 0 and err > 1e3 * spec.abs_tol:
        raise QuadratureError(f"vector quadrature on [{a}, {b}] failed: {info.message} (error {err:.2e})")
    return value


def _log_sinc(v: float) -> float:
    """log(sin v / v), from its Taylor series near 0."""
    if v < 0.1:
        v2 = v * v
        return -v2 * (1.0 / 6.0 + v2 * (1.0 / 180.0 + v2 * (1.0 / 2835.0 + v2 / 37800.0)))
    return math.log(math.sin(v) / v)


def _log_zolotarev_excess(u: float, alpha: float) -> float:
    """log A(u) - log A(0+), accurate to full relative precision as u -> 0."""
    beta = 1.0 - alpha
    return (alpha * _log_sinc(alpha * u) + beta * _log_sinc(beta * u) - _log_sinc(u)) / beta


def _log_zolotarev_at_zero(alpha: float) -> float:
    return (alpha * math.log(alpha) + (1.0 - alpha) * math.log(1.0 - alpha)) / (1.0 - alpha)


def _log_zolotarev(u: float, alpha: float) -> float:
    return _log_zolotarev_at_zero(alpha) + _log_zolotarev_excess(u, alpha)


def _root(func: Callable[[float], float], lo: float, hi: float) -> float:
    return optimize.brentq(func, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)


def _window(h: Callable[[float], float], u_peak: float) -> tuple[float, float]:
    """Interval around u_peak outside which h (zero at the peak) is below -WINDOW_DROP."""
    floor = -WINDOW_DROP
    hi_edge = math.pi - U_EDGE
    if u_peak == 0.0 or h(0.0) >= floor:
        u_lo = 0.0
    else:
        u_lo = _root(lambda u: h(u) - floor, 0.0, u_peak)
    if h(hi_edge) >= floor:
        u_hi = math.pi
    else:
        u_hi = _root(lambda u: h(u) - floor, u_peak, hi_edge)
    return u_lo, u_hi


def _log_peak_integral(phi: Callable[[float], float], bounds: tuple[float, float],
                       spec: QuadratureSpec, what: str) -> float:
    """log int exp(phi(t)) dt for unimodal phi.

    The peak is located inside bounds, then the window is widened by doubling
    steps until phi sits WINDOW_DROP below the peak on both sides.
    """
    found = optimize.minimize_scalar(lambda t: -max(phi(t), -1e300), bounds=bounds,
                                     method="bounded", options={"xatol": 1e-6})
    t_star, phi_star = float(found.x), -float(found.fun)
    if not phi_star > -1e300:
        raise QuadratureError(f"{what}: integrand vanishes on {bounds}")
    edges = []
    for sign in (-1.0, 1.0):
        step = 1.0
        while phi(t_star + sign * step) > phi_star - WINDOW_DROP:
            step *= 2.0
            if step > WINDOW_MAX_STEP:
                raise QuadratureError(f"{what}: integrand does not decay away from t={t_star:.4f}")
        edges.append(t_star + sign * step)

    def integrand(t: float) -> float:
        return math.exp(min(phi(t) - phi_star, 700.0))

    total = (_quad(integrand, edges[0], t_star, spec, epsabs=0.0)
             + _quad(integrand, t_star, edges[1], spec, epsabs=0.0))
    if total <= 0:
        raise QuadratureError(f"{what}: integral vanished around t={t_star:.4f}")
    return phi_star + math.log(total)


# ============================================================================
# Positive stable law
# ============================================================================


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _log_tail_series(alpha: float, log_x: float, max_terms: int = 80) -> float:
    """Convergent expansion f_alpha(x) = (1/pi) sum_k (-1)**(k+1) Gamma(k alpha+1)/k! sin(k pi alpha) x**(-k alpha-1)."""
    log_lead = special.gammaln(alpha + 1.0) + math.log(math.sin(math.pi * alpha))
    correction = 0.0
    for k in range(2, max_terms + 1):
        log_bound = (special.gammaln(k * alpha + 1.0) - special.gammaln(k + 1.0) - log_lead
                     - (k - 1) * alpha * log_x)
        if log_bound < -40.0:
            break
        correction += (-1) ** (k + 1) * math.sin(k * math.pi * alpha) * math.exp(log_bound)
    return log_lead - math.log(math.pi) - (alpha + 1.0) * log_x + math.log1p(correction)


def _log_stable_density_at(alpha: float, log_x: float, spec: QuadratureSpec,
                           closed_form: bool = True) -> float:
    if alpha == 0.5 and closed_form:
        if log_x < -690.0:
            return -math.inf
        return -1.5 * log_x - 0.25 * math.exp(-log_x) - LOG_2_SQRT_PI
    if alpha * log_x > SERIES_SWITCH:
        return _log_tail_series(alpha, log_x)

    log_c = -alpha / (1.0 - alpha) * log_x
    log_a0 = _log_zolotarev_at_zero(alpha)
    if log_c + log_a0 > 690.0:
        return -math.inf

    # the integrand A exp(-c A) is taken relative to its value at A_ref = A(u_peak)
    if log_a0 >= -log_c:
        u_peak, log_ref = 0.0, log_a0
    else:
        u_peak = _root(lambda u: _log_zolotarev(u, alpha) + log_c, 0.0, math.pi - U_EDGE)
        log_ref = -log_c
    shift = log_a0 - log_ref
    scale = math.exp(log_c + log_ref)
    g_peak = log_ref - scale

    def h(u: float) -> float:
        d = _log_zolotarev_excess(u, alpha) + shift
        if d > 700.0:
            return -math.inf
        return d - scale * math.expm1(d)

    u_lo, u_hi = _window(h, u_peak)

    def integrand(u: float) -> float:
        return math.exp(h(u))

    total = 0.0
    for a, b in ((u_lo, u_peak), (u_peak, u_hi)):
        if b > a:
            total += _quad(integrand, a, b, spec, epsabs=0.0)
    if total <= 0:
        raise QuadratureError(f"stable density integral vanished at alpha={alpha}, log x={log_x}")
    return (math.log(alpha / ((1.0 - alpha) * math.pi))
            - log_x / (1.0 - alpha) + g_peak + math.log(total))


def log_stable_density(alpha: float, x: float, quadrature: Optional[QuadratureSpec] = None,
                       closed_form: bool = True) -> float:
    """log f_alpha(x) for x > 0. closed_form=False forces the quadrature path at alpha = 1/2."""
    _check_alpha(alpha)
    if not x > 0:
        raise DomainError(f"stable density needs x > 0, got {x}")
    return _log_stable_density_at(alpha, math.log(x), quadrature or default_quadrature(), closed_form)


def stable_density(alpha: float, x, quadrature: Optional[QuadratureSpec] = None):
    """f_alpha(x); accepts scalars or arrays."""
    if np.ndim(x) == 0:
        return math.exp(log_stable_density(alpha, float(x), quadrature))
    xs = np.asarray(x, dtype=float)
    return np.array([math.exp(log_stable_density(alpha, float(v), quadrature)) for v in xs.ravel()]).reshape(xs.shape)


def stable_cdf(alpha: float, x: float, quadrature: Optional[QuadratureSpec] = None) -> float:
    """P[T <= x] = (1/pi) int_0^pi exp(-A(u) x**(-alpha/(1-alpha))) du."""
    _check_alpha(alpha)
    if x <= 0:
        return 0.0
    if alpha == 0.5:
        return float(special.erfc(0.5 / math.sqrt(x)))
    spec = quadrature or default_quadrature()
    log_c = -alpha / (1.0 - alpha) * math.log(x)
    log_a0 = _log_zolotarev_at_zero(alpha)
    if log_c + log_a0 > 690.0:
        return 0.0
    scale = math.exp(log_c + log_a0)

    def h(u: float) -> float:
        d = _log_zolotarev_excess(u, alpha)
        if d > 700.0:
            return -math.inf
        return -scale * math.expm1(d)

    _, u_hi = _window(h, 0.0)
    total = _quad(lambda u: math.exp(h(u)), 0.0, u_hi, spec, epsabs=0.0)
    if total <= 0:
        return 0.0
    return min(1.0, math.exp(-scale + math.log(total)) / math.pi)


def log_tilted_moment(alpha: float, n: int, lam: float,
                      quadrature: Optional[QuadratureSpec] = None) -> float:
    """log of int_0^inf x**n exp(-lam x) f_alpha(x) dx, integrated in t = log x."""
    _check_alpha(alpha)
    if lam <= 0 or n < 0:
        raise DomainError(f"tilted moment needs lam > 0 and n >= 0, got lam={lam}, n={n}")
    spec = quadrature or default_quadrature()

    def phi(t: float) -> float:
        if t > 700.0:
            return -math.inf
        return (n + 1) * t - lam * math.exp(t) + _log_stable_density_at(alpha, t, spec)

    t_guess = math.log((n + 1) / lam)
    bounds = (min(t_guess, 0.0) - 20.0, max(t_guess, 0.0) + 5.0)
    return _log_peak_integral(phi, bounds, spec, f"tilted moment (alpha={alpha}, n={n}, lam={lam})")


@dataclass(frozen=True)
class LaplaceCheck:
    alpha: float
    n: int
    z: float
    log_value: float
    log_approx: float

    @property
    def relative_gap(self) -> float:
        return abs(math.expm1(self.log_value - self.log_approx))


def laplace_integral(alpha: float, n: int, z: float,
                     quadrature: Optional[QuadratureSpec] = None) -> LaplaceCheck:
    """I_n(z) = int exp(-n (z y - log y)) f_alpha(y) dy next to its leading-order
    approximation (1/z)**(n+1) f_alpha(1/z) e**(-n) sqrt(2 pi / n), both as logs."""
    _check_alpha(alpha)
    if n < 1 or z <= 0:
        raise DomainError(f"laplace_integral needs n >= 1 and z > 0, got n={n}, z={z}")
    n_max = get_settings().laplace_n_max
    if n > n_max:
        raise DomainError(f"n = {n} beyond the supported range {n_max} for the Laplace integral")
    spec = quadrature or default_quadrature()
    log_value = log_tilted_moment(alpha, n, n * z, spec)
    log_approx = (-(n + 1) * math.log(z) + log_stable_density(alpha, 1.0 / z, spec)
                  - n + 0.5 * math.log(2.0 * math.pi / n))
    return LaplaceCheck(alpha=alpha, n=n, z=z, log_value=log_value, log_approx=log_approx)


# ============================================================================
# Pitman's alpha-diversity
# ============================================================================


class MittagLefflerLaw:
    """Law of S_{alpha,theta}:

        f(s) = Gamma(theta+1) / (alpha Gamma(theta/alpha+1)) s**((theta-1)/alpha - 1) f_alpha(s**(-1/alpha))

    The CDF is evaluated exactly through the bounded-domain form

        F(x) = c Gamma(a) / pi * int_0^pi A(u)**(1-a) P(a, A(u) x**(1/(1-alpha))) du

    with c = Gamma(theta+1)/Gamma(theta/alpha+1), a = 1 + theta (1-alpha)/alpha
    and P the regularized lower incomplete gamma function. A monotone
    interpolation grid is built lazily (under a lock) for bulk queries.
    """

    def __init__(self, params: ModelParams, quadrature: Optional[QuadratureSpec] = None):
        self.params = params
        self.quadrature = quadrature or default_quadrature()
        alpha, theta = params.alpha, params.theta
        self._log_c = special.gammaln(theta + 1.0) - special.gammaln(theta / alpha + 1.0)
        self._a = 1.0 + theta * (1.0 - alpha) / alpha
        self._log_cdf_const = self._log_c + special.gammaln(self._a) - math.log(math.pi)
        self._lock = threading.Lock()
        self._grid: Optional[dict] = None

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def theta(self) -> float:
        return self.params.theta

    # ------------------------------------------------------------------ density

    def log_density(self, s: float) -> float:
        if s <= 0:
            return -math.inf
        return self._log_density_at_log(math.log(s))

    def _log_density_at_log(self, w: float, quadrature: Optional[QuadratureSpec] = None) -> float:
        alpha, theta = self.alpha, self.theta
        return (self._log_c - math.log(alpha) + ((theta - 1.0) / alpha - 1.0) * w
                + _log_stable_density_at(alpha, -w / alpha, quadrature or self.quadrature))

    def density(self, s):
        if np.ndim(s) == 0:
            return math.exp(self.log_density(float(s)))
        ss = np.asarray(s, dtype=float)
        return np.array([math.exp(self.log_density(float(v))) for v in ss.ravel()]).reshape(ss.shape)

    # ------------------------------------------------------------------ moments

    def moment(self, p: float) -> float:
        """E[S**p] = Gamma(theta+1) Gamma(theta/alpha+1+p) / (Gamma(theta/alpha+1) Gamma(theta+1+p alpha))."""
        alpha, theta = self.alpha, self.theta
        if theta / alpha + 1.0 + p <= 0:
            raise DivergentMomentError(f"E[S^{p}] diverges for alpha={alpha}, theta={theta}")
        return math.exp(special.gammaln(theta + 1.0) + special.gammaln(theta / alpha + 1.0 + p)
                        - special.gammaln(theta / alpha + 1.0) - special.gammaln(theta + 1.0 + p * alpha))

    def mean(self) -> float:
        return self.moment(1.0)

    def neg_moment(self, quadrature: Optional[QuadratureSpec] = None) -> float:
        """E[1/S] by quadrature of s**-1 f(s) ds, carried out in w = log s."""
        if self.theta <= 0:
            raise DivergentMomentError(
                f"E[1/S] is infinite for theta = {self.theta} <= 0 (density ~ s**(theta/alpha) at 0)"
            )
        spec = quadrature or self.quadrature
        center = math.log(self.mean())
        # s**-1 f(s) ds = f(e**w) dw
        log_value = _log_peak_integral(lambda w: self._log_density_at_log(w, spec),
                                       (center - 20.0, center + 20.0), spec, f"E[1/S] at {self.params}")
        return math.exp(log_value)

    # ------------------------------------------------------------------ CDF

    def cdf(self, x):
        """Exact CDF (vectorised over x)."""
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xs < 0):
            raise DomainError("CDF argument must be nonnegative")
        out = np.zeros_like(xs)
        positive = xs > 0
        if np.any(positive):
            out[positive] = self._cdf_exact(xs[positive])
        return float(out[0]) if scalar else out

    def _cdf_exact(self, xs: np.ndarray) -> np.ndarray:
        alpha, a = self.alpha, self._a
        x_pow = xs ** (1.0 / (1.0 - alpha))

        def integrand(u: float) -> np.ndarray:
            log_a = _log_zolotarev(u, alpha)
            return np.exp((1.0 - a) * log_a) * special.gammainc(a, math.exp(log_a) * x_pow)

        total = _quad_vec(integrand, 0.0, math.pi, self.quadrature)
        return np.clip(np.exp(self._log_cdf_const) * total, 0.0, 1.0)

    # ------------------------------------------------------------------ cached grid

    def _upper_bracket(self, x: float, p: float) -> float:
        """Double x until F(x) >= p or F stops increasing (the computed CDF levels off just below 1)."""
        last = -1.0
        for _ in range(GRID_MAX_DOUBLINGS):
            value = float(self.cdf(x))
            if value >= p or value - last <= 4 * np.finfo(float).eps:
                return x
            last = value
            x *= 2.0
        raise QuadratureError(f"CDF of {self.params} still at {last:.16f} < {p} after "
                              f"{GRID_MAX_DOUBLINGS} doublings (x={x:.3e})")

    def _ensure_grid(self) -> dict:
        with self._lock:
            if self._grid is None:
                self._grid = self._build_grid()
            return self._grid

    def _build_grid(self) -> dict:
        tol = get_settings().cdf_grid_tol
        scale = self.mean()
        x_hi = self._upper_bracket(2.0 * scale, 1.0 - max(TAIL_MASS, tol))
        x_lo = 0.5 * scale
        while x_lo > 1e-300 and self.cdf(x_lo) > TAIL_MASS:
            x_lo /= 10.0

        log_x = np.linspace(math.log(x_lo), math.log(x_hi), GRID_START_POINTS)
        values = self.cdf(np.exp(log_x))
        while True:
            forward = PchipInterpolator(log_x, values)
            mids = 0.5 * (log_x[1:] + log_x[:-1])
            exact_mids = self.cdf(np.exp(mids))
            err = float(np.max(np.abs(forward(mids) - exact_mids)))
            merged_x = np.empty(2 * len(log_x) - 1)
            merged_x[0::2], merged_x[1::2] = log_x, mids
            merged_f = np.empty_like(merged_x)
            merged_f[0::2], merged_f[1::2] = values, exact_mids
            log_x, values = merged_x, np.maximum.accumulate(merged_f)
            if err <= tol or len(log_x) >= GRID_MAX_POINTS:
                break
        if err > tol:
            logger.warning(f"CDF grid for {self.params} stopped at {len(log_x)} points, error {err:.2e}")
        logger.info(f"CDF grid for alpha={self.alpha}, theta={self.theta}: "
                    f"{len(log_x)} points on [{x_lo:.3e}, {x_hi:.3e}], error {err:.2e}")

        strict = np.concatenate([[True], np.diff(values) > 0])
        return {
            "x_lo": x_lo,
            "x_hi": x_hi,
            "forward": PchipInterpolator(log_x, values),
            "inverse": PchipInterpolator(values[strict], log_x[strict]),
            "p_lo": float(values[strict][0]),
            "p_hi": float(values[strict][-1]),
        }

    def cdf_interp(self, x) -> np.ndarray:
        """CDF through the cached grid; exact evaluation below the grid, 1 above it."""
        grid = self._ensure_grid()
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.ones_like(xs)
        out[xs <= 0] = 0.0
        inside = (xs > 0) & (xs <= grid["x_hi"])
        below = inside & (xs < grid["x_lo"])
        inside &= ~below
        out[inside] = np.clip(grid["forward"](np.log(xs[inside])), 0.0, 1.0)
        if np.any(below):
            out[below] = self._cdf_exact(xs[below])
        return out

    # ------------------------------------------------------------------ quantiles

    def quantile(self, p: float) -> float:
        """x with |F(x) - p| <= 1e-10: grid guess, bracketing, then Brent refinement."""
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {p}")
        guess = float(self.quantile_interp(np.array([p]))[0])
        lo, hi = guess * (1 - 1e-6), guess * (1 + 1e-6)
        while self.cdf(lo) > p:
            lo *= 0.5
        hi = self._upper_bracket(hi, p)
        if self.cdf(hi) < p:
            return hi
        return float(optimize.brentq(lambda x: self.cdf(x) - p, lo, hi,
                                     xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200))

    def quantile_interp(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF through the monotone grid (bulk sampling path)."""
        grid = self._ensure_grid()
        us = np.asarray(u, dtype=float)
        out = np.empty_like(us)
        inside = (us >= grid["p_lo"]) & (us <= grid["p_hi"])
        out[inside] = np.exp(grid["inverse"](us[inside]))
        for idx in np.flatnonzero(~inside):
            out[idx] = self._tail_quantile(float(us[idx]), grid)
        return out

    def _tail_quantile(self, p: float, grid: dict) -> float:
        if p <= 0.0 or p >= 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {p}")
        if p < grid["p_lo"]:
            lo, hi = grid["x_lo"], grid["x_lo"]
            while lo > 1e-300 and self.cdf(lo) > p:
                lo /= 10.0
            if lo == hi or self.cdf(lo) > p:
                return lo
        else:
            lo = grid["x_hi"]
            hi = self._upper_bracket(lo, p)
            # past the level-off point no x resolves p
            if hi == lo or self.cdf(hi) < p:
                return hi
        return float(optimize.brentq(lambda x: self.cdf(x) - p, lo, hi, xtol=1e-300))


@lru_cache(maxsize=32)
def ml_law(params: ModelParams) -> MittagLefflerLaw:
    """Shared law per parameter pair (the cached CDF grid is the expensive part)."""
    return MittagLefflerLaw(params)


class PosteriorDiversityLaw:
    """Law of S_{alpha,theta}(n,j) = B * S_{alpha,theta+n}, B ~ Beta(theta/alpha+j, n/alpha-j).

    CDF(x) = E_B[F_{alpha,theta+n}(x/B)], computed by Gauss-Jacobi quadrature
    over the Beta factor on the cached CDF grid of S_{alpha,theta+n}.
    """

    def __init__(self, ctx: PosteriorContext, nodes: int = JACOBI_NODES):
        self.ctx = ctx
        self.base = ml_law(ctx.params.shifted(ctx.n))
        a, b = ctx.beta_a, ctx.beta_b
        t, w = special.roots_jacobi(nodes, b - 1.0, a - 1.0)
        self._b_nodes = 0.5 * (1.0 + t)
        self._weights = w / w.sum()

    def beta_mean(self) -> float:
        return self.ctx.beta_a / (self.ctx.beta_a + self.ctx.beta_b)

    def mean(self) -> float:
        return self.beta_mean() * self.base.mean()

    def cdf(self, x) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        scaled = xs[:, None] / self._b_nodes[None, :]
        values = self.base.cdf_interp(scaled.ravel()).reshape(scaled.shape)
        return np.clip(values @ self._weights, 0.0, 1.0)


# ============================================================================
# Functional interface
# ============================================================================


def ml_density(params: ModelParams, s: float) -> float:
    if s <= 0:
        raise DomainError(f"ml_density needs s > 0, got {s}")
    return ml_law(params).density(s)


def ml_cdf(params: ModelParams, x: float) -> float:
    return ml_law(params).cdf(x)


def ml_quantile(params: ModelParams, p: float) -> float:
    return ml_law(params).quantile(p)


def ml_neg_moment(params: ModelParams, order: int = 1,
                  quadrature: Optional[QuadratureSpec] = None) -> float:
    if order != 1:
        raise DomainError("only the first negative moment is supported")
    return ml_law(params).neg_moment(quadrature)
