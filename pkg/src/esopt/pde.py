"""Black-Scholes PDE in heat-equation form.

With ``tau = T - t``, ``x = ln(S/K) + (r - sigma^2/2) tau`` and
``u = C e^{r tau}`` the pricing equation becomes ``u_tau = (sigma^2/2) u_xx``
with initial data ``u0(x) = K max(e^x - 1, 0)``. Two solvers live here: a
direct Gaussian-kernel convolution of ``u0`` and a theta-scheme finite
difference march.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .analytic import MarketParams, Method, PriceQuote
from .errors import DegenerateLimitError, EsoptError, StabilityError

Scheme = Literal["explicit", "crank-nicolson", "implicit"]
_THETA = {"explicit": 0.0, "crank-nicolson": 0.5, "implicit": 1.0}


@dataclass(frozen=True)
class HeatVariables:
    tau: float
    x: float
    u: float


def to_heat(s: float, t: float, c: float, m: MarketParams) -> HeatVariables:
    if not s > 0:
        raise EsoptError(f"spot: must be positive, got {s!r}")
    tau = m.expiry - t
    if tau < 0:
        raise EsoptError(f"t: {t!r} is past expiry {m.expiry!r}")
    x = math.log(s / m.strike) + (m.r - 0.5 * m.sigma**2) * tau
    return HeatVariables(tau, x, c * math.exp(m.r * tau))


def from_heat(hv: HeatVariables, m: MarketParams) -> tuple[float, float, float]:
    """Inverse of :func:`to_heat`; returns ``(S, t, C)``."""
    s = m.strike * math.exp(hv.x - (m.r - 0.5 * m.sigma**2) * hv.tau)
    return s, m.expiry - hv.tau, hv.u * math.exp(-m.r * hv.tau)


def call_payoff_heat(x, strike: float):
    """``u0(x) = K max(e^x - 1, 0)``."""
    return strike * np.maximum(np.expm1(x), 0.0)


def put_payoff_heat(x, strike: float):
    return strike * np.maximum(-np.expm1(x), 0.0)


# --------------------------------------------------------------------------
# Green's-function quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadConfig:
    """Composite Gauss-Legendre settings for the kernel convolution.

    ``width`` is the truncation half-width in kernel standard deviations; it
    is doubled until the analytic tail bound drops below ``tail_tol``.
    ``panel_sd`` is the panel width in kernel standard deviations.
    """

    width: float = 10.0
    order: int = 20
    panel_sd: float = 0.5
    tail_tol: float = 1e-12
    max_doublings: int = 6


def gauss_convolve(
    f: Callable[[np.ndarray], np.ndarray],
    x: float,
    sd: float,
    lo: float,
    hi: float,
    order: int = 20,
    panels: int | None = None,
    panel_sd: float = 0.5,
) -> float:
    """``(1/(sd sqrt(2 pi))) * int_lo^hi f(y) exp(-(x-y)^2 / (2 sd^2)) dy``."""
    if hi <= lo:
        return 0.0
    if panels is None:
        panels = max(4, math.ceil((hi - lo) / (panel_sd * sd)))
    nodes, weights = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    y = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    kern = np.exp(-0.5 * ((x - y) / sd) ** 2)
    return float(np.sum(w * f(y) * kern)) / (sd * math.sqrt(2.0 * math.pi))


def _quad_with_error(f, x, sd, lo, hi, cfg: QuadConfig) -> tuple[float, float]:
    if hi <= lo:
        return 0.0, 0.0
    n = max(4, math.ceil((hi - lo) / (cfg.panel_sd * sd)))
    coarse = gauss_convolve(f, x, sd, lo, hi, cfg.order, n)
    fine = gauss_convolve(f, x, sd, lo, hi, cfg.order, 2 * n)
    return fine, abs(fine - coarse)


def _upper_q(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def greens_function_price(
    s: float, m: MarketParams, quad: QuadConfig | None = None
) -> PriceQuote:
    """Price by direct quadrature of the heat-kernel convolution.

    The call integrand vanishes for ``y < 0`` and the put integrand for
    ``y > 0``, so each leg is integrated over a half line truncated at
    ``width`` kernel deviations around the integrand's bulk. The reported
    error estimate adds the panel-halving difference to the analytic
    truncation bound, both in price units.
    """
    cfg = quad or QuadConfig()
    if not s > 0:
        raise EsoptError(f"spot: must be positive, got {s!r}")
    tau = m.tau
    if tau == 0.0 or m.sigma == 0.0:
        raise DegenerateLimitError("quadrature needs tau > 0 and sigma > 0")
    sd = m.sigma * math.sqrt(tau)
    K = m.strike
    x = math.log(s / K) + (m.r - 0.5 * m.sigma**2) * tau
    growth = K * math.exp(x + 0.5 * sd * sd)  # int K e^y kernel dy over all y

    width = cfg.width
    for _ in range(cfg.max_doublings + 1):
        # mass of e^y * kernel is centered at x + sd^2, of the constant at x
        tail = growth * (_upper_q(width) + _upper_q(width + sd)) + K * 2.0 * _upper_q(width)
        if tail < cfg.tail_tol:
            break
        width *= 2.0

    def call_f(y):
        return call_payoff_heat(y, K)

    def put_f(y):
        return put_payoff_heat(y, K)

    c_lo, c_hi = max(0.0, x - width * sd), x + sd * sd + width * sd
    p_lo, p_hi = x - width * sd, min(0.0, x + sd * sd + width * sd)
    u_call, e_call = _quad_with_error(call_f, x, sd, c_lo, c_hi, cfg)
    u_put, e_put = _quad_with_error(put_f, x, sd, p_lo, p_hi, cfg)
    disc = math.exp(-m.r * tau)
    return PriceQuote(
        call=max(u_call * disc, 0.0),
        put=max(u_put * disc, 0.0),
        method=Method.QUADRATURE,
        error_estimate=(e_call + tail) * disc,
        spot=s,
        put_error_estimate=(e_put + tail) * disc,
    )


# --------------------------------------------------------------------------
# Finite differences
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform grid in the heat coordinate.

    ``ntau`` defaults to 800 steps; ``ntau=None`` instead picks the step
    count so that ``dtau`` is about ``dx``.
    With ``x_min = -x_max`` and odd ``nx`` the payoff kink at ``x = 0`` is a
    grid node.
    """

    x_min: float = -6.0
    x_max: float = 6.0
    nx: int = 801
    ntau: int | None = 800

    def __post_init__(self):
        if not self.x_min < 0.0 < self.x_max:
            raise EsoptError(f"grid: need x_min < 0 < x_max, got [{self.x_min}, {self.x_max}]")
        if self.nx < 3:
            raise EsoptError(f"grid: nx must be >= 3, got {self.nx}")
        if self.ntau is not None and self.ntau < 1:
            raise EsoptError(f"grid: ntau must be >= 1, got {self.ntau}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def steps(self, tau: float) -> int:
        if self.ntau is not None:
            return self.ntau
        return max(1, math.ceil(tau / self.dx))

    def coarsened(self) -> "Grid":
        ntau = None if self.ntau is None else max(1, self.ntau // 2)
        return Grid(self.x_min, self.x_max, (self.nx - 1) // 2 + 1, ntau)

    def refined(self) -> "Grid":
        ntau = None if self.ntau is None else 2 * self.ntau
        return Grid(self.x_min, self.x_max, 2 * (self.nx - 1) + 1, ntau)


@dataclass
class FdSolution:
    """Final time level of a finite-difference march (call and put)."""

    market: MarketParams
    grid: Grid
    scheme: str
    ntau: int
    x: np.ndarray
    u_call: np.ndarray
    u_put: np.ndarray
    surface: np.ndarray | None = field(default=None, repr=False)
    tau_levels: np.ndarray | None = field(default=None, repr=False)

    @property
    def spots(self) -> np.ndarray:
        m = self.market
        return m.strike * np.exp(self.x - (m.r - 0.5 * m.sigma**2) * m.tau)

    @property
    def calls(self) -> np.ndarray:
        return self.u_call * math.exp(-self.market.r * self.market.tau)

    @property
    def puts(self) -> np.ndarray:
        return self.u_put * math.exp(-self.market.r * self.market.tau)

    def price(self, s: float) -> tuple[float, float]:
        """Call and put at spot ``s`` by cubic-spline interpolation in ``x``."""
        m = self.market
        xs = math.log(s / m.strike) + (m.r - 0.5 * m.sigma**2) * m.tau
        if not self.x[0] <= xs <= self.x[-1]:
            raise EsoptError(f"spot {s!r} maps to x={xs:.4g}, outside the grid")
        disc = math.exp(-m.r * m.tau)
        c = float(CubicSpline(self.x, self.u_call)(xs)) * disc
        p = float(CubicSpline(self.x, self.u_put)(xs)) * disc
        return max(c, 0.0), max(p, 0.0)


def _boundaries(x_min, x_max, strike, half_var):
    # far-field asymptotes C ~ S - K e^{-r tau}, P ~ K e^{-r tau} - S in heat variables
    call = (0.0, strike * math.expm1(x_max + half_var))
    put = (-strike * math.expm1(x_min + half_var), 0.0)
    return call, put


_GL_NODES, _GL_WEIGHTS = leggauss(16)


def _hat_averages(f, x: np.ndarray, dx: float) -> np.ndarray:
    """``(1/dx) * int f(y) hat_i(y) dy`` for each interior node.

    Sub-intervals are split at ``y = 0`` so the payoff kink never sits inside
    a Gauss rule.
    """
    out = np.zeros_like(x)
    for i in range(1, x.size - 1):
        xi = x[i]
        total = 0.0
        for a, b in ((xi - dx, xi), (xi, xi + dx)):
            pieces = [(a, 0.0), (0.0, b)] if a < 0.0 < b else [(a, b)]
            for lo, hi in pieces:
                y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * _GL_NODES
                wt = 1.0 - np.abs(y - xi) / dx
                total += 0.5 * (hi - lo) * float(np.sum(_GL_WEIGHTS * f(y) * wt))
        out[i] = total / dx
    return out


def initial_data(x: np.ndarray, strike: float, spatial_order: int = 4) -> np.ndarray:
    """Payoffs (call, put columns) as seen by the spatial discretization.

    Order 2 samples ``u0`` at the nodes. Order 4 solves ``A v = b`` where
    ``A = I + delta^2/12`` is the compact mass operator and ``b`` are
    hat-function averages of ``u0``; on smooth data ``v = u0 + O(dx^4)``, and
    across the kink it keeps the scheme's fourth moments consistent.
    """
    point = np.column_stack([call_payoff_heat(x, strike), put_payoff_heat(x, strike)])
    if spatial_order == 2:
        return point
    dx = x[1] - x[0]
    b = np.column_stack([
        _hat_averages(lambda y: call_payoff_heat(y, strike), x, dx),
        _hat_averages(lambda y: put_payoff_heat(y, strike), x, dx),
    ])
    ni = x.size - 2
    ab = np.empty((3, ni))
    ab[0, :] = ab[2, :] = 1.0 / 12.0
    ab[1, :] = 10.0 / 12.0
    rhs = b[1:-1].copy()
    rhs[0] -= point[0] / 12.0
    rhs[-1] -= point[-1] / 12.0
    out = point.copy()
    out[1:-1] = solve_banded((1, 1), ab, rhs, check_finite=False)
    return out


def fd_solve(
    m: MarketParams,
    grid: Grid | None = None,
    scheme: Scheme = "crank-nicolson",
    rannacher: int = 2,
    spatial_order: int | None = None,
    store_surface: bool = False,
) -> FdSolution:
    """March ``u_tau = (sigma^2/2) u_xx`` from the payoff to ``tau = T - t``.

    Time stepping is the theta method. Space uses the fourth-order compact
    stencil ``(I + delta^2/12) u_tau = (sigma^2 / 2) delta^2 u / dx^2`` by
    default, or the plain three-point stencil with ``spatial_order=2`` (always
    used by the explicit scheme). Crank-Nicolson starts with ``rannacher``
    steps split into fully implicit half steps to damp the payoff kink.

    Dirichlet data: ``u = 0`` on the far side of each payoff and the exact
    forward asymptote ``K (e^{x + sigma^2 tau / 2} - 1)`` on the near side.

    Raises
    ------
    StabilityError
        for the explicit scheme when ``sigma^2 dtau / (2 dx^2) > 1/2``.
    """
    grid = grid or Grid()
    if scheme not in _THETA:
        raise EsoptError(f"scheme: unknown scheme {scheme!r}")
    if spatial_order is None:
        spatial_order = 2 if scheme == "explicit" else 4
    if spatial_order not in (2, 4):
        raise EsoptError(f"spatial_order: expected 2 or 4, got {spatial_order!r}")
    if scheme == "explicit" and spatial_order != 2:
        raise EsoptError("explicit scheme supports spatial_order=2 only")
    tau = m.tau
    if tau == 0.0 or m.sigma == 0.0:
        raise DegenerateLimitError("finite differences need tau > 0 and sigma > 0")
    x = grid.x
    dx = grid.dx
    K = m.strike
    nsteps = grid.steps(tau)
    dtau = tau / nsteps
    diff = 0.5 * m.sigma**2
    ratio = diff * dtau / dx**2
    if scheme == "explicit" and ratio > 0.5:
        raise StabilityError(ratio)

    # mass operator A = I + w * delta^2
    w = 1.0 / 12.0 if spatial_order == 4 else 0.0
    u = initial_data(x, K, spatial_order)
    plan: list[tuple[float, float]] = []
    if scheme == "crank-nicolson" and rannacher > 0:
        nr = min(rannacher, nsteps)
        plan += [(1.0, 0.5 * dtau)] * (2 * nr)
        plan += [(0.5, dtau)] * (nsteps - nr)
    else:
        plan += [(_THETA[scheme], dtau)] * nsteps

    surface = [u[:, 0].copy()] if store_surface else None
    levels = [0.0]
    t_now = 0.0
    banded_cache: dict[tuple[float, float], np.ndarray] = {}
    for theta, dt in plan:
        lam = diff * dt / dx**2
        t_new = t_now + dt
        (c_lo, c_hi), (p_lo, p_hi) = _boundaries(x[0], x[-1], K, diff * t_new)
        inner = u[1:-1]
        lap = u[:-2] - 2.0 * inner + u[2:]
        rhs = inner + (w + (1.0 - theta) * lam) * lap
        off = w - theta * lam
        if off == 0.0 and theta == 0.0:
            new_inner = rhs
        else:
            rhs = rhs.copy()
            rhs[0] -= off * np.array([c_lo, p_lo])
            rhs[-1] -= off * np.array([c_hi, p_hi])
            key = (theta, dt)
            ab = banded_cache.get(key)
            if ab is None:
                ab = np.empty((3, inner.shape[0]))
                ab[0, :] = ab[2, :] = off
                ab[1, :] = 1.0 - 2.0 * off
                banded_cache[key] = ab
            new_inner = solve_banded((1, 1), ab, rhs, check_finite=False)
        u = np.vstack([[c_lo, p_lo], new_inner, [c_hi, p_hi]])
        t_now = t_new
        if store_surface:
            surface.append(u[:, 0].copy())
            levels.append(t_now)

    return FdSolution(
        market=m,
        grid=grid,
        scheme=scheme,
        ntau=nsteps,
        x=x,
        u_call=u[:, 0].copy(),
        u_put=u[:, 1].copy(),
        surface=None if surface is None else np.array(surface),
        tau_levels=None if surface is None else np.array(levels),
    )


def fd_price(
    s: float,
    m: MarketParams,
    grid: Grid | None = None,
    scheme: Scheme = "crank-nicolson",
) -> PriceQuote:
    """Finite-difference quote with a Richardson-style error estimate.

    The estimate is ``|V_h - V_2h| / 3`` from a second solve on the grid with
    half the nodes and steps (second order assumed).
    """
    grid = grid or Grid()
    fine = fd_solve(m, grid, scheme)
    c, p = fine.price(s)
    coarse_grid = grid.coarsened() if grid.ntau is not None else Grid(
        grid.x_min, grid.x_max, (grid.nx - 1) // 2 + 1, max(1, fine.ntau // 2)
    )
    cc, pc = fd_solve(m, coarse_grid, scheme).price(s)
    return PriceQuote(
        call=c,
        put=p,
        method=Method.PDE,
        error_estimate=abs(c - cc) / 3.0,
        spot=s,
        put_error_estimate=abs(p - pc) / 3.0,
    )


def convergence_table(
    s: float,
    m: MarketParams,
    exact: float,
    levels: int = 3,
    base: Grid | None = None,
    scheme: Scheme = "crank-nicolson",
) -> list[dict]:
    """Call error against ``exact`` under simultaneous halving of dx and dtau.

    ``order`` on each row after the first is ``log2(err_prev / err)``.
    """
    grid = base or Grid(-6.0, 6.0, 201, 100)
    if grid.ntau is None:
        raise EsoptError("convergence_table: base grid needs an explicit ntau")
    rows = []
    prev = None
    for _ in range(levels):
        c, _p = fd_solve(m, grid, scheme).price(s)
        err = abs(c - exact)
        order = math.log2(prev / err) if prev and err > 0 else float("nan")
        rows.append({"nx": grid.nx, "ntau": grid.ntau, "dx": grid.dx,
                     "call": c, "error": err, "order": order})
        prev = err
        grid = grid.refined()
    return rows


def write_surface_csv(sol: FdSolution, path) -> None:
    """Dump the stored call surface as rows ``x,tau,u``."""
    if sol.surface is None:
        raise EsoptError("write_surface_csv: solve with store_surface=True")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "tau", "u"])
        for tau, row in zip(sol.tau_levels, sol.surface):
            for xi, ui in zip(sol.x, row):
                w.writerow([f"{xi:.12g}", f"{tau:.12g}", f"{ui:.12g}"])


def write_slice_csv(sol: FdSolution, path) -> None:
    """Dump the final-level ``S,C,P`` slice."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["S", "call", "put"])
        for s, c, p in zip(sol.spots, sol.calls, sol.puts):
            w.writerow([f"{s:.12g}", f"{c:.12g}", f"{p:.12g}"])
