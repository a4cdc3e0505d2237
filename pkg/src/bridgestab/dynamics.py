"""Entropic interpolations and dynamic consequences of a solved bridge.

For a converged Schrödinger system (φ, ψ) the time marginals of the bridge
are ρ_t = P_t e^φ · P_{T-t} e^ψ · m.  This module computes them and checks:

* the dynamic cost identity   C_T = H(ν|m) + ∫_0^T α(t) dt   with
  α(t) = ∫ |∇ log P_t e^φ|² dρ_t  (midpoint rule in t);
* the exponential drift decay  α(T) ≤ e^{-2κ(T-t)} α(t)  at every mesh
  point (monotone α when κ = 0);
* the small-time limit  T·C_T → W2²(μ,ν)/4  along a list of times;
* convergence of the Schrödinger map  Id - 2T∇φ^T  to the monotone
  (Brenier) rearrangement as T ↓ 0, in L²(μ) on the line.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .diagnostics import gradient_log_semigroup_norm
from .kernels import BandwidthWarning, GibbsKernel, apply_semigroup
from .measures import (MASS_FLOOR, DiscreteMeasure, Grid, masked_gradient,
                       grad_sq_norm)
from .reports import InequalityReport, make_equality_report, make_report
from .schrodinger import SchrodingerSolution, require_converged, solve
from .sobolev import w2_atoms, wasserstein2_1d


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

@dataclass
class EntropicInterpolation:
    """Bridge time marginals on a common grid.

    ``densities[k]`` holds the raw cell weights of ρ_{times[k]} (no
    renormalization; ``masses`` records how far each slice is from 1).
    """

    grid: Grid
    times: np.ndarray
    densities: np.ndarray
    masses: np.ndarray

    def measure_at(self, k: int) -> DiscreteMeasure:
        return DiscreteMeasure.from_weights(self.grid, self.densities[k])


class _KernelCache:
    """Kernels of one family at many times, built once per time value."""

    def __init__(self, base: GibbsKernel):
        self.base = base
        self._cache: dict[float, GibbsKernel] = {base.T: base}

    def at(self, t: float) -> GibbsKernel:
        if t not in self._cache:
            # time quadrature probes t -> 0 on purpose; the per-slice
            # bandwidth warnings would fire dozens of times per check
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BandwidthWarning)
                self._cache[t] = self.base.at_time(t)
        return self._cache[t]


def _log_density_parts(sol: SchrodingerSolution, cache: _KernelCache,
                       t: float) -> tuple[np.ndarray, np.ndarray]:
    """(log P_t e^φ, log P_{T-t} e^ψ); P_0 is the identity."""
    T = sol.T
    lp = sol.phi if t == 0.0 else apply_semigroup(cache.at(t), sol.phi)
    lq = sol.psi if t == T else apply_semigroup(cache.at(T - t), sol.psi)
    return lp, lq


def _density_weights(sol, lp: np.ndarray, lq: np.ndarray) -> np.ndarray:
    u = sol.reference.log_mass()
    logrho = lp + lq + u
    w = np.zeros_like(logrho)
    fin = logrho > -np.inf
    w[fin] = np.exp(logrho[fin])
    return w


def interpolate(sol: SchrodingerSolution,
                n_times: int) -> EntropicInterpolation:
    """ρ_t on an inclusive uniform time mesh 0 = t_0 < … < t_{n-1} = T."""
    require_converged(sol)
    if n_times < 2:
        raise ValueError("need at least two time slices")
    times = np.linspace(0.0, sol.T, n_times)
    cache = _KernelCache(sol.kernel)
    dens = np.empty((n_times, sol.mu.grid.n_cells))
    for k, t in enumerate(times):
        lp, lq = _log_density_parts(sol, cache, float(t))
        dens[k] = _density_weights(sol, lp, lq)
    return EntropicInterpolation(grid=sol.mu.grid, times=times,
                                 densities=dens, masses=dens.sum(axis=1))


# ---------------------------------------------------------------------------
# dynamic cost identity and drift decay
# ---------------------------------------------------------------------------

def _alpha_at(sol: SchrodingerSolution, cache: _KernelCache,
              t: float) -> float:
    """α(t) = ∫ |∇ log P_t e^φ|² dρ_t (ρ_T = ν by the marginal constraint)."""
    if t == sol.T:
        return gradient_log_semigroup_norm(sol.kernel, sol.phi,
                                           sol.nu.weights)
    lp, lq = _log_density_parts(sol, cache, t)
    w = _density_weights(sol, lp, lq)
    mask = w > MASS_FLOOR
    v = np.where(mask, lp, 0.0)
    g2 = grad_sq_norm(v, sol.mu.grid, mask)
    return float(w @ g2)


def dynamic_cost_check(sol: SchrodingerSolution, n_slices: int = 64,
                       rel_tol: float = 0.02
                       ) -> tuple[InequalityReport, list[dict]]:
    """Midpoint-rule check of C_T = H(ν|m) + ∫_0^T α(t) dt."""
    require_converged(sol)
    if n_slices < 1:
        raise ValueError("need at least one slice")
    T = sol.T
    cache = _KernelCache(sol.kernel)
    mids = (np.arange(n_slices) + 0.5) * (T / n_slices)
    rows = []
    total = 0.0
    for t in mids:
        a = _alpha_at(sol, cache, float(t))
        rows.append({"t": float(t), "alpha": a})
        total += a
    integral = (T / n_slices) * total
    lhs = sol.entropic_cost()
    rhs = sol.h_nu + integral
    # absolute floor: a stationary bridge has both sides ~ 0 where a purely
    # relative gate would compare rounding noise against itself
    report = make_equality_report(
        "bbs_identity", lhs, rhs, rel_tol=rel_tol, abs_tol=1e-8,
        extras={"entropy_nu": sol.h_nu, "drift_integral": integral,
                "n_slices": n_slices})
    return report, rows


def gronwall_decay_check(sol: SchrodingerSolution, n_times: int = 16,
                         rel_jitter: float = 1e-3
                         ) -> tuple[InequalityReport, list[dict]]:
    """α(T) ≤ e^{-2κ(T-t)} α(t) at every mesh point; monotone α at κ = 0.

    The violation is measured additively and compared against a jitter
    budget of rel_jitter · max α; the final mesh point evaluates α(T) by the
    exact corrector formula.
    """
    require_converged(sol)
    if n_times < 2:
        raise ValueError("need at least two mesh points")
    kappa = sol.kernel.kappa
    T = sol.T
    cache = _KernelCache(sol.kernel)
    times = np.linspace(0.0, T, n_times + 1)[1:]  # (0, T] mesh, endpoint T
    alphas = np.array([_alpha_at(sol, cache, float(t)) for t in times])
    alpha_T = alphas[-1]

    # violation of the decay bound against the endpoint
    bound = np.exp(2.0 * kappa * (T - times)) * alpha_T
    viol = float(np.max(bound - alphas))
    if kappa == 0.0:
        # flat curvature: the whole curve must be non-increasing
        viol = max(viol, float(np.max(np.diff(alphas))))

    budget = rel_jitter * float(np.max(alphas)) + 1e-12
    report = make_report(
        "gronwall_decay", viol, 0.0, tol_abs=budget, tol_rel=0.0,
        extras={"alpha_final": alpha_T, "alpha_max": float(np.max(alphas)),
                "kappa": kappa, "jitter_budget": budget})
    rows = [{"t": float(t), "alpha": float(a),
             "endpoint_bound": float(b)}
            for t, a, b in zip(times, alphas, bound)]
    return report, rows


# ---------------------------------------------------------------------------
# small-time limits
# ---------------------------------------------------------------------------

def small_time_cost_curve(mu: DiscreteMeasure, nu: DiscreteMeasure,
                          T_list, kappa: float = 0.0, tol: float = 1e-9,
                          max_iter: int = 100_000) -> list[dict]:
    """T·C_T against W2²/4 along decreasing times (1D grids).

    Returns one row per T with the relative gap; rows keep the order of
    ``T_list``.  κ = 0 uses the heat kernel, κ > 0 the OU kernel.
    """
    if mu.grid.ndim != 1:
        raise ValueError("the small-time curve uses the exact 1D W2")
    w2 = wasserstein2_1d(mu, nu)
    target = 0.25 * w2 ** 2
    rows = []
    for T in T_list:
        kern = GibbsKernel.heat(mu.grid, T) if kappa == 0.0 \
            else GibbsKernel.ou(mu.grid, T, kappa)
        sol = solve(mu, nu, kern, tol=tol, max_iter=max_iter)
        require_converged(sol)
        tct = T * sol.entropic_cost()
        gap = tct - target
        rows.append({
            "T": float(T), "t_times_cost": tct, "w2sq_over_4": target,
            "gap": gap, "rel_gap": gap / target if target > 0 else math.inf,
            "residual": sol.marginal_residual,
            "underresolved": kern.underresolved,
        })
    return rows


# ---------------------------------------------------------------------------
# Schrödinger maps versus the monotone rearrangement
# ---------------------------------------------------------------------------

@dataclass
class TransportMapPair:
    """Schrödinger map Id - 2T∇φ^T next to a Brenier map on supp μ."""

    T: float
    support_points: np.ndarray
    support_weights: np.ndarray
    schrodinger_map: np.ndarray
    brenier_map: np.ndarray
    l2_error: float
    pushforward_w2: float


def monotone_rearrangement(mu: DiscreteMeasure,
                           nu: DiscreteMeasure) -> np.ndarray:
    """Brenier map on the line: mass-midpoint CDF values of μ pushed
    through the quantile function of ν.  Defined on supp μ."""
    if mu.grid.ndim != 1:
        raise ValueError("the monotone rearrangement is one-dimensional")
    x = mu.grid.axes[0]
    s = mu.support()
    cum = np.cumsum(mu.weights)
    mid = cum[s] - 0.5 * mu.weights[s]
    cum_nu = np.cumsum(nu.weights)
    idx = np.minimum(np.searchsorted(cum_nu, mid, side="left"), x.size - 1)
    return x[idx]


def schrodinger_map(sol: SchrodingerSolution) -> tuple[np.ndarray, np.ndarray]:
    """(support indices, map values) of Id - 2T∇φ^T on supp μ (1D)."""
    if sol.mu.grid.ndim != 1:
        raise ValueError("map experiments are one-dimensional")
    s = sol.mu.support()
    v = np.where(s, sol.phi, 0.0)
    grad = masked_gradient(v, sol.mu.grid, s)[0]
    x = sol.mu.grid.axes[0]
    return np.flatnonzero(s), (x - 2.0 * sol.T * grad)[s]


def gradient_convergence_experiment(mu: DiscreteMeasure, nu: DiscreteMeasure,
                                    T_list, kappa: float,
                                    brenier=None, tol: float = 1e-9,
                                    max_iter: int = 100_000
                                    ) -> tuple[list[dict],
                                               list[TransportMapPair]]:
    """L²(μ) distance of the Schrödinger map to the Brenier map along T ↓ 0.

    ``brenier`` is an optional callable x ↦ τ(x) (for analytic oracles);
    the default is the grid monotone rearrangement of (μ, ν).
    """
    if mu.grid.ndim != 1:
        raise ValueError("map experiments are one-dimensional")
    x = mu.grid.axes[0]
    s_idx = np.flatnonzero(mu.support())
    tau = np.asarray(brenier(x[s_idx]), dtype=float) if brenier is not None \
        else monotone_rearrangement(mu, nu)
    w = mu.weights[s_idx]

    rows, pairs = [], []
    for T in T_list:
        kern = GibbsKernel.heat(mu.grid, T) if kappa == 0.0 \
            else GibbsKernel.ou(mu.grid, T, kappa)
        sol = solve(mu, nu, kern, tol=tol, max_iter=max_iter)
        require_converged(sol)
        idx, smap = schrodinger_map(sol)
        assert np.array_equal(idx, s_idx)
        err = math.sqrt(float(w @ (smap - tau) ** 2))
        push_w2 = w2_atoms(smap, w, nu.grid.axes[0], nu.weights)
        rows.append({"T": float(T), "l2_error": err,
                     "pushforward_w2": push_w2,
                     "residual": sol.marginal_residual,
                     "underresolved": kern.underresolved})
        pairs.append(TransportMapPair(
            T=float(T), support_points=x[s_idx], support_weights=w,
            schrodinger_map=smap, brenier_map=tau, l2_error=err,
            pushforward_w2=push_w2))
    return rows, pairs
