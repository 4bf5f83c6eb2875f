"""Metropolis-within-Gibbs sampler for the POGAMP posterior given observations Y_o.

One sweep updates, in order: each subregion block of N (with the values Y_N
there), Y_N, the intensity, the kernel/f parameters and, with the NNGP
switch on, the latent mesh. The values of Y away from N and the data are
never stored; any that a step unveils are discarded once N changes.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import NU_MAX, FDist, fdist_cov, fdist_logdensity_cached, gp_conditional, mvn_logdensity_cached
from .errors import DivergentChain
from .geometry import as_locations, cell_index, partition_domain
from .kernels import KERNEL_PARAMS, CovKernel
from .linalg import InverseCache, cholesky, inverse_add, inverse_remove
from .nngp import (
    build_index,
    mesh_factors,
    mesh_gibbs,
    mesh_logdensity,
    nngp_conditional_logdensity,
    nngp_conditional_sample,
    off_mesh_factors,
    ParentProcess,
)
from .pointprocess import FORMS, Intensity, intensity_integral, pp_logdensity, pp_sample_region
from .priors import Prior, PriorSpec

LOG_PARAMS = ("sigma2", "phi", "tau2")
F_KERNEL_PREFIX = "f_"
ADAPT_TARGET = 0.44


# ---------------------------------------------------------------------------
# configuration and state


@dataclass
class SamplerConfig:
    """Run settings. ``theta_mode`` is "shared" (f reuses the base kernel) or "separate"."""

    iterations: int = 1000
    burn_in: int = 500
    thin: int = 1
    K: int | None = None
    M: int = 100
    theta_mode: str = "shared"
    update_theta_g: tuple = ("mean", "sigma2", "phi")
    update_theta_f: tuple = ("alpha",)
    update_lambda: bool = True
    update_n: bool = True
    update_y_n: bool = True
    reuse_inverses: bool = True
    nngp: bool = False
    mesh_resolution: int = 20
    m: int = 15
    debug: bool = False
    store_latent: bool = True
    proposal_reference: str = "current"  # theta_f behind the Y_N proposal: "current" or "window_average"

    def __post_init__(self):
        if self.iterations < 0 or self.burn_in < 0:
            raise ValueError("iterations and burn_in must be non-negative")
        if self.thin < 1 or self.M < 1:
            raise ValueError("thin and M must be positive")
        if self.theta_mode not in ("shared", "separate"):
            raise ValueError("theta_mode must be 'shared' or 'separate'")
        for name in self.update_theta_g:
            if name not in KERNEL_PARAMS:
                raise ValueError(f"unknown theta_G parameter {name!r}")
        allowed_f = {"alpha", "nu"} | (
            {F_KERNEL_PREFIX + p for p in KERNEL_PARAMS} if self.theta_mode == "separate" else set()
        )
        for name in self.update_theta_f:
            if name not in allowed_f:
                raise ValueError(f"unknown theta_f parameter {name!r} for mode {self.theta_mode}")
        if self.K is not None and self.K < 1:
            raise ValueError("K must be positive")
        if self.proposal_reference not in ("current", "window_average"):
            raise ValueError("proposal_reference must be 'current' or 'window_average'")


@dataclass
class NngpCache:
    index: object
    parent: ParentProcess
    mesh: object  # MeshFactors for the current S_N and kernel
    obs: object  # OffMeshFactors of the observation sites


@dataclass
class PogampState:
    """Current values plus the inverse caches they determine.

    ``g_n``/``g_no`` hold base-GP inverses at S_N and at S_N followed by the
    observation sites; ``f_n`` is the f scale inverse at S_N.
    """

    domain: object
    obs_locs: np.ndarray
    y_o: np.ndarray
    events: np.ndarray
    y_n: np.ndarray
    kernel: CovKernel
    f: FDist
    intensity: Intensity
    g_n: InverseCache
    g_no: InverseCache
    f_n: InverseCache
    unveiled: dict = field(default_factory=dict)
    y_mesh: np.ndarray | None = None
    nngp: NngpCache | None = None

    @property
    def n_events(self):
        return self.events.shape[0]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _f_cache(f, kernel, events, g_n):
    return g_n if f.kernel == kernel else InverseCache.from_locations(events, f.kernel)


def _nngp_cache(index, kernel, events, y_n, obs_locs):
    parent = ParentProcess(kernel, events, y_n)
    return NngpCache(index, parent, mesh_factors(index, parent), off_mesh_factors(index, parent, obs_locs))


def make_state(domain, obs_locs, y_o, kernel, f, intensity, events=None, y_n=None, nngp_index=None, y_mesh=None):
    """Build a state (and its caches) from values."""
    obs_locs = as_locations(obs_locs)
    y_o = np.asarray(y_o, dtype=float)
    if obs_locs.shape[0] != y_o.shape[0]:
        raise ValueError("obs_locs and y_o disagree in length")
    events = as_locations(np.zeros((0, 2)) if events is None else events)
    y_n = np.zeros(0) if y_n is None else np.asarray(y_n, dtype=float)
    g_n = InverseCache.from_locations(events, kernel)
    state = PogampState(
        domain, obs_locs, y_o, events, y_n, kernel, f, intensity,
        g_n, InverseCache.from_locations(np.vstack([events, obs_locs]), kernel), _f_cache(f, kernel, events, g_n),
    )
    if nngp_index is not None:
        state.nngp = _nngp_cache(nngp_index, kernel, events, y_n, obs_locs)
        if y_mesh is None:
            y_mesh = np.full(nngp_index.size, kernel.mean)
        state.y_mesh = np.asarray(y_mesh, dtype=float)
    return state


def refresh_caches(state):
    """Re-derive every cache from the state's locations and parameters."""
    index = state.nngp.index if state.nngp is not None else None
    return make_state(
        state.domain, state.obs_locs, state.y_o, state.kernel, state.f, state.intensity,
        state.events, state.y_n, index, state.y_mesh,
    )


def check_caches(state, atol=1e-7):
    """Compare every cached inverse with a fresh inversion (max-abs, scaled by the inverse's size)."""
    fresh = refresh_caches(state)
    for name in ("g_n", "g_no", "f_n"):
        a, b = getattr(state, name), getattr(fresh, name)
        if a.size != b.size or not np.array_equal(a.locations, b.locations):
            raise AssertionError(f"{name} locations are stale")
        if a.size and np.max(np.abs(a.inv - b.inv)) > atol * max(1.0, np.max(np.abs(b.inv))):
            raise AssertionError(f"{name} inverse drifted from a fresh inversion")
        if abs(a.logdet - b.logdet) > atol * max(1.0, abs(b.logdet)):
            raise AssertionError(f"{name} log-determinant drifted")
    return True


# ---------------------------------------------------------------------------
# log densities


def _obs_loglik_exact(state, y_n):
    mu = state.kernel.mean
    joint = mvn_logdensity_cached(np.concatenate([y_n, state.y_o]) - mu, state.g_no)
    return joint - mvn_logdensity_cached(y_n - mu, state.g_n)


def _obs_loglik_nngp(state, parent, nc):
    return mesh_logdensity(state.y_mesh, parent, nc.mesh) + nngp_conditional_logdensity(
        state.y_o, state.obs_locs, nc.index, parent, state.y_mesh, fac=nc.obs
    )


def obs_loglik(state, y_n=None):
    """log pi(Y_o | Y_N) under the base GP (joint with the mesh in NNGP mode)."""
    y_n = state.y_n if y_n is None else y_n
    if state.nngp is None:
        return _obs_loglik_exact(state, y_n)
    return _obs_loglik_nngp(state, state.nngp.parent.with_values(y_n), state.nngp)


def f_loglik(state, y_n=None):
    y_n = state.y_n if y_n is None else y_n
    if y_n.size == 0:
        return 0.0
    return fdist_logdensity_cached(state.f, y_n, state.f_n)


def log_target(state):
    """Log of the data and Y_N factors of the posterior at the current state."""
    return obs_loglik(state) + f_loglik(state)


# ---------------------------------------------------------------------------
# Y_N block


def target_rate(dim):
    return 0.234 if dim > 5 else 0.44


@dataclass
class AdaptiveProposal:
    """Random walk for Y_N with covariance (scale / d) * base_cov.

    During adaptation ``base_cov`` is the f covariance at the current S_N under
    the window average of theta_f (the current theta_f before the first window
    closes). Once ``frozen`` the scale is fixed and ``base_cov`` follows the
    current theta_f, which the Y_N block conditions on, so each step is an
    exact MH move.
    """

    M: int = 100
    scale: float = 2.38**2
    f_ref: FDist | None = None
    locations: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    base_cov: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    chol: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    frozen: bool = False
    built_for: FDist | None = None

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def ensure(self, state):
        """Rebuild ``base_cov`` when S_N (or, once frozen, theta_f) differs from the one it was built for."""
        f = state.f if (self.frozen or self.f_ref is None) else self.f_ref
        same_locs = self.locations.shape == state.events.shape and np.array_equal(self.locations, state.events)
        if same_locs and f == self.built_for:
            return self
        base = fdist_cov(f, state.events) if state.n_events else np.zeros((0, 0))
        chol = cholesky(base) if state.n_events else base
        return dataclasses.replace(self, locations=state.events.copy(), base_cov=base, chol=chol, built_for=f)

    def freeze(self):
        return dataclasses.replace(self, frozen=True, built_for=None)


def average_f(draws):
    """FDist whose numeric parameters are the mean over ``draws``."""
    first = draws[0]
    keys = ("mean", "sigma2", "phi", "tau2")
    kern = first.kernel.replace(**{k: float(np.mean([getattr(d.kernel, k) for d in draws])) for k in keys})
    alpha = float(np.mean([d.alpha for d in draws]))
    nu = None if first.nu is None else float(np.mean([d.nu for d in draws]))
    return first.replace(kernel=kern, alpha=alpha, nu=nu)


def adapt_proposal(history, proposal, f_draws=None, state=None):
    """Window update: ``scale *= exp(mean(accepted - target))`` and base_cov from averaged theta_f.

    ``history`` is a sequence of (accepted, target) pairs.
    """
    if len(history):
        acc = np.array([h[0] for h in history], dtype=float)
        tgt = np.array([h[1] for h in history], dtype=float)
        scale = proposal.scale * math.exp(float(np.mean(acc - tgt)))
    else:
        scale = proposal.scale
    f_ref = average_f(f_draws) if f_draws else proposal.f_ref
    out = dataclasses.replace(proposal, scale=scale, f_ref=f_ref, built_for=None)
    return out.ensure(state) if state is not None else out


def y_n_log_ratio(state, y_star):
    """log acceptance ratio for moving Y_N to ``y_star`` (same S_N)."""
    return obs_loglik(state, y_star) + f_loglik(state, y_star) - obs_loglik(state) - f_loglik(state)


def update_y_n(rng, state, proposal):
    """Random-walk MH step on Y_N; returns (state, proposal, accepted or None if skipped)."""
    if state.n_events == 0:
        return state, proposal, None
    proposal = proposal.ensure(state)
    d = state.n_events
    step = math.sqrt(proposal.scale / d) * (proposal.chol @ rng.standard_normal(d))
    y_star = state.y_n + step
    log_alpha = y_n_log_ratio(state, y_star)
    accepted = bool(math.log(rng.random()) < log_alpha)  # NaN compares False
    if accepted:
        state = state.replace(y_n=y_star)
        if state.nngp is not None:
            state.nngp = dataclasses.replace(state.nngp, parent=state.nngp.parent.with_values(y_star))
    return state, proposal, accepted


# ---------------------------------------------------------------------------
# N block


def _log_fg(f, y, f_cache, g_cache, mu):
    if y.size == 0:
        return 0.0
    return fdist_logdensity_cached(f, y, f_cache) - mvn_logdensity_cached(y - mu, g_cache)


def update_n_block(rng, state, k, cells, reuse=True):
    """Propose a fresh pattern and values on cell ``k``; returns (state, accepted).

    New events come from the intensity restricted to the cell and their values
    from the base GP given (Y_N, Y_o). The acceptance ratio reduces to
    ``(f/g)(Y_N*) / (f/g)(Y_N)``. With ``reuse`` the inverses are updated by
    block removal and addition; otherwise they are recomputed from scratch.
    New events are placed first, followed by the kept ones in order.
    """
    if state.nngp is not None:
        return _update_n_block_nngp(rng, state, k, cells, reuse)
    kernel, mu = state.kernel, state.kernel.mean
    idx = np.flatnonzero(cell_index(cells, state.events) == k) if state.n_events else np.zeros(0, int)
    new = pp_sample_region(rng, state.intensity, state.domain, cells[k])
    if new.shape[0]:
        cond = gp_conditional(new, state.g_no.locations, np.concatenate([state.y_n, state.y_o]), kernel,
                              given_inv=state.g_no)
        y_new = cond.sample(rng)
        for loc, val in zip(map(tuple, new), y_new):
            state.unveiled[loc] = float(val)
    else:
        y_new = np.zeros(0)
    keep = np.setdiff1d(np.arange(state.n_events), idx)
    events_star = np.vstack([new, state.events[keep]])
    y_star = np.concatenate([y_new, state.y_n[keep]])
    shared = state.f.kernel == kernel
    if reuse:
        g_star = inverse_add(inverse_remove(state.g_n, idx), new, kernel)
        f_star = g_star if shared else inverse_add(inverse_remove(state.f_n, idx), new, state.f.kernel)
    else:
        g_star = InverseCache.from_locations(events_star, kernel)
        f_star = g_star if shared else InverseCache.from_locations(events_star, state.f.kernel)
    log_alpha = _log_fg(state.f, y_star, f_star, g_star, mu) - _log_fg(state.f, state.y_n, state.f_n, state.g_n, mu)
    accepted = bool(math.log(rng.random()) < log_alpha)
    if accepted and (idx.size or new.shape[0]):
        if reuse:
            g_no = inverse_add(inverse_remove(state.g_no, idx), new, kernel)
        else:
            g_no = InverseCache.from_locations(np.vstack([events_star, state.obs_locs]), kernel)
        state = state.replace(events=events_star, y_n=y_star, g_n=g_star, f_n=f_star, g_no=g_no)
    state.unveiled.clear()
    return state, accepted


def _update_n_block_nngp(rng, state, k, cells, reuse):
    nc = state.nngp
    kernel = state.kernel
    idx = np.flatnonzero(cell_index(cells, state.events) == k) if state.n_events else np.zeros(0, int)
    new = pp_sample_region(rng, state.intensity, state.domain, cells[k])
    if new.shape[0]:
        fwd = off_mesh_factors(nc.index, nc.parent, new)
        y_new = nngp_conditional_sample(rng, nc.index, nc.parent, fwd, state.y_mesh)
        log_q_fwd = nngp_conditional_logdensity(y_new, new, nc.index, nc.parent, state.y_mesh, fac=fwd)
        for loc, val in zip(map(tuple, new), y_new):
            state.unveiled[loc] = float(val)
    else:
        y_new, log_q_fwd = np.zeros(0), 0.0
    keep = np.setdiff1d(np.arange(state.n_events), idx)
    events_star = np.vstack([new, state.events[keep]])
    y_star = np.concatenate([y_new, state.y_n[keep]])
    shared = state.f.kernel == kernel
    if reuse:
        f_star = inverse_add(inverse_remove(state.f_n, idx), new, state.f.kernel)
    else:
        f_star = InverseCache.from_locations(events_star, state.f.kernel)
    nc_star = _nngp_cache(nc.index, kernel, events_star, y_star, state.obs_locs)
    log_q_rev = 0.0
    if idx.size:
        log_q_rev = nngp_conditional_logdensity(
            state.y_n[idx], state.events[idx], nc.index, nc_star.parent, state.y_mesh
        )
    f_cur = fdist_logdensity_cached(state.f, state.y_n, state.f_n) if state.n_events else 0.0
    f_new = fdist_logdensity_cached(state.f, y_star, f_star) if y_star.size else 0.0
    log_alpha = (
        _obs_loglik_nngp(state, nc_star.parent, nc_star) + f_new + log_q_rev
        - _obs_loglik_nngp(state, nc.parent, nc) - f_cur - log_q_fwd
    )
    accepted = bool(math.log(rng.random()) < log_alpha)
    if accepted and (idx.size or new.shape[0]):
        if reuse:
            g_star = inverse_add(inverse_remove(state.g_n, idx), new, kernel)
            g_no = inverse_add(inverse_remove(state.g_no, idx), new, kernel)
        else:
            g_star = InverseCache.from_locations(events_star, kernel)
            g_no = InverseCache.from_locations(np.vstack([events_star, state.obs_locs]), kernel)
        state = state.replace(
            events=events_star, y_n=y_star, g_n=g_star, g_no=g_no, f_n=g_star if shared else f_star, nngp=nc_star
        )
    state.unveiled.clear()
    return state, accepted


# ---------------------------------------------------------------------------
# intensity


def update_lambda(rng, state, priors):
    """Conjugate Gamma draw of a homogeneous rate."""
    if state.intensity.kind != "homogeneous":
        raise ValueError("the conjugate update needs a homogeneous intensity")
    shape = priors.lambda_shape + state.n_events
    rate = priors.lambda_rate + state.domain.area
    return state.replace(intensity=Intensity.homogeneous(rng.gamma(shape, 1.0 / rate)))


def _theta_lambda_prior(priors, name, positive):
    if name in priors.theta_lambda:
        return priors.theta_lambda[name]
    if positive:
        return Prior("lognormal", {"meanlog": 0.0, "sdlog": 2.0})
    return Prior("normal", {"mean": 0.0, "sd": 10.0})


def theta_lambda_log_ratio(state, intensity_star, priors, name):
    """Log acceptance ratio for one intensity parameter (log-scale Jacobian included)."""
    positive = name in FORMS[state.intensity.form].positive
    prior = _theta_lambda_prior(priors, name, positive)
    x, x_star = state.intensity.params[name], intensity_star.params[name]
    out = (
        pp_logdensity(state.events, intensity_star, state.domain)
        - pp_logdensity(state.events, state.intensity, state.domain)
        + prior.logpdf(x_star) - prior.logpdf(x)
    )
    if positive:
        out += math.log(x_star) - math.log(x)
    return out


def update_theta_lambda(rng, state, priors, steps):
    """Component-wise random-walk MH on the parameters of a parametric intensity.

    Positive parameters move on the log scale. Returns (state, {name: accepted}).
    """
    if state.intensity.kind != "parametric" or state.intensity.form not in FORMS:
        raise ValueError("theta_lambda updates need a parametric intensity from FORMS")
    accepted = {}
    positive_names = FORMS[state.intensity.form].positive
    for name in sorted(state.intensity.params):
        x = state.intensity.params[name]
        z = steps.get(name, 0.1) * rng.standard_normal()
        x_star = x * math.exp(z) if name in positive_names else x + z
        params = dict(state.intensity.params)
        params[name] = x_star
        cand = state.intensity.replace(params=params)
        try:
            cand.bound(state.domain)
            log_alpha = theta_lambda_log_ratio(state, cand, priors, name)
        except (ValueError, ArithmeticError):
            log_alpha = -np.inf
        ok = bool(math.log(rng.random()) < log_alpha)
        if ok:
            state = state.replace(intensity=cand)
        accepted[name] = ok
    return state, accepted


# ---------------------------------------------------------------------------
# kernel and f parameters


def _propose(name, x, step, z):
    """Return (x*, log Jacobian) for one parameter's random-walk move."""
    base = name[len(F_KERNEL_PREFIX):] if name.startswith(F_KERNEL_PREFIX) else name
    if base in LOG_PARAMS:
        x_star = x * math.exp(step * z)
        return x_star, math.log(x_star) - math.log(x)
    if base == "nu":
        x_star = 2.0 + (x - 2.0) * math.exp(step * z)
        return x_star, math.log(x_star - 2.0) - math.log(x - 2.0)
    return x + step * z, 0.0


def _param_prior(priors, name):
    if name in priors.theta_f:
        return priors.theta_f[name]
    base = name[len(F_KERNEL_PREFIX):] if name.startswith(F_KERNEL_PREFIX) else name
    return priors.theta_g[base]


def _prior_logpdf(priors, name, x, f):
    prior = _param_prior(priors, name)
    return prior.logpdf(x, f=f, param=name) if prior.kind == "pc" else prior.logpdf(x)


def _with_kernel(state, kernel, f_kernel=None):
    """State with new base (and optionally f) kernels and rebuilt caches."""
    f = state.f.replace(kernel=kernel if f_kernel is None else f_kernel)
    index = state.nngp.index if state.nngp is not None else None
    return make_state(state.domain, state.obs_locs, state.y_o, kernel, f, state.intensity,
                      state.events, state.y_n, index, state.y_mesh)


def theta_g_log_ratio(state, state_star):
    """Data-likelihood part of the theta_G ratio: pi_G(Y_o | Y_N) under each kernel."""
    return obs_loglik(state_star) - obs_loglik(state)


def theta_f_log_ratio(state, state_star):
    """f part of the theta_f ratio: f(Y_N) under each parameter value."""
    return f_loglik(state_star) - f_loglik(state)


def theta_shared_log_ratio(state, state_star):
    """Shared-theta ratio: product of the theta_G and theta_f ratios at the common value."""
    return theta_g_log_ratio(state, state_star) + theta_f_log_ratio(state, state_star)


def _candidate(state, name, x_star, mode):
    if name in ("alpha", "nu"):
        f = state.f.replace(**{name: x_star})
        return state.replace(f=f)
    if name.startswith(F_KERNEL_PREFIX):
        kern = state.f.kernel.replace(**{name[len(F_KERNEL_PREFIX):]: x_star})
        f = state.f.replace(kernel=kern)
        return state.replace(f=f, f_n=InverseCache.from_locations(state.events, kern))
    kern = state.kernel.replace(**{name: x_star})
    if mode == "shared":
        return _with_kernel(state, kern)
    return _with_kernel(state, kern, f_kernel=state.f.kernel)


def update_theta(rng, state, priors, mode, names, steps):
    """Component-wise random-walk MH on kernel and f parameters.

    ``mode`` is "G" (base kernel, data term only), "f" (f parameters, f term
    only) or "shared" (base kernel doubling as the f scale kernel, both
    terms). Returns (state, {name: accepted}).
    """
    accepted = {}
    for name in names:
        if name in ("alpha", "nu") or name.startswith(F_KERNEL_PREFIX):
            x = getattr(state.f, name) if name in ("alpha", "nu") else getattr(
                state.f.kernel, name[len(F_KERNEL_PREFIX):])
        else:
            x = getattr(state.kernel, name)
        if name.endswith("tau2") and x <= 0:
            raise ValueError("tau2 must start positive to be updated on the log scale")
        x_star, log_jac = _propose(name, x, steps[name], rng.standard_normal())
        log_alpha = -np.inf
        if not (name == "nu" and x_star > NU_MAX):
            try:
                cand = _candidate(state, name, x_star, mode)
                if name in ("alpha", "nu") or name.startswith(F_KERNEL_PREFIX):
                    like = theta_f_log_ratio(state, cand)
                elif mode == "shared":
                    like = theta_shared_log_ratio(state, cand)
                else:
                    like = theta_g_log_ratio(state, cand)
                log_alpha = (
                    like + log_jac + _prior_logpdf(priors, name, x_star, cand.f) - _prior_logpdf(priors, name, x, state.f)
                )
            except (ValueError, np.linalg.LinAlgError):
                log_alpha = -np.inf
        ok = bool(math.log(rng.random()) < log_alpha)
        if ok:
            state = cand
        accepted[name] = ok
    return state, accepted


# ---------------------------------------------------------------------------
# initialisation


def default_k(expected_events, per_square=5.0):
    """Smallest perfect square K with at most ``per_square`` expected events per cell."""
    side = max(1, math.ceil(math.sqrt(max(expected_events, 0.0) / per_square)))
    return side * side


def moment_init(obs_locs, y_o, family="exponential"):
    """Method-of-moments kernel parameters from the data.

    The sample variance is split 90/10 between sigma2 and tau2 and the range
    comes from the first distance bin whose semivariance reaches 95% of it.
    """
    obs_locs = as_locations(obs_locs)
    y_o = np.asarray(y_o, dtype=float)
    var = float(np.var(y_o, ddof=1)) if y_o.size > 1 else 1.0
    var = var if var > 0 else 1.0
    d = np.linalg.norm(obs_locs[:, None, :] - obs_locs[None, :, :], axis=-1)
    iu = np.triu_indices(len(y_o), 1)
    dist = d[iu]
    semi = 0.5 * (y_o[iu[0]] - y_o[iu[1]]) ** 2
    dmax = float(dist.max()) if dist.size else 1.0
    edges = np.linspace(0.0, 0.5 * dmax, 11)
    practical = None
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (dist > lo) & (dist <= hi)
        if sel.sum() >= 5 and semi[sel].mean() >= 0.95 * var:
            practical = 0.5 * (lo + hi)
            break
    practical = 0.5 * dmax if practical is None else practical
    return {"mean": float(np.mean(y_o)), "sigma2": 0.9 * var, "phi": max(practical / 3.0, 1e-6), "tau2": 0.1 * var}


def _initial_steps(state, names):
    steps = {}
    for name in names:
        base = name[len(F_KERNEL_PREFIX):] if name.startswith(F_KERNEL_PREFIX) else name
        if base == "mean":
            steps[name] = 0.3 * math.sqrt(state.kernel.variance)
        elif base == "alpha":
            steps[name] = 0.5
        else:
            steps[name] = 0.3
    return steps


# ---------------------------------------------------------------------------
# driver


@dataclass
class ChainOutput:
    """Retained draws of one chain.

    ``trace`` has one row per retained iteration with the columns in
    ``columns``; ``events``/``y_n``/``y_mesh`` hold the matching latent draws.
    """

    columns: list
    trace: np.ndarray
    events: list
    y_n: list
    y_mesh: list
    acceptance: dict
    y_n_log: np.ndarray  # per post-burn-in Y_N step: (dim, accepted)
    initial: PogampState
    final: PogampState
    config: SamplerConfig
    proposal: AdaptiveProposal | None = None

    def column(self, name):
        return self.trace[:, self.columns.index(name)]

    def __len__(self):
        return self.trace.shape[0]

    def acceptance_rates(self):
        return {k: (v[0] / v[1] if v[1] else float("nan")) for k, v in self.acceptance.items()}

    def draw_state(self, j):
        """(kernel, f, events, y_n, y_mesh) of retained draw ``j``."""
        row = dict(zip(self.columns, self.trace[j]))
        kernel = self.initial.kernel.replace(**{p: row[p] for p in KERNEL_PARAMS})
        f = self.initial.f
        fk = (
            kernel
            if self.config.theta_mode == "shared"
            else f.kernel.replace(**{p: row[F_KERNEL_PREFIX + p] for p in KERNEL_PARAMS})
        )
        f = f.replace(kernel=fk, alpha=row["alpha"], nu=None if f.nu is None else row["nu"])
        mesh = self.y_mesh[j] if self.y_mesh else None
        return kernel, f, self.events[j], self.y_n[j], mesh


def trace_columns(state, config):
    cols = ["iteration", "n_events"]
    if state.intensity.kind == "homogeneous":
        cols.append("lambda")
    else:
        cols += [f"lambda_{k}" for k in sorted(state.intensity.params)]
    cols += list(KERNEL_PARAMS)
    if config.theta_mode == "separate":
        cols += [F_KERNEL_PREFIX + p for p in KERNEL_PARAMS]
    cols += ["alpha", "nu", "log_target"]
    return cols


def _trace_row(it, state, config, lt):
    row = [it, state.n_events]
    if state.intensity.kind == "homogeneous":
        row.append(state.intensity.rate)
    else:
        row += [state.intensity.params[k] for k in sorted(state.intensity.params)]
    row += [getattr(state.kernel, p) for p in KERNEL_PARAMS]
    if config.theta_mode == "separate":
        row += [getattr(state.f.kernel, p) for p in KERNEL_PARAMS]
    row += [state.f.alpha, np.nan if state.f.nu is None else state.f.nu, lt]
    return row


def initial_state(domain, obs_locs, y_o, kernel_family, f_family, priors, config, kernel_init=None,
                  f_init=None, intensity=None, nu=None):
    """Starting state: lambda at its prior mean, N empty and moment-based kernel parameters.

    ``kernel_init``/``f_init`` override individual starting values.
    """
    params = moment_init(obs_locs, y_o, kernel_family)
    params.update(kernel_init or {})
    kernel = CovKernel(kernel_family, **params)
    f_kernel = kernel
    f_init = dict(f_init or {})
    if config.theta_mode == "separate":
        fp = dict(params)
        fp.update({k[len(F_KERNEL_PREFIX):]: v for k, v in f_init.items() if k.startswith(F_KERNEL_PREFIX)})
        f_kernel = CovKernel(kernel_family, **fp)
    alpha = f_init.get("alpha", 0.0)
    nu_val = f_init.get("nu", nu if nu is not None else (10.0 if f_family in ("student_t", "skew_t") else None))
    f = FDist(f_family, f_kernel, alpha=alpha, nu=nu_val)
    if intensity is None:
        intensity = Intensity.homogeneous(priors.lambda_mean)
    index = build_index(domain, config.mesh_resolution, config.m) if config.nngp else None
    return make_state(domain, obs_locs, y_o, kernel, f, intensity, nngp_index=index)


def _expected_events(state):
    return intensity_integral(state.intensity, state.domain)


def run_gibbs(rng, state, priors=None, config=None, proposal=None, callback=None):
    """Run one chain from ``state``; returns a :class:`ChainOutput`.

    ``callback(it, state)``, if given, is called after every sweep.
    """
    priors = PriorSpec() if priors is None else priors
    config = SamplerConfig() if config is None else config
    if state.obs_locs.shape[0] < 2:
        raise ValueError("at least two observations are needed")
    if config.nngp and state.nngp is None:
        index = build_index(state.domain, config.mesh_resolution, config.m)
        state = make_state(state.domain, state.obs_locs, state.y_o, state.kernel, state.f, state.intensity,
                           state.events, state.y_n, index)
    K = config.K if config.K is not None else default_k(_expected_events(state))
    cells = partition_domain(state.domain, K)
    mode = config.theta_mode
    g_names = tuple(config.update_theta_g)
    f_names = tuple(config.update_theta_f)
    steps = _initial_steps(state, g_names + f_names)
    lam_steps = {k: 0.1 for k in state.intensity.params} if state.intensity.kind == "parametric" else {}
    proposal = AdaptiveProposal(M=config.M) if proposal is None else proposal
    initial = state
    columns = trace_columns(state, config)
    rows, events, y_ns, meshes, y_n_log = [], [], [], [], []
    acceptance = {}
    window_acc = {}
    y_hist, f_hist = [], []

    def tally(block, ok, post):
        if ok is None:
            return
        window_acc.setdefault(block, []).append(ok)
        if post:
            a = acceptance.setdefault(block, [0, 0])
            a[0] += int(ok)
            a[1] += 1

    for it in range(config.iterations):
        post = it >= config.burn_in
        if post and not proposal.frozen:
            proposal = proposal.freeze()
        if config.update_n:
            for k in range(K):
                state, ok = update_n_block(rng, state, k, cells, reuse=config.reuse_inverses)
                tally("n", ok, post)
        if config.update_y_n:
            state, proposal, ok = update_y_n(rng, state, proposal)
            if ok is not None:
                tally("y_n", ok, post)
                if not post:
                    y_hist.append((ok, target_rate(state.n_events)))
                else:
                    y_n_log.append((state.n_events, ok))
        if config.update_lambda:
            if state.intensity.kind == "homogeneous":
                state = update_lambda(rng, state, priors)
            else:
                state, oks = update_theta_lambda(rng, state, priors, lam_steps)
                for name, ok in oks.items():
                    tally("lambda_" + name, ok, post)
        if g_names:
            state, oks = update_theta(rng, state, priors, "shared" if mode == "shared" else "G", g_names, steps)
            for name, ok in oks.items():
                tally(name, ok, post)
        if f_names:
            state, oks = update_theta(rng, state, priors, "f", f_names, steps)
            for name, ok in oks.items():
                tally(name, ok, post)
        if state.nngp is not None:
            nc = state.nngp
            y_mesh = mesh_gibbs(rng, nc.index, nc.parent, nc.mesh, state.obs_locs, state.y_o, nc.obs)
            state = state.replace(y_mesh=y_mesh)
        if not post:
            f_hist.append(state.f)
        if config.debug:
            check_caches(state)
        lt = log_target(state)
        if not np.isfinite(lt):
            raise DivergentChain(f"log target became {lt} at iteration {it}")

        # adaptation: at multiples of M during burn-in only
        if not post and (it + 1) % config.M == 0:
            window_f = f_hist if config.proposal_reference == "window_average" else None
            proposal = adapt_proposal(y_hist, proposal, window_f, state)
            y_hist, f_hist = [], []
            for name in steps:
                hist = window_acc.get(name)
                if hist:
                    steps[name] *= math.exp(float(np.mean(hist)) - ADAPT_TARGET)
            for name in lam_steps:
                hist = window_acc.get("lambda_" + name)
                if hist:
                    lam_steps[name] *= math.exp(float(np.mean(hist)) - ADAPT_TARGET)
            window_acc = {}

        if post and (it - config.burn_in) % config.thin == 0:
            rows.append(_trace_row(it, state, config, lt))
            if config.store_latent:
                events.append(state.events.copy())
                y_ns.append(state.y_n.copy())
                if state.y_mesh is not None:
                    meshes.append(state.y_mesh.copy())
        if callback is not None:
            callback(it, state)

    trace = np.array(rows, dtype=float).reshape(-1, len(columns))
    return ChainOutput(
        columns, trace, events, y_ns, meshes, acceptance,
        np.array(y_n_log, dtype=float).reshape(-1, 2), initial, state, config, proposal,
    )


__all__ = [
    "AdaptiveProposal",
    "ChainOutput",
    "PogampState",
    "SamplerConfig",
    "adapt_proposal",
    "check_caches",
    "default_k",
    "initial_state",
    "log_target",
    "make_state",
    "moment_init",
    "run_gibbs",
    "theta_f_log_ratio",
    "theta_g_log_ratio",
    "theta_lambda_log_ratio",
    "theta_shared_log_ratio",
    "update_lambda",
    "update_n_block",
    "update_theta",
    "update_theta_lambda",
    "update_y_n",
    "y_n_log_ratio",
]
