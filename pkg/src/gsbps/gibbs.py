"""The Gibbs sampler: initialization, conjugate hyperparameter steps,
per-coefficient adaptive rejection steps, and the grid step for the
log-overdispersion parameter.

One chain is strictly sequential; multiple chains with distinct seeds own
their state exclusively and may run in parallel processes.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .ars import ars_sample
from .errors import ChainAbortError, GsbpsError, InvalidParameterError
from .griddy import DEFAULT_CF, build_grid, griddy_sample, grow_grid
from .modefind import bracket_mode, find_mode, grid_scan_mode
from .penalty import DEFAULT_EPS, PenaltyModel, penalty_matrix
from .rng import RandomSource
from .targets import (
    BinomialModel,
    ModelState,
    NegBinModel,
    PoissonModel,
    rho_conditional,
    theta_conditional,
)

# kappa widens the mode bracket by this many conditional-prior standard deviations
BRACKET_KAPPA_SDS = 10.0


@dataclass(frozen=True)
class GsbpsConfig:
    """Everything a single chain needs besides the data."""

    K: int
    r: int = 2
    M: int = 15000
    burnin: int = 5000
    eps: float = DEFAULT_EPS
    nu: float = 2.0
    a_delta: float = 1e-4
    b_delta: float = 1e-4
    a_rho: float = 1e-4
    b_rho: float = 1e-4
    lambda0: float = 1.0
    ars_c: float = 2.0
    ars_L: int = 5
    grid_size: int = 100
    c_f: float = DEFAULT_CF
    seed: int = 1

    def __post_init__(self):
        if self.burnin >= self.M:
            raise InvalidParameterError(f"burnin {self.burnin} must be < M {self.M}")
        if self.M < 1 or self.burnin < 0:
            raise InvalidParameterError("need M >= 1 and burnin >= 0")
        positives = {
            "nu": self.nu, "a_delta": self.a_delta, "b_delta": self.b_delta,
            "a_rho": self.a_rho, "b_rho": self.b_rho, "lambda0": self.lambda0,
            "ars_c": self.ars_c, "eps": self.eps,
        }
        for name, val in positives.items():
            if val <= 0:
                raise InvalidParameterError(f"{name} must be positive, got {val}")
        if self.r not in (2, 3):
            raise InvalidParameterError(f"penalty order must be 2 or 3, got {self.r}")
        if self.c_f >= 0:
            raise InvalidParameterError(f"c_f must be negative, got {self.c_f}")


@dataclass
class Chain:
    """Posterior draws (burn-in rows included) plus run metadata."""

    draws: np.ndarray  # M x J, columns theta_1..theta_K, lambda, delta [, rho]
    names: list[str]
    config: GsbpsConfig
    logpost_trace: np.ndarray
    ars_eval_counts: np.ndarray  # log-density evaluations spent by ARS, per sweep
    wall_time: float

    @property
    def K(self) -> int:
        return self.config.K

    def post_burnin(self) -> np.ndarray:
        return self.draws[self.config.burnin :]

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, self.names.index(name)]

    def theta_draws(self, discard_burnin: bool = True) -> np.ndarray:
        rows = self.post_burnin() if discard_burnin else self.draws
        return rows[:, : self.K]


# ---------------------------------------------------------------------------
# conjugate steps


def delta_gamma_params(lam: float, cfg: GsbpsConfig) -> tuple[float, float]:
    """(shape, rate) of the conditional Gamma posterior of delta."""
    return 0.5 * cfg.nu + cfg.a_delta, 0.5 * lam * cfg.nu + cfg.b_delta


def lambda_gamma_params(
    theta: np.ndarray, pm: PenaltyModel, delta: float, cfg: GsbpsConfig
) -> tuple[float, float]:
    """(shape, rate) of the conditional Gamma posterior of lambda."""
    return 0.5 * (pm.K + cfg.nu), 0.5 * (pm.quad_form(theta) + cfg.nu * delta)


def sample_delta(lam: float, cfg: GsbpsConfig, rng: RandomSource) -> float:
    if lam <= 0:
        raise InvalidParameterError(f"lam must be positive, got {lam}")
    return rng.gamma(*delta_gamma_params(lam, cfg))


def sample_lambda(
    theta: np.ndarray, pm: PenaltyModel, delta: float, cfg: GsbpsConfig, rng: RandomSource
) -> float:
    if delta <= 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    return rng.gamma(*lambda_gamma_params(theta, pm, delta, cfg))


# ---------------------------------------------------------------------------
# initialization


def init_state(model, pm: PenaltyModel, cfg: GsbpsConfig) -> ModelState:
    """Starting values: penalized/least-squares fits for theta, prior means
    for the hyperparameters, rho = 1 for the NegBin model.

    A singular normal-equations system falls back to theta = 0 with a warning.
    """
    B = model.B
    lam0 = cfg.lambda0
    if isinstance(model, BinomialModel):
        y, m = model.data.y, model.data.m
        lhs = B.T @ B
        rhs = B.T @ ((y + 1.0) / (m - y + 1.0))
    else:  # Poisson and NegBin share the ridge-type start
        y = model.data.counts if isinstance(model, PoissonModel) else model.data.y
        w = y + 1.0
        lhs = B.T @ (w[:, None] * B) + lam0 * pm.P
        rhs = B.T @ (w * np.log(w))
    try:
        theta0 = cho_solve(cho_factor(lhs), rhs)
    except LinAlgError:
        warnings.warn("singular normal equations at initialization; starting from zero")
        theta0 = np.zeros(model.K)
    rho0 = 1.0 if isinstance(model, NegBinModel) else None
    return ModelState(theta=theta0, lam=lam0, delta=cfg.a_delta / cfg.b_delta, rho=rho0)


# ---------------------------------------------------------------------------
# posterior trace


def log_posterior(model, pm: PenaltyModel, cfg: GsbpsConfig, state: ModelState) -> float:
    """Unnormalized log posterior of the full parameter vector (for trace plots)."""
    theta, lam, delta = state.theta, state.lam, state.delta
    if isinstance(model, NegBinModel):
        ll = model.loglik(theta, state.rho)
    else:
        ll = model.loglik(theta)
    lp = 0.5 * pm.K * np.log(lam) - 0.5 * lam * pm.quad_form(theta)
    lp += (0.5 * cfg.nu - 1.0) * np.log(lam) - 0.5 * cfg.nu * delta * lam
    lp += 0.5 * cfg.nu * np.log(delta)  # delta-dependent normalizer of p(lam | delta)
    lp += (cfg.a_delta - 1.0) * np.log(delta) - cfg.b_delta * delta
    if isinstance(model, NegBinModel):
        lp += (cfg.a_rho - 1.0) * np.log(state.rho) - cfg.b_rho * state.rho
    return float(ll + lp)


# ---------------------------------------------------------------------------
# the sampler


def run_gsbps(model, cfg: GsbpsConfig, pm: Optional[PenaltyModel] = None) -> Chain:
    """Run one chain of length M, burn-in rows included in the output.

    Sweep order per iteration: delta, lambda (conjugate Gamma draws), then
    every spline coefficient through mode-bracketed adaptive rejection
    sampling, then (NegBin only) log(rho) through the grid sampler.
    """
    if pm is None:
        pm = penalty_matrix(cfg.K, cfg.r, cfg.eps)
    if model.K != pm.K or model.K != cfg.K:
        raise InvalidParameterError(
            f"dimension mismatch: model K={model.K}, penalty K={pm.K}, config K={cfg.K}"
        )
    rng = RandomSource(cfg.seed)
    state = init_state(model, pm, cfg)
    is_negbin = isinstance(model, NegBinModel)
    names = [f"theta_{k + 1}" for k in range(cfg.K)] + ["lambda", "delta"]
    if is_negbin:
        names.append("rho")

    draws = np.empty((cfg.M, len(names)))
    logpost = np.empty(cfg.M)
    eval_counts = np.zeros(cfg.M, dtype=int)
    eta = model.linear_predictor(state.theta)
    kappa_scale = BRACKET_KAPPA_SDS / np.sqrt(pm.z)

    start = time.perf_counter()
    m = 0
    coordinate = "init"
    try:
        for m in range(cfg.M):
            coordinate = "delta"
            state.delta = sample_delta(state.lam, cfg, rng)
            coordinate = "lambda"
            state.lam = sample_lambda(state.theta, pm, state.delta, cfg, rng)
            for k in range(cfg.K):
                coordinate = f"theta_{k + 1}"
                tgt = theta_conditional(model, state, k, pm, eta=eta)
                lam_z = state.lam * pm.z[k]
                kappa = kappa_scale[k] / np.sqrt(state.lam)
                g0 = float(tgt.dlogpdf(0.0))
                bracket = bracket_mode(tgt, lam_z, kappa, grad0=g0)
                mode = find_mode(tgt, bracket, x0=state.theta[k], grad0=g0)
                value, evals = ars_sample(tgt, mode, rng, c=cfg.ars_c, L=cfg.ars_L)
                eval_counts[m] += evals
                rows, b = model.support_rows(k)
                eta[rows] += (value - state.theta[k]) * b
                state.theta[k] = value
            if is_negbin:
                coordinate = "rho"
                rtgt = rho_conditional(state, model, cfg.a_rho, cfg.b_rho)
                scan = grid_scan_mode(rtgt)
                lo, hi = grow_grid(rtgt, scan.mode, scan.sigma, cfg.c_f)
                grid = build_grid(rtgt, lo, hi, cfg.grid_size)
                state.rho = float(np.exp(griddy_sample(grid, rng)))
            row = [*state.theta, state.lam, state.delta]
            if is_negbin:
                row.append(state.rho)
            draws[m] = row
            logpost[m] = log_posterior(model, pm, cfg, state)
    except GsbpsError as err:
        raise ChainAbortError(
            f"sweep {m}, coordinate {coordinate}: {err}", m, coordinate, state.copy()
        ) from err
    wall = time.perf_counter() - start
    return Chain(draws, names, cfg, logpost, eval_counts, wall)


def _run_seeded(args):
    model, cfg, pm, seed = args
    return run_gsbps(model, replace(cfg, seed=seed), pm=pm)


def run_chains(
    model,
    cfg: GsbpsConfig,
    n_chains: int,
    pm: Optional[PenaltyModel] = None,
    parallel: bool = True,
) -> list[Chain]:
    """Run independent chains with seeds cfg.seed, cfg.seed + 1, ...

    Each chain owns its state and random stream exclusively; results are
    returned in seed order regardless of scheduling.
    """
    if n_chains < 1:
        raise InvalidParameterError(f"need at least one chain, got {n_chains}")
    jobs = [(model, cfg, pm, cfg.seed + i) for i in range(n_chains)]
    if n_chains == 1 or not parallel:
        return [_run_seeded(job) for job in jobs]
    try:
        with ProcessPoolExecutor(max_workers=min(n_chains, 8)) as pool:
            return list(pool.map(_run_seeded, jobs))
    except OSError:
        warnings.warn("process pool unavailable; running chains sequentially")
        return [_run_seeded(job) for job in jobs]
