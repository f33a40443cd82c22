"""Degree-by-degree nonlinear matching and the ``reduce`` driver.

``alg3_degree_step`` continues Method I: ``W_l`` is tall, so the unknown
coefficient is recovered with the left inverse ``W_l^+``.
``alg4_degree_step`` continues Method II: the unknowns ``(F_l, H_l)`` enter
through ``Xi_l`` and are solved from the output deficit ``Y'_l``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kron
from .errors import PolyMMError, PreconditionError, WlRankDeficient, XiRankDeficient
from .linalg import basic_solve, min_norm_solve, numerical_rank, observability_index, solve_sylvester
from .linear import (LinearFit, MatchSpec, default_C, method1_fit, method2_fit, order_bound,
                     small_sigma_fit, xi_matrix, xi_prime, hurwitz_from_eigs, default_eigs)
from .moments import (MomentSeries, compute_corrections, compute_coupling_W, deficit_time_domain,
                      frequency_transform, moment_recursion)
from .systems import PolySystem, SignalGenerator, stacked_width

MODES = ("fzero", "hzero", "assign", "free")
SOLVERS = ("basic", "min_norm")


@dataclass
class DegreeResult:
    degree: int
    F: np.ndarray
    H: np.ndarray
    X: np.ndarray
    residual: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class NonlinearMatchPlan:
    """Working state shared by the per-degree steps."""

    system: PolySystem              # reduced model, grown in place
    gen: SignalGenerator
    targets: dict                   # l -> Y_l^o
    X: dict                         # l -> X_l of the reduced model
    modes: dict = field(default_factory=dict)
    assigned: dict = field(default_factory=dict)
    solver: str = "basic"

    def mode(self, l: int, default: str) -> str:
        return self.modes.get(l, default)


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b)))


def _degree_inputs(plan: NonlinearMatchPlan, l: int):
    sysm, gen = plan.system, plan.gen
    W = compute_coupling_W(plan.X[1], gen.U1, l)
    E, G = compute_corrections(plan.X, sysm, gen, l)
    Sl = kron.reduced_kron_sum(gen.S1, l)
    return W, E, G, Sl


def alg3_degree_step(plan: NonlinearMatchPlan, l: int) -> DegreeResult:
    """One degree of the Method I continuation.

    ``fzero``: F_l = 0, X_l from the Sylvester equation, H_l from the output
    equation.  ``assign``: X_l given (default zero), F_l and H_l from both
    equations.  ``hzero``: X_l = C^+ (output deficit), then F_l.
    """
    sysm, gen = plan.system, plan.gen
    A, B, C, D = sysm.A, sysm.B, sysm.C, sysm.D
    Y = np.atleast_2d(plan.targets[l])
    mode = plan.mode(l, "fzero")
    W, E, G, Sl = _degree_inputs(plan, l)
    rank = numerical_rank(W)
    if rank < W.shape[1]:
        raise WlRankDeficient(f"W_{l} ({W.shape[0]}x{W.shape[1]}) has rank {rank}", degree=l)
    Winv = np.linalg.pinv(W)
    Ul = gen.Ul(l)
    if mode == "fzero":
        Xl = solve_sylvester(A, Sl, B @ Ul + E)
        F = np.zeros((sysm.n, W.shape[0]))
        H = (Y - C @ Xl - D @ Ul - G) @ Winv
    elif mode in ("assign", "hzero"):
        if mode == "hzero":
            if numerical_rank(C) < sysm.p:
                raise PreconditionError("mode hzero needs C of full row rank", degree=l)
            Xl = np.linalg.pinv(C) @ (Y - D @ Ul - G)
            H = np.zeros((sysm.p, W.shape[0]))
        else:
            Xl = plan.assigned.get(l)
            Xl = np.zeros((sysm.n, Sl.shape[0])) if Xl is None else np.atleast_2d(Xl)
            H = (Y - C @ Xl - D @ Ul - G) @ Winv
        F = (Xl @ Sl - A @ Xl - B @ Ul - E) @ Winv
    else:
        raise ValueError(f"mode {mode!r} is not available for Method I")
    sysm.set_stack(l, F, H)
    plan.X[l] = Xl
    Yl = C @ Xl + D @ Ul + G + H @ W
    syl = np.linalg.norm(Xl @ Sl - A @ Xl - B @ Ul - E - F @ W)
    diag = {"mode": mode, "W_shape": list(W.shape), "W_rank": rank,
            "sylvester_residual": float(syl)}
    return DegreeResult(l, F, H, Xl, _rel(Yl, Y), diag)


def alg4_degree_step(plan: NonlinearMatchPlan, l: int, check_transform: bool = True) -> DegreeResult:
    """One degree of the Method II continuation.

    ``free`` solves for both ``F_l`` and ``H_l``, ``hzero`` keeps the output
    map linear, ``fzero`` keeps the state equation linear.  The solver for
    the underdetermined system is ``plan.solver`` (basic or min_norm).
    """
    sysm, gen = plan.system, plan.gen
    A, B, C, D = sysm.A, sysm.B, sysm.C, sysm.D
    n, p = sysm.n, sysm.p
    Y = np.atleast_2d(plan.targets[l])
    mode = plan.mode(l, "free")
    W, E, G, Sl = _degree_inputs(plan, l)
    ml = W.shape[0]
    series = MomentSeries(l, Y={l: Y}, E={l: E}, G={l: G})
    Yp = deficit_time_domain(series, sysm, gen, l, Y)
    diag: dict = {"mode": mode, "W_shape": list(W.shape), "W_rank": numerical_rank(W)}
    if check_transform:
        fd = frequency_transform(series, sysm, gen, l, Y)
        diag["transform_gap"] = float(np.abs(fd.Y_prime - Yp).max(initial=0.0))
        diag["transform_max_imag"] = fd.max_imag
    if mode == "free":
        Xi = xi_matrix(A, C, Sl, W, with_feedthrough=True)
    elif mode == "hzero":
        Xi = xi_prime(A, C, Sl, W)
    elif mode == "fzero":
        Xi = np.kron(W.T, np.eye(p))
    else:
        raise ValueError(f"mode {mode!r} is not available for Method II")
    rank = numerical_rank(Xi)
    diag.update(xi_shape=list(Xi.shape), xi_rank=rank)
    mu = observability_index(W, Sl)
    diag["observability_index"] = mu
    if rank < Xi.shape[0]:
        raise XiRankDeficient(f"Xi_{l} ({Xi.shape[0]}x{Xi.shape[1]}) has rank {rank}", degree=l)
    solve = basic_solve if plan.solver == "basic" else min_norm_solve
    z = solve(Xi, Yp.reshape(-1, order="F"))
    F = np.zeros((n, ml))
    H = np.zeros((p, ml))
    if mode in ("free", "hzero"):
        F = z[: n * ml].reshape(n, ml, order="F")
    if mode == "free":
        H = z[n * ml:].reshape(p, ml, order="F")
    elif mode == "fzero":
        H = z.reshape(p, ml, order="F")
    Ul = gen.Ul(l)
    Xl = solve_sylvester(A, Sl, B @ Ul + E + F @ W)
    sysm.set_stack(l, F, H)
    plan.X[l] = Xl
    Yl = C @ Xl + D @ Ul + G + H @ W
    diag["solver"] = plan.solver
    return DegreeResult(l, F, H, Xl, _rel(Yl, Y), diag)


# ---------------------------------------------------------------------------

@dataclass
class ReduceConfig:
    method: str = "I"
    kappa: int = 1
    order: int | str = "auto"
    mode: str | None = None          # default: fzero (I), free or hzero (II)
    modes: dict = field(default_factory=dict)
    eigenvalues: list | None = None
    force_D_zero: bool | None = None
    solver: str = "basic"
    seed: int | None = 0
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    C: np.ndarray | None = None
    assigned: dict = field(default_factory=dict)
    d_zero_construction: str = "lemma"
    small_sigma_mode: str = "B_zero"

    def __post_init__(self):
        self.method = "II" if str(self.method).upper() in ("2", "II") else "I"
        if self.mode is not None and self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")

    def default_mode(self) -> str:
        if self.mode is not None:
            return self.mode
        if self.method == "I":
            return "fzero"
        return "hzero" if self.D_zero() else "free"

    def D_zero(self) -> bool:
        if self.force_D_zero is not None:
            return bool(self.force_D_zero)
        return self.method == "II" and self.mode == "hzero"


@dataclass
class ReductionReport:
    system: PolySystem
    config: ReduceConfig
    order: int
    bound: dict
    linear: dict
    degrees: dict
    residuals: dict
    X: dict
    elapsed: float = 0.0

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "method": cfg.method, "kappa": cfg.kappa, "order": self.order,
            "mode": cfg.default_mode(), "modes": {str(k): v for k, v in cfg.modes.items()},
            "D_zero": cfg.D_zero(), "solver": cfg.solver, "seed": cfg.seed,
            "bound": self.bound,
            "linear": _jsonable(self.linear),
            "degrees": {str(k): _jsonable(v) for k, v in self.degrees.items()},
            "residuals": {str(k): v for k, v in self.residuals.items()},
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def target_moments(original, gen: SignalGenerator, kappa: int) -> dict:
    """``{l: Y_l^o}`` from a model, a :class:`MomentSeries` or a plain dict."""
    if isinstance(original, PolySystem):
        return dict(moment_recursion(original, gen, kappa, keep_intermediates=False).Y)
    Y = original.Y if isinstance(original, MomentSeries) else original
    Y = {int(k): np.atleast_2d(np.asarray(v, dtype=float)) for k, v in Y.items()}
    missing = [l for l in range(1, kappa + 1) if l not in Y]
    if missing:
        raise PreconditionError(f"target moments missing for degrees {missing}")
    return Y


def reduce(original, gen: SignalGenerator, config: ReduceConfig) -> ReductionReport:
    """Build a reduced polynomial model matching ``Y_1 .. Y_kappa``."""
    t0 = time.perf_counter()
    kappa = config.kappa
    Y = target_moments(original, gen, kappa)
    p, sigma, m = Y[1].shape[0], gen.sigma, gen.m
    D_zero = config.D_zero()
    bound = order_bound(sigma, m, p, config.method, D_zero, kappa)
    n = bound.n if config.order == "auto" else int(config.order)
    bound_info = bound.to_dict() | {"chosen": n, "meets_bound": n >= bound.n}

    if sigma <= m:
        A = hurwitz_from_eigs(config.eigenvalues or default_eigs(n)) if config.A is None else config.A
        C = default_C(p, n) if config.C is None else config.C
        fit = small_sigma_fit(Y[1], gen.U1, gen.S1, A, C, mode=config.small_sigma_mode)
    else:
        spec = MatchSpec(Y[1], gen.U1, gen.S1, n, method=config.method, force_D_zero=D_zero,
                         eigenvalues=config.eigenvalues, seed=config.seed, A=config.A, B=config.B,
                         C=config.C, d_zero_construction=config.d_zero_construction)
        try:
            fit = method1_fit(spec) if config.method == "I" else method2_fit(spec)
        except PolyMMError as exc:
            exc.degree = exc.degree or 1
            raise
    plan = NonlinearMatchPlan(fit.system.copy(), gen, Y, {1: fit.X1},
                              modes=dict(config.modes), assigned=dict(config.assigned),
                              solver=config.solver)
    default = config.default_mode()
    if config.method == "I" and default == "free":
        default = "fzero"
    for l in range(2, kappa + 1):
        plan.modes.setdefault(l, default)
    degrees = {}
    for l in range(2, kappa + 1):
        try:
            step = alg3_degree_step if config.method == "I" else alg4_degree_step
            res = step(plan, l)
        except PolyMMError as exc:
            exc.degree = exc.degree or l
            raise
        degrees[l] = {"residual": res.residual} | res.diagnostics
    reduced = plan.system
    reduced.L = max(reduced.L, kappa)
    check = moment_recursion(reduced, gen, kappa, keep_intermediates=False)
    residuals = {l: _rel(check.Y[l], Y[l]) for l in range(1, kappa + 1)}
    return ReductionReport(reduced, config, n, bound_info, fit.diagnostics, degrees,
                           residuals, dict(check.X), time.perf_counter() - t0)
