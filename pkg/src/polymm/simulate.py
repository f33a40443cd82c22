"""Time-domain validation: fixed-step RK4, steady-state error, moment regression."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kron
from .errors import Diverged, GridMismatch, IllConditioned
from .moments import MomentSeries
from .systems import PolySystem, SignalGenerator, compile_generator, compile_system

DIVERGENCE_LIMIT = 1e6


@dataclass
class Trajectory:
    """Samples on a uniform grid; trailing axis of ``v``/``x``/``y`` is an optional batch."""

    t: np.ndarray
    v: np.ndarray   # (T, sigma[, batch])
    x: np.ndarray   # (T, n[, batch])
    y: np.ndarray   # (T, p[, batch])
    h: float

    def window(self, settle_fraction: float) -> slice:
        start = int(np.floor(settle_fraction * (len(self.t) - 1)))
        return slice(start, len(self.t))

    def member(self, k: int) -> "Trajectory":
        """Single run ``k`` of a batched trajectory."""
        if self.v.ndim != 3:
            return self
        return Trajectory(self.t, self.v[..., k], self.x[..., k], self.y[..., k], self.h)


def simulate(system: PolySystem, gen: SignalGenerator, v0, horizon: float, h: float,
             x0=None, record_every: int = 1) -> Trajectory:
    """RK4 on the interconnection ``x' = f(x, u(v))``, ``v' = s(v)``.

    ``v0`` of shape ``(sigma,)`` or ``(sigma, batch)`` runs a batch of initial
    conditions in one pass.
    """
    if h <= 0 or horizon <= 0:
        raise ValueError("h and horizon must be positive")
    v = np.array(v0, dtype=float)
    if v.shape[0] != gen.sigma:
        raise ValueError(f"v0 has {v.shape[0]} entries, generator has sigma={gen.sigma}")
    x = np.zeros((system.n,) + v.shape[1:]) if x0 is None else np.array(x0, dtype=float)
    steps = int(round(horizon / h))

    f, hmap = compile_system(system)
    s, u = compile_generator(gen)

    def rhs(xs, vs):
        return f(np.concatenate([xs, u(vs)])), s(vs)

    ts, vs, xs, ys = [], [], [], []

    def record(k):
        ts.append(k * h)
        vs.append(v.copy())
        xs.append(x.copy())
        ys.append(hmap(np.concatenate([x, u(v)])))

    record(0)
    for k in range(1, steps + 1):
        k1x, k1v = rhs(x, v)
        k2x, k2v = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = rhs(x + h * k3x, v + h * k3v)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not np.all(np.isfinite(x)) or np.abs(x).max(initial=0.0) > DIVERGENCE_LIMIT:
            raise Diverged(f"state norm exceeded {DIVERGENCE_LIMIT:g} at t={k * h:.4g}")
        if k % record_every == 0:
            record(k)
    return Trajectory(np.array(ts), np.array(vs), np.array(xs), np.array(ys), h * record_every)


def settle_horizon(gen: SignalGenerator, periods: int = 20, minimum: float = 1.0) -> float:
    """Horizon covering ``periods`` cycles of the slowest nonzero generator frequency."""
    w = np.abs(np.linalg.eigvals(gen.S1).imag)
    w = w[w > 1e-12]
    if w.size == 0:
        return minimum
    return max(minimum, periods * 2 * np.pi / w.min())


def steady_state_error(full: Trajectory, reduced: Trajectory, settle_fraction: float = 0.5) -> dict:
    if not 0.0 <= settle_fraction < 1.0:
        raise ValueError("settle_fraction must lie in [0, 1)")
    if full.t.shape != reduced.t.shape or not np.allclose(full.t, reduced.t, rtol=0, atol=1e-12):
        raise GridMismatch("trajectories are sampled on different grids")
    if full.y.shape != reduced.y.shape:
        raise GridMismatch(f"output shapes differ: {full.y.shape} vs {reduced.y.shape}")
    w = full.window(settle_fraction)
    e = full.y[w] - reduced.y[w]
    return {"peak": float(np.abs(e).max(initial=0.0)),
            "rms": float(np.sqrt(np.mean(e ** 2))) if e.size else 0.0,
            "samples": int(e.shape[0])}


@dataclass
class RegressionResult:
    series: MomentSeries
    condition: float
    samples: int
    residual_rms: float
    diagnostics: dict = field(default_factory=dict)


def regressor(v: np.ndarray, kappa: int) -> np.ndarray:
    """Rows ``[v^[1]; ..; v^[kappa]]^T`` for samples ``v`` of shape ``(T, sigma)``."""
    return np.hstack([kron.reduced_power_vector(v.T, l).T for l in range(1, kappa + 1)])


def _flatten(trajs, settle_fraction):
    vs, ys = [], []
    for tr in trajs:
        w = tr.window(settle_fraction)
        v, y = tr.v[w], tr.y[w]
        if v.ndim == 3:  # batch axis -> extra samples
            v = np.moveaxis(v, 2, 1).reshape(-1, v.shape[1])
            y = np.moveaxis(y, 2, 1).reshape(-1, y.shape[1])
        vs.append(v)
        ys.append(y)
    return np.vstack(vs), np.vstack(ys)


def estimate_moments_regression(data, kappa: int, settle_fraction: float = 0.5,
                                cond_max: float = 1e8) -> RegressionResult:
    """Least-squares fit of ``y = sum_l Y_l v^[l]`` on steady-state samples.

    ``data`` is a :class:`Trajectory`, a list of them, or a ``(v, y)`` pair of
    sample arrays.  Conditioning is measured on the column-normalized
    regressor Gramian.
    """
    if isinstance(data, tuple):
        v, y = (np.atleast_2d(np.asarray(a, dtype=float)) for a in data)
    else:
        trajs = [data] if isinstance(data, Trajectory) else list(data)
        v, y = _flatten(trajs, settle_fraction)
    Phi = regressor(v, kappa)
    scale = np.linalg.norm(Phi, axis=0)
    scale[scale == 0] = 1.0
    Pn = Phi / scale
    s = np.linalg.svd(Pn, compute_uv=False)
    cond = float((s[0] / s[-1]) ** 2) if s[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond > cond_max:
        raise IllConditioned(f"regressor Gramian condition number {cond:.3e} exceeds {cond_max:.1e}")
    coef, *_ = np.linalg.lstsq(Pn, y, rcond=None)
    coef = (coef / scale[:, None]).T
    sigma = v.shape[1]
    Y, off = {}, 0
    for l in range(1, kappa + 1):
        w = kron.n_multisets(sigma, l)
        Y[l] = coef[:, off:off + w]
        off += w
    res = y - Phi @ coef.T
    return RegressionResult(MomentSeries(kappa, Y=Y), cond, int(v.shape[0]),
                            float(np.sqrt(np.mean(res ** 2))))


def export_csv(path, full: Trajectory, reduced: Trajectory | None = None) -> None:
    """Columns ``t, v.., y.., y_reduced..`` (first batch member only)."""
    def first(a):
        return a[..., 0] if a.ndim == 3 else a

    v, y = first(full.v), first(full.y)
    yr = first(reduced.y) if reduced is not None else np.zeros((len(full.t), 0))
    header = (["t"] + [f"v{k + 1}" for k in range(v.shape[1])] + [f"y{k + 1}" for k in range(y.shape[1])]
              + [f"y_reduced{k + 1}" for k in range(yr.shape[1])])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for k in range(len(full.t)):
            wr.writerow([repr(float(full.t[k]))] + [repr(float(a)) for a in (*v[k], *y[k], *yr[k])])
