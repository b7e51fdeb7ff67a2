"""Time integration, blow-up detection and singular-rate fitting.

Explicit models use classical RK4. Models with a diffusion term use the
integrating-factor (Lawson) RK4 variant: the heat semigroup exp(t Laplace)
is applied exactly in Fourier space, so the step size is never limited by
the stiffness of the Laplacian.

Blow-up protocol: a step is rejected when it produces non-finite values or
raises the sup-norm by more than ``max_growth`` relative to the current
value; the step is retried with dt/2. A run stops with blow-up when the
sup-norm passes ``blowup_threshold`` or dt falls below ``min_dt``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import fft
from scipy.optimize import minimize_scalar

from .geometry import MaskedGrid, PeriodicBox, RectangleDomain
from .models import ModelSpec, linear_symbol, rhs

log = logging.getLogger(__name__)

INTEGRATORS = ("rk4", "ifrk4")


class SimulationError(RuntimeError):
    pass


@dataclass
class SimConfig:
    dt0: float = 1e-2
    t_end: float = 1.0
    integrator: str = "auto"  # rk4, ifrk4, or auto (ifrk4 iff the model is diffusive)
    blowup_threshold: float = 1e6
    min_dt: float = 1e-12
    output_every: int = 10
    dealias: bool = True
    max_growth: float = 0.1
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not self.dt0 > 0:
            raise ValueError(f"dt0 must be positive, got {self.dt0}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not self.blowup_threshold > 1:
            raise ValueError(f"blowup_threshold must exceed 1, got {self.blowup_threshold}")
        if self.integrator not in (*INTEGRATORS, "auto"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")

    def resolve_integrator(self, spec: ModelSpec) -> str:
        if self.integrator == "auto":
            return "ifrk4" if spec.stiff else "rk4"
        return self.integrator


@dataclass
class TimeSeries:
    t: list = field(default_factory=list)
    sup_norm: list = field(default_factory=list)
    l2_norm: list = field(default_factory=list)
    mean: list = field(default_factory=list)

    def append(self, t, sup, l2, mean):
        if self.t and not t > self.t[-1]:
            raise ValueError("time series samples must have strictly increasing t")
        self.t.append(float(t))
        self.sup_norm.append(float(sup))
        self.l2_norm.append(float(l2))
        self.mean.append(float(mean))

    def __len__(self):
        return len(self.t)

    def arrays(self):
        return tuple(np.asarray(a) for a in (self.t, self.sup_norm, self.l2_norm, self.mean))


@dataclass
class BlowupReport:
    detected: bool
    T_hat: float = float("nan")
    exponent_hat: float = float("nan")
    fit_residual: float = float("nan")
    last_t: float = float("nan")
    T_hat_reciprocal: float = float("nan")
    window_size: int = 0
    message: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SimulationResult:
    series: TimeSeries
    snapshots: list  # (t, field) pairs
    report: BlowupReport
    final: np.ndarray
    steps: int
    status: str  # "completed", "blowup", "dt_underflow"


# ----------------------------------------------------------------- norms


def _interior(spec: ModelSpec):
    return spec.domain.interior if isinstance(spec.domain, MaskedGrid) else None


def _cell(spec: ModelSpec) -> float:
    d = spec.domain
    if isinstance(d, PeriodicBox):
        return d.cell_volume
    return d.spacing**2


def field_norms(spec: ModelSpec, w: np.ndarray) -> tuple[float, float, float]:
    """(sup-norm, L2 norm, mean) over the domain's nodes."""
    mask = _interior(spec)
    vals = w[..., mask] if mask is not None else w
    if vals.size == 0:
        return 0.0, 0.0, 0.0
    return (
        float(np.max(np.abs(vals))),
        float(np.sqrt(np.sum(vals**2) * _cell(spec))),
        float(np.mean(vals)),
    )


def spatial_spread(spec: ModelSpec, w: np.ndarray) -> float:
    """Standard deviation of the field over the domain's nodes."""
    mask = _interior(spec)
    return float(np.std(w[..., mask] if mask is not None else w))


# --------------------------------------------------------------- stepping


def _rk4(spec, w, dt, dealias):
    f = lambda v: rhs(spec, v, dealias=dealias)  # noqa: E731
    k1 = f(w)
    k2 = f(w + 0.5 * dt * k1)
    k3 = f(w + 0.5 * dt * k2)
    k4 = f(w + dt * k3)
    return w + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _ifrk4(spec, w, dt, dealias):
    box: PeriodicBox = spec.domain
    L = linear_symbol(spec)
    if L is None:
        L = np.zeros(box.k_squared.shape)
    E = np.exp(dt * L)
    E2 = np.exp(0.5 * dt * L)
    s = box.shape

    def N(W):
        return fft.rfftn(rhs(spec, fft.irfftn(W, s=s), dealias=dealias, include_linear=False))

    W = fft.rfftn(w)
    k1 = N(W)
    k2 = N(E2 * (W + 0.5 * dt * k1))
    k3 = N(E2 * W + 0.5 * dt * k2)
    k4 = N(E * W + dt * E2 * k3)
    W_new = E * W + dt / 6.0 * (E * k1 + 2 * E2 * (k2 + k3) + k4)
    return fft.irfftn(W_new, s=s)


def step(spec: ModelSpec, w: np.ndarray, dt: float, integrator: str = "auto", dealias: bool = True) -> np.ndarray:
    """Advance ``w`` by one step of size ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if integrator == "auto":
        integrator = "ifrk4" if spec.stiff else "rk4"
    if integrator == "ifrk4":
        if not isinstance(spec.domain, PeriodicBox):
            raise ValueError("ifrk4 needs a periodic domain")
        return _ifrk4(spec, w, dt, dealias)
    if integrator == "rk4":
        return _rk4(spec, w, dt, dealias)
    raise ValueError(f"unknown integrator {integrator!r}")


def integrate_fixed(spec: ModelSpec, w0, dt: float, t_end: float, integrator: str = "auto", dealias: bool = True):
    """Fixed-step integration to ``t_end``; the last step is shortened to land on it."""
    w = _initial_state(spec, w0)
    t = 0.0
    while t < t_end - 1e-14 * t_end:
        h = min(dt, t_end - t)
        w = step(spec, w, h, integrator, dealias)
        t += h
    return w


def _initial_state(spec: ModelSpec, w0) -> np.ndarray:
    w0 = np.asarray(w0, dtype=float)
    shape = spec.state_shape
    if w0.ndim == 0 or (spec.n_components > 1 and w0.shape == (spec.n_components,)):
        w0 = np.broadcast_to(w0.reshape(w0.shape + (1,) * (len(shape) - w0.ndim)), shape)
    if w0.shape != shape:
        raise ValueError(f"initial data shape {w0.shape} incompatible with model state {shape}")
    w = np.array(w0, dtype=float)
    mask = _interior(spec)
    if mask is not None:
        w[..., ~mask] = 0.0
    if not np.all(np.isfinite(w)):
        raise ValueError("initial data contains non-finite values")
    return w


def run_simulation(spec: ModelSpec, w0, cfg: SimConfig) -> SimulationResult:
    """Integrate until ``t_end``, blow-up, or step-size underflow."""
    integrator = cfg.resolve_integrator(spec)
    if integrator == "ifrk4" and not isinstance(spec.domain, PeriodicBox):
        raise ValueError("ifrk4 needs a periodic domain")
    w = _initial_state(spec, w0)
    t, dt = 0.0, cfg.dt0
    series = TimeSeries()
    series.append(t, *field_norms(spec, w))
    snapshots = [(t, w.copy())]
    sup = series.sup_norm[-1]
    steps = 0
    status = "completed"

    while t < cfg.t_end * (1 - 1e-14):
        if sup >= cfg.blowup_threshold:
            status = "blowup"
            break
        if steps >= cfg.max_steps:
            raise SimulationError(f"step cap {cfg.max_steps} reached at t={t:.6g}")
        h = min(dt, cfg.t_end - t)
        with np.errstate(over="ignore", invalid="ignore"):
            trial = step(spec, w, h, integrator, cfg.dealias)
        trial_sup = float(np.max(np.abs(trial))) if np.all(np.isfinite(trial)) else np.inf
        if not np.isfinite(trial_sup) or (sup > 0 and trial_sup > (1 + cfg.max_growth) * sup):
            dt = 0.5 * h
            if dt < cfg.min_dt:
                status = "dt_underflow"
                break
            continue
        w, t = trial, t + h
        steps += 1
        series.append(t, *field_norms(spec, w))
        sup = series.sup_norm[-1]
        if steps % cfg.output_every == 0:
            snapshots.append((t, w.copy()))
    else:
        if sup >= cfg.blowup_threshold:
            status = "blowup"

    if snapshots[-1][0] != t:
        snapshots.append((t, w.copy()))

    if status == "completed":
        report = BlowupReport(False, last_t=t, message=f"no blow-up before t_end={cfg.t_end}")
    else:
        report = fit_blowup(series)
        if status == "dt_underflow" and report.detected:
            report.message = "step size underflow while growing; " + report.message
    log.info("run finished: status=%s t=%.6g steps=%d", status, t, steps)
    return SimulationResult(series, snapshots, report, w, steps, status)


# ---------------------------------------------------------------- fitting


def _linear_fit(t, y):
    A = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, y - A @ coef


def fit_blowup(series, min_samples: int = 10) -> BlowupReport:
    """Fit ||w||_inf ~ C / (T - t)^p over the final decade of growth.

    The window is the trailing run of samples within a decade of the peak,
    widened by further decades when it holds fewer than ``min_samples``.

    Two fits are reported. ``T_hat_reciprocal`` assumes p = 1 and fits
    1/||w|| linearly in t. The main estimate leaves p free: for each p the
    curve ||w||^(-1/p) is fitted linearly in t, p is chosen to minimize the
    normalized misfit, and the exponent is then re-estimated by a log-log
    fit against T_hat - t.
    """
    if isinstance(series, TimeSeries):
        t, s = np.asarray(series.t), np.asarray(series.sup_norm)
    else:
        t, s = (np.asarray(a, dtype=float) for a in series)
    if t.size == 0:
        return BlowupReport(False, message="empty series")
    last_t = float(t[-1])
    peak = s.max()
    # trailing run above peak / 10^d, widened a decade at a time while too
    # short: steep laws leave few uniformly spaced samples in the last decade
    decades = 1
    while True:
        window = (s >= peak / 10**decades * (1 - 1e-9)) & (s > 0)
        start = np.nonzero(~window)[0]
        first = start[-1] + 1 if start.size else 0
        if t.size - first >= min_samples or first == 0 or decades >= 6:
            break
        decades += 1
    tw, sw = t[first:], s[first:]
    if tw.size < min_samples:
        return BlowupReport(
            False, last_t=last_t, window_size=int(tw.size),
            message=f"only {tw.size} samples in the growth window (need {min_samples})",
        )
    if s[0] > 0 and peak / s[0] < 10 * (1 - 1e-9):
        return BlowupReport(False, last_t=last_t, window_size=int(tw.size), message="sup-norm grew by less than a decade")

    tau = (tw - tw[0]) / max(tw[-1] - tw[0], 1e-300)

    def misfit(p):
        y = sw ** (-1.0 / p)
        y = y / y[0]
        _, r = _linear_fit(tau, y)
        return float(np.sum(r**2) / np.sum((y - y.mean()) ** 2))

    best = minimize_scalar(misfit, bounds=(0.2, 6.0), method="bounded", options={"xatol": 1e-10})
    p = float(best.x)

    def t_root(p):
        (a, b), _ = _linear_fit(tau, sw ** (-1.0 / p))
        return tw[0] + (-a / b) * (tw[-1] - tw[0])

    T_hat = float(t_root(p))
    T_rec = float(t_root(1.0))
    if not T_hat > last_t:
        return BlowupReport(
            False, T_hat=T_hat, last_t=last_t, T_hat_reciprocal=T_rec, window_size=int(tw.size),
            message="fitted singular time does not lie beyond the last sample",
        )
    (logC, slope), resid = _linear_fit(np.log(T_hat - tw), np.log(sw))
    return BlowupReport(
        detected=True,
        T_hat=T_hat,
        exponent_hat=float(-slope),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
        last_t=last_t,
        T_hat_reciprocal=T_rec,
        window_size=int(tw.size),
        message=f"fit over {tw.size} samples in the final {'decade' if decades == 1 else f'{decades} decades'} of growth",
    )
