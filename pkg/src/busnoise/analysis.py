"""Logical-error-rate statistics, threshold bracketing, scaling fits and teraquop extrapolation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

TARGET_RATE = 1e-12


class AnalysisError(ValueError):
    pass


class OutOfRange(AnalysisError):
    """No threshold bracket inside the scanned range; ``direction`` says where to look."""

    def __init__(self, direction: str, detail: str = ""):
        self.direction = direction
        super().__init__(f"out of range: {direction}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class RateEstimate:
    p_fail: float
    se: float
    upper_bound: float | None = None  # rule-of-three bound when no failures were seen

    @property
    def is_upper_bound(self) -> bool:
        return self.upper_bound is not None


def estimate_rate(failures: int, shots: int) -> RateEstimate:
    """``p = failures / shots`` with binomial standard error."""
    if shots <= 0:
        raise AnalysisError("shots must be positive")
    if not 0 <= failures <= shots:
        raise AnalysisError(f"failures {failures} outside [0, {shots}]")
    p = failures / shots
    se = math.sqrt(p * (1 - p) / shots)
    return RateEstimate(p, se, 3.0 / shots if failures == 0 else None)


@dataclass(frozen=True)
class DataPoint:
    d: int
    cer: float
    ber: float
    shots: int
    failures: int

    def __post_init__(self):
        if self.shots <= 0:
            raise AnalysisError("shots must be positive")

    @property
    def p_fail(self) -> float:
        return self.failures / self.shots

    @property
    def se(self) -> float:
        return estimate_rate(self.failures, self.shots).se

    @property
    def fit_se(self) -> float:
        """Standard error used as a fit weight; rule-of-three substitute for zero failures."""
        return self.se if self.failures > 0 and self.failures < self.shots else 3.0 / self.shots

    def value(self, axis: str) -> float:
        return self.cer if axis == "cer" else self.ber


# ---------------------------------------------------------------------------
# bracketing

def _trend(pts: list[DataPoint]) -> int:
    """+1 growing with distance, -1 suppressing, 0 undecided; tolerant to 2 sigma wiggles."""
    pts = sorted(pts, key=lambda p: p.d)
    diffs = []
    for a, b in zip(pts, pts[1:]):
        sig = math.hypot(a.fit_se, b.fit_se)
        diffs.append((b.p_fail - a.p_fail, sig))
    overall = pts[-1].p_fail - pts[0].p_fail
    if overall < 0 and all(dv <= 2 * s for dv, s in diffs):
        return -1
    if overall > 0 and all(dv >= -2 * s for dv, s in diffs):
        return 1
    return 0


def group_by(points: Iterable[DataPoint], axis: str) -> dict[float, list[DataPoint]]:
    out: dict[float, list[DataPoint]] = {}
    for p in points:
        out.setdefault(p.value(axis), []).append(p)
    return dict(sorted(out.items()))


def bracket_threshold(points: Sequence[DataPoint], axis: str = "ber") -> tuple[float, float]:
    """``(largest suppressing value, smallest growing value)`` along ``axis``.

    Each scanned value needs at least three distances.
    """
    groups = group_by(points, axis)
    if not groups:
        raise AnalysisError("no data points")
    trends = {}
    for v, pts in groups.items():
        if len({p.d for p in pts}) < 3:
            raise AnalysisError(f"{axis}={v}: need at least 3 distances, got {sorted({p.d for p in pts})}")
        trends[v] = _trend(pts)
    growing = [v for v, t in trends.items() if t > 0]
    suppressing = [v for v, t in trends.items() if t < 0]
    if not growing:
        raise OutOfRange(f"increase {axis}", "every scanned value suppresses errors with distance")
    if not suppressing:
        raise OutOfRange(f"decrease {axis}", "every scanned value grows with distance")
    high = min(growing)
    below = [v for v in suppressing if v < high]
    if not below:
        raise OutOfRange(f"decrease {axis}", "no suppressing value below the first growing one")
    return max(below), high


# ---------------------------------------------------------------------------
# finite-size scaling fit

PARAM_NAMES = ("A", "B", "C", "p_th", "nu0")


def ansatz(params: Sequence[float], p, L):
    """Quadratic scaling form ``A + B x + C x^2`` with ``x = (p - p_th) L^(1/nu0)``."""
    a, b, c, pth, nu = params
    x = (np.asarray(p, dtype=float) - pth) * np.power(np.asarray(L, dtype=float), 1.0 / nu)
    return a + b * x + c * x * x


@dataclass
class FitResult:
    A: float
    B: float
    C: float
    p_th: float
    nu0: float
    covariance: np.ndarray
    cost: float
    converged: bool
    message: str = ""
    axis: str = "ber"
    n_points: int = 0
    distances: tuple[int, ...] = ()

    @property
    def params(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.p_th, self.nu0])

    @property
    def sigma(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.sqrt(np.diag(self.covariance))

    @property
    def p_th_err(self) -> float:
        """2-sigma uncertainty of the threshold."""
        return float(2 * self.sigma[3])

    @property
    def nu0_err(self) -> float:
        return float(2 * self.sigma[4])

    def to_dict(self) -> dict:
        return {
            "A": self.A, "B": self.B, "C": self.C, "p_th": self.p_th, "nu0": self.nu0,
            "p_th_err_2sigma": self.p_th_err, "nu0_err_2sigma": self.nu0_err,
            "covariance": self.covariance.tolist(), "cost": self.cost,
            "converged": self.converged, "message": self.message, "axis": self.axis,
            "n_points": self.n_points, "distances": list(self.distances),
        }


def _linear_abc(p, L, y, w, pth, nu):
    x = (p - pth) * np.power(L, 1.0 / nu)
    M = np.stack([np.ones_like(x), x, x * x], axis=1) * w[:, None]
    sol, *_ = np.linalg.lstsq(M, y * w, rcond=None)
    return sol


def fit_threshold(points: Sequence[DataPoint], axis: str = "ber", *, pth_grid: int = 9,
                  nu_starts: Sequence[float] = (1.4, 1.0, 2.0)) -> FitResult:
    """Weighted least-squares fit of the quadratic scaling ansatz (weights 1/se^2).

    Multi-start over a grid of thresholds inside the data range; covariance
    from the Gauss-Newton approximation ``(J^T J)^-1`` at the optimum.
    """
    pts = list(points)
    ds = sorted({p.d for p in pts})
    if len(ds) < 2:
        raise AnalysisError("threshold fit needs at least two distances")
    if len(pts) < 6:
        raise AnalysisError(f"threshold fit needs at least 6 points, got {len(pts)}")
    p = np.array([q.value(axis) for q in pts], dtype=float)
    L = np.array([q.d for q in pts], dtype=float)
    y = np.array([q.p_fail for q in pts], dtype=float)
    se = np.array([q.fit_se for q in pts], dtype=float)
    if np.any(se <= 0):
        raise AnalysisError("all points need a positive standard error")
    w = 1.0 / se
    lo, hi = float(p.min()), float(p.max())
    if hi <= lo:
        raise AnalysisError(f"fit needs more than one {axis} value")
    scale = hi - lo

    def resid(theta):
        a, b, c, t, nu = theta
        return (ansatz((a, b * scale, c * scale * scale, lo + t * scale, nu), p, L) - y) * w

    best = None
    for t0 in np.linspace(0.0, 1.0, pth_grid):
        for nu0 in nu_starts:
            a, b, c = _linear_abc(p, L, y, w, lo + t0 * scale, nu0)
            x0 = np.array([a, b / scale, c / scale ** 2, t0, nu0])
            try:
                r = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
            except (ValueError, FloatingPointError):
                continue
            if not np.all(np.isfinite(r.x)) or r.x[4] <= 0:
                continue
            if best is None or r.cost < best.cost:
                best = r
    if best is None:
        nan = float("nan")
        return FitResult(nan, nan, nan, nan, nan, np.full((5, 5), nan), nan, False,
                         "no start converged", axis, len(pts), tuple(ds))

    a, bs, cs, t, nu = best.x
    theta = np.array([a, bs * scale, cs * scale ** 2, lo + t * scale, nu])
    # Jacobian in the physical parametrisation
    J = best.jac / np.array([1.0, scale, scale ** 2, scale, 1.0])[None, :]
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.full((5, 5), np.nan)
    ok = bool(best.success) and bool(np.all(np.isfinite(cov)))
    msg = best.message
    if not lo <= theta[3] <= hi:
        ok = False
        msg = f"threshold {theta[3]:.6g} outside fitted range [{lo:.6g}, {hi:.6g}]"
    return FitResult(float(theta[0]), float(theta[1]), float(theta[2]), float(theta[3]), float(theta[4]),
                     cov, float(2 * best.cost), ok, msg, axis, len(pts), tuple(ds))


def collapse_residuals(fit: FitResult, points: Sequence[DataPoint]) -> np.ndarray:
    """Normalised residuals of every point against the fitted collapse curve."""
    p = np.array([q.value(fit.axis) for q in points])
    L = np.array([q.d for q in points])
    y = np.array([q.p_fail for q in points])
    se = np.array([q.fit_se for q in points])
    return (y - ansatz(fit.params, p, L)) / se


def synthetic_points(params: Sequence[float], distances: Sequence[int], values: Sequence[float],
                     rel_noise: float, rng: np.random.Generator, axis: str = "ber",
                     shots: int = 10 ** 6) -> list[DataPoint]:
    """Ansatz-generated data with Gaussian relative noise, stored as failure counts.

    The noise level is encoded through ``shots`` so that each point's binomial
    standard error equals ``rel_noise`` times its true rate.
    """
    out = []
    for d in distances:
        for v in values:
            true = float(ansatz(params, v, d))
            n = max(1, int(round((1 - true) / (rel_noise ** 2 * true))))
            obs = true * (1 + rel_noise * rng.standard_normal())
            k = int(round(min(max(obs, 0.0), 1.0) * n))
            cer, ber = (v, 0.0) if axis == "cer" else (0.0, v)
            out.append(DataPoint(int(d), cer, ber, n, k))
    return out


# ---------------------------------------------------------------------------
# teraquop extrapolation

@dataclass
class TeraquopEstimate:
    slope: float
    intercept: float
    slope_bounds: tuple[float, float]  # (steeper, shallower)
    d_star: int
    qubits: int
    qubits_lower: float
    qubits_upper: float
    used_distances: tuple[int, ...]
    excluded_distances: tuple[int, ...] = ()
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope, "intercept": self.intercept,
            "slope_low": self.slope_bounds[0], "slope_high": self.slope_bounds[1],
            "d_star": self.d_star, "qubits": self.qubits,
            "qubits_lower": self.qubits_lower, "qubits_upper": self.qubits_upper,
            "used_distances": list(self.used_distances),
            "excluded_distances": list(self.excluded_distances), "notes": list(self.notes),
        }


def qubit_count(d: int) -> int:
    """Data plus ancilla qubits of one rotated-code patch."""
    return 2 * d * d - 1


def required_distance(slope: float, intercept: float, target: float = TARGET_RATE) -> float:
    """Smallest odd distance whose extrapolated rate is at or below ``target``; inf if never."""
    if slope >= 0:
        return math.inf
    x = (math.log(target) - intercept) / slope
    d = max(3, math.ceil(x - 1e-9))
    if d % 2 == 0:
        d += 1
    return d


def _line_cost(s, d, y, w):
    """Profile cost: best intercept for slope ``s`` and the resulting weighted SSR."""
    a = np.sum(w * w * (y - s * d)) / np.sum(w * w)
    r = (y - a - s * d) * w
    return float(r @ r), float(a)


def teraquop(points: Sequence[DataPoint], target: float = TARGET_RATE) -> TeraquopEstimate:
    """Weighted line fit of ln P_fail against d and extrapolation to ``target``.

    Slope bounds are where the profile cost rises by one, found by bisection.
    """
    pts = sorted(points, key=lambda q: q.d)
    used = [q for q in pts if q.failures > 0]
    excluded = tuple(q.d for q in pts if q.failures == 0)
    notes = [f"d={d} excluded: zero failures" for d in excluded]
    if len({q.d for q in used}) < 3:
        raise AnalysisError("teraquop fit needs at least 3 distances with failures > 0")
    d = np.array([q.d for q in used], dtype=float)
    y = np.log([q.p_fail for q in used])
    w = np.array([q.p_fail / q.se if q.se > 0 else 1.0 for q in used])  # 1 / se(ln p)
    W = np.sum(w * w)
    dm = np.sum(w * w * d) / W
    ym = np.sum(w * w * y) / W
    s_hat = float(np.sum(w * w * (d - dm) * (y - ym)) / np.sum(w * w * (d - dm) ** 2))
    c0, a_hat = _line_cost(s_hat, d, y, w)
    if s_hat >= 0:
        raise AnalysisError(f"not in suppression regime: fitted slope {s_hat:.4g} >= 0")

    def bound(direction: float) -> float:
        step = max(abs(s_hat) * 1e-3, 1e-6)
        far = s_hat + direction * step
        while _line_cost(far, d, y, w)[0] - c0 < 1.0:
            step *= 2
            far = s_hat + direction * step
        near = s_hat
        for _ in range(200):
            mid = 0.5 * (near + far)
            if _line_cost(mid, d, y, w)[0] - c0 < 1.0:
                near = mid
            else:
                far = mid
        return 0.5 * (near + far)

    steep, shallow = bound(-1.0), bound(+1.0)
    dstar = required_distance(s_hat, a_hat, target)
    q = qubit_count(int(dstar))

    def count(s):
        dd = required_distance(s, _line_cost(s, d, y, w)[1], target)
        return math.inf if dd == math.inf else float(qubit_count(int(dd)))

    lower, upper = count(steep), count(shallow)
    lower, upper = min(lower, q), max(upper, q)
    return TeraquopEstimate(s_hat, a_hat, (steep, shallow), int(dstar), q, lower, upper,
                            tuple(int(x) for x in d), excluded, notes)
