"""Energy functionals on paths of transverse potentials over the 3-sphere.

Deforming the contact form by a basic potential changes the transverse area
density by ``u = 1 - box0(phi)``.  Four path functionals probe that family:

* ``functional_L`` — mean of the path velocity against the deformed measure;
  an exact potential exists, so the value depends only on the endpoints.
* ``functional_I`` — endpoint pairing of the potential difference with the
  change in measure; nonnegative.
* ``functional_J`` — path integral with the start measure as reference;
  path-independent, with a closed form via L.
* ``functional_M`` — curvature energy whose integrand weights the velocity
  by the deviation of the deformed transverse scalar curvature from its
  round value; its critical points are the transversally Einstein
  structures, which calibrates the scalar-trace convention.

All quotient integrals run on an ``S2Grid``; the time direction uses
composite Simpson per smooth segment, so piecewise-linear paths are handled
segment by segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from .numdiff import path_derivative
from .quotient import (
    BasicPotential,
    PositivityError,
    S2Grid,
    transverse_scalar_curvature,
)

__all__ = [
    "PathSegment",
    "PotentialPath",
    "linear_path",
    "power_path",
    "piecewise_linear_path",
    "palindrome_path",
    "functional_L",
    "functional_I",
    "functional_J",
    "j_consistency",
    "functional_M",
    "ij_derivative_check",
    "stationarity_residual",
    "CalibrationResult",
    "calibrate_scalar_trace",
    "FunctionalReport",
    "functional_report",
    "ROUND_TRANSVERSE_SCALAR",
]

# transverse scalar curvature of the undeformed structure, n = 1
ROUND_TRANSVERSE_SCALAR = 4.0


@dataclass
class PathSegment:
    """A smooth stretch of a potential path on a uniform time grid."""

    ts: np.ndarray
    phis: list[BasicPotential]
    phidots: list[BasicPotential]

    def __post_init__(self) -> None:
        if len(self.phis) != self.ts.shape[0] or len(self.phidots) != self.ts.shape[0]:
            raise ValueError("segment arrays disagree in length")
        if self.ts.shape[0] < 3:
            raise ValueError("segment needs at least 3 nodes")


@dataclass
class PotentialPath:
    """Piecewise-smooth path of basic potentials."""

    grid: S2Grid
    segments: list[PathSegment]

    @property
    def start(self) -> BasicPotential:
        return self.segments[0].phis[0]

    @property
    def end(self) -> BasicPotential:
        return self.segments[-1].phis[-1]

    @property
    def node_count(self) -> int:
        return sum(seg.ts.shape[0] for seg in self.segments)

    def require_positive(self) -> None:
        for seg in self.segments:
            for t, phi in zip(seg.ts, seg.phis):
                m = phi.min_density()
                if m <= 0.0:
                    raise PositivityError(m, f"at path time t={float(t):.4f}")


def _interpolated_path(
    phi_a: BasicPotential,
    phi_b: BasicPotential,
    weight_fn,
    weight_dot_fn,
    nodes: int,
    t0: float = 0.0,
    t1: float = 1.0,
) -> PathSegment:
    ts = np.linspace(t0, t1, nodes)
    diff = phi_b.minus(phi_a)
    phis = [phi_a.plus(diff.scaled(float(weight_fn(t)))) for t in ts]
    dots = [diff.scaled(float(weight_dot_fn(t))) for t in ts]
    return PathSegment(ts, phis, dots)


def linear_path(
    phi_a: BasicPotential, phi_b: BasicPotential, nodes: int = 33
) -> PotentialPath:
    seg = _interpolated_path(phi_a, phi_b, lambda t: t, lambda t: 1.0, nodes)
    return PotentialPath(phi_a.grid, [seg])


def power_path(
    phi_a: BasicPotential, phi_b: BasicPotential, exponent: float = 2.0, nodes: int = 33
) -> PotentialPath:
    """Reparametrized path t -> phi_a + t^p (phi_b - phi_a), same endpoints."""
    if exponent < 1.0:
        raise ValueError("exponent below 1 makes the velocity singular at t=0")
    seg = _interpolated_path(
        phi_a,
        phi_b,
        lambda t: t**exponent,
        lambda t: exponent * t ** (exponent - 1.0),
        nodes,
    )
    return PotentialPath(phi_a.grid, [seg])


def piecewise_linear_path(
    waypoints: list[BasicPotential], nodes_per_segment: int = 17
) -> PotentialPath:
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    n_seg = len(waypoints) - 1
    segs = []
    for i in range(n_seg):
        t0, t1 = i / n_seg, (i + 1) / n_seg
        seg = _interpolated_path(
            waypoints[i],
            waypoints[i + 1],
            lambda t, a=t0, b=t1: (t - a) / (b - a),
            lambda t, a=t0, b=t1: 1.0 / (b - a),
            nodes_per_segment,
            t0,
            t1,
        )
        segs.append(seg)
    return PotentialPath(waypoints[0].grid, segs)


def palindrome_path(
    phi_a: BasicPotential, phi_b: BasicPotential, nodes_per_segment: int = 17
) -> PotentialPath:
    """Out to phi_b and back to phi_a."""
    return piecewise_linear_path([phi_a, phi_b, phi_a], nodes_per_segment)


def _require_grid(grid: S2Grid) -> None:
    if grid.n_theta < 32 or grid.n_phi < 64:
        raise ValueError("quadrature grid must be at least 32 x 64")


def _require_nodes(path: PotentialPath, minimum: int = 16) -> None:
    if path.node_count < minimum:
        raise ValueError(f"path needs at least {minimum} quadrature nodes")


def _segment_integral(grid: S2Grid, seg: PathSegment, node_fn) -> float:
    vals = np.array([node_fn(phi, dot) for phi, dot in zip(seg.phis, seg.phidots)])
    return float(simpson(vals, x=seg.ts))


def functional_L(path: PotentialPath) -> float:
    """Path integral of the mean velocity against the deformed measure."""
    _require_grid(path.grid)
    _require_nodes(path)
    path.require_positive()
    grid = path.grid
    return sum(
        _segment_integral(
            grid, seg, lambda phi, dot: grid.mean(dot.values * phi.u())
        )
        for seg in path.segments
    )


def functional_I(phi_a: BasicPotential, phi_b: BasicPotential) -> float:
    """Endpoint pairing of the difference with the change of measure."""
    phi_a.require_positive()
    phi_b.require_positive()
    grid = phi_a.grid
    psi = phi_b.values - phi_a.values
    return grid.mean(psi * (phi_a.u() - phi_b.u()))


def _require_endpoints(
    phi_a: BasicPotential, phi_b: BasicPotential, path: PotentialPath
) -> None:
    tol = 1e-12
    if (
        np.max(np.abs(path.start.coeffs - phi_a.coeffs)) > tol
        or np.max(np.abs(path.end.coeffs - phi_b.coeffs)) > tol
    ):
        raise ValueError("path endpoints do not match the given potentials")


def functional_J(
    phi_a: BasicPotential, phi_b: BasicPotential, path: PotentialPath
) -> float:
    """Path integral of the velocity against the start-measure deficit."""
    _require_grid(path.grid)
    _require_nodes(path)
    _require_endpoints(phi_a, phi_b, path)
    path.require_positive()
    grid = path.grid
    u_a = phi_a.u()
    return sum(
        _segment_integral(
            grid, seg, lambda phi, dot: grid.mean(dot.values * (u_a - phi.u()))
        )
        for seg in path.segments
    )


def j_consistency(
    phi_a: BasicPotential, phi_b: BasicPotential, path: PotentialPath
) -> tuple[float, float]:
    """(path-integral value, closed-form value) of J; they must agree.

    The closed form pairs the endpoint difference with the start measure and
    subtracts L.
    """
    value = functional_J(phi_a, phi_b, path)
    grid = path.grid
    closed = grid.mean((phi_b.values - phi_a.values) * phi_a.u()) - functional_L(path)
    return value, closed


def functional_M(path: PotentialPath, calibration: float = 0.5) -> float:
    """Curvature energy: velocity weighted by the scalar-curvature deviation."""
    _require_grid(path.grid)
    _require_nodes(path)
    path.require_positive()
    grid = path.grid

    def node(phi: BasicPotential, dot: BasicPotential) -> float:
        s_t = transverse_scalar_curvature(phi, calibration)
        return -grid.mean(dot.values * (s_t - ROUND_TRANSVERSE_SCALAR) * phi.u())

    return sum(_segment_integral(grid, seg, node) for seg in path.segments)


def ij_derivative_check(path: PotentialPath) -> float:
    """Max residual of the derivative identity for I - J along the path.

    Compares the finite-difference time derivative of
    ``I(start, phi_t) - J(start, phi_t)`` with the deformed-Laplacian pairing
    of phi_t against the velocity.  The start potential must be constant so
    the moving endpoint carries all the content of the comparison.
    """
    if len(path.segments) != 1:
        raise ValueError("derivative check needs a smooth single-segment path")
    seg = path.segments[0]
    if seg.ts.shape[0] < 8:
        raise ValueError("too few t-samples: need at least 8 for the stencil")
    grid = path.grid
    base = path.start
    if float(np.max(np.abs(base.box0()))) > 1e-10:
        raise ValueError("derivative check requires a constant start potential")
    path.require_positive()

    u_a = base.u()
    # running L over the segment (trapezoid prefix sums), then J closed form
    l_nodes = np.array(
        [grid.mean(dot.values * phi.u()) for phi, dot in zip(seg.phis, seg.phidots)]
    )
    l_cum = np.concatenate([[0.0], cumulative_trapezoid(l_nodes, seg.ts)])
    f = np.empty(seg.ts.shape[0])
    rhs = np.empty(seg.ts.shape[0])
    for j, (phi, dot) in enumerate(zip(seg.phis, seg.phidots)):
        psi = phi.values - base.values
        u_t = phi.u()
        i_t = grid.mean(psi * (u_a - u_t))
        j_t = grid.mean(psi * u_a) - l_cum[j]
        f[j] = i_t - j_t
        # deformed Laplacian against the deformed measure; the densities cancel
        rhs[j] = grid.mean(phi.values * (dot.box0() / u_t) * u_t)
    dt = float(seg.ts[1] - seg.ts[0])
    lhs = path_derivative(f, dt)
    return float(np.max(np.abs(lhs - rhs)[2:-2]))


# ---------------------------------------------------------------------------
# Scalar-trace calibration via stationarity at the round structure.
# ---------------------------------------------------------------------------


def stationarity_residual(
    grid: S2Grid, psi: BasicPotential, calibration: float, eps: float = 1e-2
) -> float:
    """|dM(0)(psi)| by central differencing of M along t -> t * psi."""
    fwd = functional_M(linear_path(BasicPotential.zero(grid), psi.scaled(eps)), calibration)
    bwd = functional_M(linear_path(BasicPotential.zero(grid), psi.scaled(-eps)), calibration)
    return float(abs((fwd - bwd) / (2.0 * eps)))


@dataclass
class CalibrationResult:
    constant: float
    residuals: dict[float, float] = field(default_factory=dict)


def calibrate_scalar_trace(
    grid: S2Grid, psi: BasicPotential | None = None
) -> CalibrationResult:
    """Pick the scalar-trace constant that makes the round structure critical.

    Tries the two plausible normalizations of the curvature trace (real trace
    and half of it) against a probe potential with nonzero mean; the round
    structure must be a critical point of the curvature energy, which only
    one constant achieves.
    """
    if psi is None:
        psi = BasicPotential.zero(grid).shifted(0.01).plus(
            _default_probe(grid)
        )
    residuals = {c: stationarity_residual(grid, psi, c) for c in (0.5, 1.0)}
    constant = min(residuals, key=residuals.get)
    return CalibrationResult(constant, residuals)


def _default_probe(grid: S2Grid) -> BasicPotential:
    C = np.zeros((grid.lmax + 1, grid.lmax + 1), dtype=complex)
    C[2, 1] = 0.003 + 0.001j
    C[1, 0] = 0.004
    return BasicPotential(grid, C)


# ---------------------------------------------------------------------------
# Summary report for a single potential.
# ---------------------------------------------------------------------------


@dataclass
class FunctionalReport:
    """All four functionals for the path 0 -> phi, with diagnostics."""

    L: float
    M: float
    I: float
    J: float
    V: float
    path_independence_residual: float
    j_closed_form_residual: float
    chain_slack_lower: float
    chain_slack_upper: float
    calibration: float


def functional_report(
    grid: S2Grid, phi: BasicPotential, volume: float, nodes: int = 33
) -> FunctionalReport:
    """Evaluate the functionals on the straight path from zero to ``phi``.

    The inequality-chain slacks are those of
    ``0 <= I <= (n+1)(I-J) <= nI`` with n = 1.
    """
    zero = BasicPotential.zero(grid)
    straight = linear_path(zero, phi, nodes)
    curved = power_path(zero, phi, 2.0, nodes)
    L = functional_L(straight)
    L2 = functional_L(curved)
    I = functional_I(zero, phi)
    J, J_closed = j_consistency(zero, phi, straight)
    M = functional_M(straight)
    chain_lower = 2.0 * (I - J) - I  # (n+1)(I-J) - I >= 0
    chain_upper = I - 2.0 * (I - J)  # n I - (n+1)(I-J) >= 0
    return FunctionalReport(
        L=L,
        M=M,
        I=I,
        J=J,
        V=volume,
        path_independence_residual=abs(L - L2),
        j_closed_form_residual=abs(J - J_closed),
        chain_slack_lower=chain_lower,
        chain_slack_upper=chain_upper,
        calibration=0.5,
    )
