"""Second-variation apparatus along normal sub-Riemannian geodesics.

Transversally parallel frames are transported along a unit-speed geodesic,
trigonometric test variation fields are built on top of them, and the energy
functional's first and second variations are evaluated by quadrature.  The
pointwise identities relating covariant derivatives and curvature terms of
the test fields are checked by computing both sides independently: the left
numerically (finite differences of sampled components plus the Christoffel
correction), the right from closed-form coefficient functions.  The sum of
all second variations collapses to an integral controlled by the transverse
Ricci curvature, which yields the diameter bound certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .core import SasakiModel, ricci_transverse, transverse_curvature
from .numdiff import path_derivative
from .subriemannian import GeodesicPath

__all__ = [
    "ParallelFrame",
    "FrameReport",
    "VariationField",
    "AdmissibilityError",
    "initial_transverse_frame",
    "transport_frame",
    "frame_report",
    "make_variation_field",
    "sine_frame_fields",
    "phi_reeb_field",
    "first_variation",
    "second_variation",
    "VariationIdentityReport",
    "check_variation_identities",
    "SumIdentityReport",
    "second_variation_sum",
    "MyersCertificate",
    "myers_certificate",
]


def _dot(u, v):
    return np.einsum("...i,...i->...", u, v)


# ---------------------------------------------------------------------------
# Transversally parallel frames.
# ---------------------------------------------------------------------------


@dataclass
class ParallelFrame:
    """Horizontal frame vectors transported along a geodesic.

    ``vectors`` has shape (n_vectors, M, ambient); the frame lives on the
    even-index subgrid of the path (step twice the path step) so that the
    transport integrator can use stored midpoint samples.  ``indices`` maps
    subgrid slots to path sample indices.
    """

    path: GeodesicPath
    t: np.ndarray
    vectors: np.ndarray
    indices: np.ndarray

    @property
    def n_vectors(self) -> int:
        return int(self.vectors.shape[0])


@dataclass
class FrameReport:
    transport_residual: float
    orthonormality_residual: float
    f1_max: float
    f2_max: float
    horizontality_max: float

    def passed(self, tol: float = 1e-6) -> bool:
        worst = max(
            self.transport_residual,
            self.orthonormality_residual,
            self.f1_max,
            self.f2_max,
            self.horizontality_max,
        )
        return worst < tol


def _require_unit_speed(model: SasakiModel, path: GeodesicPath) -> None:
    speed2 = model.metric(path.points, path.velocities, path.velocities)
    worst = float(np.max(np.abs(speed2 - 1.0)))
    if worst > 1e-6:
        raise ValueError(f"path is not unit speed (|g(v,v)-1| up to {worst:.3e})")


def initial_transverse_frame(model: SasakiModel, path: GeodesicPath) -> list[np.ndarray]:
    """Orthonormal horizontal start vectors orthogonal to gamma' and Phi gamma'.

    Returns 2(n-1) vectors; the list is empty when n = 1.
    """
    x0 = path.points[0]
    v0 = path.velocities[0]
    pv0 = model.phi(x0, v0)
    kept: list[np.ndarray] = []
    frame = model.orthonormal_frame(x0)
    for i in range(2 * model.n):
        cand = frame[i]
        for b in (v0, pv0, *kept):
            cand = cand - model.metric(x0, cand, b) * b
        norm = float(np.sqrt(max(model.metric(x0, cand, cand), 0.0)))
        if norm > 1e-8:
            kept.append(cand / norm)
        if len(kept) == 2 * (model.n - 1):
            break
    return kept


def transport_frame(
    model: SasakiModel, path: GeodesicPath, X_init: list[np.ndarray]
) -> ParallelFrame:
    """Transport horizontal vectors so they stay perpendicular to the motion.

    The transport rule is ``dX/dt = -Gamma(v, X) - g(X, Phi v) xi``: parallel
    transport plus the Reeb-direction correction that keeps X horizontal
    along a curve whose velocity twists by the Reeb momentum.  Integration is
    RK4 with step ``2 * path.step`` on the even-index subgrid, using the
    stored odd-index samples as midpoints.
    """
    _require_unit_speed(model, path)
    n_samples = path.t.shape[0]
    if n_samples < 5 or n_samples % 2 == 0:
        raise ValueError("path needs an even number of steps for midpoint transport")
    expected = 2 * (model.n - 1)
    if len(X_init) != expected:
        raise ValueError(f"expected {expected} initial frame vectors, got {len(X_init)}")

    indices = np.arange(0, n_samples, 2)
    tt = path.t[indices]
    x0, v0 = path.points[0], path.velocities[0]
    if expected == 0:
        vectors = np.zeros((0, indices.shape[0], model.ambient_dim))
        return ParallelFrame(path, tt, vectors, indices)

    X = np.stack([np.asarray(v, dtype=float) for v in X_init])
    pv0 = model.phi(x0, v0)
    gram = np.array(
        [[float(model.metric(x0, a, b)) for b in X] for a in X]
    )
    if float(np.max(np.abs(gram - np.eye(expected)))) > 1e-8:
        raise ValueError("initial frame is not orthonormal")
    for name, ref in (("Reeb", model.reeb(x0)), ("velocity", v0), ("Phi-velocity", pv0)):
        worst = max(float(np.abs(model.metric(x0, v, ref))) for v in X)
        if worst > 1e-8:
            raise ValueError(f"initial frame not orthogonal to the {name} direction")

    def rhs(j: int, Y: np.ndarray) -> np.ndarray:
        x = path.points[j]
        v = path.velocities[j]
        pv = model.phi(x, v)
        xb = np.broadcast_to(x, Y.shape)
        vb = np.broadcast_to(v, Y.shape)
        corr = model.metric(xb, Y, np.broadcast_to(pv, Y.shape))
        return -model.gamma(xb, vb, Y) - corr[..., None] * model.reeb(x)

    h2 = 2.0 * path.step
    out = np.empty((expected, indices.shape[0], model.ambient_dim))
    out[:, 0] = X
    for slot in range(indices.shape[0] - 1):
        j = int(indices[slot])
        k1 = rhs(j, X)
        k2 = rhs(j + 1, X + 0.5 * h2 * k1)
        k3 = rhs(j + 1, X + 0.5 * h2 * k2)
        k4 = rhs(j + 2, X + h2 * k3)
        X = X + (h2 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        xn = np.broadcast_to(path.points[j + 2], X.shape)
        X = model.tangent_project(xn, X)
        out[:, slot + 1] = X
    return ParallelFrame(path, tt, out, indices)


def _covariant_along(model, points, velocities, values, dt):
    """Covariant derivative of a field sampled along a path."""
    return path_derivative(values, dt) + model.gamma(points, velocities, values)


def frame_report(model: SasakiModel, frame: ParallelFrame) -> FrameReport:
    """Residuals of the transported-frame invariants, maxima over samples."""
    path = frame.path
    if frame.n_vectors == 0:
        return FrameReport(0.0, 0.0, 0.0, 0.0, 0.0)
    pts = path.points[frame.indices]
    vel = path.velocities[frame.indices]
    pvel = model.phi(pts, vel)
    xi = model.reeb(pts)
    dt = 2.0 * path.step

    transport = 0.0
    f1 = f2 = horiz = 0.0
    for i in range(frame.n_vectors):
        Xi = frame.vectors[i]
        DX = _covariant_along(model, pts, vel, Xi, dt)
        resid = DX - model.eta(pts, DX)[..., None] * xi
        mag = np.sqrt(np.maximum(model.metric(pts, resid, resid), 0.0))
        transport = max(transport, float(np.max(mag[2:-2])))
        f1 = max(f1, float(np.max(np.abs(model.metric(pts, Xi, vel)))))
        f2 = max(f2, float(np.max(np.abs(model.metric(pts, Xi, pvel)))))
        horiz = max(horiz, float(np.max(np.abs(model.eta(pts, Xi)))))

    basis = list(frame.vectors) + [vel, pvel]
    ortho = 0.0
    for a in range(len(basis)):
        for b in range(a, len(basis)):
            gab = model.metric(pts, basis[a], basis[b])
            target = 1.0 if a == b else 0.0
            ortho = max(ortho, float(np.max(np.abs(gab - target))))
    return FrameReport(transport, ortho, f1, f2, horiz)


# ---------------------------------------------------------------------------
# Variation fields.
# ---------------------------------------------------------------------------


class AdmissibilityError(ValueError):
    """The variation field does not generate horizontal curves."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(
            f"variation field violates the horizontality constraint "
            f"(residual {residual:.3e})"
        )


@dataclass
class VariationField:
    """A vector field along (a subgrid of) a geodesic, vanishing at endpoints.

    ``indices`` selects the path samples the field lives on; the grid must be
    uniform.  The admissibility residual is
    ``max | d/dt g(V, xi) - 2 g(V, Phi gamma') |`` over interior samples: the
    condition for V to generate horizontal-curve variations.
    """

    path: GeodesicPath
    t: np.ndarray
    values: np.ndarray
    indices: np.ndarray
    admissibility_residual: float
    endpoint_norms: tuple[float, float]
    label: str = ""

    def admissible(self, tol: float = 1e-5) -> bool:
        return (
            self.admissibility_residual < tol
            and max(self.endpoint_norms) < 1e-10
        )


def make_variation_field(
    model: SasakiModel,
    path: GeodesicPath,
    values: np.ndarray,
    indices: np.ndarray | None = None,
    label: str = "",
) -> VariationField:
    if indices is None:
        indices = np.arange(path.t.shape[0])
    t = path.t[indices]
    pts = path.points[indices]
    vel = path.velocities[indices]
    dt = float(t[1] - t[0])
    eta_v = model.eta(pts, values)
    lhs = path_derivative(eta_v, dt)
    rhs = 2.0 * model.metric(pts, values, model.phi(pts, vel))
    residual = float(np.max(np.abs(lhs - rhs)[2:-2]))
    norms = np.sqrt(np.maximum(model.metric(pts, values, values), 0.0))
    return VariationField(
        path, t, values, indices, residual, (float(norms[0]), float(norms[-1])), label
    )


def sine_frame_fields(
    model: SasakiModel, frame: ParallelFrame
) -> list[VariationField]:
    """The fields sin(2 pi t / l) X_i on the frame subgrid."""
    path = frame.path
    length = float(path.t[-1])
    h = np.sin(2.0 * np.pi * frame.t / length)
    fields = []
    for i in range(frame.n_vectors):
        vals = h[:, None] * frame.vectors[i]
        fields.append(
            make_variation_field(model, path, vals, frame.indices, f"sine-frame-{i}")
        )
    return fields


def phi_reeb_field(model: SasakiModel, path: GeodesicPath) -> VariationField:
    """The field h Phi gamma' + k xi with h = sin(2 pi t / l), k' = 2h."""
    length = float(path.t[-1])
    w = 2.0 * np.pi / length
    h = np.sin(w * path.t)
    k = (length / np.pi) * (1.0 - np.cos(w * path.t))
    pvel = model.phi(path.points, path.velocities)
    xi = model.reeb(path.points)
    vals = h[:, None] * pvel + k[:, None] * xi
    return make_variation_field(model, path, vals, None, "phi-reeb")


# ---------------------------------------------------------------------------
# First and second variation of energy.
# ---------------------------------------------------------------------------


def _field_geometry(model, V: VariationField):
    pts = V.path.points[V.indices]
    vel = V.path.velocities[V.indices]
    dt = float(V.t[1] - V.t[0])
    return pts, vel, dt


def first_variation(model: SasakiModel, path: GeodesicPath, V: VariationField) -> float:
    """dE(0) for the variation generated by V; zero for admissible fields.

    Computed as the quadrature of g(nabla_v V, gamma'), which integrates by
    parts onto the geodesic equation.
    """
    pts, vel, dt = _field_geometry(model, V)
    DV = _covariant_along(model, pts, vel, V.values, dt)
    return float(simpson(model.metric(pts, DV, vel), x=V.t))


def second_variation(model: SasakiModel, path: GeodesicPath, V: VariationField) -> float:
    """d2E(0) for an admissible variation field, by composite Simpson.

    The integrand combines the second covariant derivative of V, the
    curvature term R(V, gamma')gamma', and the Reeb-momentum cross terms.
    """
    if V.t.shape[0] < 32:
        raise ValueError("quadrature needs at least 32 samples")
    if not V.admissible():
        raise AdmissibilityError(V.admissibility_residual)
    pts, vel, dt = _field_geometry(model, V)
    a0 = float(np.mean(path.alpha0s))
    W = V.values
    DW = _covariant_along(model, pts, vel, W, dt)
    DDW = _covariant_along(model, pts, vel, DW, dt)
    RVvv = model.curvature_op(pts, W, vel, vel)
    main = model.metric(pts, W, DDW + RVvv)
    cross = model.eta(pts, W) * model.metric(pts, W, vel) + model.metric(
        pts, DW, model.phi(pts, W)
    )
    return float(-simpson(main, x=V.t) + 2.0 * a0 * simpson(cross, x=V.t))


# ---------------------------------------------------------------------------
# Pointwise identity checks for the test fields.
# ---------------------------------------------------------------------------


@dataclass
class VariationIdentityReport:
    """Max interior residuals of the four test-field identities.

    (a) and (b) concern the sine-frame fields and are None when the frame is
    empty (n = 1); (c) and (d) concern the h Phi gamma' + k xi field.
    """

    frame_second_derivative: float | None
    frame_curvature: float | None
    phi_reeb_second_derivative: float
    phi_reeb_curvature: float

    def passed(self, tol: float = 1e-5) -> bool:
        vals = [
            v
            for v in (
                self.frame_second_derivative,
                self.frame_curvature,
                self.phi_reeb_second_derivative,
                self.phi_reeb_curvature,
            )
            if v is not None
        ]
        return max(vals) < tol


def check_variation_identities(
    model: SasakiModel, path: GeodesicPath, frame: ParallelFrame
) -> VariationIdentityReport:
    if frame.path is not path:
        raise ValueError("frame was transported along a different path")
    _require_unit_speed(model, path)
    length = float(path.t[-1])
    w = 2.0 * np.pi / length
    a0 = float(np.mean(path.alpha0s))

    res_a = res_b = None
    if frame.n_vectors > 0:
        pts = path.points[frame.indices]
        vel = path.velocities[frame.indices]
        dt = 2.0 * path.step
        tt = frame.t
        h = np.sin(w * tt)
        hdd = -(w**2) * h
        res_a = 0.0
        res_b = 0.0
        for i in range(frame.n_vectors):
            Vi = h[:, None] * frame.vectors[i]
            DV = _covariant_along(model, pts, vel, Vi, dt)
            DDV = _covariant_along(model, pts, vel, DV, dt)
            lhs_a = model.metric(pts, Vi, DDV)
            rhs_a = h * hdd
            res_a = max(res_a, float(np.max(np.abs(lhs_a - rhs_a)[2:-2])))
            lhs_b = model.metric(pts, Vi, model.curvature_op(pts, Vi, vel, vel))
            Xi = frame.vectors[i]
            rhs_b = h**2 * transverse_curvature(model, pts, Xi, vel, vel, Xi)
            res_b = max(res_b, float(np.max(np.abs(lhs_b - rhs_b)[2:-2])))

    V = phi_reeb_field(model, path)
    pts, vel, dt = _field_geometry(model, V)
    h = np.sin(w * V.t)
    k = (length / np.pi) * (1.0 - np.cos(w * V.t))
    hdd = -(w**2) * h
    W = V.values
    DW = _covariant_along(model, pts, vel, W, dt)
    DDW = _covariant_along(model, pts, vel, DW, dt)
    lhs_c = model.metric(pts, W, DDW)
    rhs_c = h * (hdd + 3.0 * h - (2.0 * a0) ** 2 * h) - k**2
    res_c = float(np.max(np.abs(lhs_c - rhs_c)[2:-2]))
    pvel = model.phi(pts, vel)
    lhs_d = model.metric(pts, W, model.curvature_op(pts, W, vel, vel))
    rhs_d = (
        h**2 * transverse_curvature(model, pts, pvel, vel, vel, pvel)
        - 3.0 * h**2
        + k**2
    )
    res_d = float(np.max(np.abs(lhs_d - rhs_d)[2:-2]))
    return VariationIdentityReport(res_a, res_b, res_c, res_d)


# ---------------------------------------------------------------------------
# Summed second variation and the diameter-bound certificate.
# ---------------------------------------------------------------------------


def _myers_integrand(model: SasakiModel, path: GeodesicPath) -> np.ndarray:
    length = float(path.t[-1])
    w = 2.0 * np.pi / length
    _, ric_t = ricci_transverse(model, path.points, path.velocities, path.velocities)
    return np.sin(w * path.t) ** 2 * (w**2 * (2 * model.n - 1) - ric_t)


@dataclass
class SumIdentityReport:
    """Sum of test-field second variations vs the closed-form integral."""

    total_second_variation: float
    integral: float

    @property
    def residual(self) -> float:
        return abs(self.total_second_variation - self.integral)


def second_variation_sum(
    model: SasakiModel, path: GeodesicPath, frame: ParallelFrame
) -> SumIdentityReport:
    total = sum(
        second_variation(model, path, f) for f in sine_frame_fields(model, frame)
    )
    total += second_variation(model, path, phi_reeb_field(model, path))
    integral = float(simpson(_myers_integrand(model, path), x=path.t))
    return SumIdentityReport(float(total), integral)


@dataclass
class MyersCertificate:
    """Nonnegativity certificate for the summed second variation.

    ``integral`` is the closed-form value of the summed second variation of
    the test fields; on a minimizing geodesic it cannot be negative, which
    forces ``length <= bound`` with ``bound = 2 pi sqrt((2n-1)/tau)``.
    """

    integral: float
    length: float
    bound: float
    tau: float

    @property
    def passed(self) -> bool:
        return self.integral >= -1e-5

    @property
    def length_within_bound(self) -> bool:
        return self.length <= self.bound + 1e-2


def myers_certificate(
    model: SasakiModel, path: GeodesicPath, tau: float, minimizing: bool = False
) -> MyersCertificate:
    if tau <= 0:
        raise ValueError("tau must be a positive lower transverse-Ricci bound")
    if not minimizing:
        raise ValueError(
            "certificate applies to minimizing geodesics only; pass minimizing=True "
            "for a converged shortest connection"
        )
    integral = float(simpson(_myers_integrand(model, path), x=path.t))
    length = float(path.t[-1])
    bound = 2.0 * np.pi * np.sqrt((2 * model.n - 1) / tau)
    return MyersCertificate(integral, length, bound, tau)
