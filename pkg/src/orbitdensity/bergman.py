"""Weighted Bergman spaces on the upper half-plane: reproducing kernels,
the projective weighted slash action on kernels, its cocycle, and the
formal degree computed from the square-integrability integral.

Conventions fixed here and verified by the test suite:

* kernel at z:  k_z(w) = 2^(alpha-2) pi^-1 (alpha-1) i^alpha (w - conj z)^-alpha,
  which is anti-holomorphic in z and positive on the diagonal;
* all complex powers use the principal branch, and i^alpha = exp(i pi alpha / 2);
* the cocycle is defined operationally by branch tracking at a reference
  point (the value is point-independent because no automorphy factor
  crosses the branch cut while the point stays in the half-plane);
* the Haar measure is y^-2 dx dy times a unit-mass rotation factor, with
  an explicit scale knob so that covolume * formal degree is scale-free.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from . import frames, fuchsian
from .errors import AccuracyError, OracleInconsistencyError, UsageError
from .hyperbolic import MoebiusMap, QuadratureGrid, UpperHalfPoint, integrate_invariant

_BASE_POINT = UpperHalfPoint(0.0, 1.0)


@dataclass(frozen=True)
class Weight:
    """Weight exponent of the Bergman space; must exceed 1."""

    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 1.0):
            raise UsageError(f"weight must satisfy alpha > 1, got {self.alpha}")


@dataclass(frozen=True)
class KernelVector:
    """Reproducing kernel of the weighted space at a half-plane point."""

    z: UpperHalfPoint
    weight: Weight


@dataclass(frozen=True)
class TransformedKernel:
    """Scalar multiple of a kernel, as produced by the group action."""

    base: KernelVector
    coefficient: complex

    def __post_init__(self):
        if self.coefficient == 0:
            raise UsageError("transformed kernel coefficient must be nonzero")

    @classmethod
    def plain(cls, k: KernelVector) -> "TransformedKernel":
        return cls(base=k, coefficient=1.0 + 0.0j)


@dataclass(frozen=True)
class PhaseFunction:
    """Unimodular scalars u(g) with pi(g) k = u(g) k on the stabiliser."""

    members: tuple[MoebiusMap, ...]
    values: tuple[complex, ...]

    def u(self, m: MoebiusMap) -> complex:
        for member, value in zip(self.members, self.values):
            if member.key() == m.key():
                return value
        raise KeyError(f"{m!r} is not in the stabiliser")


def _check_weights(w1: Weight, w2: Weight):
    if w1.alpha != w2.alpha:
        raise UsageError(f"weight mismatch: {w1.alpha} vs {w2.alpha}")


def kernel_eval(k: KernelVector, w: UpperHalfPoint) -> complex:
    """Value of the kernel at w; principal-branch complex powers throughout.

    The argument of w - conj(z) lies in (0, pi), so no branch cut is crossed.
    """
    alpha = k.weight.alpha
    const = 2.0 ** (alpha - 2.0) / math.pi * (alpha - 1.0)
    i_pow = cmath.exp(1j * math.pi * alpha / 2.0)
    return const * i_pow * (w.as_complex - k.z.as_complex.conjugate()) ** (-alpha)


def kernel_norm_sq(k: KernelVector) -> float:
    """||k_z||^2 from the diagonal kernel value, which is real and positive."""
    return float(kernel_eval(k, k.z).real)


def kernel_inner(k1: KernelVector, k2: KernelVector) -> complex:
    """<k_{z1}, k_{z2}> via the reproducing property: the value of k_{z1} at z2."""
    _check_weights(k1.weight, k2.weight)
    return kernel_eval(k1, k2.z)


def sigma_cocycle(x: MoebiusMap, y: MoebiusMap, weight: Weight) -> complex:
    """Unimodular cocycle of the weighted slash action, by branch tracking.

    Computed as j(x^-1, p)^a j(y^-1, x^-1 p)^a / j((xy)^-1, p)^a at the
    reference point p = i; the value is independent of p.
    """
    alpha = weight.alpha
    x_inv = x.inverse()
    y_inv = y.inverse()
    xy_inv = x.compose(y).inverse()
    p1 = x_inv.act(_BASE_POINT)
    num = (x_inv.j_factor(_BASE_POINT) ** alpha) * (y_inv.j_factor(p1) ** alpha)
    return num / (xy_inv.j_factor(_BASE_POINT) ** alpha)


def apply_pi(m: MoebiusMap, k: KernelVector) -> TransformedKernel:
    """Action of the group on a kernel: a unimodular-times-positive scalar
    times the kernel at the moved point."""
    alpha = k.weight.alpha
    coeff = sigma_cocycle(m, m.inverse(), k.weight) * (m.j_factor(k.z) ** alpha).conjugate()
    return TransformedKernel(base=KernelVector(m.act(k.z), k.weight), coefficient=coeff)


def apply_pi_transformed(m: MoebiusMap, t: TransformedKernel) -> TransformedKernel:
    moved = apply_pi(m, t.base)
    return TransformedKernel(base=moved.base, coefficient=t.coefficient * moved.coefficient)


def orbit_inner(t1: TransformedKernel, t2: TransformedKernel) -> complex:
    """Inner product of two scalar multiples of kernels."""
    _check_weights(t1.base.weight, t2.base.weight)
    return t1.coefficient * t2.coefficient.conjugate() * kernel_inner(t1.base, t2.base)


def default_formal_degree_grid(
    weight: Weight,
    base: UpperHalfPoint = _BASE_POINT,
    nx: int = 1536,
    nt: int = 768,
) -> QuadratureGrid:
    """Rectangle grid sized so that truncation is far below the midpoint error.

    The squared matrix coefficient decays like y^(alpha-2) (1+y)^(1-2 alpha)
    after the horizontal integral, so the vertical cut-offs are chosen from
    its small-y and large-y tail exponents. Ranges are translated and
    dilated to the base point, which leaves accuracy invariant.
    """
    alpha = weight.alpha
    y_lo = min(1e-4, 1e-8 ** (1.0 / (alpha - 1.0)))
    y_hi = max(1e3, 1e8 ** (1.0 / alpha))
    half_width = 120.0
    return QuadratureGrid.rectangle_log_y(
        base.x - half_width * base.y,
        base.x + half_width * base.y,
        math.log(y_lo * base.y),
        math.log(y_hi * base.y),
        nx,
        nt,
    )


def formal_degree(
    weight: Weight,
    grid: QuadratureGrid | None = None,
    *,
    base: UpperHalfPoint = _BASE_POINT,
    haar_scale: float = 1.0,
    rel_tol: float | None = 0.01,
    full_output: bool = False,
):
    """Formal degree from the square-integrability integral of a kernel.

    The rotation factor integrates exactly to 1 (the matrix-coefficient
    modulus is constant along it), leaving the half-plane integral of
    [4 y_0 y / ((x - x_0)^2 + (y + y_0)^2)]^alpha against the invariant
    measure, normalised by ||k||^4. The returned degree scales inversely
    with ``haar_scale``. With ``full_output`` a diagnostics dict with a
    Richardson error estimate is returned alongside.
    """
    if not haar_scale > 0.0:
        raise UsageError(f"haar_scale must be positive, got {haar_scale}")
    if grid is None:
        grid = default_formal_degree_grid(weight, base)
    alpha = weight.alpha
    x0, y0 = base.x, base.y

    def integrand(x, y):
        return (4.0 * y0 * y / ((x - x0) ** 2 + (y + y0) ** 2)) ** alpha

    value = integrate_invariant(grid, integrand)
    if not value > 0.0:
        raise AccuracyError("formal degree integral vanished; grid does not cover the mass")
    coarse = integrate_invariant(grid.scaled_resolution(0.5), integrand)
    # midpoint rule is O(h^2): the fine value is ~3x closer than the coarse one
    est_rel_error = abs(value - coarse) / (3.0 * value)
    if rel_tol is not None and est_rel_error > rel_tol:
        raise AccuracyError(
            f"estimated quadrature error {est_rel_error:.3e} exceeds rel_tol {rel_tol:.3e}"
        )
    degree = (1.0 / value) / haar_scale
    if not full_output:
        return degree
    diagnostics = {
        "integral": value,
        "integral_coarse": coarse,
        "est_rel_error": est_rel_error,
        "node_count": grid.node_count,
    }
    return degree, diagnostics


def kernel_tol_for_point_tol(point_tol: float, alpha: float) -> float:
    """Overlap threshold matching a point-distance threshold.

    |<pi(g) k, k>| / ||k||^2 equals cosh(d(gz, z)/2)^-alpha, so distance
    tolerance tau corresponds exactly to overlap deficit
    1 - cosh(tau/2)^-alpha.
    """
    return 1.0 - math.cosh(point_tol / 2.0) ** (-alpha)


def point_tol_for_kernel_tol(tol: float, alpha: float) -> float:
    """Inverse of :func:`kernel_tol_for_point_tol`."""
    return 2.0 * math.acosh((1.0 - tol) ** (-1.0 / alpha))


def projective_stabilizer_kernel(
    ball: fuchsian.GroupBall, k: KernelVector, tol: float = 1e-9
) -> tuple[list[MoebiusMap], PhaseFunction]:
    """Ball elements whose action fixes the kernel up to a scalar.

    Selection is by overlap |<pi(g) k, k>| >= (1 - tol) ||k||^2 and must
    agree exactly, as a set, with the point stabiliser of the kernel's
    centre at the matching distance tolerance.
    """
    if not (0.0 < tol < 1.0):
        raise UsageError(f"tol must lie in (0, 1), got {tol}")
    nsq = kernel_norm_sq(k)
    reference = TransformedKernel.plain(k)
    members = []
    values = []
    for g in ball.elements:
        overlap = orbit_inner(apply_pi_transformed(g, reference), reference) / nsq
        if abs(overlap) >= 1.0 - tol:
            members.append(g)
            values.append(overlap)
    point_tol = min(point_tol_for_kernel_tol(tol, k.weight.alpha), 1e-4)
    point_members = fuchsian.stabilizer_of_point(ball, k.z, tol=point_tol)
    if {g.key() for g in members} != {g.key() for g in point_members}:
        raise OracleInconsistencyError(
            "kernel stabiliser disagrees with the point stabiliser "
            f"({len(members)} vs {len(point_members)} elements)"
        )
    order = sorted(range(len(members)), key=lambda i: (round(members[i].frobenius_sq, 9), members[i].key()))
    members = [members[i] for i in order]
    values = [values[i] for i in order]
    return members, PhaseFunction(members=tuple(members), values=tuple(values))


def orbit_system(maps, kernel: KernelVector) -> frames.OrbitSystem:
    """Orbit of a kernel under a list of group elements, as a frame system."""
    vectors = tuple(apply_pi(m, kernel) for m in maps)
    return frames.OrbitSystem(
        labels=tuple(m.key() for m in maps),
        vectors=vectors,
        inner=orbit_inner,
        ambient_dim=None,
        gen_norm_sq=kernel_norm_sq(kernel),
    )


def probe_kernels(
    kernel: KernelVector, count: int, max_radius: float = 2.0
) -> list[TransformedKernel]:
    """Deterministic probe set: kernels on a golden-angle spiral of geodesic
    polar coordinates around the generator's centre."""
    if count < 1:
        raise UsageError(f"need at least one probe, got {count}")
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    center = kernel.z
    mover = MoebiusMap(math.sqrt(center.y), center.x / math.sqrt(center.y), 0.0, 1.0 / math.sqrt(center.y))
    probes = []
    for p in range(count):
        rho = max_radius * math.sqrt((p + 0.5) / count)
        theta = (p / golden) % 1.0 * math.pi
        rot = MoebiusMap(math.cos(theta), math.sin(theta), -math.sin(theta), math.cos(theta))
        point = mover.compose(rot).act(UpperHalfPoint(0.0, math.exp(rho)))
        probes.append(TransformedKernel.plain(KernelVector(point, kernel.weight)))
    return probes
