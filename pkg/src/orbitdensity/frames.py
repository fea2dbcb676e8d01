"""Frame analysis for indexed vector systems with an inner-product oracle.

A system is a list of opaque vector objects plus a sesquilinear oracle
(linear in the first argument). Finite systems additionally carry explicit
numpy vectors, which unlocks frame-operator computations; infinite systems
(Bergman truncations) are analysed through Gram matrices and probe
subspaces only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import linalg
from .errors import (
    DimensionError,
    NotRieszError,
    OracleInconsistencyError,
    ResourceLimitError,
    TheoremViolationError,
    UsageError,
)

GRAM_SIZE_CAP = 4096

SCHEMA_VERSION = "1"


def vector_inner(v, w) -> complex:
    """<v, w> on numpy vectors, linear in the first argument."""
    return complex(np.vdot(w, v))


@dataclass(frozen=True)
class OrbitSystem:
    """Indexed vector system with an inner-product oracle.

    ``ambient_dim`` is the dimension of the surrounding space for systems
    of explicit numpy vectors and ``None`` for truncations of
    infinite-dimensional systems. ``gen_norm_sq`` is ||g||^2 of the
    generating vector.
    """

    labels: tuple
    vectors: tuple
    inner: Callable
    ambient_dim: int | None
    gen_norm_sq: float

    def __post_init__(self):
        if len(self.labels) != len(self.vectors):
            raise UsageError("labels and vectors must have equal length")
        if not self.gen_norm_sq > 0.0:
            raise UsageError("generator norm must be positive")

    @classmethod
    def from_vectors(cls, vectors, labels=None, gen_norm_sq=None) -> "OrbitSystem":
        vecs = tuple(np.asarray(v, dtype=complex) for v in vectors)
        if not vecs:
            raise UsageError("system needs at least one vector")
        dim = vecs[0].size
        if any(v.ndim != 1 or v.size != dim for v in vecs):
            raise DimensionError("all vectors must be 1-d of equal length")
        if labels is None:
            labels = tuple(range(len(vecs)))
        if gen_norm_sq is None:
            gen_norm_sq = float(np.vdot(vecs[0], vecs[0]).real)
        return cls(
            labels=tuple(labels),
            vectors=vecs,
            inner=vector_inner,
            ambient_dim=dim,
            gen_norm_sq=gen_norm_sq,
        )

    def __len__(self):
        return len(self.vectors)


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian PSD matrix of pairwise inner products, with labels."""

    matrix: np.ndarray
    labels: tuple


def gram(system: OrbitSystem, rel_tol: float = linalg.DEFAULT_REL_TOL) -> GramMatrix:
    """Assemble and validate the Gram matrix of a system.

    The oracle must be Hermitian to 1e-12 relative and the symmetrized
    matrix PSD at ``rel_tol``; violations signal an inconsistent oracle.
    """
    m = len(system)
    if m > GRAM_SIZE_CAP:
        raise ResourceLimitError(f"system size {m} exceeds Gram cap {GRAM_SIZE_CAP}")
    G = np.empty((m, m), dtype=complex)
    for i, vi in enumerate(system.vectors):
        for j, vj in enumerate(system.vectors):
            G[i, j] = system.inner(vi, vj)
    scale = float(np.linalg.norm(G))
    herm_dev = float(np.linalg.norm(G - G.conj().T))
    if scale > 0.0 and herm_dev > 1e-12 * scale:
        raise OracleInconsistencyError(
            f"inner-product oracle is not Hermitian: deviation {herm_dev:.3e}"
        )
    H = 0.5 * (G + G.conj().T)
    if m == 0:
        return GramMatrix(matrix=H, labels=system.labels)
    if not np.all(H.diagonal().real > 0.0):
        raise OracleInconsistencyError("Gram diagonal must be strictly positive")
    w = linalg.hermitian_eigen(H, compute_vectors=False).eigenvalues
    lam_max = max(float(w[-1]), 0.0)
    if float(w[0]) < -rel_tol * lam_max:
        raise OracleInconsistencyError(
            f"Gram matrix is not PSD: min eigenvalue {w[0]:.6e} of max {lam_max:.6e}"
        )
    return GramMatrix(matrix=H, labels=system.labels)


def riesz_extremes(G: GramMatrix) -> tuple[float, float]:
    """Extreme Gram eigenvalues: the optimal Riesz bounds of the finite system."""
    w = linalg.hermitian_eigen(G.matrix, compute_vectors=False).eigenvalues
    return float(w[0]), float(w[-1])


def _column_matrix(system: OrbitSystem) -> np.ndarray:
    if system.ambient_dim is None:
        raise UsageError("operation requires explicit finite-dimensional vectors")
    return np.column_stack(system.vectors)


def frame_operator(system: OrbitSystem) -> np.ndarray:
    V = _column_matrix(system)
    return V @ V.conj().T


def frame_extremes_finite(system: OrbitSystem) -> tuple[float, float]:
    """Extreme eigenvalues of the frame operator: optimal frame bounds over
    the ambient space (lower bound 0 when the system does not span)."""
    w = linalg.hermitian_eigen(frame_operator(system), compute_vectors=False).eigenvalues
    return float(w[0]), float(w[-1])


def frame_bounds_probe(
    system: OrbitSystem, probes, rel_tol: float = linalg.DEFAULT_REL_TOL
) -> tuple[float, float, dict]:
    """Frame-bound estimates on the span of a probe family.

    Returns extremes of sum_i |<f, v_i>|^2 / ||f||^2 over f in the probe
    span. The max is a certified lower bound for the true upper frame
    bound of the full system; the min carries opposing biases (subspace
    restriction raises it, index truncation lowers it) and is an estimate
    only.
    """
    probes = list(probes)
    if not probes:
        raise UsageError("need at least one probe")
    inner = system.inner
    m, p = len(system), len(probes)
    A = np.empty((m, p), dtype=complex)
    for i, v in enumerate(system.vectors):
        for j, q in enumerate(probes):
            A[i, j] = inner(q, v)
    D = np.empty((p, p), dtype=complex)
    for i, qi in enumerate(probes):
        for j, qj in enumerate(probes):
            D[i, j] = inner(qj, qi)
    N = A.conj().T @ A
    lo, hi = linalg.generalized_rayleigh_extremes(N, D, rel_tol)
    # the quotient is a sum of squares; tiny negatives are roundoff
    lo = max(lo, 0.0)
    diagnostics = {
        "probe_count": p,
        "index_count": m,
        "probe_rank": linalg.numerical_rank(0.5 * (D + D.conj().T), rel_tol),
    }
    return lo, hi, diagnostics


def check_span_equality(
    full: OrbitSystem, reduced: OrbitSystem, rel_tol: float = linalg.DEFAULT_REL_TOL
) -> bool:
    """Numerical ranks of the full and reduced Gram matrices agree."""
    rank_full = linalg.numerical_rank(gram(full, rel_tol).matrix, rel_tol)
    rank_reduced = linalg.numerical_rank(gram(reduced, rel_tol).matrix, rel_tol)
    return rank_full == rank_reduced


def _compressed_frame_operator(system: OrbitSystem, probes) -> np.ndarray:
    """Frame operator compressed to the probe family: B B* with
    B[p, i] = <v_i, probe_p>."""
    inner = system.inner
    B = np.empty((len(probes), len(system)), dtype=complex)
    for p, q in enumerate(probes):
        for i, v in enumerate(system.vectors):
            B[p, i] = inner(v, q)
    return B @ B.conj().T


def check_S_relation(
    full: OrbitSystem, reduced: OrbitSystem, stab_order: int, probes
) -> float:
    """Relative deviation of S_full from stab_order * S_reduced on the probes.

    Precondition: the full index set is exactly tiled by the reduced one
    times a stabiliser of the given order (sizes must match accordingly).
    """
    if stab_order < 1:
        raise UsageError(f"stabiliser order must be at least 1, got {stab_order}")
    if len(full) != stab_order * len(reduced):
        raise UsageError(
            f"tiling violated: {len(full)} full vectors vs "
            f"{stab_order} x {len(reduced)} reduced"
        )
    M_full = _compressed_frame_operator(full, probes)
    M_red = _compressed_frame_operator(reduced, probes)
    scale = float(np.linalg.norm(M_full))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(M_full - stab_order * M_red)) / scale


@dataclass(frozen=True)
class ParsevalCheck:
    """Outcome of the canonical-Parseval norm identity check."""

    max_deviation: float
    generator_parseval_norm_sq: float | None


def parseval_norm_check(
    full: OrbitSystem,
    reduced: OrbitSystem,
    factorization,
    stab_order: int,
    *,
    generator=None,
    rel_tol: float = linalg.DEFAULT_REL_TOL,
) -> ParsevalCheck:
    """Check ||S_full^-1/2 v_k||^2 = ||S_red^-1/2 v_lambda||^2 / stab_order.

    ``factorization[k]`` gives the reduced index of the k-th full vector.
    When a generator vector is supplied, its canonical-Parseval norm
    square ||S_full^-1/2 g||^2 is returned for calibration against
    covolume * formal degree.
    """
    if len(factorization) != len(full):
        raise UsageError("factorization must assign every full vector")
    S_full = frame_operator(full)
    S_red = frame_operator(reduced)
    R_full = linalg.inverse_sqrt_psd(S_full, rel_tol)
    R_red = linalg.inverse_sqrt_psd(S_red, rel_tol)
    max_dev = 0.0
    for k, v in enumerate(full.vectors):
        lam_idx = factorization[k][0] if isinstance(factorization[k], tuple) else factorization[k]
        lhs = float(np.vdot(R_full @ v, R_full @ v).real)
        rhs = float(np.vdot(R_red @ reduced.vectors[lam_idx], R_red @ reduced.vectors[lam_idx]).real)
        max_dev = max(max_dev, abs(lhs - rhs / stab_order))
    gen_psq = None
    if generator is not None:
        gv = R_full @ np.asarray(generator, dtype=complex)
        gen_psq = float(np.vdot(gv, gv).real)
    return ParsevalCheck(max_deviation=max_dev, generator_parseval_norm_sq=gen_psq)


def biorthogonality_check(
    system: OrbitSystem, rel_tol: float = linalg.DEFAULT_REL_TOL
) -> float:
    """Max deviation of <v_i, S^-1 v_j> from the Kronecker delta.

    Requires a numerically nonsingular Gram matrix (a Riesz system).
    """
    G = gram(system, rel_tol).matrix
    w = linalg.hermitian_eigen(G, compute_vectors=False).eigenvalues
    if float(w[0]) <= rel_tol * max(float(w[-1]), 0.0):
        raise NotRieszError(
            f"Gram matrix is numerically singular (min {w[0]:.3e}, max {w[-1]:.3e})"
        )
    V = _column_matrix(system)
    R = linalg.inverse_sqrt_psd(frame_operator(system), rel_tol)
    K = V.conj().T @ (R @ R) @ V
    return float(np.max(np.abs(K - np.eye(len(system)))))


@dataclass(frozen=True)
class SandwichVerdict:
    """Two-sided check A vol <= ||g||^2 / d <= B vol with slack tolerances."""

    lower_slack: float
    upper_slack: float
    passed_lower: bool
    passed_upper: bool

    @property
    def passed(self) -> bool:
        return self.passed_lower and self.passed_upper

    @property
    def min_slack(self) -> float:
        return min(self.lower_slack, self.upper_slack)


def density_sandwich_check(
    lower: float,
    upper: float,
    covolume: float,
    degree: float,
    gen_norm_sq: float,
    tol: float = 1e-9,
) -> SandwichVerdict:
    """Verify the frame-bound sandwich around ||g||^2 / d_pi."""
    if not (lower <= upper and covolume > 0.0 and degree > 0.0):
        raise UsageError("need lower <= upper, covolume > 0 and degree > 0")
    mid = gen_norm_sq / degree
    scale = max(abs(lower) * covolume, abs(upper) * covolume, abs(mid), 1e-300)
    lower_slack = mid - lower * covolume
    upper_slack = upper * covolume - mid
    return SandwichVerdict(
        lower_slack=lower_slack,
        upper_slack=upper_slack,
        passed_lower=lower_slack >= -tol * scale,
        passed_upper=upper_slack >= -tol * scale,
    )


@dataclass(frozen=True)
class FrameReport:
    """Flat record of one density analysis step."""

    lattice: str
    ball_norm: float
    stab_order: int
    covolume: float
    formal_degree: float
    density_product: float
    density_bound: float
    gen_norm_sq: float
    a_est: float | None
    b_est: float | None
    riesz_min: float | None
    riesz_max: float | None
    frame_decision: bool
    riesz_decision: bool
    verdict_i_applicable: bool
    verdict_i_pass: bool
    verdict_ii_applicable: bool
    verdict_ii_pass: bool
    consistent: bool
    diagnostics: dict = field(default_factory=dict)

    def to_flat_dict(self) -> dict:
        record = {"schema_version": SCHEMA_VERSION}
        for name in (
            "lattice",
            "ball_norm",
            "stab_order",
            "covolume",
            "formal_degree",
            "density_product",
            "density_bound",
            "gen_norm_sq",
            "a_est",
            "b_est",
            "riesz_min",
            "riesz_max",
            "frame_decision",
            "riesz_decision",
            "verdict_i_applicable",
            "verdict_i_pass",
            "verdict_ii_applicable",
            "verdict_ii_pass",
            "consistent",
        ):
            record[name] = getattr(self, name)
        for key, value in sorted(self.diagnostics.items()):
            if isinstance(value, (list, tuple)):
                value = ";".join(repr(float(v)) for v in value)
            record[f"diag_{key}"] = value
        return record

    def to_json(self) -> str:
        return json.dumps(self.to_flat_dict())


def density_verdict(
    *,
    lattice: str,
    ball_norm: float,
    covolume: float,
    formal_degree: float,
    stab_order: int,
    gen_norm_sq: float,
    frame_decision: bool,
    riesz_decision: bool,
    exact_mode: bool,
    a_est: float | None = None,
    b_est: float | None = None,
    riesz_min: float | None = None,
    riesz_max: float | None = None,
    diagnostics: dict | None = None,
    tol: float = 1e-9,
) -> FrameReport:
    """Assemble a frame report and evaluate both density verdicts.

    Verdict (i): a frame forces covolume * degree <= 1 / stabiliser order.
    Verdict (ii): a Riesz transversal orbit forces the reverse inequality.
    A failed applicable verdict is a hard error in exact mode and a
    flagged inconsistency otherwise.
    """
    if stab_order < 1:
        raise UsageError(f"stabiliser order must be at least 1, got {stab_order}")
    if a_est is not None and b_est is not None and a_est > b_est:
        raise UsageError(f"frame estimates out of order: {a_est} > {b_est}")
    product = covolume * formal_degree
    bound = 1.0 / stab_order
    if not product > 0.0:
        raise UsageError("density product must be positive")
    scale = max(product, bound)
    pass_i = product <= bound + tol * scale
    pass_ii = product >= bound - tol * scale
    consistent = (not frame_decision or pass_i) and (not riesz_decision or pass_ii)
    report = FrameReport(
        lattice=lattice,
        ball_norm=ball_norm,
        stab_order=stab_order,
        covolume=covolume,
        formal_degree=formal_degree,
        density_product=product,
        density_bound=bound,
        gen_norm_sq=gen_norm_sq,
        a_est=a_est,
        b_est=b_est,
        riesz_min=riesz_min,
        riesz_max=riesz_max,
        frame_decision=frame_decision,
        riesz_decision=riesz_decision,
        verdict_i_applicable=frame_decision,
        verdict_i_pass=pass_i,
        verdict_ii_applicable=riesz_decision,
        verdict_ii_pass=pass_ii,
        consistent=consistent,
        diagnostics=diagnostics or {},
    )
    if exact_mode and not consistent:
        raise TheoremViolationError(
            f"density verdict failed in exact mode: product {product!r}, bound {bound!r}, "
            f"frame {frame_decision}, riesz {riesz_decision}"
        )
    return report
