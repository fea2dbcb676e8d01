"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible with ``pytest -s`` or in the
captured output). Criteria 1 and 2 share a single exhaustive scan run.
"""

import contextlib
import json
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from orbitdensity import bergman, cli, finite_gabor, fuchsian
from orbitdensity.bergman import KernelVector, Weight
from orbitdensity.hyperbolic import MoebiusMap, UpperHalfPoint, distance

SCAN_SEED = 20240810
POINT_I = UpperHalfPoint(0.0, 1.0)
POINT_RHO = UpperHalfPoint(0.5, math.sqrt(3.0) / 2.0)
POINT_2I = UpperHalfPoint(0.0, 2.0)


@contextlib.contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number}: FAIL - {description}")
        raise
    print(f"ACCEPTANCE {number}: PASS - {description}")


@pytest.fixture(scope="module")
def scan_result():
    start = time.perf_counter()
    report = finite_gabor.exhaustive_scan(6, windows_per_case=50, seed=SCAN_SEED)
    elapsed = time.perf_counter() - start
    return report, elapsed


def test_criterion_1_exhaustive_theorem_verification(scan_result):
    report, elapsed = scan_result
    with criterion(1, "exhaustive density-theorem scan, n <= 6, zero violations"):
        assert report.n_max == 6 and report.windows_per_case == 50
        assert report.total_cases > 0
        assert len(report.violations) == 0
        for row in report.rows:
            if row["is_frame"]:
                assert row["n"] * row["stab_order"] <= row["subgroup_order"]
                assert row["verdict_i"] == "pass"
            if row["is_riesz"]:
                assert row["n"] * row["stab_order"] >= row["subgroup_order"]
                assert row["verdict_ii"] == "pass"
        assert elapsed <= 300.0


def test_criterion_2_proof_identity_suite(scan_result):
    report, _ = scan_result
    with criterion(2, "proof identities exact on every scan case"):
        riesz_cases = 0
        for row in report.rows:
            assert row["s_relation_residual"] <= 1e-10
            assert row["parseval_deviation"] <= 1e-10
            if row["is_riesz"]:
                riesz_cases += 1
                assert row["biorth_deviation"] is not None
                assert row["biorth_deviation"] <= 1e-10
            assert row["sandwich_lower_slack"] >= -1e-9
            assert row["sandwich_upper_slack"] >= -1e-9
        assert riesz_cases > 0


def test_criterion_3_discrete_orthogonality_relations():
    with criterion(3, "discrete orthogonality relations, 100 random pairs per n <= 8"):
        for n in range(2, 9):
            rng = np.random.default_rng(np.random.SeedSequence(SCAN_SEED, spawn_key=(n,)))
            shifts = [
                finite_gabor.pi_shift_matrix(a, b, n)
                for a in range(n)
                for b in range(n)
            ]
            for _ in range(100):
                f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                total = sum(abs(np.vdot(M @ g, f)) ** 2 for M in shifts)
                target = n * float(np.vdot(f, f).real) * float(np.vdot(g, g).real)
                assert abs(total - target) <= 1e-10 * target


def test_criterion_4_bergman_kernel_oracle():
    with criterion(4, "kernel correlation identity, diagonal positivity, unitarity"):
        rng = np.random.default_rng(SCAN_SEED + 4)

        def rand_point():
            return UpperHalfPoint(
                float(rng.uniform(-5.0, 5.0)), float(math.exp(rng.uniform(-2.3, 2.3)))
            )

        def rand_map():
            x = float(rng.uniform(-3.0, 3.0))
            s = float(rng.uniform(-1.5, 1.5))
            th = float(rng.uniform(0.0, math.pi))
            return (
                MoebiusMap(1.0, x, 0.0, 1.0)
                .compose(MoebiusMap(math.exp(s / 2.0), 0.0, 0.0, math.exp(-s / 2.0)))
                .compose(MoebiusMap(math.cos(th), math.sin(th), -math.sin(th), math.cos(th)))
            )

        for alpha in (2.0, 3.0, 4.5):
            w = Weight(alpha)
            for _ in range(1000):
                z, u = rand_point(), rand_point()
                k1, k2 = KernelVector(z, w), KernelVector(u, w)
                n1 = bergman.kernel_eval(k1, z)
                assert n1.real > 0.0
                lhs = abs(bergman.kernel_inner(k1, k2)) ** 2 / (
                    bergman.kernel_norm_sq(k1) * bergman.kernel_norm_sq(k2)
                )
                rhs = math.cosh(distance(z, u) / 2.0) ** (-2.0 * alpha)
                assert abs(lhs - rhs) <= 1e-10
            for _ in range(300):
                k = KernelVector(rand_point(), w)
                t = bergman.apply_pi(rand_map(), k)
                lhs = abs(t.coefficient) ** 2 * bergman.kernel_norm_sq(t.base)
                rhs = bergman.kernel_norm_sq(k)
                assert abs(lhs - rhs) <= 1e-10 * rhs


def test_criterion_5_formal_degree():
    with criterion(5, "formal degree within 1% with mesh-halving refinement study"):
        for alpha in (2.0, 3.0, 4.0, 6.0):
            w = Weight(alpha)
            oracle = quad(
                lambda y: y ** (alpha - 2.0)
                * (1.0 + y) ** (1.0 - 2.0 * alpha)
                * quad(lambda s: (1.0 + s * s) ** (-alpha), -np.inf, np.inf)[0],
                0.0,
                np.inf,
            )[0]
            oracle = 1.0 / (2.0 ** (2.0 * alpha) * oracle)
            assert abs(oracle - (alpha - 1.0) / (4.0 * math.pi)) <= 1e-8 * oracle
            start = time.perf_counter()
            value = bergman.formal_degree(w)
            assert abs(value - oracle) <= 0.01 * oracle
            errors = []
            for nx, nt in ((96, 48), (192, 96), (384, 192)):
                grid = bergman.default_formal_degree_grid(w, nx=nx, nt=nt)
                coarse = bergman.formal_degree(w, grid, rel_tol=None)
                errors.append(abs(coarse - oracle))
            assert errors[2] < errors[1] < errors[0]
            assert time.perf_counter() - start <= 60.0


def test_criterion_6_covolume_and_haar_invariance():
    with criterion(6, "modular covolume within 1e-4 and Haar-scale invariance"):
        oracle, _ = quad(lambda x: 1.0 / math.sqrt(1.0 - x * x), -0.5, 0.5)
        assert abs(oracle - math.pi / 3.0) <= 1e-10
        vol = fuchsian.covolume_psl2z()
        assert abs(vol - oracle) <= 1e-4 * oracle
        w = Weight(2.0)
        products = []
        for c in (1.0 / 3.0, 1.0, 7.0):
            vol_c = fuchsian.covolume_psl2z(haar_scale=c)
            deg_c = bergman.formal_degree(w, haar_scale=c)
            products.append(vol_c * deg_c)
        for p in products[1:]:
            assert abs(p - products[0]) <= 1e-12 * products[0]


def test_criterion_7_stabilizer_orders_both_paths():
    with criterion(7, "stabiliser orders (2, 3, 1) via point and kernel paths, bounds 2..10"):
        w = Weight(2.0)
        expected = [(POINT_I, 2), (POINT_RHO, 3), (POINT_2I, 1)]
        for bound in range(2, 11):
            ball = fuchsian.ball_enumerate(fuchsian.psl2z(), float(bound))
            for z, order in expected:
                point_members = fuchsian.stabilizer_of_point(ball, z)
                kernel_members, phases = bergman.projective_stabilizer_kernel(
                    ball, KernelVector(z, w)
                )
                assert len(point_members) == order
                assert len(kernel_members) == order
                assert {m.key() for m in point_members} == {
                    m.key() for m in kernel_members
                }
                for u in phases.values:
                    assert abs(abs(u) - 1.0) <= 1e-10


def _parse_trace(text: str):
    return [float(part) for part in text.split(";")]


def test_criterion_8_bergman_density_report(capsys):
    with criterion(8, "density report: product 1/12, consistency, S-relation, monotone traces"):
        code = cli.main(
            [
                "bergman-density",
                "--lattice",
                "psl2z",
                "--alpha",
                "2",
                "--z",
                "i",
                "--ball",
                "6",
                "--probes",
                "40",
                "--format",
                "json",
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        records = [json.loads(line) for line in out.strip().splitlines()]
        reports = [r for r in records if r["type"] == "frame_report"]
        summary = records[-1]
        assert len(reports) == 3
        assert summary["stab_order"] == 2
        assert abs(summary["density_product"] - 1.0 / 12.0) <= 0.02 * (1.0 / 12.0)
        assert summary["density_product"] <= summary["density_bound"]
        assert summary["verdict_i_pass"] is True
        assert summary["verdict_consistency"] == "pass"
        final = reports[-1]
        assert final["diag_s_relation_residual"] <= 1e-8
        assert final["diag_probe_count"] == 40
        riesz_min = _parse_trace(final["diag_riesz_trace_min"])
        riesz_max = _parse_trace(final["diag_riesz_trace_max"])
        probe_min = _parse_trace(final["diag_probe_trace_min"])
        probe_max = _parse_trace(final["diag_probe_trace_max"])
        assert len(riesz_min) == 3
        for a, b in zip(riesz_min, riesz_min[1:]):
            assert b <= a * (1.0 + 1e-9)
        for a, b in zip(riesz_max, riesz_max[1:]):
            assert b >= a * (1.0 - 1e-9)
        for a, b in zip(probe_min, probe_min[1:]):
            assert b >= a - 1e-9 * max(probe_max)
        for a, b in zip(probe_max, probe_max[1:]):
            assert b >= a * (1.0 - 1e-9)


def test_criterion_9_ball_enumeration_matches_oracle():
    with criterion(9, "breadth-first balls equal the integer oracle at sqrt(2), 2, 5, 10"):
        spec = fuchsian.psl2z()
        for bound in (math.sqrt(2.0), 2.0, 5.0, 10.0):
            bfs = fuchsian.ball_enumerate(spec, bound)
            oracle = fuchsian.brute_force_integer_ball(bound)
            assert bfs.key_set() == oracle.key_set()
            assert bfs.closure_certified
