"""Acceptance gate: one test per criterion, each reporting PASS/FAIL in the summary."""

import contextlib
import time

import numpy as np
import pytest

from phsdcs.cli import main
from phsdcs.core import Image, psnr
from phsdcs.filters import FilterSpec, daubechies_pair, exp_dd_symbol, factorization_residual, make_pair
from phsdcs.io import write_pgm
from phsdcs.pipeline import RunConfig, reconstruct
from phsdcs.sensing import ComposedOperator, MeasurementVector, measure, measure_adjoint, radial_mask
from phsdcs.solvers import MatrixOperator, SolverConfig, check_row_orthonormal, solve
from phsdcs.transform import analyze, make_handle, synthesize
from synthetic import brute_force_min_l1, spike_instance


@contextlib.contextmanager
def criterion(log, num, summary):
    """Record PASS/FAIL for ``num``; ``summary`` is a dict filled in by the body."""
    try:
        yield summary
    except BaseException:
        log[num] = (False, summary.get("text", ""))
        raise
    log[num] = (True, summary.get("text", ""))


def shifted_products(a, b):
    n = len(a)
    return [sum(a[k] * b[k + 2 * m] for k in range(n) if 0 <= k + 2 * m < n)
            for m in range(-(n // 2) + 1, n // 2)]


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def complex_normal(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_c1_filter_correctness(acceptance_log):
    with criterion(acceptance_log, 1, {}) as s:
        start = time.perf_counter()
        worst = 0.0
        for p in (1, 2, 3):
            for lam in (0.0, 0.25, 0.5, 1.0, 2.0):
                spec = FilterSpec(p, lam)
                pair = make_pair(spec)
                h, g = pair.lowpass, pair.highpass
                center = len(shifted_products(h, h)) // 2
                errs = [abs(v - (i == center)) for i, v in enumerate(shifted_products(h, h))]
                errs += [abs(v - (i == center)) for i, v in enumerate(shifted_products(g, g))]
                errs += [abs(v) for v in shifted_products(h, g)]
                errs.append(factorization_residual(h, exp_dd_symbol(spec)))
                worst = max(worst, max(errs))
        elapsed = time.perf_counter() - start
        s["text"] = f"max identity error {worst:.2e}, {elapsed:.3f}s"
        assert worst <= 1e-8
        assert elapsed < 1.0


def test_c2_daubechies_reduction(acceptance_log):
    with criterion(acceptance_log, 2, {}) as s:
        r3 = np.sqrt(3.0)
        db2 = np.array([1 + r3, 3 + r3, 3 - r3, 1 - r3]) / (4 * np.sqrt(2.0))
        e2 = np.max(np.abs(make_pair(FilterSpec(2, 0.0)).lowpass - db2))
        e1 = np.max(np.abs(make_pair(FilterSpec(1, 0.0)).lowpass - np.sqrt(0.5)))
        s["text"] = f"db2 error {e2:.2e}, Haar error {e1:.2e}"
        assert e2 <= 1e-8
        assert e1 <= 1e-12
        np.testing.assert_array_equal(daubechies_pair(2).lowpass, make_pair(FilterSpec(2, 0.0)).lowpass)


def test_c3_exponential_reproduction(acceptance_log):
    with criterion(acceptance_log, 3, {}) as s:
        sym = exp_dd_symbol(FilterSpec(2, 0.5))
        k = np.arange(-10, 11)
        coarse = np.exp(0.5 * k)
        fine_t = np.arange(-20, 21) / 2.0
        fine = np.zeros(fine_t.size)
        for n in range(fine.size):
            fine[n] = sum(sym.tap(n - 2 * j) * coarse[j] for j in range(k.size)
                          if abs(n - 2 * j) <= sym.half_width)
        inner = slice(sym.half_width, -sym.half_width)  # full stencil support only
        err = np.max(np.abs(fine[inner] - np.exp(0.5 * fine_t[inner])) / np.exp(0.5 * fine_t[inner]))
        s["text"] = f"max relative error {err:.2e}"
        assert err <= 1e-9


def test_c4_transform_bijection_isometry(acceptance_log):
    with criterion(acceptance_log, 4, {}) as s:
        rng = np.random.default_rng(4)
        worst_rt = worst_en = 0.0
        slowest = 0.0
        for n in (8, 32, 64, 256):
            for kind in ("phsd", "daub2d"):
                handle = make_handle(kind, n, n, 2, min(4, int(np.log2(n))))
                for _ in range(50):
                    x = rng.uniform(0, 255, (n, n))
                    start = time.perf_counter()
                    c = analyze(handle, x)
                    back = synthesize(handle, c)
                    if n == 256:
                        slowest = max(slowest, time.perf_counter() - start)
                    worst_rt = max(worst_rt, np.max(np.abs(back - x)) / np.max(np.abs(x)))
                    e = np.sum(np.abs(x) ** 2)
                    worst_en = max(worst_en, abs(np.sum(np.abs(c) ** 2) - e) / e)
        s["text"] = (f"round trip {worst_rt:.2e}, energy {worst_en:.2e}, "
                     f"slowest 256x256 round trip {slowest:.3f}s")
        assert worst_rt <= 1e-8
        assert worst_en <= 1e-8
        assert slowest < 2.0


def test_c5_adjoint_dot_tests(acceptance_log):
    with criterion(acceptance_log, 5, {}) as s:
        rng = np.random.default_rng(5)
        n = 32
        mask = radial_mask(n, 10, n)
        worst = {"phi": 0.0, "theta": 0.0, "A": 0.0}
        probe = 0.0
        for kind in ("phsd", "daub2d"):
            handle = make_handle(kind, n, n, 2, 3)
            op = ComposedOperator(mask, handle)
            for _ in range(100):
                x = complex_normal(rng, (n, n))
                c = complex_normal(rng, (n, n))
                d = abs(np.vdot(analyze(handle, x), c) - np.vdot(x, synthesize(handle, c)))
                worst["phi"] = max(worst["phi"], d / (np.linalg.norm(x) * np.linalg.norm(c)))

                xr = rng.standard_normal((n, n))
                y = complex_normal(rng, mask.m)
                d = abs(np.vdot(y, measure(Image(xr), mask).values)
                        - np.vdot(measure_adjoint(MeasurementVector(y, ""), mask).values, xr))
                worst["theta"] = max(worst["theta"], d / (np.linalg.norm(xr) * np.linalg.norm(y)))

                d = abs(np.vdot(y, op.matvec(c)) - np.vdot(op.rmatvec(y), c))
                worst["A"] = max(worst["A"], d / (np.linalg.norm(c) * np.linalg.norm(y)))
            probe = max(probe, check_row_orthonormal(op, seed=5))
        s["text"] = ", ".join(f"{k} {v:.2e}" for k, v in worst.items()) + f", AA^H probe {probe:.2e}"
        assert max(worst.values()) <= 1e-10
        assert probe <= 1e-8


def test_c6_solver_certificates(acceptance_log):
    with criterion(acceptance_log, 6, {}) as s:
        kkt_worst = res_worst = val_worst = 0.0
        support_ok = True
        for seed in range(20):
            a, beta0 = spike_instance(256, 80, 5, seed)
            op = MatrixOperator(a)
            y = a @ beta0
            las = solve(op, y, SolverConfig("lasso", mu=0.05, iterations=500))
            kkt_worst = max(kkt_worst, las.kkt_residual)
            bp = solve(op, y, SolverConfig("bp", gamma=0.1, iterations=500))
            res_worst = max(res_worst, max(bp.residual_trace) / np.linalg.norm(y))
            beta = np.real_if_close(bp.beta)
            support_ok &= set(np.flatnonzero(np.abs(beta) > 1e-3)) == set(np.flatnonzero(beta0))
            val_worst = max(val_worst, np.max(np.abs(beta - beta0)))
        brute_ok = True
        for seed in range(3):
            a, beta0 = spike_instance(64, 32, 3, 100 + seed)
            y = a @ beta0
            oracle = brute_force_min_l1(a, y, 3)
            bp = solve(MatrixOperator(a), y, SolverConfig("bp", gamma=0.1, iterations=500))
            brute_ok &= bool(np.max(np.abs(oracle - beta0)) <= 1e-9)
            brute_ok &= bool(np.max(np.abs(bp.beta - oracle)) <= 1e-3)
        s["text"] = (f"Lasso KKT {kkt_worst:.2e}, BP residual {res_worst:.2e}, "
                     f"BP value error {val_worst:.2e}, supports exact {support_ok}, "
                     f"brute-force agreement {brute_ok}")
        assert kkt_worst <= 1e-6
        assert res_worst <= 1e-10
        assert support_ok and val_worst <= 1e-3
        assert brute_ok


@pytest.mark.slow
def test_c7_reference_setup(acceptance_log, scene256):
    with criterion(acceptance_log, 7, {}) as s:
        img = Image(scene256)
        mask = radial_mask(256, 50, 100, hermitian=True)
        start = time.perf_counter()
        short = {}
        for basis in ("phsd", "daub2d"):
            for method in ("bp", "lasso"):
                cfg = RunConfig(mu=1.0, gamma=100.0, iterations=10)
                short[basis, method] = reconstruct(img, mask, basis, method, cfg).report
        elapsed = time.perf_counter() - start
        assert all(r.error == "" for r in short.values())

        cfg = RunConfig(mu=1.0, gamma=100.0, iterations=500)
        long = {(b, m): reconstruct(img, mask, b, m, cfg).report.psnr_db
                for b in ("phsd", "daub2d") for m in ("bp", "lasso")}
        gaps = {b: abs(long[b, "bp"] - long[b, "lasso"]) for b in ("phsd", "daub2d")}
        delta = {m: long["phsd", m] - long["daub2d", m] for m in ("bp", "lasso")}
        s["text"] = (f"M={mask.m}, 10-iteration grid {elapsed:.1f}s; 500-iteration PSNR "
                     + ", ".join(f"{b}/{m} {v:.2f}" for (b, m), v in long.items())
                     + f"; BP-Lasso gap phsd {gaps['phsd']:.2f} daub2d {gaps['daub2d']:.2f} dB"
                     + f"; PHSD-Daub delta bp {delta['bp']:+.2f} lasso {delta['lasso']:+.2f} dB")
        print(s["text"])
        assert elapsed < 120
        assert max(gaps.values()) <= 3.0


def band_limited_pyramid(n, k, seed):
    """Conjugate-symmetric K-sparse PHSD pyramid supported on low rows and low |xi|."""
    rng = np.random.default_rng(seed)
    cand = [(i, xi) for i in range(n // 4) for xi in range(1, n // 4 + 1)]
    beta = np.zeros((n, n), complex)
    for j in rng.choice(len(cand), size=k // 2, replace=False):
        i, xi = cand[j]
        v = rng.uniform(50, 150) * np.exp(2j * np.pi * rng.uniform())
        beta[i, xi] = v
        beta[i, (-xi) % n] = np.conj(v)
    return beta


def test_c8_synthetic_recovery(acceptance_log):
    with criterion(acceptance_log, 8, {}) as s:
        n = 64
        handle = make_handle("phsd", n, n, 2, 4)
        mask = radial_mask(n, 20, n, hermitian=True)
        op = ComposedOperator(mask, handle)
        scores = []
        for seed in range(10):
            beta0 = band_limited_pyramid(n, 40, seed)
            assert np.count_nonzero(beta0) == 40
            x = synthesize(handle, beta0)
            assert np.max(np.abs(x.imag)) <= 1e-9 * np.max(np.abs(x))
            truth = Image(x.real)
            res = solve(op, measure(truth, mask), SolverConfig("bp", gamma=10.0, iterations=500))
            scores.append(psnr(truth, Image(synthesize(handle, res.beta.values).real)))
        s["text"] = f"M={mask.m}, min PSNR over 10 seeds {min(scores):.1f} dB"
        assert min(scores) >= 40.0


def test_c9_determinism(acceptance_log, tmp_path, scene256):
    with criterion(acceptance_log, 9, {}) as s:
        pgm = tmp_path / "scene.pgm"
        pgm.write_bytes(write_pgm(Image(scene256[::4, ::4])))
        outs = []
        for run in ("a", "b"):
            out = tmp_path / run
            argv = ["compare", "--input", str(pgm), "--output-dir", str(out), "--lines", "16",
                    "--points-per-line", "64", "--iterations", "20"]
            assert main(argv) == 0
            outs.append(out)
        names = sorted(p.name for p in outs[0].iterdir())
        same = [(outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in names]
        s["text"] = f"{sum(same)}/{len(names)} output files byte-identical"
        assert names == sorted(p.name for p in outs[1].iterdir())
        assert any(f.endswith(".pgm") for f in names) and "compare.csv" in names
        assert all(same)
