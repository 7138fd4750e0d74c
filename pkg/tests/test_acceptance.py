"""Top-level acceptance checks for the whole package.

These nine tests pin the library's headline behaviors: exact integer
registration, subpixel accuracy, the dense multi-motion benchmark where
the bilateral prefilter must beat plain correlation, peak-ratio cleanup
at motion boundaries, the analytic degeneracies of the bilateral
filter, metric identities against brute-force oracles, the end-to-end
pyramid pipeline, file-format round-trips, and byte-level determinism
of the command-line workflow.
"""

import struct
import time

import numpy as np
import pytest
from scipy.ndimage import binary_dilation

from blpcflow.bilateral import (
    BilateralParams,
    _torus_gaussian,
    asymmetric_bilateral_pair,
    reference_bilateral,
    slice_output,
)
from blpcflow.cli import main
from blpcflow.core import FlowField
from blpcflow.errors import (
    FlowFormatError,
    ImageFormatError,
    UnsupportedFormatError,
)
from blpcflow.estimator import default_ratio_threshold, dense_flow, pc_estimate
from blpcflow.fileio import (
    FLO_TAG,
    read_flo,
    read_image,
    write_flo,
    write_image,
)
from blpcflow.framework import FrameworkConfig, run_pipeline
from blpcflow.metrics import (
    DEFAULT_NRMS_EPSILON,
    angular_error,
    endpoint_error,
    motion_compensate,
    mse,
    nrms,
)
from blpcflow.spectral import phase_correlation_surface, subpixel_refine
from blpcflow.synth import render_suite
from conftest import noise_image, ramp_shift


class TestIntegerShiftRecovery:
    """Criterion 1: exact integer registration on broadband noise."""

    def test_200_random_shifts_all_exact(self):
        rng = np.random.default_rng(0)
        t0 = time.perf_counter()
        for trial in range(200):
            img = noise_image((64, 64), cell=1, seed=trial)
            dx, dy = (int(s) for s in rng.integers(-12, 13, size=2))
            shifted = np.roll(img, (dy, dx), axis=(0, 1))
            e = pc_estimate(img, shifted, (32, 32), 64)
            assert (round(e.flow.dx), round(e.flow.dy)) == (dx, dy), (
                f"trial {trial}: got {e.flow}, wanted ({dx}, {dy})"
            )
            # the refinement must not move an exact peak off-integer
            assert abs(e.flow.dx - dx) < 1e-6 and abs(e.flow.dy - dy) < 1e-6
            assert e.peak_value >= 0.99
        assert time.perf_counter() - t0 < 5.0


class TestSubpixelAccuracy:
    """Criterion 2: phase-ramp shifts on a 0.05 px grid."""

    def test_error_bounds_over_the_grid(self):
        img = noise_image((64, 64), cell=1, seed=3)
        grid = np.round(np.arange(-0.45, 0.4501, 0.05), 10)
        errors = []
        for dx in grid:
            for dy in grid:
                shifted = ramp_shift(img, dx, dy)
                v = subpixel_refine(phase_correlation_surface(img, shifted))
                errors.append(abs(v.dx - dx))
                errors.append(abs(v.dy - dy))
        errors = np.asarray(errors)
        assert errors.mean() <= 0.05, f"MAE {errors.mean():.4f}"
        assert errors.max() <= 0.15, f"max {errors.max():.4f}"


@pytest.fixture(scope="module")
def dense_suite_results():
    """Dense per-pixel PC and BLPC fields over the standard 9-scene
    suite at m_w = 32 with wrap padding, shared by the benchmark and the
    boundary-window tests."""
    t0 = time.perf_counter()
    results = []
    for spec, f1, f2, gt in render_suite(seed=0):
        pc_field, pc_rmap = dense_flow(
            f1, f2, method="pc", m_w=32, with_ratio_map=True
        )
        bl_field, bl_rmap = dense_flow(
            f1, f2, method="blpc", m_w=32, with_ratio_map=True
        )
        results.append(
            {
                "name": spec.name,
                "f1": f1,
                "f2": f2,
                "gt": gt,
                "pc": pc_field,
                "blpc": bl_field,
                "pc_ratio": pc_rmap,
                "blpc_ratio": bl_rmap,
            }
        )
    elapsed = time.perf_counter() - t0
    return results, elapsed


class TestMultiMotionSuperiority:
    """Criterion 3: BLPC beats plain PC on the dense suite."""

    def test_benchmark_direction(self, dense_suite_results):
        results, elapsed = dense_suite_results
        pc_ae, pc_aef, pc_mse = [], [], []
        bl_ae, bl_aef, bl_mse = [], [], []
        for r in results:
            for field, aes, aefs, mses in (
                (r["pc"], pc_ae, pc_aef, pc_mse),
                (r["blpc"], bl_ae, bl_aef, bl_mse),
            ):
                _, ae, _ = angular_error(field, r["gt"])
                _, aef, _ = endpoint_error(field, r["gt"])
                aes.append(ae)
                aefs.append(aef)
                mses.append(mse(motion_compensate(r["f2"], field), r["f1"]))
        def mean(xs):
            return float(np.mean(xs))

        assert mean(bl_ae) < mean(pc_ae), (mean(bl_ae), mean(pc_ae))
        assert mean(bl_aef) <= 0.8 * mean(pc_aef), (mean(bl_aef), mean(pc_aef))
        assert mean(bl_mse) <= mean(pc_mse), (mean(bl_mse), mean(pc_mse))

    def test_runtime_budget(self, dense_suite_results):
        _, elapsed = dense_suite_results
        assert elapsed < 600.0, f"suite took {elapsed:.1f} s"


class TestBoundaryPeakRatios:
    """Criterion 4: the prefiltered surface is cleaner (higher top-two
    peak ratio) on the boundary-centered windows that exhibit the
    multiple-peak problem, i.e. those the ratio test actually flags."""

    def test_blpc_ratio_exceeds_pc_ratio(self, dense_suite_results):
        results, _ = dense_suite_results
        t_r = default_ratio_threshold(32)
        wins = 0
        total = 0
        for r in results:
            gt = r["gt"]
            boundary = np.zeros(gt.shape, dtype=bool)
            for sy, sx in ((0, 1), (1, 0), (1, 1), (1, -1)):
                boundary |= np.roll(gt.u, (sy, sx), axis=(0, 1)) != gt.u
                boundary |= np.roll(gt.v, (sy, sx), axis=(0, 1)) != gt.v
            near = binary_dilation(boundary, np.ones((3, 3), bool), iterations=2)
            flagged = near & (r["pc_ratio"] < t_r)
            wins += int(np.count_nonzero(r["blpc_ratio"][flagged] > r["pc_ratio"][flagged]))
            total += int(np.count_nonzero(flagged))
        assert total > 100  # the suite must actually exercise the claim
        frac = wins / total
        assert frac >= 0.90, f"{wins}/{total} = {frac:.4f}"


class TestBilateralDegeneracies:
    """Criterion 5: analytic limits of the asymmetric filter."""

    def test_huge_sigma_r_equals_gaussian_convolution(self):
        params = BilateralParams(4.0, 16.0, sigma_r=1e6)
        w1 = noise_image((32, 32), cell=2, seed=60)
        w2 = noise_image((32, 32), cell=2, seed=61)
        out1, out2 = asymmetric_bilateral_pair(w1, w2, params)
        for frame, sigma, out in ((w1, 4.0, out1), (w2, 16.0, out2)):
            k = _torus_gaussian(sigma, 32, 32)
            blur = np.fft.irfft2(
                np.fft.rfft2(frame) * np.fft.rfft2(k), s=(32, 32)
            ) / np.sum(k)
            assert np.max(np.abs(out - blur)) < 1e-6

    def test_constant_inputs_are_fixed_points(self):
        params = BilateralParams(4.0, 16.0)
        c1 = np.full((32, 32), 93.0)
        c2 = np.full((32, 32), 93.0)
        out1, out2 = asymmetric_bilateral_pair(c1, c2, params)
        assert np.allclose(out1, 93.0, atol=1e-9)
        assert np.allclose(out2, 93.0, atol=1e-9)
        ref = reference_bilateral(c1, params)
        assert np.allclose(ref, 93.0, atol=1e-9)

    def test_slice_matches_reference_at_anchor_pixels(self):
        params = BilateralParams(4.0, 16.0, sigma_r=30.0)
        img = noise_image((32, 32), cell=2, seed=62)
        ref = reference_bilateral(img, params)
        for y, x in ((16, 16), (5, 20), (30, 2)):
            anchor = float(img[y, x])
            out = slice_output(img, anchor, params.sigma_s1, params.sigma_r)
            at = np.isclose(img, anchor)
            assert np.max(np.abs(out[at] - ref[at])) < 1e-6


class TestMetricIdentities:
    """Criterion 6: closed-form values and a brute-force NRMS oracle."""

    def test_zero_error_on_identical_flow(self):
        f = FlowField(np.full((16, 16), 2.0), np.full((16, 16), -1.0))
        _, ae, _ = angular_error(f, f)
        _, aef, _ = endpoint_error(f, f)
        assert ae == pytest.approx(0.0, abs=1e-12)
        assert aef == 0.0

    def test_orthogonal_unit_flows_sixty_degrees(self):
        a = FlowField(np.ones((8, 8)), np.zeros((8, 8)))
        b = FlowField(np.zeros((8, 8)), np.ones((8, 8)))
        _, ae, _ = angular_error(a, b)
        assert abs(ae - 60.0) <= 1e-9

    def test_nrms_brute_force_oracle(self):
        rng = np.random.default_rng(99)
        eps = DEFAULT_NRMS_EPSILON
        assert eps == 1.0
        for _ in range(5):
            comp = rng.uniform(0, 255, size=(16, 16))
            truth = rng.uniform(0, 255, size=(16, 16))
            acc = 0.0
            for y in range(16):
                for x in range(16):
                    gx = 0.5 * (truth[y, min(x + 1, 15)] - truth[y, max(x - 1, 0)])
                    gy = 0.5 * (truth[min(y + 1, 15), x] - truth[max(y - 1, 0), x])
                    acc += (comp[y, x] - truth[y, x]) ** 2 / (gx * gx + gy * gy + eps)
            expected = np.sqrt(acc / 256.0)
            assert abs(nrms(comp, truth) - expected) < 1e-9


class TestFrameworkSanity:
    """Criterion 7: the full pyramid pipeline on a large global shift."""

    def test_global_shift_512(self):
        f1 = noise_image((512, 512), cell=2, seed=7)
        f2 = np.roll(f1, (-4, 6), axis=(0, 1))  # motion (+6, -4)
        cfg = FrameworkConfig()
        field, stats = run_pipeline(f1, f2, cfg)
        ok = np.hypot(field.u - 6.0, field.v + 4.0) <= 0.3
        assert float(np.mean(ok)) >= 0.99, f"only {np.mean(ok):.4%} within 0.3 px"
        for layer in stats.layers:
            assert layer.spectral_estimates <= cfg.t_p

    def test_parallel_matches_serial_bitwise(self):
        f1 = noise_image((128, 128), cell=2, seed=8)
        f2 = np.roll(f1, (-4, 6), axis=(0, 1))
        base = dict(s_u=8, t_p=400)
        serial, _ = run_pipeline(f1, f2, FrameworkConfig(**base, threads=1))
        threaded, _ = run_pipeline(f1, f2, FrameworkConfig(**base, threads=8))
        assert np.array_equal(serial.u, threaded.u)
        assert np.array_equal(serial.v, threaded.v)


class TestFormatRoundTrips:
    """Criterion 8: bit-exact file round-trips and malformed rejection."""

    def test_flo_roundtrip_100_instances(self, tmp_path):
        rng = np.random.default_rng(1)
        for i in range(100):
            h = int(rng.integers(1, 24))
            w = int(rng.integers(1, 24))
            u = rng.uniform(-50, 50, size=(h, w)).astype(np.float32).astype(np.float64)
            v = rng.uniform(-50, 50, size=(h, w)).astype(np.float32).astype(np.float64)
            valid = rng.uniform(size=(h, w)) > 0.1
            u = np.where(valid, u, 0.0)
            v = np.where(valid, v, 0.0)
            p = tmp_path / f"f{i}.flo"
            write_flo(FlowField(u, v, valid), p)
            back = read_flo(p)
            assert np.array_equal(back.u, u)
            assert np.array_equal(back.v, v)
            assert np.array_equal(back.valid, valid)

    def test_pgm_roundtrip_100_instances(self, tmp_path):
        rng = np.random.default_rng(2)
        for i in range(100):
            h = int(rng.integers(1, 24))
            w = int(rng.integers(1, 24))
            img = rng.integers(0, 256, size=(h, w)).astype(np.float64)
            p = tmp_path / f"i{i}.pgm"
            write_image(img, p)
            assert np.array_equal(read_image(p), img)

    PGM_CORPUS = [
        (b"", ImageFormatError),
        (b"P7\n2 2\n255\n\x00\x00\x00\x00", ImageFormatError),
        (b"P5\n-3 2\n255\n\x00\x00", ImageFormatError),
        (b"P5\nab cd\n255\n", ImageFormatError),
        (b"P5\n2 2\n0\n\x00\x00\x00\x00", ImageFormatError),
        (b"P5\n2 2\n65535\n" + b"\x00" * 8, UnsupportedFormatError),
        (b"P5\n4 4\n255\n\x00", ImageFormatError),
        (b"P2\n2 2\n255\n1 2 3\n", ImageFormatError),
        (b"P2\n2 2\n255\n1 2 x 4\n", ImageFormatError),
    ]

    def test_malformed_pgm_corpus(self, tmp_path):
        for i, (payload, err) in enumerate(self.PGM_CORPUS):
            p = tmp_path / f"bad{i}.pgm"
            p.write_bytes(payload)
            with pytest.raises(err):
                read_image(p)

    def test_malformed_flo_corpus(self, tmp_path):
        good = struct.pack("<fii", FLO_TAG, 2, 2) + b"\x00" * 32
        corpus = [
            b"",
            b"\x00" * 11,
            struct.pack("<fii", 1.25, 2, 2) + b"\x00" * 32,
            struct.pack("<fii", FLO_TAG, 0, 2),
            struct.pack("<fii", FLO_TAG, 2, -2),
            good[:-4],
            good + b"\x00" * 4,
        ]
        for i, payload in enumerate(corpus):
            p = tmp_path / f"bad{i}.flo"
            p.write_bytes(payload)
            with pytest.raises(FlowFormatError):
                read_flo(p)


class TestEndToEndDeterminism:
    """Criterion 9: the CLI produces byte-identical artifacts run to run
    (timing column excluded from the benchmark CSV)."""

    def test_synth_byte_identical(self, tmp_path):
        a = tmp_path / "suite_a"
        b = tmp_path / "suite_b"
        assert main(["synth", "--seed", "7", "-o", str(a)]) == 0
        assert main(["synth", "--seed", "7", "-o", str(b)]) == 0
        files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
        assert files_a == files_b and len(files_a) == 27  # 9 scenes x 3 files
        for rel in files_a:
            assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel

    def test_bench_csv_identical_modulo_timing(self, tmp_path):
        # a two-scene subset at a reduced window keeps the double run
        # fast while still exercising both estimators densely
        suite = tmp_path / "suite"
        assert main(["synth", "--seed", "7", "-o", str(suite)]) == 0
        subset = tmp_path / "subset"
        subset.mkdir()
        kept = 0
        for d in sorted(p for p in suite.iterdir() if p.is_dir()):
            if kept == 2:
                break
            (subset / d.name).mkdir()
            for f in d.iterdir():
                (subset / d.name / f.name).write_bytes(f.read_bytes())
            kept += 1

        def run(report):
            code = main(
                ["bench", "--suite", str(subset), "--methods", "pc,blpc",
                 "--m-w", "16", "--report", str(report)]
            )
            assert code == 0
            rows = report.read_text().strip().split("\n")
            header = rows[0].split(",")
            assert header[-1] == "Time"
            return [r.rsplit(",", 1)[0] for r in rows]  # drop timing column

        first = run(tmp_path / "bench1.csv")
        second = run(tmp_path / "bench2.csv")
        assert first == second
