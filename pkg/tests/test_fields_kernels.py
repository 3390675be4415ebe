"""Generator determinism and numba/numpy kernel parity."""

import os
import subprocess
import sys

import numpy as np
import pytest

from fraclap import _kernels
from fraclap.fields import (
    band_limited_field,
    confined_field,
    moment_free_bump,
    sphere_valued_map,
)
from fraclap.grid import Grid, lp_norm


def test_band_limited_field_deterministic_unit_norm():
    g = Grid(1, 512, 1.0)
    a = band_limited_field(g, 42)
    b = band_limited_field(g, 42)
    assert np.array_equal(a.values, b.values)
    assert abs(lp_norm(a, 2) - 1.0) < 1e-12
    assert abs(np.mean(a.values)) < 1e-13


def test_band_limit_respected():
    g = Grid(1, 512, 1.0)
    f = band_limited_field(g, 3, cutoff=32)
    F = np.fft.fft(f.values)
    modes = (np.fft.fftfreq(512) * 512).astype(int)
    assert np.max(np.abs(F[np.abs(modes) > 32])) < 1e-10


def test_confined_field_support():
    g = Grid(1, 1024, 1.0)
    f = confined_field(g, 7, radius=1 / 6)
    assert f.support is not None
    outside = ~f.support.values
    assert np.max(np.abs(f.values[outside])) <= 1e-14 * np.max(np.abs(f.values))


def test_moment_free_bump_moments():
    g = Grid(1, 1024, 1.0)
    f = moment_free_bump(g, radius=1 / 8, order=2)
    x = g.periodic_displacement(g.center)[0]
    m0 = abs(np.sum(f.values) * g.cell_measure)
    m1 = abs(np.sum(x * f.values) * g.cell_measure)
    assert m0 < 1e-10 and m1 < 1e-10


def test_sphere_map_on_sphere():
    g = Grid(1, 256, 1.0)
    comps = sphere_valued_map(g, 3, 5)
    norm_sq = sum(c.values**2 for c in comps)
    assert np.max(np.abs(norm_sq - 1.0)) < 1e-12


# -- kernel parity -------------------------------------------------------------

def _numpy_twin(name):
    return getattr(_kernels, name)


@pytest.mark.skipif(not _kernels.USING_NUMBA, reason="numba disabled in this environment")
def test_pair_sum_parity():
    rng = np.random.default_rng(0)
    coords = rng.random((150, 2))
    comps = rng.standard_normal((150, 3))
    a = _kernels._pair_sum_sq_nb(coords, comps, 2.5, 1.0)
    b = _kernels._pair_sum_sq_np(coords, comps, 2.5, 1.0)
    assert abs(a - b) <= 1e-11 * abs(b)
    va, vb = rng.standard_normal(150), rng.standard_normal(150)
    a = _kernels._pair_sum_bilinear_nb(coords, va, vb, 1.5, 1.0)
    b = _kernels._pair_sum_bilinear_np(coords, va, vb, 1.5, 1.0)
    assert abs(a - b) <= 1e-11 * max(abs(b), 1e-300)


@pytest.mark.skipif(not _kernels.USING_NUMBA, reason="numba disabled in this environment")
def test_second_difference_parity():
    rng = np.random.default_rng(1)
    vals = rng.standard_normal(128)
    kern = np.abs(rng.standard_normal(128))
    kern[0] = 0.0
    idx = np.array([0, 3, 77], dtype=np.int64)
    a = _kernels._second_diff_1d_nb(vals, idx, kern)
    b = _kernels._second_diff_1d_np(vals, idx, kern)
    assert np.max(np.abs(a - b)) <= 1e-11 * np.max(np.abs(b))
    vals2 = rng.standard_normal((32, 32))
    kern2 = np.abs(rng.standard_normal((32, 32)))
    kern2[0, 0] = 0.0
    ii = np.array([0, 5], dtype=np.int64)
    jj = np.array([3, 30], dtype=np.int64)
    a = _kernels._second_diff_2d_nb(vals2, ii, jj, kern2)
    b = _kernels._second_diff_2d_np(vals2, ii, jj, kern2)
    assert np.max(np.abs(a - b)) <= 1e-11 * np.max(np.abs(b))


@pytest.mark.skipif(not _kernels.USING_NUMBA, reason="numba disabled in this environment")
def test_scan_parity():
    rng = np.random.default_rng(2)
    coords = rng.random((200, 1))
    vals = rng.standard_normal(200)
    a = _kernels._ball_scan_nb(coords, vals, 0.2, 1.0)
    b = _kernels._ball_scan_np(coords, vals, 0.2, 1.0)
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) <= 1e-11 * max(np.max(np.abs(y)), 1.0)
    edges = np.array([0.0, 0.1, 0.2, 0.5])
    a = _kernels._modulus_scan_nb(coords, vals, edges, 1.0)
    b = _kernels._modulus_scan_np(coords, vals, edges, 1.0)
    assert np.max(np.abs(a - b)) <= 1e-12


def test_numpy_fallback_env_flag():
    # a subprocess with FRACLAP_NO_NUMBA=1 must run the same computation on
    # the pure-numpy path and agree with the in-process result
    code = (
        "import numpy as np\n"
        "from fraclap import _kernels\n"
        "assert not _kernels.USING_NUMBA\n"
        "rng = np.random.default_rng(0)\n"
        "coords = rng.random((100, 1)); comps = rng.standard_normal((100, 2))\n"
        "print(float(_kernels.pair_sum_sq_diff(coords, comps, 1.5, 1.0)))\n"
    )
    env = dict(os.environ, FRACLAP_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert out.returncode == 0, out.stderr
    rng = np.random.default_rng(0)
    coords = rng.random((100, 1))
    comps = rng.standard_normal((100, 2))
    here = _kernels.pair_sum_sq_diff(coords, comps, 1.5, 1.0)
    assert abs(float(out.stdout.strip()) - here) <= 1e-11 * abs(here)
