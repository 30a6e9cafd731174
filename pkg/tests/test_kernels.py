import math
import os
import subprocess
import sys

import numpy as np
import pytest

from sdtk import _kernels as K

pytestmark = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba backend unavailable")


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def test_spectral_kernels_agree(rng):
    stack = rng.standard_normal((300, 4, 4))
    assert np.allclose(K.numpy_spectral_radii(stack), K.numba_spectral_radii(stack), rtol=1e-12, atol=1e-13)
    assert np.allclose(K.numpy_spectral_norms(stack), K.numba_spectral_norms(stack), rtol=1e-12, atol=1e-13)


def test_expand_level_agrees(rng):
    parents = rng.standard_normal((50, 3, 3))
    members = rng.standard_normal((3, 3, 3))
    scores = rng.uniform(0.5, 3.0, 50)
    a = K.numpy_expand_level(parents, members, scores, 3)
    b = K.numba_expand_level(parents, members, scores, 3)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-13)
    # child k = parent k // r times member k % r
    assert np.allclose(a[0][7], parents[2] @ members[1])


def test_arrival_and_iterate_agree(rng):
    arr = np.arange(500) + rng.integers(0, 6, 500)
    assert (K.numpy_arrival_mask(arr, 499) == K.numba_arrival_mask(arr, 499)).all()
    members = rng.standard_normal((2, 3, 3)) / 2
    idx = rng.integers(0, 2, 200)
    assert np.allclose(K.numpy_iterate(members, idx, np.ones(3)), K.numba_iterate(members, idx, np.ones(3)), rtol=1e-12)


def test_rotation_grid_agrees():
    g = np.linspace(-3, 3, 41)
    a = K.numpy_rotation_grid_radii(math.pi / 60, g, g)
    b = K.numba_rotation_grid_radii(math.pi / 60, g, g)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-13)


SNIPPET = (
    "from sdtk import build_example3_matrices, jsr_bounds, BACKEND;"
    "b = jsr_bounds(build_example3_matrices(2.0, 1.0, 0.4, -1.5), 1e-3);"
    "print(BACKEND, repr(b.lower), repr(b.upper), b.explored_depth)"
)


def test_jsr_bounds_identical_across_backends():
    outs = []
    for disable, everything in (("1", "0"), ("0", "0"), ("0", "1")):
        env = dict(os.environ, SDTK_DISABLE_NUMBA=disable, SDTK_NUMBA_ALL=everything)
        r = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
        outs.append(r.stdout.split())
    assert [o[0] for o in outs] == ["numpy", "numba", "numba-all"]
    lowers = [float(o[1]) for o in outs]
    uppers = [float(o[2]) for o in outs]
    assert outs[0][1:] == outs[1][1:]
    assert max(lowers) - min(lowers) < 1e-12 and max(uppers) - min(uppers) < 1e-12
