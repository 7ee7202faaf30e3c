import os
import subprocess
import sys

import numpy as np
import pytest

from hypadams import _backend, _core_py

try:
    from hypadams import _core
except ImportError:  # pragma: no cover - depends on the build
    _core = None

needs_compiled = pytest.mark.skipif(_core is None, reason="compiled core not built")


def test_backend_name_consistent():
    assert _backend.NAME in ("python", "cython")
    assert _backend.implementation("python") is _core_py
    with pytest.raises(ValueError):
        _backend.implementation("fortran")


@needs_compiled
def test_spherical_table_agrees():
    lams = np.linspace(0, 24, 49)
    rhos = np.geomspace(1e-4, 40, 60)
    a = _core_py.spherical_table(lams, rhos)
    b = _core.spherical_table(lams, rhos)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


@needs_compiled
def test_bipolar_nodes_agree():
    xs, ws = _core_py.inner_rule()
    t = np.linspace(0.05, 8.0, 21)
    for rho in (0.01, 0.7, 5.0):
        for pa, pb in zip(_core_py.bipolar_nodes(rho, t, xs, ws), _core.bipolar_nodes(rho, t, xs, ws)):
            pa, pb = np.asarray(pa), np.asarray(pb)
            scale = np.maximum(np.abs(pa), 1e-300)
            assert np.max(np.abs(pa - pb) / scale) < 1e-12


@needs_compiled
def test_oneil_bruteforce_agrees():
    assert tuple(_core_py.oneil_bruteforce(4, 3)) == pytest.approx(tuple(_core.oneil_bruteforce(4, 3)))


def test_pure_fallback_selected_by_environment():
    env = dict(os.environ, HYPADAMS_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import hypadams; print(hypadams.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
