import math

import numpy as np
import pytest

from parad import forward, harness, recon2d
from parad.geometry import AcquisitionGeometry, standard_geometry_2d, standard_geometry_3d
from parad.grids_io import Axis, GridArray
from parad.phantom import default_phantom_2d, default_phantom_3d


@pytest.fixture(scope="session")
def phantom2():
    return default_phantom_2d()


@pytest.fixture(scope="session")
def phantom3():
    return default_phantom_3d()


@pytest.fixture(scope="session")
def geom2_open():
    return standard_geometry_2d()


@pytest.fixture(scope="session")
def geom2_full():
    return AcquisitionGeometry(dim=2, mu="full", n_t=257, t_max=2.0, n_psi=512)


@pytest.fixture(scope="session")
def wave2(phantom2, geom2_open):
    """Unreduced 2D data on t in [0, 2], 512 detectors."""
    return forward.synthesize_2d(phantom2, geom2_open)


@pytest.fixture(scope="session")
def reduced2(wave2, geom2_open):
    return forward.reduce(wave2, geom2_open)


@pytest.fixture(scope="session")
def oracle2(phantom2):
    """Exact Radon projections on the 257 x 512 (tau, varpi) grid."""
    tau = np.linspace(-1.0, 1.0, 257)
    varpi = 2 * math.pi * np.arange(512) / 512
    om = np.stack([np.cos(varpi), np.sin(varpi)], axis=-1)
    return np.stack([phantom2.radon(om, t) for t in tau])


@pytest.fixture(scope="session")
def geom3_ci():
    return standard_geometry_3d(n_theta=128, n_phi=101, n_t=129)


@pytest.fixture(scope="session")
def wave3_ci(phantom3, geom3_ci):
    return forward.synthesize_3d(phantom3, geom3_ci)


@pytest.fixture(scope="session")
def oracle3_ci(phantom3, geom3_ci):
    om = harness.sphere_directions(geom3_ci.theta, geom3_ci.cos_phi)
    tau = np.linspace(-1.0, 1.0, geom3_ci.n_t)
    return np.stack([phantom3.radon(om, t) for t in tau])


@pytest.fixture(scope="session")
def sino2(reduced2, geom2_open):
    """Completed Radon sinogram recovered from the open-geometry data."""
    return recon2d.reconstruct_2d(reduced2, geom2_open)


@pytest.fixture(scope="session")
def oracle_sino2(oracle2):
    axes = [Axis.uniform("tau", -1.0, 2.0 / 256), Axis.uniform("varpi", 0.0, 2 * math.pi / 512)]
    return GridArray(data=oracle2, axes=axes, meta={"kind": "radon", "completed": "1"})


_CRITERIA = []


@pytest.fixture
def report():
    """Record one acceptance line: report(n, passed, text)."""
    def add(number, passed, text):
        line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {text}"
        _CRITERIA.append((number, line))
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA, key=lambda item: int(str(item[0]).split()[0])):
        terminalreporter.write_line(line)
