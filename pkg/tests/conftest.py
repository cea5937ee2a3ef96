import numpy as np
import pytest

from nearfield.scenario import FieldGrid, PhysicalParams


@pytest.fixture(scope="session")
def phys100():
    return PhysicalParams(frequency=100e9)


@pytest.fixture(scope="session")
def lam100(phys100):
    return phys100.wavelength


def gaussian_line(grid: FieldGrid, w0: float, center: float = 0.0) -> np.ndarray:
    ys = grid.y_coords()
    return np.exp(-((ys - center) / w0) ** 2).astype(np.complex128)


def minimal_scenario_dict(**over):
    d = {
        "physical": {"frequency_ghz": 100.0},
        "grid": {"x_extent_m": 0.3, "y_extent_m": 0.2},
        "tx": [
            {
                "center_m": [0.0, 0.0],
                "length_m": 0.05,
                "wavefront": {"kind": "gaussian", "w0_m": 0.015},
            }
        ],
    }
    d.update(over)
    return d
