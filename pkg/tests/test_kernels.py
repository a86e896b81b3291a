import numpy as np
import pytest

from scipy.integrate import quad

from wnv_nonlocal import Kernel, ParameterError, check_kernel, make_kernel
from wnv_nonlocal.kernels import kernel_mass


def test_tent_values(tent):
    assert tent.density(0.0) == pytest.approx(1.0)
    assert np.all(tent.density(np.array([-1.0, 1.0, 1.5])) == 0.0)
    assert kernel_mass(tent) == pytest.approx(1.0, abs=1e-10)
    assert tent.tail(0.0) == pytest.approx(0.5)


def test_truncated_gaussian_mass():
    kernel = make_kernel("truncated_gaussian", sigma=1.0)

    assert kernel.support_radius == pytest.approx(6.0)
    assert kernel_mass(kernel) == pytest.approx(1.0, abs=1e-11)


@pytest.mark.parametrize("kind, scale", [("tent", 1.0), ("tent", 2.5), ("truncated_gaussian", 0.5)])
def test_tail_matches_quadrature(kind, scale):
    kernel = make_kernel(kind, radius=scale, sigma=scale)
    r = kernel.support_radius

    for z in np.linspace(0, r, 7):
        numeric = quad(lambda s: float(kernel.density(s)), z, r, epsabs=1e-13, limit=200)[0]
        assert abs(numeric - kernel.tail(z)) <= 1e-9


@pytest.mark.parametrize("kernel", [make_kernel("tent", radius=1.0),
                                    make_kernel("truncated_gaussian", sigma=0.3)])
def test_builtin_kernels_pass_checks(kernel):
    assert check_kernel(kernel) == []


def test_box_kernel_is_rejected():
    box = Kernel(lambda x: np.where(np.abs(x) <= 0.5, 1.0, 0.0), 0.5)
    assert "density not continuous" in check_kernel(box)


def test_unnormalised_kernel_is_rejected():
    tent2 = Kernel(lambda x: 2 * np.where(np.abs(x) < 1, 1 - np.abs(x), 0.0), 1.0)
    assert "mass not 1" in check_kernel(tent2)


@pytest.mark.parametrize("kind, kwargs", [("tent", {"radius": 0.0}), ("tent", {}), ("box", {"radius": 1.0})])
def test_make_kernel_errors(kind, kwargs):
    with pytest.raises(ParameterError):
        make_kernel(kind, **kwargs)


def test_kernel_equality():
    assert make_kernel("tent", radius=1) == make_kernel("tent", radius=1.0)
    assert make_kernel("tent", radius=1.0) != make_kernel("tent", radius=2.0)
    assert make_kernel("tent", radius=1.0) != make_kernel("truncated_gaussian", sigma=1.0)
    assert make_kernel("tent", radius=1.0).as_dict() == {"kind": "tent", "radius": 1.0}
