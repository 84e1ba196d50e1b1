import numpy as np
import pytest

from blimp_invert.params import BlimpParams, neutral_extra_weight, replace


def neutral_params(**overrides) -> BlimpParams:
    """Default parameters with the trim mass tuned to exact neutral buoyancy."""
    base = BlimpParams()
    return replace(base, m_w=neutral_extra_weight(base), **overrides)


def haar_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed proper rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, 2] = -q[:, 2]
    return q


def unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260814)
