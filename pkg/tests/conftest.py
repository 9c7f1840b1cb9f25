"""
Shared fixtures: model parameters for the reference cases
"""

import pytest

from aiii_quench.schemas import ModelParams, NmrParams

XI0 = 1600.0
XI_SO = 400.0


@pytest.fixture
def params_case_i():
    """|m_z| < xi0, winding number 2"""
    return ModelParams(m_z=0.0)


@pytest.fixture
def params_case_ii():
    """xi0 < m_z < 3·xi0, winding number -1"""
    return ModelParams(m_z=1.3 * XI0)


@pytest.fixture
def params_case_iii():
    """-3·xi0 < m_z < -xi0, winding number -1"""
    return ModelParams(m_z=-1.3 * XI0)


@pytest.fixture
def params_trivial():
    """|m_z| > 3·xi0, no band-inversion surface"""
    return ModelParams(m_z=4.0 * XI0)


@pytest.fixture
def nmr():
    """Default two-spin sample"""
    return NmrParams()
