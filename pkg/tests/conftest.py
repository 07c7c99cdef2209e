import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import settings

from src.protocol.schemas import ModelConfig
from src.settings.config import get_settings

settings.register_profile("protocol", max_examples=60, deadline=None)
settings.load_profile("protocol")


@st.composite
def configs(draw, max_register=6, purity=False):
    """
    Конфигурации (n, m, l, ε) с регистром каждого типа не больше max_register
    """
    n = draw(st.integers(min_value=0, max_value=max_register))
    m = draw(st.integers(min_value=0, max_value=max_register))
    l = draw(st.integers(min_value=0, max_value=max_register))
    epsilon = draw(st.floats(min_value=0.0, max_value=1.0))
    control_purity = draw(st.floats(min_value=0.1, max_value=1.0)) if purity else 1.0
    return ModelConfig(n=n, m=m, l=l, epsilon=epsilon, control_purity=control_purity)


@st.composite
def small_configs(draw, max_qubits=6, purity=True):
    """
    Конфигурации, которые помещаются в плотный оракул
    """
    register = draw(st.integers(min_value=0, max_value=max_qubits - 1))
    n = draw(st.integers(min_value=0, max_value=register))
    m = draw(st.integers(min_value=0, max_value=register - n))
    epsilon = draw(st.floats(min_value=0.0, max_value=1.0))
    control_purity = draw(st.floats(min_value=0.1, max_value=1.0)) if purity else 1.0
    return ModelConfig(n=n, m=m, l=register - n - m, epsilon=epsilon, control_purity=control_purity)


omegas = st.floats(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240611))


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """
    Каталог вывода через DQC1_OUTPUT_DIR; кэш настроек сбрасывается
    """
    target = tmp_path / "results"
    monkeypatch.setenv("DQC1_OUTPUT_DIR", str(target))
    get_settings.cache_clear()
    yield target
    get_settings.cache_clear()
