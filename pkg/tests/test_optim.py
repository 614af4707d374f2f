import numpy as np
import pytest

from src.models.training import OptimizerConfig
from src.npp.optim import Adam, AdamState, adam_step
from src.utils.errors import NonFiniteError


@pytest.fixture
def config():
    return OptimizerConfig(learning_rate=0.01, beta1=0.9, beta2=0.999, eps=1e-8)


class TestAdam:

    def test_first_step(self, config):
        """Testa o passo fechado: Δθ = −lr · 1 / (1 + ε)"""
        params = {'w': np.array([0.5])}
        adam_step(params, {'w': np.array([1.0])}, AdamState(), config)
        assert params['w'][0] == pytest.approx(0.5 - 0.01 / (1 + 1e-8), abs=1e-15)

    def test_zero_gradient_keeps_parameters(self, config):
        params = {'w': np.array([1.0, 2.0])}
        state = AdamState()
        adam_step(params, {'w': np.array([1.0, 1.0])}, state, config)
        before = params['w'].copy()
        m_before = state.m['w'].copy()
        adam_step(params, {'w': np.zeros(2)}, state, config)
        assert np.allclose(state.m['w'], 0.9 * m_before)
        assert not np.array_equal(params['w'], before)  # o momento ainda move
        fresh = {'w': np.array([1.0, 2.0])}
        adam_step(fresh, {'w': np.zeros(2)}, AdamState(), config)
        assert np.array_equal(fresh['w'], np.array([1.0, 2.0]))

    def test_non_finite_gradient(self, config):
        params = {'w': np.array([1.0])}
        state = AdamState()
        with pytest.raises(NonFiniteError):
            adam_step(params, {'w': np.array([np.nan])}, state, config)
        assert params['w'][0] == 1.0
        assert state.step == 0

    def test_deterministic(self, config):
        runs = []
        for _ in range(2):
            params = {'w': np.array([0.3, -0.2])}
            state = AdamState()
            for g in ([0.1, 0.2], [0.1, 0.2]):
                adam_step(params, {'w': np.array(g)}, state, config)
            runs.append((params['w'].tobytes(), state.m['w'].tobytes(), state.v['w'].tobytes()))
        assert runs[0] == runs[1]

    def test_component_learning_rates(self, config):
        optimizer = Adam(config, {'fast': 0.1})
        slow, fast = {'w': np.zeros(1)}, {'w': np.zeros(1)}
        optimizer.step('slow', slow, {'w': np.ones(1)})
        optimizer.step('fast', fast, {'w': np.ones(1)})
        assert fast['w'][0] == pytest.approx(10 * slow['w'][0])
        assert set(optimizer.states) == {'slow', 'fast'}

    def test_update_ignores_gradient_scale(self, config):
        """Testa que multiplicar o gradiente por uma constante não muda o passo"""
        runs = []
        for scale in (1.0, 100.0):
            params = {'w': np.array([0.3, -0.2])}
            state = AdamState()
            for g in ([0.1, -0.4], [0.2, 0.05], [-0.3, 0.1]):
                adam_step(params, {'w': scale * np.array(g)}, state, config)
            runs.append(params['w'])
        assert np.allclose(runs[0], runs[1], rtol=0, atol=1e-8)
