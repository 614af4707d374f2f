import json
import math

import numpy as np
import pytest

from src.models.samples import BatchExample, Tensor
from src.models.training import TrainConfig
from src.npp.runtime import NppBank, NppInstance
from src.parser import parse_program
from src.services.slash_program import SlashProgram
from src.services.trainer import METRIC_KEYS, Trainer, total_query_probability
from src.utils.errors import DatasetError

SINGLE = """
img(a).
npp(d(1,X),[0,1,2]) :- img(X).
ok :- d(1,a)=0.
ok :- d(1,a)=1.
"""

ALWAYS = """
img(a).
npp(d(1,X),[0,1]) :- img(X).
ok :- d(1,a)=0.
ok :- d(1,a)=1.
"""

HALF = """
img(a).
npp(d(1,X),[0,1]) :- img(X).
ok :- d(1,a)=0.
"""

TWO = """
x(a). x(b).
npp(d(1,X),[0,1]) :- x(X).
both :- d(1,a)=1, d(1,b)=1.
"""

BINDINGS = {
    'nn': {'flavor': 'nn', 'input_shape': [4], 'hidden': [5]},
    'pc': {'flavor': 'pc', 'input_shape': [2, 2], 'pieces': [1], 'components': 2},
    'nn+pc': {'flavor': 'nn+pc', 'input_shape': [3], 'hidden': [4], 'latent_shape': [2, 2], 'pieces': [1],
              'components': 2},
}


def make_trainer(source, binding, **overrides):
    config = TrainConfig(program_path="inline.slash", npp_bindings={'d': binding},
                         dataset={'kind': 'attribute_world'}, **overrides)
    slash = SlashProgram(parse_program(source), config={})
    bank = NppBank.from_bindings(config.npp_bindings, slash.outcomes, components=2, seed=3)
    return Trainer(slash, bank, config)


def example(width, seed=0, query=":- not ok.", terms=('a',)):
    rng = np.random.default_rng(seed)
    return BatchExample({t: Tensor(rng.random(width)) for t in terms}, query)


def zero_network(bank):
    for blocks in bank.parameters().values():
        for value in blocks.values():
            value.fill(0.0)


class TestEntailmentLoss:

    def test_certain_query(self):
        """Testa L_ENT = 0 e gradiente nulo quando P(Q) = 1"""
        trainer = make_trainer(ALWAYS, BINDINGS['nn'])
        trainer.bank.zero_grad()
        result = trainer.entailment_loss_and_grad([example(4)])
        assert result.loss == pytest.approx(0.0, abs=1e-12)
        for _, _, grads in trainer.bank.components():
            for grad in grads.values():
                assert np.allclose(grad, 0.0, atol=1e-12)

    def test_half_probability(self):
        trainer = make_trainer(HALF, BINDINGS['nn'])
        zero_network(trainer.bank)
        result = trainer.entailment_loss_and_grad([example(4)])
        assert result.loss == pytest.approx(math.log(2), abs=1e-12)

    def test_zero_probability_is_skipped(self):
        trainer = make_trainer(HALF, BINDINGS['nn'])
        result = trainer.entailment_loss_and_grad([example(4, query=":- ok.\n:- not ok.")])
        assert result.skipped == 1
        assert result.used == 0
        assert result.loss == 0.0

    def test_empty_batch(self):
        trainer = make_trainer(HALF, BINDINGS['nn'])
        with pytest.raises(DatasetError):
            trainer.entailment_loss_and_grad([])

    def test_boundary_gradient(self, mocker):
        """Testa que o sinal entregue às NPPs é −∂log P(Q)/∂p / B"""
        trainer = make_trainer(SINGLE, BINDINGS['nn'])
        spy = mocker.patch.object(NppInstance, 'backward', autospec=True)
        batch = [example(4, seed=s) for s in range(2)]
        trainer.entailment_loss_and_grad(batch)
        (_, upstream, _), = [call.args for call in spy.call_args_list]
        for row, item in enumerate(batch):
            p = trainer.slash.instances(trainer.bank, [item])[('d', (1, 'a'))].forward()
            expected = -np.array([1.0, 1.0, 0.0]) / (p[0, 0] + p[0, 1]) / 2
            assert upstream[row] == pytest.approx(expected)

    @pytest.mark.parametrize("flavor,width", [('nn', 4), ('pc', 4), ('nn+pc', 3)])
    def test_end_to_end_finite_differences(self, flavor, width):
        """Testa ∂(−log P(Q))/∂θ ponta a ponta contra diferenças finitas centrais"""
        for seed in range(20):
            trainer = make_trainer(SINGLE, BINDINGS[flavor])
            batch = [example(width, seed=seed)]
            trainer.bank.zero_grad()
            trainer.entailment_loss_and_grad(batch)
            rng = np.random.default_rng(seed)
            name, params, grads = list(trainer.bank.components())[0]
            block = sorted(params)[int(rng.integers(len(params)))]
            index = tuple(int(rng.integers(n)) for n in params[block].shape)
            h = 1e-5
            original = params[block][index]
            params[block][index] = original + h
            up = trainer.entailment_loss_and_grad(batch, backward=False).loss
            params[block][index] = original - h
            down = trainer.entailment_loss_and_grad(batch, backward=False).loss
            params[block][index] = original
            numeric = (up - down) / (2 * h)
            assert grads[block][index] == pytest.approx(numeric, rel=1e-4, abs=1e-7), (name, block, index)

    def test_likelihood_weighting(self):
        trainer = make_trainer(HALF, BINDINGS['pc'], schedule={'weighting': 'likelihood'})
        unit = make_trainer(HALF, BINDINGS['pc'])
        batch = [example(4)]
        weighted = trainer.entailment_loss_and_grad(batch, backward=False).loss
        plain = unit.entailment_loss_and_grad(batch, backward=False).loss
        nll, _ = trainer.nll_loss_and_grad(batch, backward=False)
        assert weighted == pytest.approx(abs(nll) * plain)


class TestNllLoss:

    def test_nn_only_is_zero(self):
        trainer = make_trainer(HALF, BINDINGS['nn'])
        loss, _ = trainer.nll_loss_and_grad([example(4)])
        assert loss == 0.0

    def test_matches_enumeration(self):
        """Testa L_NPP contra a soma explícita sobre as classes em um circuito categórico"""
        binding = dict(BINDINGS['pc'], leaf='categorical', states=2)
        trainer = make_trainer(HALF, binding)
        batch = [BatchExample({'a': Tensor(np.array([0.0, 1.0, 1.0, 0.0]))}, ":- not ok.")]
        loss, _ = trainer.nll_loss_and_grad(batch, backward=False)
        circuit = trainer.bank.npp('d').circuit
        heads = circuit.log_joint(np.array([[0.0, 1.0, 1.0, 0.0]]))[0]
        assert loss == pytest.approx(-math.log(sum(math.exp(h) for h in heads)), abs=1e-12)


class TestSchedule:

    def test_phases(self):
        trainer = make_trainer(HALF, BINDINGS['pc'], schedule={'period': 2})
        assert [trainer._phase(i) for i in range(6)] == ['npp', 'npp', 'ent', 'ent', 'npp', 'npp']

    def test_default_alternates_every_batch(self):
        trainer = make_trainer(HALF, BINDINGS['pc'])
        assert [trainer._phase(i) for i in range(4)] == ['npp', 'ent', 'npp', 'ent']

    def test_nn_only_skips_phase_a(self):
        trainer = make_trainer(HALF, BINDINGS['nn'], schedule={'period': 3})
        assert [trainer._phase(i) for i in range(6)] == ['ent'] * 6

    def test_phase_isolation(self, mocker):
        """Testa que cada lote roda uma única fase e só o Adam dessa fase avança"""
        trainer = make_trainer(HALF, BINDINGS['pc'], batch_size=1, epochs=1)
        nll = mocker.spy(trainer, 'nll_loss_and_grad')
        ent = mocker.spy(trainer, 'entailment_loss_and_grad')

        trainer.train_epoch([example(4)], 1, np.random.default_rng(0))
        assert (nll.call_count, ent.call_count) == (1, 0)
        assert trainer.optimizers['npp'].states
        assert not trainer.optimizers['ent'].states

        trainer.train_epoch([example(4)], 2, np.random.default_rng(0))
        assert (nll.call_count, ent.call_count) == (1, 1)
        assert trainer.optimizers['ent'].states
        assert trainer.batches_seen == 2


class TestTrain:

    def test_metrics_and_checkpoint(self, tmp_path):
        trainer = make_trainer(HALF, BINDINGS['pc'], epochs=2, batch_size=2)
        examples = [example(4, seed=s) for s in range(4)]
        report = trainer.train(examples, evaluate=lambda: 0.5, seed=1, output_dir=tmp_path)
        lines = (tmp_path / "metrics.jsonl").read_text().splitlines()
        assert len(lines) == 2
        for line in lines:
            record = json.loads(line)
            assert tuple(record) == METRIC_KEYS
            assert record['l_slash'] == record['l_npp'] + record['l_ent']
            assert record['task_metric'] == 0.5
        assert (tmp_path / "checkpoint.slnp").exists()
        assert [e.epoch for e in report.epochs] == [1, 2]

    def test_deterministic(self, tmp_path):
        """Testa métricas idênticas byte a byte com a mesma semente"""
        outputs = []
        for run in range(2):
            trainer = make_trainer(HALF, BINDINGS['nn+pc'], epochs=2, batch_size=2)
            examples = [example(3, seed=s) for s in range(5)]
            trainer.train(examples, seed=4, output_dir=tmp_path / str(run))
            outputs.append((tmp_path / str(run) / "metrics.jsonl").read_bytes())
        assert outputs[0] == outputs[1]

    def test_toy_convergence(self):
        """Testa que o treino leva P(Q) a 1 em um programa com duas instâncias"""
        binding = {'flavor': 'nn', 'input_shape': [1], 'hidden': [4], 'learning_rate': 0.05}
        trainer = make_trainer(TWO, binding, epochs=200, batch_size=1)
        item = BatchExample({'a': Tensor(np.ones(1)), 'b': Tensor(np.ones(1))}, ":- not both.")
        before = total_query_probability(trainer.slash, item, trainer.bank)
        trainer.train([item], seed=0)
        after = total_query_probability(trainer.slash, item, trainer.bank)
        assert after > 0.9
        assert after > before

    def test_pc_nll_decreases(self):
        trainer = make_trainer(HALF, BINDINGS['pc'], optimizer={'learning_rate': 0.01})
        examples = [example(4, seed=s) for s in range(4)]
        first, _ = trainer.nll_loss_and_grad(examples, backward=False)
        for _ in range(20):
            trainer.bank.zero_grad()
            trainer.nll_loss_and_grad(examples)
            assert trainer._step('npp')
        last, _ = trainer.nll_loss_and_grad(examples, backward=False)
        assert last < first
