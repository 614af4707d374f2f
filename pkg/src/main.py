#!/usr/bin/env python3
"""
SLASH: programação probabilística profunda com predicados neuro-probabilísticos
Execução: python -m src.main <subcomando> ...  (ou scripts/slash)

Saídas estruturadas vão para stdout (ou --out); diagnósticos para stderr.
Códigos de saída: 0 sucesso, 1 uso, 2 programa/semântica, 3 numérico.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from src.harness.tasks import load_task
from src.models.solution import NppOutputTable
from src.models.training import TrainConfig
from src.npp.runtime import NppBank
from src.services.slash_program import SlashProgram
from src.services.solver import format_model, satisfies
from src.services.trainer import Trainer
from src.storage.checkpoint import atomic_write, load_checkpoint
from src.utils.config import default_seed, load_config
from src.utils.errors import SlashError, UnsupportedFlavorError, UsageError, DatasetError
from src.utils.logger import set_verbosity, setup_logger

logger = setup_logger()


class _Parser(argparse.ArgumentParser):
    """argparse que sinaliza erros de uso com exceção em vez de sys.exit(2)"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--threads', type=int, default=None, help="trabalhadores do solver (1 = bit-exato)")
    common.add_argument('--out', default=None, help="arquivo de saída (padrão: stdout)")
    common.add_argument('--seed', type=int, default=None, help="semente (padrão: SLASH_SEED ou 0)")
    common.add_argument('-v', '--verbose', action='store_true', help="log em nível DEBUG")

    parser = _Parser(prog='slash', description="SLASH: programação probabilística profunda")
    commands = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    check = commands.add_parser('check', parents=[common], help="valida e conta átomos, regras e escolhas")
    check.add_argument('program')

    ground = commands.add_parser('ground', parents=[common], help="imprime o programa instanciado")
    ground.add_argument('program')

    models = commands.add_parser('models', parents=[common], help="lista os modelos estáveis")
    models.add_argument('program')
    models.add_argument('--query', default=None)

    infer = commands.add_parser('infer', parents=[common], help="probabilidade de uma consulta")
    infer.add_argument('program')
    infer.add_argument('--query', required=True)
    infer.add_argument('--npp-output', choices=['uniform', 'file'], default='uniform')
    infer.add_argument('--table', default=None, help="JSON instância -> vetor p (com --npp-output file)")
    infer.add_argument('--gradients', action='store_true')

    train = commands.add_parser('train', parents=[common], help="treina as NPPs")
    train.add_argument('--config', required=True)

    evaluate = commands.add_parser('eval', parents=[common], help="avalia um checkpoint")
    evaluate.add_argument('--config', required=True)
    evaluate.add_argument('--checkpoint', required=True)
    evaluate.add_argument('--missing', type=float, default=None, help="fração de pixels ausentes no teste")
    return parser


def _read(path: str, what: str) -> str:
    file = Path(path)
    if not file.exists():
        raise UsageError(f"{what} não encontrado: {path}")
    return file.read_text(encoding='utf-8')


def _emit(text: str, out: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with atomic_write(out) as handle:
            handle.write(text.encode('utf-8'))


def _threads(args, settings: dict) -> int:
    threads = args.threads if args.threads is not None else settings.get('runtime', {}).get('threads', 1)
    if threads < 1:
        raise UsageError(f"--threads precisa ser ≥ 1 (recebido {threads})")
    return threads


def _program(args, settings: dict) -> SlashProgram:
    if not Path(args.program).exists():
        raise UsageError(f"programa não encontrado: {args.program}")
    return SlashProgram.from_file(args.program, settings, _threads(args, settings))


def build_bank(config: TrainConfig, slash: SlashProgram, settings: dict, seed: int) -> NppBank:
    """NPPs da configuração, conferidas contra as declarações do programa"""
    missing = sorted(set(slash.outcomes) - set(config.npp_bindings))
    if missing:
        raise UnsupportedFlavorError(f"NPPs sem implementação registrada: {', '.join(missing)}")
    circuit = settings.get('circuit', {})
    return NppBank.from_bindings(
        config.npp_bindings, slash.outcomes,
        components=int(circuit.get('components', 8)),
        seed=seed,
        logvar_range=(float(circuit.get('logvar_min', -7.0)), float(circuit.get('logvar_max', 2.0))),
    )


def _seed(args, config: Optional[TrainConfig] = None) -> int:
    if args.seed is not None:
        return args.seed
    if config is not None and config.seed is not None:
        return config.seed
    return default_seed()


# --- subcomandos ---

def cmd_check(args, settings: dict) -> int:
    slash = _program(args, settings)
    _emit(json.dumps(slash.stats.to_dict()), args.out)
    logger.info(f"✅ Programa válido: {args.program}")
    return 0


def cmd_ground(args, settings: dict) -> int:
    slash = _program(args, settings)
    _emit(slash.gp.dump(), args.out)
    return 0


def cmd_models(args, settings: dict) -> int:
    slash = _program(args, settings)
    constraints = []
    if args.query is not None:
        _, constraints = slash.query(_read(args.query, "consulta"))
    models = [m for m in slash.models(constraints) if satisfies(m, constraints)]
    _emit("\n".join(format_model(slash.gp, m) for m in models), args.out)
    logger.info(f"📊 {len(models)} modelos")
    return 0


def cmd_infer(args, settings: dict) -> int:
    slash = _program(args, settings)
    if args.npp_output == 'uniform':
        table = NppOutputTable.uniform(slash.gp)
    else:
        if args.table is None:
            raise UsageError("--npp-output file exige --table")
        try:
            mapping = json.loads(_read(args.table, "tabela"))
        except json.JSONDecodeError as e:
            raise DatasetError(f"{args.table}: JSON inválido ({e})") from None
        table = NppOutputTable.from_mapping(slash.gp, mapping)
    result = slash.infer(_read(args.query, "consulta"), table, args.gradients)
    _emit(json.dumps(result.to_dict(args.gradients)), args.out)
    return 0


def cmd_train(args, settings: dict) -> int:
    config = TrainConfig.load(args.config)
    seed = _seed(args, config)
    slash = SlashProgram.from_file(config.program_path, settings, _threads(args, settings))
    bank = build_bank(config, slash, settings, seed)
    task = load_task(config, seed)
    output_dir = Path(args.out) if args.out is not None else Path(config.output_dir)
    report = Trainer(slash, bank, config).train(task.train, lambda: task.evaluate(bank), seed, output_dir)
    _emit(json.dumps(report.to_dict()), None)
    return 0


def cmd_eval(args, settings: dict) -> int:
    config = TrainConfig.load(args.config)
    seed = _seed(args, config)
    slash = SlashProgram.from_file(config.program_path, settings, _threads(args, settings))
    bank = build_bank(config, slash, settings, seed)
    bank.load(load_checkpoint(args.checkpoint))
    if args.missing is not None and config.dataset.kind != 'mnist_addition':
        raise UsageError("--missing só se aplica ao MNIST-Addition")
    task = load_task(config, seed, args.missing)
    value = task.evaluate(bank)
    result = {'task': task.name, 'metric': task.metric, 'value': value,
              'missing': args.missing if args.missing is not None else config.dataset.missing}
    _emit(json.dumps(result), args.out)
    logger.info(f"📊 {task.metric} = {value:.4f}")
    return 0


COMMANDS = {
    'check': cmd_check,
    'ground': cmd_ground,
    'models': cmd_models,
    'infer': cmd_infer,
    'train': cmd_train,
    'eval': cmd_eval,
}


def run(argv: List[str]) -> int:
    """Ponto de entrada; devolve o código de saída"""
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            set_verbosity('DEBUG')
        settings = load_config()
        return COMMANDS[args.command](args, settings)
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except SlashError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except (FileNotFoundError, ValueError) as e:
        logger.error(f"❌ Configuração: {e}")
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
