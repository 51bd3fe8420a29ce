"""
Точка входа: пакетные эксперименты лаборатории майорановских краевых мод
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Добавляем корневую директорию в PYTHONPATH
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.plotdata import emit_plot_data
from src.cli.runner import load_document, prepare_config, run, run_directory
from src.cli.schema import MODES
from src.core.config import Config
from src.core.errors import ConfigError, MajoranaLabError, NumericalError
from src.core.logger import setup_logger


def build_parser() -> argparse.ArgumentParser:
    """Парсер с подкомандой на каждый режим и plotdata"""
    parser = argparse.ArgumentParser(
        prog="majorana-lab",
        description="Численные эксперименты с цепочкой Китаева-Гейзенберга и ионной ловушкой",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"Конвейер {mode}")
        p.add_argument("--config", type=Path, help="JSON-конфигурация эксперимента")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="Переопределение section.key=value (значение в синтаксисе JSON)",
        )
        p.add_argument("--output", type=Path, help="Каталог результатов")
        p.add_argument("--workers", type=int, help="Число потоков ансамбля (иначе MAJORANA_WORKERS)")

    plot = sub.add_parser("plotdata", help="Данные для графиков из артефактов запуска")
    source = plot.add_mutually_exclusive_group(required=True)
    source.add_argument("--run-id", type=int, help="ID запуска в реестре")
    source.add_argument("--run-dir", type=Path, help="Каталог запуска")
    plot.add_argument("--output", type=Path, help="Путь CSV")
    return parser


def execute(args: argparse.Namespace, config: Config, logger: logging.Logger) -> int:
    if args.command == "plotdata":
        run_dir = args.run_dir if args.run_dir else run_directory(config, args.run_id)
        path = emit_plot_data(run_dir, args.output)
        print(path)
        return 0

    if args.workers is not None:
        config.WORKERS = max(1, args.workers)
    document = load_document(args.config) if args.config else {}
    experiment = prepare_config(document, args.command, args.overrides, args.output)
    outcome = run(experiment, config)
    logger.info(f"Запуск {outcome.run_id} завершён: {outcome.output_dir}")
    print(outcome.output_dir)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Главная функция; возвращает код выхода 0, 1, 2 или 3"""
    args = build_parser().parse_args(argv)

    # Инициализируем конфигурацию
    config = Config()

    # Настраиваем логирование
    logger = setup_logger(config)
    logger.debug("Запуск %s v%s: %s", config.APP_NAME, config.APP_VERSION, args.command)

    try:
        return execute(args, config, logger)
    except ConfigError as e:
        logger.error(f"Ошибка конфигурации: {e}")
        return e.exit_code
    except NumericalError as e:
        logger.error(f"Численный сбой: {e}")
        return e.exit_code
    except FileNotFoundError as e:
        logger.error(str(e))
        return 1
    except MajoranaLabError as e:
        logger.error(str(e))
        return e.exit_code
    except Exception as e:
        logger.critical(f"Критическая ошибка: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
