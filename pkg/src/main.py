import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from src.exceptions import ConfigurationError, ProtocolError
from src.protocol.schemas import ModelConfig, RunManifest
from src.routes import router

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
CONFIG_FIELDS = ("n", "m", "l", "epsilon", "control_purity")


def configure_logging(verbose: bool):
    """
    Один обработчик stderr для всего процесса; --verbose включает DEBUG
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def build_manifest(command: str, parameters: dict) -> RunManifest:
    resolved = {key: str(value) if isinstance(value, Path) else value
                for key, value in parameters.items() if key != "command"}
    return RunManifest(command=command, parameters=resolved)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Точка входа CLI

    Разбирает аргументы, печатает манифест запуска в stderr и вызывает
    обработчик команды. Коды завершения: 0 - успех, 1 - провал проверки
    или ошибка вывода, 2 - некорректные параметры

    Args:
        argv(Optional[List[str]]): аргументы без имени программы

    Returns:
        int: код завершения процесса
    """
    args = router.build_parser().parse_args(argv)
    configure_logging(args.verbose)
    parameters = vars(args)
    try:
        cfg = ModelConfig(**{name: parameters[name] for name in CONFIG_FIELDS})
        manifest = build_manifest(args.command, parameters)
        logger.info("Run manifest %s", manifest.model_dump_json())
        return router.dispatch(args.command, cfg, args)
    except ValidationError as exc:
        error = ConfigurationError(f"Invalid configuration: {exc}")
        logger.error(error.detail)
        return error.exit_code
    except ProtocolError as exc:
        logger.error(exc.detail)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
