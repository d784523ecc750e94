import json
import sys
from datetime import UTC, datetime
from pathlib import Path

import anyio
from dotenv import load_dotenv
from loguru import logger

from ..shared.config import Config
from ..shared.config_keys import ConfigKeys
from ..shared.constants import (
    EXIT_CONFIG_ERROR,
    EXIT_FIT_NON_CONVERGENCE,
    EXIT_INPUT_ERROR,
    EXIT_INTERRUPTED,
)
from ..shared.exceptions import (
    ConfigurationError,
    ConvergenceError,
    CqedFitError,
    DegenerateDecompositionError,
    InputFormatError,
    InputNotFoundError,
    NoCrossingError,
    NoDoubletError,
    ParameterDomainError,
    PreconditionError,
)
from ..shared.utils import get_memory_usage
from ..store.records import ArtifactStore, dumps_record
from .commands import COMMANDS, CommandContext, RunOptions

__all__ = ("PipelineRunner", "main")

_EXIT_CODES: tuple[tuple[type[Exception], int], ...] = (
    (ConfigurationError, EXIT_CONFIG_ERROR),
    (InputNotFoundError, EXIT_INPUT_ERROR),
    (InputFormatError, EXIT_INPUT_ERROR),
    (ParameterDomainError, EXIT_INPUT_ERROR),
    (PreconditionError, EXIT_INPUT_ERROR),
    (ConvergenceError, EXIT_FIT_NON_CONVERGENCE),
    (NoCrossingError, EXIT_FIT_NON_CONVERGENCE),
    (NoDoubletError, EXIT_FIT_NON_CONVERGENCE),
    (DegenerateDecompositionError, EXIT_FIT_NON_CONVERGENCE),
)


def _configure_logging(level: str = "INFO", log_path: str | None = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level)
    if log_path:
        logger.add(
            Path(log_path),
            level=level,
            rotation="10 MB",
            compression="zip",
            enqueue=True,
        )


class PipelineRunner:
    def __init__(self, command: str, options: RunOptions | None = None):
        if command not in COMMANDS:
            raise ConfigurationError(f"unknown command: {command}")
        self.command = command
        self.options = options or RunOptions()
        self.config: Config | None = None

    async def load(self) -> Config:
        load_dotenv()
        config = Config(self.options.config_path)
        await config.load()
        if self.options.out_dir is not None:
            config.set(ConfigKeys.RUN_OUT_DIR, self.options.out_dir)
        if self.options.seed is not None:
            config.set(ConfigKeys.RUN_SEED, self.options.seed)
        if self.options.threads is not None:
            config.set(ConfigKeys.RUN_THREADS, self.options.threads)
        config.validate()
        self.config = config
        return config

    def run(self) -> int:
        config = anyio.run(self.load)
        _configure_logging(
            str(config.get(ConfigKeys.LOG_LEVEL)).upper(), config.get(ConfigKeys.LOG_PATH)
        )
        started = datetime.now(UTC)
        logger.info(f"Running {self.command}...")
        store = ArtifactStore(config=config)
        result = COMMANDS[self.command](CommandContext(config, store, self.options))
        print(dumps_record(result.record), file=sys.stdout)
        elapsed = (datetime.now(UTC) - started).total_seconds()
        logger.debug(f"Memory after {self.command}: {get_memory_usage()}")
        logger.info(f"{self.command} finished in {elapsed:.1f} s (exit {result.exit_code})")
        return result.exit_code


def _report_error(error: Exception, code: str) -> None:
    payload = {"error": code, "message": str(error)}
    for attr in ("min_gap", "last_iterate"):
        if getattr(error, attr, None) is not None:
            payload[attr] = getattr(error, attr)
    print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)


def main(command: str, options: RunOptions | None = None) -> int:
    _configure_logging()
    try:
        return PipelineRunner(command, options).run()
    except KeyboardInterrupt:
        _report_error(KeyboardInterrupt("interrupted"), "interrupted")
        return EXIT_INTERRUPTED
    except CqedFitError as e:
        logger.error(f"{command} failed: {e}")
        _report_error(e, e.code)
        for error_type, exit_code in _EXIT_CODES:
            if isinstance(e, error_type):
                return exit_code
        return EXIT_FIT_NON_CONVERGENCE
    except Exception as e:
        logger.exception(f"Unhandled exception in {command}")
        _report_error(e, CqedFitError.code)
        return EXIT_FIT_NON_CONVERGENCE
