import sys

from ..shared.constants import EXIT_CONFIG_ERROR, EXIT_INPUT_ERROR, EXIT_OK
from . import main as app_main
from .commands import COMMANDS, RunOptions

_VALUE_FLAGS = ("--config", "--out", "--seed", "--threads", "--check", "--perturb")


def _print_help() -> None:
    help_text = (
        "Usage: cqedfit <command> [--config FILE] [--out DIR] [--seed N] [--threads N]\n\n"
        "Commands:\n"
        "  fit-spectrum  Linewidth table from a free-space doublet spectrum\n"
        "  fit-cavity    Cavity transmission fit (vibration width)\n"
        "  fit-envelope  g curve from a spectral envelope\n"
        "  fit-decay     g curve from a cavity decay\n"
        "  cross         Crossing of the envelope and decay g curves\n"
        "  purcell       Measured and theoretical Purcell factors\n"
        "  saturation    Saturation fit and quantum yield\n"
        "  powerlaw      Power-law exponent of intensity against power\n"
        "  simulate      Synthetic dataset bundle\n"
        "  verify        Closed forms against independent oracles\n"
        "                [--check NAME]... [--perturb X]\n"
        "  help          Show help"
    )
    print(help_text, file=sys.stdout)


def _error(message: str) -> None:
    print(f"cqedfit: {message}", file=sys.stderr)


def _parse_options(args: list[str]) -> RunOptions | int:
    """Flags to RunOptions, or an exit code for a malformed command line."""
    values: dict[str, list[str]] = {}
    i = 0
    while i < len(args):
        flag, _, inline = args[i].partition("=")
        if flag not in _VALUE_FLAGS:
            _error(f"unknown option: {args[i]}")
            return EXIT_INPUT_ERROR
        if inline:
            value = inline
        elif i + 1 < len(args):
            i += 1
            value = args[i]
        else:
            _error(f"option {flag} needs a value")
            return EXIT_INPUT_ERROR
        values.setdefault(flag, []).append(value)
        i += 1

    def last(flag: str) -> str | None:
        return values[flag][-1] if flag in values else None

    try:
        seed = last("--seed")
        threads = last("--threads")
        perturb = last("--perturb")
        options = RunOptions(
            config_path=last("--config"),
            out_dir=last("--out"),
            seed=None if seed is None else int(seed),
            threads=None if threads is None else int(threads),
            checks=tuple(values.get("--check", ())),
            perturbation=0.0 if perturb is None else float(perturb),
        )
    except ValueError as e:
        _error(f"invalid option value: {e}")
        return EXIT_CONFIG_ERROR
    if options.seed is not None and options.seed < 0:
        _error("--seed must be >= 0")
        return EXIT_CONFIG_ERROR
    if options.threads is not None and options.threads < 1:
        _error("--threads must be >= 1")
        return EXIT_CONFIG_ERROR
    return options


def _dispatch(argv: list[str]) -> int:
    if not argv:
        _print_help()
        return EXIT_OK

    cmd = argv[0].strip().lower()
    if cmd in {"help", "-h", "--help"}:
        _print_help()
        return EXIT_OK
    if cmd not in COMMANDS:
        _error(f"unknown command: {argv[0]}")
        _print_help()
        return EXIT_INPUT_ERROR

    options = _parse_options(argv[1:])
    if isinstance(options, int):
        return options
    return app_main.main(cmd, options)


def main() -> int:
    return _dispatch(sys.argv[1:])


if __name__ == "__main__":
    raise SystemExit(main())
