"""
Batch front door: argument parsing, command dispatch, manifests and the run ledger.
"""

import argparse
import importlib
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from cli import artifacts
from cli.commands import COMMANDS
from membrane.errors import (
    CoefficientError,
    ConfigError,
    GridError,
    MembraneError,
    SupportError,
    SurfaceError,
)
from membrane.simulate.ensemble import Ensemble, run_ensemble
from membrane.verify.reports import Verdict, write_verdict
from shared import Config, RunConfig, init_database, load_config

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# Problems with the inputs rather than with the numerics
INPUT_ERRORS = (ConfigError, CoefficientError, SurfaceError, SupportError, GridError)

# Flag -> dotted RunConfig key
OVERRIDES = {
    "seed": "seed",
    "paths": "scheme.n_paths",
    "dt": "scheme.dt",
    "eps": "scheme.eps",
    "grid_dx": "grids.dx",
    "grid_dt": "grids.dt",
    "out": "output_dir",
}


@dataclass
class Command:
    name: str
    help: str
    run: Callable[["RunContext"], None]


@dataclass
class RunContext:
    """Everything a command needs; collects check results and artifacts."""

    command: str
    config: RunConfig
    settings: Config
    out: Path
    results: list = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    cache: dict = field(default_factory=dict)
    _ensemble: Optional[Ensemble] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.spec = self.config.build_spec()
        self.surface = self.config.build_surface()
        self.scheme = self.config.build_scheme()
        self.start = self.config.build_start()

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name

    def write_rows(self, name: str, header: Sequence[str], rows) -> Path:
        return artifacts.write_rows(self.path(name), header, rows)

    def write_json(self, name: str, payload) -> Path:
        return artifacts.write_json(self.path(name), payload)

    def record(self, result) -> None:
        """Keep a check result and write its verdict file."""
        name = result_name(result)
        self.results.append(result)
        write_verdict(result, self.path(f"checks/{name}.json"))
        level = logging.INFO if result.verdict is not Verdict.FAIL else logging.WARNING
        logger.log(level, f"[{self.command}] {name}: {result.verdict.value}")

    def ensemble(self) -> Ensemble:
        """The run's Monte Carlo ensemble, simulated once and shared by the stages."""
        if self._ensemble is None:
            self._ensemble = run_ensemble(
                self.spec,
                self.surface,
                self.start,
                self.scheme,
                self.config.scheme.n_paths,
                workers=self.settings.workers,
            )
        return self._ensemble

    @property
    def failed(self) -> list[str]:
        return [result_name(r) for r in self.results if r.verdict is Verdict.FAIL]


def result_name(result) -> str:
    if hasattr(result, "function"):
        return f"{result.kind}-{result.function}"
    return result.name


def _load_commands() -> dict[str, Command]:
    """Import every command module and register it."""
    registry: dict[str, Command] = {}
    for module_name in COMMANDS:
        module = importlib.import_module(module_name)
        registry[module.NAME] = Command(module.NAME, module.HELP, module.run)
        logger.debug(f"Registered command: {module.NAME}")
    return registry


def build_parser(commands: dict[str, Command]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="membrane",
        description="Simulate and verify diffusions with a skewing, sticky membrane.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(commands) + "}")
    for command in commands.values():
        p = sub.add_parser(command.name, help=command.help, description=command.help)
        p.add_argument("--config", type=Path, help="run file (TOML, or JSON with a .json suffix)")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", type=str, help="output directory")
        p.add_argument("--paths", type=int, help="number of Monte Carlo paths")
        p.add_argument("--dt", type=float, help="simulation time step")
        p.add_argument("--eps", type=float, help="local-time band half-width")
        p.add_argument("--lambda", dest="lam", type=float, help="resolvent / killing parameter")
        p.add_argument("--grid-dx", dest="grid_dx", type=float, help="PDE grid spacing")
        p.add_argument("--grid-dt", dest="grid_dt", type=float, help="PDE time step")
        p.add_argument("--calibrate", type=int, metavar="N", help="repeat the null suite over N seeds")
    return parser


def resolve_config(args: argparse.Namespace, settings: Config) -> RunConfig:
    """Run file (or defaults) with the command-line overrides applied."""
    config = RunConfig.load(args.config) if args.config is not None else RunConfig()
    changes = {key: getattr(args, flag) for flag, key in OVERRIDES.items()}
    if args.lam is not None:
        changes["battery.lambdas"] = [args.lam]
    if args.calibrate is not None:
        changes["battery.calibration_seeds"] = args.calibrate
    if "chunk_size" not in config.scheme.model_fields_set:
        changes["scheme.chunk_size"] = settings.chunk_size
    if args.out is None and args.config is None:
        changes["output_dir"] = settings.output_dir
    return config.with_overrides(**changes)


def _write_manifest(ctx: RunContext, exit_code: int, wall_time: float) -> dict:
    manifest = {
        "command": ctx.command,
        "config_hash": ctx.config.config_hash(),
        "seed": str(ctx.config.seed),
        "versions": artifacts.versions(),
        "wall_time": wall_time,
        "exit_code": exit_code,
        "artifacts": sorted(set(ctx.artifacts)),
        "checks": {result_name(r): r.verdict.value for r in ctx.results},
        "config": ctx.config.model_dump(mode="json"),
    }
    artifacts.write_json(ctx.out / "manifest.json", manifest)
    return manifest


def _record_ledger(ctx: RunContext, manifest: dict) -> None:
    if not ctx.settings.ledger_enabled:
        return
    try:
        db = init_database(ctx.settings.database_url)
        checks = [(result_name(r), r.verdict.value, _headline(r)) for r in ctx.results]
        run_id = db.record_run(
            command=ctx.command,
            config_hash=manifest["config_hash"],
            seed=ctx.config.seed,
            versions=manifest["versions"],
            wall_time=manifest["wall_time"],
            exit_code=manifest["exit_code"],
            output_dir=str(ctx.out),
            checks=checks,
        )
        db.close()
        logger.info(f"Recorded run #{run_id} in the ledger")
    except Exception as e:
        # Ledger problems never change the exit code
        logger.error(f"Could not record the run in the ledger: {e}")


def _headline(result) -> dict:
    if hasattr(result, "z_scores"):
        z = [abs(float(v)) for v in result.z_scores] or [0.0]
        return {"max_abs_z": max(z), "critical_value": float(result.critical_value), "n_paths": int(result.n_paths)}
    return {k: v for k, v in result.statistics.items() if isinstance(v, (int, float, str, bool))}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; 0 pass, 1 numeric failure, 2 usage or configuration error."""
    commands = _load_commands()
    parser = build_parser(commands)
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS

    try:
        settings = load_config()
        config = resolve_config(args, settings)
        out = Path(config.output_dir) / args.command / config.config_hash()[:12]
        ctx = RunContext(args.command, config, settings, out)
    except MembraneError as e:
        logger.error(f"Configuration error: {e}")
        print(f"membrane: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.info("=" * 50)
    logger.info(f"membrane {args.command}: config {config.config_hash()[:12]}, seed {config.seed}")
    logger.info(f"Output: {out}")
    logger.info("=" * 50)

    started = time.perf_counter()
    try:
        commands[args.command].run(ctx)
        exit_code = EXIT_FAILURE if ctx.failed else EXIT_PASS
        if ctx.failed:
            logger.warning(f"Failed checks: {', '.join(ctx.failed)}")
    except INPUT_ERRORS as e:
        logger.error(f"{args.command}: {e}")
        print(f"membrane: error: {e}", file=sys.stderr)
        exit_code = EXIT_USAGE
    except MembraneError as e:
        logger.error(f"{args.command} failed: {e}")
        exit_code = EXIT_FAILURE
    wall_time = time.perf_counter() - started

    manifest = _write_manifest(ctx, exit_code, wall_time)
    _record_ledger(ctx, manifest)
    logger.info(f"membrane {args.command} finished in {wall_time:.1f}s with exit code {exit_code}")
    return exit_code
