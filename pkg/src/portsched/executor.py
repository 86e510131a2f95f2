"""Run a schedule+alignment against real solver commands on one instance.

Each processing unit gets a worker thread that runs its solvers in
alignment order.  An attempt is sent SIGTERM when its slice expires and
SIGKILL after an extra grace period; the first successful attempt cancels
everything else.  Solvers signal success through exit codes and/or a stdout
pattern, since conventions differ across solver families.
"""

from __future__ import annotations

import json
import os
import re
import shlex
import signal
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .model import Alignment, Schedule

try:
    import tomllib  # Python >= 3.11
except ImportError:  # pragma: no cover
    import tomli as tomllib

PLACEHOLDER = "{instance}"
POLL_INTERVAL = 0.01


@dataclass(frozen=True)
class SolverCommand:
    """How to launch one solver and how to recognize its success."""

    solver: str
    template: str
    exit_codes: frozenset[int] | None = None
    stdout_pattern: str | None = None
    env: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.template.count(PLACEHOLDER) != 1:
            raise DataError(
                f"command for {self.solver} must contain {PLACEHOLDER} exactly once"
            )
        if not self.exit_codes and not self.stdout_pattern:
            raise DataError(f"command for {self.solver} has no success detector")
        if self.stdout_pattern is not None:
            try:
                re.compile(self.stdout_pattern)
            except re.error as exc:
                raise DataError(
                    f"bad stdout pattern for {self.solver}: {exc}"
                ) from exc

    def argv(self, instance_path: str) -> list[str]:
        return shlex.split(self.template.replace(PLACEHOLDER, instance_path))

    def succeeded(self, returncode: int | None, stdout_path: Path | None) -> bool:
        if self.exit_codes and returncode in self.exit_codes:
            return True
        if self.stdout_pattern and stdout_path is not None and stdout_path.exists():
            text = stdout_path.read_text("utf-8", errors="replace")
            if re.search(self.stdout_pattern, text):
                return True
        return False


@dataclass(frozen=True)
class AttemptRecord:
    unit: int
    position: int
    solver: str
    status: str  # solved | timeout | failed | cancelled | spawn-error
    elapsed: float
    exit_code: int | None
    stdout_path: str | None
    stderr_path: str | None
    error: str | None = None


@dataclass(frozen=True)
class RunResult:
    solved: bool
    winner_solver: str | None
    winner_unit: int | None
    elapsed: float
    run_dir: str
    attempts: tuple[AttemptRecord, ...]

    def to_doc(self) -> dict:
        return {
            "solved": self.solved,
            "winner_solver": self.winner_solver,
            "winner_unit": self.winner_unit,
            "elapsed": self.elapsed,
            "run_dir": self.run_dir,
            "attempts": [
                {
                    "unit": a.unit,
                    "position": a.position,
                    "solver": a.solver,
                    "status": a.status,
                    "elapsed": a.elapsed,
                    "exit_code": a.exit_code,
                    "stdout": a.stdout_path,
                    "stderr": a.stderr_path,
                    "error": a.error,
                }
                for a in self.attempts
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=2) + "\n"


def load_commands(path: str) -> dict[str, SolverCommand]:
    """Read solver commands from a TOML or JSON config file."""
    raw = Path(path).read_bytes()
    if path.endswith(".toml"):
        try:
            doc = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise DataError(f"bad TOML in {path}: {exc}") from exc
    else:
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad JSON in {path}: {exc}") from exc
    entries = doc.get("solvers") if isinstance(doc, dict) else None
    if not isinstance(entries, list):
        raise DataError(f"{path} must contain a top-level 'solvers' list")
    commands = {}
    for entry in entries:
        try:
            command = SolverCommand(
                solver=str(entry["solver"]),
                template=str(entry["command"]),
                exit_codes=(
                    frozenset(int(c) for c in entry["exit_codes"])
                    if "exit_codes" in entry
                    else None
                ),
                stdout_pattern=entry.get("stdout_pattern"),
                env={str(k): str(v) for k, v in entry.get("env", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"bad solver entry in {path}: {exc}") from exc
        if command.solver in commands:
            raise DataError(f"duplicate command for solver {command.solver}")
        commands[command.solver] = command
    return commands


def _kill_group(process: subprocess.Popen, sig: int) -> None:
    try:
        os.killpg(os.getpgid(process.pid), sig)
    except (ProcessLookupError, PermissionError):
        pass


class _UnitWorker(threading.Thread):
    def __init__(self, unit, order, schedule, commands, instance_path, grace,
                 unit_seconds, run_dir, cancel, winner_lock, state):
        super().__init__(name=f"unit-{unit}", daemon=True)
        self.unit = unit
        self.order = order
        self.schedule = schedule
        self.commands = commands
        self.instance_path = instance_path
        self.grace = grace
        self.unit_seconds = unit_seconds
        self.run_dir = run_dir
        self.cancel = cancel
        self.winner_lock = winner_lock
        self.state = state
        self.attempts: list[AttemptRecord] = []

    def run(self) -> None:
        for position, solver in enumerate(self.order, start=1):
            if self.cancel.is_set():
                self.attempts.append(
                    AttemptRecord(self.unit, position, solver, "cancelled", 0.0, None, None, None)
                )
                continue
            self.attempts.append(self._attempt(position, solver))

    def _attempt(self, position: int, solver: str) -> AttemptRecord:
        command = self.commands[solver]
        slice_seconds = self.schedule.slices[solver] * self.unit_seconds
        stem = f"u{self.unit}-p{position}-{solver}"
        stdout_path = self.run_dir / f"{stem}.out"
        stderr_path = self.run_dir / f"{stem}.err"
        env = dict(os.environ)
        env.update(command.env)
        start = time.monotonic()
        try:
            with open(stdout_path, "wb") as out, open(stderr_path, "wb") as err:
                process = subprocess.Popen(
                    command.argv(str(self.instance_path)),
                    stdout=out,
                    stderr=err,
                    env=env,
                    start_new_session=True,  # own process group, killable with children
                )
        except OSError as exc:
            return AttemptRecord(
                self.unit, position, solver, "spawn-error",
                time.monotonic() - start, None, str(stdout_path), str(stderr_path),
                error=str(exc),
            )

        soft_deadline = start + slice_seconds
        hard_deadline = soft_deadline + self.grace
        terminated = False
        cancelled = False
        while True:
            returncode = process.poll()
            if returncode is not None:
                break
            now = time.monotonic()
            if self.cancel.is_set():
                cancelled = True
                _kill_group(process, signal.SIGTERM)
                try:
                    process.wait(timeout=self.grace)
                except subprocess.TimeoutExpired:
                    _kill_group(process, signal.SIGKILL)
                    process.wait()
                returncode = process.returncode
                break
            if now >= hard_deadline:
                _kill_group(process, signal.SIGKILL)
                process.wait()
                returncode = process.returncode
                terminated = True
                break
            if now >= soft_deadline and not terminated:
                _kill_group(process, signal.SIGTERM)
                terminated = True
            time.sleep(POLL_INTERVAL)

        elapsed = time.monotonic() - start
        if cancelled:
            return AttemptRecord(
                self.unit, position, solver, "cancelled", elapsed,
                process.returncode, str(stdout_path), str(stderr_path),
            )
        if not terminated and command.succeeded(returncode, stdout_path):
            with self.winner_lock:
                if not self.cancel.is_set():
                    self.state["solver"] = solver
                    self.state["unit"] = self.unit
                    self.cancel.set()
            return AttemptRecord(
                self.unit, position, solver, "solved", elapsed,
                returncode, str(stdout_path), str(stderr_path),
            )
        status = "timeout" if terminated else "failed"
        return AttemptRecord(
            self.unit, position, solver, status, elapsed,
            returncode, str(stdout_path), str(stderr_path),
        )


def run(
    schedule: Schedule,
    alignment: Alignment,
    commands: dict[str, SolverCommand],
    instance_path: str,
    grace: float = 1.0,
    unit_seconds: float = 1.0,
    run_dir: str | None = None,
) -> RunResult:
    """Execute the aligned schedule on one instance with real commands.

    Slices are interpreted as ``slice * unit_seconds`` wall-clock seconds
    (schedules carry discretized units).  Returns once every unit's chain
    has settled; captured solver output lands in ``run_dir``.
    """
    alignment.validate_for(schedule)
    missing = [s for s in schedule.scheduled_solvers() if s not in commands]
    if missing:
        raise DataError(f"no command configured for solvers: {', '.join(missing)}")
    if grace < 0:
        raise DataError(f"grace must be nonnegative, got {grace}")
    if unit_seconds <= 0:
        raise DataError(f"unit_seconds must be positive, got {unit_seconds}")

    directory = Path(run_dir) if run_dir else Path(tempfile.mkdtemp(prefix="portsched-run-"))
    directory.mkdir(parents=True, exist_ok=True)

    cancel = threading.Event()
    winner_lock = threading.Lock()
    state: dict[str, object] = {"solver": None, "unit": None}
    start = time.monotonic()
    workers = [
        _UnitWorker(
            unit, alignment.for_unit(unit), schedule, commands, instance_path,
            grace, unit_seconds, directory, cancel, winner_lock, state,
        )
        for unit in range(1, schedule.units + 1)
        if alignment.for_unit(unit)
    ]
    for worker in workers:
        worker.start()
    for worker in workers:
        worker.join()
    elapsed = time.monotonic() - start

    attempts = tuple(a for w in workers for a in w.attempts)
    winner_solver, winner_unit = state["solver"], state["unit"]
    return RunResult(
        solved=winner_solver is not None,
        winner_solver=winner_solver,
        winner_unit=winner_unit,
        elapsed=elapsed,
        run_dir=str(directory),
        attempts=attempts,
    )
