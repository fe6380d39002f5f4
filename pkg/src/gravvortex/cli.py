"""Batch command line: ``gravvortex {classify,solve,futaki,sweep,audit}``.

Exit codes: 0 success, 2 invalid input, 3 no convergence, 4 continuation
stalled.  Runs are configured by a flat JSON file; ``--tol``, ``--seed``,
``--out`` and a few physical parameters may be overridden on the command line.
Total area is fixed at 2π and is not configurable.
"""

from __future__ import annotations

import dataclasses
import json
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np
import scipy

from gravvortex import __version__
from gravvortex.diagnostics import audit_state
from gravvortex.errors import (
    GravVortexError,
    KahlerPositivityLost,
    NonConvergence,
    PreconditionError,
    StepUnderflow,
)
from gravvortex.futaki import (
    closed_form_result,
    futaki_quadrature,
    limit_futaki,
    maximal_weight,
)
from gravvortex.gravitating import (
    GravSolveState,
    ModelParams,
    futaki_certificate,
    solve_continuity,
    solve_einstein_bogomolnyi_sphere,
    write_path_log,
)
from gravvortex.higgs import (
    StabilityClass,
    bradlow_admissible,
    classify_divisor,
    hilbert_mumford_destabilized_exponent,
    higgs_norm,
    parse_divisor,
)
from gravvortex.surface import make_sphere_grid, make_torus_grid, read_field, write_field
from gravvortex.vortex import solve_vortex

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3
EXIT_UNDERFLOW = 4

MODES = ("auto", "vortex", "continuity", "einstein_bogomolnyi")


class ConfigError(PreconditionError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str = "solve"
    surface: str = "torus"
    n1: int = 64
    n2: int = 64
    lattice_modulus: tuple[float, float] = (0.0, 1.0)
    divisor: tuple[tuple[str, int], ...] = ()
    tau: float = 6.0
    alpha: float = 0.0
    degree: int | None = None
    exponent: int | None = None
    mode: str = "auto"
    tol: float = 1e-8
    max_iter: int = 200
    dt0: float | None = None
    min_step: float = 1e-6
    max_steps: int = 400
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    workers: int = 1
    out: str = "run"
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.command not in ("classify", "solve", "futaki", "sweep", "audit"):
            raise ConfigError(f"unknown command {self.command!r}")
        if self.surface not in ("torus", "sphere"):
            raise ConfigError(f"surface must be 'torus' or 'sphere', got {self.surface!r}")
        if min(self.n1, self.n2) < 8:
            raise ConfigError(f"resolution must be at least 8, got {(self.n1, self.n2)}")
        if self.surface == "torus" and not self.lattice_modulus[1] > 0:
            raise ConfigError("lattice modulus must have positive imaginary part")
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1 or self.max_steps < 1 or self.workers < 1:
            raise ConfigError("max_iter, max_steps and workers must be positive")
        if not self.min_step > 0:
            raise ConfigError("min_step must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sweep_param not in (None, "tau", "alpha"):
            raise ConfigError("sweep_param must be 'tau' or 'alpha'")
        if self.degree is not None and self.degree < 1:
            raise ConfigError("degree must be positive")
        if self.exponent is not None and self.exponent < 0:
            raise ConfigError("exponent must be nonnegative")
        if self.divisor:
            self.parsed_divisor()

    def parsed_divisor(self):
        return parse_divisor([{"point": p, "multiplicity": n} for p, n in self.divisor])

    @property
    def N(self) -> int:
        if self.degree is not None:
            return self.degree
        if not self.divisor:
            raise ConfigError("configuration needs a divisor or a degree")
        return self.parsed_divisor().degree

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lattice_modulus"] = list(self.lattice_modulus)
        d["divisor"] = [{"point": p, "multiplicity": n} for p, n in self.divisor]
        d["sweep_values"] = list(self.sweep_values)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        d = dict(data)
        if "lattice_modulus" in d:
            d["lattice_modulus"] = _parse_modulus(d["lattice_modulus"])
        if "divisor" in d:
            d["divisor"] = _parse_divisor_records(d["divisor"])
        if "sweep_values" in d:
            d["sweep_values"] = tuple(float(x) for x in d["sweep_values"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        return cls.from_dict(data)

    def make_grid(self):
        if self.surface == "torus":
            return make_torus_grid(self.n1, self.n2, complex(*self.lattice_modulus))
        return make_sphere_grid(self.n1, self.n2)


def _parse_modulus(raw) -> tuple[float, float]:
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return (float(raw[0]), float(raw[1]))
    if isinstance(raw, str):
        try:
            z = complex(raw.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"cannot parse lattice modulus {raw!r}") from None
        return (z.real, z.imag)
    raise ConfigError(f"cannot parse lattice modulus {raw!r}")


def _parse_divisor_records(raw) -> tuple[tuple[str, int], ...]:
    parse_divisor(raw)  # validates
    if isinstance(raw, str):
        raw = json.loads(raw)
    out = []
    for rec in raw:
        p = rec["point"]
        if isinstance(p, (list, tuple)):
            p = _format_complex(complex(float(p[0]), float(p[1])))
        elif isinstance(p, (int, float)):
            p = _format_complex(complex(p))
        out.append((str(p), int(rec.get("multiplicity", 1))))
    return tuple(out)


def _format_complex(z: complex) -> str:
    return f"{z.real!r}{z.imag:+}i"


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    z = complex(z.real + 0.0, z.imag + 0.0)  # drop negative zeros
    return f"{z.real:.12e}{z.imag:+.12e}i"


# ---------------------------------------------------------------------------
# commands


@dataclass
class Outcome:
    code: int
    lines: list[str] = field(default_factory=list)


def cmd_classify(cfg: RunConfig) -> Outcome:
    D = cfg.parsed_divisor() if cfg.divisor else None
    if D is None:
        raise ConfigError("classify needs a non-empty divisor")
    N = D.degree
    cls = classify_divisor(D)
    l = hilbert_mumford_destabilized_exponent(D)
    alpha = cfg.alpha if cfg.alpha > 0 else 1.0 / (cfg.tau * N)
    lines = [
        f"class {cls}",
        f"degree {N}",
        f"hilbert_mumford_exponent {l}",
        f"bradlow_admissible {str(bradlow_admissible(N, cfg.tau)).lower()}",
        f"maximal_weight {maximal_weight(N, l, alpha, cfg.tau):.12e}",
    ]
    if cfg.surface == "sphere" or cfg.command == "classify":
        if cls is StabilityClass.STABLE:
            lines.append("futaki none (no continuous automorphisms)")
        else:
            value = limit_futaki(N, l, alpha, cfg.tau)
            status = "nonzero" if abs(value) > 0 else "zero"
            lines.append(f"futaki {_fmt_complex(value)} {status}")
    return Outcome(EXIT_OK, lines)


def cmd_futaki(cfg: RunConfig) -> Outcome:
    if cfg.surface != "sphere":
        raise ConfigError("the Futaki invariant is only evaluated on the sphere")
    N = cfg.N
    l = cfg.exponent if cfg.exponent is not None else 0
    alpha = cfg.alpha if cfg.alpha > 0 else 1.0
    grid = cfg.make_grid()
    closed = closed_form_result(N, l, alpha, cfg.tau)
    quad = futaki_quadrature(l, N, alpha, cfg.tau, grid)
    err = abs(quad.value - closed.value)
    rel = err / abs(closed.value) if closed.value != 0 else err
    lines = ["# closed form", *closed.report().splitlines(), "# quadrature", *quad.report().splitlines(),
             f"relative_error {rel:.6e}"]
    return Outcome(EXIT_OK if rel < 1e-5 else EXIT_NONCONVERGENCE, lines)


def _resolve_mode(cfg: RunConfig) -> str:
    if cfg.mode != "auto":
        return cfg.mode
    if cfg.surface == "sphere":
        return "einstein_bogomolnyi"
    return "continuity" if cfg.alpha > 0 else "vortex"


def _state_params(cfg: RunConfig, mode: str, N: int, t: float) -> ModelParams:
    if mode == "einstein_bogomolnyi":
        return ModelParams.einstein_bogomolnyi(cfg.tau, N)
    genus = 1 if cfg.surface == "torus" else 0
    return ModelParams(t, cfg.tau, N, genus)


def run_solve(cfg: RunConfig, out: Path, verbose: bool = False) -> Outcome:
    out.mkdir(parents=True, exist_ok=True)
    D = cfg.parsed_divisor() if cfg.divisor else None
    if D is None:
        raise ConfigError("solve needs a non-empty divisor")
    N = D.degree
    grid = cfg.make_grid()
    H = higgs_norm(D, grid)
    mode = _resolve_mode(cfg)
    lines = [f"mode {mode}"]
    log = sys.stderr if verbose else False
    try:
        if mode == "vortex":
            sol = solve_vortex(grid, H, cfg.tau, cfg.tol, cfg.max_iter, degree=N, verbose=log)
            states = [GravSolveState(sol.f, grid.constant(0.0), 0.0, (sol.residual_sup, 0.0))]
        elif mode == "continuity":
            states = solve_continuity(grid, H, cfg.tau, cfg.alpha, cfg.tol, degree=N, dt0=cfg.dt0,
                                      min_step=cfg.min_step, max_steps=cfg.max_steps, verbose=log)
        elif mode == "einstein_bogomolnyi":
            if cfg.surface != "sphere":
                raise ConfigError("the Einstein-Bogomol'nyi mode needs the sphere")
            states = [solve_einstein_bogomolnyi_sphere(D, cfg.tau, cfg.tol, grid, max_iter=cfg.max_iter)]
        else:
            raise ConfigError(f"mode {mode!r} does not apply")
    except NonConvergence as exc:
        lines.append(f"status nonconvergence: {exc}")
        cert = futaki_certificate(D, cfg.tau) if classify_divisor(D) is StabilityClass.UNSTABLE else None
        if cert is not None:
            lines.append(f"futaki_certificate {_fmt_complex(cert)} nonzero")
        (out / "report.txt").write_text("\n".join(lines) + "\n")
        return Outcome(EXIT_NONCONVERGENCE, lines)
    except KahlerPositivityLost as exc:
        lines.append(f"status kahler positivity lost: {exc}")
        (out / "report.txt").write_text("\n".join(lines) + "\n")
        return Outcome(EXIT_NONCONVERGENCE, lines)
    except StepUnderflow as exc:
        lines.append(f"status step underflow: {exc} (last t {exc.last_t:.12e})")
        if exc.states:
            write_path_log(out / "path.txt", exc.states)
        (out / "report.txt").write_text("\n".join(lines) + "\n")
        return Outcome(EXIT_UNDERFLOW, lines)

    final = states[-1]
    params = _state_params(cfg, mode, N, final.t)
    write_field(out / "f.txt", grid, final.f, "f")
    write_field(out / "v.txt", grid, final.v, "v")
    write_path_log(out / "path.txt", states)
    report = audit_state(final, params, grid, H, tol=cfg.tol, seed=cfg.seed)
    (out / "audit.txt").write_text(report.to_text())
    lines.append("status converged")
    lines.append(f"t {final.t:.12e}")
    lines.append(f"residuals {final.residuals[0]:.6e} {final.residuals[1]:.6e}")
    lines.append(f"audit {'PASS' if report.passed else 'FAIL ' + ','.join(report.failures())}")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    return Outcome(EXIT_OK, lines)


def cmd_solve(cfg: RunConfig, verbose: bool = False) -> Outcome:
    return run_solve(cfg, Path(cfg.out), verbose)


def _sweep_job(args) -> tuple[float, int, list[str]]:
    text, value, out = args
    cfg = RunConfig.from_json(text)
    outcome = run_solve(cfg, Path(out))
    return value, outcome.code, outcome.lines


def cmd_sweep(cfg: RunConfig) -> Outcome:
    if cfg.sweep_param is None or not cfg.sweep_values:
        raise ConfigError("sweep needs sweep_param and sweep_values")
    root = Path(cfg.out)
    root.mkdir(parents=True, exist_ok=True)
    jobs = []
    for k, value in enumerate(cfg.sweep_values):
        run_dir = root / f"run_{k:03d}"
        sub = dataclasses.replace(cfg, command="solve", sweep_param=None, sweep_values=(),
                                  out=str(run_dir), **{cfg.sweep_param: float(value)})
        jobs.append((sub.to_json(), float(value), str(run_dir)))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    table = [f"# {cfg.sweep_param} exit_code status"]
    for value, code, lines in results:
        status = next((ln.split(" ", 1)[1] for ln in lines if ln.startswith("status")), "")
        table.append(f"{value:.12e} {code} {status.split(':')[0]}")
    (root / "sweep.txt").write_text("\n".join(table) + "\n")
    code = max(code for _, code, _ in results)
    return Outcome(code, table)


def cmd_audit(cfg: RunConfig) -> Outcome:
    out = Path(cfg.out)
    if not (out / "f.txt").exists() or not (out / "v.txt").exists():
        raise ConfigError(f"no solved fields in {out}; run 'solve' first")
    D = cfg.parsed_divisor()
    grid = cfg.make_grid()
    meta_f, f = read_field(out / "f.txt")
    _, v = read_field(out / "v.txt")
    if tuple(meta_f["resolution"]) != grid.shape:
        raise ConfigError("stored fields do not match the configured grid")
    mode = _resolve_mode(cfg)
    N = D.degree
    t = 1.0 / (cfg.tau * N) if mode == "einstein_bogomolnyi" else (cfg.alpha if mode == "continuity" else 0.0)
    params = _state_params(cfg, mode, N, t)
    state = GravSolveState(f, v, t, (np.nan, np.nan))
    report = audit_state(state, params, grid, higgs_norm(D, grid), tol=cfg.tol, seed=cfg.seed)
    (out / "audit.txt").write_text(report.to_text())
    return Outcome(EXIT_OK if report.passed else EXIT_NONCONVERGENCE, report.to_text().splitlines())


COMMANDS = {
    "classify": cmd_classify,
    "futaki": cmd_futaki,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
}


def manifest(cfg: RunConfig, outcome: Outcome) -> dict:
    return {
        "config": cfg.to_dict(),
        "exit_code": outcome.code,
        "versions": {
            "gravvortex": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "total_area": "2*pi",
    }


def execute(cfg: RunConfig, verbose: bool = False) -> Outcome:
    """Run one command and write its manifest; never raises on a valid config."""
    try:
        if cfg.command == "solve":
            outcome = cmd_solve(cfg, verbose)
        else:
            outcome = COMMANDS[cfg.command](cfg)
    except PreconditionError as exc:
        return Outcome(EXIT_INPUT, [f"error {exc}"])
    except GravVortexError as exc:
        outcome = Outcome(EXIT_NONCONVERGENCE, [f"error {exc}"])
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest(cfg, outcome), indent=2, sort_keys=True) + "\n")
    return outcome


# ---------------------------------------------------------------------------
# click front end


def _load_config(command: str, config_path, overrides: dict) -> RunConfig:
    data: dict = {}
    if config_path is not None:
        try:
            data = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
    data["command"] = command
    for key, value in overrides.items():
        if value is not None:
            data[key] = json.loads(value) if key == "divisor" else value
    return RunConfig.from_dict(data)


def _common(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Flat JSON run configuration."),
        click.option("--out", type=str, default=None, help="Output directory."),
        click.option("--tol", type=float, default=None, help="Residual tolerance."),
        click.option("--seed", type=int, default=None, help="Seed for sampled audit directions."),
        click.option("--verbose", is_flag=True, help="Stream Newton residuals to stderr."),
        click.option("--divisor", type=str, default=None, help='JSON list, e.g. \'[{"point": "0", "multiplicity": 2}]\'.'),
        click.option("--tau", type=float, default=None),
        click.option("--alpha", type=float, default=None),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _run(command: str, config_path, verbose: bool, **overrides) -> None:
    try:
        cfg = _load_config(command, config_path, overrides)
    except (PreconditionError, json.JSONDecodeError) as exc:
        click.echo(f"error {exc}", err=True)
        sys.exit(EXIT_INPUT)
    outcome = execute(cfg, verbose)
    for line in outcome.lines:
        click.echo(line, err=outcome.code == EXIT_INPUT)
    sys.exit(outcome.code)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Vortices and gravitating vortices on the torus and the sphere."""


@main.command()
@_common
def classify(config_path, verbose, **kw):
    """Stability class, Hilbert-Mumford exponent and Futaki value of a divisor."""
    _run("classify", config_path, verbose, **kw)


@main.command()
@_common
def solve(config_path, verbose, **kw):
    """Solve the vortex, continuity or Einstein-Bogomol'nyi problem."""
    _run("solve", config_path, verbose, **kw)


@main.command()
@_common
@click.option("--N", "degree", type=int, default=None)
@click.option("--l", "exponent", type=int, default=None)
def futaki(config_path, verbose, **kw):
    """Closed form and quadrature of the Futaki invariant on the sphere."""
    _run("futaki", config_path, verbose, **kw)


@main.command()
@_common
def sweep(config_path, verbose, **kw):
    """Independent solves over a list of tau or alpha values."""
    _run("sweep", config_path, verbose, **kw)


@main.command()
@_common
def audit(config_path, verbose, **kw):
    """Re-audit the fields stored by a previous solve in --out."""
    _run("audit", config_path, verbose, **kw)


if __name__ == "__main__":  # pragma: no cover
    main()
