"""
Command-line front end.

    ionscope pattern --n 4 --spacing 5.75 --isotope 1 --order 2 --slice grid2d --points 201
    ionscope search  --n 4 --spacing 5.75 --isotope 2 --slice offset-mag --schedule 50,200,1000
    ionscope verify  --json report.json

Angles and offsets are in radians. The offset 1/pi is the default for
``offset-mag``; pass it as 0.3183098861837907 to spell it out.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, fields
from typing import Any, Optional, Sequence

from .correlations import pattern_over_slice
from .errors import ConfigurationError, IonscopeError
from .geometry import (
    DEFAULT_GRID_POINTS,
    DEFAULT_SCAN_POINTS,
    HALF_PI,
    ExcitationPulse,
    FixedSecond,
    FixedSinDelta,
    Grid2D,
    IonChain,
    OffsetMagnitude,
    OppositeScan,
    Pattern,
    SliceSpec,
)
from .inference import (
    classical_search_sim,
    expected_classical_probes,
    run_search_experiment,
)
from .sampling import normalize, sample_events

SLICE_CHOICES = ("grid2d", "fixed-second", "opposite", "offset-mag", "fixed-sindelta")
_PULSE_RE = re.compile(r"^\s*(?:(?P<num>[0-9.eE+-]+)\s*\*\s*)?pi\s*(?:/\s*(?P<den>[0-9.eE+-]+))?\s*$")


def parse_pulse(text) -> float:
    """Pulse area in radians; accepts numbers and ``pi``, ``pi/2``, ``0.5*pi``."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _PULSE_RE.match(str(text))
    if m:
        num = float(m.group("num") or 1.0)
        den = float(m.group("den") or 1.0)
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"cannot parse pulse area {text!r}") from None


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


@dataclass
class RunConfig:
    """Everything a subcommand needs; JSON config files use the same field names."""

    command: str
    n: Optional[int] = None
    spacing: Optional[float] = None
    positions: Optional[list[float]] = None
    chain_file: Optional[str] = None
    isotope: Optional[int] = None
    order: int = 2
    pulse: Any = "pi"
    slice: str = "fixed-second"
    phi2: float = 0.0
    offset: float = 1 / math.pi
    delta: float = 0.378
    points: Optional[int] = None
    phi_min: float = -HALF_PI
    phi_max: float = HALF_PI
    events: Optional[int] = None
    schedule: Any = (50, 200, 1000)
    trials: int = 200
    seed: int = 0
    out: Optional[str] = None
    json: Optional[str] = None
    classical_only: bool = False

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def build_chain(self) -> IonChain:
        sources = [self.chain_file is not None, self.positions is not None,
                   self.n is not None or self.spacing is not None]
        if sum(sources) != 1:
            raise ConfigurationError("give exactly one chain source: --chain-file, --positions, or --n with --spacing")
        if self.chain_file is not None:
            chain = IonChain.from_json(self.chain_file)
            return chain if self.isotope is None else chain.with_isotope(self.isotope)
        if self.positions is not None:
            return IonChain(tuple(_float_list(self.positions)), self.isotope)
        if self.n is None or self.spacing is None:
            raise ConfigurationError("--n and --spacing must be given together")
        return IonChain.equally_spaced(self.n, self.spacing, self.isotope)

    def build_pulse(self) -> ExcitationPulse:
        return ExcitationPulse(parse_pulse(self.pulse))

    def build_slice(self) -> SliceSpec:
        kind = self.slice
        if kind == "grid2d":
            return Grid2D(self.phi_min, self.phi_max, self.points or DEFAULT_GRID_POINTS)
        rng = {"lo": self.phi_min, "hi": self.phi_max, "n_points": self.points or DEFAULT_SCAN_POINTS}
        if kind == "fixed-second":
            return FixedSecond(self.phi2, **rng)
        if kind == "opposite":
            return OppositeScan(**rng)
        if kind == "offset-mag":
            return OffsetMagnitude(self.offset, **rng)
        if kind == "fixed-sindelta":
            return FixedSinDelta(self.delta, **rng)
        raise ConfigurationError(f"unknown slice {kind!r}; choose from {', '.join(SLICE_CHOICES)}")

    def validate(self):
        """Build every object the command will use, raising on the first violated invariant."""
        if self.command not in ("pattern", "search", "verify"):
            raise ConfigurationError(f"unknown command {self.command!r}")
        if self.command == "verify":
            return
        if self.order not in (1, 2):
            raise ConfigurationError(f"order must be 1 or 2, got {self.order!r}")
        self.build_chain()
        self.build_pulse()
        self.build_slice()
        if self.command == "search" and self.trials < 1:
            raise ConfigurationError("--trials must be >= 1")
        if self.events is not None and self.events < 0:
            raise ConfigurationError("--events must be >= 0")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def pattern_csv(pattern: Pattern) -> str:
    """CSV text: ``phi1,phi2,value`` (order 2) or ``phi1,value`` (order 1)."""
    values = pattern.flat_values
    if pattern.order == 1:
        lines = ["phi1,value"]
        lines += [f"{_fmt(a)},{_fmt(v)}" for a, v in zip(pattern.pairs[:, 0].tolist(), values.tolist())]
    else:
        lines = ["phi1,phi2,value"]
        lines += [f"{_fmt(a)},{_fmt(b)},{_fmt(v)}"
                  for (a, b), v in zip(pattern.pairs.tolist(), values.tolist())]
    return "\n".join(lines) + "\n"


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_pattern(cfg: RunConfig) -> int:
    chain = cfg.build_chain()
    pattern = pattern_over_slice(cfg.order, chain, cfg.build_pulse(), cfg.build_slice())
    _write(cfg.out, pattern_csv(pattern))
    if cfg.events is not None:
        dist = normalize(pattern)
        events = sample_events(dist, cfg.events, cfg.seed)
        _write(cfg.json, json.dumps(events.to_dict()) + "\n")
    return 0


def cmd_search(cfg: RunConfig) -> int:
    chain = cfg.build_chain()
    if cfg.classical_only:
        report = {
            "n": chain.n,
            "spacing_lambda": chain.spacing,
            "n_trials": cfg.trials,
            "classical_mean_probes": classical_search_sim(chain.n, cfg.trials, cfg.seed),
            "master_seed": cfg.seed,
        }
        m95 = None
    else:
        if chain.isotope is None:
            raise ConfigurationError("search needs --isotope (the true isotope position)")
        result = run_search_experiment(
            chain, cfg.build_slice(), chain.isotope, _int_list(cfg.schedule), cfg.trials, cfg.seed,
            order=cfg.order, pulse=cfg.build_pulse(),
        )
        report = result.to_dict()
        m95 = result.m_at_95
    text = json.dumps(report, indent=2) + "\n"
    summary = (f"m_at_95={m95}  classical_mean_probes={report['classical_mean_probes']}"
               f"  (expected {expected_classical_probes(chain.n):.6g})")
    target = cfg.out or cfg.json
    if target is None or target == "-":
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    else:
        _write(target, text)
        print(summary)
    return 0


def cmd_verify(perturb: float = 0.0, json_path: Optional[str] = None) -> int:
    from .verify import run_checks

    results = run_checks(perturb)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    if json_path:
        doc = {"passed": ok, "perturb": perturb, "checks": [r.to_dict() for r in results]}
        _write(json_path, json.dumps(doc, indent=2) + "\n")
    return 0 if ok else 1


def _add_chain_args(p):
    g = p.add_argument_group("chain")
    g.add_argument("--n", type=int, help="number of ions (equally spaced chain)")
    g.add_argument("--spacing", type=float, help="ion spacing in wavelengths")
    g.add_argument("--positions", help="comma-separated ion positions in wavelengths")
    g.add_argument("--chain-file", dest="chain_file", help="JSON chain document")
    g.add_argument("--isotope", type=int, help="1-based index of the dark ion")


def _add_slice_args(p):
    g = p.add_argument_group("slice")
    g.add_argument("--slice", choices=SLICE_CHOICES)
    g.add_argument("--phi2", type=float, help="second-detector angle for fixed-second")
    g.add_argument("--offset", type=float, help="|phi1|-|phi2| for offset-mag (default 1/pi)")
    g.add_argument("--delta", type=float, help="sin(phi1)-sin(phi2) for fixed-sindelta")
    g.add_argument("--points", type=int, help=f"scan points (default {DEFAULT_SCAN_POINTS}; grid2d {DEFAULT_GRID_POINTS} per axis)")
    g.add_argument("--phi-min", dest="phi_min", type=float, help="lower end of the scan range")
    g.add_argument("--phi-max", dest="phi_max", type=float, help="upper end of the scan range")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ionscope", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="write a G1/G2 pattern as CSV")
    p.add_argument("--config", help="JSON run config; explicit flags override it")
    _add_chain_args(p)
    _add_slice_args(p)
    p.add_argument("--order", type=int, choices=(1, 2))
    p.add_argument("--pulse", help="pulse area in radians; 'pi', 'pi/2' accepted")
    p.add_argument("--events", type=int, help="also draw this many events from the normalized pattern")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--json", help="event-set JSON path when --events is given (default stdout)")

    s = sub.add_parser("search", help="run a seeded isotope-search experiment")
    s.add_argument("--config", help="JSON run config; explicit flags override it")
    _add_chain_args(s)
    _add_slice_args(s)
    s.add_argument("--order", type=int, choices=(1, 2))
    s.add_argument("--pulse")
    s.add_argument("--schedule", help="ascending comma-separated event counts")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    s.add_argument("--classical-only", dest="classical_only", action="store_true", default=None,
                   help="only simulate the one-by-one probe baseline (allows N=2)")
    s.add_argument("--out", help="JSON report path")
    s.add_argument("--json", help="alias of --out")

    v = sub.add_parser("verify", help="run oracle equivalences and invariant checks")
    v.add_argument("--json", help="write a machine-readable report")
    v.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _config_from_args(args) -> RunConfig:
    doc: dict[str, Any] = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = json.load(fh)
        if doc.get("command", args.command) != args.command:
            raise ConfigurationError(f"config is for {doc['command']!r}, not {args.command!r}")
    doc["command"] = args.command
    for key, value in vars(args).items():
        if key in ("config", "command", "perturb") or value is None:
            continue
        doc[key] = value
    cfg = RunConfig.from_dict(doc)
    cfg.validate()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.perturb, args.json)
        cfg = _config_from_args(args)
        if cfg.command == "pattern":
            return cmd_pattern(cfg)
        return cmd_search(cfg)
    except (IonscopeError, ValueError, OSError) as exc:
        print(f"ionscope: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
