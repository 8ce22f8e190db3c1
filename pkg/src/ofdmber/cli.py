"""Command-line front end: channel management, enumeration, analysis, simulation.

Exit codes: 0 ok, 2 configuration error, 3 numerical diagnostic failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import channel as chan
from .average_ber import QuadratureConfig, shadowed_average_ber_method2
from .config import ExperimentConfig, load_experiment
from .convcode import enumerate_error_vectors
from .errors import ConfigError, NumericalDiagnosticError
from .interference import calibrate_sir, phase_grid, tones_to_freq
from .modem import QamConstellation
from .presets import CHANNEL_SET_SEEDS, code_preset, load_code_config, sv_preset
from .realization_ber import RealizationEvaluator, outage_ber
from .results import append_rows, completed_keys, make_row, read_table, row_key, write_table
from .simulator import StopRule, erased_tone_set, simulate_point
from .system import SystemSpec

__all__ = ["main", "run_experiment"]


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalDiagnosticError as exc:
        print(f"numerical diagnostic failure: {exc}", file=sys.stderr)
        return 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ofdmber")
    sub = p.add_subparsers(required=True)

    g = sub.add_parser("gen-channels", help="generate a fixed-seed channel set")
    g.add_argument("--model", default="cm1")
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--seed", type=int)
    g.add_argument("--named", help=f"named set, one of {sorted(CHANNEL_SET_SEEDS)}")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_channels)

    e = sub.add_parser("estimate-corr", help="estimate the tone correlation matrix")
    e.add_argument("--channels", help="channel-set .npz (else generate)")
    e.add_argument("--model", default="cm1")
    e.add_argument("--count", type=int, default=2000)
    e.add_argument("--seed", type=int, default=7)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_estimate_corr)

    n = sub.add_parser("enumerate", help="enumerate simple error events")
    n.add_argument("--preset", default="mbofdm-r12")
    n.add_argument("--code-file", help="YAML code definition instead of a preset")
    n.add_argument("--wmax", type=int, required=True)
    n.add_argument("--weight-on", choices=("output", "input"), default="output")
    n.set_defaults(func=_cmd_enumerate)

    a = sub.add_parser("analyze", help="run an analysis experiment config")
    a.add_argument("config")
    a.add_argument("--method", choices=("1", "2", "sim"))
    a.add_argument("--outage", type=float)
    a.add_argument("--phases", type=int)
    a.add_argument("--erasures", type=int)
    a.set_defaults(func=_cmd_analyze)

    s = sub.add_parser("simulate", help="run a simulation experiment config")
    s.add_argument("config")
    s.set_defaults(func=_cmd_simulate)

    x = sub.add_parser("export", help="convert a result table between formats")
    x.add_argument("table")
    x.add_argument("--to", choices=("csv", "jsonl"), required=True)
    x.add_argument("--out", required=True)
    x.set_defaults(func=_cmd_export)

    d = sub.add_parser("dump-constellation", help="print labeling test vectors")
    d.add_argument("--M", type=int, default=4)
    d.add_argument("--energy", type=float, default=1.0)
    d.set_defaults(func=_cmd_dump_constellation)
    return p


def _cmd_gen_channels(args) -> int:
    if args.named:
        if args.named not in CHANNEL_SET_SEEDS:
            raise ConfigError(f"unknown named set {args.named!r}")
        seed, count = CHANNEL_SET_SEEDS[args.named], 100
    elif args.seed is not None:
        seed, count = args.seed, args.count
    else:
        raise ConfigError("need --seed or --named")
    params = sv_preset(args.model)
    reals = chan.generate_realizations(params, chan.BandPlan(), count, seed)
    chan.save_channel_set(args.out, reals)
    print(f"wrote {count} realizations to {args.out}")
    return 0


def _cmd_estimate_corr(args) -> int:
    if args.channels:
        reals = chan.load_channel_set(args.channels)
    else:
        params = sv_preset(args.model)
        reals = chan.generate_realizations(params, chan.BandPlan(), args.count, args.seed)
    corr = chan.estimate_correlation(reals)
    chan.save_correlation(args.out, corr)
    print(f"wrote {corr.n_tones}x{corr.n_tones} correlation "
          f"({corr.sample_count} samples) to {args.out}")
    return 0


def _cmd_enumerate(args) -> int:
    code = load_code_config(args.code_file) if args.code_file else code_preset(args.preset)
    events = enumerate_error_vectors(code, args.wmax, weight_on=args.weight_on)
    print(f"code={code.name or 'custom'} rate={code.rate} w_max={args.wmax} "
          f"({args.weight_on} weight)")
    print(f"L={events.L} max_length={events.max_length} min_weight={events.min_weight}")
    return 0


def _cmd_analyze(args) -> int:
    cfg = load_experiment(args.config)
    if args.method:
        cfg.method = args.method
    if args.outage is not None:
        cfg.outage_percent = args.outage
    if args.phases is not None:
        cfg.phases = args.phases
    if args.erasures is not None:
        cfg.erasures = [args.erasures]
    cfg.validate()
    rows = run_experiment(cfg)
    print(f"{len(rows)} rows -> {cfg.output}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_experiment(args.config)
    cfg.method = "sim"
    cfg.validate()
    rows = run_experiment(cfg)
    print(f"{len(rows)} rows -> {cfg.output}")
    return 0


def _cmd_export(args) -> int:
    rows = read_table(args.table)
    write_table(args.out, rows, args.to)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_dump_constellation(args) -> int:
    const = QamConstellation(M=args.M, energy=args.energy)
    rm = const.bits_per_symbol
    for code in range(const.M):
        bits = format(code, f"0{rm}b")
        pt = const.points[code]
        print(f"{bits} {pt.real:+.12f} {pt.imag:+.12f}")
    return 0


# ---------------------------------------------------------------------------
# experiment orchestration
# ---------------------------------------------------------------------------


def _load_channels(cfg: ExperimentConfig):
    if cfg.channel_file:
        return chan.load_channel_set(cfg.channel_file)
    params = sv_preset(cfg.channel_model)
    return chan.generate_realizations(
        params, cfg.system.plan, cfg.channel_count, cfg.channel_seed
    )


def _load_correlation(cfg: ExperimentConfig):
    if cfg.correlation_file:
        return chan.load_correlation(cfg.correlation_file)
    params = sv_preset(cfg.channel_model)
    reals = chan.generate_realizations(
        params, cfg.system.plan, cfg.correlation_count, cfg.correlation_seed
    )
    return chan.estimate_correlation(reals)


def _cells(cfg: ExperimentConfig):
    positions = cfg.positions or [None]
    sirs = cfg.sir_db or [math.inf]
    for pos in positions:
        for sir in sirs:
            for er in cfg.erasures:
                yield pos, sir, er


def _cell_interference(cfg, pos, sir):
    """Calibrated spec for one sweep cell, or None without interference."""
    if not cfg.has_interference() or pos is None:
        return None
    spec = cfg.tone_spec(pos, sir, phase=0.0)
    return calibrate_sir(spec, cfg.system.plan, cfg.system.symbol_energy)


def _row_seed(cfg, *parts) -> list:
    out = [cfg.seed]
    for p in parts:
        out.append(int(round(float(p) * 4096.0)) & 0x7FFFFFFF)
    return out


def run_experiment(cfg: ExperimentConfig) -> list:
    """Compute all grid rows, appending to the output as cells complete.

    Already-present rows (matched by key) are skipped, so an interrupted run
    resumes where it stopped.
    """
    done = completed_keys(cfg.output)
    if cfg.method == "1":
        _run_method1(cfg, done)
    elif cfg.method == "2":
        _run_method2(cfg, done)
    else:
        _run_sim(cfg, done)
    return read_table(cfg.output, "csv")


def _run_method1(cfg: ExperimentConfig, done) -> None:
    system = cfg.system
    reals = _load_channels(cfg)
    n0_grid = [float(system.n0_from_ebn0_db(x)) for x in cfg.ebn0_db]
    for pos, sir, er in _cells(cfg):
        base_spec = _cell_interference(cfg, pos, sir)
        phases = phase_grid(cfg.phases) if base_spec is not None else [0.0]
        rows = []
        # values[phase][channel] per grid point
        values = np.zeros((len(phases), len(reals), len(cfg.ebn0_db)))
        for ci, real in enumerate(reals):
            rng = np.random.default_rng(_row_seed(cfg, ci, pos or 0, sir, er))
            ev = RealizationEvaluator(
                system, _events_for(cfg), c=None if cfg.codeword_draws else None,
                rng=rng,
            )
            for pi, phase in enumerate(phases):
                if base_spec is None:
                    J, erased = None, ()
                else:
                    fi = tones_to_freq(base_spec.with_phase(phase), system.plan)
                    J = fi.J
                    erased = erased_tone_set(fi, er) if er else ()
                values[pi, ci] = ev.ber_curve(real.h, n0_grid, J=J, erased=erased)
        for ci in range(len(reals)):
            for gi, ebn0 in enumerate(cfg.ebn0_db):
                rows.append(make_row(
                    "1", ci, ebn0, values[:, ci, gi].mean(), sir_db=sir,
                    position=pos, phase=-1, erasures=er,
                ))
        for gi, ebn0 in enumerate(cfg.ebn0_db):
            rows.append(make_row(
                "1", "mean", ebn0, values[:, :, gi].mean(), sir_db=sir,
                position=pos, phase=-1, erasures=er,
            ))
            if cfg.outage_percent is not None:
                per_phase = [
                    outage_ber(list(values[pi, :, gi]), cfg.outage_percent).outage_ber
                    for pi in range(len(phases))
                ]
                rows.append(make_row(
                    "1", f"outage{cfg.outage_percent:g}", ebn0,
                    float(np.mean(per_phase)), sir_db=sir, position=pos,
                    phase=-1, erasures=er,
                ))
        append_rows(cfg.output, [r for r in rows if row_key(r) not in done])
        done.update(row_key(r) for r in rows)


_EVENTS_CACHE = {}


def _events_for(cfg: ExperimentConfig, w_max: int = 14):
    key = (cfg.system.code.name, cfg.system.code.generators,
           cfg.system.code.puncture, cfg.system.code.repetition_factor, w_max)
    if key not in _EVENTS_CACHE:
        _EVENTS_CACHE[key] = enumerate_error_vectors(cfg.system.code, w_max)
    return _EVENTS_CACHE[key]


def _run_method2(cfg: ExperimentConfig, done) -> None:
    system = cfg.system
    corr = _load_correlation(cfg)
    events = _events_for(cfg)
    for pos, sir, er in _cells(cfg):
        spec = _cell_interference(cfg, pos, sir)
        fi = tones_to_freq(spec, system.plan) if spec is not None else None
        erased = tuple(erased_tone_set(fi, er)) if (fi is not None and er) else ()
        rng = np.random.default_rng(_row_seed(cfg, cfg.codeword_seed, pos or 0, sir, er))
        vals = shadowed_average_ber_method2(
            system, events, corr.sigma, cfg.ebn0_db, cfg.shadow_std_db,
            interference=fi, erased=erased, rng=rng,
        )
        rows = [
            make_row("2", "ensemble", ebn0, float(v), sir_db=sir, position=pos,
                     phase=-1, erasures=er)
            for ebn0, v in zip(cfg.ebn0_db, vals)
        ]
        append_rows(cfg.output, [r for r in rows if row_key(r) not in done])
        done.update(row_key(r) for r in rows)


def _run_sim(cfg: ExperimentConfig, done) -> None:
    system = cfg.system
    reals = _load_channels(cfg)
    stop = StopRule(
        min_errors=cfg.sim_min_errors,
        max_packets=cfg.sim_max_packets,
        batch=cfg.sim_batch,
    )
    for pos, sir, er in _cells(cfg):
        base_spec = _cell_interference(cfg, pos, sir)
        phases = phase_grid(cfg.phases) if base_spec is not None else [0.0]
        for ci, real in enumerate(reals):
            rows = []
            for pi, phase in enumerate(phases):
                spec = base_spec.with_phase(phase) if base_spec is not None else None
                for ebn0 in cfg.ebn0_db:
                    row = make_row(
                        "sim", ci, ebn0, 0.0, sir_db=sir, position=pos,
                        phase=pi if base_spec is not None else -1, erasures=er,
                    )
                    if row_key(row) in done:
                        continue
                    rng = np.random.default_rng(
                        _row_seed(cfg, ci, pos or 0, sir, er, pi, ebn0)
                    )
                    pt = simulate_point(
                        system, real.h, ebn0, rng, spec=spec, stop=stop, n_erase=er
                    )
                    row.update(ber=pt.ber, errors=pt.errors, bits=pt.bits,
                               flagged=pt.flagged)
                    rows.append(row)
            append_rows(cfg.output, rows)
            done.update(row_key(r) for r in rows)
