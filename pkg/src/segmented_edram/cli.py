"""Command-line front end.

    python -m segmented_edram calibrate   [--config PATH] [--out DIR]
    python -m segmented_edram simulate    [--scenario NAME|all] [--model NAME|all]
    python -m segmented_edram sweep       --param {t_rel,kv_ratio,ber_target} --start A --stop B [--num N]
    python -m segmented_edram inject-demo [--seed N]

Exit status: 0 success, 2 invalid arguments or config, 3 runtime failure
(including a failed post-hoc audit of emitted reductions).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bf16, energy
from .attention import AttentionWeights, run_with_faults
from .config import ConfigError, SimConfig
from .faults import binomial_band
from .workload import HEADLINE_BAND, WorkspaceState, run_trace, scenario_table

log = logging.getLogger("segmented_edram")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3

TRACE_COLUMNS = [
    "step", "b_kv", "b_qo", "p_base", "p_kelle", "p_shield",
    "eta_closed_form", "eta_total", "gain_kelle", "gain_shield",
]
SWEEP_COLUMNS = [
    "parameter", "value", "kv_ratio", "t_rel_us", "ber",
    "eta_closed_form", "eta_total", "gain_kelle", "gain_shield", "gain_kelle_refresh", "gain_shield_refresh",
]
AUDIT_TOL = 1e-9


class AuditError(RuntimeError):
    pass


def _write_csv(path: Path, columns: list[str], rows: list[dict], config_hash: str) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# config_sha256={config_hash}\n")
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _write_json(path: Path, payload: dict, config_hash: str) -> None:
    payload = {"config_sha256": config_hash, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def audit_eta(rows: list[dict], t_std: float, t_rel_key: str | float) -> None:
    """Recompute each emitted leakage-free reduction in rational arithmetic."""
    for row in rows:
        t_rel = row[t_rel_key] if isinstance(t_rel_key, str) else t_rel_key
        if "kv_ratio" in row:
            kv = Fraction(row["kv_ratio"])
        else:
            kv = Fraction(row["b_kv"]) / (Fraction(row["b_kv"]) + Fraction(row["b_qo"]))
        exact = energy.eta_exact(kv, Fraction(t_std), Fraction(t_rel))
        if abs(float(exact) - row["eta_closed_form"]) > AUDIT_TOL:
            raise AuditError(f"eta audit failed at {row}: closed form gives {float(exact)!r}")


# -- calibrate ---------------------------------------------------------------


def cmd_calibrate(cfg: SimConfig) -> dict:
    curve = cfg.curve()
    ref = cfg.raw["refresh"]
    t_std, t_rel = float(ref["t_std_us"]), float(ref["t_rel_us"])
    anchors = cfg.anchors()
    anchor_checks = []
    for a in anchors:
        got = curve.ber_at(a.t)
        anchor_checks.append(
            {"t_us": a.t, "ber_target": a.ber, "ber_fitted": got, "rel_residual": abs(got - a.ber) / a.ber}
        )
    kelle_ber = float(ref["kelle_ber"])
    t_kelle = curve.interval_for_ber(kelle_ber)

    constants = cfg.constants()
    cal = cfg.raw["calibration"]
    kv = float(cal["kv_ratio"])
    w = WorkspaceState.from_ratio(kv)
    achieved = energy.gain(energy.baseline_power(constants, t_std), energy.shield_power(constants, w, t_std, t_rel))
    report = {
        "retention_curve": {"mu_ln_us": curve.mu, "sigma": curve.sigma},
        "anchors": anchor_checks,
        "ber_at_t_std": curve.ber_at(t_std),
        "ber_at_t_rel": curve.ber_at(t_rel),
        "kelle": {"ber_target": kelle_ber, "t_kelle_us": t_kelle, "ber_residual": abs(curve.ber_at(t_kelle) - kelle_ber) / kelle_ber},
        "refresh_energy": {
            "e_ref_cycle_j": constants.e_ref_cycle,
            "calibrated": cfg.raw["array"]["e_ref_cycle_j"] is None,
            "target_gain": float(cal["target_gain"]),
            "kv_ratio": kv,
            "achieved_gain": achieved,
            "gain_residual": abs(achieved - float(cal["target_gain"])),
            "leakage_free_ceiling": energy.max_gain(constants.p_leak, kv, t_std, t_rel),
        },
        "destiny": {
            "sram_leak_w": energy.SRAM_LEAK_2MB_W,
            "edram_leak_w": energy.EDRAM_LEAK_2MB_W,
            "sram_to_edram_leakage": energy.SRAM_LEAK_2MB_W / energy.EDRAM_LEAK_2MB_W,
        },
    }
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out / "calibration.json", report, cfg.hash)
    print(
        f"retention: mu={curve.mu:.6f} sigma={curve.sigma:.6f}  "
        f"max anchor residual={max(a['rel_residual'] for a in anchor_checks):.2e}\n"
        f"T_kelle(BER={kelle_ber:g}) = {t_kelle:.3f} us\n"
        f"E_ref_cycle = {constants.e_ref_cycle * 1e9:.4f} nJ  (gain {achieved:.6f})"
    )
    return report


# -- simulate ----------------------------------------------------------------


def _trace_rows(trace) -> list[dict]:
    rows = []
    for st in trace.steps:
        r = st.report
        rows.append(
            {
                "step": st.step,
                "b_kv": int(st.workspace.b_kv),
                "b_qo": int(st.workspace.b_qo),
                "p_base": r.p_base,
                "p_kelle": r.p_kelle,
                "p_shield": r.p_shield,
                "eta_closed_form": r.eta_closed_form,
                "eta_total": r.eta_total,
                "gain_kelle": r.gain_kelle,
                "gain_shield": r.gain_shield,
            }
        )
    return rows


def cmd_simulate(cfg: SimConfig, model: str | None = None, scenario: str | None = None) -> dict:
    models = cfg.select_models(model)
    scenarios = cfg.select_scenarios(scenario)
    constants, intervals, scope = cfg.constants(), cfg.intervals(), cfg.scope()
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    summaries = {}
    for mkey, m in models.items():
        for skey, s in scenarios.items():
            trace = run_trace(m, s, constants, intervals, scope)
            rows = _trace_rows(trace)
            audit_eta(rows, intervals.t_std, intervals.t_rel)
            _write_csv(out / f"trace_{mkey}_{skey}.csv", TRACE_COLUMNS, rows, cfg.hash)
            summary = {
                "model": mkey,
                "scenario": skey,
                "prefill_tokens": s.prefill_tokens,
                "decode_tokens": s.decode_tokens,
                "intervals_us": {"t_std": intervals.t_std, "t_rel": intervals.t_rel, "t_kelle": intervals.t_kelle},
                "e_ref_cycle_j": constants.e_ref_cycle,
                "p_leak_w": constants.p_leak,
                "aggregate": trace.aggregate,
                "headline_band": list(HEADLINE_BAND),
            }
            _write_json(out / f"summary_{mkey}_{skey}.json", summary, cfg.hash)
            summaries[(mkey, skey)] = summary
            agg = trace.aggregate
            print(
                f"{mkey:12s} {skey:13s} gain kelle={agg['gain_kelle']:.4f} shield={agg['gain_shield']:.4f}  "
                f"eta refresh={agg['eta_refresh_only']:.4f} leak-incl={agg['eta_leakage_inclusive']:.4f} "
                f"weighted={agg['eta_lifecycle_weighted']:.4f}"
            )
    if scenario == "all":
        table = scenario_table(models, scenarios, constants, intervals, scope)
        cols = list(table[0])
        _write_csv(out / "gain_table.csv", cols, table, cfg.hash)
        _write_json(out / "gain_table.json", {"rows": table}, cfg.hash)
    return summaries


# -- sweep -------------------------------------------------------------------

SWEEP_PARAMS = ("t_rel", "kv_ratio", "ber_target")


def sweep_values(start: float, stop: float, num: int, log_spaced: bool = False) -> np.ndarray:
    if num < 1:
        raise ValueError("sweep needs at least one point")
    if stop < start:
        raise ValueError(f"inverted sweep range [{start}, {stop}]")
    if num > 1 and stop == start:
        raise ValueError("empty sweep range with more than one point")
    if log_spaced:
        if start <= 0:
            raise ValueError("log-spaced sweep needs a positive start")
        return np.geomspace(start, stop, num)
    return np.linspace(start, stop, num)


def cmd_sweep(cfg: SimConfig, parameter: str, values: np.ndarray, kv_ratio: float | None = None) -> list[dict]:
    if parameter not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMS}")
    curve, constants, intervals = cfg.curve(), cfg.constants(), cfg.intervals()
    kv_fixed = float(cfg.raw["sweep"]["kv_ratio"] if kv_ratio is None else kv_ratio)
    rows = []
    for v in values:
        v = float(v)
        kv, t_rel = kv_fixed, intervals.t_rel
        if parameter == "kv_ratio":
            kv = v
        elif parameter == "t_rel":
            t_rel = v
        else:
            t_rel = curve.interval_for_ber(v)
        w = WorkspaceState.from_ratio(kv)
        r = energy.evaluate(constants, w, intervals.t_std, t_rel, intervals.t_kelle)
        rows.append(
            {
                "parameter": parameter,
                "value": v,
                "kv_ratio": kv,
                "t_rel_us": t_rel,
                "ber": curve.ber_at(t_rel),
                "eta_closed_form": r.eta_closed_form,
                "eta_total": r.eta_total,
                "gain_kelle": r.gain_kelle,
                "gain_shield": r.gain_shield,
                "gain_kelle_refresh": r.gain_kelle_refresh,
                "gain_shield_refresh": r.gain_shield_refresh,
            }
        )
    audit_eta(rows, intervals.t_std, "t_rel_us")
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out / f"sweep_{parameter}.csv", SWEEP_COLUMNS, rows, cfg.hash)
    for row in rows:
        print(
            f"{parameter}={row['value']:<12.6g} t_rel={row['t_rel_us']:10.3f}us ber={row['ber']:.3e} "
            f"eta={row['eta_closed_form']:.6f} gain shield={row['gain_shield']:.4f} kelle={row['gain_kelle']:.4f}"
        )
    return rows


# -- inject-demo -------------------------------------------------------------


def cmd_inject_demo(cfg: SimConfig) -> dict:
    demo = cfg.raw["demo"]
    spec = cfg.fault_spec()
    n, d, heads = int(demo["tokens"]), int(demo["d_model"]), int(demo["num_heads"])
    rng = np.random.default_rng(cfg.seed)
    x = bf16.from_float32(rng.standard_normal((n, d)))
    weights = AttentionWeights.random(d, heads, seed=cfg.seed)
    run = run_with_faults(x, weights, spec)
    stats = run.stats

    p_nonzero = 1.0 - 2.0 ** -bin(spec.mask).count("1")
    checks = {}
    for name in ("Q", "K", "V", "O"):
        rho = spec.rho_kv if name in ("K", "V") else spec.rho_qo
        count = stats["elements"][name]
        p = rho * p_nonzero
        lo, hi = binomial_band(count, p) if 0 < p < 1 else (p, p)
        got = stats["corrupted_fraction"][name]
        checks[name] = {"rho": rho, "expected_fraction": p, "band_4sigma": [lo, hi], "within_band": bool(lo <= got <= hi)}

    sign_exp_preserved = all(
        not np.any((run.faulty.stored[k] ^ run.faulty.read[k]) & ~np.uint16(spec.mask)) for k in run.faulty.stored
    )
    report = {
        "fault_spec": {"rho_kv": spec.rho_kv, "rho_qo": spec.rho_qo, "mask": f"{spec.mask:#06x}", "seed": spec.seed},
        "shape": {"tokens": n, "d_model": d, "num_heads": heads},
        "stats": stats,
        "binomial_checks": checks,
        "bits_outside_mask_untouched": sign_exp_preserved,
    }
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out / "inject_demo.json", report, cfg.hash)
    print(f"fault injection: rho_qo={spec.rho_qo:g} rho_kv={spec.rho_kv:g} mask={spec.mask:#06x} seed={spec.seed}")
    for name, c in checks.items():
        print(
            f"  {name}: corrupted {stats['corrupted_fraction'][name]:.6f} "
            f"(expected {c['expected_fraction']:.6f}, {'ok' if c['within_band'] else 'OUTSIDE'} 4-sigma band)"
        )
    print(
        f"  output: changed {stats['output_changed_fraction']:.4f}, max rel err {stats['output_max_rel_error']:.3e}, "
        f"cosine {stats['output_cosine_similarity']:.6f}"
    )
    return report


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file (defaults apply to missing keys)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="RNG seed")

    parser = argparse.ArgumentParser(prog="segmented-edram", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("calibrate", parents=[common], help="fit retention curve and refresh energy")
    sim = sub.add_parser("simulate", parents=[common], help="run prefill/decode traces")
    sim.add_argument("--scenario", help="scenario name or 'all'")
    sim.add_argument("--model", help="model name or 'all'")
    sw = sub.add_parser("sweep", parents=[common], help="sweep one parameter")
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--start", type=float, required=True)
    sw.add_argument("--stop", type=float, required=True)
    sw.add_argument("--num", type=int, default=11)
    sw.add_argument("--log", action="store_true", help="geometric spacing")
    sw.add_argument("--kv-ratio", type=float, help="fixed KV fraction for t_rel/ber_target sweeps")
    sub.add_parser("inject-demo", parents=[common], help="fault-inject a toy attention layer")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = SimConfig.load(args.config, seed=args.seed, out=args.out)
        if args.command == "calibrate":
            cmd_calibrate(cfg)
        elif args.command == "simulate":
            cmd_simulate(cfg, args.model, args.scenario)
        elif args.command == "sweep":
            values = sweep_values(args.start, args.stop, args.num, args.log)
            cmd_sweep(cfg, args.param, values, args.kv_ratio)
        else:
            cmd_inject_demo(cfg)
    except AuditError as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.exception("runtime failure: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
