"""Experiment orchestration CLI.

Subcommands cover the studies the package supports: exact small-d counts,
supercritical and critical fluctuation statistics, birthday collision
scans, sampler runs, and the dimer census.  Every command writes its data
file(s) plus a JSON manifest (config, theory constants, package version)
into --out; schemas are frozen in docs/SCHEMAS.md.

Determinism contract: the per-instance seed is derive_seed(master, index)
(tv-scan instances use derive_seed(master, 1_000_000 + index)), work is
mapped over instances in index order, and rows are written in index
order, so byte-identical output is produced for any --workers value.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, config
from . import birthday as bd
from . import exact as ex
from . import samplers as sp
from . import stats as st
from . import weights as wt
from .hypercube import Parity, build_percolation
from .rng import derive_seed, generator

TV_SEED_OFFSET = 1_000_000


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _write_manifest(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _manifest(command: str, cfg: dict, **extra) -> dict:
    doc = {"command": command, "config": cfg, "version": __version__}
    doc.update(extra)
    return doc


def _parallel(fn, items, workers: int):
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


# ---------------------------------------------------------------------------
# exact


def _exact_record(task) -> dict:
    d, p, lam, master, idx = task
    inst = build_percolation(d, p, derive_seed(master, idx))
    part = ex.exact_partition_hardcore(inst, lam)
    mu = wt.mu_theory(d, p, lam)
    rec = {
        "d": d,
        "p": p,
        "seed": inst.seed,
        "lambda": lam,
        "log_z": part.log_z,
        "zhat": ex.scaled_count(inst, lam, mu=mu),
    }
    if lam == 1.0:
        rec["z_integer"] = part.z_integer
    if d <= ex.TABLE_MAX_DIM:
        rec["defect_pmf"] = [float(x) for x in ex.defect_distribution_exact(inst).probs]
    return rec


def cmd_exact(args) -> int:
    tasks = [(args.d, args.p, args.lam, args.seed, i) for i in range(args.instances)]
    records = _parallel(_exact_record, tasks, args.workers)
    mismatches = 0
    if args.oracle:
        for i, rec in enumerate(records):
            inst = build_percolation(args.d, args.p, derive_seed(args.seed, i))
            oracle = ex.naive_partition(inst, args.lam)
            if args.lam == 1.0:
                if oracle != rec["z_integer"]:
                    mismatches += 1
            elif abs(math.log(oracle) - rec["log_z"]) > 1e-9:
                mismatches += 1
    out = os.path.join(args.out, "exact.json")
    with open(out, "w") as fh:
        json.dump(records, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _write_manifest(
        os.path.join(args.out, "exact_manifest.json"),
        _manifest("exact", _cfg(args), oracle_mismatches=mismatches if args.oracle else None),
    )
    if args.oracle and mismatches:
        print(f"exact: {mismatches} oracle mismatches", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# clt


def _clt_row(task) -> list:
    d, p, lam, master, idx = task
    inst = build_percolation(d, p, derive_seed(master, idx))
    phis = wt.phi_sums(inst, lam)
    params = wt.ModelParams(d=d, p=p, lam=lam, regime=wt.Regime.SUPERCRITICAL)
    stat = wt.clt_statistic(phis, wt.theory_constants(params))
    return [idx, inst.seed, phis.phi_even, phis.phi_odd, stat]


def cmd_clt(args) -> int:
    params = wt.ModelParams(
        d=args.d, p=args.p, lam=args.lam, regime=wt.Regime.SUPERCRITICAL
    )
    consts = wt.theory_constants(params)
    tasks = [(args.d, args.p, args.lam, args.seed, i) for i in range(args.instances)]
    rows = _parallel(_clt_row, tasks, args.workers)
    _write_csv(
        os.path.join(args.out, "clt.csv"),
        ["instance", "seed", "phi_even", "phi_odd", "stat"],
        rows,
    )
    ks = st.ks_statistic([r[4] for r in rows], st.StdNormal().cdf)
    _write_manifest(
        os.path.join(args.out, "clt_manifest.json"),
        _manifest("clt", _cfg(args), theory=consts.to_dict(), ks_stdnormal=ks),
    )
    if args.check_ks is not None and ks >= args.check_ks:
        print(f"clt: KS {ks} exceeds {args.check_ks}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# critical


def _critical_row(task) -> list:
    d, p, lam, master, idx = task
    inst = build_percolation(d, p, derive_seed(master, idx))
    phis = wt.phi_sums(inst, lam)
    params = wt.ModelParams(d=d, p=p, lam=lam, regime=wt.Regime.CRITICAL)
    stat = wt.critical_statistic(phis, wt.theory_constants(params))
    return [d, idx, inst.seed, phis.phi_even, phis.phi_odd, stat]


def cmd_critical(args) -> int:
    lam = args.lam
    p = wt.critical_p(lam)
    grid = args.d_grid
    reference = st.LogNormalSum(lam)
    all_rows: list[list] = []
    ks_by_d: dict[str, float] = {}
    for d in grid:
        tasks = [(d, p, lam, args.seed, i) for i in range(args.instances)]
        rows = _parallel(_critical_row, tasks, args.workers)
        all_rows.extend(rows)
        ks_by_d[str(d)] = st.ks_statistic([r[5] for r in rows], reference.cdf)
    _write_csv(
        os.path.join(args.out, "critical.csv"),
        ["d", "instance", "seed", "phi_even", "phi_odd", "stat"],
        all_rows,
    )
    ks_values = [ks_by_d[str(d)] for d in grid]
    monotone = all(b <= a for a, b in zip(ks_values, ks_values[1:]))
    stats_max_d = [r[5] for r in all_rows if r[0] == grid[-1]]
    grid_x = np.linspace(min(stats_max_d), max(stats_max_d), 201)
    cdf_samples = {
        "x": [float(x) for x in grid_x],
        "cdf": [reference.cdf(float(x)) for x in grid_x],
    }
    _write_manifest(
        os.path.join(args.out, "critical_manifest.json"),
        _manifest(
            "critical",
            _cfg(args),
            p=p,
            ks_by_d=ks_by_d,
            ks_nonincreasing=monotone,
            lognormal_cdf_samples=cdf_samples,
        ),
    )
    if args.check_ks is not None and ks_values[-1] >= args.check_ks:
        print(f"critical: KS {ks_values[-1]} exceeds {args.check_ks}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# birthday


def _birthday_row(task) -> tuple[list, list]:
    d, p, lam, master, idx, n, trials = task
    inst = build_percolation(d, p, derive_seed(master, idx))
    measure = bd.build_measure(inst, Parity.EVEN, lam)
    n_eff = n if n is not None else max(2, round(wt.mu_theory(d, p, lam)))
    if n_eff < 2:
        raise ValueError("need n >= 2 draws per trial")
    th = bd.theta(measure, n_eff)
    if d <= bd.DIAGNOSTIC_MAX_DIM:
        y1, y2, y3 = bd.stein_diagnostics(measure, n_eff)
    else:
        y1 = y2 = y3 = float("nan")
    rng = generator(derive_seed(master, idx, 1))
    summary = bd.collision_summary(measure, n_eff, trials, rng)
    pmf = summary["pmf"]
    ref = st.PoissonRef(th).pmf_array()
    tv = st.tv_discrete(pmf, ref)
    row = [
        d, p, lam, inst.seed, n_eff, 0,
        summary["n_repeat_mean"], summary["n_neighbor_mean"],
        summary["p_no_collision"], th, y1, y2, y3, tv,
    ]
    return row, list(pmf)


def cmd_birthday(args) -> int:
    tasks = [
        (args.d, args.p, args.lam, args.seed, i, args.n, args.trials)
        for i in range(args.instances)
    ]
    results = _parallel(_birthday_row, tasks, args.workers)
    rows = [r for r, _ in results]
    _write_csv(
        os.path.join(args.out, "birthday.csv"),
        ["d", "p", "lambda", "seed", "n", "trial_block", "n_repeat_mean",
         "n_neighbor_mean", "p_no_collision", "theta", "y1", "y2", "y3",
         "tv_poisson"],
        rows,
    )
    max_k = max(len(pmf) for _, pmf in results)
    pooled = np.zeros(max_k)
    for _, pmf in results:
        pooled[: len(pmf)] += pmf
    pooled /= len(results)
    theta_mean = float(np.mean([r[9] for r in rows]))
    ref = st.PoissonRef(theta_mean).pmf_array(max_k - 1)
    _write_csv(
        os.path.join(args.out, "birthday_pmf.csv"),
        ["k", "empirical", "poisson"],
        [[k, pooled[k], float(ref[k])] for k in range(max_k)],
    )
    _write_manifest(
        os.path.join(args.out, "birthday_manifest.json"),
        _manifest(
            "birthday",
            _cfg(args),
            theta_mean=theta_mean,
            p_no_collision_mean=float(np.mean([r[8] for r in rows])),
        ),
    )
    return 0


# ---------------------------------------------------------------------------
# sample


def cmd_sample(args) -> int:
    params_regime = None  # checked only through mu; sampling works at any p
    mu = wt.mu_theory(args.d, args.p, args.lam)
    rows: list[list] = []
    pooled_s1 = None
    invalid = 0
    for i in range(args.instances):
        seed = derive_seed(args.seed, i)
        inst = build_percolation(args.d, args.p, seed)
        rng = generator(derive_seed(args.seed, i, 1))
        batch = sp.approx_sample_batch(
            inst, args.lam, args.variant, rng, args.samples, validate=True
        )
        invalid += batch.n_invalid
        for t in range(args.samples):
            rows.append(
                [seed, t,
                 "even" if batch.sides[t] == 0 else "odd",
                 int(batch.s1_sizes[t]), int(batch.s2_sizes[t]),
                 int(batch.defect_sizes[t])]
            )
        hist = sp.size_histograms_from_batch(batch).s1
        if pooled_s1 is None or len(hist) > len(pooled_s1):
            hist, pooled_s1 = (hist, np.zeros(len(hist))) if pooled_s1 is None else (
                hist, np.pad(pooled_s1, (0, len(hist) - len(pooled_s1))))
        elif len(hist) < len(pooled_s1):
            hist = np.pad(hist, (0, len(pooled_s1) - len(hist)))
        pooled_s1 += hist
    pooled_s1 /= args.instances
    _write_csv(
        os.path.join(args.out, "samples.csv"),
        ["seed", "trial", "side", "s1_size", "s2_size", "defect_size"],
        rows,
    )
    tv_s1 = st.tv_discrete(pooled_s1, st.PoissonRef(mu).pmf_array())
    tv_rows: list[list] = []
    if args.tv_seeds:
        for i in range(args.tv_seeds):
            inst = build_percolation(args.d, args.p, derive_seed(args.seed, TV_SEED_OFFSET + i))
            tv_rows.append([args.d, inst.seed, sp.tv_samplers_exact(inst, args.lam, args.variant)])
        _write_csv(os.path.join(args.out, "sample_tv.csv"), ["d", "seed", "tv"], tv_rows)
    _write_manifest(
        os.path.join(args.out, "sample_manifest.json"),
        _manifest(
            "sample",
            _cfg(args),
            mu=mu,
            tv_s1_poisson=tv_s1,
            invalid_sets=invalid,
            tv_exact_mean=(float(np.mean([r[2] for r in tv_rows])) if tv_rows else None),
        ),
    )
    if invalid:
        print(f"sample: {invalid} invalid independent sets", file=sys.stderr)
        return 1
    if args.check_tv is not None and tv_s1 >= args.check_tv:
        print(f"sample: TV {tv_s1} exceeds {args.check_tv}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# census


def cmd_census(args) -> int:
    rows = []
    prev_ratio = None
    monotone = True
    for d in args.d_grid:
        census = ex.dimer_census(d, args.p)
        pairs = ex.two_linked_pair_count(d)
        mu = wt.mu_theory(d, args.p, 1.0)
        sigma = math.sqrt(wt.sigma_sq_theory(d, args.p, 1.0))
        scale = sigma * math.exp(mu)
        ratio = census / scale
        if prev_ratio is not None and ratio >= prev_ratio:
            monotone = False
        prev_ratio = ratio
        rows.append([d, args.p, pairs, census, scale, ratio])
    _write_csv(
        os.path.join(args.out, "census.csv"),
        ["d", "p", "pair_count", "census", "scale", "ratio"],
        rows,
    )
    _write_manifest(
        os.path.join(args.out, "census_manifest.json"),
        _manifest("census", _cfg(args), ratio_strictly_decreasing=monotone),
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def _cfg(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return cfg


def _add_common(sub, instances_default: int = 1):
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--instances", type=int, default=instances_default)
    sub.add_argument("--workers", type=int, default=1,
                     help="process count; 0 = all cores (outputs are identical either way)")
    sub.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percube",
        description="Independent sets of bond-percolated hypercubes: "
                    "exact counts, fluctuation statistics, birthday collisions, samplers.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p_exact = subs.add_parser("exact", help="exact partition functions at small d")
    p_exact.add_argument("--d", type=int, required=True)
    p_exact.add_argument("--p", type=float, required=True)
    p_exact.add_argument("--lam", type=float, default=1.0)
    p_exact.add_argument("--oracle", action="store_true",
                         help="cross-check against the brute-force oracle (d <= 4)")
    _add_common(p_exact)
    p_exact.set_defaults(func=cmd_exact)

    p_clt = subs.add_parser("clt", help="supercritical fluctuation statistic")
    p_clt.add_argument("--d", type=int, required=True)
    p_clt.add_argument("--p", type=float, required=True)
    p_clt.add_argument("--lam", type=float, default=1.0)
    p_clt.add_argument("--check-ks", type=float, default=None,
                       help="exit 1 if the KS distance to N(0,1) is not below this")
    _add_common(p_clt, instances_default=1000)
    p_clt.set_defaults(func=cmd_clt)

    p_crit = subs.add_parser("critical", help="critical statistic at p = p_crit(lam)")
    p_crit.add_argument("--d-grid", type=_int_list, required=True,
                        help="comma-separated dimensions, e.g. 12,16,20")
    p_crit.add_argument("--lam", type=float, default=1.0)
    p_crit.add_argument("--check-ks", type=float, default=None)
    _add_common(p_crit, instances_default=1000)
    p_crit.set_defaults(func=cmd_critical)

    p_bd = subs.add_parser("birthday", help="weighted birthday collision scan")
    p_bd.add_argument("--d", type=int, required=True)
    p_bd.add_argument("--p", type=float, required=True)
    p_bd.add_argument("--lam", type=float, default=1.0)
    p_bd.add_argument("--n", type=int, default=None,
                      help="draws per trial (default: round(mu))")
    p_bd.add_argument("--trials", type=int, default=1000)
    _add_common(p_bd, instances_default=100)
    p_bd.set_defaults(func=cmd_birthday)

    p_sample = subs.add_parser("sample", help="approximate-sampler runs")
    p_sample.add_argument("--d", type=int, required=True)
    p_sample.add_argument("--p", type=float, required=True)
    p_sample.add_argument("--lam", type=float, default=1.0)
    p_sample.add_argument("--variant", choices=[sp.Variant.SYMMETRIC, sp.Variant.TILTED],
                          default=sp.Variant.TILTED)
    p_sample.add_argument("--samples", type=int, default=10000)
    p_sample.add_argument("--tv-seeds", type=int, default=0,
                          help="also compute the exact sampler TV on this many fresh seeds (d <= 4)")
    p_sample.add_argument("--check-tv", type=float, default=None)
    _add_common(p_sample)
    p_sample.set_defaults(func=cmd_sample)

    p_census = subs.add_parser("census", help="2-linked pair weight census over a d grid")
    p_census.add_argument("--p", type=float, required=True)
    p_census.add_argument("--d-grid", type=_int_list, required=True)
    _add_common(p_census)
    p_census.set_defaults(func=cmd_census)

    return parser


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
