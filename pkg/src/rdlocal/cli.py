"""Command-line front end.

Subcommands map one-to-one onto the analysis workflows: `randinf` (window
inference), `winselect` (window choice from covariates only; never prints
outcome effects), `density` (binomial count test), `fuzzy`, `mc`
(multi-cutoff), `ms` (multi-score), `falsify`, and `plot`.  Results print as
text and, with --out-json / --out-csv, as a versioned JSON document and tidy
CSV.  Every printed number appears in the JSON.

Exit codes: 0 success, 1 analysis error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import pandas as pd

from . import falsify as falsify_mod
from . import fuzzy as fuzzy_mod
from . import localpoly, multicutoff, multiscore, winselect
from .core import Window, in_window, load_csv, normalize_score
from .errors import ConfigError, RDError
from .largesample import neyman_test
from .randinf import Mechanism, fisher_test, invert_ci, point_estimate
from .stats import StatSpec

SCHEMA_VERSION = 1


def _column_map(args):
    out = {}
    for m in args.map or []:
        col, sep, role = m.partition("=")
        if not sep or not col or not role:
            raise ConfigError(f"--map expects COLUMN=ROLE, got {m!r}")
        out[col] = role
    return out


def _load(args):
    return load_csv(args.input, _column_map(args), delimiter=args.delimiter)


def _mechanism(args, t):
    if args.mechanism == "bernoulli":
        p = args.bernoulli_p
        if p is None:
            raise ConfigError("--mechanism bernoulli requires --bernoulli-p")
        return Mechanism.bernoulli(p)
    return Mechanism.from_observed(t)


def _stat(args):
    return StatSpec(kind=args.statistic)


def _window(args, sample):
    if args.wl is None or args.wr is None:
        raise ConfigError("this analysis needs --wl and --wr")
    cutoff = args.cutoff
    if cutoff is None:
        cutoff = sample.scalar_cutoff if np.ndim(sample.cutoff) else \
            float(sample.cutoff)
    return Window.from_bounds(sample, args.wl, args.wr, cutoff)


def _parse_grid(spec):
    try:
        lo, hi, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ConfigError(f"--ci-grid expects LO:HI:STEP, got {spec!r}") \
            from None
    if step <= 0 or hi < lo:
        raise ConfigError("--ci-grid needs LO <= HI and STEP > 0")
    n = int(np.floor((hi - lo) / step + 1.5))
    return lo + step * np.arange(n)


def _jsonable(value):
    """Strict-JSON form: non-finite floats become None, containers recurse."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def _emit(args, payload, table: pd.DataFrame | None = None):
    if getattr(args, "out_json", None):
        with open(args.out_json, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(payload), fh, indent=2, allow_nan=False)
            fh.write("\n")
    if getattr(args, "out_csv", None) is not None and table is not None:
        table.to_csv(args.out_csv, index=False)


def _print_kv(items):
    width = max(len(k) for k, _ in items)
    for k, v in items:
        print(f"  {k:<{width}}  {v}")


# ---------------------------------------------------------------- randinf

def cmd_randinf(args):
    sample = _load(args)
    win = _window(args, sample)
    sub = in_window(sample, win)
    t = sub.treatment
    mech = _mechanism(args, t)
    stat = _stat(args)

    fisher = fisher_test(t, sub.outcome, mech=mech, stat=stat,
                         null_tau=args.nulltau, n_sims=args.nsims,
                         seed=args.seed, n_threads=args.threads)
    large = neyman_test(t, sub.outcome, alpha=args.level, d=args.d)
    estimate = point_estimate(t, sub.outcome, mech=mech)

    results = {
        "window": {"lo": win.lo, "hi": win.hi, "cutoff": win.center,
                   "n_minus": win.n_minus, "n_plus": win.n_plus},
        "mean_control": float(np.mean(sub.outcome[t == 0])),
        "mean_treated": float(np.mean(sub.outcome[t == 1])),
        "statistic": args.statistic,
        "stat_obs": fisher.stat_obs,
        "point_estimate": estimate,
        "finite_sample_p": fisher.p_value,
        "finite_sample_method": fisher.method,
        "n_draws": fisher.n_draws,
        "large_sample_p": large.p_value,
        "large_sample_ci": list(large.ci),
        "power_at_d": large.power_at_d,
        "d": large.d,
        "null_tau": args.nulltau,
    }
    table = None
    if args.ci_grid:
        grid = _parse_grid(args.ci_grid)
        ci = invert_ci(t, sub.outcome, mech=mech, stat=stat, grid=grid,
                       alpha=args.level, n_sims=args.nsims, seed=args.seed,
                       n_threads=args.threads)
        results["ci_inversion"] = {
            "alpha": ci.alpha,
            "interval": list(ci.interval) if ci.interval else None,
            "contiguous": ci.contiguous,
            "n_accepted": int(ci.accepted.size),
        }
        table = pd.DataFrame({"tau0": ci.grid, "p_value": ci.p_values})

    print(f"Randomization inference in [{win.lo:g}, {win.hi:g}] "
          f"(cutoff {win.center:g})")
    _print_kv([
        ("N (control/treated)", f"{win.n_minus}/{win.n_plus}"),
        ("mean control", f"{results['mean_control']:.3f}"),
        ("mean treated", f"{results['mean_treated']:.3f}"),
        (f"{args.statistic} (obs)", f"{fisher.stat_obs:.3f}"),
        ("finite-sample p", f"{fisher.p_value:.3f} ({fisher.method}, "
                            f"{fisher.n_draws} draws)"),
        ("large-sample p", f"{large.p_value:.3f}"),
        ("large-sample CI", f"[{large.ci[0]:.3f}, {large.ci[1]:.3f}]"),
        ("power at d", f"{large.power_at_d:.3f} (d = {large.d:.3f})"),
    ])
    if "ci_inversion" in results:
        itv = results["ci_inversion"]["interval"]
        shown = f"[{itv[0]:g}, {itv[1]:g}]" if itv else "(empty)"
        _print_kv([("inversion CI", shown)])
    return results, table


# --------------------------------------------------------------- winselect

def cmd_winselect(args):
    sample = _load(args)
    step = winselect.by_length(args.wstep) if args.wstep is not None \
        else winselect.by_obs(args.wobs if args.wobs is not None else 2)
    covs = args.covariates.split(",") if args.covariates else None
    scan = winselect.scan(sample, covariates=covs, stat=_stat(args),
                          step=step, alpha_star=args.alpha_star,
                          n_sims=args.nsims, seed=args.seed,
                          n_windows=args.nwindows, obs_min=args.obsmin,
                          cutoff=args.cutoff, n_threads=args.threads)
    frame = scan.to_frame()
    results = {
        "selected": None if scan.selected is None else
        {"lo": scan.selected.lo, "hi": scan.selected.hi},
        "alpha_star": scan.alpha_star,
        "rows": frame.drop(columns="note").to_dict("records"),
    }
    print("Window scan (covariate balance only; outcomes are never used)")
    with pd.option_context("display.width", 120):
        print(frame.drop(columns="note").to_string(index=False,
                                                   float_format="%.4f"))
    if scan.selected is None:
        print("  selected: none (smallest window already rejects; "
              "choose a window judgmentally)")
    else:
        print(f"  selected: [{scan.selected.lo:g}, {scan.selected.hi:g}]")
    if args.plot_out:
        scan.plot_data().to_csv(args.plot_out, index=False)
    return results, frame


# ----------------------------------------------------------------- density

def cmd_density(args):
    sample = _load(args)
    win = _window(args, sample)
    p = winselect.binomial_density(win.n_plus, win.n, q=args.q)
    results = {"window": {"lo": win.lo, "hi": win.hi},
               "n_minus": win.n_minus, "n_plus": win.n_plus,
               "q": args.q, "binomial_p": p}
    print(f"Binomial density test in [{win.lo:g}, {win.hi:g}]")
    _print_kv([("N (control/treated)", f"{win.n_minus}/{win.n_plus}"),
               ("success probability", f"{args.q:g}"),
               ("two-sided p", f"{p:.3f}")])
    return results, None


# ------------------------------------------------------------------- fuzzy

def _fuzzy_localpoly(args, sample):
    """Continuity-based fuzzy analysis with one shared bandwidth."""
    cutoff = args.cutoff
    if cutoff is None:
        cutoff = sample.scalar_cutoff
    d = sample.treatment_received
    if np.isnan(d).any():
        raise ConfigError("treatment_received has missing values")
    res = fuzzy_mod.ratio_localpoly(sample.score, sample.outcome, d, cutoff,
                                    h=args.bandwidth, p=args.order,
                                    kernel=args.kernel, alpha=args.level)
    results = {"bandwidth": args.bandwidth,
               "itt": {"estimate": res.itt},
               "first_stage": {"estimate": res.first_stage},
               "tsls": {"ratio": res.ratio, "p_value": res.ratio_p_value,
                        "ci": list(res.ratio_ci), "f_stat": res.f_stat,
                        "weak_flag": res.weak_flag,
                        "compliance_type": res.compliance_type}}
    print(f"Fuzzy RD, shared bandwidth {args.bandwidth:g} "
          f"(order {args.order}, {args.kernel} kernel)")
    _print_kv([("ITT jump", f"{res.itt:.3f}"),
               ("first-stage jump", f"{res.first_stage:.3f}"),
               ("TSLS ratio", f"{res.ratio:.3f}"),
               ("ratio p", f"{res.ratio_p_value:.3f}"),
               ("first-stage F", f"{res.f_stat:.1f}"
                + ("  ** weak **" if res.weak_flag else ""))])
    return results, None


def cmd_fuzzy(args):
    sample = _load(args)
    if args.treatment_received:
        extra = load_csv(args.input,
                         {args.treatment_received: "treatment_received",
                          **_column_map(args)}, delimiter=args.delimiter)
        sample = extra
    if sample.treatment_received is None:
        raise ConfigError("fuzzy analysis needs a treatment_received column "
                          "(--map COL=treatment_received or "
                          "--treatment-received COL)")
    if args.bandwidth is not None:
        return _fuzzy_localpoly(args, sample)
    win = _window(args, sample)
    sub = in_window(sample, win)
    t = sub.treatment
    d = sub.treatment_received
    if np.isnan(d).any():
        raise ConfigError("treatment_received has missing values inside "
                          "the window")
    mech = _mechanism(args, t)

    want_all = not (args.itt or args.first_stage or args.tsls)
    results = {"window": {"lo": win.lo, "hi": win.hi,
                          "n_minus": win.n_minus, "n_plus": win.n_plus}}
    print(f"Fuzzy RD in [{win.lo:g}, {win.hi:g}]")
    if args.itt or want_all:
        fisher = fuzzy_mod.itt(t, sub.outcome, framework="fisher", mech=mech,
                               n_sims=args.nsims, seed=args.seed,
                               n_threads=args.threads)
        large = fuzzy_mod.itt(t, sub.outcome, framework="large",
                              alpha=args.level)
        results["itt"] = {"estimate": large.estimate,
                          "fisher_p": fisher.p_value,
                          "large_p": large.p_value, "ci": list(large.ci)}
        _print_kv([("ITT estimate", f"{large.estimate:.3f}"),
                   ("ITT fisher p", f"{fisher.p_value:.3f}"),
                   ("ITT large p", f"{large.p_value:.3f}")])
    if args.first_stage or want_all:
        fisher = fuzzy_mod.itt(t, d, framework="fisher", mech=mech,
                               n_sims=args.nsims, seed=args.seed,
                               n_threads=args.threads)
        large = fuzzy_mod.itt(t, d, framework="large", alpha=args.level)
        results["first_stage"] = {"estimate": large.estimate,
                                  "fisher_p": fisher.p_value,
                                  "large_p": large.p_value,
                                  "ci": list(large.ci)}
        _print_kv([("first stage", f"{large.estimate:.3f}"),
                   ("first-stage fisher p", f"{fisher.p_value:.3f}"),
                   ("first-stage large p", f"{large.p_value:.3f}")])
    if args.tsls or want_all:
        res = fuzzy_mod.tsls_ratio(t, sub.outcome, d, alpha=args.level)
        results["tsls"] = {
            "ratio": res.ratio, "p_value": res.ratio_p_value,
            "ci": list(res.ratio_ci), "f_stat": res.f_stat,
            "weak_flag": res.weak_flag,
            "compliance_type": res.compliance_type,
        }
        _print_kv([("TSLS ratio", f"{res.ratio:.3f}"),
                   ("ratio p", f"{res.ratio_p_value:.3f}"),
                   ("first-stage F", f"{res.f_stat:.1f}"
                    + ("  ** weak **" if res.weak_flag else "")),
                   ("compliance", res.compliance_type)])
    return results, None


# ---------------------------------------------------------------------- mc

def _parse_cutoffs(spec):
    """Comma list of cutoff values, or a path to a one-column CSV of them."""
    try:
        return sorted(float(v) for v in spec.split(","))
    except ValueError:
        pass
    try:
        frame = pd.read_csv(spec)
    except (OSError, pd.errors.ParserError):
        raise ConfigError(f"--cutoffs expects a comma list or a CSV file, "
                          f"got {spec!r}") from None
    return sorted(float(v) for v in frame.iloc[:, 0])


def cmd_mc(args):
    column_map = _column_map(args)
    if args.cutoff_col:
        column_map.setdefault(args.cutoff_col, "cutoff")
    sample = load_csv(args.input, column_map, delimiter=args.delimiter)
    if args.cutoffs:
        cuts = _parse_cutoffs(args.cutoffs)
        assigned = multicutoff.split_cumulative(sample, cuts,
                                                rule=args.cumulative)
        sample = sample.replace(cutoff=assigned)
    if np.ndim(sample.cutoff) == 0:
        raise ConfigError("mc needs per-unit cutoffs: map a cutoff column "
                          "or pass --cutoffs with --cumulative")
    kw = dict(engine=args.engine, w=args.window, h=args.bandwidth,
              p=args.order, kernel=args.kernel)
    per = multicutoff.by_cutoff(sample, **kw)
    frame = pd.DataFrame([
        {"cutoff": r.cutoff, "estimate": r.estimate, "variance": r.variance,
         "n_used": r.n_used, "width": r.window_or_bandwidth} for r in per])
    results = {"by_cutoff": frame.to_dict("records")}
    print("Cutoff-specific effects")
    print(frame.to_string(index=False, float_format="%.4f"))

    if args.pooled or args.weights:
        pooled = multicutoff.pool(sample, **kw, weight_h=args.weight_h)
        results["pooled"] = {"pooled": pooled.pooled,
                             "weighted": pooled.weighted,
                             "weights": {f"{k:g}": v
                                         for k, v in pooled.weights.items()},
                             "h": pooled.h}
        _print_kv([("pooled", f"{pooled.pooled:.4f}"),
                   ("weighted", f"{pooled.weighted:.4f}")]
                  + [(f"w({c})", f"{v:.3f}")
                     for c, v in results["pooled"]["weights"].items()])
    if args.compare:
        c1, c2 = (float(v) for v in args.compare.split(","))
        lookup = {r.cutoff: r for r in per}
        z, p = multicutoff.compare_cutoffs(lookup[c1], lookup[c2])
        results["compare"] = {"cutoffs": [c1, c2], "z": z, "p_value": p}
        _print_kv([(f"effect({c1:g}) vs effect({c2:g})",
                    f"z = {z:.3f}, p = {p:.3f}")])
    if args.plot_out:
        norm = normalize_score(sample)
        rows = []
        fits = {}
        for c in np.unique(sample.cutoff_vector):
            subn = norm.subset(sample.cutoff_vector == c)
            plot = localpoly.rdplot_data(subn.score, subn.outcome, 0.0,
                                         n_bins_left=args.bins,
                                         n_bins_right=args.bins,
                                         global_p=args.order)
            part = plot.bins.copy()
            part.insert(0, "cutoff", c)
            rows.append(part)
            fits[f"{c:g}"] = {"left": [float(v) for v in plot.fit_left],
                              "right": [float(v) for v in plot.fit_right]}
        pd.concat(rows).to_csv(args.plot_out, index=False)
        results["plot_fits"] = fits
    return results, frame


# ---------------------------------------------------------------------- ms

def _analyze_signed(args, sds):
    """One-dimensional sharp analysis of a signed-distance reduction."""
    scalar = sds.to_sample()
    row = {"target": sds.target,
           "min_treated_distance": sds.min_treated,
           "min_control_distance": sds.min_control}
    if args.bandwidth is not None:
        est, se, p = localpoly.sharp_effect(
            scalar.score, scalar.outcome, 0.0, p=args.order,
            kernel=args.kernel, h=args.bandwidth)
        n_used = int(np.sum(np.abs(scalar.score) <= args.bandwidth))
        row.update(engine="local_poly", estimate=est, variance=se ** 2,
                   p_value=p, n_used=n_used, width=args.bandwidth)
        return row
    if args.wl is None or args.wr is None:
        raise ConfigError("ms needs --bandwidth (local polynomial) or "
                          "--wl/--wr (window analysis)")
    win = Window.from_bounds(scalar, args.wl, args.wr, 0.0)
    sub = in_window(scalar, win)
    t = sub.treatment
    large = neyman_test(t, sub.outcome, alpha=args.level)
    row.update(engine="local_rand", estimate=large.estimate,
               variance=large.variance.value, p_value=large.p_value,
               n_used=sub.n, width=win.half_length)
    if args.seed is not None:
        fisher = fisher_test(t, sub.outcome, n_sims=args.nsims,
                             seed=args.seed, n_threads=args.threads)
        row["fisher_p"] = fisher.p_value
    return row


def cmd_ms(args):
    column_map = _column_map(args)
    if args.score2:
        column_map.setdefault(args.score2, "score2")
    column_map.setdefault(args.assign, "covariate")
    sample = load_csv(args.input, column_map, delimiter=args.delimiter)
    if sample.score2 is None:
        raise ConfigError("ms needs two scores: map a column to score2")
    assign = sample.covariates.get(args.assign)
    if assign is None or np.isnan(assign).any() \
            or not np.isin(assign, (0, 1)).all():
        raise ConfigError(f"assignment column {args.assign!r} must be "
                          f"binary with no missing values")
    metric = multiscore.Metric(kind=args.metric, radius=args.sphere_radius)

    rows = []
    grid = None
    if args.point:
        for spec in args.point:
            try:
                b = tuple(float(v) for v in spec.split(","))
            except ValueError:
                raise ConfigError(f"--point expects A,B, got {spec!r}") \
                    from None
            sds = multiscore.signed_distance_to_point(sample, b, assign,
                                                      metric)
            rows.append(_analyze_signed(args, sds))
    boundary = None
    if args.boundary_file:
        boundary = multiscore.BoundarySpec.from_csv(args.boundary_file,
                                                    metric=metric)
    if args.nearest:
        if boundary is None:
            raise ConfigError("--nearest requires --boundary-file")
        sds = multiscore.signed_distance_to_boundary(
            sample, boundary, assign, densify_step=args.densify_step)
        rows.append(_analyze_signed(args, sds))
    if args.grid_radius is not None:
        if boundary is None:
            raise ConfigError("--grid-radius requires --boundary-file")
        grid = multiscore.boundary_grid_report(sample, boundary, assign,
                                               radius=args.grid_radius)
    if not rows and grid is None:
        raise ConfigError("ms needs --point, --nearest, or --grid-radius")

    results = {"metric": args.metric, "rows": rows}
    table = pd.DataFrame(rows) if rows else None
    if rows:
        print("Multi-score analyses (signed-distance reductions)")
        print(table.to_string(index=False, float_format="%.4f"))
    if grid is not None:
        results["grid_report"] = grid.to_dict("records")
        print(f"Boundary density report (radius {args.grid_radius:g})")
        print(grid.to_string(index=False))
        table = grid if table is None else table
    return results, table


# ----------------------------------------------------------------- falsify

def cmd_falsify(args):
    sample = _load(args)
    win = _window(args, sample)
    results = {"window": {"lo": win.lo, "hi": win.hi}}
    frames = []
    if args.balance:
        covs = args.covariates.split(",") if args.covariates else None
        tab = falsify_mod.balance_table(sample, win, covariates=covs,
                                        engine=args.engine,
                                        n_sims=args.nsims, seed=args.seed,
                                        n_threads=args.threads)
        results["balance"] = tab.to_dict("records")
        print("Covariate balance")
        print(tab.to_string(index=False, float_format="%.4f"))
        frames.append(tab.assign(table="balance"))
    if args.placebos:
        cuts = [float(v) for v in args.placebos.split(",")]
        tab = falsify_mod.placebo_cutoffs(sample, win.center, cuts,
                                          half_length=win.half_length,
                                          engine=args.engine,
                                          n_sims=args.nsims, seed=args.seed,
                                          n_threads=args.threads)
        results["placebos"] = tab.to_dict("records")
        print("Placebo cutoffs")
        print(tab.to_string(index=False, float_format="%.4f"))
        frames.append(tab.assign(table="placebos"))
    if args.sensitivity:
        ws = [float(v) for v in args.sensitivity.split(",")]
        tab = falsify_mod.window_sensitivity(sample, ws, w0=win.half_length,
                                             cutoff=win.center,
                                             engine=args.engine,
                                             n_sims=args.nsims,
                                             seed=args.seed,
                                             n_threads=args.threads)
        results["sensitivity"] = tab.to_dict("records")
        print("Window sensitivity")
        print(tab.to_string(index=False, float_format="%.4f"))
        frames.append(tab.assign(table="sensitivity"))
    if not frames:
        raise ConfigError("falsify needs at least one of --balance, "
                          "--placebos, --sensitivity")
    table = pd.concat(frames) if frames else None
    return results, table


# -------------------------------------------------------------------- plot

def cmd_plot(args):
    sample = _load(args)
    cutoff = args.cutoff
    if cutoff is None:
        cutoff = sample.scalar_cutoff
    plot = localpoly.rdplot_data(sample.score, sample.outcome, cutoff,
                                 n_bins_left=args.bins,
                                 n_bins_right=args.bins,
                                 bin_rule=args.bin_rule,
                                 global_p=args.poly)
    results = {"cutoff": cutoff, "global_p": plot.global_p,
               "fit_left": list(plot.fit_left),
               "fit_right": list(plot.fit_right),
               "n_bins": int(plot.bins.shape[0]),
               "n_merged": plot.n_merged,
               "bins": plot.bins.to_dict("records")}
    print(f"RD plot data: {plot.bins.shape[0]} bins, global order "
          f"{plot.global_p}")
    if args.svg:
        localpoly.render_svg(plot, args.svg)
        print(f"  SVG written to {args.svg}")
    return results, plot.bins


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdlocal",
        description="Regression discontinuity analysis in local windows")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, window=True):
        p.add_argument("--input", required=True, help="input CSV")
        p.add_argument("--map", action="append", metavar="COL=ROLE",
                       help="column role (score, outcome, "
                            "treatment_received, cutoff, score2, covariate)")
        p.add_argument("--delimiter", default=",")
        p.add_argument("--cutoff", type=float, default=None)
        p.add_argument("--out-json", default=None)
        p.add_argument("--out-csv", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--nsims", type=int, default=1000)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--level", type=float, default=0.05,
                       help="test level / 1 - confidence")
        if window:
            p.add_argument("--wl", type=float, default=None,
                           help="window lower bound")
            p.add_argument("--wr", type=float, default=None,
                           help="window upper bound")

    p = sub.add_parser("randinf", help="window randomization inference")
    common(p)
    p.add_argument("--statistic", default="diff_means",
                   choices=["diff_means", "ks", "rank_sum"])
    p.add_argument("--nulltau", type=float, default=0.0)
    p.add_argument("--mechanism", default="fixed_margins",
                   choices=["fixed_margins", "bernoulli"])
    p.add_argument("--bernoulli-p", type=float, default=None)
    p.add_argument("--ci-grid", default=None, metavar="LO:HI:STEP")
    p.add_argument("--d", type=float, default=None,
                   help="alternative for the power column")
    p.set_defaults(func=cmd_randinf)

    p = sub.add_parser("winselect", help="window selection from covariates")
    common(p, window=False)
    p.add_argument("--covariates", default=None, help="comma-separated names")
    grow = p.add_mutually_exclusive_group()
    grow.add_argument("--wobs", type=int, default=None,
                      help="grow by at least k units per side")
    grow.add_argument("--wstep", type=float, default=None,
                      help="grow half-length by a fixed step")
    p.add_argument("--obsmin", type=int, default=10)
    p.add_argument("--alpha-star", type=float, default=0.15)
    p.add_argument("--nwindows", type=int, default=20)
    p.add_argument("--statistic", default="diff_means",
                   choices=["diff_means", "ks", "rank_sum", "hotelling"])
    p.add_argument("--plot-out", default=None,
                   help="CSV of (half_length, min_p)")
    p.set_defaults(func=cmd_winselect)

    p = sub.add_parser("density", help="binomial density test in a window")
    common(p)
    p.add_argument("--q", type=float, default=0.5)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("fuzzy", help="fuzzy RD: ITT, first stage, TSLS")
    common(p)
    p.add_argument("--treatment-received", default=None, metavar="COL")
    p.add_argument("--itt", action="store_true")
    p.add_argument("--first-stage", action="store_true")
    p.add_argument("--tsls", action="store_true")
    p.add_argument("--mechanism", default="fixed_margins",
                   choices=["fixed_margins", "bernoulli"])
    p.add_argument("--bernoulli-p", type=float, default=None)
    p.add_argument("--bandwidth", type=float, default=None,
                   help="continuity-based route: one shared bandwidth for "
                        "numerator and denominator")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--kernel", default="triangular",
                   choices=["uniform", "triangular"])
    p.set_defaults(func=cmd_fuzzy)

    p = sub.add_parser("mc", help="multi-cutoff analysis")
    common(p, window=False)
    p.add_argument("--cutoff-col", default=None, metavar="COL",
                   help="per-unit cutoff column (same as --map COL=cutoff)")
    p.add_argument("--cutoffs", default=None,
                   help="comma list or one-column CSV, for cumulative "
                        "designs")
    p.add_argument("--cumulative", default="midpoint",
                   choices=["midpoint", "median"])
    p.add_argument("--engine", default="local_rand",
                   choices=["local_rand", "local_poly"])
    p.add_argument("--window", type=float, default=None,
                   help="half-length for local_rand")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="bandwidth for local_poly")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--kernel", default="uniform",
                   choices=["uniform", "triangular"])
    p.add_argument("--pooled", action="store_true")
    p.add_argument("--weights", action="store_true")
    p.add_argument("--weight-h", type=float, default=None)
    p.add_argument("--compare", default=None, metavar="C1,C2")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--plot-out", default=None,
                   help="tidy CSV of per-cutoff binned means")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("ms", help="multi-score / geographic analysis")
    common(p)
    p.add_argument("--score2", default=None, metavar="COL",
                   help="second score column (same as --map COL=score2)")
    p.add_argument("--assign", required=True, metavar="COL",
                   help="treatment-area indicator column")
    p.add_argument("--boundary-file", default=None,
                   help="CSV of boundary points (lat,lon) or (x1,x2)")
    p.add_argument("--point", action="append", default=None,
                   metavar="A,B", help="boundary point (repeatable)")
    p.add_argument("--metric", default="euclidean",
                   choices=["euclidean", "chordal", "great_circle"])
    p.add_argument("--sphere-radius", type=float,
                   default=multiscore.EARTH_RADIUS_KM)
    p.add_argument("--nearest", action="store_true",
                   help="pool on shortest distance to the whole boundary")
    p.add_argument("--densify-step", type=float, default=None)
    p.add_argument("--grid-radius", type=float, default=None,
                   help="emit a per-point density report at this radius")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="local-polynomial bandwidth on the distance score")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--kernel", default="uniform",
                   choices=["uniform", "triangular"])
    p.set_defaults(func=cmd_ms)

    p = sub.add_parser("falsify", help="balance, placebo cutoffs, sensitivity")
    common(p)
    p.add_argument("--balance", action="store_true")
    p.add_argument("--covariates", default=None)
    p.add_argument("--placebos", default=None, metavar="C1,C2,...")
    p.add_argument("--sensitivity", default=None, metavar="W1,W2,...")
    p.add_argument("--engine", default="fisher", choices=["fisher", "large"])
    p.set_defaults(func=cmd_falsify)

    p = sub.add_parser("plot", help="RD plot data (binned means, global fit)")
    common(p, window=False)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--poly", type=int, default=3)
    p.add_argument("--bin-rule", default="evenly_spaced",
                   choices=["evenly_spaced", "quantile"])
    p.add_argument("--svg", default=None, help="write a static SVG here")
    p.set_defaults(func=cmd_plot)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        results, table = args.func(args)
    except RDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = {"schema_version": SCHEMA_VERSION, "command": args.command,
               "results": results}
    _emit(args, payload, table)
    return 0


def main():
    raise SystemExit(run(sys.argv[1:]))
