from __future__ import annotations

import json
import math
import os
from dataclasses import asdict
from typing import Any, Dict, TextIO

import humanize

from toprank.core.baselines import MleParams, borda_count, spectral_mle
from toprank.core.bounds import (
    BoundConstants,
    ConditionReport,
    l2_error,
    linf_error,
    sample_complexity,
    success,
    thm1_sufficient,
    thm2_explicit_threshold,
    thm2_necessary,
    thm3_er_sufficient,
)
from toprank.core.btl import exact_observations, make_planted_scores, sample_observations
from toprank.core.graph import (
    ComparisonGraph,
    classify_regime,
    degrees,
    is_connected,
    sample_er,
    spectra,
)
from toprank.core.errors import IoFailure
from toprank.core.spectral import RankCentralityParams, rank_centrality, top_k
from toprank.service.config import ConfigReader, read_key_values
from toprank.service.fileio import (
    load_pair,
    read_edge_list,
    write_edge_list,
    write_observations,
    write_truth,
)
from toprank.service.harness import ExperimentConfig, Method, connected_er, run_sweep
from toprank.service.log import logger
from toprank.service.results import emit_csv, emit_meta, emit_plot_data


def _constants(args) -> BoundConstants:
    base = ConfigReader().get_constants()
    changes = {
        name: getattr(args, name)
        for name in ("c1", "c2", "c3", "c4", "c5", "c6", "epsilon")
        if getattr(args, name, None) is not None
    }
    return BoundConstants(**{**asdict(base), **changes})


def handle_rank(args, out: TextIO):
    g, obs, truth = load_pair(args.graph, args.observations, args.truth)
    tol = args.tol if args.tol is not None else ConfigReader().get_solver_tol()
    rc_params = RankCentralityParams(
        tol=tol, max_iter=args.max_iter, max_iter_cap=ConfigReader().get_max_iter_cap()
    )
    method = Method(args.method)

    if method is Method.RANK_CENTRALITY:
        result = rank_centrality(g, obs, args.k, rc_params)
    elif method is Method.SPECTRAL_MLE:
        if args.mle_bracket is not None:
            lo, hi = args.mle_bracket
        elif truth is not None:
            lo, hi = truth[0].w_min, truth[0].w_max
        else:
            lo, hi = MleParams().bracket
        params = MleParams.default_for(
            g.n,
            lo,
            hi,
            rounds=args.mle_rounds,
            inner_tol=ConfigReader().get_mle_inner_tol(),
            replace_threshold=(
                args.mle_threshold
                if args.mle_threshold is not None
                else ConfigReader().get_mle_replace_threshold()
            ),
        )
        result = spectral_mle(g, obs, args.k, params, rc_params)
    else:
        result = borda_count(g, obs, args.k)

    if not result.converged:
        logger.warning(f"Power iteration stopped after {result.iterations} steps without converging")
    out.write("\n".join(str(i) for i in result.top_k) + "\n")
    if args.scores:
        out.write("# estimate\n")
        out.write("\n".join(f"{i} {s:.17g}" for i, s in enumerate(result.estimate)) + "\n")
    if truth is not None:
        w, K = truth
        out.write(f"# linf_error {linf_error(result.estimate, w):.10g}\n")
        out.write(f"# l2_error {l2_error(result.estimate, w):.10g}\n")
        if K != args.k:
            logger.warning(f"Truth file was written for K={K}, scoring top-{args.k}")
        hit = success(result, top_k(w.scores, args.k))
        out.write(f"# success {str(hit).lower()}\n")


def _format_report(report: ConditionReport) -> str:
    state = "satisfied" if report.satisfied else "not satisfied"
    lines = [
        f"{report.theorem:<6}{state}",
        f"      main: {report.lhs:.6g} {report.direction} {report.rhs:.6g}",
    ]
    for side in report.side_conditions:
        mark = "ok" if side.holds else "fails"
        lines.append(f"      {side.name}: {side.lhs:.6g} {side.direction} {side.rhs:.6g} [{mark}]")
    return "\n".join(lines)


def handle_bounds(args, out: TextIO):
    constants = _constants(args)
    if args.graph:
        g = read_edge_list(args.graph)
        if g.n != args.n:
            logger.warning(f"--n {args.n} ignored, the graph file has {g.n} items")
        n = g.n
    else:
        n = args.n
        g = sample_er(n, args.p, args.seed)
    regime = classify_regime(n, args.p)

    reports = []
    graph_info: Dict[str, Any] = {"n": g.n, "edges": g.m, "connected": is_connected(g)}
    complexity = None
    if graph_info["connected"]:
        s = spectra(g)
        graph_info.update(asdict(s))
        reports.append(thm1_sufficient(g, s, args.l, args.delta_k, constants))
        complexity = sample_complexity(g, s, args.delta_k)
    else:
        logger.warning("Comparison graph is not connected, skipping the general-graph condition")
    reports.append(thm2_necessary(n, g.m, args.delta_k, constants, L=args.l))
    reports.append(thm3_er_sufficient(n, args.p, args.l, args.delta_k, constants))
    w_min = 1.0 - args.delta_k if args.delta_k < 1 else math.nan
    explicit = (
        thm2_explicit_threshold(n, args.delta_k, w_min, 1.0, constants.epsilon)
        if args.delta_k < 1
        else math.nan
    )

    if args.json:
        record = {
            "inputs": {"n": n, "p": args.p, "L": args.l, "delta_K": args.delta_k, "K": args.k},
            "constants": asdict(constants),
            "regime": regime.value,
            "graph": graph_info,
            "reports": [r.as_dict() for r in reports],
            "thm2_explicit_threshold": explicit,
            "sample_complexity": asdict(complexity) if complexity else None,
        }
        out.write(json.dumps(record, indent=4) + "\n")
        return

    lines = [
        f"regime: {regime.value} (n={n}, p={args.p}, log(n)/n={math.log(n) / n:.4g}, "
        f"sqrt(log(n)/n)={math.sqrt(math.log(n) / n):.4g})",
        f"graph: {humanize.intcomma(g.n)} items, {humanize.intcomma(g.m)} edges, "
        f"{'connected' if graph_info['connected'] else 'not connected'}",
    ]
    if graph_info["connected"]:
        lines.append(
            f"       degrees {graph_info['d_min']}..{graph_info['d_max']}, "
            f"gamma {graph_info['gamma']:.6g}, ||L^2||_2,inf {graph_info['l2inf_of_L2']:.6g}"
        )
    lines.append(f"budget: L|E| = {humanize.intcomma(args.l * g.m)} comparisons (K={args.k})")
    lines.append("")
    lines += [_format_report(r) for r in reports]
    lines.append("")
    lines.append(f"converse threshold with explicit constant: {explicit:.6g}")
    if complexity is not None:
        lines.append(
            f"sample complexity: sufficient {complexity.sufficient:.6g}, "
            f"necessary {complexity.necessary:.6g}, ratio {complexity.ratio:.4g}, "
            f"balance gap {complexity.balanced_gap:.4g}"
        )
    out.write("\n".join(lines) + "\n")


def _override_values(args) -> Dict[str, Any]:
    flags = {
        "n": args.n,
        "K": args.k,
        "delta_K": args.delta_k,
        "p": args.p,
        "L_values": args.l_values,
        "trials": args.trials,
        "methods": args.methods,
        "master_seed": args.seed,
        "workers": args.workers,
        "scheme": args.scheme,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "mle_rounds": args.mle_rounds,
        "mle_threshold": args.mle_threshold,
        "exact": args.exact,
        "retain_records": args.retain_records,
    }
    return {key: value for key, value in flags.items() if value is not None}


def handle_experiment(args, out: TextIO):
    config = ExperimentConfig.defaults()
    if args.preset:
        config = config.with_values({"preset": args.preset})
    if args.config:
        config = config.with_values(read_key_values(args.config))
    config = config.with_values(_override_values(args))

    def progress(item):
        logger.debug(f"done: {item.description}")

    result = run_sweep(config, progress)
    if args.out:
        try:
            os.makedirs(args.out, exist_ok=True)
        except OSError as e:
            raise IoFailure(f"Cannot create output directory {args.out}: {e}")
        emit_csv(result, os.path.join(args.out, "sweep.csv"))
        emit_plot_data(result, os.path.join(args.out, "plot.dat"))
        emit_meta(result, os.path.join(args.out, "meta.txt"))
        logger.info(f"Wrote sweep.csv, plot.dat and meta.txt to {args.out}")
    out.write(result.format() + "\n")


def handle_simulate(args, out: TextIO):
    g, retries = connected_er(args.n, args.p, args.seed, ConfigReader().get_max_retries())
    w = make_planted_scores(args.n, args.k, args.delta_k, args.scheme, args.w_max)
    if args.exact:
        obs = exact_observations(g, w)
    else:
        obs = sample_observations(g, w, args.l, args.seed)
    os.makedirs(args.out, exist_ok=True)
    paths = {
        "graph": os.path.join(args.out, "graph.txt"),
        "observations": os.path.join(args.out, "observations.txt"),
        "truth": os.path.join(args.out, "truth.txt"),
    }
    write_edge_list(g, paths["graph"])
    write_observations(obs, paths["observations"])
    write_truth(w, args.k, paths["truth"])
    out.write(
        f"{humanize.intcomma(g.n)} items, {humanize.intcomma(g.m)} edges "
        f"({retries} resamples), L={'exact' if obs.is_exact else obs.L}\n"
    )
    out.write("\n".join(f"{name}: {path}" for name, path in paths.items()) + "\n")


def handle_generate_graph(args, out: TextIO):
    if args.connected:
        g, _ = connected_er(args.n, args.p, args.seed, ConfigReader().get_max_retries())
    else:
        g = sample_er(args.n, args.p, args.seed)
    write_edge_list(g, args.output)
    out.write(
        f"Wrote ER({args.n}, {args.p}) graph with {humanize.intcomma(g.m)} edges to {args.output}\n"
    )


def _describe(g: ComparisonGraph) -> str:
    _, d_min, d_max = degrees(g)
    density = 2 * g.m / (g.n * (g.n - 1))
    lines = [
        f"n: {g.n}",
        f"edges: {g.m}",
        f"density: {density:.6g}",
        f"regime: {classify_regime(g.n, density).value if g.m else 'empty'}",
        f"degrees: {d_min}..{d_max}",
        f"connected: {str(is_connected(g)).lower()}",
    ]
    if is_connected(g):
        s = spectra(g)
        lines += [
            f"gamma: {s.gamma:.10g}",
            f"l2inf_of_L2: {s.l2inf_of_L2:.10g}",
            f"sqrt(n) * l2inf_of_L2: {math.sqrt(g.n) * s.l2inf_of_L2:.10g}",
        ]
    return "\n".join(lines)


def handle_spectra(args, out: TextIO):
    out.write(_describe(read_edge_list(args.graph)) + "\n")
