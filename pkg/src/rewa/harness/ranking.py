"""Planted-ranking experiments: minimal encoding width for top-k
recovery, log-N scaling, gap dependence, and affine-response
calibration.

The Boolean instantiation runs through a vectorized bulk path (scatter
all support ids into one corpus-by-buckets matrix, then a blocked GEMM
for AND-popcount scores); the test suite pins it bucket-for-bucket
against the canonical encoder.  Other carriers encode item by item.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..datagen import (
    dataset_from_overlaps,
    nested_corpus,
    planted_hybrid,
    planted_sets,
    planted_vectors,
    random_graph,
    sample_landmarks,
)
from ..encoder import encode
from ..hashing import HashFamily, derive_seed
from ..monoids import (
    MonoidSpec,
    boolean_monoid,
    natural_monoid,
    product_monoid,
    real_monoid,
    tropical_monoid,
)
from ..similarity import Calibration, affine_fit, calibrate, rewa_similarity
from ..witnesses import (
    BooleanSetSpace,
    CountSpace,
    FourierFeatureSpace,
    LandmarkDistanceSpace,
    PairedWitnessSpace,
    WitnessSpace,
)
from .config import ExperimentConfig
from .reports import config_dict

# disjoint substream tags so the independent random pieces of one run
# (dataset, counts, graph, hash seeds, ...) never share a seed
_S_DATASET = 11
_S_COUNTS = 12
_S_GRAPH = 13
_S_LANDMARKS = 14
_S_FEATURES = 15
_S_SPLIT = 16
_S_SCAN = 17
_S_CAL_PAIRS = 19
_S_CAL_BASE = 10_000
_S_SCALING = 300
_S_GAP = 600


@dataclass
class _Instance:
    dataset: object
    space: WitnessSpace
    spec: MonoidSpec
    L: float
    # (corpus_flat, corpus_rows, query_flat, query_rows) when the
    # Boolean bulk path applies, else None
    bulk: tuple | None
    # ((flat, rows) x4: corpus ch1, corpus ch2, queries ch1, queries ch2)
    # when both product channels are Boolean id sets, else None
    paired: tuple | None = None


def _flatten_idsets(items) -> tuple[np.ndarray, np.ndarray]:
    lens = [len(s) for s in items]
    flat = np.zeros(sum(lens), dtype=np.uint64)
    pos = 0
    for s in items:
        flat[pos : pos + len(s)] = s
        pos += len(s)
    rows = np.repeat(np.arange(len(items), dtype=np.int64), lens)
    return flat, rows


def scatter_boolean_matrix(
    flat: np.ndarray,
    rows: np.ndarray,
    count: int,
    family: HashFamily,
    residues: np.ndarray | None = None,
) -> np.ndarray:
    """(count, n) bucket matrix for many id sets at once.

    `residues` is an optional (K, len(flat)) table of precomputed mod-p
    hash residues for `flat`; they are independent of n, so a grid scan
    computes them once per seed and reduces here with ``% n``.
    """
    mat = np.zeros((count, family.n), dtype=bool)
    for k in range(family.K):
        if residues is None:
            buckets = family.eval_block(k, flat)
        else:
            buckets = residues[k] % np.uint64(family.n)
        mat[rows, buckets.astype(np.int64)] = True
    return mat


def _and_popcount_scores(cmat: np.ndarray, qmat: np.ndarray) -> np.ndarray:
    """(N, Q) shared-bucket counts; blocked so the float32 copy of the
    corpus matrix never exceeds ~256 MB."""
    q = qmat.astype(np.float32)
    out = np.empty((cmat.shape[0], qmat.shape[0]), dtype=np.float32)
    step = max(1, (1 << 26) // max(1, cmat.shape[1]))
    for lo in range(0, cmat.shape[0], step):
        out[lo : lo + step] = cmat[lo : lo + step].astype(np.float32) @ q.T
    return out


def _trial_outcomes(
    inst: _Instance,
    cfg: ExperimentConfig,
    n: int,
    fam_seed: int,
    residues: tuple[np.ndarray, np.ndarray] | None = None,
):
    """One hash seed: top-k hit count and S(query, planted) per query."""
    fam = HashFamily(fam_seed, cfg.K, inst.space.m, n)
    ds = inst.dataset
    if inst.bulk is not None:
        cflat, crows, qflat, qrows = inst.bulk
        cres, qres = residues if residues is not None else (None, None)
        cmat = scatter_boolean_matrix(cflat, crows, len(ds.items), fam, cres)
        qmat = scatter_boolean_matrix(qflat, qrows, len(ds.queries), fam, qres)
        scores = _and_popcount_scores(cmat, qmat)

        def column(qi: int) -> np.ndarray:
            return scores[:, qi]

    elif inst.paired is not None:
        c1, c2, q1, q2 = inst.paired
        r = residues if residues is not None else (None,) * 4
        w1, w2 = inst.spec.weights
        c1m = scatter_boolean_matrix(*c1, len(ds.items), fam, r[0])
        c2m = scatter_boolean_matrix(*c2, len(ds.items), fam, r[1])
        q1m = scatter_boolean_matrix(*q1, len(ds.queries), fam, r[2])
        q2m = scatter_boolean_matrix(*q2, len(ds.queries), fam, r[3])
        scores = w1 * _and_popcount_scores(c1m, q1m).astype(
            np.float64
        ) + w2 * _and_popcount_scores(c2m, q2m).astype(np.float64)

        def column(qi: int) -> np.ndarray:
            return scores[:, qi]

    else:
        q_encs = [encode(inst.space, fam, inst.spec, q) for q in ds.queries]
        c_encs = [encode(inst.space, fam, inst.spec, it) for it in ds.items]

        def column(qi: int) -> np.ndarray:
            return np.array([rewa_similarity(q_encs[qi], ce) for ce in c_encs])

    hits = 0
    sims = np.empty(len(ds.queries))
    for qi in range(len(ds.queries)):
        s = column(qi)
        nb = ds.neighbor_ids[qi]
        s_nb = float(s[nb])
        # rank with ties broken by ascending corpus index
        rank = 1 + int((s > s_nb).sum()) + int((s[:nb] == s_nb).sum())
        hits += rank <= cfg.k
        sims[qi] = s_nb
    return hits, sims


# cap on cached residue bytes; above it the scan recomputes hashes per
# grid point instead of holding every trial's table at once
_RESIDUE_CACHE_BYTES = 1 << 30


def _trial_residue_tables(inst, cfg, trial_seeds):
    """Per-trial residue tables (one per flattened id array) for the
    vectorized paths, or Nones when no such path applies / the tables
    would be too large."""
    if inst.bulk is not None:
        flats = (inst.bulk[0], inst.bulk[2])
    elif inst.paired is not None:
        flats = tuple(flat for flat, _ in inst.paired)
    else:
        return [None] * len(trial_seeds)
    total = len(trial_seeds) * cfg.K * sum(f.size for f in flats) * 8
    if total > _RESIDUE_CACHE_BYTES:
        return [None] * len(trial_seeds)
    tables = []
    for s in trial_seeds:
        fam = HashFamily(s, cfg.K, inst.space.m, cfg.n_grid[0])
        tables.append(
            tuple(
                np.stack([fam.residue_block(k, f) for k in range(cfg.K)])
                for f in flats
            )
        )
    return tables


def _grid_point(inst, cfg, n: int, trial_seeds, residue_tables):
    sims = np.empty((len(trial_seeds), len(inst.dataset.queries)))
    hits = 0
    for t, fam_seed in enumerate(trial_seeds):
        h, s = _trial_outcomes(inst, cfg, n, fam_seed, residue_tables[t])
        hits += h
        sims[t] = s
    rate = hits / (len(trial_seeds) * len(inst.dataset.queries))
    return rate, sims


def _scan_grid(inst, cfg, seed: int) -> dict:
    """Ascending scan, stopping at the first n whose success rate meets
    1 - delta; that stopping rule is exactly the reported-minimal-n
    invariant (the previous grid point was evaluated and fell short).

    The same hash seeds are reused at every grid point (a paired design:
    rates across n share their randomness, which smooths the crossing
    without biasing any single point's estimate).
    """
    threshold = 1.0 - cfg.delta_target
    trial_seeds = [derive_seed(seed, t) for t in range(cfg.trials)]
    residue_tables = _trial_residue_tables(inst, cfg, trial_seeds)
    points = []
    minimal_n = None
    sims_at = None
    for n in cfg.n_grid:
        rate, sims = _grid_point(inst, cfg, n, trial_seeds, residue_tables)
        points.append({"n": n, "success_rate": rate})
        sims_at = sims
        if rate >= threshold:
            minimal_n = n
            break
    # across-seed variance of S(q, planted), averaged over queries,
    # at the minimal n (or the last grid point when never reached)
    sigma2 = float(np.mean(np.var(sims_at, axis=0, ddof=1)))
    return {
        "points": points,
        "minimal_n": minimal_n,
        "reached": minimal_n is not None,
        "sigma2_hat": sigma2,
    }


def _build_instance(cfg: ExperimentConfig, N: int, seed: int) -> _Instance:
    if cfg.instantiation == "boolean":
        ds = planted_sets(
            N,
            cfg.universe,
            cfg.base_size,
            cfg.overlap_hi,
            cfg.overlap_lo,
            derive_seed(seed, _S_DATASET),
            queries=cfg.queries,
        )
        bulk = _flatten_idsets(ds.items) + _flatten_idsets(ds.queries)
        return _Instance(ds, BooleanSetSpace(cfg.universe), boolean_monoid(), 1.0, bulk)

    if cfg.instantiation == "natural":
        base = planted_sets(
            N,
            cfg.universe,
            cfg.base_size,
            cfg.overlap_hi,
            cfg.overlap_lo,
            derive_seed(seed, _S_DATASET),
            queries=cfg.queries,
        )
        rng = np.random.default_rng(derive_seed(seed, _S_COUNTS))
        # ids carried over from a query keep that query's count, so the
        # planted neighbor's count overlap dominates the distractors'
        query_count = {
            int(i): int(rng.integers(2, cfg.count_clip))
            for q in base.queries
            for i in q
        }

        def to_counts(ids):
            return {
                int(i): query_count.get(int(i), 0) or int(rng.integers(1, 4))
                for i in ids
            }

        items = [to_counts(s) for s in base.items]
        queries = [to_counts(q) for q in base.queries]
        space = CountSpace(cfg.universe, clip=cfg.count_clip)
        spec = natural_monoid(clip=cfg.count_clip)
        ds = dataset_from_overlaps(items, queries, space, spec, seed=seed)
        return _Instance(ds, space, spec, float(cfg.count_clip), None)

    if cfg.instantiation == "real":
        planted = planted_vectors(
            N,
            cfg.vector_d,
            cfg.gap_cosine,
            derive_seed(seed, _S_DATASET),
            queries=cfg.queries,
        )
        space = FourierFeatureSpace(
            cfg.vector_d, cfg.features, cfg.bandwidth, seed=derive_seed(seed, _S_FEATURES)
        )
        spec = real_monoid()
        # relabel with feature-space overlaps so gaps are in the same
        # units the encoding estimates
        ds = dataset_from_overlaps(
            planted.items, planted.queries, space, spec, seed=seed
        )
        return _Instance(ds, space, spec, float(space.bound), None)

    if cfg.instantiation == "tropical":
        graph = random_graph(
            cfg.graph_V, cfg.graph_E, (1.0, 4.0), derive_seed(seed, _S_GRAPH)
        )
        lms = sample_landmarks(graph, cfg.landmarks, derive_seed(seed, _S_LANDMARKS))
        space = LandmarkDistanceSpace(graph, lms, cfg.diameter)
        spec = tropical_monoid(cfg.diameter)
        if cfg.graph_V < cfg.queries + N:
            raise ValueError("graph_V must cover queries + N vertices")
        perm = np.random.default_rng(derive_seed(seed, _S_SPLIT)).permutation(
            cfg.graph_V
        )
        queries = [int(v) for v in perm[: cfg.queries]]
        items = [int(v) for v in perm[cfg.queries : cfg.queries + N]]
        ds = dataset_from_overlaps(items, queries, space, spec, seed=seed)
        return _Instance(ds, space, spec, float(cfg.diameter), None)

    # product
    ds = planted_hybrid(
        N,
        cfg.universe,
        cfg.base_size,
        derive_seed(seed, _S_DATASET),
        queries=cfg.queries,
        weights=cfg.weights,
    )
    space = PairedWitnessSpace(
        BooleanSetSpace(cfg.universe), BooleanSetSpace(cfg.universe)
    )
    spec = product_monoid(boolean_monoid(), boolean_monoid(), *cfg.weights)
    paired = (
        _flatten_idsets([it[0] for it in ds.items]),
        _flatten_idsets([it[1] for it in ds.items]),
        _flatten_idsets([q[0] for q in ds.queries]),
        _flatten_idsets([q[1] for q in ds.queries]),
    )
    return _Instance(ds, space, spec, 1.0, None, paired)


def _calibration_pairs(inst, cfg):
    """Query zero against a spread of corpus items (neighbor included)."""
    ds = inst.dataset
    rng = np.random.default_rng(derive_seed(cfg.seed, _S_CAL_PAIRS))
    want = min(cfg.cal_pairs, len(ds.items))
    picks = [ds.neighbor_ids[0]] + rng.permutation(len(ds.items)).tolist()
    indices = list(dict.fromkeys(int(j) for j in picks))[:want]
    return [(ds.queries[0], ds.items[j]) for j in indices]


def _calibrate_at(inst, cfg, n_cal: int) -> Calibration:
    seeds = [derive_seed(cfg.seed, _S_CAL_BASE + i) for i in range(cfg.cal_seeds)]

    def factory(seed: int) -> HashFamily:
        return HashFamily(seed, cfg.K, inst.space.m, n_cal)

    return calibrate(inst.space, inst.spec, factory, _calibration_pairs(inst, cfg), seeds)


def _calibration_dict(cal: Calibration) -> dict:
    return {
        "alpha": cal.alpha,
        "beta": cal.beta,
        "r_squared": cal.r_squared,
        "seeds_used": cal.seeds_used,
        "pairs_used": cal.pairs_used,
    }


def _reference_bound(inst, cfg, N: int, sigma2: float, alpha: float):
    """Sample-size formula with the monoid's reference constant and the
    measured variance/slope; reported for comparison, never asserted.
    """
    if alpha <= 0:
        return None
    gap = inst.dataset.gap
    logs = math.log(N) + math.log(cfg.k) + math.log(1.0 / cfg.delta_target)
    return (
        inst.spec.c_m * inst.L**2 * sigma2 / (alpha**2 * gap**2 * cfg.K) * logs
    )


def run_ranking(cfg: ExperimentConfig):
    """Grid scan for one corpus size; returns (report, csv_rows)."""
    inst = _build_instance(cfg, cfg.N, cfg.seed)
    scan = _scan_grid(inst, cfg, derive_seed(cfg.seed, _S_SCAN))
    n_cal = scan["minimal_n"] or scan["points"][-1]["n"]
    cal = _calibrate_at(inst, cfg, n_cal)
    report = {
        "experiment": "ranking",
        "config": config_dict(cfg),
        "dataset": {
            "N": len(inst.dataset.items),
            "queries": len(inst.dataset.queries),
            "gap": inst.dataset.gap,
        },
        "grid": scan["points"],
        "minimal_n": scan["minimal_n"],
        "reached": scan["reached"],
        "sigma2_hat": scan["sigma2_hat"],
        "calibration": _calibration_dict(cal),
        "calibration_n": n_cal,
        "reference_bound_n": _reference_bound(
            inst, cfg, cfg.N, scan["sigma2_hat"], cal.alpha
        ),
    }
    rows = [(cfg.N, p["n"], p["success_rate"]) for p in scan["points"]]
    return report, rows


def run_scaling(cfg: ExperimentConfig):
    """Grid scan per N in N_list, then a minimal-n vs ln N fit.

    Boolean corpora are nested (each N is a slice of the largest one)
    and every N reuses the same trial seeds, so the per-N scans form a
    matched comparison rather than independent redraws.
    """
    if not cfg.N_list:
        raise ValueError("scaling requires N_list")
    full = None
    if cfg.instantiation == "boolean":
        full = _build_instance(
            cfg, max(cfg.N_list), derive_seed(cfg.seed, _S_SCALING)
        )
    entries = []
    rows = []
    first_inst = None
    first_scan = None
    for i, N in enumerate(cfg.N_list):
        if full is not None:
            ds = nested_corpus(full.dataset, N, full.space, full.spec)
            bulk = _flatten_idsets(ds.items) + _flatten_idsets(ds.queries)
            inst = _Instance(ds, full.space, full.spec, full.L, bulk)
        else:
            inst = _build_instance(cfg, N, derive_seed(cfg.seed, _S_SCALING + i))
        scan = _scan_grid(inst, cfg, derive_seed(cfg.seed, _S_SCAN))
        if first_inst is None:
            first_inst, first_scan = inst, scan
        entries.append(
            {
                "N": N,
                "gap": inst.dataset.gap,
                "minimal_n": scan["minimal_n"],
                "reached": scan["reached"],
                "sigma2_hat": scan["sigma2_hat"],
            }
        )
        rows.extend((N, p["n"], p["success_rate"]) for p in scan["points"])

    reached = [(math.log(e["N"]), e["minimal_n"]) for e in entries if e["reached"]]
    if len(reached) >= 2:
        slope, intercept, r2 = affine_fit(
            [x for x, _ in reached], [y for _, y in reached]
        )
        fit = {
            "omitted": False,
            "slope": slope,
            "intercept": intercept,
            "r_squared": r2,
            "points_used": len(reached),
        }
    else:
        fit = {"omitted": True, "reason": "fewer than two N values reached 1 - delta"}

    n_cal = first_scan["minimal_n"] or first_scan["points"][-1]["n"]
    cal = _calibrate_at(first_inst, cfg, n_cal)
    report = {
        "experiment": "scaling",
        "config": config_dict(cfg),
        "per_N": entries,
        "log_N_fit": fit,
        "calibration": _calibration_dict(cal),
        "calibration_n": n_cal,
        "calibration_N": len(first_inst.dataset.items),
        "sigma2_hat": first_scan["sigma2_hat"],
        "reference_bound_n": _reference_bound(
            first_inst, cfg, cfg.N_list[0], first_scan["sigma2_hat"], cal.alpha
        ),
    }
    return report, rows


def run_gap_sweep(cfg: ExperimentConfig):
    """Minimal n per planted gap level (gap = overlap_hi - overlap_lo,
    keeping overlap_lo fixed).  Levels should be listed largest gap
    first; unreached levels are flagged rather than failed.
    """
    levels = []
    for li, gap in enumerate(cfg.gap_levels):
        if gap < 1:
            raise ValueError("gap levels must be positive")
        sub = replace(cfg, overlap_hi=cfg.overlap_lo + gap, instantiation="boolean")
        inst = _build_instance(sub, cfg.N, derive_seed(cfg.seed, _S_GAP + li))
        scan = _scan_grid(inst, sub, derive_seed(cfg.seed, _S_SCAN + 200 + li))
        levels.append(
            {
                "gap": inst.dataset.gap,
                "minimal_n": scan["minimal_n"],
                "reached": scan["reached"],
                "sigma2_hat": scan["sigma2_hat"],
            }
        )

    by_gap = sorted(levels, key=lambda e: -e["gap"])
    reached_ns = [e["minimal_n"] for e in by_gap if e["reached"]]
    monotone = all(a < b for a, b in zip(reached_ns, reached_ns[1:]))
    report = {
        "experiment": "gap_sweep",
        "config": config_dict(cfg),
        "levels": levels,
        "monotone_minimal_n": monotone,
        "exhausted_levels": [e["gap"] for e in levels if not e["reached"]],
    }
    return report, []


def run_calibration(cfg: ExperimentConfig):
    """Affine-response measurement alone, at the largest grid width."""
    inst = _build_instance(cfg, cfg.N, cfg.seed)
    n_cal = max(cfg.n_grid)
    cal = _calibrate_at(inst, cfg, n_cal)
    report = {
        "experiment": "calibration",
        "config": config_dict(cfg),
        "calibration": _calibration_dict(cal),
        "calibration_n": n_cal,
        "dataset_gap": inst.dataset.gap,
    }
    return report, []
