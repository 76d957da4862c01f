"""Experiment runner, matrix persistence, and figure-data emission.

Every run is a pure function of its spec: per-cell seeds are derived by
hashing the base seed together with the cell coordinates, so grids can
execute on any number of workers and still produce byte-identical CSVs.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import parse_analogy_file
from .embed import (AnalogyFamily, AnalogyQuad, EvalPolicy, accuracy_vs_k,
                    all_model_families)
from .model import (CapacityError, CoocMatrix, ModelConfig,
                    all_attribute_vectors, build_m, build_pmi, sample_config)
from .perturb import NoiseSpec, SubsampleSpec, apply_noise, \
    prune_attribute_pairs, subsample_vocab
from .spectral import EigenSystem, numeric_eigensystem, spectrum_density

logger = logging.getLogger(__name__)


class FormatError(Exception):
    """Matrix or eigensystem file is not in the expected binary format."""


class SpecError(ValueError):
    """Experiment spec is inconsistent or incomplete."""


# ---------------------------------------------------------------------------
# Binary persistence
# ---------------------------------------------------------------------------

_MATRIX_MAGIC = b"COOC1"
_EIGS_MAGIC = b"EIGS1"
_SPACE_TO_TAG = {"ratio": 0, "log": 1}
_TAG_TO_SPACE = {0: "ratio", 1: "log"}
_VOCAB_NONE, _VOCAB_TOKENS, _VOCAB_ATTRS = 0, 1, 2


def save_matrix(m: CoocMatrix, path):
    """Write magic, space tag, n, d-or-0, row-major float64 values, and an
    optional vocabulary block (tokens, or attribute rows when the
    vocabulary is not the full hypercube)."""
    d_or_0 = 0
    if m.vocab is not None and np.all(np.abs(m.vocab) == 1):
        d = m.vocab.shape[1]
        if m.n == (1 << d):
            d_or_0 = d
    parts = [
        _MATRIX_MAGIC,
        struct.pack("<BII", _SPACE_TO_TAG[m.space], m.n, d_or_0),
        np.ascontiguousarray(m.values, dtype="<f8").tobytes(),
    ]
    if m.tokens is not None:
        parts.append(struct.pack("<BI", _VOCAB_TOKENS, len(m.tokens)))
        for tok in m.tokens:
            raw = tok.encode("utf-8")
            parts.append(struct.pack("<H", len(raw)) + raw)
    elif m.vocab is not None and d_or_0 == 0:
        parts.append(struct.pack("<BI", _VOCAB_ATTRS, m.vocab.shape[1]))
        parts.append(np.ascontiguousarray(m.vocab, dtype="<i1").tobytes())
    else:
        parts.append(struct.pack("<B", _VOCAB_NONE))
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data, path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, size):
        if self.pos + size > len(self.data):
            raise FormatError(f"{self.path}: truncated file")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_matrix(path) -> CoocMatrix:
    reader = _Reader(Path(path).read_bytes(), path)
    if reader.take(len(_MATRIX_MAGIC)) != _MATRIX_MAGIC:
        raise FormatError(f"{path}: bad magic (not a COOC1 file)")
    tag, n, d_or_0 = reader.unpack("<BII")
    if tag not in _TAG_TO_SPACE:
        raise FormatError(f"{path}: unknown space tag {tag}")
    values = np.frombuffer(reader.take(8 * n * n), dtype="<f8").reshape(n, n).copy()
    vocab = tokens = None
    if d_or_0:
        if n != (1 << d_or_0):
            raise FormatError(f"{path}: n={n} inconsistent with d={d_or_0}")
        vocab = all_attribute_vectors(d_or_0)
    (block,) = reader.unpack("<B")
    if block == _VOCAB_TOKENS:
        (count,) = reader.unpack("<I")
        toks = []
        for _ in range(count):
            (length,) = reader.unpack("<H")
            toks.append(reader.take(length).decode("utf-8"))
        tokens = tuple(toks)
    elif block == _VOCAB_ATTRS:
        (width,) = reader.unpack("<I")
        vocab = np.frombuffer(reader.take(n * width), dtype="<i1").reshape(n, width).copy()
    elif block != _VOCAB_NONE:
        raise FormatError(f"{path}: unknown vocabulary block {block}")
    provenance = "corpus" if tokens is not None else "synthetic"
    return CoocMatrix(values=values, space=_TAG_TO_SPACE[tag], vocab=vocab,
                      tokens=tokens, provenance=provenance)


def save_eigensystem(eigs: EigenSystem, path):
    """Values block then vectors block; labels go to a text sidecar."""
    parts = [
        _EIGS_MAGIC,
        struct.pack("<I", eigs.n),
        np.ascontiguousarray(eigs.values, dtype="<f8").tobytes(),
        np.ascontiguousarray(eigs.vectors.T, dtype="<f8").tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))
    if eigs.labels is not None:
        Path(str(path) + ".labels").write_text(
            "\n".join(eigs.labels) + "\n", encoding="utf-8")


def load_eigensystem(path) -> EigenSystem:
    reader = _Reader(Path(path).read_bytes(), path)
    if reader.take(len(_EIGS_MAGIC)) != _EIGS_MAGIC:
        raise FormatError(f"{path}: bad magic (not an EIGS1 file)")
    (n,) = reader.unpack("<I")
    values = np.frombuffer(reader.take(8 * n), dtype="<f8").copy()
    vectors = np.frombuffer(reader.take(8 * n * n), dtype="<f8").reshape(n, n).T.copy()
    labels = None
    sidecar = Path(str(path) + ".labels")
    if sidecar.exists():
        labels = tuple(sidecar.read_text(encoding="utf-8").split())
    return EigenSystem(values=values, vectors=vectors, labels=labels)


# ---------------------------------------------------------------------------
# Experiment specs
# ---------------------------------------------------------------------------

def derive_seed(base, *parts) -> int:
    """Stable 64-bit seed from the base seed plus named coordinates."""
    digest = hashlib.blake2b(repr((int(base),) + tuple(parts)).encode(),
                             digest_size=8).digest()
    return int.from_bytes(digest, "little")


def parse_k_grid(text) -> tuple[int, ...]:
    """Comma list of ints and a:b[:step] ranges (inclusive)."""
    out = []
    for piece in str(text).split(","):
        piece = piece.strip()
        if not piece:
            continue
        if ":" in piece:
            bounds = [int(x) for x in piece.split(":")]
            if len(bounds) == 2:
                lo, hi, step = bounds[0], bounds[1], 1
            elif len(bounds) == 3:
                lo, hi, step = bounds
            else:
                raise SpecError(f"bad k range {piece!r}")
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(piece))
    if not out:
        raise SpecError("empty k grid")
    return tuple(out)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    kind: str = "synthetic"                 # synthetic | corpus
    d: int = 8
    s_mode: str = "uniform"
    s_mu: float = 0.5
    s_sigma: float = 1e-3
    s_values: tuple[float, ...] | None = None
    q_mode: str = "ones"
    q_values: tuple[float, ...] | None = None
    targets: tuple[str, ...] = ("pmi",)
    epsilon: float = 0.0
    k_grid: tuple[int, ...] = (1,)
    replicates: int = 1
    base_seed: int = 0
    vary_config: bool = True                # fresh strengths per replicate
    noise_kind: str | None = None
    noise_grid: tuple[float, ...] = ()
    subsample_grid: tuple[float, ...] = ()
    subsample_size: int | None = None
    prune_attrs: tuple = ()                 # ints or "strongest"/"weakest"
    measure: str = "accuracy"               # accuracy | spectrum
    policy: EvalPolicy = EvalPolicy()
    corpus_matrix: str | None = None
    analogy_file: str | None = None
    out_dir: str = "."
    workers: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise SpecError("replicates must be >= 1")
        if not self.k_grid and self.measure == "accuracy":
            raise SpecError("k grid must be nonempty")
        if not self.targets:
            raise SpecError("at least one target required")
        for t in self.targets:
            if t not in ("m", "pmi"):
                raise SpecError(f"unknown target {t!r}")
        if self.kind not in ("synthetic", "corpus"):
            raise SpecError(f"unknown experiment kind {self.kind!r}")
        if self.kind == "corpus" and not self.corpus_matrix:
            raise SpecError("corpus experiments need corpus_matrix")
        if self.measure not in ("accuracy", "spectrum"):
            raise SpecError(f"unknown measure {self.measure!r}")


def parse_spec(path) -> ExperimentSpec:
    """Read the flat key-value spec file format."""
    kv = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise SpecError(f"bad spec line {line!r}")
            kv[key.strip()] = value.strip()

    def floats(key):
        return tuple(float(x) for x in kv[key].split(",")) if key in kv else ()

    prune: list = []
    for piece in kv.get("prune_attrs", "").split(","):
        piece = piece.strip()
        if not piece:
            continue
        prune.append(piece if piece in ("strongest", "weakest") else int(piece))

    policy = EvalPolicy(
        exclusion=kv.get("policy_exclusion", "include_all"),
        tie_mode=kv.get("policy_tie", "strict_fail"),
        tie_tolerance=float(kv.get("policy_tolerance", "1e-9")),
    )
    return ExperimentSpec(
        name=kv.get("name", Path(path).stem),
        kind=kv.get("kind", "synthetic"),
        d=int(kv.get("d", "8")),
        s_mode=kv.get("s_mode", "uniform"),
        s_mu=float(kv.get("s_mu", "0.5")),
        s_sigma=float(kv.get("s_sigma", "1e-3")),
        s_values=floats("s_values") or None,
        q_mode=kv.get("q_mode", "ones"),
        q_values=floats("q_values") or None,
        targets=tuple(t.strip() for t in kv.get("targets", "pmi").split(",")),
        epsilon=float(kv.get("epsilon", "0")),
        k_grid=parse_k_grid(kv.get("k_grid", "1")),
        replicates=int(kv.get("replicates", "1")),
        base_seed=int(kv.get("base_seed", "0")),
        vary_config=kv.get("vary_config", "true").lower() != "false",
        noise_kind=kv.get("noise_kind") or None,
        noise_grid=floats("noise_grid"),
        subsample_grid=floats("subsample_grid"),
        subsample_size=int(kv["subsample_size"]) if "subsample_size" in kv else None,
        prune_attrs=tuple(prune),
        measure=kv.get("measure", "accuracy"),
        policy=policy,
        corpus_matrix=kv.get("corpus_matrix") or None,
        analogy_file=kv.get("analogy_file") or None,
        out_dir=kv.get("out_dir", "."),
        workers=int(kv.get("workers", "1")),
    )


# ---------------------------------------------------------------------------
# Running experiments
# ---------------------------------------------------------------------------

def _resolve_prune(prune, config: ModelConfig) -> int:
    if prune == "strongest":
        return int(np.argmax(config.strengths)) + 1
    if prune == "weakest":
        return int(np.argmin(config.strengths)) + 1
    k = int(prune)
    if not 1 <= k <= config.n_attrs:
        raise SpecError(f"prune attribute {k} out of range")
    return k


def restrict_families(families, retained):
    """Re-index analogy families onto a retained sub-vocabulary.

    Quads with any missing word are dropped; families that lose all their
    quads are dropped too.
    """
    pos = {int(w): i for i, w in enumerate(retained)}
    out = []
    for fam in families:
        quads = tuple(
            AnalogyQuad(pos[q.a], pos[q.b], pos[q.c], pos[q.d])
            for q in fam.quads
            if q.a in pos and q.b in pos and q.c in pos and q.d in pos
        )
        if quads:
            out.append(AnalogyFamily(name=fam.name, quads=quads))
    return out


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    curve_rows: list = field(default_factory=list)
    spectrum_rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    files: dict = field(default_factory=dict)


def _cell_id(rep, target, sigma, f, prune):
    return {"replicate": rep, "target": target, "sigma": sigma, "f": f,
            "prune": prune}


def _run_synthetic_cell(spec: ExperimentSpec, rep, target, sigma, f, prune):
    config_seed = derive_seed(spec.base_seed, "config",
                              rep if spec.vary_config else 0)
    config = sample_config(
        spec.d, spec.s_mode, spec.q_mode, seed=config_seed,
        mu=spec.s_mu, sigma=spec.s_sigma,
        strengths=spec.s_values, odds=spec.q_values)
    mat = build_m(config)
    if sigma is not None and spec.noise_kind == "multiplicative_ratio":
        mat = apply_noise(mat, NoiseSpec(
            kind="multiplicative_ratio", sigma=sigma,
            seed=derive_seed(spec.base_seed, "noise", rep, repr(float(sigma)))))
    retained = None
    if f is not None:
        mat, retained = subsample_vocab(mat, SubsampleSpec(
            f=f, seed=derive_seed(spec.base_seed, "subsample", rep, repr(float(f))),
            size=spec.subsample_size))
    if target == "pmi":
        mat = build_pmi(mat, spec.epsilon)
    if sigma is not None and spec.noise_kind == "additive_log":
        if target != "pmi":
            raise SpecError("additive_log noise applies to the pmi target")
        mat = apply_noise(mat, NoiseSpec(
            kind="additive_log", sigma=sigma,
            seed=derive_seed(spec.base_seed, "noise", rep, repr(float(sigma)))))
    prune_label = prune
    if prune is not None:
        k = _resolve_prune(prune, config)
        prune_label = f"{prune}:{k}" if isinstance(prune, str) else str(k)
        if target != "pmi":
            raise SpecError("attribute pruning applies to the pmi target")
        mat = prune_attribute_pairs(mat, k)
    eigs = numeric_eigensystem(mat)
    top = ";".join(repr(float(v)) for v in eigs.values[:spec.d + 1])

    base = dict(_cell_id(rep, target, sigma, f, prune_label),
                d_or_corpus=str(spec.d), seed=config_seed, top_eigs=top)
    if spec.measure == "spectrum":
        rows = [dict(base, rank=r, value=float(v), n_words=eigs.n)
                for r, v in enumerate(eigs.values)]
        return [], rows
    families = all_model_families(spec.d)
    if retained is not None:
        families = restrict_families(families, retained)
        if not families:
            raise SpecError("subsampling removed every analogy quad; reseed")
    k_values = tuple(k for k in spec.k_grid if k <= eigs.n)
    curve = accuracy_vs_k(eigs, families, k_values, spec.policy, source=target)
    rows = []
    for i, k in enumerate(curve.k_values):
        for j, fam in enumerate(curve.family_names):
            rows.append(dict(base, K=k, family=fam,
                             accuracy=float(curve.accuracies[i, j]),
                             n_quads=len(families[j])))
    return rows, []


def _run_corpus_cell(spec: ExperimentSpec, rep, target, sigma, f, prune):
    mat = load_matrix(spec.corpus_matrix)
    mat.require_space("ratio")
    if target == "pmi":
        mat = build_pmi(mat, spec.epsilon)
    eigs = numeric_eigensystem(mat)
    top = ";".join(repr(float(v)) for v in eigs.values[:16])
    base = dict(_cell_id(rep, target, sigma, f, prune),
                d_or_corpus=Path(spec.corpus_matrix).stem,
                seed=spec.base_seed, top_eigs=top)
    if spec.measure == "spectrum":
        return [], [dict(base, rank=r, value=float(v), n_words=eigs.n)
                    for r, v in enumerate(eigs.values)]
    if not spec.analogy_file:
        raise SpecError("corpus accuracy experiments need analogy_file")
    dataset = parse_analogy_file(spec.analogy_file, mat.tokens)
    if not dataset.families:
        raise SpecError("no in-vocabulary analogy quads")
    k_values = tuple(k for k in spec.k_grid if k <= eigs.n)
    curve = accuracy_vs_k(eigs, dataset.families, k_values, spec.policy,
                          source=target)
    rows = []
    for i, k in enumerate(curve.k_values):
        for j, fam in enumerate(curve.family_names):
            rows.append(dict(base, K=k, family=fam,
                             accuracy=float(curve.accuracies[i, j]),
                             n_quads=len(dataset.families[j])))
    return rows, []


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Execute the replicate x grid sweep and write the CSV artifacts."""
    result = ExperimentResult(spec=spec)
    noise = spec.noise_grid or (None,)
    subs = spec.subsample_grid or (None,)
    prunes = spec.prune_attrs or (None,)
    cells = list(itertools.product(range(spec.replicates), spec.targets,
                                   noise, subs, prunes))
    runner = _run_corpus_cell if spec.kind == "corpus" else _run_synthetic_cell

    def work(cell):
        try:
            return cell, runner(spec, *cell), None
        except Exception as exc:  # crash isolation: record and skip the cell
            return cell, ([], []), f"{type(exc).__name__}: {exc}"

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(work, cells))
    else:
        outcomes = [work(c) for c in cells]

    by_cell = {cell: (rows, err) for cell, rows, err in outcomes}
    for cell in cells:  # deterministic order regardless of scheduling
        (curve_rows, spectrum_rows), err = by_cell[cell]
        if err is not None:
            logger.warning("cell %s failed: %s", cell, err)
            result.failures.append({"cell": cell, "error": err})
            continue
        result.curve_rows.extend(curve_rows)
        result.spectrum_rows.extend(spectrum_rows)

    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if result.curve_rows:
        path = out / f"{spec.name}_curve.csv"
        write_curve_csv(result.curve_rows, path)
        result.files["curve"] = path
        path = out / f"{spec.name}_summary.csv"
        write_summary_csv(result.curve_rows, path, bool(result.failures))
        result.files["summary"] = path
        if spec.noise_grid or spec.subsample_grid or spec.prune_attrs:
            path = out / f"{spec.name}_perturb.csv"
            write_perturb_csv(result.curve_rows, path, spec)
            result.files["perturb"] = path
    if result.spectrum_rows:
        path = out / f"{spec.name}_spectrum.csv"
        write_spectrum_csv(result.spectrum_rows, path)
        result.files["spectrum"] = path
    return result


# ---------------------------------------------------------------------------
# CSV writers (stable float formatting via repr)
# ---------------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_curve_csv(rows, path):
    header = ["target", "d_or_corpus", "K", "family", "accuracy", "n_quads",
              "seed", "replicate"]
    _write_rows(path, header, (
        [r["target"], r["d_or_corpus"], r["K"], r["family"], r["accuracy"],
         r["n_quads"], r["seed"], r["replicate"]]
        for r in rows))


def write_perturb_csv(rows, path, spec: ExperimentSpec):
    """One row per (cell, K): accuracy averaged across families."""
    kinds = []
    if spec.noise_grid:
        kinds.append(spec.noise_kind or "noise")
    if spec.subsample_grid:
        kinds.append("subsample")
    if spec.prune_attrs:
        kinds.append("prune")
    kind = "+".join(kinds)
    grouped: dict = {}
    for r in rows:
        key = (r["target"], r["sigma"], r["f"], r["prune"], r["replicate"], r["K"])
        grouped.setdefault(key, []).append(r)
    out = []
    for key in grouped:
        target, sigma, f, prune, rep, k = key
        sample = grouped[key]
        value = next(v for v in (sigma, f, prune) if v is not None)
        acc = float(np.mean([r["accuracy"] for r in sample]))
        out.append([kind, sample[0]["d_or_corpus"], value, k, rep, acc,
                    sample[0]["top_eigs"]])
    header = ["kind", "d", "sigma_or_f_or_k", "K", "replicate", "accuracy",
              "top_eigs"]
    _write_rows(path, header, out)


def write_summary_csv(rows, path, incomplete=False):
    """Mean/std across replicates of the family-mean accuracy per cell."""
    per_rep: dict = {}
    for r in rows:
        key = (r["target"], r["sigma"], r["f"], r["prune"], r["K"])
        per_rep.setdefault(key, {}).setdefault(r["replicate"], []).append(
            r["accuracy"])
    out = []
    for key, reps in per_rep.items():
        target, sigma, f, prune, k = key
        means = [float(np.mean(v)) for _, v in sorted(reps.items())]
        out.append([target, sigma, f, prune, k,
                    float(np.mean(means)),
                    float(np.std(means)),
                    len(means), int(incomplete)])
    header = ["target", "sigma", "f", "prune", "K", "mean_acc",
              "std_acc", "n_replicates", "incomplete"]
    _write_rows(path, header, out)


def write_spectrum_csv(rows, path):
    header = ["target", "sigma", "f", "prune", "replicate", "n_words",
              "rank", "value"]
    _write_rows(path, header, (
        [r["target"], r["sigma"], r["f"], r["prune"], r["replicate"],
         r["n_words"], r["rank"], r["value"]]
        for r in rows))


# ---------------------------------------------------------------------------
# Figure data
# ---------------------------------------------------------------------------

_ACC_GRID = parse_k_grid("1:20,22:40:2,44:64:4,72:128:8,160,192,224,256")
_BAND_EDGES_D8 = (9, 37, 93)


def _mean_std_rows(rows, keys):
    """Group curve rows, mean over families within a replicate, then
    mean/std across replicates."""
    grouped: dict = {}
    for r in rows:
        key = tuple(r[k] for k in keys)
        grouped.setdefault(key, {}).setdefault(r["replicate"], []).append(
            r["accuracy"])
    out = {}
    for key, reps in grouped.items():
        means = [float(np.mean(v)) for _, v in sorted(reps.items())]
        out[key] = (float(np.mean(means)), float(np.std(means)))
    return out


def figure_spec(figure_id, out_dir=".", replicates=None, base_seed=7,
                workers=1):
    """Experiment spec(s) backing each figure panel."""
    fid = figure_id.lower()
    common = dict(out_dir=str(out_dir), workers=workers, base_seed=base_seed)
    if fid == "1c":
        reps = replicates or 50
        specs = []
        for label, mode, sigma_s in (("0.001", "normal", 1e-3),
                                     ("0.02", "normal", 2e-2),
                                     ("0.1", "normal", 1e-1),
                                     ("uniform", "uniform", 0.0)):
            specs.append(ExperimentSpec(
                name=f"fig1c_{label.replace('.', 'p')}", d=8, s_mode=mode,
                s_sigma=sigma_s, targets=("m",), measure="spectrum",
                replicates=reps, k_grid=(1,), **common))
        return specs
    if fid == "2c":
        return [ExperimentSpec(name="fig2c", d=8, s_mode="uniform",
                               targets=("m",), replicates=replicates or 1,
                               k_grid=_ACC_GRID, **common)]
    if fid == "2d":
        return [ExperimentSpec(name="fig2d", d=8, s_mode="uniform",
                               targets=("m", "pmi"), replicates=replicates or 50,
                               k_grid=_ACC_GRID, **common)]
    if fid == "2e":
        return [ExperimentSpec(name="fig2e", d=8, s_mode="uniform",
                               targets=("pmi",), replicates=replicates or 10,
                               noise_kind="multiplicative_ratio",
                               noise_grid=(0.01, 0.1, 0.5, 1.0),
                               k_grid=_ACC_GRID, **common)]
    if fid == "2f":
        return [ExperimentSpec(name="fig2f", d=12, s_mode="uniform",
                               targets=("pmi",), replicates=replicates or 10,
                               noise_kind="multiplicative_ratio",
                               noise_grid=(0.1,), subsample_grid=(0.15,),
                               k_grid=parse_k_grid("1:24,28:64:4,80:128:16"),
                               **common)]
    if fid == "3c":
        return [ExperimentSpec(name="fig3c", d=8, s_mode="uniform",
                               targets=("pmi",), replicates=replicates or 10,
                               prune_attrs=("strongest", "weakest"),
                               k_grid=_ACC_GRID, **common)]
    if fid == "a4-bands":
        return [ExperimentSpec(name="a4bands", d=8, s_mode="normal",
                               s_sigma=1e-3, targets=("m", "pmi"),
                               replicates=replicates or 50,
                               k_grid=parse_k_grid("1:100"), **common)]
    if fid == "a4-noise":
        specs = []
        for d in (6, 8, 10):
            grid = parse_k_grid(f"2:{min(2 ** d, 256)}:2")
            specs.append(ExperimentSpec(
                name=f"a4noise_d{d}", d=d, s_mode="normal", s_sigma=1e-3,
                targets=("pmi",), replicates=replicates or 10,
                noise_kind="additive_log", noise_grid=(0.5, 1.0, 2.0),
                k_grid=grid, **common))
        return specs
    if fid == "a4-sparsify":
        return [ExperimentSpec(name="a4sparsify", d=12, s_mode="uniform",
                               targets=("pmi",), replicates=replicates or 20,
                               vary_config=False, measure="spectrum",
                               subsample_grid=(0.9, 0.6, 0.3, 0.15, 0.08,
                                               0.04, 0.02, 0.01),
                               k_grid=(1,), **common)]
    raise SpecError(f"unknown figure id {figure_id!r}")


def emit_figure_data(results, figure_id, out_dir=".") -> Path:
    """Condense experiment results into one tidy CSV per figure panel."""
    fid = figure_id.lower()
    if isinstance(results, ExperimentResult):
        results = [results]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"figure_{fid.replace('-', '_')}.csv"

    if fid == "1c":
        rows = []
        for res in results:
            if res.spec.measure != "spectrum":
                raise SpecError("figure 1c needs spectrum results")
            label = ("uniform" if res.spec.s_mode == "uniform"
                     else repr(res.spec.s_sigma))
            values = [r["value"] for r in res.spectrum_rows]
            dens = spectrum_density(values, bins=48)
            for lo, hi, y in zip(dens.bin_edges[:-1], dens.bin_edges[1:],
                                 dens.density):
                rows.append([float(lo), float(hi), float(y), label])
        _write_rows(path, ["bin_lo", "bin_hi", "density", "sigma_s"], rows)
        return path

    if fid == "2c":
        res = results[0]
        grouped: dict = {}
        for r in res.curve_rows:
            k1, k2 = (int(x) for x in r["family"].split("-")[1:])
            for attr in (k1, k2):
                grouped.setdefault((attr, r["K"]), []).append(r["accuracy"])
        rows = [[attr, k, float(np.mean(v))]
                for (attr, k), v in sorted(grouped.items())]
        _write_rows(path, ["k1", "K", "accuracy"], rows)
        return path

    if fid in ("2d", "a4-bands"):
        res = results[0]
        stats = _mean_std_rows(res.curve_rows, ("target", "K"))
        rows = []
        for (target, k), (mean, std) in sorted(stats.items()):
            row = [target, k, mean, std]
            if fid == "a4-bands":
                row.append(int(k in _BAND_EDGES_D8))
            rows.append(row)
        header = ["target", "K", "mean_acc", "std_acc"]
        if fid == "a4-bands":
            header.append("band_edge")
        _write_rows(path, header, rows)
        return path

    if fid == "2e":
        res = results[0]
        stats = _mean_std_rows(res.curve_rows, ("sigma", "K"))
        rows = [[sigma, k, mean, std]
                for (sigma, k), (mean, std) in sorted(stats.items())]
        _write_rows(path, ["sigma", "K", "mean_acc", "std_acc"], rows)
        return path

    if fid == "2f":
        res = results[0]
        stats = _mean_std_rows(res.curve_rows, ("K",))
        rows = [[k[0], mean, std] for k, (mean, std) in sorted(stats.items())]
        _write_rows(path, ["K", "mean_acc", "std_acc"], rows)
        return path

    if fid == "3c":
        res = results[0]
        grouped: dict = {}
        for r in res.curve_rows:
            which, attr = r["prune"].split(":")
            k1, k2 = (int(x) for x in r["family"].split("-")[1:])
            involves = int(attr) in (k1, k2)
            grouped.setdefault((which, involves, r["K"]), []).append(
                r["accuracy"])
        rows = [[which, int(inv), k, float(np.mean(v))]
                for (which, inv, k), v in sorted(grouped.items())]
        _write_rows(path, ["pruned", "involves_pruned", "K", "mean_acc"], rows)
        return path

    if fid == "a4-noise":
        rows = []
        for res in results:
            d = res.spec.d
            stats = _mean_std_rows(res.curve_rows, ("sigma", "K"))
            for (sigma, k), (mean, _) in sorted(stats.items()):
                rescaled = k / (2.0 ** (d / 2.0) / sigma)
                rows.append([d, sigma, k, rescaled, mean])
        _write_rows(path, ["d", "sigma", "K", "K_rescaled", "accuracy"], rows)
        return path

    if fid == "a4-sparsify":
        res = results[0]
        d = res.spec.d
        grouped: dict = {}
        sizes: dict = {}
        for r in res.spectrum_rows:
            if r["rank"] >= d:
                continue
            key = (r["f"], r["rank"])
            grouped.setdefault(key, []).append(abs(r["value"]))
            sizes.setdefault(r["f"], []).append(r["n_words"])
        rows = []
        for (f, rank), vals in sorted(grouped.items()):
            m_mean = float(np.mean(sizes[f]))
            rescale = m_mean / (1 << d)
            rows.append([f, m_mean, rank, float(np.mean(vals)),
                         float(np.std(vals)),
                         float(np.mean(vals)) / rescale])
        _write_rows(path, ["f", "mean_m", "rank", "mean_abs_value",
                           "std_abs_value", "rescaled_value"], rows)
        return path

    raise SpecError(f"unknown figure id {figure_id!r}")


def run_figure(figure_id, out_dir=".", replicates=None, base_seed=7,
               workers=1) -> Path:
    """Run the experiments behind a figure and emit its tidy CSV."""
    specs = figure_spec(figure_id, out_dir=out_dir, replicates=replicates,
                        base_seed=base_seed, workers=workers)
    results = [run_experiment(spec) for spec in specs]
    return emit_figure_data(results, figure_id, out_dir)
