"""Command-line harness: dataset ingestion, feature extraction, the
annotation benchmark, feature ablation, supervised evaluation, and the
labeling service."""

from __future__ import annotations

import csv
import functools
import json
import pickle
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import annotator, pipeline, synth
from .annotator import AnnotateConfig, GroundTruthOracle
from .audio import AudioDecodeError, load_audio
from .gbdt import GbdtParams, train_ova
from .pipeline import DEFAULT_SELECTION, FEATURE_NAMES, PipelineConfig


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def write_kv_report(path: Path, pairs: list[tuple[str, object]]) -> None:
    text = "".join(f"{k}\t{_fmt(v)}\n" for k, v in pairs)
    path.write_text(text)


def load_manifest(path: str | Path) -> tuple[list[str], list[dict]]:
    with open(path) as fh:
        doc = json.load(fh)
    class_names = doc.get("class_names")
    entries = doc.get("entries")
    if not isinstance(class_names, list) or not isinstance(entries, list) or not entries:
        raise ValueError("manifest must carry class_names and a non-empty entries list")
    seen = set()
    for e in entries:
        for key in ("id", "path", "label"):
            if key not in e:
                raise ValueError(f"manifest entry missing {key!r}")
        if e["id"] in seen:
            raise ValueError(f"duplicate manifest id: {e['id']}")
        seen.add(e["id"])
        if e["label"] not in class_names:
            raise ValueError(f"entry {e['id']} has unknown label {e['label']!r}")
    return class_names, entries


def _extract_matrix(
    entries: list[dict], selection: tuple[str, ...], cfg: PipelineConfig, workers: int
) -> np.ndarray:
    def one(entry: dict) -> np.ndarray:
        clip = load_audio(entry["path"], clip_id=entry["id"])
        return pipeline.assemble(clip, selection, cfg).values

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vectors = list(pool.map(one, entries))
    else:
        vectors = [one(e) for e in entries]
    return np.vstack(vectors)


def _extract_tolerant(
    entries: list[dict], selection: tuple[str, ...], cfg: PipelineConfig, workers: int
) -> tuple[list[dict], np.ndarray, list[tuple[str, str]]]:
    """Extract vectors, dropping clips that fail to decode.

    Failures are collected as (id, message) pairs; more than 1% of the
    corpus failing aborts the run.
    """

    def one(entry: dict):
        try:
            clip = load_audio(entry["path"], clip_id=entry["id"])
            return pipeline.assemble(clip, selection, cfg).values
        except (AudioDecodeError, OSError) as exc:
            return (entry["id"], str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, entries))
    else:
        results = [one(e) for e in entries]
    kept, vectors, failures = [], [], []
    for entry, res in zip(entries, results):
        if isinstance(res, tuple):
            failures.append(res)
        else:
            kept.append(entry)
            vectors.append(res)
    if len(failures) * 100 > len(entries):
        lines = "".join(f"\n  {cid}: {msg}" for cid, msg in failures)
        raise ValueError(f"{len(failures)}/{len(entries)} clips failed to decode (over 1%):{lines}")
    if not kept:
        raise ValueError("every clip failed to decode")
    return kept, np.vstack(vectors), failures


def _load_or_extract(
    manifest: str,
    cache: str | None,
    selection: tuple[str, ...],
    workers: int,
) -> tuple[list[str], np.ndarray, np.ndarray, list[dict]]:
    """Returns (class_names, features float64, labels, entries)."""
    class_names, entries = load_manifest(manifest)
    ids = [e["id"] for e in entries]
    labels = np.asarray([class_names.index(e["label"]) for e in entries])
    if cache and Path(cache).exists():
        cached_ids, vectors = pipeline.load_cache(cache)
        if cached_ids != ids:
            by_id = {e["id"]: e for e in entries}
            if not all(cid in by_id for cid in cached_ids):
                raise ValueError("feature cache does not match the manifest; re-run features")
            # Extraction may have dropped undecodable clips; keep the survivors.
            entries = [by_id[cid] for cid in cached_ids]
            labels = np.asarray([class_names.index(e["label"]) for e in entries])
        return class_names, vectors.astype(np.float64), labels, entries
    features = _extract_matrix(entries, selection, PipelineConfig(), workers)
    if cache:
        pipeline.save_cache(cache, ids, features.astype(np.float32))
        cached_ids, vectors = pipeline.load_cache(cache)
        return class_names, vectors.astype(np.float64), labels, entries
    return class_names, features, labels, entries


def guarded(fn):
    """Map validation failures to exit 2 and I/O failures to exit 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, AssertionError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def main() -> None:
    """Audio annotation harness."""


@main.command()
@click.option("--dataset-dir", required=True, type=click.Path(file_okay=False))
@click.option("--metadata", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@guarded
def ingest(dataset_dir: str, metadata: str, out: str) -> None:
    """Build a manifest from a metadata CSV.

    Accepts the 10-fold urban sound layout (slice_file_name, fold,
    classID, class; audio under fold{N}/) or a flat layout with
    sample_id, class columns and audio beside the CSV.
    """
    root = Path(dataset_dir)
    with open(metadata, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("metadata CSV is empty")
    entries = []
    classes: dict[str, int] = {}
    if "slice_file_name" in rows[0]:
        for row in rows:
            fold = int(row["fold"])
            path = root / f"fold{fold}" / row["slice_file_name"]
            entry_id = f"fold{fold}/{Path(row['slice_file_name']).stem}"
            entries.append({"id": entry_id, "path": str(path), "label": row["class"], "fold": fold})
            classes.setdefault(row["class"], int(row["classID"]))
        class_names = [c for c, _ in sorted(classes.items(), key=lambda kv: kv[1])]
    elif "sample_id" in rows[0]:
        for row in rows:
            path = root / f"{row['sample_id']}.wav"
            entries.append({"id": row["sample_id"], "path": str(path), "label": row["class"], "fold": 1})
            classes.setdefault(row["class"], len(classes))
        class_names = sorted(classes)
    else:
        raise ValueError("metadata CSV needs slice_file_name or sample_id columns")
    missing = [e for e in entries if not Path(e["path"]).exists()]
    if missing:
        for e in missing:
            click.echo(f"warning: skipping {e['id']}: file not found: {e['path']}", err=True)
        entries = [e for e in entries if Path(e["path"]).exists()]
    if not entries:
        raise ValueError("no rows reference an existing audio file")
    doc = {"class_names": class_names, "entries": entries}
    Path(out).write_text(json.dumps(doc, indent=1))
    click.echo(f"manifest: {len(entries)} clips, {len(class_names)} classes -> {out}")


@main.command()
@click.option("--manifest", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--selection", default=",".join(DEFAULT_SELECTION), show_default=True)
@click.option("--cache", required=True, type=click.Path(dir_okay=False))
@click.option("--workers", default=4, show_default=True)
@guarded
def features(manifest: str, selection: str, cache: str, workers: int) -> None:
    """Extract per-clip feature vectors into a binary cache."""
    names = tuple(s.strip() for s in selection.split(",") if s.strip())
    for name in names:
        if name not in FEATURE_NAMES:
            raise ValueError(f"unknown feature {name!r}; valid names: {', '.join(FEATURE_NAMES)}")
    class_names, entries = load_manifest(manifest)
    ids = [e["id"] for e in entries]
    if Path(cache).exists():
        cached_ids, vectors = pipeline.load_cache(cache)
        if cached_ids == ids or set(cached_ids) <= set(ids):
            click.echo(f"cache is warm: {len(cached_ids)} vectors of dim {vectors.shape[1]} at {cache}")
            return
    start = time.perf_counter()
    kept, matrix, failures = _extract_tolerant(entries, names, PipelineConfig(), workers)
    for cid, msg in failures:
        click.echo(f"warning: dropped {cid}: {msg}", err=True)
    pipeline.save_cache(cache, [e["id"] for e in kept], matrix.astype(np.float32))
    click.echo(
        f"extracted {matrix.shape[0]} vectors of dim {matrix.shape[1]} "
        f"in {time.perf_counter() - start:.1f}s -> {cache}"
    )


def _bench_config(seed, budget, gate, no_gate, stages, contamination, lof_k, rounds, depth, score_mode):
    return AnnotateConfig(
        budget=budget,
        gate=None if no_gate else gate,
        stages=stages,
        contamination=contamination,
        lof_k=lof_k,
        seed=seed,
        score_mode=score_mode,
        gbdt=GbdtParams(max_depth=depth, n_rounds=rounds),
    )


def run_benchmark(
    features_matrix: np.ndarray,
    reference: np.ndarray,
    class_names: list[str],
    config: AnnotateConfig,
) -> tuple[annotator.AnnotationState, list[tuple[str, object]]]:
    """One simulated-oracle annotation run plus its report rows."""
    oracle = GroundTruthOracle(reference)
    state = annotator.annotate(features_matrix, class_names, oracle, config)
    agree = state.labels == reference
    rows: list[tuple[str, object]] = [
        ("samples", state.n_samples),
        ("classes", len(class_names)),
        ("seed", config.seed),
        ("budget", config.budget),
        ("gate", "none" if config.gate is None else config.gate),
        ("stages", config.stages),
        ("contamination", config.contamination),
        ("lof_k", config.lof_k),
        ("rounds", config.gbdt.n_rounds),
        ("depth", config.gbdt.max_depth),
        ("score_mode", config.score_mode),
        ("accuracy", float(agree.mean())),
        ("human_labels", int(oracle.calls)),
        ("human_cap", state.human_cap),
        ("budget_fraction_used", oracle.calls / state.n_samples),
    ]
    for prov, name in annotator.PROVENANCE_NAMES.items():
        mask = state.provenance == prov
        rows.append((f"count_{name}", int(mask.sum())))
        if mask.any() and prov != annotator.Provenance.NONE:
            rows.append((f"accuracy_{name}", float(agree[mask].mean())))
    return state, rows


@main.command("annotate-bench")
@click.option("--manifest", type=click.Path(dir_okay=False, exists=True))
@click.option("--cache", type=click.Path(dir_okay=False))
@click.option("--selection", default=",".join(DEFAULT_SELECTION), show_default=True)
@click.option("--synthetic", is_flag=True, help="Use Gaussian blob features instead of audio.")
@click.option("--samples", default=2000, show_default=True)
@click.option("--dim", default=50, show_default=True)
@click.option("--classes", "n_classes", default=10, show_default=True)
@click.option("--separation", default=6.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--budget", default=0.15, show_default=True)
@click.option("--gate", default=0.7, show_default=True)
@click.option("--no-gate", is_flag=True, help="Disable the confidence gate.")
@click.option("--stages", default=4, show_default=True)
@click.option("--contamination", default=0.1, show_default=True)
@click.option("--lof-k", default=1, show_default=True)
@click.option("--rounds", default=100, show_default=True)
@click.option("--depth", default=6, show_default=True)
@click.option("--score-mode", type=click.Choice(["raw", "normalized"]), default="raw", show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Deterministic report file.")
@click.option("--labels-out", type=click.Path(dir_okay=False), help="Per-sample label TSV.")
@click.option("--save-state", type=click.Path(dir_okay=False), help="Pickle the run for query-extra.")
@guarded
def annotate_bench(
    manifest, cache, selection, synthetic, samples, dim, n_classes, separation,
    seed, budget, gate, no_gate, stages, contamination, lof_k, rounds, depth,
    score_mode, workers, out, labels_out, save_state,
) -> None:
    """Simulated-oracle annotation benchmark."""
    config = _bench_config(seed, budget, gate, no_gate, stages, contamination, lof_k, rounds, depth, score_mode)
    if synthetic:
        matrix, reference = synth.make_blobs(samples, dim, n_classes, separation, seed=seed)
        class_names = [f"class{c}" for c in range(n_classes)]
        ids = [f"blob{c:05d}" for c in range(samples)]
        source_rows: list[tuple[str, object]] = [
            ("source", "synthetic"),
            ("dim", dim),
            ("separation", separation),
        ]
    else:
        if not manifest:
            raise ValueError("either --synthetic or --manifest is required")
        names = tuple(s.strip() for s in selection.split(",") if s.strip())
        class_names, matrix, reference, entries = _load_or_extract(manifest, cache, names, workers)
        ids = [e["id"] for e in entries]
        source_rows = [("source", "manifest"), ("selection", ",".join(names)), ("dim", matrix.shape[1])]
    start = time.perf_counter()
    state, rows = run_benchmark(matrix, reference, class_names, config)
    elapsed = time.perf_counter() - start
    rows = source_rows + rows
    for key, value in rows:
        click.echo(f"{key}: {_fmt(value)}")
    click.echo(f"wall_time_s: {elapsed:.2f}")
    if out:
        write_kv_report(Path(out), rows)
    if labels_out:
        Path(labels_out).write_text(annotator.write_report(state, ids))
    if save_state:
        bundle = {"state": state, "features": matrix, "reference": reference, "ids": ids}
        Path(save_state).write_bytes(pickle.dumps(bundle))


@main.command("query-extra")
@click.option("--state", "state_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--fraction", default=0.009, show_default=True)
@click.option("--refit", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False))
@guarded
def query_extra_cmd(state_path: str, fraction: float, refit: bool, out: str | None) -> None:
    """Spend a sliver of extra budget on the weakest machine labels."""
    bundle = pickle.loads(Path(state_path).read_bytes())
    state = bundle["state"]
    reference = bundle["reference"]
    before = float((state.labels == reference).mean())
    oracle = GroundTruthOracle(reference)
    replaced = annotator.query_extra(state, bundle["features"], oracle, fraction=fraction, refit=refit)
    after = float((state.labels == reference).mean())
    rows = [
        ("fraction", fraction),
        ("replaced", replaced),
        ("accuracy_before", before),
        ("accuracy_after", after),
    ]
    for key, value in rows:
        click.echo(f"{key}: {_fmt(value)}")
    if out:
        write_kv_report(Path(out), rows)
    Path(state_path).write_bytes(
        pickle.dumps({**bundle, "state": state})
    )


def run_ablation(
    blocks: dict[str, np.ndarray],
    labels: np.ndarray,
    seed: int = 0,
    val_fraction: float = 0.1,
    params: GbdtParams | None = None,
    beam: int = 2,
) -> list[dict]:
    """Greedy forward feature-set search with a two-set frontier.

    The validation split is a deterministic stratified draw: within each
    class the indices are shuffled by the seeded generator and the first
    val_fraction (at least one sample when the class has two or more) is
    held out. Each phase extends every frontier set by one unused
    feature, evaluates validation accuracy, and keeps the best `beam`
    sets. The search stops when a phase fails to strictly improve on the
    best accuracy seen so far.
    """
    params = params or GbdtParams(max_depth=4, n_rounds=30)
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must sit strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    val_parts = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            continue
        take = min(members.size - 1, max(1, int(round(val_fraction * members.size))))
        val_parts.append(rng.permutation(members)[:take])
    if not val_parts:
        raise ValueError("every class has a single sample; nothing to hold out")
    val_idx = np.sort(np.concatenate(val_parts))
    train_idx = np.setdiff1d(np.arange(labels.size), val_idx)
    if np.unique(labels[train_idx]).size < 2:
        raise ValueError("training split holds a single class; lower val_fraction")

    def evaluate(combo: tuple[str, ...]) -> float:
        matrix = np.hstack([blocks[name] for name in combo])
        qmap = pipeline.fit_quantile_map(matrix[train_idx])
        transformed = qmap.transform(matrix)
        model = train_ova(transformed[train_idx], [str(c) for c in labels[train_idx]], params)
        winner, _ = model.predict_batch(transformed[val_idx])
        predicted = np.asarray([int(model.classes[w]) for w in winner])
        return float((predicted == labels[val_idx]).mean())

    names = sorted(blocks)
    frontier: list[tuple[str, ...]] = [()]
    best_so_far = -1.0
    history: list[dict] = []
    while True:
        candidates: dict[tuple[str, ...], float] = {}
        for base in frontier:
            for name in names:
                if name in base:
                    continue
                combo = tuple(sorted((*base, name)))
                if combo not in candidates:
                    candidates[combo] = evaluate(combo)
        if not candidates:
            break
        ranked = sorted(candidates.items(), key=lambda kv: (-kv[1], kv[0]))
        phase_best = ranked[0][1]
        history.append(
            {
                "phase": len(history) + 1,
                "results": {" + ".join(c): acc for c, acc in ranked},
                "kept": [" + ".join(c) for c, _ in ranked[:beam]],
                "best_accuracy": phase_best,
            }
        )
        if phase_best <= best_so_far:
            break
        best_so_far = phase_best
        frontier = [c for c, _ in ranked[:beam]]
    return history


@main.command()
@click.option("--manifest", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--candidates", default="mfcc,contrast,chroma,zcr,rms,centroid,bandwidth,rolloff,flatness")
@click.option("--val-fraction", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--rounds", default=30, show_default=True)
@click.option("--depth", default=4, show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@guarded
def ablate(manifest, candidates, val_fraction, seed, rounds, depth, workers, out) -> None:
    """Greedy feature-set ablation over summarized feature blocks."""
    names = tuple(s.strip() for s in candidates.split(",") if s.strip())
    for name in names:
        if name not in FEATURE_NAMES:
            raise ValueError(f"unknown feature {name!r}; valid names: {', '.join(FEATURE_NAMES)}")
    class_names, entries = load_manifest(manifest)
    labels = np.asarray([class_names.index(e["label"]) for e in entries])
    cfg = PipelineConfig()

    def block_for(entry: dict) -> dict[str, np.ndarray]:
        clip = load_audio(entry["path"], clip_id=entry["id"])
        return {name: pipeline.feature_block(clip, name, cfg)[0] for name in names}

    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_clip = list(pool.map(block_for, entries))
    blocks = {name: np.vstack([row[name] for row in per_clip]) for name in names}
    history = run_ablation(
        blocks, labels, seed=seed, val_fraction=val_fraction, params=GbdtParams(max_depth=depth, n_rounds=rounds)
    )
    lines = ["phase\tfeature_set\tval_accuracy\tkept"]
    for record in history:
        for combo, acc in record["results"].items():
            kept = "*" if combo in record["kept"] else ""
            lines.append(f"{record['phase']}\t{combo}\t{_fmt(acc)}\t{kept}")
    text = "\n".join(lines) + "\n"
    click.echo(text, nl=False)
    if out:
        Path(out).write_text(text)


def _knn_predict(train_x: np.ndarray, train_y: np.ndarray, test_x: np.ndarray, k: int = 5) -> np.ndarray:
    out = np.empty(test_x.shape[0], dtype=np.int64)
    chunk = 256
    for start in range(0, test_x.shape[0], chunk):
        block = test_x[start : start + chunk]
        d2 = ((block[:, None, :] - train_x[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        votes = train_y[nearest]
        for row in range(votes.shape[0]):
            counts = np.bincount(votes[row])
            out[start + row] = int(counts.argmax())
    return out


@main.command()
@click.option("--manifest", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--cache", type=click.Path(dir_okay=False))
@click.option("--selection", default=",".join(DEFAULT_SELECTION), show_default=True)
@click.option("--train-folds", required=True, help="Comma-separated fold numbers.")
@click.option("--test-folds", required=True, help="Comma-separated fold numbers.")
@click.option("--rounds", default=100, show_default=True)
@click.option("--depth", default=6, show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@guarded
def evaluate(manifest, cache, selection, train_folds, test_folds, rounds, depth, workers, out_dir) -> None:
    """Fully supervised train/test evaluation with a kNN baseline."""
    names = tuple(s.strip() for s in selection.split(",") if s.strip())
    class_names, matrix, labels, entries = _load_or_extract(manifest, cache, names, workers)
    folds = np.asarray([int(e.get("fold", 1)) for e in entries])
    train_set = {int(f) for f in train_folds.split(",")}
    test_set = {int(f) for f in test_folds.split(",")}
    if train_set & test_set:
        raise ValueError("train and test folds overlap")
    train_idx = np.flatnonzero(np.isin(folds, sorted(train_set)))
    test_idx = np.flatnonzero(np.isin(folds, sorted(test_set)))
    if train_idx.size == 0 or test_idx.size == 0:
        raise ValueError("empty train or test split; check fold numbers")
    absent = [c for i, c in enumerate(class_names) if not np.any(labels[train_idx] == i)]
    for name in absent:
        click.echo(f"warning: class {name!r} absent from training folds; it can never be predicted", err=True)

    qmap = pipeline.fit_quantile_map(matrix[train_idx])
    transformed = qmap.transform(matrix)
    model = train_ova(
        transformed[train_idx],
        [class_names[labels[i]] for i in train_idx],
        GbdtParams(max_depth=depth, n_rounds=rounds),
    )
    winner, _ = model.predict_batch(transformed[test_idx])
    to_global = np.asarray([class_names.index(c) for c in model.classes])
    predicted = to_global[winner]
    truth = labels[test_idx]
    accuracy = float((predicted == truth).mean())
    knn = _knn_predict(transformed[train_idx], labels[train_idx], transformed[test_idx], k=5)
    knn_accuracy = float((knn == truth).mean())

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_classes = len(class_names)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (truth, predicted), 1)
    with open(out / "confusion.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\predicted", *class_names])
        for c in range(n_classes):
            writer.writerow([class_names[c], *confusion[c].tolist()])
    rows: list[tuple[str, object]] = [
        ("train_clips", int(train_idx.size)),
        ("test_clips", int(test_idx.size)),
        ("selection", ",".join(names)),
        ("rounds", rounds),
        ("depth", depth),
        ("accuracy", accuracy),
        ("knn_accuracy", knn_accuracy),
    ]
    for c, name in enumerate(class_names):
        mask = truth == c
        if mask.any():
            rows.append((f"accuracy_{name}", float((predicted[mask] == c).mean())))
    write_kv_report(out / "report.tsv", rows)
    for key, value in rows:
        click.echo(f"{key}: {_fmt(value)}")


@main.command()
@click.option("--dataset-dir", type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--ui-dir", type=click.Path(file_okay=False))
@click.option("--snapshot-dir", type=click.Path(file_okay=False))
@guarded
def serve(dataset_dir, host, port, ui_dir, snapshot_dir) -> None:
    """Run the HTTP labeling service."""
    from .service import create_app, serve as run_service

    app = create_app(data_dir=dataset_dir, ui_dir=ui_dir, snapshot_dir=snapshot_dir)
    click.echo(f"listening on http://{host}:{port}")
    run_service(app, host=host, port=port)


@main.command("make-toyset")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--clips", default=50, show_default=True)
@click.option("--classes", "n_classes", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@guarded
def make_toyset(out, clips, n_classes, seed) -> None:
    """Generate a small labeled WAV set for demos and integration tests."""
    ids, _, _ = synth.make_tone_dataset(out, n_clips=clips, n_classes=n_classes, seed=seed)
    click.echo(f"wrote {len(ids)} clips across {n_classes} classes to {out}")


if __name__ == "__main__":
    main()
