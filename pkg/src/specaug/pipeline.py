"""Manifest-driven batch augmentation and evaluation.

Manifest (JSON)::

    {"patch_size": 20, "window_lo": -1000, "window_hi": 400,
     "entries": [{"image_id": "a", "image_path": "a.spa", "label_path": "a.csv"}]}

Paths are relative to the manifest file. ``label_path`` and the window are
optional.

A policy is an ordered list of stages. The first stage produces R outputs per
eligible image; every later stage maps each of those outputs one-to-one, with
its own draws. Random draws for stage ``k`` of replication ``r`` of the image
at manifest position ``i`` come from ``NoiseDraw(master_seed, i, r, k)``, so
results do not depend on worker count or processing order.

``run_augment`` writes ``{image_id}__r{r}__{policy_hash}.spa`` (rawf64), a
matching ``.csv`` label file when labels exist, ``manifest.json`` listing the
outputs and ``audit.json``. Each audit record lists the concrete draws of every
stage (noise fraction and RNG key, gamma, affine parameters, displacement
grid), which is enough for :func:`replay_output` to rebuild that one output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import (
    AffineParams,
    DisplacementGrid,
    affine_transform,
    check_elastic_size,
    default_window,
    elastic_transform,
    gamma_transform,
    linear_values,
    sample_affine_params,
    sample_displacement_grid,
)
from .corruption import AugmentSpec, corrupt_dct, corrupt_dwt, rho_schedule
from .dct import dct2_forward, dct2_inverse
from .dwt import dwt2_forward, dwt2_inverse
from .image import LabelGrid, load_image, load_labels, save_image, save_labels
from .metrics import ConfusionCounts, confusion_counts, hole_fill, pixels_to_patches
from .rng import NoiseDraw

LOGGER = logging.getLogger(__name__)

FILTERS = ("all", "diseased_only")


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image_path: Path
    label_path: Path | None = None


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    patch_size: int = 20
    window_lo: float | None = None
    window_hi: float | None = None

    def __post_init__(self):
        ids = [e.image_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest image_ids must be unique")
        if self.patch_size < 1:
            raise ValueError("patch_size must be positive")
        if (self.window_lo is None) != (self.window_hi is None):
            raise ValueError("window_lo and window_hi must be given together")
        if self.window_lo is not None and not self.window_lo < self.window_hi:
            raise ValueError("window_lo must be below window_hi")

    @property
    def window(self):
        return None if self.window_lo is None else (self.window_lo, self.window_hi)

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        data = json.loads(path.read_text())
        root = path.parent
        try:
            entries = tuple(
                ManifestEntry(
                    str(e["image_id"]),
                    (root / e["image_path"]).resolve(),
                    (root / e["label_path"]).resolve() if e.get("label_path") else None,
                )
                for e in data["entries"]
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"{path}: malformed manifest entry") from exc
        manifest = cls(entries, int(data.get("patch_size", 20)), data.get("window_lo"), data.get("window_hi"))
        for e in manifest.entries:
            for p in (e.image_path, e.label_path):
                if p is not None and not p.is_file():
                    raise FileNotFoundError(f"{path}: referenced file {p} does not exist")
        return manifest

    def labels_for(self, entry: ManifestEntry) -> LabelGrid | None:
        if entry.label_path is None:
            return None
        return load_labels(entry.label_path, self.patch_size)

    def to_dict(self, root: Path | None = None) -> dict:
        def rel(p):
            return None if p is None else (str(p.relative_to(root)) if root else str(p))

        entries = []
        for e in self.entries:
            item = {"image_id": e.image_id, "image_path": rel(e.image_path)}
            if e.label_path is not None:
                item["label_path"] = rel(e.label_path)
            entries.append(item)
        out = {"patch_size": self.patch_size}
        if self.window is not None:
            out.update(window_lo=self.window_lo, window_hi=self.window_hi)
        out["entries"] = entries
        return out


@dataclass(frozen=True)
class PolicyConfig:
    """Ordered augmentation stages; every stage draws from ``master_seed``."""

    stages: tuple[AugmentSpec, ...]
    replication_filter: str = "all"
    master_seed: int = 0

    def __post_init__(self):
        if not self.stages:
            raise ValueError("a policy needs at least one stage")
        if self.replication_filter not in FILTERS:
            raise ValueError(f"replication_filter must be one of {FILTERS}")
        stages = tuple(replace(s, seed=self.master_seed) for s in self.stages)
        object.__setattr__(self, "stages", stages)

    @property
    def replications(self) -> int:
        return self.stages[0].replications

    def to_dict(self) -> dict:
        return {
            "stages": [s.to_dict() for s in self.stages],
            "replication_filter": self.replication_filter,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyConfig":
        return cls(
            tuple(AugmentSpec.from_dict(s) for s in data["stages"]),
            data.get("replication_filter", "all"),
            int(data.get("master_seed", 0)),
        )

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _window_for(stage: AugmentSpec, manifest_window, img):
    if stage.window is not None:
        return stage.window
    if manifest_window is not None:
        return manifest_window
    return default_window(img)


def plan_stage(stage: AugmentSpec, stage_index: int, img, image_index: int, r: int, R: int, manifest_window=None) -> dict:
    """Draw the concrete parameters stage ``stage_index`` uses for replication ``r`` of ``R``."""
    record = {"method": stage.method, "stage": stage_index}
    key = NoiseDraw(stage.seed, image_index, r, stage_index)
    if stage.method in ("dct", "dwt"):
        record.update(
            rho=rho_schedule(R, stage.eta)[r],
            seed=key.seed,
            image_index=image_index,
            replication=r,
            stream=stage_index,
        )
        if stage.method == "dwt":
            record.update(wavelet=stage.wavelet, levels=stage.levels, details_only=stage.details_only)
    elif stage.method == "intensity":
        record.update(
            gamma=linear_values(R, *stage.gamma_range)[r],
            window=list(_window_for(stage, manifest_window, img)),
        )
    elif stage.method == "affine":
        params = sample_affine_params(key, stage.rotation_max, stage.scale_range, stage.flip_prob)
        record.update(params.to_dict())
    elif stage.method == "elastic":
        check_elastic_size(img.shape, stage.grid, stage.disp_range[1])
        cap = linear_values(R, *stage.disp_range)[r]
        grid = sample_displacement_grid(key, stage.grid, cap)
        record.update(cap=cap, vectors=grid.vectors.tolist())
    return record


def apply_record(record: dict, img, labels: LabelGrid | None):
    """Apply one stage exactly as described by its audit record."""
    method = record["method"]
    if method in ("dct", "dwt"):
        noise = NoiseDraw(record["seed"], record["image_index"], record["replication"], record["stream"])
        if method == "dct":
            out = dct2_inverse(corrupt_dct(dct2_forward(img), record["rho"], noise))
        else:
            pyr = dwt2_forward(img, record["wavelet"], record["levels"])
            out = dwt2_inverse(corrupt_dwt(pyr, record["rho"], noise, record["details_only"]))
        return out, labels
    if method == "simple":
        return np.array(img, dtype=np.float64, copy=True), labels
    if method == "intensity":
        return gamma_transform(img, record["gamma"], tuple(record["window"])), labels
    if method == "affine":
        params = AffineParams(record["hflip"], record["vflip"], record["rotation_deg"], record["scale"])
        return affine_transform(img, labels, params)
    if method == "elastic":
        return elastic_transform(img, labels, DisplacementGrid(np.array(record["vectors"])))
    raise ValueError(f"unknown method {method!r}")


def output_name(image_id: str, r: int, policy_hash: str) -> str:
    return f"{image_id}__r{r}__{policy_hash}"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _augment_entry(manifest: Manifest, policy: PolicyConfig, index: int, out_dir: Path, phash: str):
    entry = manifest.entries[index]
    img = load_image(entry.image_path)
    labels = manifest.labels_for(entry)
    if labels is not None:
        labels.check_image_shape(img.shape)
    if policy.replication_filter == "diseased_only" and (labels is None or not labels.has_disease()):
        return None
    R = policy.replications
    records = []
    for r in range(R):
        out, out_labels, stages = img, labels, []
        for k, stage in enumerate(policy.stages):
            record = plan_stage(stage, k, out, index, r, R, manifest.window)
            out, out_labels = apply_record(record, out, out_labels)
            stages.append(record)
        name = output_name(entry.image_id, r, phash)
        save_image(out, out_dir / f"{name}.spa", "rawf64")
        label_file = None
        if out_labels is not None:
            label_file = f"{name}.csv"
            save_labels(out_labels, out_dir / label_file)
        records.append(
            {
                "output": f"{name}.spa",
                "labels": label_file,
                "image_id": entry.image_id,
                "image_index": index,
                "replication": r,
                "source_image": str(entry.image_path),
                "source_labels": None if entry.label_path is None else str(entry.label_path),
                "patch_size": manifest.patch_size,
                "sha256": _sha256(out_dir / f"{name}.spa"),
                "stages": stages,
            }
        )
    return records


def run_augment(manifest: Manifest, policy: PolicyConfig, out_dir, workers: int = 1) -> dict:
    """Augment every eligible manifest image; returns the audit summary (also written as ``audit.json``)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    phash = policy.hash()
    indices = range(len(manifest.entries))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _augment_entry(manifest, policy, i, out_dir, phash), indices))
    else:
        results = [_augment_entry(manifest, policy, i, out_dir, phash) for i in indices]
    outputs = [rec for res in results if res is not None for rec in res]
    skipped = [manifest.entries[i].image_id for i, res in enumerate(results) if res is None]
    summary = {
        "policy": policy.to_dict(),
        "policy_hash": phash,
        "counts": {
            "images": len(manifest.entries),
            "eligible": len(manifest.entries) - len(skipped),
            "skipped": len(skipped),
            "outputs": len(outputs),
        },
        "skipped": skipped,
        "outputs": outputs,
    }
    text = json.dumps(summary, indent=2) + "\n"
    (out_dir / "audit.json").write_text(text)
    out_manifest = {
        "patch_size": manifest.patch_size,
        "entries": [
            {
                "image_id": rec["output"][: -len(".spa")],
                "image_path": rec["output"],
                **({"label_path": rec["labels"]} if rec["labels"] else {}),
            }
            for rec in outputs
        ],
    }
    if manifest.window is not None:
        out_manifest.update(window_lo=manifest.window_lo, window_hi=manifest.window_hi)
    (out_dir / "manifest.json").write_text(json.dumps(out_manifest, indent=2) + "\n")
    LOGGER.info("wrote %d outputs for %d eligible images", len(outputs), summary["counts"]["eligible"])
    return json.loads(text)


def replay_output(audit, output: str):
    """Rebuild one output image (and labels) from its audit record alone."""
    if not isinstance(audit, dict):
        audit = json.loads(Path(audit).read_text())
    matches = [rec for rec in audit["outputs"] if rec["output"] == output]
    if not matches:
        raise KeyError(f"{output} not found in audit log")
    rec = matches[0]
    img = load_image(rec["source_image"])
    labels = load_labels(rec["source_labels"], rec["patch_size"]) if rec["source_labels"] else None
    for stage in rec["stages"]:
        img, labels = apply_record(stage, img, labels)
    return img, labels


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    @property
    def mean_f1(self) -> float:
        return float(np.mean([row[1].f1 for row in self.rows])) if self.rows else float("nan")

    @property
    def totals(self) -> ConfusionCounts:
        total = ConfusionCounts()
        for _, counts in self.rows:
            total = total + counts
        return total

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["image_id", "tp", "fp", "fn", "tn", "f1"])
            for image_id, c in self.rows:
                writer.writerow([image_id, c.tp, c.fp, c.fn, c.tn, repr(c.f1)])
            t = self.totals
            writer.writerow(["__mean__", t.tp, t.fp, t.fn, t.tn, repr(self.mean_f1)])


def run_eval(
    pred_manifest: Manifest,
    truth_manifest: Manifest,
    use_hole_fill: bool = False,
    threshold: float = 0.5,
    hole_fill_method: str = "closing",
    out_csv=None,
) -> EvalReport:
    """Score pixelwise predictions against patch labels.

    Prediction images are binarised at 0.5. The aggregate is the mean of the
    per-image F1 scores; the ``__mean__`` CSV row also carries summed counts.
    """
    truth = {e.image_id: e for e in truth_manifest.entries}
    pred_ids = [e.image_id for e in pred_manifest.entries]
    if sorted(pred_ids) != sorted(truth):
        missing = sorted(set(truth) ^ set(pred_ids))
        raise ValueError(f"prediction and truth image_ids differ: {missing}")
    report = EvalReport()
    for entry in pred_manifest.entries:
        t_entry = truth[entry.image_id]
        grid = truth_manifest.labels_for(t_entry)
        if grid is None:
            raise ValueError(f"truth entry {entry.image_id} has no labels")
        mask = load_image(entry.image_path) > 0.5
        if use_hole_fill:
            mask = hole_fill(mask, method=hole_fill_method)
        pred = pixels_to_patches(mask, grid, threshold)
        report.rows.append((entry.image_id, confusion_counts(pred, grid)))
    if out_csv is not None:
        report.write_csv(out_csv)
    return report
