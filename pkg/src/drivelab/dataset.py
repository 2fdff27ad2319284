"""Labeled dataset generation: episodes -> frames on disk + JSON-lines records.

A dataset directory holds one ``manifest.json``, one ``records_<split>.jsonl``
per split, and the rendered frames as binary P6 pixmaps. Records are cleaned
before splitting (off-road ego, collision-flagged snapshots, non-finite
labels, encode failures), and the split is at episode granularity: all
surviving frames of an episode land in the same split, so near-duplicate
frames 250 ms apart can never straddle the train/evaluation boundary.

Split sizing uses cumulative floor boundaries: with ratios (0.725, 0.1375,
0.1375), train takes floor(0.725 n) episodes, validation up to
floor(0.8625 n), and test the tail; 1000 episodes split 725/137/138.

Channel means are computed from the train split only and stored in the
manifest so evaluation-time centering can never peek at held-out pixels. The
manifest is byte-deterministic for a fixed (world, config, seed).
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from . import camera
from .affordances import AffordanceVector, NormalizationRanges, apply_limits, encode
from .geo import WorldData, save_world
from .roads import RoadNetwork
from .sim import EpisodeConfig, Trace, episode_seed, run_episode

MANIFEST_VERSION = 1
DEFAULT_RATIOS = (0.725, 0.1375, 0.1375)
SPLITS = ("train", "val", "test")


@dataclass
class LabeledRecord:
    """One frame with its encoded label and enough provenance to audit it."""

    frame_path: str  # relative to the dataset root
    encoded: list[float]
    raw: dict  # variable -> physical value or None (inactive), post range rule
    episode_index: int
    episode_seed: int
    sample: int
    t: float
    time_of_day: float
    off_road: bool = False
    collided: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledRecord":
        return cls(**d)


@dataclass
class CleanReport:
    kept: list[LabeledRecord]
    rejected: list[tuple[LabeledRecord, str]]

    def rejection_rate(self) -> float:
        total = len(self.kept) + len(self.rejected)
        return len(self.rejected) / total if total else 0.0


def clean(records: list[LabeledRecord]) -> CleanReport:
    """Drop records that would poison training; every rejection keeps its reason."""
    kept: list[LabeledRecord] = []
    rejected: list[tuple[LabeledRecord, str]] = []
    for r in records:
        if r.off_road:
            rejected.append((r, "ego off road"))
            continue
        if r.collided:
            rejected.append((r, "collision-flagged episode state"))
            continue
        enc = np.asarray(r.encoded, dtype=float)
        if not np.all(np.isfinite(enc)):
            rejected.append((r, "non-finite label"))
            continue
        kept.append(r)
    return CleanReport(kept=kept, rejected=rejected)


def split_episodes(
    records: list[LabeledRecord], ratios=DEFAULT_RATIOS, seed: int = 0
) -> dict[str, list[LabeledRecord]]:
    """Episode-level split with a seeded shuffle and cumulative floor boundaries."""
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be three non-negative numbers summing to 1")
    episodes = sorted({r.episode_index for r in records})
    rng = np.random.Generator(np.random.PCG64(seed))
    order = [episodes[i] for i in rng.permutation(len(episodes))]
    n = len(order)
    b1 = math.floor(ratios[0] * n)
    b2 = math.floor((ratios[0] + ratios[1]) * n)
    assign: dict[int, str] = {}
    for i, ep in enumerate(order):
        assign[ep] = "train" if i < b1 else ("val" if i < b2 else "test")
    out: dict[str, list[LabeledRecord]] = {s: [] for s in SPLITS}
    for r in records:
        out[assign[r.episode_index]].append(r)
    return out


def split_counts(n_episodes: int, ratios=DEFAULT_RATIOS) -> tuple[int, int, int]:
    b1 = math.floor(ratios[0] * n_episodes)
    b2 = math.floor((ratios[0] + ratios[1]) * n_episodes)
    return (b1, b2 - b1, n_episodes - b2)


@dataclass
class DatasetManifest:
    seed: int
    episodes: int
    ranges: NormalizationRanges
    channel_means: list[float]
    counts: dict
    record_files: dict
    world_file: str
    config: dict
    rejected: list = field(default_factory=list)
    version: int = MANIFEST_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "episodes": self.episodes,
            "ranges": self.ranges.to_dict(),
            "channel_means": self.channel_means,
            "counts": self.counts,
            "record_files": self.record_files,
            "world_file": self.world_file,
            "config": self.config,
            "rejected": self.rejected,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        if d.get("version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {d.get('version')!r}")
        return cls(
            seed=d["seed"],
            episodes=d["episodes"],
            ranges=NormalizationRanges.from_dict(d["ranges"]),
            channel_means=list(d["channel_means"]),
            counts=d["counts"],
            record_files=d["record_files"],
            world_file=d["world_file"],
            config=d["config"],
            rejected=d.get("rejected", []),
            version=d["version"],
        )


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.to_dict(), f, sort_keys=True, separators=(",", ":"))


def load_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as f:
        return DatasetManifest.from_dict(json.load(f))


def save_records(records: list[LabeledRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def load_records(path) -> list[LabeledRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(LabeledRecord.from_dict(json.loads(line)))
    return out


def label_snapshot(snapshot, ranges: NormalizationRanges) -> tuple[list[float], dict, bool]:
    """(encoded label, stored raw dict, ok) for one snapshot's affordances.

    The stored raw values are post range rule, so decode(encode) reproduces
    them exactly.
    """
    if snapshot.affordances is None:
        nan = [float("nan")] * 8
        return nan, {}, False
    limited = apply_limits(snapshot.affordances, ranges)
    enc = encode(limited, ranges)
    return [float(v) for v in enc], limited.as_dict(), True


def generate_dataset(
    world_data: WorldData,
    out_dir,
    episodes: int,
    seed: int,
    base_config: EpisodeConfig | None = None,
    ratios=DEFAULT_RATIOS,
    ranges: NormalizationRanges | None = None,
    rig: camera.CameraRig | None = None,
    world_file_name: str = "world.json",
) -> DatasetManifest:
    """Run episodes, render every snapshot, clean, split, and write the dataset."""
    if episodes <= 0:
        raise ValueError("episodes must be positive")
    ranges = ranges or NormalizationRanges.default()
    rig = rig or camera.CameraRig()
    base = base_config or EpisodeConfig()
    network = RoadNetwork.from_world(world_data)

    os.makedirs(out_dir, exist_ok=True)
    frames_root = os.path.join(out_dir, "frames")
    os.makedirs(frames_root, exist_ok=True)

    records: list[LabeledRecord] = []
    for ep in range(episodes):
        ep_seed = episode_seed(seed, ep)
        cfg_fields = {k: getattr(base, k) for k in base.__dataclass_fields__}
        cfg_fields["seed"] = ep_seed
        cfg = EpisodeConfig(**cfg_fields)
        trace = run_episode(world_data, cfg)
        ep_dir = os.path.join(frames_root, f"ep{ep:05d}")
        os.makedirs(ep_dir, exist_ok=True)
        for snap in trace.snapshots:
            frame = camera.render(rig, network, world_data.buildings, snap)
            rel = os.path.join("frames", f"ep{ep:05d}", f"frame_{snap.sample:04d}.ppm")
            camera.write_ppm(frame, os.path.join(out_dir, rel))
            encoded, raw, ok = label_snapshot(snap, ranges)
            records.append(
                LabeledRecord(
                    frame_path=rel,
                    encoded=encoded,
                    raw=raw,
                    episode_index=ep,
                    episode_seed=ep_seed,
                    sample=snap.sample,
                    t=snap.t,
                    time_of_day=snap.time_of_day,
                    off_road=snap.off_road or not ok,
                    collided=snap.collided,
                )
            )

    report = clean(records)
    splits = split_episodes(report.kept, ratios=ratios, seed=seed)

    # Streamed mean of per-frame means; frames share one shape, so this equals
    # the global mean without ever holding the whole split in memory.
    frame_means = []
    for r in splits["train"]:
        f = camera.read_ppm(os.path.join(out_dir, r.frame_path))
        frame_means.append(f.reshape(-1, 3).mean(axis=0))
    if not frame_means:
        raise ValueError("cleaning left no training frames; generate more episodes")
    means = np.asarray(frame_means).mean(axis=0)

    record_files = {}
    counts: dict = {"records": {}, "episodes": {}}
    for name in SPLITS:
        fname = f"records_{name}.jsonl"
        save_records(splits[name], os.path.join(out_dir, fname))
        record_files[name] = fname
        counts["records"][name] = len(splits[name])
        counts["episodes"][name] = len({r.episode_index for r in splits[name]})
    counts["rejected"] = len(report.rejected)
    counts["total_generated"] = len(records)

    save_world(world_data, os.path.join(out_dir, world_file_name))

    manifest = DatasetManifest(
        seed=seed,
        episodes=episodes,
        ranges=ranges,
        channel_means=[float(m) for m in means],
        counts=counts,
        record_files=record_files,
        world_file=world_file_name,
        config={
            "duration_s": base.duration_s,
            "sample_interval_s": base.sample_interval_s,
            "traffic_density": base.traffic_density,
            "ratios": list(ratios),
        },
        rejected=[[r.frame_path, reason] for r, reason in report.rejected],
    )
    save_manifest(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


def load_split_arrays(dataset_dir, split: str, manifest: DatasetManifest | None = None):
    """(inputs, targets, raw records) for one split, ready for the learner.

    Frames are downsampled 4x, centered with the manifest's train-split
    channel means, and scaled into [-1, 1]. The scaling is load-bearing:
    centered raw pixels span +-255, which drives the He-initialized trunk
    into tanh saturation and training never leaves the rim.
    """
    manifest = manifest or load_manifest(os.path.join(dataset_dir, "manifest.json"))
    records = load_records(os.path.join(dataset_dir, manifest.record_files[split]))
    if not records:
        return np.zeros((0, 52, 70, 3)), np.zeros((0, 8)), []
    means = np.asarray(manifest.channel_means)
    first = camera.downsample(camera.read_ppm(os.path.join(dataset_dir, records[0].frame_path)))
    # Fill a preallocated block; a list of per-frame arrays doubles the peak.
    x = np.empty((len(records),) + first.shape)
    y = np.empty((len(records), len(records[0].encoded)))
    for i, r in enumerate(records):
        frame = camera.read_ppm(os.path.join(dataset_dir, r.frame_path))
        x[i] = (camera.downsample(frame) - means) / 255.0
        y[i] = r.encoded
    return x, y, records
