"""
Deterministic synthetic aerial scenarios.

All randomness comes from numpy's PCG64 generator seeded through
``SeedSequence(seed, spawn_key=(stream, index))``. Every object, group and
frame owns its own substream, so adding objects never perturbs the
trajectories of the others and golden files are stable across platforms.
Each simulation step draws a fixed number of variates regardless of which
features are enabled, which keeps substreams aligned between configurations.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import BoundingBox, Detection, ObjectId, SequenceMeta

_STREAM_OBJECT = 0
_STREAM_GROUP = 1
_STREAM_ENTRY = 2
_STREAM_NOISE = 3

CLASS_DEFAULTS = {
    # speed mean / sigma in m/s
    "pedestrian": {"speed_mean": 1.4, "speed_sigma": 0.3},
    "vehicle": {"speed_mean": 11.0, "speed_sigma": 3.0},
}


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def default_box_size(object_class: str, gsd: float) -> Tuple[float, float]:
    if object_class == "vehicle":
        return (30.0, 15.0)
    # 4 x 4 px at the finer GSDs, 5 x 5 px above 14 cm
    side = 4.0 if gsd <= 0.14 else 5.0
    return (side, side)


@dataclass(frozen=True)
class OcclusionZone:
    x1: float
    y1: float
    x2: float
    y2: float
    p_drop: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p_drop <= 1.0:
            raise ValueError("occlusion drop probability must lie in [0, 1]")

    def contains(self, x: float, y: float) -> bool:
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2


@dataclass(frozen=True)
class ScenarioConfig:
    """Simulator parameters.

    Speeds are in m/s and converted to px/frame via the frame rate and GSD.
    ``heading_noise`` is the per-frame standard deviation of the heading
    change in radians; ``group_cohesion`` is the per-frame velocity jitter
    (px/frame) of group members around the shared group velocity.
    ``layout="crossing2"`` ignores the random placement and produces two
    objects on perpendicular lines that meet mid-sequence.
    """

    meta: SequenceMeta = SequenceMeta(gsd=0.12, frame_rate=2.0, width=1000, height=1000, name="sim")
    n_objects: int = 15
    frames: int = 20
    object_class: str = "pedestrian"
    speed_mean: Optional[float] = None
    speed_sigma: Optional[float] = None
    heading_noise: float = 0.05
    group_fraction: float = 0.0
    group_cohesion: float = 0.3
    entry_prob: float = 0.0
    exit_prob: float = 0.0
    occlusion_zones: Tuple[OcclusionZone, ...] = ()
    box_size: Optional[Tuple[float, float]] = None
    min_separation_px: float = 0.0
    layout: str = "random"
    seed: int = 0
    max_attempts: int = 200

    def __post_init__(self):
        if self.object_class not in CLASS_DEFAULTS:
            raise ValueError(f"unknown object class {self.object_class!r}")
        if self.layout not in ("random", "crossing2"):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.n_objects < 0 or self.frames <= 0:
            raise ValueError("n_objects must be >= 0 and frames > 0")
        for name in ("group_fraction", "entry_prob", "exit_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("heading_noise", "group_cohesion", "min_separation_px"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.speed_mean is not None and self.speed_mean < 0:
            raise ValueError("speed_mean must be non-negative")
        if self.speed_sigma is not None and self.speed_sigma < 0:
            raise ValueError("speed_sigma must be non-negative")

    @property
    def speed(self) -> Tuple[float, float]:
        d = CLASS_DEFAULTS[self.object_class]
        mean = d["speed_mean"] if self.speed_mean is None else self.speed_mean
        sigma = d["speed_sigma"] if self.speed_sigma is None else self.speed_sigma
        return mean, sigma

    @property
    def box(self) -> Tuple[float, float]:
        if self.box_size is not None:
            return tuple(float(v) for v in self.box_size)
        return default_box_size(self.object_class, self.meta.gsd)

    def px_per_frame(self, speed_ms: float) -> float:
        return speed_ms / self.meta.frame_rate / self.meta.gsd

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        if "meta" in d and isinstance(d["meta"], dict):
            d["meta"] = SequenceMeta(**d["meta"])
        if "occlusion_zones" in d:
            d["occlusion_zones"] = tuple(
                z if isinstance(z, OcclusionZone) else OcclusionZone(**z) for z in d["occlusion_zones"])
        if d.get("box_size") is not None:
            d["box_size"] = tuple(d["box_size"])
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown scenario config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class NoiseConfig:
    jitter_sigma: float = 0.0
    p_miss: float = 0.0
    clutter_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be non-negative")
        if not 0.0 <= self.p_miss <= 1.0:
            raise ValueError("p_miss must lie in [0, 1]")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be non-negative")


@dataclass(frozen=True)
class Scenario:
    ground_truth: Dict[ObjectId, Dict[int, BoundingBox]]
    meta: SequenceMeta
    config: ScenarioConfig

    def frame_boxes(self, frame: int) -> Dict[ObjectId, BoundingBox]:
        return {oid: boxes[frame] for oid, boxes in self.ground_truth.items() if frame in boxes}


# -- simulation -------------------------------------------------------------

def _rotate(v: np.ndarray, angle: float) -> np.ndarray:
    if angle == 0.0:
        return v
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _inside(pos, box, meta: SequenceMeta) -> bool:
    hw, hh = box[0] / 2.0, box[1] / 2.0
    return (pos[0] - hw >= 0 and pos[0] + hw <= meta.width
            and pos[1] - hh >= 0 and pos[1] + hh <= meta.height)


def _walk(rng, cfg: ScenarioConfig, start: int, pos, vel, group_vel=None):
    """Advance one object; returns ({frame: center}, left_image)."""
    pos = np.asarray(pos, dtype=float)
    vel = np.asarray(vel, dtype=float)
    path = {start: (float(pos[0]), float(pos[1]))}
    for f in range(start + 1, cfg.frames):
        u_exit, z_head = rng.random(), rng.standard_normal()
        jx, jy = rng.standard_normal(), rng.standard_normal()
        if u_exit < cfg.exit_prob:
            return path, False
        if group_vel is not None:
            vel = group_vel[f] + cfg.group_cohesion * np.array([jx, jy])
        else:
            vel = _rotate(vel, cfg.heading_noise * z_head)
        pos = pos + vel
        if not _inside(pos, cfg.box, cfg.meta):
            return path, True
        path[f] = (float(pos[0]), float(pos[1]))
    return path, False


def _sample_velocity(rng, cfg: ScenarioConfig, heading: Optional[float] = None) -> np.ndarray:
    mean, sigma = cfg.speed
    speed = max(0.0, mean + sigma * rng.standard_normal())
    if heading is None:
        heading = rng.uniform(0.0, 2.0 * math.pi)
    else:
        rng.uniform()  # keep the draw count fixed
    px = cfg.px_per_frame(speed)
    return np.array([px * math.cos(heading), px * math.sin(heading)])


def _separated(path, others, min_sep: float) -> bool:
    if min_sep <= 0:
        return True
    for other in others:
        for f, (x, y) in path.items():
            q = other.get(f)
            if q is not None and math.hypot(x - q[0], y - q[1]) < min_sep:
                return False
    return True


def _random_position(rng, cfg: ScenarioConfig) -> np.ndarray:
    margin_x, margin_y = cfg.box
    return np.array([rng.uniform(margin_x, cfg.meta.width - margin_x),
                     rng.uniform(margin_y, cfg.meta.height - margin_y)])


def _crossing(cfg: ScenarioConfig) -> Dict[ObjectId, Dict[int, Tuple[float, float]]]:
    speed = cfg.px_per_frame(cfg.speed[0])
    mid = (cfg.frames - 1) / 2.0
    cx, cy = cfg.meta.width / 2.0, cfg.meta.height / 2.0
    paths = {0: {}, 1: {}}
    for f in range(cfg.frames):
        d = (f - mid) * speed
        paths[0][f] = (cx + d, cy)
        paths[1][f] = (cx, cy + d)
    for p in paths.values():
        if not all(_inside(q, cfg.box, cfg.meta) for q in p.values()):
            raise ValueError("crossing2 layout does not fit in the image; enlarge it or slow down")
    return paths


def simulate(cfg: ScenarioConfig) -> Scenario:
    box = cfg.box
    meta = cfg.meta
    if box[0] * 3 > meta.width or box[1] * 3 > meta.height:
        raise ValueError(f"box {box} does not fit the {meta.width}x{meta.height} image with margins")
    if cfg.min_separation_px > 0 and cfg.group_fraction > 0:
        raise ValueError("min_separation_px cannot be combined with groups")

    if cfg.layout == "crossing2":
        paths = _crossing(cfg)
    else:
        paths = _random_paths(cfg)

    gt = {oid: {f: BoundingBox.from_center(x, y, box[0], box[1]) for f, (x, y) in sorted(p.items())}
          for oid, p in sorted(paths.items())}
    return Scenario(ground_truth=gt, meta=meta, config=cfg)


def _random_paths(cfg: ScenarioConfig) -> Dict[ObjectId, Dict[int, Tuple[float, float]]]:
    seed = cfg.seed
    n_grouped = int(round(cfg.group_fraction * cfg.n_objects))
    # grouped objects come first, in groups of up to 4 members
    group_of: Dict[int, int] = {}
    gid, oid = 0, 0
    while oid < n_grouped:
        size = min(int(substream(seed, _STREAM_GROUP, gid).integers(2, 5)), n_grouped - oid)
        for _ in range(size):
            group_of[oid] = gid
            oid += 1
        gid += 1

    group_state: Dict[int, Tuple[np.ndarray, Dict[int, np.ndarray]]] = {}
    for g in sorted(set(group_of.values())):
        rng = substream(seed, _STREAM_GROUP, g)
        rng.integers(2, 5)
        anchor = _random_position(rng, cfg)
        vel = _sample_velocity(rng, cfg)
        gv = {}
        for f in range(1, cfg.frames):
            vel = _rotate(vel, cfg.heading_noise * rng.standard_normal())
            gv[f] = vel
        group_state[g] = (anchor, gv)

    paths: Dict[int, Dict[int, Tuple[float, float]]] = {}
    for oid in range(cfg.n_objects):
        rng = substream(seed, _STREAM_OBJECT, oid)
        chosen = None
        for attempt in range(cfg.max_attempts):
            if oid in group_of:
                anchor, gv = group_state[group_of[oid]]
                spread = 3.0 * max(cfg.box)
                pos = anchor + rng.uniform(-spread, spread, size=2)
                pos = np.clip(pos, [cfg.box[0], cfg.box[1]],
                              [cfg.meta.width - cfg.box[0], cfg.meta.height - cfg.box[1]])
                vel0 = gv.get(1, np.zeros(2))
                path, left = _walk(rng, cfg, 0, pos, vel0, group_vel=gv)
            else:
                pos = _random_position(rng, cfg)
                vel0 = _sample_velocity(rng, cfg)
                path, left = _walk(rng, cfg, 0, pos, vel0)
            if not _separated(path, paths.values(), cfg.min_separation_px):
                continue
            chosen = path
            # prefer objects that stay in view; fall back to border exits late on
            if not left or attempt >= cfg.max_attempts // 2:
                break
        if chosen is None:
            raise ValueError(f"could not place object {oid} with min_separation_px="
                             f"{cfg.min_separation_px} after {cfg.max_attempts} attempts")
        paths[oid] = chosen

    if cfg.entry_prob > 0:
        entry_rng = substream(seed, _STREAM_ENTRY, 0)
        next_id = cfg.n_objects
        for f in range(1, cfg.frames):
            if entry_rng.random() >= cfg.entry_prob:
                continue
            rng = substream(seed, _STREAM_OBJECT, next_id)
            for _ in range(cfg.max_attempts):
                pos, heading = _border_entry(rng, cfg)
                path, _ = _walk(rng, cfg, f, pos, _sample_velocity(rng, cfg, heading))
                if _separated(path, paths.values(), cfg.min_separation_px):
                    paths[next_id] = path
                    next_id += 1
                    break
    return paths


def _border_entry(rng, cfg: ScenarioConfig):
    """Position just inside a random image border, heading inward (+-60 deg)."""
    w, h = cfg.meta.width, cfg.meta.height
    bw, bh = cfg.box
    side = int(rng.integers(0, 4))
    t = rng.uniform(0.1, 0.9)
    spread = rng.uniform(-math.pi / 3, math.pi / 3)
    if side == 0:
        pos, base = (bw / 2 + 0.5, t * h), 0.0
    elif side == 1:
        pos, base = (w - bw / 2 - 0.5, t * h), math.pi
    elif side == 2:
        pos, base = (t * w, bh / 2 + 0.5), math.pi / 2
    else:
        pos, base = (t * w, h - bh / 2 - 0.5), -math.pi / 2
    return np.array(pos), base + spread


# -- detections -------------------------------------------------------------

def corrupt(s: Scenario, n: NoiseConfig) -> Dict[int, List[Detection]]:
    """Turn ground truth into per-frame detections with jitter, misses and clutter."""
    cfg = s.config
    bw, bh = cfg.box
    out: Dict[int, List[Detection]] = {}
    for f in range(cfg.frames):
        rng = substream(n.seed, _STREAM_NOISE, f)
        dets = []
        for oid, box in sorted(s.frame_boxes(f).items()):
            u_miss, u_zone = rng.random(), rng.random()
            dx, dy = n.jitter_sigma * rng.standard_normal(), n.jitter_sigma * rng.standard_normal()
            cx, cy = box.center
            p_zone = max((z.p_drop for z in cfg.occlusion_zones if z.contains(cx, cy)), default=0.0)
            if u_miss < n.p_miss or u_zone < p_zone:
                continue
            if dx == 0.0 and dy == 0.0:
                dets.append(Detection(frame=f, box=box))
            else:
                dets.append(Detection(frame=f, box=BoundingBox(box.x1 + dx, box.y1 + dy,
                                                               box.x2 + dx, box.y2 + dy)))
        for _ in range(int(rng.poisson(n.clutter_rate))):
            x = rng.uniform(bw / 2, s.meta.width - bw / 2)
            y = rng.uniform(bh / 2, s.meta.height - bh / 2)
            dets.append(Detection(frame=f, box=BoundingBox.from_center(x, y, bw, bh)))
        out[f] = dets
    return out


def detections_equal_truth(s: Scenario) -> Dict[int, List[Detection]]:
    """Ground truth fed straight through as detections (perfect detector)."""
    return corrupt(s, NoiseConfig())


# -- presets ----------------------------------------------------------------

def preset(name: str, seed: int = 0, **overrides) -> ScenarioConfig:
    """Named scenario configurations.

    sparse     ~15 pedestrians, few interactions.
    dense      ~250 pedestrians in a slowly moving crowd with groups.
    crowd      ~600 pedestrians (the largest sequences are about this size).
    lowfps     small 4 x 4 px pedestrians walking ~6 px per frame at 2 Hz.
    vehicles   30 x 15 px vehicles at road speeds.
    crossing2  two pedestrians on perpendicular lines meeting mid-sequence.
    """
    gsd = overrides.pop("gsd", 0.12)
    base = {
        "sparse": dict(size=(800, 800), n_objects=15, frames=20),
        "dense": dict(size=(1000, 1000), n_objects=250, frames=20, speed_mean=0.5, speed_sigma=0.25,
                      group_fraction=0.3, entry_prob=0.3, exit_prob=0.005),
        "crowd": dict(size=(1600, 1600), n_objects=600, frames=30, speed_mean=0.6, speed_sigma=0.3,
                      group_fraction=0.3, entry_prob=0.5, exit_prob=0.005),
        "lowfps": dict(size=(1000, 1000), n_objects=100, frames=20),
        "vehicles": dict(size=(2000, 1200), n_objects=40, frames=20, object_class="vehicle",
                         heading_noise=0.02),
        "crossing2": dict(size=(400, 400), n_objects=2, frames=21, layout="crossing2",
                          heading_noise=0.0),
    }
    if name not in base:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(base)}")
    params = dict(base[name])
    w, h = params.pop("size")
    meta = SequenceMeta(gsd=gsd, frame_rate=2.0, width=w, height=h, name=f"{name}-{seed}")
    params.update(overrides)
    return ScenarioConfig(meta=meta, seed=seed, **params)


PRESETS = ("sparse", "dense", "crowd", "lowfps", "vehicles", "crossing2")
