"""Fixation policy: per-cell scoring head, REINFORCE trainer, checkpoints.

The policy scores a coarse action grid laid over the viewing field. Scoring is
strictly pointwise (1x1 projections), so each cell's score depends only on that
cell's feature vector; spatial structure enters through the features and the
Gaussian-smoothed policy gradient, never through cross-cell weights.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataFormatError, DomainError
from .foveation import DEFAULT_ALPHA, resolution_map, ResolutionMap
from .geometry import (
    DEFAULT_FIELD,
    FieldGeometry,
    FixationPoint,
    eccentricity_map,
)
from .oracle import (
    DEFAULT_SAMPLES,
    Scene,
    describe,
    gate,
    mean_entropy,
    semantic_accuracy,
    visibility,
    build_reward_trace,
    CATEGORIES,
)

DEFAULT_CHANNELS = 64
DEFAULT_GRID = (20, 20)
BLOCK_BATCHES = 5  # batches given to one step-network before moving on
_STD_EPS = 1e-6
_LN_EPS = 1e-5
_POSITIONAL_SEED = 7654321
_CHECKPOINT_MAGIC = b"GZPC1\n"

_positional_cache = {}


# ---------------------------------------------------------------------------
# feature grids


@dataclass(frozen=True)
class FeatureGrid:
    """Per-cell feature vectors over the action grid, shape (h, w, c)."""

    features: np.ndarray
    h: int
    w: int
    c: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.shape != (self.h, self.w, self.c):
            raise DomainError(
                f"feature block {feats.shape} does not match ({self.h}, {self.w}, {self.c})"
            )
        if not np.all(np.isfinite(feats)):
            raise DomainError("feature grid contains non-finite values")
        object.__setattr__(self, "features", feats)


def _positional_channels(h: int, w: int, count: int) -> np.ndarray:
    """Fixed seeded sinusoid bank over normalized cell coordinates."""
    key = (h, w, count)
    cached = _positional_cache.get(key)
    if cached is not None:
        return cached
    rng = np.random.default_rng(_POSITIONAL_SEED)
    u = (np.arange(w) + 0.5) / w
    v = (np.arange(h) + 0.5) / h
    out = np.empty((h, w, count))
    for p in range(count):
        wx, wy = rng.uniform(0.5, 3.5, size=2)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        out[:, :, p] = np.sin(2.0 * math.pi * (wx * u[None, :] + wy * v[:, None]) + phase)
    _positional_cache[key] = out
    return out


def featurize(
    scene: Scene,
    rmap: ResolutionMap,
    grid: "tuple[int, int]" = DEFAULT_GRID,
    c: int = DEFAULT_CHANNELS,
) -> FeatureGrid:
    """Summarize the current view per action cell.

    Channel layout (stable): 0 mean resolution; 1..6 per-category coverage
    fractions; 7 missing-information mass, the coverage-weighted sum of
    (1 - gate(visibility)) * weight over overlapping regions. With c > 8 the
    tail holds min(concept_dim, c - 9) signed concept projections of that
    missing mass, then seeded positional sinusoids, then a constant-1
    channel. Requires c >= 8. The map covers the full field; region masks
    are offset by the scene placement.
    """
    gh, gw = grid
    if gh < 1 or gw < 1:
        raise DomainError(f"action grid must be positive, got {grid}")
    if c < 8:
        raise DomainError(f"need at least 8 feature channels, got {c}")
    fh, fw = rmap.r.shape
    if fh % gh or fw % gw:
        raise DomainError(
            f"grid {gh}x{gw} does not divide the {fw}x{fh} field evenly"
        )
    cell_h, cell_w = fh // gh, fw // gw
    cell_area = cell_h * cell_w

    feats = np.zeros((gh, gw, c))
    feats[:, :, 0] = rmap.r.reshape(gh, cell_h, gw, cell_w).mean(axis=(1, 3))

    n_miss = min(scene.dim, c - 9) if c > 8 else 0
    ox, oy = scene.placement.offset_x, scene.placement.offset_y
    iw, ih = scene.placement.width, scene.placement.height
    win = rmap.r[oy : oy + ih, ox : ox + iw]
    win_map = ResolutionMap(r=win, alpha=rmap.alpha)
    cat_channel = {name: 1 + k for k, name in enumerate(CATEGORIES)}
    for reg in scene.regions:
        ys, xs = reg.mask.indices(iw, ih)
        cell_idx = ((ys + oy) // cell_h) * gw + ((xs + ox) // cell_w)
        frac = np.bincount(cell_idx, minlength=gh * gw) / cell_area
        frac = frac.reshape(gh, gw)
        feats[:, :, cat_channel[reg.category]] += frac
        missing = (1.0 - gate(visibility(reg, win_map))) * reg.weight
        feats[:, :, 7] += frac * missing
        if n_miss:
            feats[:, :, 8 : 8 + n_miss] += (
                frac[:, :, None] * missing * reg.concept[None, None, :n_miss]
            )
    if c > 8:
        feats[:, :, c - 1] = 1.0
        n_pos = c - 9 - n_miss
        if n_pos > 0:
            feats[:, :, 8 + n_miss : c - 1] = _positional_channels(gh, gw, n_pos)
    return FeatureGrid(features=feats, h=gh, w=gw, c=c)


# ---------------------------------------------------------------------------
# network


def cascade_widths(c: int) -> "tuple[int, ...]":
    """Channel widths of the pointwise stack: divide by 4 down to 1."""
    if c < 2:
        raise DomainError(f"need at least 2 input channels, got {c}")
    widths = [c]
    while widths[-1] > 1:
        widths.append(max(1, widths[-1] // 4))
    return tuple(widths)


@dataclass(frozen=True)
class PolicyNetwork:
    """Pointwise scoring stack for one fixation step.

    Parameter names: ``w{i}``/``b{i}`` for the i-th projection and, for every
    layer after the first, ``g{i}``/``be{i}`` for the learned layer-norm
    affine applied to that layer's input.
    """

    widths: "tuple[int, ...]"
    params: "dict[str, np.ndarray]"
    fixation_index: int

    def __post_init__(self):
        expected = set(_param_names(self.widths))
        if set(self.params) != expected:
            raise DomainError(
                f"parameter set {sorted(self.params)} does not match widths {self.widths}"
            )

    @property
    def in_channels(self) -> int:
        return self.widths[0]


def _param_names(widths) -> "list[str]":
    names = []
    for i in range(len(widths) - 1):
        if i > 0:
            names += [f"g{i}", f"be{i}"]
        names += [f"w{i}", f"b{i}"]
    return names


def init_policy_network(c: int, fixation_index: int, seed: int) -> PolicyNetwork:
    """Seeded Glorot-uniform projections, identity layer norms, zero biases."""
    widths = cascade_widths(c)
    rng = np.random.default_rng(seed)
    params = {}
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        if i > 0:
            params[f"g{i}"] = np.ones(fan_in)
            params[f"be{i}"] = np.zeros(fan_in)
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        params[f"w{i}"] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params[f"b{i}"] = np.zeros(fan_out)
    return PolicyNetwork(widths=widths, params=params, fixation_index=fixation_index)


def _forward_with_cache(net: PolicyNetwork, feats: FeatureGrid):
    if feats.c != net.in_channels:
        raise DomainError(
            f"feature width {feats.c} does not match network input {net.in_channels}"
        )
    x = feats.features.reshape(-1, feats.c)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    h = (x - mu) / (sd + _STD_EPS)
    cache = {"shape": (feats.h, feats.w), "acts": [], "ln": [], "pre": []}
    n_layers = len(net.widths) - 1
    for i in range(n_layers):
        if i > 0:
            m = h.mean(axis=1, keepdims=True)
            v = h.var(axis=1, keepdims=True)
            inv = 1.0 / np.sqrt(v + _LN_EPS)
            xhat = (h - m) * inv
            cache["ln"].append((xhat, inv))
            h = net.params[f"g{i}"] * xhat + net.params[f"be{i}"]
        cache["acts"].append(h)
        z = h @ net.params[f"w{i}"] + net.params[f"b{i}"]
        if i < n_layers - 1:
            cache["pre"].append(z)
            h = np.maximum(z, 0.0)
    score = z[:, 0].reshape(feats.h, feats.w)
    if not np.all(np.isfinite(score)):
        raise DomainError("score map overflowed to non-finite values")
    return score, cache


def forward(net: PolicyNetwork, feats: FeatureGrid) -> np.ndarray:
    """Score map over the action grid, shape (h, w). Strictly per-cell."""
    return _forward_with_cache(net, feats)[0]


def _backward(net: PolicyNetwork, cache, d_score: np.ndarray) -> "dict[str, np.ndarray]":
    """Parameter gradients of sum(d_score * score). Inputs are constants."""
    grads = {}
    n_layers = len(net.widths) - 1
    dz = d_score.reshape(-1, 1).astype(np.float64)
    for i in range(n_layers - 1, -1, -1):
        a = cache["acts"][i]
        grads[f"w{i}"] = a.T @ dz
        grads[f"b{i}"] = dz.sum(axis=0)
        dh = dz @ net.params[f"w{i}"].T
        if i > 0:
            xhat, inv = cache["ln"][i - 1]
            grads[f"g{i}"] = (dh * xhat).sum(axis=0)
            grads[f"be{i}"] = dh.sum(axis=0)
            dxhat = dh * net.params[f"g{i}"]
            dh = inv * (
                dxhat
                - dxhat.mean(axis=1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
            )
            dz = dh * (cache["pre"][i - 1] > 0.0)
    return grads


# ---------------------------------------------------------------------------
# action selection


@dataclass(frozen=True)
class ActionDistribution:
    """Softmax policy over action cells."""

    probs: np.ndarray
    temperature: float

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if abs(float(p.sum()) - 1.0) > 1e-9 or np.any(p <= 0.0):
            raise DomainError("probabilities must be positive and sum to 1")
        object.__setattr__(self, "probs", p)


def action_distribution(score: np.ndarray, temperature: float) -> ActionDistribution:
    """p = softmax(score / temperature), numerically shifted by the max."""
    if temperature <= 0.0 or not math.isfinite(temperature):
        raise DomainError(f"temperature must be positive, got {temperature}")
    m = np.asarray(score, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise DomainError("score map contains non-finite values")
    z = np.exp((m - m.max()) / temperature)
    return ActionDistribution(probs=z / z.sum(), temperature=float(temperature))


def cell_center(
    row: int, col: int, grid: "tuple[int, int]", fieldgeom: FieldGeometry = DEFAULT_FIELD
) -> FixationPoint:
    """Center of an action cell in field pixels."""
    gh, gw = grid
    if not (0 <= row < gh and 0 <= col < gw):
        raise DomainError(f"cell ({row}, {col}) outside {gh}x{gw} grid")
    cw = fieldgeom.width / gw
    ch = fieldgeom.height / gh
    return FixationPoint((col + 0.5) * cw, (row + 0.5) * ch)


def select_cell(
    dist: ActionDistribution, mode: str, rng: "np.random.Generator | None" = None
) -> "tuple[int, int]":
    """Greedy argmax (ties -> lowest row-major index) or a categorical draw."""
    h, w = dist.probs.shape
    if mode == "greedy":
        flat = int(np.argmax(dist.probs))
    elif mode == "sample":
        if rng is None:
            raise DomainError("sampling requires a random generator")
        flat = int(rng.choice(h * w, p=dist.probs.ravel()))
    else:
        raise DomainError(f"unknown selection mode {mode!r}")
    return flat // w, flat % w

def select_action(
    dist: ActionDistribution,
    mode: str,
    rng: "np.random.Generator | None" = None,
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
) -> FixationPoint:
    row, col = select_cell(dist, mode, rng)
    return cell_center(row, col, dist.probs.shape, fieldgeom)


# ---------------------------------------------------------------------------
# REINFORCE with spatial smoothing


@dataclass(frozen=True)
class PolicySample:
    """One rollout outcome: state features, sampled cell, scalar reward."""

    feats: FeatureGrid
    action: "tuple[int, int]"
    reward: float


def _smoothing_weights(shape, action, sigma: float) -> np.ndarray:
    h, w = shape
    r0, c0 = action
    rows = np.arange(h)[:, None] - r0
    cols = np.arange(w)[None, :] - c0
    d2 = rows ** 2 + cols ** 2
    weights = np.exp(-d2 / (2.0 * sigma * sigma))
    weights[d2 > (3.0 * sigma) ** 2] = 0.0  # truncate; deliberately unnormalized
    return weights


def smoothed_policy_gradient(
    batch: "list[PolicySample]",
    net: PolicyNetwork,
    temperature: float,
    smooth_sigma: float,
) -> "dict[str, np.ndarray]":
    """Batch-averaged ascent gradient of the smoothed REINFORCE objective.

    Advantage is reward minus the batch mean. Each sample spreads its update
    over cells near the taken action with unnormalized Gaussian weights, so
    d(score) = advantage * (weights - probs * sum(weights)) / temperature.
    """
    if not batch:
        raise DomainError("gradient needs a non-empty batch")
    if smooth_sigma <= 0.0:
        raise DomainError(f"smoothing sigma must be positive, got {smooth_sigma}")
    rewards = np.array([s.reward for s in batch], dtype=np.float64)
    if not np.all(np.isfinite(rewards)):
        raise DomainError("batch rewards must be finite")
    advantages = rewards - rewards.mean()
    grads = {name: np.zeros_like(p) for name, p in net.params.items()}
    for sample, adv in zip(batch, advantages):
        score, cache = _forward_with_cache(net, sample.feats)
        probs = action_distribution(score, temperature).probs
        weights = _smoothing_weights(probs.shape, sample.action, smooth_sigma)
        d_score = adv * (weights - probs * weights.sum()) / temperature
        for name, g in _backward(net, cache, d_score).items():
            grads[name] += g
    inv_b = 1.0 / len(batch)
    for name in grads:
        grads[name] *= inv_b
    return grads


# ---------------------------------------------------------------------------
# optimizer


@dataclass(frozen=True)
class OptimizerState:
    """AdamW moments and step counter for one network's parameters."""

    m: "dict[str, np.ndarray]"
    v: "dict[str, np.ndarray]"
    t: int
    learning_rate: float
    weight_decay: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer_state(
    net: PolicyNetwork, learning_rate: float, weight_decay: float
) -> OptimizerState:
    zeros = lambda: {name: np.zeros_like(p) for name, p in net.params.items()}
    return OptimizerState(
        m=zeros(), v=zeros(), t=0,
        learning_rate=learning_rate, weight_decay=weight_decay,
    )


def adamw_step(
    state: OptimizerState, net: PolicyNetwork, grads: "dict[str, np.ndarray]"
) -> "tuple[PolicyNetwork, OptimizerState]":
    """One ascent step: move along bias-corrected moments, then decay."""
    if set(grads) != set(net.params):
        raise DomainError("gradient names do not match network parameters")
    t = state.t + 1
    new_params, new_m, new_v = {}, {}, {}
    for name, p in net.params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise DomainError(f"gradient shape mismatch for {name}")
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        new_params[name] = (
            p
            + state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
            - state.learning_rate * state.weight_decay * p
        )
        new_m[name], new_v[name] = m, v
    return (
        replace(net, params=new_params),
        replace(state, m=new_m, v=new_v, t=t),
    )


# ---------------------------------------------------------------------------
# training configuration and presets


def preset_fixations(
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
) -> "dict[str, FixationPoint]":
    """Named initial-fixation locations in field pixels."""
    w, h = fieldgeom.width, fieldgeom.height
    cx, cy = w // 2, h // 2
    drop = min(300, h - 1 - cy)
    far = min(480, h - 1 - cy)
    return {
        "top_left": FixationPoint(0.0, 0.0),
        "top_right": FixationPoint(float(w - 1), 0.0),
        "bottom_left": FixationPoint(0.0, float(h - 1)),
        "bottom_right": FixationPoint(float(w - 1), float(h - 1)),
        "below_center": FixationPoint(float(cx), float(cy + drop)),
        "below_center_far": FixationPoint(float(cx), float(cy + far)),
    }


DEFAULT_PRESETS = (
    "top_left", "top_right", "bottom_left", "bottom_right", "below_center",
)


@dataclass(frozen=True)
class TrainingConfig:
    n_fixations: int = 4
    epochs: int = 5
    batch_size: int = 60
    temperature: float = 3.0
    learning_rate: float = 2e-4
    weight_decay: float = 1e-4
    smooth_sigma: float = 1.5
    presets: "tuple[str, ...]" = DEFAULT_PRESETS
    iterations: "int | None" = None  # total optimizer steps; None derives from epochs

    def __post_init__(self):
        positive = {
            "n_fixations": self.n_fixations, "epochs": self.epochs,
            "batch_size": self.batch_size, "temperature": self.temperature,
            "learning_rate": self.learning_rate, "weight_decay": self.weight_decay,
            "smooth_sigma": self.smooth_sigma,
        }
        for name, value in positive.items():
            if value <= 0:
                raise DomainError(f"{name} must be positive, got {value}")
        known = set(preset_fixations())
        for p in self.presets:
            if p not in known:
                raise DomainError(f"unknown preset {p!r}; options: {sorted(known)}")
        if not set(DEFAULT_PRESETS).issubset(self.presets):
            raise DomainError(
                "presets must include the four corners and the below-center point"
            )
        if self.iterations is not None and self.iterations < 1:
            raise DomainError(f"iterations must be positive, got {self.iterations}")

    def to_dict(self) -> dict:
        return {
            "n_fixations": self.n_fixations, "epochs": self.epochs,
            "batch_size": self.batch_size, "temperature": self.temperature,
            "learning_rate": self.learning_rate, "weight_decay": self.weight_decay,
            "smooth_sigma": self.smooth_sigma, "presets": list(self.presets),
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        d = dict(d)
        d["presets"] = tuple(d.get("presets", DEFAULT_PRESETS))
        return cls(**d)


# ---------------------------------------------------------------------------
# sequential chain training


@dataclass(frozen=True)
class PolicyChain:
    """One trained network per fixation step plus everything needed to resume."""

    networks: "tuple[PolicyNetwork, ...]"
    opt_states: "tuple[OptimizerState, ...]"
    config: TrainingConfig
    grid: "tuple[int, int]"
    channels: int
    fieldgeom: FieldGeometry
    alpha: float
    reward_kind: str
    seed: int
    history: "dict[str, list]" = field(default_factory=dict, compare=False)


class _Trajectory:
    """Mutable per-scene rollout state: fixations, field map, oracle scores."""

    def __init__(self, scene, fieldgeom, alpha, samples, dseed):
        self.scene = scene
        self.fieldgeom = fieldgeom
        self.alpha = alpha
        self.samples = samples
        self.dseed = dseed
        self.ecc = None
        self.cs = []
        self.h_bar = []
        try:
            self.full = describe(scene, None, m=samples, seed=dseed)
        except Exception as exc:
            raise type(exc)(f"scene {scene.id!r}: {exc}") from exc

    def rmap_field(self) -> ResolutionMap:
        return resolution_map(self.ecc, self.alpha)

    def push(self, point: FixationPoint):
        ecc = eccentricity_map(self.fieldgeom, point)
        self.ecc = ecc if self.ecc is None else np.minimum(self.ecc, ecc)
        p = self.scene.placement
        window = self.ecc[p.offset_y : p.offset_y + p.height,
                          p.offset_x : p.offset_x + p.width]
        rmap = resolution_map(window, self.alpha)
        try:
            fov = describe(self.scene, rmap, m=self.samples, seed=self.dseed)
            self.cs.append(semantic_accuracy(fov, self.full))
            self.h_bar.append(mean_entropy(fov))
        except Exception as exc:
            raise type(exc)(f"scene {self.scene.id!r}: {exc}") from exc

    def step_reward(self, kind: str) -> float:
        trace = build_reward_trace(tuple(self.cs), 1.0, tuple(self.h_bar))
        j = len(self.cs) - 1
        return trace.r_norm[j] if kind == "semantic" else trace.r_e[j]


def _derived_iterations(config: TrainingConfig, n_scenes: int) -> int:
    if config.iterations is not None:
        return config.iterations
    per_epoch = max(1, math.ceil(n_scenes * len(config.presets) / config.batch_size))
    return config.epochs * per_epoch


def train_policy_chain(
    scenes: "list[Scene]",
    config: TrainingConfig,
    reward: str = "semantic",
    seed: int = 0,
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    grid: "tuple[int, int]" = DEFAULT_GRID,
    channels: int = DEFAULT_CHANNELS,
    alpha: float = DEFAULT_ALPHA,
    describe_samples: int = DEFAULT_SAMPLES,
    describe_seed: int = 0,
) -> PolicyChain:
    """Train the per-step networks sequentially with round-robin batch blocks.

    While step j trains, steps before j act greedily with frozen weights and
    only step j samples. Each batch shares one initial-fixation preset. The
    whole run is a pure function of its arguments.
    """
    if not scenes:
        raise DomainError("training needs a non-empty scene list")
    if reward not in ("semantic", "entropy"):
        raise DomainError(f"unknown reward kind {reward!r}")
    rng = np.random.default_rng(seed)
    nets = [
        init_policy_network(channels, j + 1, seed=int(rng.integers(2 ** 31)))
        for j in range(config.n_fixations)
    ]
    states = [
        init_optimizer_state(net, config.learning_rate, config.weight_decay)
        for net in nets
    ]
    presets = preset_fixations(fieldgeom)
    history = {"mean_reward": [], "network": []}
    total = _derived_iterations(config, len(scenes))
    done = 0
    jt = 0
    while done < total:
        for _ in range(min(BLOCK_BATCHES, total - done)):
            batch = []
            preset = presets[config.presets[int(rng.integers(len(config.presets)))]]
            idx = rng.integers(0, len(scenes), size=config.batch_size)
            for i in idx:
                traj = _Trajectory(
                    scenes[int(i)], fieldgeom, alpha, describe_samples, describe_seed
                )
                traj.push(preset)
                for step in range(jt + 1):
                    feats = featurize(traj.scene, traj.rmap_field(), grid, channels)
                    score = forward(nets[step], feats)
                    dist = action_distribution(score, config.temperature)
                    if step < jt:
                        cell = select_cell(dist, "greedy")
                    else:
                        cell = select_cell(dist, "sample", rng)
                    traj.push(cell_center(cell[0], cell[1], grid, fieldgeom))
                batch.append(
                    PolicySample(feats=feats, action=cell, reward=traj.step_reward(reward))
                )
            grads = smoothed_policy_gradient(
                batch, nets[jt], config.temperature, config.smooth_sigma
            )
            nets[jt], states[jt] = adamw_step(states[jt], nets[jt], grads)
            history["mean_reward"].append(float(np.mean([s.reward for s in batch])))
            history["network"].append(jt)
            done += 1
        jt = (jt + 1) % config.n_fixations
    return PolicyChain(
        networks=tuple(nets), opt_states=tuple(states), config=config,
        grid=grid, channels=channels, fieldgeom=fieldgeom, alpha=alpha,
        reward_kind=reward, seed=seed, history=history,
    )


@dataclass(frozen=True)
class RolloutResult:
    """Greedy or sampled chain rollout on one scene."""

    fixations: "tuple[FixationPoint, ...]"  # initial point first
    cells: "tuple[tuple[int, int], ...]"
    dists: "tuple[ActionDistribution, ...]"
    cs: "tuple[float, ...]"
    h_bar: "tuple[float, ...]"


def rollout_chain(
    chain: PolicyChain,
    scene: Scene,
    initial: FixationPoint,
    mode: str = "greedy",
    rng: "np.random.Generator | None" = None,
    describe_samples: int = DEFAULT_SAMPLES,
    describe_seed: int = 0,
) -> RolloutResult:
    """Run every step network in order from the given initial fixation."""
    traj = _Trajectory(scene, chain.fieldgeom, chain.alpha, describe_samples, describe_seed)
    traj.push(initial)
    fixations = [initial]
    cells = []
    dists = []
    for net in chain.networks:
        feats = featurize(scene, traj.rmap_field(), chain.grid, chain.channels)
        dist = action_distribution(forward(net, feats), chain.config.temperature)
        cell = select_cell(dist, mode, rng)
        point = cell_center(cell[0], cell[1], chain.grid, chain.fieldgeom)
        traj.push(point)
        fixations.append(point)
        cells.append(cell)
        dists.append(dist)
    return RolloutResult(
        fixations=tuple(fixations), cells=tuple(cells), dists=tuple(dists),
        cs=tuple(traj.cs), h_bar=tuple(traj.h_bar),
    )


# ---------------------------------------------------------------------------
# checkpoints: JSON header + raw little-endian float64 payload


def _chain_arrays(chain: PolicyChain):
    """Deterministic (name, array) order covering weights and moments."""
    out = []
    for j, (net, st) in enumerate(zip(chain.networks, chain.opt_states)):
        for name in _param_names(net.widths):
            out.append((f"net{j}/{name}", net.params[name]))
            out.append((f"opt{j}/m/{name}", st.m[name]))
            out.append((f"opt{j}/v/{name}", st.v[name]))
    return out


def save_chain(chain: PolicyChain, path) -> None:
    """Write a bit-reproducible checkpoint (fixed header order, raw floats)."""
    arrays = _chain_arrays(chain)
    offset = 0
    index = []
    for name, arr in arrays:
        index.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * 8
    header = {
        "format": 1,
        "alpha": chain.alpha,
        "channels": chain.channels,
        "config": chain.config.to_dict(),
        "field": chain.fieldgeom.to_dict(),
        "grid": list(chain.grid),
        "history": chain.history,
        "networks": [
            {"fixation_index": net.fixation_index, "widths": list(net.widths)}
            for net in chain.networks
        ],
        "opt": [
            {"t": st.t, "learning_rate": st.learning_rate,
             "weight_decay": st.weight_decay, "beta1": st.beta1,
             "beta2": st.beta2, "eps": st.eps}
            for st in chain.opt_states
        ],
        "reward": chain.reward_kind,
        "seed": chain.seed,
        "arrays": index,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_CHECKPOINT_MAGIC)
        f.write(len(blob).to_bytes(8, "little"))
        f.write(blob)
        for _, arr in arrays:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_chain(path) -> PolicyChain:
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except FileNotFoundError as exc:
        raise DataFormatError(f"checkpoint not found: {path}") from exc
    if not raw.startswith(_CHECKPOINT_MAGIC):
        raise DataFormatError(f"{path}: not a policy checkpoint")
    n = int.from_bytes(raw[6:14], "little")
    try:
        header = json.loads(raw[14 : 14 + n].decode("utf-8"))
    except ValueError as exc:
        raise DataFormatError(f"{path}: corrupt checkpoint header") from exc
    if header.get("format") != 1:
        raise DataFormatError(f"{path}: unsupported checkpoint format")
    payload = raw[14 + n :]
    blocks = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
        blocks[entry["name"]] = arr.reshape(shape).astype(np.float64)
    config = TrainingConfig.from_dict(header["config"])
    fieldgeom = FieldGeometry.from_dict(header["field"])
    networks, states = [], []
    for j, (spec_net, spec_opt) in enumerate(zip(header["networks"], header["opt"])):
        widths = tuple(spec_net["widths"])
        params = {nm: blocks[f"net{j}/{nm}"] for nm in _param_names(widths)}
        networks.append(PolicyNetwork(
            widths=widths, params=params, fixation_index=spec_net["fixation_index"]
        ))
        states.append(OptimizerState(
            m={nm: blocks[f"opt{j}/m/{nm}"] for nm in _param_names(widths)},
            v={nm: blocks[f"opt{j}/v/{nm}"] for nm in _param_names(widths)},
            t=spec_opt["t"], learning_rate=spec_opt["learning_rate"],
            weight_decay=spec_opt["weight_decay"], beta1=spec_opt["beta1"],
            beta2=spec_opt["beta2"], eps=spec_opt["eps"],
        ))
    return PolicyChain(
        networks=tuple(networks), opt_states=tuple(states), config=config,
        grid=tuple(header["grid"]), channels=header["channels"],
        fieldgeom=fieldgeom, alpha=header["alpha"], reward_kind=header["reward"],
        seed=header["seed"], history=header.get("history", {}),
    )
