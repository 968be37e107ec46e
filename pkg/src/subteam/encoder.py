"""Graph-convolution encoder with layer concatenation and a soft clustering head.

All forward operations are pure functions of immutable inputs; parameter
objects are never mutated in place. Cluster ids are 1-based throughout,
matching the hard-assignment convention used by the recommender.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .graph import SocialNetwork, normalize_adjacency

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EncoderDims:
    """Shape record: input feature width, per-layer output widths, cluster count."""

    d: int
    hidden: tuple[int, ...]
    clusters: int

    @property
    def layers(self) -> int:
        return len(self.hidden)

    @property
    def embedding_width(self) -> int:
        return sum(self.hidden)


@dataclass(frozen=True, eq=False)
class EncoderParams:
    """Trainable weights: one matrix per convolution layer plus the cluster head."""

    layer_weights: tuple[np.ndarray, ...]
    cluster_weight: np.ndarray

    def __post_init__(self):
        if len(self.layer_weights) < 1:
            raise ValidationError("need at least one layer weight")
        weights = tuple(np.asarray(w, dtype=np.float64) for w in self.layer_weights)
        head = np.asarray(self.cluster_weight, dtype=np.float64)
        for idx in range(1, len(weights)):
            if weights[idx].shape[0] != weights[idx - 1].shape[1]:
                raise ValidationError(
                    f"layer {idx} input {weights[idx].shape[0]} != layer {idx - 1} "
                    f"output {weights[idx - 1].shape[1]}"
                )
        dz = sum(w.shape[1] for w in weights)
        if head.ndim != 2 or head.shape[0] != dz:
            raise ValidationError(
                f"cluster weight must have {dz} rows, got {head.shape}"
            )
        if head.shape[1] < 2:
            raise ValidationError("need at least 2 clusters")
        for w in (*weights, head):
            if not np.all(np.isfinite(w)):
                raise ValidationError("non-finite entries in encoder weights")
        object.__setattr__(self, "layer_weights", weights)
        object.__setattr__(self, "cluster_weight", head)

    @property
    def dims(self) -> EncoderDims:
        return EncoderDims(
            d=self.layer_weights[0].shape[0],
            hidden=tuple(w.shape[1] for w in self.layer_weights),
            clusters=self.cluster_weight.shape[1],
        )


def default_cluster_count(n: int) -> int:
    """ceil(sqrt(n)), clamped to [2, 256]."""
    return max(2, min(256, math.isqrt(max(n - 1, 0)) + 1))


def init_params(d: int, hidden, clusters: int, rng: np.random.Generator) -> EncoderParams:
    """Symmetric uniform fan-in initialization for every weight matrix."""
    sizes = [d, *hidden]
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
    dz = sum(hidden)
    bound = 1.0 / math.sqrt(dz)
    head = rng.uniform(-bound, bound, size=(dz, clusters))
    return EncoderParams(layer_weights=tuple(weights), cluster_weight=head)


def gcn_layer_forward(norm_adj, h_prev, w: np.ndarray, apply_activation: bool = True):
    """One convolution layer: act(norm_adj @ h_prev @ w), act = ReLU when flagged."""
    if norm_adj.shape[1] != h_prev.shape[0] or h_prev.shape[1] != w.shape[0]:
        raise ValidationError(
            f"shape mismatch: adj {norm_adj.shape}, h {h_prev.shape}, w {w.shape}"
        )
    out = norm_adj @ h_prev @ w
    if sp.issparse(out):
        out = out.toarray()
    out = np.asarray(out, dtype=np.float64)
    return np.maximum(out, 0.0) if apply_activation else out


def encode(net: SocialNetwork, params: EncoderParams) -> np.ndarray:
    """Node embeddings: column-concatenation of every layer's activations."""
    if params.dims.d != net.d:
        raise ValidationError(f"params expect d={params.dims.d}, network has d={net.d}")
    norm_adj = normalize_adjacency(net)
    h = net.features
    blocks = []
    for w in params.layer_weights:
        h = gcn_layer_forward(norm_adj, h, w, apply_activation=True)
        blocks.append(h)
    return np.concatenate(blocks, axis=1)


def row_softmax(e: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting each row's max."""
    e = np.asarray(e, dtype=np.float64)
    shifted = e - e.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def soft_assign(z: np.ndarray, w_c: np.ndarray) -> np.ndarray:
    """Soft cluster assignments: row softmax of ReLU(z @ w_c)."""
    if z.shape[1] != w_c.shape[0]:
        raise ValidationError(f"shape mismatch: z {z.shape}, w_c {w_c.shape}")
    return row_softmax(np.maximum(z @ w_c, 0.0))


def hard_assign(c_mat: np.ndarray) -> np.ndarray:
    """1-based argmax per row; ties go to the lowest cluster index."""
    return np.argmax(np.asarray(c_mat), axis=1) + 1


def build_containers(h: np.ndarray, c: int) -> dict[int, list[int]]:
    """Group node ids by hard cluster; every cluster id 1..c maps to a sorted list."""
    containers: dict[int, list[int]] = {m: [] for m in range(1, c + 1)}
    for node, cluster in enumerate(np.asarray(h).tolist()):
        if not 1 <= cluster <= c:
            raise ValidationError(f"cluster id {cluster} for node {node} outside 1..{c}")
        containers[int(cluster)].append(node)
    return containers


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Inference-time bundle: embeddings, soft/hard assignments, cluster containers."""

    embeddings: np.ndarray
    soft: np.ndarray
    hard: np.ndarray
    containers: dict[int, list[int]]

    @classmethod
    def build(cls, net: SocialNetwork, params: EncoderParams) -> "ClusterModel":
        z = encode(net, params)
        c_mat = soft_assign(z, params.cluster_weight)
        h = hard_assign(c_mat)
        return cls(
            embeddings=z,
            soft=c_mat,
            hard=h,
            containers=build_containers(h, params.dims.clusters),
        )

    @property
    def n(self) -> int:
        return self.embeddings.shape[0]

    @property
    def clusters(self) -> int:
        return self.soft.shape[1]


def save_checkpoint(params: EncoderParams, path) -> None:
    """Write weights as a versioned JSON document with row-major float arrays."""
    dims = params.dims
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "dims": {"d": dims.d, "hidden": list(dims.hidden), "clusters": dims.clusters},
        "layer_weights": [w.tolist() for w in params.layer_weights],
        "cluster_weight": params.cluster_weight.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path) -> EncoderParams:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ValidationError(
            f"unsupported checkpoint format version {version!r} "
            f"(expected {CHECKPOINT_VERSION})"
        )
    params = EncoderParams(
        layer_weights=tuple(np.asarray(w, dtype=np.float64) for w in doc["layer_weights"]),
        cluster_weight=np.asarray(doc["cluster_weight"], dtype=np.float64),
    )
    dims = doc.get("dims", {})
    expected = params.dims
    declared = (dims.get("d"), tuple(dims.get("hidden", ())), dims.get("clusters"))
    if declared != (expected.d, expected.hidden, expected.clusters):
        raise ValidationError(
            f"checkpoint dims record {declared} does not match weight shapes "
            f"({expected.d}, {expected.hidden}, {expected.clusters})"
        )
    return params
