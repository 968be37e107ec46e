"""Team embeddings, cosine similarity, and the training losses.

All operations are pure and operate on dense arrays; sparse inputs are
densified on entry (losses are evaluated at desk scale over the full network).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError

COSINE_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Balancing coefficients for the skill, structural, and clustering terms."""

    skill: float = 1.0
    structural: float = 100.0
    clustering: float = 1.0

    def __post_init__(self):
        for name in ("skill", "structural", "clustering"):
            val = getattr(self, name)
            if not math.isfinite(val) or val < 0:
                raise ValidationError(f"loss weight {name} must be finite and >= 0, got {val}")


@dataclass(frozen=True)
class LossReport:
    contra: float
    skill: float
    structural: float
    clustering: float
    total: float


def _members_of(team) -> tuple[int, ...]:
    return tuple(getattr(team, "members", team))


def team_embedding(members, z: np.ndarray) -> np.ndarray:
    """Mean of the members' embedding rows (uniform aggregation weights)."""
    ids = _members_of(members)
    if not ids:
        raise ValidationError("cannot embed an empty team")
    return z[np.asarray(ids, dtype=np.intp)].mean(axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 by convention when either vector is (near-)zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"length mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < COSINE_NORM_FLOOR or nv < COSINE_NORM_FLOOR:
        return 0.0
    return float(u @ v / (nu * nv))


def contrastive_loss(batch, z: np.ndarray) -> float:
    """Negated mean cosine between each subteam and its remaining team.

    ``batch`` is a sequence of (team, subteam) pairs; the subteam must be a
    strict, non-empty subset of its team so the remainder is non-empty.
    Minimizing this term maximizes subteam/remainder agreement.
    """
    if not batch:
        raise ValidationError("contrastive loss needs at least one (team, subteam) pair")
    total = 0.0
    for team, subteam in batch:
        team_ids = set(_members_of(team))
        sub_ids = _members_of(subteam)
        if not sub_ids:
            raise ValidationError("subteam must be non-empty")
        if not set(sub_ids) <= team_ids:
            raise ValidationError(f"subteam {sub_ids} not contained in team")
        remainder = tuple(sorted(team_ids - set(sub_ids)))
        if not remainder:
            raise ValidationError("subteam equals team; remainder is empty")
        total += cosine(team_embedding(sub_ids, z), team_embedding(remainder, z))
    return -total / len(batch)


def _row_normalize(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return np.divide(m, norms, out=np.zeros_like(m, dtype=np.float64), where=norms > 0)


def pair_sim(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """All-pairs cosine block: row-normalize both inputs, multiply by the transpose.

    Zero rows stay zero, so every entry lies in [-1, 1].
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError(f"pair_sim needs equal shapes, got {p.shape} vs {q.shape}")
    return _row_normalize(p) @ _row_normalize(q).T


def _dense(x) -> np.ndarray:
    if sp.issparse(x):
        return x.toarray()
    return np.asarray(x, dtype=np.float64)


def skill_loss(x, c_mat: np.ndarray) -> float:
    """Negated trace of the similarity between feature-space and cluster-space cosines."""
    x = _dense(x)
    c_mat = np.asarray(c_mat, dtype=np.float64)
    if x.shape[0] != c_mat.shape[0]:
        raise ValidationError(f"row mismatch: features {x.shape} vs assignments {c_mat.shape}")
    y1 = pair_sim(x, x)
    y2 = pair_sim(c_mat, c_mat)
    y3 = pair_sim(y1, y2)
    return -float(np.trace(y3))


def structural_loss(a, c_mat: np.ndarray) -> float:
    """Frobenius norm of (adjacency - C C^T), on the raw unnormalized adjacency."""
    a = _dense(a)
    c_mat = np.asarray(c_mat, dtype=np.float64)
    if a.shape[0] != a.shape[1] or a.shape[0] != c_mat.shape[0]:
        raise ValidationError(f"shape mismatch: adjacency {a.shape} vs assignments {c_mat.shape}")
    return float(np.linalg.norm(a - c_mat @ c_mat.T, "fro"))


def clustering_loss(c_mat: np.ndarray) -> float:
    """Mean row entropy (natural log) of the soft assignments; 0*log0 counts as 0."""
    c_mat = np.asarray(c_mat, dtype=np.float64)
    if c_mat.shape[0] == 0:
        return 0.0
    logs = np.zeros_like(c_mat)
    np.log(c_mat, out=logs, where=c_mat > 0)
    return float(-(c_mat * logs).sum(axis=1).mean())


def total_loss(
    contra: float,
    skill: float,
    structural: float,
    clustering: float,
    weights: LossWeights,
) -> LossReport:
    """Weighted sum of the four terms."""
    total = (
        contra
        + weights.skill * skill
        + weights.structural * structural
        + weights.clustering * clustering
    )
    return LossReport(
        contra=float(contra),
        skill=float(skill),
        structural=float(structural),
        clustering=float(clustering),
        total=float(total),
    )
