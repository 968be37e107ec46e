"""Self-supervised training loop: subteam sampling, manual backprop, checkpoints.

The encoder is small enough that gradients are written out by hand; they are
verified against central finite differences by :func:`gradient_check`. The
whole loop is deterministic for a fixed seed: identical configuration and data
reproduce bit-identical parameters.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .encoder import EncoderParams, default_cluster_count, init_params, row_softmax
from .errors import NonFiniteLossError, ValidationError
from .graph import SocialNetwork, Team, normalize_adjacency
from .objectives import (
    COSINE_NORM_FLOOR,
    LossWeights,
    clustering_loss,
    contrastive_loss,
    skill_loss,
    structural_loss,
    total_loss,
    _row_normalize,
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    learning_rate: float = 0.01
    weights: LossWeights = LossWeights()
    subteam_fraction_range: tuple[float, float] = (0.25, 0.75)
    seed: int = 0
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    hidden: tuple[int, ...] = (64, 64)
    clusters: int | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValidationError("learning rate must be positive")
        lo, hi = self.subteam_fraction_range
        if not (0 < lo <= hi < 1):
            raise ValidationError(f"need 0 < low <= high < 1, got ({lo}, {hi})")
        if len(self.split) != 3 or min(self.split) < 0 or abs(sum(self.split) - 1.0) > 1e-9:
            raise ValidationError(f"split fractions must be >= 0 and sum to 1, got {self.split}")
        if not self.hidden:
            raise ValidationError("need at least one hidden layer size")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "split", tuple(float(f) for f in self.split))
        object.__setattr__(
            self, "subteam_fraction_range", tuple(float(f) for f in self.subteam_fraction_range)
        )


@dataclass(frozen=True)
class SampleBatch:
    """Positive pairs for one epoch: (team index, sampled subteam members)."""

    pairs: tuple[tuple[int, tuple[int, ...]], ...]

    def resolve(self, teams) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        return [(teams[i].members, sub) for i, sub in self.pairs]

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    contra: float
    skill: float
    structural: float
    clustering: float
    total: float
    val_contra: float | None
    wall_ms: float


def split_teams(teams, fractions, seed: int) -> tuple[list[Team], list[Team], list[Team]]:
    """Deterministic shuffled partition; floor-sized val/test, remainder to train."""
    if not teams:
        raise ValidationError("cannot split an empty team list")
    f_train, f_val, f_test = fractions
    if min(fractions) < 0 or abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise ValidationError(f"bad split fractions {fractions}")
    order = np.random.default_rng(seed).permutation(len(teams))
    n_val = int(f_val * len(teams))
    n_test = int(f_test * len(teams))
    n_train = len(teams) - n_val - n_test
    shuffled = [teams[i] for i in order]
    return (
        shuffled[:n_train],
        shuffled[n_train : n_train + n_val],
        shuffled[n_train + n_val :],
    )


def sample_subteam(team: Team, fraction_range, rng: np.random.Generator):
    """Uniform subteam of fractional size; None for teams too small to split."""
    m = len(team)
    if m < 2:
        return None
    lo, hi = fraction_range
    k = int(round(rng.uniform(lo, hi) * m))
    k = min(max(k, 1), m - 1)
    chosen = rng.choice(np.asarray(team.members), size=k, replace=False)
    return tuple(sorted(int(v) for v in chosen))


def _sample_batch(teams, fraction_range, rng) -> SampleBatch:
    pairs = []
    for idx, team in enumerate(teams):
        sub = sample_subteam(team, fraction_range, rng)
        if sub is not None:
            pairs.append((idx, sub))
    return SampleBatch(pairs=tuple(pairs))


@dataclass
class _Cache:
    ms: list  # per-layer aggregated inputs (norm_adj @ h_prev)
    ps: list[np.ndarray]  # per-layer pre-activations
    hs: list[np.ndarray]  # per-layer activations
    z: np.ndarray
    u: np.ndarray  # cluster-head pre-activation
    c: np.ndarray  # soft assignments


class _LossModel:
    """Forward/backward evaluation of the full objective on one fixed network."""

    def __init__(self, net: SocialNetwork):
        self.norm_adj = normalize_adjacency(net)
        self.x = net.features
        self.x_dense = net.features.toarray()
        self.a_dense = net.adjacency.toarray()
        self.n = net.n

    def forward(self, params: EncoderParams) -> _Cache:
        ms, ps, hs = [], [], []
        h = self.x
        for w in params.layer_weights:
            m = self.norm_adj @ h
            p = np.asarray(m @ w)
            h = np.maximum(p, 0.0)
            ms.append(m)
            ps.append(p)
            hs.append(h)
        z = np.concatenate(hs, axis=1)
        u = z @ params.cluster_weight
        c = row_softmax(np.maximum(u, 0.0))
        return _Cache(ms=ms, ps=ps, hs=hs, z=z, u=u, c=c)

    def parts(self, cache: _Cache, pairs) -> dict[str, float]:
        contra = contrastive_loss(pairs, cache.z) if pairs else 0.0
        return {
            "contra": contra,
            "skill": skill_loss(self.x_dense, cache.c),
            "structural": structural_loss(self.a_dense, cache.c),
            "clustering": clustering_loss(cache.c),
        }

    def backward(self, params: EncoderParams, cache: _Cache, pairs, wvec):
        """Gradient of wvec . (contra, skill, structural, clustering) wrt all weights."""
        w_contra, b1, b2, b3 = wvec
        z, c = cache.z, cache.c
        dz = np.zeros_like(z)
        dc = np.zeros_like(c)

        if w_contra and pairs:
            s = len(pairs)
            for team, sub in pairs:
                rem = tuple(sorted(set(team) - set(sub)))
                sub_ix = np.asarray(sub, dtype=np.intp)
                rem_ix = np.asarray(rem, dtype=np.intp)
                u_vec = z[sub_ix].mean(axis=0)
                v_vec = z[rem_ix].mean(axis=0)
                nu = np.linalg.norm(u_vec)
                nv = np.linalg.norm(v_vec)
                if nu < COSINE_NORM_FLOOR or nv < COSINE_NORM_FLOOR:
                    continue
                uh, vh = u_vec / nu, v_vec / nv
                cos_uv = float(uh @ vh)
                coef = -w_contra / s
                dz[sub_ix] += coef * ((vh - cos_uv * uh) / nu) / len(sub)
                dz[rem_ix] += coef * ((uh - cos_uv * vh) / nv) / len(rem)

        if b1:
            xh = _row_normalize(self.x_dense)
            y1h = _row_normalize(xh @ xh.T)
            cnorms = np.linalg.norm(c, axis=1, keepdims=True)
            chat = c / cnorms
            y2 = chat @ chat.T
            y2n = np.linalg.norm(y2, axis=1, keepdims=True)
            y2h = np.divide(y2, y2n, out=np.zeros_like(y2), where=y2n > 0)
            dots = (y1h * y2h).sum(axis=1, keepdims=True)
            g2 = np.divide(
                -b1 * (y1h - dots * y2h), y2n, out=np.zeros_like(y2), where=y2n > 0
            )
            dchat = (g2 + g2.T) @ chat
            proj = (dchat * chat).sum(axis=1, keepdims=True)
            dc += (dchat - proj * chat) / cnorms

        if b2:
            residual = self.a_dense - c @ c.T
            fro = np.linalg.norm(residual)
            if fro > 0:
                dc += b2 * (-2.0 / fro) * (residual @ c)

        if b3:
            logs = np.zeros_like(c)
            np.log(c, out=logs, where=c > 0)
            dc += np.where(c > 0, -b3 * (logs + 1.0) / self.n, 0.0)

        # head: softmax rows, then ReLU, then the linear map
        de = c * (dc - (dc * c).sum(axis=1, keepdims=True))
        du = de * (cache.u > 0)
        d_wc = z.T @ du
        dz += du @ params.cluster_weight.T

        widths = [w.shape[1] for w in params.layer_weights]
        offsets = np.cumsum([0, *widths])
        grads = [None] * len(widths)
        carry = None
        for l in reversed(range(len(widths))):
            dh = dz[:, offsets[l] : offsets[l + 1]].copy()
            if carry is not None:
                dh += carry
            dp = dh * (cache.ps[l] > 0)
            grads[l] = np.asarray(cache.ms[l].T @ dp)
            if l > 0:
                carry = self.norm_adj @ (dp @ params.layer_weights[l].T)
        return grads, d_wc


def _scalarize(parts: dict[str, float], wvec) -> float:
    return (
        wvec[0] * parts["contra"]
        + wvec[1] * parts["skill"]
        + wvec[2] * parts["structural"]
        + wvec[3] * parts["clustering"]
    )


def train(net: SocialNetwork, teams, cfg: TrainConfig):
    """Full-batch gradient descent on the combined objective.

    Subteams are resampled every epoch. Returns the parameters of the epoch
    with the best (lowest) validation contrastive loss, falling back to the
    final parameters when there is no usable validation split, together with
    the per-epoch statistics.
    """
    if not teams:
        raise ValidationError("cannot train without teams")
    for team in teams:
        team.validate_for(net)
    train_teams, val_teams, _ = split_teams(teams, cfg.split, cfg.seed)
    clusters = cfg.clusters if cfg.clusters is not None else default_cluster_count(net.n)
    params = init_params(net.d, cfg.hidden, clusters, np.random.default_rng([cfg.seed, 0]))
    sampler = np.random.default_rng([cfg.seed, 1])
    model = _LossModel(net)
    weights = cfg.weights
    wvec = (1.0, weights.skill, weights.structural, weights.clustering)

    log: list[EpochStats] = []
    best_val = np.inf
    best_params = None
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        batch = _sample_batch(train_teams, cfg.subteam_fraction_range, sampler)
        pairs = batch.resolve(train_teams)
        cache = model.forward(params)
        parts = model.parts(cache, pairs)
        report = total_loss(
            parts["contra"], parts["skill"], parts["structural"], parts["clustering"], weights
        )
        for name in ("contra", "skill", "structural", "clustering", "total"):
            value = getattr(report, name)
            if not np.isfinite(value):
                raise NonFiniteLossError(f"{name} loss", epoch, value)

        grads, d_wc = model.backward(params, cache, pairs, wvec)
        new_layers = tuple(
            w - cfg.learning_rate * g for w, g in zip(params.layer_weights, grads)
        )
        new_head = params.cluster_weight - cfg.learning_rate * d_wc
        for w in (*new_layers, new_head):
            if not np.all(np.isfinite(w)):
                raise NonFiniteLossError("parameter update", epoch, float(np.max(np.abs(w))))
        params = EncoderParams(layer_weights=new_layers, cluster_weight=new_head)

        val_batch = _sample_batch(val_teams, cfg.subteam_fraction_range, sampler)
        val_contra = None
        if len(val_batch):
            val_cache = model.forward(params)
            val_contra = contrastive_loss(val_batch.resolve(val_teams), val_cache.z)
            if val_contra < best_val:
                best_val = val_contra
                best_params = params

        log.append(
            EpochStats(
                epoch=epoch,
                contra=report.contra,
                skill=report.skill,
                structural=report.structural,
                clustering=report.clustering,
                total=report.total,
                val_contra=val_contra,
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    return (best_params if best_params is not None else params), log


def write_train_log(log, path) -> None:
    """One tab-separated line per epoch; the wall-ms column is the only timing field."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# epoch\tcontra\tskill\tstructural\tclustering\ttotal\twall_ms\n")
        for entry in log:
            fh.write(
                f"{entry.epoch}\t{entry.contra!r}\t{entry.skill!r}\t{entry.structural!r}"
                f"\t{entry.clustering!r}\t{entry.total!r}\t{entry.wall_ms!r}\n"
            )


def read_total_wall_ms(path) -> float:
    """Sum of the wall-ms column of a training log (for amortized-time reporting)."""
    total = 0.0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            total += float(line.split("\t")[-1])
    return total


def finite_difference_error(value_fn, grad, matrices, eps: float) -> float:
    """Worst-case central-difference error of ``grad`` against ``value_fn``.

    ``matrices`` is the list of parameter arrays perturbed in place (on
    copies); ``grad`` is the list of analytic gradients with matching shapes.
    Relative error is used except where both magnitudes are below 1e-6.
    """
    worst = 0.0
    for mat_idx, mat in enumerate(matrices):
        for flat in range(mat.size):
            idx = np.unravel_index(flat, mat.shape)
            orig = mat[idx]
            mat[idx] = orig + eps
            f_plus = value_fn()
            mat[idx] = orig - eps
            f_minus = value_fn()
            mat[idx] = orig
            numeric = (f_plus - f_minus) / (2 * eps)
            analytic = grad[mat_idx][idx]
            denom = max(abs(numeric), abs(analytic))
            diff = abs(numeric - analytic)
            worst = max(worst, diff if denom < 1e-6 else diff / denom)
    return worst


def gradient_check_report(
    net: SocialNetwork,
    teams,
    params: EncoderParams,
    eps: float = 1e-4,
    weights: LossWeights | None = None,
    seed: int = 0,
) -> dict[str, float]:
    """Central-difference check of each loss term and the weighted total.

    The subteam batch is sampled once (deterministically from ``seed``) and
    held fixed across all evaluations. Returns the worst error per term.
    """
    weights = weights or LossWeights()
    rng = np.random.default_rng([seed, 2])
    batch = _sample_batch(teams, (0.25, 0.75), rng)
    pairs = batch.resolve(teams)
    model = _LossModel(net)
    wvecs = {
        "contra": (1.0, 0.0, 0.0, 0.0),
        "skill": (0.0, 1.0, 0.0, 0.0),
        "structural": (0.0, 0.0, 1.0, 0.0),
        "clustering": (0.0, 0.0, 0.0, 1.0),
        "total": (1.0, weights.skill, weights.structural, weights.clustering),
    }

    work = [w.copy() for w in params.layer_weights]
    head = params.cluster_weight.copy()
    matrices = [*work, head]

    def rebuild() -> EncoderParams:
        return EncoderParams(layer_weights=tuple(work), cluster_weight=head)

    cache = model.forward(rebuild())
    analytic = {}
    for name, wvec in wvecs.items():
        grads, d_wc = model.backward(rebuild(), cache, pairs, wvec)
        analytic[name] = [*grads, d_wc]

    numeric = {name: [np.zeros_like(m) for m in matrices] for name in wvecs}
    for mat_idx, mat in enumerate(matrices):
        for flat in range(mat.size):
            idx = np.unravel_index(flat, mat.shape)
            orig = mat[idx]
            mat[idx] = orig + eps
            parts_plus = model.parts(model.forward(rebuild()), pairs)
            mat[idx] = orig - eps
            parts_minus = model.parts(model.forward(rebuild()), pairs)
            mat[idx] = orig
            for name, wvec in wvecs.items():
                numeric[name][mat_idx][idx] = (
                    _scalarize(parts_plus, wvec) - _scalarize(parts_minus, wvec)
                ) / (2 * eps)

    report = {}
    for name in wvecs:
        worst = 0.0
        for a_mat, n_mat in zip(analytic[name], numeric[name]):
            diff = np.abs(a_mat - n_mat)
            denom = np.maximum(np.abs(a_mat), np.abs(n_mat))
            err = np.where(denom < 1e-6, diff, diff / np.maximum(denom, 1e-300))
            worst = max(worst, float(err.max()))
        report[name] = worst
    return report


def gradient_check(
    net: SocialNetwork,
    teams,
    params: EncoderParams,
    eps: float = 1e-4,
    weights: LossWeights | None = None,
    seed: int = 0,
) -> float:
    """Worst relative error over every loss term and the weighted total."""
    return max(gradient_check_report(net, teams, params, eps, weights, seed).values())
