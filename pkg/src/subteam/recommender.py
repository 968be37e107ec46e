"""Within-cluster replacement search and the exhaustive oracle used to verify it.

Candidate tuples are drawn from the clusters of the departing members, so a
search touches at most (largest cluster)^(departing size) tuples instead of
the whole network. Deduplication of tuples that collapse onto the same member
set guarantees the recommended set is never larger than the departing one.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from math import comb

import numpy as np

from .encoder import ClusterModel
from .errors import RefusalError, ValidationError
from .graph import SocialNetwork, Team
from .objectives import cosine, team_embedding

DEFAULT_ORACLE_BUDGET = 2_000_000


@dataclass(frozen=True, eq=False)
class ReplacementResult:
    """Outcome of one replacement search.

    ``subteam`` is None when every candidate tuple dissolved into the original
    team (the explicit no-candidate outcome); ``similarity`` is the cosine
    score for embedding searches and the raw kernel value for the graph-kernel
    baseline. ``elapsed_ms`` is the only timing field.
    """

    subteam: tuple[int, ...] | None
    similarity: float | None
    candidates_examined: int
    elapsed_ms: float

    @property
    def found(self) -> bool:
        return self.subteam is not None


def _check_replacement_inputs(team: Team, departing: Team) -> tuple[int, ...]:
    dep = set(departing.members)
    if not dep <= set(team.members):
        raise ValidationError(f"departing members {sorted(dep)} not all in team")
    remaining = tuple(sorted(set(team.members) - dep))
    if not remaining:
        raise ValidationError("departing set equals the team; remaining team is empty")
    return remaining


def recommend(
    team: Team,
    departing: Team,
    model: ClusterModel,
    net: SocialNetwork,
) -> ReplacementResult:
    """Best replacement set from the departing members' clusters.

    Enumerates the Cartesian product of the clusters the departing members are
    hard-assigned to (lexicographically over the sorted cluster lists), drops
    original-team members from each tuple, deduplicates, and scores the
    survivors by cosine against the remaining-team embedding. Ties keep the
    first candidate in enumeration order.
    """
    team.validate_for(net)
    remaining = _check_replacement_inputs(team, departing)
    if model.n != net.n:
        raise ValidationError(f"model covers {model.n} nodes, network has {net.n}")
    z = model.embeddings
    reference = team_embedding(remaining, z)
    team_set = set(team.members)
    pools = [model.containers[int(model.hard[t])] for t in departing]

    start = time.perf_counter()
    examined = 0
    seen: set[frozenset] = set()
    best_members: tuple[int, ...] | None = None
    best_score = -np.inf
    for tup in itertools.product(*pools):
        members = set(tup) - team_set
        if not members:
            continue
        examined += 1
        key = frozenset(members)
        if key in seen:
            continue
        seen.add(key)
        ordered = tuple(sorted(members))
        score = cosine(reference, team_embedding(ordered, z))
        if score > best_score:
            best_score = score
            best_members = ordered
    elapsed_ms = (time.perf_counter() - start) * 1e3
    if best_members is None:
        return ReplacementResult(
            subteam=None, similarity=None, candidates_examined=examined, elapsed_ms=elapsed_ms
        )
    return ReplacementResult(
        subteam=best_members,
        similarity=float(best_score),
        candidates_examined=examined,
        elapsed_ms=elapsed_ms,
    )


def exhaustive_oracle(
    team: Team,
    departing: Team,
    model: ClusterModel,
    net: SocialNetwork,
    candidate_space,
    max_size: int,
    budget: int = DEFAULT_ORACLE_BUDGET,
) -> ReplacementResult:
    """Brute-force best subset of ``candidate_space`` with size <= ``max_size``.

    Scores every non-empty subset with the same cosine objective as
    :func:`recommend`; original-team members are removed from the space first.
    Ties are broken toward the lexicographically smallest member list. Refuses
    (rather than truncating) when the subset count exceeds ``budget``.
    """
    team.validate_for(net)
    remaining = _check_replacement_inputs(team, departing)
    if max_size < 1:
        raise RefusalError(f"max_size={max_size} admits no non-empty subset")
    space = sorted(set(int(v) for v in candidate_space) - set(team.members))
    total = sum(comb(len(space), k) for k in range(1, min(max_size, len(space)) + 1))
    if total > budget:
        raise RefusalError(
            f"exhaustive search over {total} subsets exceeds budget {budget}"
        )
    z = model.embeddings
    reference = team_embedding(remaining, z)

    start = time.perf_counter()
    best_members: tuple[int, ...] | None = None
    best_score = -np.inf
    examined = 0
    for size in range(1, min(max_size, len(space)) + 1):
        for combo in itertools.combinations(space, size):
            examined += 1
            score = cosine(reference, team_embedding(combo, z))
            if score > best_score or (score == best_score and combo < best_members):
                best_score = score
                best_members = combo
    elapsed_ms = (time.perf_counter() - start) * 1e3
    if best_members is None:
        return ReplacementResult(
            subteam=None, similarity=None, candidates_examined=examined, elapsed_ms=elapsed_ms
        )
    return ReplacementResult(
        subteam=best_members,
        similarity=float(best_score),
        candidates_examined=examined,
        elapsed_ms=elapsed_ms,
    )
