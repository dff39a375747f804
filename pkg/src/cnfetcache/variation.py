"""Monte Carlo model of CNT counts and drive strength for aligned CNFET groups.

Nanotube growth is spatially correlated along the growth direction: every
CNFET on the same track sees essentially the same tube count, while tracks
are independent of each other.  A "group" here is one such track (a cache
way in a set aligned layout, a cache set in a way aligned layout).  Each
group draws a single raw CNT count, then each series stage on its read
critical path independently loses tubes to metallic-CNT removal and
accidental semiconducting-CNT removal.  The group's usable drive strength
is the weakest stage.
"""

import io
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CntParams:
    """CNT count distribution and removal probabilities for one process corner."""

    mu: float = 9.0
    sigma: float = 2.1
    p_metallic: float = 0.05
    p_remove_metallic: float = 0.999
    p_remove_semiconducting: float = 0.05
    # Alignment probability of the growth process. Kept for completeness of
    # the parameter set; it has no operational role in the current model.
    p_align: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for name in ("p_metallic", "p_remove_metallic",
                     "p_remove_semiconducting", "p_align"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0,1]")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    def survival_probability(self):
        """Probability that a single CNT ends up conducting after processing."""
        return (self.p_metallic * (1.0 - self.p_remove_metallic)
                + (1.0 - self.p_metallic) * (1.0 - self.p_remove_semiconducting))


@dataclass(frozen=True)
class GroupStrength:
    """Drive strength of one aligned group: the conducting-CNT count on its
    weakest critical-path stage."""

    group_index: int
    effective_count: int
    failed: bool

    def __post_init__(self):
        if self.effective_count < 0:
            raise ValueError("effective_count must be >= 0")
        if self.failed != (self.effective_count == 0):
            raise ValueError("failed must hold exactly when effective_count == 0")


def sample_cnfet_count(params, rng):
    """Draw one raw CNT count: Normal(mu, sigma) rounded, clamped at zero."""
    return int(draw_raw_counts(params, 1, rng)[0])


def draw_raw_counts(params, n, rng):
    """Vectorized raw CNT counts for n independent tracks."""
    if params.sigma == 0:
        return np.full(n, round(params.mu), dtype=np.int64)
    x = rng.normal(params.mu, params.sigma, size=n)
    return np.maximum(np.rint(x), 0).astype(np.int64)


def effective_conducting_count(raw_count, params, rng):
    """Surviving conducting CNTs out of raw_count after processing.

    Each CNT is independently metallic with p_metallic.  Metallic tubes are
    targeted for removal and survive with 1 - p_remove_metallic;
    semiconducting tubes are accidentally removed with p_remove_semiconducting.
    """
    if raw_count < 0:
        raise ValueError("raw_count must be >= 0")
    return int(surviving_counts(np.asarray([raw_count], dtype=np.int64),
                                params, rng)[0])


def surviving_counts(raw_counts, params, rng):
    """Vectorized effective_conducting_count over an array of raw counts."""
    raw = np.asarray(raw_counts, dtype=np.int64)
    metallic = rng.binomial(raw, params.p_metallic)
    kept_m = rng.binomial(metallic, 1.0 - params.p_remove_metallic)
    kept_s = rng.binomial(raw - metallic, 1.0 - params.p_remove_semiconducting)
    return kept_m + kept_s


def sample_group_strengths(params, num_groups, stages_per_group, rng=None):
    """Sample drive strengths for num_groups independent aligned groups.

    One raw count is shared by all CNFETs of a group (full correlation along
    the growth direction); each of stages_per_group critical-path stages then
    loses CNTs independently, and the group strength is the minimum stage.
    With rng=None a fresh generator is seeded from params.seed, so identical
    arguments always produce identical output.
    """
    if num_groups < 1:
        raise ValueError("num_groups must be >= 1")
    if stages_per_group < 1:
        raise ValueError("stages_per_group must be >= 1")
    if rng is None:
        rng = np.random.default_rng(params.seed)
    raw = draw_raw_counts(params, num_groups, rng)
    # stages x groups matrix of per-stage survivors; each column shares raw.
    stage_counts = np.empty((stages_per_group, num_groups), dtype=np.int64)
    for s in range(stages_per_group):
        stage_counts[s] = surviving_counts(raw, params, rng)
    eff = stage_counts.min(axis=0)
    return [GroupStrength(i, int(e), e == 0) for i, e in enumerate(eff)]


def serialize_strengths(strengths, stream=None):
    """Write strengths as `group_index,effective_count,failed` lines."""
    out = stream if stream is not None else io.StringIO()
    for g in strengths:
        out.write(f"{g.group_index},{g.effective_count},{int(g.failed)}\n")
    if stream is None:
        return out.getvalue()
    return None


def load_strengths(stream):
    """Parse the line format written by serialize_strengths."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    strengths = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        idx, eff, failed = int(parts[0]), int(parts[1]), int(parts[2])
        strengths.append(GroupStrength(idx, eff, bool(failed)))
    return strengths
