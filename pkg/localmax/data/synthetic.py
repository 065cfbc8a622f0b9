from __future__ import annotations

import dataclasses
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from localmax.data.dataset import Dataset
from localmax.utils.classes import FloatArray
from localmax.utils.constants import (
    GMM_DEFAULT_GRID,
    GMM_DEFAULT_SAMPLES,
    GMM_DEFAULT_SIGMA,
    MAX_REJECTION_RATE,
    MIN_REJECTION_PROPOSALS,
)
from localmax.utils.exceptions import LocalMaxConfigurationException, LocalMaxInfeasibleSamplingException


@dataclasses.dataclass
class GmmConfig:
    """
    A grid mixture: one isotropic gaussian at every point of grid x grid (x grid... for dim > 2).
    """

    grid: List[float] = dataclasses.field(default_factory=lambda: list(GMM_DEFAULT_GRID))
    sigma: float = GMM_DEFAULT_SIGMA
    n: int = GMM_DEFAULT_SAMPLES
    seed: int = 0
    dim: int = 2

    def __post_init__(self) -> None:
        if not self.grid:
            raise LocalMaxConfigurationException('The gmm grid must be nonempty.')
        if self.sigma <= 0:
            raise LocalMaxConfigurationException(f'The gmm sigma must be positive, not {self.sigma}.')
        if self.n < 1 or self.dim < 1:
            raise LocalMaxConfigurationException('The gmm sample count and dimension must be positive.')

    def centers(self) -> FloatArray:
        """
        @return: the len(grid)**dim centers, first coordinate slowest
        """
        return np.asarray(list(product(self.grid, repeat=self.dim)), dtype=np.float64)

    def to_json(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def sample_gmm(cfg: GmmConfig, n: Optional[int] = None, seed: Optional[int] = None) -> Dataset:
    """
    sample the grid mixture: a uniformly chosen center plus N(0, sigma^2 I) noise per sample.
    @param cfg: the mixture
    @param n: number of samples (cfg.n by default)
    @param seed: the sampling seed (cfg.seed by default)
    @return: the dataset; labels hold each sample's component index
    """
    n = cfg.n if n is None else n
    seed = cfg.seed if seed is None else seed
    if n < 1:
        raise LocalMaxConfigurationException(f'Must sample at least one point, not {n}.')

    rng = np.random.default_rng(seed)
    centers = cfg.centers()
    components = rng.integers(0, len(centers), size=n)
    points = centers[components] + cfg.sigma * rng.standard_normal((n, cfg.dim))
    return Dataset(points, labels=components.astype(np.int64), feature_names=[f'x{i + 1}' for i in range(cfg.dim)])


def _as_bounds(bounds: Sequence[Tuple[float, float]]) -> Tuple[FloatArray, FloatArray]:
    low = np.asarray([lo for lo, _ in bounds], dtype=np.float64)
    high = np.asarray([hi for _, hi in bounds], dtype=np.float64)
    if np.any(high <= low):
        raise LocalMaxConfigurationException(f'Bad sampling bounds {list(bounds)}: every low must be below its high.')
    return low, high


def sample_uniform_background(
    bounds: Sequence[Tuple[float, float]],
    n: int,
    min_dist_from_centers: float,
    seed: int,
    *,
    centers: Optional[FloatArray] = None,
) -> FloatArray:
    """
    rejection-sample uniform points in the box that are at least min_dist_from_centers from every center.
    @param bounds: (low, high) per dimension; must contain all centers
    @param n: the number of points to return
    @param min_dist_from_centers: the minimal euclidean distance to every center (0 for plain uniform sampling)
    @param seed: the sampling seed
    @param centers: the mixture centers (the default gmm grid centers if None)
    @return: n x d matrix
    """
    low, high = _as_bounds(bounds)
    if centers is None:
        centers = GmmConfig(dim=len(bounds)).centers()
    if centers.shape[1] != len(low):
        raise LocalMaxConfigurationException(f'{len(low)}-d bounds for {centers.shape[1]}-d centers.')
    if np.any(centers < low) or np.any(centers > high):
        raise LocalMaxConfigurationException('The sampling bounds must contain all the centers.')
    if n < 1 or min_dist_from_centers < 0:
        raise LocalMaxConfigurationException('Bad background sampling request (n < 1 or negative distance).')

    rng = np.random.default_rng(seed)
    accepted: List[FloatArray] = []
    accepted_count, proposed_count = 0, 0
    batch_size = max(1024, 2 * n)
    while accepted_count < n:
        proposals = rng.uniform(low, high, size=(batch_size, len(low)))
        distances = np.linalg.norm(proposals[:, None, :] - centers[None, :, :], axis=2)
        keep = proposals[np.all(distances >= min_dist_from_centers, axis=1)]
        accepted.append(keep)
        accepted_count += len(keep)
        proposed_count += batch_size
        if proposed_count >= MIN_REJECTION_PROPOSALS and 1 - accepted_count / proposed_count > MAX_REJECTION_RATE:
            raise LocalMaxInfeasibleSamplingException(
                f'Background sampling rejects {1 - accepted_count / proposed_count:.4%} of the proposals '
                f'(min distance {min_dist_from_centers} from {len(centers)} centers).'
            )
    return np.concatenate(accepted)[:n]


def sample_point_set_1d(
    m: int, seed: int, *, low: float = -5.0, high: float = 5.0, min_gap: float = 0.05
) -> FloatArray:
    """
    @return: m sorted reals in [low, high] with consecutive gaps of at least min_gap
    """
    if m < 1 or min_gap * (m - 1) >= high - low:
        raise LocalMaxConfigurationException(f"Can't place {m} points with gap {min_gap} in [{low}, {high}].")
    rng = np.random.default_rng(seed)
    slack = (high - low) - min_gap * (m - 1)
    offsets = np.sort(rng.uniform(0.0, slack, size=m))
    return low + offsets + min_gap * np.arange(m)


def gmm_manifest(cfg: GmmConfig, n: int, seed: int) -> Dict[str, Any]:
    return {'generator': 'gmm', 'config': cfg.to_json(), 'n': n, 'seed': seed}
