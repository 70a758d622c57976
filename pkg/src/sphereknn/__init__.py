"""Unbounded k-nearest-neighbor search by iterative sphere expansion over a BVH.

Every data point carries a sphere of a shared radius; a query point's
neighbors within that radius are the spheres containing it. The search
starts from a sampled small radius and doubles it for the queries that have
not yet found k neighbors, refitting the BVH in place between rounds.
Intersection tests are counted in software.
"""

from .bvh import Bvh, TraversalCounters, build
from .data import DataError, PointSet, gen_clustered, gen_uniform, load_csv
from .geometry import Aabb, Point3, QueryRay, Sphere
from .heap import NeighborHeap
from .search import (
    DegenerateDatasetError,
    KnnResult,
    SearchAborted,
    SearchConfig,
    SearchRound,
    baseline_fixed_radius,
    fixed_radius_knns,
    sample_start_radius,
    true_knn,
    true_knn_bounded,
)

__version__ = "0.1.0"
