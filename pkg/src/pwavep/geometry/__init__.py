from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.graph import (
    KnnGraph,
    LaplacianPair,
    build_knn_graph,
    build_laplacians,
    graph_from_adjacency,
    require_connected,
)
from pwavep.geometry.io import load_cloud, save_cloud

__all__ = [
    "PointCloud",
    "KnnGraph",
    "LaplacianPair",
    "build_knn_graph",
    "build_laplacians",
    "graph_from_adjacency",
    "require_connected",
    "load_cloud",
    "save_cloud",
]
