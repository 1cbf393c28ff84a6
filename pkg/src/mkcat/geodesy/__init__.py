"""Geodesics, nets and surfaces inside metric 2-complexes."""
from .paths import (
    ComplexPath,
    DisconnectedError,
    GeodesyError,
    NonConvergenceError,
    PathPoint,
    path_through,
    point_vector,
    same_point,
    transfer,
    vertex_point,
)
from .straighten import (
    GeodesicSearch,
    distance,
    geodesic_candidates,
    hausdorff,
    shortest_geodesic,
    straighten_path,
    tighten_closed,
)
from .surfaces import (
    GaussBonnetTerms,
    HMapInvariantError,
    HMapSurface,
    SingularSurface,
    gauss_bonnet_audit,
    gauss_bonnet_terms,
    h_area_bound_check,
    polygon_area_slack,
)
from .nets import AlphaNet, HMapRealization, build_alpha_net, point_key, realize_h_map
