from .complex import SampledSpace, Subcomplex, subdivide, refine_subcomplex, \
    dist_to, distances_to, urysohn, point_distances
