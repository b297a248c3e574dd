"""
Algorithms: warp, typesetter (alignment + training), filter, analysis,
synthetic corpus.
"""
