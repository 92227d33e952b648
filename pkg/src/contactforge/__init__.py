"""contactforge: text-conditioned hand-object contact generation and grasp refinement."""

__version__ = "0.1.0"
